//! Model-to-image projection: conservative area-weighted averaging of
//! model cells into image pixels, with the exact discrete adjoint under
//! cell-area-weighted inner products.

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

/// Precomputed sparse overlap map between an M-grid and an I-grid.
#[derive(Debug, Clone)]
pub struct Projector {
    pub m_grid: Grid,
    pub i_grid: Grid,
    /// For each image pixel: list of (model cell index, overlap/pixel-area).
    rows: Vec<Vec<(usize, f64)>>,
}

impl Projector {
    /// Requires the image extent to lie inside the model extent.
    pub fn new(m_grid: &Grid, i_grid: &Grid) -> Result<Self> {
        let (mx0, mx1, my0, my1) = m_grid.extent();
        let (ix0, ix1, iy0, iy1) = i_grid.extent();
        let tol = 1e-9 * m_grid.hmax();
        if ix0 < mx0 - tol || ix1 > mx1 + tol || iy0 < my0 - tol || iy1 > my1 + tol {
            return Err(Error::GridMismatch(format!(
                "image extent [{:.6},{:.6}]x[{:.6},{:.6}] exceeds model extent [{:.6},{:.6}]x[{:.6},{:.6}]",
                ix0, ix1, iy0, iy1, mx0, mx1, my0, my1
            )));
        }
        let pixel_area = i_grid.cell_area();
        let mut rows = Vec::with_capacity(i_grid.len());
        for p2 in 0..i_grid.n2 {
            for p1 in 0..i_grid.n1 {
                let (px, py) = i_grid.pos(p1, p2);
                let (px0, px1) = (px - 0.5 * i_grid.h1, px + 0.5 * i_grid.h1);
                let (py0, py1) = (py - 0.5 * i_grid.h2, py + 0.5 * i_grid.h2);
                // candidate model cells by index range
                let c1_lo = (((px0 - mx0) / m_grid.h1).floor().max(0.0)) as usize;
                let c1_hi =
                    ((((px1 - mx0) / m_grid.h1).ceil()) as usize).min(m_grid.n1);
                let c2_lo = (((py0 - my0) / m_grid.h2).floor().max(0.0)) as usize;
                let c2_hi =
                    ((((py1 - my0) / m_grid.h2).ceil()) as usize).min(m_grid.n2);
                let mut row = Vec::new();
                for c2 in c2_lo..c2_hi {
                    for c1 in c1_lo..c1_hi {
                        let (cx, cy) = m_grid.pos(c1, c2);
                        let ox = (px1.min(cx + 0.5 * m_grid.h1)
                            - px0.max(cx - 0.5 * m_grid.h1))
                        .max(0.0);
                        let oy = (py1.min(cy + 0.5 * m_grid.h2)
                            - py0.max(cy - 0.5 * m_grid.h2))
                        .max(0.0);
                        let w = ox * oy / pixel_area;
                        if w > 1e-14 {
                            row.push((m_grid.idx(c1, c2), w));
                        }
                    }
                }
                rows.push(row);
            }
        }
        Ok(Projector { m_grid: m_grid.clone(), i_grid: i_grid.clone(), rows })
    }

    /// Identity projector for coincident grids.
    pub fn identity(grid: &Grid) -> Self {
        Projector::new(grid, grid).expect("identity projector")
    }

    /// `S f`: average model cells into image pixels.
    pub fn project(&self, f: &ScalarField) -> Result<ScalarField> {
        f.grid.check_same_layout(&self.m_grid, "project input")?;
        let mut out = vec![0.0; self.i_grid.len()];
        for (p, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(c, w) in row {
                acc += w * f.values[c];
            }
            out[p] = acc;
        }
        Ok(ScalarField { grid: self.i_grid.clone(), values: out })
    }

    /// `S^T g`: exact adjoint of [`project`](Self::project) with respect to
    /// the area-weighted inner products on both grids.
    pub fn adjoint(&self, g: &ScalarField) -> Result<ScalarField> {
        g.grid.check_same_layout(&self.i_grid, "adjoint input")?;
        let scale = self.i_grid.cell_area() / self.m_grid.cell_area();
        let mut out = vec![0.0; self.m_grid.len()];
        for (p, row) in self.rows.iter().enumerate() {
            let gp = g.values[p] * scale;
            for &(c, w) in row {
                out[c] += w * gp;
            }
        }
        Ok(ScalarField { grid: self.m_grid.clone(), values: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_field_projects_to_constant() {
        let m = Grid::new(16, 16, 0.5, 0.5, (0.25, 0.25)).unwrap();
        let i = Grid::new(4, 4, 2.0, 2.0, (1.0, 1.0)).unwrap();
        let s = Projector::new(&m, &i).unwrap();
        let f = ScalarField::constant(&m, 3.7);
        let g = s.project(&f).unwrap();
        for v in g.values {
            assert!((v - 3.7).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_grids_give_identity() {
        let g = Grid::new(6, 5, 0.3, 0.4, (0.15, 0.2)).unwrap();
        let s = Projector::new(&g, &g).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x * 2.0 + y);
        let pf = s.project(&f).unwrap();
        for (a, b) in f.values.iter().zip(&pf.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let af = s.adjoint(&f).unwrap();
        for (a, b) in f.values.iter().zip(&af.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_average() {
        // 2x2 M-cells per I-pixel with values {1,2,3,4} -> pixel value 2.5
        let m = Grid::new(4, 4, 1.0, 1.0, (0.5, 0.5)).unwrap();
        let i = Grid::new(2, 2, 2.0, 2.0, (1.0, 1.0)).unwrap();
        let s = Projector::new(&m, &i).unwrap();
        let mut f = ScalarField::zeros(&m);
        // lower-left pixel covers cells (0,0),(1,0),(0,1),(1,1)
        *f.at_mut(0, 0) = 1.0;
        *f.at_mut(1, 0) = 2.0;
        *f.at_mut(0, 1) = 3.0;
        *f.at_mut(1, 1) = 4.0;
        let g = s.project(&f).unwrap();
        assert!((g.at(0, 0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn randomized_adjoint_identity() {
        // oracle: dense-matrix transpose on an 8x8 -> 4x4 configuration
        let m = Grid::new(8, 8, 0.25, 0.25, (0.125, 0.125)).unwrap();
        let i = Grid::new(4, 4, 0.5, 0.5, (0.25, 0.25)).unwrap();
        let s = Projector::new(&m, &i).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = ScalarField {
                grid: m.clone(),
                values: (0..m.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let g = ScalarField {
                grid: i.clone(),
                values: (0..i.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let lhs = s.project(&f).unwrap().inner(&g);
            let rhs = f.inner(&s.adjoint(&g).unwrap());
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            assert!(
                ((lhs - rhs) / scale).abs() < 1e-12,
                "adjoint identity violated: {} vs {}",
                lhs,
                rhs
            );
        }
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let m = Grid::new(8, 8, 0.25, 0.25, (0.125, 0.125)).unwrap();
        let i = Grid::new(4, 4, 0.5, 0.5, (0.25, 0.25)).unwrap();
        let s = Projector::new(&m, &i).unwrap();
        let z = ScalarField::zeros(&i);
        let out = s.adjoint(&z).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn image_beyond_model_is_rejected() {
        let m = Grid::new(4, 4, 1.0, 1.0, (0.5, 0.5)).unwrap();
        let i = Grid::new(4, 4, 1.5, 1.5, (0.75, 0.75)).unwrap();
        assert!(Projector::new(&m, &i).is_err());
    }
}
