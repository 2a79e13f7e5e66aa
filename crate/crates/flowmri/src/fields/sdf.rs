//! Signed distance construction and maintenance: fast sweeping on the
//! Godunov upwind discretization of `|grad d| = 1`, with sign taken from a
//! binary mask or an existing level set.

use super::{Grid, ScalarField, SignedDistanceField};
use crate::error::{Error, Result};

const FAR: f64 = f64::MAX / 4.0;

/// Godunov update for the eikonal equation at anisotropic spacing.
#[inline]
fn eikonal_update(a: f64, b: f64, h1: f64, h2: f64) -> f64 {
    // a: smallest neighbor along axis 1, b: along axis 2 (FAR if none)
    if a >= FAR && b >= FAR {
        return FAR;
    }
    if a >= FAR {
        return b + h2;
    }
    if b >= FAR {
        return a + h1;
    }
    // try the two-sided solution of ((x-a)/h1)^2 + ((x-b)/h2)^2 = 1
    let (w1, w2) = (1.0 / (h1 * h1), 1.0 / (h2 * h2));
    let s = w1 + w2;
    let m = (w1 * a + w2 * b) / s;
    let disc = m * m - (w1 * a * a + w2 * b * b - 1.0) / s;
    if disc >= 0.0 {
        let x = m + disc.sqrt();
        if x >= a && x >= b {
            return x;
        }
    }
    (a + h1).min(b + h2)
}

/// Four directional Gauss-Seidel sweeps, repeated until stationary.
fn fast_sweep(dist: &mut [f64], frozen: &[bool], grid: &Grid) {
    let (n1, n2) = (grid.n1, grid.n2);
    let (h1, h2) = (grid.h1, grid.h2);
    let sweep_orders: [(bool, bool); 4] =
        [(true, true), (false, true), (true, false), (false, false)];
    for _round in 0..8 {
        let mut changed = false;
        for &(fwd1, fwd2) in &sweep_orders {
            for jj in 0..n2 {
                let i2 = if fwd2 { jj } else { n2 - 1 - jj };
                for ii in 0..n1 {
                    let i1 = if fwd1 { ii } else { n1 - 1 - ii };
                    let k = grid.idx(i1, i2);
                    if frozen[k] {
                        continue;
                    }
                    let a = {
                        let l = if i1 > 0 { dist[grid.idx(i1 - 1, i2)] } else { FAR };
                        let r = if i1 + 1 < n1 { dist[grid.idx(i1 + 1, i2)] } else { FAR };
                        l.min(r)
                    };
                    let b = {
                        let d = if i2 > 0 { dist[grid.idx(i1, i2 - 1)] } else { FAR };
                        let u = if i2 + 1 < n2 { dist[grid.idx(i1, i2 + 1)] } else { FAR };
                        d.min(u)
                    };
                    let x = eikonal_update(a, b, h1, h2);
                    if x < dist[k] - 1e-14 {
                        dist[k] = x;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Builds a signed distance field from a binary mask (1 inside, 0 outside).
///
/// Adjacent cells of opposite membership place the interface midway between
/// their centers. Errors if the mask is constant.
pub fn sdf_from_mask(mask: &ScalarField) -> Result<SignedDistanceField> {
    let grid = mask.grid.clone();
    let inside: Vec<bool> = mask.values.iter().map(|&v| v > 0.5).collect();
    let n_in = inside.iter().filter(|&&b| b).count();
    if n_in == grid.len() {
        return Err(Error::AllInterior);
    }
    if n_in == 0 {
        return Err(Error::AllExterior);
    }

    // Indicator level set, +-h/2, then rounded by binomial smoothing so the
    // staircase corners do not leave gradient plateaus after redistancing.
    // Cell membership is clamped back to the mask afterwards.
    let a = 0.5 * grid.hmax();
    let mut phi: Vec<f64> = inside.iter().map(|&b| if b { -a } else { a }).collect();
    for _ in 0..4 {
        let mut next = phi.clone();
        for i2 in 0..grid.n2 {
            for i1 in 0..grid.n1 {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (di, dj, w) in [
                    (-1i64, -1i64, 1.0),
                    (0, -1, 2.0),
                    (1, -1, 1.0),
                    (-1, 0, 2.0),
                    (0, 0, 4.0),
                    (1, 0, 2.0),
                    (-1, 1, 1.0),
                    (0, 1, 2.0),
                    (1, 1, 1.0),
                ] {
                    let j1 = i1 as i64 + di;
                    let j2 = i2 as i64 + dj;
                    if j1 >= 0 && j1 < grid.n1 as i64 && j2 >= 0 && j2 < grid.n2 as i64 {
                        acc += w * phi[grid.idx(j1 as usize, j2 as usize)];
                        wsum += w;
                    }
                }
                next[grid.idx(i1, i2)] = acc / wsum;
            }
        }
        phi = next;
    }
    for (k, v) in phi.iter_mut().enumerate() {
        let want_neg = inside[k];
        if (*v < 0.0) != want_neg {
            *v = if want_neg { -0.02 * a } else { 0.02 * a };
        }
    }
    redistance(&SignedDistanceField::new(ScalarField { grid, values: phi }))
}

/// Rebuilds the signed distance property of an existing level set without
/// moving its zero crossings.
///
/// Cells adjacent to a sign change are re-initialized from the linear
/// interpolation of the crossing along each grid axis and frozen; the rest
/// is swept. Errors if the field has one sign everywhere.
pub fn redistance(sdf: &SignedDistanceField) -> Result<SignedDistanceField> {
    if !sdf.has_interface() {
        return Err(Error::NoInterface);
    }
    // The seed-and-sweep map below is a contraction near its fixed point;
    // iterating it makes redistancing idempotent: a second external call
    // starts converged and leaves the zero level set in place.
    let mut current = redistance_pass(sdf);
    for _ in 0..12 {
        let next = redistance_pass(&current);
        let drift = max_band_change(&current, &next);
        current = next;
        if drift < 1e-11 * current.grid().hmax() {
            break;
        }
    }
    Ok(current)
}

fn max_band_change(a: &SignedDistanceField, b: &SignedDistanceField) -> f64 {
    let band = 3.0 * a.grid().hmax();
    a.base
        .values
        .iter()
        .zip(&b.base.values)
        .filter(|(&va, _)| va.abs() < band)
        .map(|(&va, &vb)| (va - vb).abs())
        .fold(0.0, f64::max)
}

fn redistance_pass(sdf: &SignedDistanceField) -> SignedDistanceField {
    let grid = sdf.grid().clone();
    let phi = &sdf.base.values;

    let neg: Vec<bool> = phi.iter().map(|&v| v < 0.0).collect();
    let mut dist = vec![FAR; grid.len()];
    let mut frozen = vec![false; grid.len()];
    // Each cell square splits into two right triangles; the level set is
    // taken linear on each. Vertices of a mixed-sign triangle are seeded
    // with the distance to the zero line of that interpolant, which is
    // exact for straight interfaces of any orientation.
    let mut seed = |tri: [usize; 3], gx: f64, gy: f64, dist: &mut [f64], frozen: &mut [bool]| {
        let signs: Vec<bool> = tri.iter().map(|&k| neg[k]).collect();
        if signs.iter().all(|&s| s == signs[0]) {
            return;
        }
        let gmag = (gx * gx + gy * gy).sqrt().max(1e-300);
        for &k in &tri {
            let d = phi[k].abs() / gmag;
            if d < dist[k] {
                dist[k] = d;
            }
            frozen[k] = true;
        }
    };
    for i2 in 0..grid.n2 - 1 {
        for i1 in 0..grid.n1 - 1 {
            let k00 = grid.idx(i1, i2);
            let k10 = grid.idx(i1 + 1, i2);
            let k01 = grid.idx(i1, i2 + 1);
            let k11 = grid.idx(i1 + 1, i2 + 1);
            seed(
                [k00, k10, k01],
                (phi[k10] - phi[k00]) / grid.h1,
                (phi[k01] - phi[k00]) / grid.h2,
                &mut dist,
                &mut frozen,
            );
            seed(
                [k11, k01, k10],
                (phi[k11] - phi[k01]) / grid.h1,
                (phi[k11] - phi[k10]) / grid.h2,
                &mut dist,
                &mut frozen,
            );
        }
    }
    fast_sweep(&mut dist, &frozen, &grid);
    let values = dist
        .iter()
        .zip(&neg)
        .map(|(&d, &inb)| if inb { -d } else { d })
        .collect();
    SignedDistanceField::new(ScalarField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn unit_grid(n: usize) -> Grid {
        let h = 1.0 / n as f64;
        Grid::new(n, n, h, h, (0.5 * h, 0.5 * h)).unwrap()
    }

    /// Zero crossings of a field along grid lines, by linear interpolation.
    fn crossings(sdf: &SignedDistanceField) -> Vec<(f64, f64)> {
        let g = sdf.grid();
        let mut out = Vec::new();
        for i2 in 0..g.n2 {
            for i1 in 0..g.n1 {
                let v = sdf.at(i1, i2);
                if i1 + 1 < g.n1 {
                    let w = sdf.at(i1 + 1, i2);
                    if (v < 0.0) != (w < 0.0) {
                        let t = v / (v - w);
                        let (x, y) = g.pos(i1, i2);
                        out.push((x + t * g.h1, y));
                    }
                }
                if i2 + 1 < g.n2 {
                    let w = sdf.at(i1, i2 + 1);
                    if (v < 0.0) != (w < 0.0) {
                        let t = v / (v - w);
                        let (x, y) = g.pos(i1, i2);
                        out.push((x, y + t * g.h2));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn disk_mask_gives_distance_to_circle() {
        let n = 64;
        let grid = unit_grid(n);
        let h = grid.h1;
        let r = 0.3;
        let c = 0.5;
        let mask = ScalarField::from_fn(&grid, |x, y| {
            if ((x - c).powi(2) + (y - c).powi(2)).sqrt() < r {
                1.0
            } else {
                0.0
            }
        });
        let sdf = sdf_from_mask(&mask).unwrap();
        // oracle: exact point-to-circle distance, checked in the band
        let mut worst: f64 = 0.0;
        for i2 in 0..n {
            for i1 in 0..n {
                let (x, y) = grid.pos(i1, i2);
                let exact = ((x - c).powi(2) + (y - c).powi(2)).sqrt() - r;
                if exact.abs() < 5.0 * h {
                    worst = worst.max((sdf.at(i1, i2) - exact).abs());
                }
            }
        }
        assert!(worst <= 1.5 * h, "max band error {} vs 1.5h = {}", worst, 1.5 * h);
        assert!(sdf.eikonal_deviation(5.0 * h) < 0.1);
    }

    #[test]
    fn half_plane_mask_gives_plane_distance() {
        let n = 32;
        let grid = unit_grid(n);
        let h = grid.h1;
        // mask boundary exactly midway between cell rows: y < 0.5
        let mask =
            ScalarField::from_fn(&grid, |_, y| if y < 0.5 { 1.0 } else { 0.0 });
        let sdf = sdf_from_mask(&mask).unwrap();
        let mut worst: f64 = 0.0;
        for i2 in 0..n {
            for i1 in 0..n {
                let (_, y) = grid.pos(i1, i2);
                let exact = y - 0.5;
                worst = worst.max((sdf.at(i1, i2) - exact).abs());
            }
        }
        assert!(worst <= 0.5 * h, "max error {} vs h/2 = {}", worst, 0.5 * h);
    }

    #[test]
    fn constant_masks_are_rejected() {
        let grid = unit_grid(8);
        let ones = ScalarField::constant(&grid, 1.0);
        let zeros = ScalarField::constant(&grid, 0.0);
        assert!(matches!(sdf_from_mask(&ones), Err(Error::AllInterior)));
        assert!(matches!(sdf_from_mask(&zeros), Err(Error::AllExterior)));
    }

    #[test]
    fn redistance_is_a_fixed_point_on_valid_sdf() {
        let n = 48;
        let grid = unit_grid(n);
        // valid SDF of a horizontal slab: distance to nearer wall
        let sdf = SignedDistanceField::new(ScalarField::from_fn(&grid, |_, y| {
            (0.3 - y).max(y - 0.7)
        }));
        let rd = redistance(&sdf).unwrap();
        let c0 = crossings(&sdf);
        let c1 = crossings(&rd);
        assert_eq!(c0.len(), c1.len());
        let h = grid.h1;
        for (a, b) in c0.iter().zip(&c1) {
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            assert!(d < 1e-6 * h, "crossing moved {}", d);
        }
    }

    #[test]
    fn redistance_restores_scaled_sdf() {
        let n = 48;
        let grid = unit_grid(n);
        let h = grid.h1;
        let valid = SignedDistanceField::new(ScalarField::from_fn(&grid, |_, y| {
            (0.3 - y).max(y - 0.7)
        }));
        let scaled = SignedDistanceField::new(valid.base.scale(3.0));
        let rd = redistance(&scaled).unwrap();
        assert!(rd.eikonal_deviation(5.0 * h) < 0.1);
        // zero level set preserved within h/2
        let c0 = crossings(&valid);
        let c1 = crossings(&rd);
        for (a, b) in c0.iter().zip(&c1) {
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            assert!(d < 0.5 * h);
        }
    }

    #[test]
    fn redistance_twice_matches_once() {
        let n = 40;
        let grid = unit_grid(n);
        let h = grid.h1;
        // tilted straight interface under a nonlinear monotone distortion:
        // the first pass restores the distance property, the second must
        // then leave the zero level set in place
        let sdf = SignedDistanceField::new(ScalarField::from_fn(&grid, |x, y| {
            let d = 0.8 * (y - 0.55) + 0.6 * (x - 0.5);
            d * (1.5 + d * d)
        }));
        let once = redistance(&sdf).unwrap();
        let twice = redistance(&once).unwrap();
        let c1 = crossings(&once);
        let c2 = crossings(&twice);
        assert_eq!(c1.len(), c2.len());
        for (a, b) in c1.iter().zip(&c2) {
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            assert!(d < 1e-6 * h, "second redistance moved crossing by {}", d);
        }
    }

    #[test]
    fn redistance_requires_interface() {
        let grid = unit_grid(8);
        let sdf = SignedDistanceField::new(ScalarField::constant(&grid, 2.0));
        assert!(matches!(redistance(&sdf), Err(Error::NoInterface)));
    }
}
