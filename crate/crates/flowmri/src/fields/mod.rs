//! Structured grids and scalar/complex fields on the model domain `M` and
//! image domain `I`, signed-distance geometry, and the model-to-image
//! projection with its exact discrete adjoint.

mod pff;
mod project;
mod sdf;

pub use pff::{read_complex_pff, read_scalar_pff, write_complex_pff, write_scalar_pff};
pub use project::Projector;
pub use sdf::{redistance, sdf_from_mask};

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Uniform rectangular grid of cell centers.
///
/// Index `(i1, i2)` maps to the flat offset `i2 * n1 + i1` (row-major,
/// `i1` fastest). Cell `(0, 0)` is centered at `origin`; the grid extent is
/// `n1*h1` by `n2*h2`, so cell centers tile the domain exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub origin: (f64, f64),
}

impl Grid {
    pub fn new(n1: usize, n2: usize, h1: f64, h2: f64, origin: (f64, f64)) -> Result<Self> {
        if n1 * n2 < 4 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 4 cells, got {}x{}",
                n1, n2
            )));
        }
        if !(h1 > 0.0 && h2 > 0.0) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        Ok(Grid { n1, n2, h1, h2, origin })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        debug_assert!(i1 < self.n1 && i2 < self.n2);
        i2 * self.n1 + i1
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n1, idx / self.n1)
    }

    /// Physical position of the cell center `(i1, i2)`.
    #[inline]
    pub fn pos(&self, i1: usize, i2: usize) -> (f64, f64) {
        (
            self.origin.0 + i1 as f64 * self.h1,
            self.origin.1 + i2 as f64 * self.h2,
        )
    }

    /// Cell area `h1*h2`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.h1 * self.h2
    }

    /// Largest spacing, the resolution scale used for bands and tolerances.
    #[inline]
    pub fn hmax(&self) -> f64 {
        self.h1.max(self.h2)
    }

    /// Domain measure `|M| = n1*h1 * n2*h2`.
    #[inline]
    pub fn measure(&self) -> f64 {
        self.n1 as f64 * self.h1 * self.n2 as f64 * self.h2
    }

    /// Rectangle covered by the grid cells: `[x_lo, x_hi] x [y_lo, y_hi]`.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.origin.0 - 0.5 * self.h1,
            self.origin.0 + (self.n1 as f64 - 0.5) * self.h1,
            self.origin.1 - 0.5 * self.h2,
            self.origin.1 + (self.n2 as f64 - 0.5) * self.h2,
        )
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2
    }

    pub fn check_same_layout(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}: {}x{} vs {}x{}",
                what, self.n1, self.n2, other.n1, other.n2
            )))
        }
    }

    /// Bilinear interpolation of a nodal (cell-center) field at physical
    /// position `(x, y)`. Clamps to the grid interior.
    pub fn interp(&self, values: &[f64], x: f64, y: f64) -> f64 {
        let fx = ((x - self.origin.0) / self.h1).clamp(0.0, (self.n1 - 1) as f64);
        let fy = ((y - self.origin.1) / self.h2).clamp(0.0, (self.n2 - 1) as f64);
        let i = (fx.floor() as usize).min(self.n1 - 2);
        let j = (fy.floor() as usize).min(self.n2 - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = values[self.idx(i, j)];
        let v10 = values[self.idx(i + 1, j)];
        let v01 = values[self.idx(i, j + 1)];
        let v11 = values[self.idx(i + 1, j + 1)];
        v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }
}

/// Real-valued field, one value per grid cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field length {} does not match grid {}x{}",
                values.len(),
                grid.n1,
                grid.n2
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i2 in 0..grid.n2 {
            for i1 in 0..grid.n1 {
                let (x, y) = grid.pos(i1, i2);
                values.push(f(x, y));
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.idx(i1, i2)]
    }

    #[inline]
    pub fn at_mut(&mut self, i1: usize, i2: usize) -> &mut f64 {
        let k = self.grid.idx(i1, i2);
        &mut self.values[k]
    }

    /// Area-weighted L2 inner product over the grid.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        debug_assert!(self.grid.same_layout(&other.grid));
        let a = self.grid.cell_area();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * a
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        debug_assert!(self.grid.same_layout(&other.grid));
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        debug_assert!(self.grid.same_layout(&other.grid));
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Central-difference gradient, one-sided at the domain boundary.
    pub fn gradient_at(&self, i1: usize, i2: usize) -> (f64, f64) {
        let g = &self.grid;
        let gx = if i1 == 0 {
            (self.at(1, i2) - self.at(0, i2)) / g.h1
        } else if i1 == g.n1 - 1 {
            (self.at(i1, i2) - self.at(i1 - 1, i2)) / g.h1
        } else {
            (self.at(i1 + 1, i2) - self.at(i1 - 1, i2)) / (2.0 * g.h1)
        };
        let gy = if i2 == 0 {
            (self.at(i1, 1) - self.at(i1, 0)) / g.h2
        } else if i2 == g.n2 - 1 {
            (self.at(i1, i2) - self.at(i1, i2 - 1)) / g.h2
        } else {
            (self.at(i1, i2 + 1) - self.at(i1, i2 - 1)) / (2.0 * g.h2)
        };
        (gx, gy)
    }
}

/// Complex-valued image `w = rho * exp(i phi)`, one value per grid cell.
#[derive(Debug, Clone)]
pub struct ComplexImage {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput("complex image length mismatch".into()));
        }
        Ok(ComplexImage { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        ComplexImage { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Assemble from magnitude and phase fields.
    pub fn from_polar(rho: &ScalarField, phi: &ScalarField) -> Result<Self> {
        rho.grid.check_same_layout(&phi.grid, "from_polar")?;
        let values = rho
            .values
            .iter()
            .zip(&phi.values)
            .map(|(&r, &p)| Complex64::from_polar(r, p))
            .collect();
        Ok(ComplexImage { grid: rho.grid.clone(), values })
    }

    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm()).collect(),
        }
    }

    pub fn phase(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.arg()).collect(),
        }
    }
}

/// Level-set field `phi` identifying the flow domain: negative inside,
/// positive outside, zero on the boundary, `|grad phi| = 1` near the
/// interface after redistancing.
#[derive(Debug, Clone)]
pub struct SignedDistanceField {
    pub base: ScalarField,
}

impl SignedDistanceField {
    pub fn new(base: ScalarField) -> Self {
        SignedDistanceField { base }
    }

    pub fn grid(&self) -> &Grid {
        &self.base.grid
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.base.at(i1, i2)
    }

    /// True if the zero level set crosses the grid (sign change between
    /// 4-neighbors somewhere).
    pub fn has_interface(&self) -> bool {
        let g = &self.base.grid;
        for i2 in 0..g.n2 {
            for i1 in 0..g.n1 {
                let v = self.at(i1, i2);
                if i1 + 1 < g.n1 && (v < 0.0) != (self.at(i1 + 1, i2) < 0.0) {
                    return true;
                }
                if i2 + 1 < g.n2 && (v < 0.0) != (self.at(i1, i2 + 1) < 0.0) {
                    return true;
                }
            }
        }
        false
    }

    /// Checks `|grad phi|` is within `tol` of 1 on the band `|phi| < width`.
    /// Returns the worst deviation found.
    pub fn eikonal_deviation(&self, width: f64) -> f64 {
        let g = &self.base.grid;
        let mut worst: f64 = 0.0;
        for i2 in 1..g.n2.saturating_sub(1) {
            for i1 in 1..g.n1.saturating_sub(1) {
                if self.at(i1, i2).abs() < width {
                    let (gx, gy) = self.base.gradient_at(i1, i2);
                    let mag = (gx * gx + gy * gy).sqrt();
                    worst = worst.max((mag - 1.0).abs());
                }
            }
        }
        worst
    }

    /// Unit outward normal from the level set gradient.
    pub fn normal_at(&self, i1: usize, i2: usize) -> (f64, f64) {
        let (gx, gy) = self.base.gradient_at(i1, i2);
        let mag = (gx * gx + gy * gy).sqrt().max(1e-300);
        (gx / mag, gy / mag)
    }

    /// Measure of the interior region, counted over whole cells.
    pub fn interior_area(&self) -> f64 {
        let a = self.base.grid.cell_area();
        self.base.values.iter().filter(|&&v| v < 0.0).count() as f64 * a
    }
}

/// Sides of the rectangular model boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Unit outward normal of this side of the model domain.
    pub fn outward_normal(self) -> (f64, f64) {
        match self {
            Side::Left => (-1.0, 0.0),
            Side::Right => (1.0, 0.0),
            Side::Bottom => (0.0, -1.0),
            Side::Top => (0.0, 1.0),
        }
    }
}

/// Geometry bundle: level set plus designated inlet/outlet sides of the
/// model boundary. Normals and tangents along the wall come from the level
/// set gradient; the tangent is the normal rotated by +90 degrees.
#[derive(Debug, Clone)]
pub struct GeometrySpec {
    pub sdf: SignedDistanceField,
    pub inlet_edge: Side,
    pub outlet_edge: Side,
}

impl GeometrySpec {
    pub fn new(sdf: SignedDistanceField, inlet_edge: Side, outlet_edge: Side) -> Result<Self> {
        if inlet_edge == outlet_edge {
            return Err(Error::GeometryInvalid(
                "inlet and outlet edges must be disjoint".into(),
            ));
        }
        let spec = GeometrySpec { sdf, inlet_edge, outlet_edge };
        spec.validate()?;
        Ok(spec)
    }

    /// The wall must not run along the non-designated sides of the model
    /// boundary: no fluid cells on those edges away from inlet/outlet.
    fn validate(&self) -> Result<()> {
        let g = self.sdf.grid().clone();
        for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
            if side == self.inlet_edge || side == self.outlet_edge {
                continue;
            }
            let fluid_on_edge = match side {
                Side::Left => (0..g.n2).any(|j| self.sdf.at(0, j) < 0.0),
                Side::Right => (0..g.n2).any(|j| self.sdf.at(g.n1 - 1, j) < 0.0),
                Side::Bottom => (0..g.n1).any(|i| self.sdf.at(i, 0) < 0.0),
                Side::Top => (0..g.n1).any(|i| self.sdf.at(i, g.n2 - 1) < 0.0),
            };
            if fluid_on_edge {
                return Err(Error::GeometryInvalid(format!(
                    "fluid region touches undesignated edge {:?}",
                    side
                )));
            }
        }
        Ok(())
    }

    pub fn normal_at(&self, i1: usize, i2: usize) -> (f64, f64) {
        self.sdf.normal_at(i1, i2)
    }

    pub fn tangent_at(&self, i1: usize, i2: usize) -> (f64, f64) {
        let (nx, ny) = self.sdf.normal_at(i1, i2);
        (-ny, nx)
    }
}

/// Modified Heaviside: 1 for negative arguments (inside the domain), 0
/// otherwise, with the zero level set itself counted as outside.
#[inline]
pub fn heaviside(t: f64) -> f64 {
    if t < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Cells within `width` of the interface, with surface-measure weights.
///
/// The weight of cell `c` is `delta_eps(phi_c) * |grad phi|_c * cell_area`
/// with a cosine-smoothed delta of half-width `eps = width`, so that the
/// weights sum to the interface length.
#[derive(Debug, Clone)]
pub struct BoundaryBand {
    /// Flat cell indices in the band.
    pub cells: Vec<usize>,
    /// Surface-measure weight per band cell.
    pub weights: Vec<f64>,
    /// Half-width used for the smoothed delta.
    pub width: f64,
}

impl BoundaryBand {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Smoothed Dirac delta of half-width `eps` (cosine window, unit mass).
#[inline]
pub fn smoothed_delta(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        0.0
    } else {
        (1.0 + (std::f64::consts::PI * t / eps).cos()) / (2.0 * eps)
    }
}

/// Derivative of [`smoothed_delta`] with respect to `t`.
#[inline]
pub fn smoothed_delta_deriv(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        0.0
    } else {
        let pi = std::f64::consts::PI;
        -(pi / eps) * (pi * t / eps).sin() / (2.0 * eps)
    }
}

/// Extract the boundary band of the zero level set.
pub fn boundary_band(sdf: &SignedDistanceField, width: f64) -> Result<BoundaryBand> {
    let g = sdf.grid();
    if width < g.hmax() {
        return Err(Error::InvalidInput(format!(
            "band width {} below grid resolution {}",
            width,
            g.hmax()
        )));
    }
    if !sdf.has_interface() {
        return Err(Error::NoInterface);
    }
    let area = g.cell_area();
    let mut cells = Vec::new();
    let mut weights = Vec::new();
    for i2 in 0..g.n2 {
        for i1 in 0..g.n1 {
            let phi = sdf.at(i1, i2);
            if phi.abs() < width {
                let (gx, gy) = sdf.base.gradient_at(i1, i2);
                let mag = (gx * gx + gy * gy).sqrt();
                cells.push(g.idx(i1, i2));
                weights.push(smoothed_delta(phi, width) * mag * area);
            }
        }
    }
    Ok(BoundaryBand { cells, weights, width })
}
