//! Steady incompressible flow on the immersed geometry: forward
//! Navier-Stokes solves through Picard (successive Oseen) iteration, the
//! Oseen linearization itself, and the discrete adjoint solver built on the
//! exact transpose of the assembled Oseen matrix.

mod assembly;
pub mod cut;

pub use assembly::{apply_gi_coupling, assemble, AssembledOseen, CutElement, DofMap, EdgeNode};

use cut::{build_cut_geom, cut_element_form, surface_velocity_sq, CutCoeffs, Dual4};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, Side, SignedDistanceField};
use crate::linalg::BandLu;

/// Inlet or outlet boundary data: two velocity/traction components sampled
/// on the 1D chain of edge nodes.
#[derive(Debug, Clone)]
pub struct BoundaryVector {
    pub side: Side,
    pub comps: [Vec<f64>; 2],
}

impl BoundaryVector {
    pub fn zeros(grid: &Grid, side: Side) -> Self {
        let n = match side {
            Side::Left | Side::Right => grid.n2,
            Side::Bottom | Side::Top => grid.n1,
        };
        BoundaryVector { side, comps: [vec![0.0; n], vec![0.0; n]] }
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        BoundaryVector {
            side: self.side,
            comps: [
                self.comps[0].iter().map(|v| v * s).collect(),
                self.comps[1].iter().map(|v| v * s).collect(),
            ],
        }
    }
}

/// The unknowns of the inverse problem: geometry (level set), inlet
/// velocity, outlet traction, kinematic viscosity.
#[derive(Debug, Clone)]
pub struct NSParams {
    pub sdf: SignedDistanceField,
    pub inlet_edge: Side,
    pub outlet_edge: Side,
    pub g_i: BoundaryVector,
    pub g_o: BoundaryVector,
    pub nu: f64,
}

impl NSParams {
    pub fn validate(&self) -> Result<()> {
        if self.nu <= 0.0 {
            return Err(Error::InvalidInput("viscosity must be positive".into()));
        }
        if self.inlet_edge == self.outlet_edge {
            return Err(Error::GeometryInvalid("inlet equals outlet edge".into()));
        }
        if !self.sdf.has_interface() {
            return Err(Error::NoInterface);
        }
        Ok(())
    }
}

/// Solver controls. `nu_ref` scales the pressure stabilization and is held
/// fixed (at the prior viscosity) so the assembled matrix stays linear in
/// the unknown `nu`.
#[derive(Debug, Clone)]
pub struct DiscretizationConfig {
    pub eta: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub stab: f64,
    pub linsolve_tol: f64,
    pub band_factor: f64,
    pub active_factor: f64,
    pub nu_ref: f64,
    /// Weight of the fictitious extension outside the fluid.
    pub fictitious_scale: f64,
}

impl DiscretizationConfig {
    pub fn new(nu_ref: f64) -> Self {
        DiscretizationConfig {
            eta: 10.0,
            picard_tol: 1e-8,
            picard_max: 50,
            stab: 0.02,
            linsolve_tol: 1e-10,
            band_factor: 1.5,
            active_factor: 3.5,
            nu_ref,
            fictitious_scale: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta < 4.0 {
            return Err(Error::InvalidInput("Nitsche penalty eta must be >= 4".into()));
        }
        if self.picard_tol <= 0.0 || self.linsolve_tol <= 0.0 || self.nu_ref <= 0.0 {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Velocity/pressure solution. Public fields are masked to the flow domain
/// (zero where `phi >= 0`); `raw` keeps the unmasked solution vector for
/// assembly-exact adjoint and gradient products.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: [ScalarField; 2],
    pub p: ScalarField,
    pub raw: Vec<f64>,
}

/// Adjoint velocity/pressure (Lagrange multipliers of the weak form).
#[derive(Debug, Clone)]
pub struct AdjointState {
    pub v: [ScalarField; 2],
    pub q: ScalarField,
    pub raw: Vec<f64>,
}

fn split_state(dofs: &DofMap, sdf: &SignedDistanceField, z: &[f64], mask: bool) -> (ScalarField, ScalarField, ScalarField) {
    let grid = dofs.grid.clone();
    let mut ux = vec![0.0; grid.len()];
    let mut uy = vec![0.0; grid.len()];
    let mut p = vec![0.0; grid.len()];
    for node in 0..grid.len() {
        let inside = sdf.base.values[node] < 0.0;
        let keep = !mask || inside;
        if keep {
            ux[node] = z[dofs.dof(node, 0)];
            uy[node] = z[dofs.dof(node, 1)];
            p[node] = z[dofs.dof(node, 2)];
        }
    }
    (
        ScalarField { grid: grid.clone(), values: ux },
        ScalarField { grid: grid.clone(), values: uy },
        ScalarField { grid, values: p },
    )
}

impl FlowState {
    fn from_vec(dofs: &DofMap, sdf: &SignedDistanceField, z: Vec<f64>) -> Self {
        let (ux, uy, p) = split_state(dofs, sdf, &z, true);
        FlowState { u: [ux, uy], p, raw: z }
    }

    /// Unmasked velocity fields (including the fictitious shell), used as
    /// the Oseen linearization point.
    pub fn raw_velocity(&self, dofs: &DofMap) -> [ScalarField; 2] {
        let grid = dofs.grid.clone();
        let mut ux = vec![0.0; grid.len()];
        let mut uy = vec![0.0; grid.len()];
        for node in 0..grid.len() {
            ux[node] = self.raw[dofs.dof(node, 0)];
            uy[node] = self.raw[dofs.dof(node, 1)];
        }
        [
            ScalarField { grid: grid.clone(), values: ux },
            ScalarField { grid, values: uy },
        ]
    }
}

impl AdjointState {
    fn from_vec(dofs: &DofMap, sdf: &SignedDistanceField, z: Vec<f64>) -> Self {
        let (vx, vy, q) = split_state(dofs, sdf, &z, false);
        AdjointState { v: [vx, vy], q, raw: z }
    }
}

fn factorize(sys: &AssembledOseen) -> Result<BandLu> {
    sys.a.factorize()
}

/// One linear Oseen solve with convection linearized around `u_lin`.
pub fn solve_oseen(
    x: &NSParams,
    u_lin: &[ScalarField; 2],
    cfg: &DiscretizationConfig,
) -> Result<FlowState> {
    x.validate()?;
    cfg.validate()?;
    let sys = assemble(x, Some(u_lin), cfg)?;
    let lu = factorize(&sys)?;
    let z = lu.solve(&sys.b);
    Ok(FlowState::from_vec(&sys.dofs, &x.sdf, z))
}

/// Steady Navier-Stokes solve: Stokes initial guess, then Picard
/// (successive Oseen) iterations until the relative velocity update drops
/// below `picard_tol`.
pub fn solve_ns(x: &NSParams, cfg: &DiscretizationConfig) -> Result<FlowState> {
    x.validate()?;
    cfg.validate()?;
    let stokes_sys = assemble(x, None, cfg)?;
    let lu = factorize(&stokes_sys)?;
    let mut z = lu.solve(&stokes_sys.b);
    let dofs = DofMap::new(x.sdf.grid());
    for _ in 0..cfg.picard_max {
        let state = FlowState::from_vec(&dofs, &x.sdf, z.clone());
        let sys = assemble(x, Some(&state.u), cfg)?;
        let lu = factorize(&sys)?;
        let z_next = lu.solve(&sys.b);
        let scale = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let diff = z
            .iter()
            .zip(&z_next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        z = z_next;
        if diff / scale < cfg.picard_tol {
            return Ok(FlowState::from_vec(&dofs, &x.sdf, z));
        }
    }
    Err(Error::NonConvergence(format!(
        "Picard stalled after {} iterations",
        cfg.picard_max
    )))
}

/// Discrete adjoint solve: the transpose of the Oseen matrix assembled at
/// the solved flow, with right-hand side paired against the given source
/// field (the negative velocity gradient of the data term).
pub fn solve_adjoint(
    x: &NSParams,
    flow: &FlowState,
    source: &[ScalarField; 2],
    cfg: &DiscretizationConfig,
) -> Result<AdjointState> {
    let sys = assemble(x, Some(&flow.u), cfg)?;
    solve_adjoint_assembled(&sys, &x.sdf, source)
}

/// Adjoint solve reusing an already assembled system.
pub fn solve_adjoint_assembled(
    sys: &AssembledOseen,
    sdf: &SignedDistanceField,
    source: &[ScalarField; 2],
) -> Result<AdjointState> {
    let grid = &sys.dofs.grid;
    let area = grid.cell_area();
    let mut rhs = vec![0.0; sys.dofs.n_dofs()];
    for node in 0..grid.len() {
        rhs[sys.dofs.dof(node, 0)] = source[0].values[node] * area;
        rhs[sys.dofs.dof(node, 1)] = source[1].values[node] * area;
    }
    let lu_t = sys.a.transposed().factorize()?;
    let lam = lu_t.solve(&rhs);
    Ok(AdjointState::from_vec(&sys.dofs, sdf, lam))
}

/// Volume flux of the discrete solution through a designated edge,
/// positive outward.
pub fn edge_flux(flow: &FlowState, x: &NSParams, side: Side) -> f64 {
    let grid = flow.u[0].grid.clone();
    let (nx, ny) = side.outward_normal();
    let w = match side {
        Side::Left | Side::Right => grid.h2,
        Side::Bottom | Side::Top => grid.h1,
    };
    let mut flux = 0.0;
    let nodes: Vec<usize> = match side {
        Side::Left => (0..grid.n2).map(|j| grid.idx(0, j)).collect(),
        Side::Right => (0..grid.n2).map(|j| grid.idx(grid.n1 - 1, j)).collect(),
        Side::Bottom => (0..grid.n1).map(|i| grid.idx(i, 0)).collect(),
        Side::Top => (0..grid.n1).map(|i| grid.idx(i, grid.n2 - 1)).collect(),
    };
    for node in nodes {
        if x.sdf.base.values[node] < 0.0 {
            flux += w * (flow.u[0].values[node] * nx + flow.u[1].values[node] * ny);
        }
    }
    flux
}

/// The adjoint-weighted derivative of the assembled system with respect to
/// the nodal level-set values: the field `lambda^T d(A z - b)/d(phi)`.
///
/// Only the cut elements depend on the level set (through the clipped
/// quadrature, the wall segment, and its normal); each element form is
/// re-evaluated in forward-mode duals seeded on its four corners, so the
/// result is the exact derivative of the assembled product.
pub fn shape_band_derivative(
    sys: &AssembledOseen,
    z: &[f64],
    lambda: &[f64],
    cfg: &DiscretizationConfig,
) -> ScalarField {
    let grid = sys.dofs.grid.clone();
    let stab_coef = cfg.stab * (grid.h1 * grid.h1 + grid.h2 * grid.h2) / 2.0 / cfg.nu_ref;
    let mut out = vec![0.0; grid.len()];
    let wfl = 1.0 - cfg.fictitious_scale;
    for ce in &sys.cut_elements {
        let seeds = [
            Dual4::seed(ce.phis[0], 0),
            Dual4::seed(ce.phis[1], 1),
            Dual4::seed(ce.phis[2], 2),
            Dual4::seed(ce.phis[3], 3),
        ];
        let geom = build_cut_geom(&seeds, grid.h1, grid.h2);
        let co = CutCoeffs {
            h1: grid.h1,
            h2: grid.h2,
            nu: sys.nu,
            eta_over_h: sys.eta_over_h,
            stab_coef,
            ulin: &ce.ulin,
        };
        let mut zl = [0.0; 12];
        let mut ll = [0.0; 12];
        for (i, &node) in ce.nodes.iter().enumerate() {
            for c in 0..3 {
                zl[3 * i + c] = z[sys.dofs.dof(node, c)];
                ll[3 * i + c] = lambda[sys.dofs.dof(node, c)];
            }
        }
        let (fv, fs) = cut_element_form(&geom, &co, &zl, &ll);
        for (i, &node) in ce.nodes.iter().enumerate() {
            out[node] += wfl * fv.d[i] + fs.d[i];
        }
    }
    ScalarField { grid, values: out }
}

/// RMS of the velocity trace on the embedded wall, a direct measure of
/// how tightly the Nitsche terms enforce the no-slip condition.
pub fn wall_trace_rms(sys: &AssembledOseen, z: &[f64]) -> f64 {
    let grid = &sys.dofs.grid;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for ce in &sys.cut_elements {
        let geom = build_cut_geom(&ce.phis, grid.h1, grid.h2);
        let mut zl = [0.0; 12];
        for (i, &node) in ce.nodes.iter().enumerate() {
            for c in 0..3 {
                zl[3 * i + c] = z[sys.dofs.dof(node, c)];
            }
        }
        let (a, w) = surface_velocity_sq(&geom, &zl);
        acc += a;
        wsum += w;
    }
    if wsum > 0.0 {
        (acc / wsum).sqrt()
    } else {
        0.0
    }
}

/// `lambda^T (dA/dnu z - db/dnu)`: the viscosity sensitivity of the
/// assembled system, including the Nitsche boundary terms.
pub fn nu_derivative(sys: &AssembledOseen, z: &[f64], lambda: &[f64]) -> f64 {
    let a_nu = sys.a_nu.to_csr();
    let az = a_nu.matvec(z);
    let mut acc = 0.0;
    for i in 0..az.len() {
        acc += lambda[i] * (az[i] - sys.b_nu[i]);
    }
    acc
}

/// `lambda^T d(A z - b)/d(g_i)` as a boundary vector: minus the transposed
/// inlet coupling applied to the adjoint, divided by the edge weight so the
/// result is a pointwise field on the edge.
pub fn gi_derivative(sys: &AssembledOseen, lambda: &[f64], side: Side) -> BoundaryVector {
    let grid = &sys.dofs.grid;
    let mut out = BoundaryVector::zeros(grid, side);
    for &(row, along, comp, coef) in &sys.gi_coupling {
        out.comps[comp][along] -= coef * lambda[row];
    }
    // convert the discrete pairing to a pointwise field on the edge
    let w = match side {
        Side::Left | Side::Right => grid.h2,
        Side::Bottom | Side::Top => grid.h1,
    };
    for comp in 0..2 {
        for v in out.comps[comp].iter_mut() {
            *v /= w;
        }
    }
    out
}

/// `lambda^T d(A z - b)/d(g_o)` as a pointwise field on the outlet edge:
/// the adjoint velocity trace itself.
pub fn go_derivative(sys: &AssembledOseen, lambda: &[f64], side: Side) -> BoundaryVector {
    let grid = &sys.dofs.grid;
    let mut out = BoundaryVector::zeros(grid, side);
    for en in &sys.outlet {
        for comp in 0..2 {
            // b has -w * g_o, so d(Az - b)/dg_o pairs +w * lambda_v
            out.comps[comp][en.along] = lambda[sys.dofs.dof(en.node, comp)];
        }
    }
    out
}
