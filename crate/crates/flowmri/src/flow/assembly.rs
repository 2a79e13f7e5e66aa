//! Discretization internals: equal-order bilinear velocity/pressure on the
//! cell-center nodes of the model grid, Brezzi-Pitkaranta pressure
//! stabilization, and weak Dirichlet conditions through a smeared-band
//! Nitsche treatment of the immersed wall and the inlet edge.

use super::cut::{build_cut_geom, cut_element_matrices, CutCoeffs};
use super::{BoundaryVector, DiscretizationConfig, NSParams};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, Side};
use crate::linalg::Triplets;

/// Degree-of-freedom layout: three unknowns per node `(ux, uy, p)`, nodes
/// permuted so the shorter grid dimension runs fastest (smallest bandwidth).
#[derive(Debug, Clone)]
pub struct DofMap {
    pub grid: Grid,
    transpose_order: bool,
}

impl DofMap {
    pub fn new(grid: &Grid) -> Self {
        DofMap { grid: grid.clone(), transpose_order: grid.n1 > grid.n2 }
    }

    #[inline]
    fn perm(&self, node: usize) -> usize {
        if self.transpose_order {
            let i1 = node % self.grid.n1;
            let i2 = node / self.grid.n1;
            i1 * self.grid.n2 + i2
        } else {
            node
        }
    }

    /// DOF index of velocity component `c` (0 or 1) or pressure (2).
    #[inline]
    pub fn dof(&self, node: usize, c: usize) -> usize {
        3 * self.perm(node) + c
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.grid.len()
    }
}

/// A wall element: cut by the zero level set, carrying clipped volume
/// quadrature and Nitsche terms on the embedded wall segment.
#[derive(Debug, Clone)]
pub struct CutElement {
    pub nodes: [usize; 4],
    pub phis: [f64; 4],
    pub ulin: [(f64, f64); 4],
}

/// Inlet-edge quadrature node.
#[derive(Debug, Clone)]
pub struct EdgeNode {
    pub node: usize,
    /// Index along the edge (0..edge length).
    pub along: usize,
    /// Edge measure per node.
    pub weight: f64,
    /// One-sided stencil for the normal derivative into the domain.
    pub stn: Vec<(usize, f64)>,
}

/// Everything the gradient machinery needs about one assembled Oseen
/// system: the matrix, right-hand side, their viscosity derivatives, the
/// inlet coupling, and the geometric band data.
pub struct AssembledOseen {
    pub dofs: DofMap,
    pub a: Triplets,
    pub b: Vec<f64>,
    /// d/dnu of the matrix entries (the nu-linear terms with nu = 1).
    pub a_nu: Triplets,
    pub b_nu: Vec<f64>,
    /// Inlet coupling: `b += sum_c coupling(c) * g_i(c)`; stored as
    /// (dof row, edge node, component, coefficient).
    pub gi_coupling: Vec<(usize, usize, usize, f64)>,
    pub cut_elements: Vec<CutElement>,
    pub inlet: Vec<EdgeNode>,
    pub outlet: Vec<EdgeNode>,
    pub active: Vec<bool>,
    pub nu: f64,
    pub eta_over_h: f64,
    pub eta_dimless: f64,
}

/// Central difference stencil for axis `axis` at node `(i1, i2)`, one-sided
/// at the grid edge.
pub fn diff_stencil(grid: &Grid, i1: usize, i2: usize, axis: usize) -> Vec<(usize, f64)> {
    let (n, h) = if axis == 0 { (grid.n1, grid.h1) } else { (grid.n2, grid.h2) };
    let i = if axis == 0 { i1 } else { i2 };
    let at = |j: usize| {
        if axis == 0 {
            grid.idx(j, i2)
        } else {
            grid.idx(i1, j)
        }
    };
    if i == 0 {
        vec![(at(1), 1.0 / h), (at(0), -1.0 / h)]
    } else if i == n - 1 {
        vec![(at(i), 1.0 / h), (at(i - 1), -1.0 / h)]
    } else {
        vec![(at(i + 1), 0.5 / h), (at(i - 1), -0.5 / h)]
    }
}

/// Gauss-point data on one boundary edge segment of an element.
pub struct EdgeGauss {
    /// Shape values of the two edge nodes at the point.
    pub edge_shape: [f64; 2],
    /// Shape gradients of all four element nodes at the point.
    pub grad: [(f64, f64); 4],
}

/// One element edge lying on a side of the model boundary.
pub struct EdgeSegment {
    /// The four element nodes in reference order.
    pub nodes: [usize; 4],
    /// The two nodes on the boundary edge.
    pub edge_nodes: [usize; 2],
    /// Edge-chain indices of the two edge nodes.
    pub along: [usize; 2],
    /// Half the segment length (Gauss jacobian).
    pub half_length: f64,
    pub points: Vec<EdgeGauss>,
}

fn shape_gradients(grid: &Grid, xi: f64, et: f64) -> [(f64, f64); 4] {
    [
        (
            -0.25 * (1.0 - et) * 2.0 / grid.h1,
            -0.25 * (1.0 - xi) * 2.0 / grid.h2,
        ),
        (
            0.25 * (1.0 - et) * 2.0 / grid.h1,
            -0.25 * (1.0 + xi) * 2.0 / grid.h2,
        ),
        (
            -0.25 * (1.0 + et) * 2.0 / grid.h1,
            0.25 * (1.0 - xi) * 2.0 / grid.h2,
        ),
        (
            0.25 * (1.0 + et) * 2.0 / grid.h1,
            0.25 * (1.0 + xi) * 2.0 / grid.h2,
        ),
    ]
}

/// Element edge segments along a side of the model boundary, with 2-point
/// Gauss data per segment.
pub fn edge_segments(grid: &Grid, side: Side) -> Vec<EdgeSegment> {
    let gp = 1.0 / 3.0_f64.sqrt();
    let mut out = Vec::new();
    let element_nodes = |i1: usize, i2: usize| {
        [
            grid.idx(i1, i2),
            grid.idx(i1 + 1, i2),
            grid.idx(i1, i2 + 1),
            grid.idx(i1 + 1, i2 + 1),
        ]
    };
    match side {
        Side::Left | Side::Right => {
            let i1 = if side == Side::Left { 0 } else { grid.n1 - 2 };
            let xi = if side == Side::Left { -1.0 } else { 1.0 };
            let edge_ids = if side == Side::Left { [0usize, 2] } else { [1usize, 3] };
            for j in 0..grid.n2 - 1 {
                let nodes = element_nodes(i1, j);
                let points = [-gp, gp]
                    .iter()
                    .map(|&et| EdgeGauss {
                        edge_shape: [0.5 * (1.0 - et), 0.5 * (1.0 + et)],
                        grad: shape_gradients(grid, xi, et),
                    })
                    .collect();
                out.push(EdgeSegment {
                    nodes,
                    edge_nodes: [nodes[edge_ids[0]], nodes[edge_ids[1]]],
                    along: [j, j + 1],
                    half_length: 0.5 * grid.h2,
                    points,
                });
            }
        }
        Side::Bottom | Side::Top => {
            let i2 = if side == Side::Bottom { 0 } else { grid.n2 - 2 };
            let et = if side == Side::Bottom { -1.0 } else { 1.0 };
            let edge_ids = if side == Side::Bottom { [0usize, 1] } else { [2usize, 3] };
            for i in 0..grid.n1 - 1 {
                let nodes = element_nodes(i, i2);
                let points = [-gp, gp]
                    .iter()
                    .map(|&xi| EdgeGauss {
                        edge_shape: [0.5 * (1.0 - xi), 0.5 * (1.0 + xi)],
                        grad: shape_gradients(grid, xi, et),
                    })
                    .collect();
                out.push(EdgeSegment {
                    nodes,
                    edge_nodes: [nodes[edge_ids[0]], nodes[edge_ids[1]]],
                    along: [i, i + 1],
                    half_length: 0.5 * grid.h1,
                    points,
                });
            }
        }
    }
    out
}

fn edge_nodes(grid: &Grid, side: Side) -> Vec<(usize, usize)> {
    // (node, index along edge)
    match side {
        Side::Left => (0..grid.n2).map(|j| (grid.idx(0, j), j)).collect(),
        Side::Right => (0..grid.n2).map(|j| (grid.idx(grid.n1 - 1, j), j)).collect(),
        Side::Bottom => (0..grid.n1).map(|i| (grid.idx(i, 0), i)).collect(),
        Side::Top => (0..grid.n1).map(|i| (grid.idx(i, grid.n2 - 1), i)).collect(),
    }
}

fn into_domain_stencil(grid: &Grid, side: Side, node: usize) -> Vec<(usize, f64)> {
    // normal derivative (outward) approximated one-sided from inside
    let (i1, i2) = grid.coords(node);
    match side {
        Side::Left => vec![
            (grid.idx(0, i2), 1.0 / grid.h1),
            (grid.idx(1, i2), -1.0 / grid.h1),
        ],
        Side::Right => vec![
            (grid.idx(grid.n1 - 1, i2), 1.0 / grid.h1),
            (grid.idx(grid.n1 - 2, i2), -1.0 / grid.h1),
        ],
        Side::Bottom => vec![
            (grid.idx(i1, 0), 1.0 / grid.h2),
            (grid.idx(i1, 1), -1.0 / grid.h2),
        ],
        Side::Top => vec![
            (grid.idx(i1, grid.n2 - 1), 1.0 / grid.h2),
            (grid.idx(i1, grid.n2 - 2), -1.0 / grid.h2),
        ],
    }
}

/// Assemble the Oseen system for parameters `x`, linearization field
/// `u_lin` (nodal, zero for Stokes), and configuration `cfg`.
pub fn assemble(
    x: &NSParams,
    u_lin: Option<&[ScalarField; 2]>,
    cfg: &DiscretizationConfig,
) -> Result<AssembledOseen> {
    let grid = x.sdf.grid().clone();
    let dofs = DofMap::new(&grid);
    let n_dofs = dofs.n_dofs();
    let hbar = grid.hmax();
    let active_dist = cfg.active_factor * hbar;
    let nu = x.nu;
    let nu_ref = cfg.nu_ref;
    let eta_over_h = cfg.eta * nu / hbar;

    let active: Vec<bool> = x.sdf.base.values.iter().map(|&v| v < active_dist).collect();

    // sanity: the problem needs fluid at both designated edges
    let inlet_fluid = edge_nodes(&grid, x.inlet_edge)
        .iter()
        .filter(|&&(n, _)| x.sdf.base.values[n] < 0.0)
        .count();
    let outlet_fluid = edge_nodes(&grid, x.outlet_edge)
        .iter()
        .filter(|&&(n, _)| x.sdf.base.values[n] < 0.0)
        .count();
    if inlet_fluid == 0 || outlet_fluid == 0 {
        return Err(Error::SingularSystem(format!(
            "fluid nodes on inlet/outlet edges: {}/{}",
            inlet_fluid, outlet_fluid
        )));
    }

    let mut a = Triplets::new(n_dofs);
    let mut a_nu = Triplets::new(n_dofs);
    let mut b = vec![0.0; n_dofs];
    let mut b_nu = vec![0.0; n_dofs];
    let mut gi_coupling = Vec::new();
    let mut has_row = vec![false; n_dofs];

    // ---- volume terms
    //
    // Fully-fluid elements integrate the full weak form on 2x2 Gauss.
    // Elements cut by the wall integrate the fluid polygon exactly (cut
    // quadrature) plus symmetric Nitsche terms on the embedded wall
    // segment; their exterior complement, and every fully-exterior
    // element, carries an alpha-scaled fictitious extension at the
    // reference viscosity that keeps shell nodes governed without leaking
    // momentum across the wall.
    let alpha = cfg.fictitious_scale;
    let gp2 = [-1.0 / 3.0_f64.sqrt(), 1.0 / 3.0_f64.sqrt()];
    let jac = 0.25 * grid.h1 * grid.h2;
    let stab_coef = cfg.stab * (grid.h1 * grid.h1 + grid.h2 * grid.h2) / 2.0 / nu_ref;
    let mut cut_elements = Vec::new();
    for i2 in 0..grid.n2 - 1 {
        for i1 in 0..grid.n1 - 1 {
            let nodes = [
                grid.idx(i1, i2),
                grid.idx(i1 + 1, i2),
                grid.idx(i1, i2 + 1),
                grid.idx(i1 + 1, i2 + 1),
            ];
            if !nodes.iter().all(|&n| active[n]) {
                continue;
            }
            for n in nodes {
                for c in 0..3 {
                    has_row[dofs.dof(n, c)] = true;
                }
            }
            let phis = [
                x.sdf.base.values[nodes[0]],
                x.sdf.base.values[nodes[1]],
                x.sdf.base.values[nodes[2]],
                x.sdf.base.values[nodes[3]],
            ];
            let n_neg = phis.iter().filter(|&&p| p < 0.0).count();
            let cut = n_neg != 0 && n_neg != 4;
            let fluid = n_neg == 4;

            // standard full-element path: weight 1 on fluid elements, the
            // alpha extension elsewhere (at the fixed reference viscosity)
            let (std_weight, std_nu, in_a_nu) = if fluid {
                (1.0, nu, true)
            } else {
                (alpha, nu_ref, false)
            };
            let ulin_nodal = match u_lin {
                Some(ul) => [
                    (ul[0].values[nodes[0]], ul[1].values[nodes[0]]),
                    (ul[0].values[nodes[1]], ul[1].values[nodes[1]]),
                    (ul[0].values[nodes[2]], ul[1].values[nodes[2]]),
                    (ul[0].values[nodes[3]], ul[1].values[nodes[3]]),
                ],
                None => [(0.0, 0.0); 4],
            };
            for &xi in &gp2 {
                for &et in &gp2 {
                    let shape = [
                        0.25 * (1.0 - xi) * (1.0 - et),
                        0.25 * (1.0 + xi) * (1.0 - et),
                        0.25 * (1.0 - xi) * (1.0 + et),
                        0.25 * (1.0 + xi) * (1.0 + et),
                    ];
                    let grads = shape_gradients(&grid, xi, et);
                    let mut ulx = 0.0;
                    let mut uly = 0.0;
                    for (t, un) in ulin_nodal.iter().enumerate() {
                        ulx += shape[t] * un.0;
                        uly += shape[t] * un.1;
                    }
                    for ta in 0..4 {
                        let ra = nodes[ta];
                        let (dxa, dya) = grads[ta];
                        for tb in 0..4 {
                            let rb = nodes[tb];
                            let (dxb, dyb) = grads[tb];
                            let visc = (dxa * dxb + dya * dyb) * jac;
                            let conv = shape[ta] * (ulx * dxb + uly * dyb) * jac;
                            for c in 0..2 {
                                a.push(
                                    dofs.dof(ra, c),
                                    dofs.dof(rb, c),
                                    std_weight * (std_nu * visc + conv),
                                );
                                if in_a_nu {
                                    a_nu.push(dofs.dof(ra, c), dofs.dof(rb, c), visc);
                                }
                                let dv = if c == 0 { dxa } else { dya };
                                a.push(
                                    dofs.dof(ra, c),
                                    dofs.dof(rb, 2),
                                    -std_weight * dv * shape[tb] * jac,
                                );
                                let du = if c == 0 { dxb } else { dyb };
                                a.push(
                                    dofs.dof(ra, 2),
                                    dofs.dof(rb, c),
                                    -std_weight * shape[ta] * du * jac,
                                );
                            }
                            a.push(
                                dofs.dof(ra, 2),
                                dofs.dof(rb, 2),
                                -std_weight * stab_coef * (dxa * dxb + dya * dyb) * jac,
                            );
                        }
                    }
                }
            }

            if cut {
                // clipped fluid polygon plus wall-segment Nitsche
                let geom = build_cut_geom(&phis, grid.h1, grid.h2);
                let co = CutCoeffs {
                    h1: grid.h1,
                    h2: grid.h2,
                    nu,
                    eta_over_h,
                    stab_coef,
                    ulin: &ulin_nodal,
                };
                let (kv, ks) = cut_element_matrices(&geom, &co);
                let co_one = CutCoeffs {
                    nu: 1.0,
                    eta_over_h: cfg.eta / hbar,
                    ..co
                };
                let co_zero = CutCoeffs { nu: 0.0, eta_over_h: 0.0, ..co };
                let (kv1, ks1) = cut_element_matrices(&geom, &co_one);
                let (kv0, ks0) = cut_element_matrices(&geom, &co_zero);
                let wfl = 1.0 - alpha;
                for r in 0..12 {
                    let dr = dofs.dof(nodes[r / 3], r % 3);
                    for c in 0..12 {
                        let dc = dofs.dof(nodes[c / 3], c % 3);
                        let v = wfl * kv[r][c] + ks[r][c];
                        if v != 0.0 {
                            a.push(dr, dc, v);
                        }
                        let vn = wfl * (kv1[r][c] - kv0[r][c]) + (ks1[r][c] - ks0[r][c]);
                        if vn != 0.0 {
                            a_nu.push(dr, dc, vn);
                        }
                    }
                }
                cut_elements.push(CutElement { nodes, phis, ulin: ulin_nodal });
            }
        }
    }

    // ---- inlet Nitsche terms with Dirichlet data g_i
    //
    // Edge-segment Gauss quadrature with the element shape functions, so
    // the consistency flux cancels the volume integration's natural
    // boundary flux exactly and the weak Dirichlet data enters at second
    // order.
    let (inx, iny) = x.inlet_edge.outward_normal();
    let n_edge = [inx, iny];
    let mut inlet = Vec::new();
    {
        let edge_w = match x.inlet_edge {
            Side::Left | Side::Right => grid.h2,
            Side::Bottom | Side::Top => grid.h1,
        };
        for (node, along) in edge_nodes(&grid, x.inlet_edge) {
            if x.sdf.base.values[node] >= 0.0 {
                continue;
            }
            let stn = into_domain_stencil(&grid, x.inlet_edge, node);
            inlet.push(EdgeNode { node, along, weight: edge_w, stn });
            for comp in 0..3 {
                has_row[dofs.dof(node, comp)] = true;
            }
        }
    }
    let segs = edge_segments(&grid, x.inlet_edge);
    for seg in &segs {
        // both edge endpoints must be fluid; the wall band covers the rest
        if x.sdf.base.values[seg.edge_nodes[0]] >= 0.0
            || x.sdf.base.values[seg.edge_nodes[1]] >= 0.0
        {
            continue;
        }
        for gq in &seg.points {
            let ws = seg.half_length; // gauss weight 1 on [-1,1], jac = L/2
            // interpolated Dirichlet data and its coupling weights
            let gw = [gq.edge_shape[0], gq.edge_shape[1]];
            let mut g_at = [0.0f64; 2];
            for comp in 0..2 {
                g_at[comp] = gw[0] * x.g_i.comps[comp][seg.along[0]]
                    + gw[1] * x.g_i.comps[comp][seg.along[1]];
            }
            // n . grad N_m for the four element nodes
            let mut ndn = [0.0f64; 4];
            for m in 0..4 {
                ndn[m] = inx * gq.grad[m].0 + iny * gq.grad[m].1;
            }
            for comp in 0..2 {
                let n_comp = n_edge[comp];
                // rows with nonzero trace: the two edge nodes
                for e_r in 0..2 {
                    let r = seg.edge_nodes[e_r];
                    let nr = gq.edge_shape[e_r];
                    for e_s in 0..2 {
                        let s = seg.edge_nodes[e_s];
                        let ns = gq.edge_shape[e_s];
                        // penalty
                        a.push(dofs.dof(r, comp), dofs.dof(s, comp), ws * eta_over_h * nr * ns);
                        a_nu.push(
                            dofs.dof(r, comp),
                            dofs.dof(s, comp),
                            ws * cfg.eta / hbar * nr * ns,
                        );
                        // q n . u  (adjoint consistency, pressure part)
                        a.push(dofs.dof(r, 2), dofs.dof(s, comp), ws * nr * n_comp * ns);
                        // v . p n  (consistency, pressure part)
                        a.push(dofs.dof(r, comp), dofs.dof(s, 2), ws * nr * n_comp * ns);
                    }
                    // penalty data
                    b[dofs.dof(r, comp)] += ws * eta_over_h * nr * g_at[comp];
                    b_nu[dofs.dof(r, comp)] += ws * cfg.eta / hbar * nr * g_at[comp];
                    for (e_g, &gwv) in gw.iter().enumerate() {
                        gi_coupling.push((
                            dofs.dof(r, comp),
                            seg.along[e_g],
                            comp,
                            ws * eta_over_h * nr * gwv,
                        ));
                    }
                    // q n . g data
                    b[dofs.dof(r, 2)] += ws * nr * n_comp * g_at[comp];
                    for (e_g, &gwv) in gw.iter().enumerate() {
                        gi_coupling.push((dofs.dof(r, 2), seg.along[e_g], comp, ws * nr * n_comp * gwv));
                    }
                    // consistency: v . (-nu dn u)
                    for (m, &node_m) in seg.nodes.iter().enumerate() {
                        a.push(dofs.dof(r, comp), dofs.dof(node_m, comp), -ws * nu * nr * ndn[m]);
                        a_nu.push(dofs.dof(r, comp), dofs.dof(node_m, comp), -ws * nr * ndn[m]);
                    }
                }
                // adjoint consistency: (-nu dn v) . (u - g)
                for (m, &node_m) in seg.nodes.iter().enumerate() {
                    for e_s in 0..2 {
                        let s = seg.edge_nodes[e_s];
                        let ns = gq.edge_shape[e_s];
                        a.push(dofs.dof(node_m, comp), dofs.dof(s, comp), -ws * nu * ndn[m] * ns);
                        a_nu.push(dofs.dof(node_m, comp), dofs.dof(s, comp), -ws * ndn[m] * ns);
                    }
                    b[dofs.dof(node_m, comp)] += -ws * nu * ndn[m] * g_at[comp];
                    b_nu[dofs.dof(node_m, comp)] += -ws * ndn[m] * g_at[comp];
                    for (e_g, &gwv) in gw.iter().enumerate() {
                        gi_coupling.push((
                            dofs.dof(node_m, comp),
                            seg.along[e_g],
                            comp,
                            -ws * nu * ndn[m] * gwv,
                        ));
                    }
                }
            }
        }
    }

    // ---- outlet natural condition: traction data g_o on the right side
    let out_w = match x.outlet_edge {
        Side::Left | Side::Right => grid.h2,
        Side::Bottom | Side::Top => grid.h1,
    };
    let mut outlet = Vec::new();
    for (node, along) in edge_nodes(&grid, x.outlet_edge) {
        if x.sdf.base.values[node] >= 0.0 {
            continue;
        }
        let stn = into_domain_stencil(&grid, x.outlet_edge, node);
        outlet.push(EdgeNode { node, along, weight: out_w, stn });
    }
    for en in &outlet {
        for a_row in 0..2 {
            b[dofs.dof(en.node, a_row)] -= en.weight * x.g_o.comps[a_row][en.along];
        }
    }

    // ---- pressure pinning: the exterior shell strips see only Neumann
    // pressure coupling, so their constants float; a tiny mass term pins
    // them without measurably perturbing the fluid pressure
    let p_floor = 1e-6 * grid.cell_area() / nu_ref;
    for node in 0..grid.len() {
        let d = dofs.dof(node, 2);
        if has_row[d] {
            a.push(d, d, -p_floor);
        }
    }

    // ---- identity rows for every dof not touched by the discretization
    for d in 0..n_dofs {
        if !has_row[d] {
            a.push(d, d, 1.0);
        }
    }

    Ok(AssembledOseen {
        dofs,
        a,
        b,
        a_nu,
        b_nu,
        gi_coupling,
        cut_elements,
        inlet,
        outlet,
        active,
        nu,
        eta_over_h,
        eta_dimless: cfg.eta,
    })
}

/// Assemble `b` for a replacement inlet profile using the stored coupling.
pub fn apply_gi_coupling(sys: &AssembledOseen, g_i: &BoundaryVector) -> Vec<f64> {
    let mut delta = vec![0.0; sys.dofs.n_dofs()];
    for &(row, along, comp, coef) in &sys.gi_coupling {
        delta[row] += coef * g_i.comps[comp][along];
    }
    delta
}
