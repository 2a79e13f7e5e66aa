//! Cut-element machinery: polygon quadrature of the fluid part of a wall
//! element and Nitsche terms on the embedded wall segment.
//!
//! Everything is written over a generic scalar so the same code path yields
//! both the assembled coefficients (plain f64) and the exact derivative of
//! the element form with respect to the four corner level-set values
//! (forward-mode duals seeded on the corners).

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Ring:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn c(x: f64) -> Self;
    fn v(self) -> f64;
    fn sqrt(self) -> Self;
}

impl Ring for f64 {
    #[inline]
    fn c(x: f64) -> Self {
        x
    }
    #[inline]
    fn v(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Forward-mode dual number carrying four partial derivatives (one per
/// element corner).
#[derive(Debug, Clone, Copy)]
pub struct Dual4 {
    pub v: f64,
    pub d: [f64; 4],
}

impl Dual4 {
    pub fn seed(v: f64, slot: usize) -> Self {
        let mut d = [0.0; 4];
        d[slot] = 1.0;
        Dual4 { v, d }
    }
}

impl Add for Dual4 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual4 {
            v: self.v + o.v,
            d: [
                self.d[0] + o.d[0],
                self.d[1] + o.d[1],
                self.d[2] + o.d[2],
                self.d[3] + o.d[3],
            ],
        }
    }
}

impl Sub for Dual4 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual4 {
            v: self.v - o.v,
            d: [
                self.d[0] - o.d[0],
                self.d[1] - o.d[1],
                self.d[2] - o.d[2],
                self.d[3] - o.d[3],
            ],
        }
    }
}

impl Mul for Dual4 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual4 {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
                self.d[3] * o.v + self.v * o.d[3],
            ],
        }
    }
}

impl Div for Dual4 {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Dual4 {
            v: q,
            d: [
                (self.d[0] - q * o.d[0]) * inv,
                (self.d[1] - q * o.d[1]) * inv,
                (self.d[2] - q * o.d[2]) * inv,
                (self.d[3] - q * o.d[3]) * inv,
            ],
        }
    }
}

impl Neg for Dual4 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual4 {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2], -self.d[3]],
        }
    }
}

impl Ring for Dual4 {
    #[inline]
    fn c(x: f64) -> Self {
        Dual4 { v: x, d: [0.0; 4] }
    }
    #[inline]
    fn v(self) -> f64 {
        self.v
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let inv = 0.5 / s.max(1e-300);
        Dual4 {
            v: s,
            d: [
                self.d[0] * inv,
                self.d[1] * inv,
                self.d[2] * inv,
                self.d[3] * inv,
            ],
        }
    }
}

/// Bilinear shape functions on the reference square, corner order
/// `(-1,-1), (1,-1), (-1,1), (1,1)`.
#[inline]
fn shapes<S: Ring>(xi: S, et: S) -> [S; 4] {
    let q = S::c(0.25);
    let one = S::c(1.0);
    [
        q * (one - xi) * (one - et),
        q * (one + xi) * (one - et),
        q * (one - xi) * (one + et),
        q * (one + xi) * (one + et),
    ]
}

/// Shape gradients in physical coordinates.
#[inline]
fn shape_grads<S: Ring>(xi: S, et: S, h1: f64, h2: f64) -> [(S, S); 4] {
    let q1 = S::c(0.5 / h1);
    let q2 = S::c(0.5 / h2);
    let one = S::c(1.0);
    [
        (-q1 * (one - et), -q2 * (one - xi)),
        (q1 * (one - et), -q2 * (one + xi)),
        (-q1 * (one + et), q2 * (one - xi)),
        (q1 * (one + et), q2 * (one + xi)),
    ]
}

/// Quadrature point sets for the fluid part of a cut element.
pub struct CutGeom<S: Ring> {
    /// Volume points: (xi, eta, weight) with weight in reference measure.
    pub volume: Vec<(S, S, S)>,
    /// Wall points: (xi, eta, physical weight, outward normal).
    pub surface: Vec<(S, S, S, (S, S))>,
}

/// Build the clipped quadrature of an element whose corner level-set values
/// are `phis` (reference corner order). Assumes a genuine cut: at least one
/// corner of each sign.
pub fn build_cut_geom<S: Ring>(phis: &[S; 4], h1: f64, h2: f64) -> CutGeom<S> {
    // boundary walk in counterclockwise order with reference coordinates
    let walk = [
        (0usize, (-1.0, -1.0)),
        (1, (1.0, -1.0)),
        (3, (1.0, 1.0)),
        (2, (-1.0, 1.0)),
    ];
    // fluid polygon vertices and wall crossings in walk order
    let mut poly: Vec<(S, S)> = Vec::with_capacity(8);
    let mut crossings: Vec<(S, S)> = Vec::with_capacity(4);
    let mut crossing_open: Vec<bool> = Vec::with_capacity(4); // exit = true
    for k in 0..4 {
        let (ia, (ax, ay)) = walk[k];
        let (ib, (bx, by)) = walk[(k + 1) % 4];
        let pa = phis[ia];
        let pb = phis[ib];
        let a_in = pa.v() < 0.0;
        let b_in = pb.v() < 0.0;
        if a_in {
            poly.push((S::c(ax), S::c(ay)));
        }
        if a_in != b_in {
            let t = pa / (pa - pb);
            let px = S::c(ax) + t * S::c(bx - ax);
            let py = S::c(ay) + t * S::c(by - ay);
            poly.push((px, py));
            crossings.push((px, py));
            crossing_open.push(a_in); // leaving the fluid opens a segment
        }
    }
    // volume quadrature: fan triangulation from the polygon centroid,
    // 3-point midpoint rule per triangle (degree-2 exact)
    let mut volume = Vec::new();
    if poly.len() >= 3 {
        let inv_n = S::c(1.0 / poly.len() as f64);
        let mut cx = S::c(0.0);
        let mut cy = S::c(0.0);
        for &(px, py) in &poly {
            cx = cx + px;
            cy = cy + py;
        }
        cx = cx * inv_n;
        cy = cy * inv_n;
        let half = S::c(0.5);
        let third = S::c(1.0 / 3.0);
        for k in 0..poly.len() {
            let (ax, ay) = poly[k];
            let (bx, by) = poly[(k + 1) % poly.len()];
            // signed triangle area (centroid, a, b) in reference coords
            let area = ((ax - cx) * (by - cy) - (bx - cx) * (ay - cy)) * half;
            let w = area * third;
            // edge midpoints of the triangle
            let mids = [
                ((cx + ax) * half, (cy + ay) * half),
                ((ax + bx) * half, (ay + by) * half),
                ((bx + cx) * half, (by + cy) * half),
            ];
            for (mx, my) in mids {
                volume.push((mx, my, w));
            }
        }
    }
    // wall segments: pair an exit crossing with the following entry
    let mut surface = Vec::new();
    let n_cross = crossings.len();
    if n_cross >= 2 {
        let gauss = 1.0 / 3.0_f64.sqrt();
        let mut k = 0;
        while k < n_cross {
            if !crossing_open[k] {
                k += 1;
                continue;
            }
            let (x0, y0) = crossings[k];
            let (x1, y1) = crossings[(k + 1) % n_cross];
            // physical segment length
            let dx = (x1 - x0) * S::c(0.5 * h1);
            let dy = (y1 - y0) * S::c(0.5 * h2);
            let len = (dx * dx + dy * dy).sqrt();
            let wq = len * S::c(0.5); // two Gauss points, weight 1 each
            for &t in &[0.5 - 0.5 * gauss, 0.5 + 0.5 * gauss] {
                let xt = x0 + (x1 - x0) * S::c(t);
                let yt = y0 + (y1 - y0) * S::c(t);
                // outward normal from the bilinear level-set gradient
                let grads = shape_grads(xt, yt, h1, h2);
                let mut gx = S::c(0.0);
                let mut gy = S::c(0.0);
                for (i, (dgx, dgy)) in grads.iter().enumerate() {
                    gx = gx + *dgx * phis[i];
                    gy = gy + *dgy * phis[i];
                }
                let gmag = (gx * gx + gy * gy).sqrt();
                surface.push((xt, yt, wq, (gx / gmag, gy / gmag)));
            }
            k += 2;
        }
    }
    CutGeom { volume, surface }
}

/// Coefficients of the cut-element weak form.
pub struct CutCoeffs<'a> {
    pub h1: f64,
    pub h2: f64,
    pub nu: f64,
    pub eta_over_h: f64,
    /// Brezzi-Pitkaranta coefficient `stab * hbar^2 / nu_ref`.
    pub stab_coef: f64,
    /// Nodal linearization velocity, corner order.
    pub ulin: &'a [(f64, f64); 4],
}

/// Value of the element weak form for local trial values `z` and test
/// values `lam` (layout `[ux0, uy0, p0, ux1, ...]`): volume terms over the
/// fluid polygon and symmetric Nitsche terms on the wall segment, returned
/// separately so callers can scale the fictitious-extension complement.
pub fn cut_element_form<S: Ring>(
    geom: &CutGeom<S>,
    co: &CutCoeffs,
    z: &[f64; 12],
    lam: &[f64; 12],
) -> (S, S) {
    let jac = S::c(0.25 * co.h1 * co.h2);
    let nu = S::c(co.nu);
    let mut total = S::c(0.0);
    for &(xi, et, w) in &geom.volume {
        let n_s = shapes(xi, et);
        let g_s = shape_grads(xi, et, co.h1, co.h2);
        // interpolate trial/test fields
        let mut u = [S::c(0.0); 2];
        let mut v = [S::c(0.0); 2];
        let mut p = S::c(0.0);
        let mut q = S::c(0.0);
        let mut du = [[S::c(0.0); 2]; 2]; // du[axis][comp]
        let mut dv = [[S::c(0.0); 2]; 2];
        let mut dp = [S::c(0.0); 2];
        let mut dq = [S::c(0.0); 2];
        let mut ulx = S::c(0.0);
        let mut uly = S::c(0.0);
        for i in 0..4 {
            let (gx, gy) = g_s[i];
            for comp in 0..2 {
                let zi = S::c(z[3 * i + comp]);
                let li = S::c(lam[3 * i + comp]);
                u[comp] = u[comp] + n_s[i] * zi;
                v[comp] = v[comp] + n_s[i] * li;
                du[0][comp] = du[0][comp] + gx * zi;
                du[1][comp] = du[1][comp] + gy * zi;
                dv[0][comp] = dv[0][comp] + gx * li;
                dv[1][comp] = dv[1][comp] + gy * li;
            }
            let pi = S::c(z[3 * i + 2]);
            let qi = S::c(lam[3 * i + 2]);
            p = p + n_s[i] * pi;
            q = q + n_s[i] * qi;
            dp[0] = dp[0] + gx * pi;
            dp[1] = dp[1] + gy * pi;
            dq[0] = dq[0] + gx * qi;
            dq[1] = dq[1] + gy * qi;
            ulx = ulx + n_s[i] * S::c(co.ulin[i].0);
            uly = uly + n_s[i] * S::c(co.ulin[i].1);
        }
        let mut integrand = S::c(0.0);
        for comp in 0..2 {
            // nu grad v : grad u + v . (ulin . grad) u
            integrand = integrand
                + nu * (dv[0][comp] * du[0][comp] + dv[1][comp] * du[1][comp])
                + v[comp] * (ulx * du[0][comp] + uly * du[1][comp]);
        }
        // -(div v) p - q (div u)
        integrand = integrand - (dv[0][0] + dv[1][1]) * p - q * (du[0][0] + du[1][1]);
        // pressure stabilization
        integrand = integrand - S::c(co.stab_coef) * (dq[0] * dp[0] + dq[1] * dp[1]);
        total = total + integrand * w * jac;
    }
    let volume_total = total;
    let mut total = S::c(0.0);
    let eta = S::c(co.eta_over_h);
    for &(xi, et, w, (nx, ny)) in &geom.surface {
        let n_s = shapes(xi, et);
        let g_s = shape_grads(xi, et, co.h1, co.h2);
        let mut u = [S::c(0.0); 2];
        let mut v = [S::c(0.0); 2];
        let mut p = S::c(0.0);
        let mut q = S::c(0.0);
        let mut dnu_ = [S::c(0.0); 2];
        let mut dnv_ = [S::c(0.0); 2];
        for i in 0..4 {
            let (gx, gy) = g_s[i];
            let ndn = nx * gx + ny * gy;
            for comp in 0..2 {
                let zi = S::c(z[3 * i + comp]);
                let li = S::c(lam[3 * i + comp]);
                u[comp] = u[comp] + n_s[i] * zi;
                v[comp] = v[comp] + n_s[i] * li;
                dnu_[comp] = dnu_[comp] + ndn * zi;
                dnv_[comp] = dnv_[comp] + ndn * li;
            }
            p = p + n_s[i] * S::c(z[3 * i + 2]);
            q = q + n_s[i] * S::c(lam[3 * i + 2]);
        }
        let mut integrand = S::c(0.0);
        for comp in 0..2 {
            let n_comp = if comp == 0 { nx } else { ny };
            integrand = integrand
                + v[comp] * (-(nu * dnu_[comp]) + p * n_comp)
                + (-(nu * dnv_[comp]) + q * n_comp) * u[comp]
                + eta * v[comp] * u[comp];
        }
        total = total + integrand * w;
    }
    (volume_total, total)
}

/// Local 12x12 matrix of the cut-element form (volume part, surface part),
/// accumulated directly over the quadrature points. Kept consistent with
/// [`cut_element_form`] by the bilinearity test below.
pub fn cut_element_matrices(geom: &CutGeom<f64>, co: &CutCoeffs) -> ([[f64; 12]; 12], [[f64; 12]; 12]) {
    let jac = 0.25 * co.h1 * co.h2;
    let mut kv = [[0.0f64; 12]; 12];
    let mut ks = [[0.0f64; 12]; 12];
    for &(xi, et, w) in &geom.volume {
        let n_s = shapes(xi, et);
        let g_s = shape_grads(xi, et, co.h1, co.h2);
        let mut ulx = 0.0;
        let mut uly = 0.0;
        for i in 0..4 {
            ulx += n_s[i] * co.ulin[i].0;
            uly += n_s[i] * co.ulin[i].1;
        }
        let wj = w * jac;
        for r in 0..4 {
            let (gxr, gyr) = g_s[r];
            for cidx in 0..4 {
                let (gxc, gyc) = g_s[cidx];
                let visc = (gxr * gxc + gyr * gyc) * wj;
                let conv = n_s[r] * (ulx * gxc + uly * gyc) * wj;
                for comp in 0..2 {
                    kv[3 * r + comp][3 * cidx + comp] += co.nu * visc + conv;
                    let dvr = if comp == 0 { gxr } else { gyr };
                    kv[3 * r + comp][3 * cidx + 2] += -dvr * n_s[cidx] * wj;
                    let duc = if comp == 0 { gxc } else { gyc };
                    kv[3 * r + 2][3 * cidx + comp] += -n_s[r] * duc * wj;
                }
                kv[3 * r + 2][3 * cidx + 2] += -co.stab_coef * (gxr * gxc + gyr * gyc) * wj;
            }
        }
    }
    for &(xi, et, w, (nx, ny)) in &geom.surface {
        let n_s = shapes(xi, et);
        let g_s = shape_grads(xi, et, co.h1, co.h2);
        let mut ndn = [0.0f64; 4];
        for i in 0..4 {
            ndn[i] = nx * g_s[i].0 + ny * g_s[i].1;
        }
        for r in 0..4 {
            for cidx in 0..4 {
                for comp in 0..2 {
                    let n_comp = if comp == 0 { nx } else { ny };
                    // v . (-nu dn u + p n)
                    ks[3 * r + comp][3 * cidx + comp] += w * n_s[r] * (-co.nu * ndn[cidx]);
                    ks[3 * r + comp][3 * cidx + 2] += w * n_s[r] * n_comp * n_s[cidx];
                    // (-nu dn v + q n) . u
                    ks[3 * r + comp][3 * cidx + comp] += w * (-co.nu * ndn[r]) * n_s[cidx];
                    ks[3 * r + 2][3 * cidx + comp] += w * n_s[r] * n_comp * n_s[cidx];
                    // penalty
                    ks[3 * r + comp][3 * cidx + comp] += w * co.eta_over_h * n_s[r] * n_s[cidx];
                }
            }
        }
    }
    (kv, ks)
}

/// Quadrature-weighted square of the velocity trace on the wall segment:
/// returns `(sum w |u|^2, sum w)`.
pub fn surface_velocity_sq(geom: &CutGeom<f64>, z: &[f64; 12]) -> (f64, f64) {
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for &(xi, et, w, _) in &geom.surface {
        let n_s = shapes(xi, et);
        let mut ux = 0.0;
        let mut uy = 0.0;
        for i in 0..4 {
            ux += n_s[i] * z[3 * i];
            uy += n_s[i] * z[3 * i + 1];
        }
        acc += w * (ux * ux + uy * uy);
        wsum += w;
    }
    (acc, wsum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_arithmetic_matches_finite_differences() {
        let f = |p: &[f64; 4]| {
            let a = p[0] * p[1] + p[2] / (p[3] + 2.0);
            (a * a + p[1]).sqrt()
        };
        let base = [0.3, 0.7, 1.1, 0.4];
        let seeds = [
            Dual4::seed(base[0], 0),
            Dual4::seed(base[1], 1),
            Dual4::seed(base[2], 2),
            Dual4::seed(base[3], 3),
        ];
        let a = seeds[0] * seeds[1] + seeds[2] / (seeds[3] + Dual4::c(2.0));
        let out = (a * a + seeds[1]).sqrt();
        for k in 0..4 {
            let mut hi = base;
            let mut lo = base;
            hi[k] += 1e-7;
            lo[k] -= 1e-7;
            let fd = (f(&hi) - f(&lo)) / 2e-7;
            assert!(
                (out.d[k] - fd).abs() < 1e-6,
                "partial {}: {} vs {}",
                k,
                out.d[k],
                fd
            );
        }
    }

    #[test]
    fn cut_volume_and_length_match_analytic() {
        // straight horizontal cut at eta = 0.25: phi = eta - 0.25
        let phis = [-1.25f64, -1.25, 0.75, 0.75];
        let geom = build_cut_geom(&phis, 0.1, 0.2);
        // fluid fraction: (0.25 - (-1)) / 2 = 0.625 of the reference square
        let vol: f64 = geom.volume.iter().map(|&(_, _, w)| w).sum();
        assert!((vol - 4.0 * 0.625).abs() < 1e-12, "ref volume {}", vol);
        // wall length: full width, h1 = 0.1
        let len: f64 = geom.surface.iter().map(|&(_, _, w, _)| w).sum();
        assert!((len - 0.1).abs() < 1e-12, "wall length {}", len);
        // outward normal points toward positive phi (up)
        for &(_, _, _, (nx, ny)) in &geom.surface {
            assert!(nx.abs() < 1e-12 && (ny - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_and_form_paths_agree() {
        let base = [-0.8f64, 0.5, -1.3, 0.9];
        let (h1, h2) = (0.07, 0.11);
        let co_ulin = [(0.3, -0.2), (0.1, 0.4), (-0.5, 0.2), (0.0, 0.1)];
        let co = CutCoeffs { h1, h2, nu: 0.03, eta_over_h: 4.3, stab_coef: 0.002, ulin: &co_ulin };
        let geom = build_cut_geom(&base, h1, h2);
        let (kv, ks) = cut_element_matrices(&geom, &co);
        let mut z = [0.0; 12];
        let mut lam = [0.0; 12];
        for i in 0..12 {
            z[i] = (i as f64 * 0.41).sin();
            lam[i] = (i as f64 * 0.29).cos();
        }
        let (fv, fs) = cut_element_form(&geom, &co, &z, &lam);
        let mut qv = 0.0;
        let mut qs = 0.0;
        for r in 0..12 {
            for c in 0..12 {
                qv += lam[r] * kv[r][c] * z[c];
                qs += lam[r] * ks[r][c] * z[c];
            }
        }
        assert!((fv - qv).abs() < 1e-12 * (1.0 + fv.abs()), "volume {} vs {}", fv, qv);
        assert!((fs - qs).abs() < 1e-12 * (1.0 + fs.abs()), "surface {} vs {}", fs, qs);
    }

    #[test]
    fn cut_geometry_derivatives_match_finite_differences() {
        let base = [-0.8f64, 0.5, -1.3, 0.9];
        let h1 = 0.07;
        let h2 = 0.11;
        let co_ulin = [(0.3, -0.2), (0.1, 0.4), (-0.5, 0.2), (0.0, 0.1)];
        let co = CutCoeffs {
            h1,
            h2,
            nu: 0.03,
            eta_over_h: 4.3,
            stab_coef: 0.002,
            ulin: &co_ulin,
        };
        let mut z = [0.0; 12];
        let mut lam = [0.0; 12];
        for i in 0..12 {
            z[i] = (i as f64 * 0.37).sin();
            lam[i] = (i as f64 * 0.53).cos();
        }
        let eval = |p: &[f64; 4]| {
            let geom = build_cut_geom(p, h1, h2);
            let (a, b) = cut_element_form(&geom, &co, &z, &lam);
            a + b
        };
        let seeds = [
            Dual4::seed(base[0], 0),
            Dual4::seed(base[1], 1),
            Dual4::seed(base[2], 2),
            Dual4::seed(base[3], 3),
        ];
        let geom_d = build_cut_geom(&seeds, h1, h2);
        let (ov, os) = cut_element_form(&geom_d, &co, &z, &lam);
        let out = ov + os;
        for k in 0..4 {
            let mut hi = base;
            let mut lo = base;
            hi[k] += 1e-7;
            lo[k] -= 1e-7;
            let fd = (eval(&hi) - eval(&lo)) / 2e-7;
            assert!(
                (out.d[k] - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                "corner {}: {} vs {}",
                k,
                out.d[k],
                fd
            );
        }
    }
}
