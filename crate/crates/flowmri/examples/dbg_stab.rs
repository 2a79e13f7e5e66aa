use flowmri::fields::*;
use flowmri::flow::*;

fn channel(nx: usize, ny: usize, pad: usize, u_peak: f64, nu: f64) -> (NSParams, f64, f64) {
    let h = 1.0 / (ny - 2 * pad) as f64;
    let grid = Grid::new(nx, ny, h, h, (0.5 * h, 0.5 * h)).unwrap();
    let y_lo = pad as f64 * h;
    let y_hi = (ny - pad) as f64 * h;
    let sdf = SignedDistanceField::new(ScalarField::from_fn(&grid, |_, y| (y_lo - y).max(y - y_hi)));
    let c = 0.5 * (y_lo + y_hi);
    let a = 0.5 * (y_hi - y_lo);
    let mut g_i = BoundaryVector::zeros(&grid, Side::Left);
    for j in 0..grid.n2 {
        let y = grid.pos(0, j).1;
        g_i.comps[0][j] = (u_peak * (1.0 - ((y - c) / a).powi(2))).max(0.0);
    }
    (NSParams { sdf, inlet_edge: Side::Left, outlet_edge: Side::Right, g_i, g_o: BoundaryVector::zeros(&grid, Side::Right), nu }, c, a)
}

fn run(nx: usize, ny: usize, pad: usize, stab: f64, eta: f64) -> (f64, f64) {
    let (x, c, a) = channel(nx, ny, pad, 1.0, 0.05);
    let mut cfg = DiscretizationConfig::new(0.05);
    cfg.stab = stab;
    cfg.eta = eta;
    let flow = solve_ns(&x, &cfg).unwrap();
    let grid = flow.u[0].grid.clone();
    let h = grid.hmax();
    let i_mid = grid.n1 / 2;
    let mut emax = 0.0f64;
    for j in 0..grid.n2 {
        let node = grid.idx(i_mid, j);
        if x.sdf.base.values[node] < -2.0 * h {
            let y = grid.pos(i_mid, j).1;
            let exact = 1.0 - ((y - c) / a).powi(2);
            emax = emax.max((flow.u[0].values[node] - exact).abs());
        }
    }
    let f_in = edge_flux(&flow, &x, Side::Left);
    let f_out = edge_flux(&flow, &x, Side::Right);
    (emax, (f_in + f_out).abs() / f_in.abs())
}

fn main() {
    for &stab in &[0.1, 0.02, 0.005] {
        for &eta in &[10.0] {
            let (e1, d1) = run(16, 36, 2, stab, eta);
            let (e2, d2) = run(32, 72, 4, stab, eta);
            println!(
                "stab {:5.3} eta {:3.0}: coarse err {:.4}% deficit {:.4}% | fine err {:.4}% deficit {:.4}% | order {:.2}",
                stab, eta, e1 * 100.0, d1 * 100.0, e2 * 100.0, d2 * 100.0, (e1 / e2).log2()
            );
        }
    }
}
