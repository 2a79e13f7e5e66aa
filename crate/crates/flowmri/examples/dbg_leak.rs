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

fn main() {
    for &eta in &[10.0f64, 30.0, 100.0] {
        let (x, c, a) = channel(24, 72, 4, 1.0, 0.05);
        let mut cfg = DiscretizationConfig::new(0.05);
        cfg.eta = eta;
        let flow = solve_ns(&x, &cfg).unwrap();
        let grid = flow.u[0].grid.clone();
        let f_in = edge_flux(&flow, &x, Side::Left);
        let f_out = edge_flux(&flow, &x, Side::Right);
        // uy along just inside lower wall (phi ~ -0.5h row)
        let h = grid.hmax();
        let mut uy_prof = Vec::new();
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let node = grid.idx(i, j);
                let phi = x.sdf.base.values[node];
                if (phi + 0.5 * h).abs() < 0.01 * h && grid.pos(i, j).1 < 0.5 {
                    uy_prof.push(format!("{:.2}", flow.u[1].values[node] * 1e4));
                }
            }
        }
        // centerline error
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
        println!("eta {:5.0}: deficit {:.4}% err {:.4}% uy*1e4 near lower wall: {:?}", eta,
                 (f_in + f_out).abs() / f_in.abs() * 100.0, emax * 100.0, uy_prof);
    }
}
