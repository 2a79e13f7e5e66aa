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
    for &(nx, ny, pad) in &[(16usize, 36usize, 2usize), (32, 72, 4)] {
        let (x, c, a) = channel(nx, ny, pad, 1.0, 0.05);
        let cfg = DiscretizationConfig::new(0.05);
        let flow = solve_ns(&x, &cfg).unwrap();
        let grid = flow.u[0].grid.clone();
        let h = grid.hmax();
        // error along y at mid-x
        let i_mid = nx / 2;
        println!("== {}x{} h={:.4}", nx, ny, h);
        let mut emax = 0.0f64; let mut jmax = 0;
        for j in 0..ny {
            let node = grid.idx(i_mid, j);
            if x.sdf.base.values[node] < -2.0 * h {
                let y = grid.pos(i_mid, j).1;
                let exact = 1.0 * (1.0 - ((y - c) / a).powi(2));
                let err = (flow.u[0].values[node] - exact).abs();
                if err > emax { emax = err; jmax = j; }
            }
        }
        println!("  max err {} at j={} (phi={:.2}h)", emax, jmax, x.sdf.base.values[grid.idx(i_mid,jmax)]/h);
        // error along x at centerline
        let j_mid = ny / 2;
        let mut prof = Vec::new();
        for i in 0..nx {
            let node = grid.idx(i, j_mid);
            let y = grid.pos(i, j_mid).1;
            let exact = 1.0 * (1.0 - ((y - c) / a).powi(2));
            prof.push(format!("{:.4}", (flow.u[0].values[node] - exact) * 1e3));
        }
        println!("  centerline err *1e3 along x: {:?}", prof);
        // wall-normal leakage flux
        let mut wall_leak = 0.0f64;
        for i in 0..nx { for j in 0..ny {
            let node = grid.idx(i, j);
            let phi = x.sdf.base.values[node];
            if phi.abs() < 1.5 * h {
                // crude: uy magnitude near wall
                wall_leak = wall_leak.max(flow.u[1].values[node].abs());
            }
        }}
        println!("  max |uy| near wall: {:.3e}", wall_leak);
        let f_in = edge_flux(&flow, &x, Side::Left);
        let f_out = edge_flux(&flow, &x, Side::Right);
        println!("  influx {:.6} outflux {:.6} parabola {:.6}", f_in, f_out, 2.0/3.0);
    }
}
