use flowmri::fields::*;
use flowmri::flow::*;
fn main() {
    let (nx, ny, pad) = (32usize, 72usize, 4usize);
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
        g_i.comps[0][j] = (1.0f64 * (1.0 - ((y - c) / a).powi(2))).max(0.0);
    }
    let x = NSParams { sdf, inlet_edge: Side::Left, outlet_edge: Side::Right, g_i, g_o: BoundaryVector::zeros(&grid, Side::Right), nu: 0.05 };
    let mut cfg = DiscretizationConfig::new(0.05);
    cfg.stab = 0.02;
    let flow = solve_ns(&x, &cfg).unwrap();
    let i_mid = nx / 2;
    println!("y/h  phi/h  u_x  exact  err*1e3");
    for j in 0..ny {
        let node = grid.idx(i_mid, j);
        let y = grid.pos(i_mid, j).1;
        let exact = (1.0f64 - ((y - c) / a).powi(2)).max(-0.2);
        if j < 10 || j > ny - 10 || (j % 4 == 0) {
            println!("{:5.1} {:6.1} {:9.5} {:9.5} {:8.3}", y / h, x.sdf.base.values[node] / h,
                     flow.u[0].values[node], if x.sdf.base.values[node] < 0.0 { exact } else { 0.0 },
                     (flow.u[0].values[node] - if x.sdf.base.values[node] < 0.0 { exact } else { 0.0 }) * 1e3);
        }
    }
}
