use flowmri::fields::*;
use flowmri::flow::*;

fn main() {
    let ny = 40usize; let pad = 4usize; let nx = 24usize;
    let h = 1.0 / (ny - 2 * pad) as f64;
    let grid = Grid::new(nx, ny, h, h, (0.5 * h, 0.5 * h)).unwrap();
    let y_lo = pad as f64 * h;
    let y_hi = (ny - pad) as f64 * h;
    let sdf = SignedDistanceField::new(ScalarField::from_fn(&grid, |_, y| (y_lo - y).max(y - y_hi)));
    for j in 0..5 {
        let phi = sdf.at(3, j);
        println!("row {}: phi/h = {}, active(<3.5h)={}", j, phi / h, phi < 3.5 * h);
    }
    let mut g_i = BoundaryVector::zeros(&grid, Side::Left);
    for j in 0..grid.n2 {
        let y = grid.pos(0, j).1;
        let c = 0.5 * (y_lo + y_hi); let a = 0.5 * (y_hi - y_lo);
        g_i.comps[0][j] = (1.0 * (1.0 - ((y - c) / a).powi(2))).max(0.0);
    }
    let x = NSParams { sdf, inlet_edge: Side::Left, outlet_edge: Side::Right, g_i, g_o: BoundaryVector::zeros(&grid, Side::Right), nu: 0.05 };
    let cfg = DiscretizationConfig::new(0.05);
    let sys = assemble(&x, None, &cfg).unwrap();
    let csr = sys.a.to_csr();
    // column 84 = A * e_84; row 84 via transpose trick
    let n = 3 * nx * ny;
    let mut e = vec![0.0; n]; e[84] = 1.0;
    let col = csr.matvec(&e);
    let nz_col: Vec<(usize, f64)> = col.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).collect();
    println!("column 84 nonzeros: {}", nz_col.len());
    let row84 = csr.matvec_transpose(&e);
    let nz_row: Vec<(usize, f64)> = row84.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).collect();
    println!("row 84 nonzeros: {}", nz_row.len());
    for (i, v) in nz_row.iter().take(30) { println!("  row84 col {} (node ({},{}) comp {}): {:.6e}", i, (i/3)%nx, (i/3)/nx, i%3, v); }
}
