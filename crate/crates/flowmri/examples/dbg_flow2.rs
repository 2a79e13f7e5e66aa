use flowmri::fields::*;
use flowmri::flow::*;
use nalgebra::DMatrix;

fn channel(nx: usize, ny: usize, pad: usize, u_peak: f64, nu: f64) -> NSParams {
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
    NSParams { sdf, inlet_edge: Side::Left, outlet_edge: Side::Right, g_i, g_o: BoundaryVector::zeros(&grid, Side::Right), nu }
}

fn main() {
    let x = channel(24, 40, 4, 1.0, 0.05);
    let cfg = DiscretizationConfig::new(0.05);
    let sys = assemble(&x, None, &cfg).unwrap();
    let csr = sys.a.to_csr();
    let n = 3 * 24 * 40;
    let mut d = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = csr.matvec(&e);
        for i in 0..n { if col[i] != 0.0 { d[(i, j)] = col[i]; } }
    }
    let svd = d.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("smallest singular values: {:?}", &sv[..6.min(sv.len())]);
    println!("largest: {:?}", &sv[sv.len()-2..]);
    // solve with dense LU and check residual
    let lu = d.clone().lu();
    let b = nalgebra::DVector::from_vec(sys.b.clone());
    match lu.solve(&b) {
        Some(z) => {
            let r = (&d * &z - &b).norm();
            println!("dense solve residual {}", r);
        }
        None => println!("dense LU failed"),
    }
}
