// quick diagnostic
use flowmri::fields::*;
fn main() {
    let n = 64usize;
    let h = 1.0 / n as f64;
    let grid = Grid::new(n, n, h, h, (0.5*h, 0.5*h)).unwrap();
    let (c, r) = (0.5, 0.3);
    let mask = ScalarField::from_fn(&grid, |x, y| if ((x-c).powi(2)+(y-c).powi(2)).sqrt() < r {1.0} else {0.0});
    let sdf = sdf_from_mask(&mask).unwrap();
    let mut worst = 0.0f64; let mut wloc=(0,0);
    for i2 in 1..n-1 { for i1 in 1..n-1 {
        if sdf.at(i1,i2).abs() < 5.0*h {
            let (gx,gy) = sdf.base.gradient_at(i1,i2);
            let m = (gx*gx+gy*gy).sqrt();
            if (m-1.0).abs() > worst { worst = (m-1.0).abs(); wloc=(i1,i2); }
        }
    }}
    println!("worst eikonal dev {} at {:?} phi {}", worst, wloc, sdf.at(wloc.0,wloc.1));
    // print neighborhood
    for j in (wloc.1.saturating_sub(2)..(wloc.1+3).min(n)).rev() {
        for i in wloc.0.saturating_sub(2)..(wloc.0+3).min(n) {
            print!("{:9.4} ", sdf.at(i,j)/h);
        }
        println!();
    }
}
