//! The geometric factor depends on the image of the path, not on its timing.

use leafquant::scenario::preset;

fn main() {
    let built = preset("reparam_pair").unwrap().build().unwrap();
    let dh = &built.system;
    let t1 = dh.span().1;
    let segments = 8192;
    let mut factors = Vec::new();
    for (src, warp) in built.config.path.warps.iter().zip(&built.warps) {
        let warped = dh.with_path(dh.path().reparametrize(warp).unwrap()).unwrap();
        let u = leafquant::evolve::geometric_factor(&warped, t1, segments).unwrap();
        println!("warp {src:>16}: chi(pi/2) = {:?}", warped.path().position(std::f64::consts::FRAC_PI_2).unwrap());
        factors.push(u);
    }
    println!("||U_geo(warp 2) - U_geo(warp 1)|| = {:.2e}", (&factors[1] - &factors[0]).norm());

    match dh.path().reparametrize(&leafquant::parse_expr("t - 0.9*sin(2*t)", &["t"]).unwrap()) {
        Err(e) => println!("non-monotone warp rejected: {e}"),
        Ok(_) => unreachable!(),
    }
}
