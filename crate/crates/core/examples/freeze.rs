use maxlab_core::pwl::unit_indicator;
use maxlab_core::*;
use std::time::Instant;

fn main() {
    let p2 = Exponent::new(2.0).unwrap();
    let sol = solve_ap(p2, 1e-12).unwrap();
    println!("a_2 = {:.12} at r = {:.12}", sol.a_p, sol.maximizing_radius);
    for pe in [1.5, 3.0, 5.0] {
        let s = solve_ap(Exponent::new(pe).unwrap(), 1e-12).unwrap();
        println!("a_{pe} = {:.12} at r = {:.12}", s.a_p, s.maximizing_radius);
    }

    // Criterion 8 fine run (k = 1).
    let t = Instant::now();
    let fine = MaximalConfig { refine_factor: 4, tail_grid_ratio: 1.0015, tail_tol: 1e-8 };
    let rep = iterate_m(&unit_indicator(), 1, p2, &fine).unwrap();
    println!("fine k=1: ||Mf||^2 = {:.12} (err {:.3e}) in {:?}", rep.norms[1]*rep.norms[1], rep.norms[1]*rep.norms[1] - 1.5, t.elapsed());

    // Criterion 8 coarse run (k = 6).
    let t = Instant::now();
    let coarse = MaximalConfig { refine_factor: 1, tail_grid_ratio: 1.05, tail_tol: 1e-14 };
    let rep = iterate_m(&unit_indicator(), 6, p2, &coarse).unwrap();
    println!("coarse k=6 in {:?}", t.elapsed());
    println!("  norms: {:?}", rep.norms);
    println!("  roots: {:?}", rep.roots);
    println!("  ratios: {:?}", rep.ratios);
    println!("  trunc bound p: {:.3e}, norm-scale {:.3e}, vs 1e-6*final = {:.3e}",
        rep.truncation_error_bound_p, rep.truncation_error_bound_p.powf(0.5), 1e-6 * rep.norms[6]);
    println!("  k=1 norm^2 = {:.9}", rep.norms[1]*rep.norms[1]);
}
