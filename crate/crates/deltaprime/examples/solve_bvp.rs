//! Solve the interior boundary value problem B v = h for random forcings.

use deltaprime::grid::norm;
use deltaprime::halfbound::{g_functionals, random_h, solvability_data, solve_bvp};
use deltaprime::linalg::NormalSampler;
use deltaprime::pair::PerturbationPair;

fn main() {
    let pair = PerturbationPair::canonical_sine(4001).unwrap();
    let n = pair.grid().len();
    let mut sampler = NormalSampler::new(1);

    println!(
        "{:>5} {:>13} {:>13} {:>13} {:>13}",
        "trial", "|v(-1)|", "|v(1)|", "resid/||h||", "|g1 - g2|"
    );
    for trial in 0..8 {
        let h = random_h(pair.grid(), &mut sampler, trial % 2 == 0);
        let data = solvability_data(&pair, &h).unwrap();
        let sol = solve_bvp(&pair, &data).unwrap();
        let (g1, g2) = g_functionals(&pair, &h, data.a).unwrap();
        println!(
            "{trial:>5} {:>13.3e} {:>13.3e} {:>13.3e} {:>13.3e}",
            sol.v.values()[0].abs(),
            sol.v.values()[n - 1].abs(),
            sol.residual / norm(&h),
            (g1 - g2).abs()
        );
    }
    println!("\nthe slope data (a, b) always satisfy the two solvability conditions,");
    println!("so the particular solution exists and its endpoint values vanish");
}
