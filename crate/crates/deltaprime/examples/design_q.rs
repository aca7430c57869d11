//! Design coupling potentials realizing chosen interface parameters.

use deltaprime::design::{alphabeta_of, moments_for_target, standard_window, synthesize_q};
use deltaprime::pair::PerturbationPair;

fn main() {
    let pair = PerturbationPair::canonical_sine(4001).unwrap();
    let kappa = pair.kappa();
    let window = standard_window(pair.grid(), "quartic").unwrap();

    println!(
        "{:>6} {:>6} {:>12} {:>12} {:>12} {:>11} {:>8} {:>8}",
        "alpha", "beta", "a0", "a1", "a2", "gram", "alpha'", "beta'"
    );
    for (alpha, beta) in [(2.0, 1.0), (1.0, 1.0), (0.5, 3.0), (-2.0, 1.0), (5.0, -0.5)] {
        let target = moments_for_target(alpha, beta, kappa).unwrap();
        let q = synthesize_q(&pair, target, &window).unwrap();
        let back = alphabeta_of(q.a0, q.a1, q.a2, kappa);
        let (ab, bb) = match &back {
            Ok(p) => (p.alpha, p.beta),
            Err(_) => (f64::NAN, f64::NAN),
        };
        println!(
            "{alpha:>6.2} {beta:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>11.2e} {ab:>8.3} {bb:>8.3}",
            q.a0, q.a1, q.a2, q.gram_residual
        );
    }

    println!();
    for (alpha, beta) in [(3.0, 0.0), (1.0, 0.0)] {
        match moments_for_target(alpha, beta, kappa) {
            Err(e) => println!("({alpha}, {beta}) is rejected: {e}"),
            Ok(_) => unreachable!(),
        }
    }
}
