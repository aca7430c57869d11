//! The half-bound operator B kills constants and the function omega.

use deltaprime::grid::{make_grid_function, norm};
use deltaprime::halfbound::{apply_b, halfbound_residuals};
use deltaprime::pair::PerturbationPair;

fn main() {
    for n in [4001usize, 8001] {
        let pair = PerturbationPair::canonical_sine(n).unwrap();
        let report = halfbound_residuals(&pair).unwrap();
        println!(
            "n = {n}: ||B 1|| = {:.3e}   ||B omega|| / ||omega|| = {:.3e}",
            report.r_const, report.r_omega
        );
    }

    let pair = PerturbationPair::canonical_sine(4001).unwrap();
    let g = make_grid_function(pair.grid(), |x| x * x - x / 3.0).unwrap();
    let bg = apply_b(&pair, &g).unwrap();
    println!(
        "\na generic function is not in the kernel: ||B g|| / ||g|| = {:.3e}",
        norm(&bg) / norm(&g)
    );
}
