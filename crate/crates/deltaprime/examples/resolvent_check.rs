//! Resolvent solvers against their oracles: the free kernel formula and the
//! interface conditions of the limit operator.

use deltaprime::design::{moments_for_target, standard_window, synthesize_q, PointInteraction};
use deltaprime::grid::{make_grid_function, norm};
use deltaprime::pair::PerturbationPair;
use deltaprime::resolvent::{
    eps_resolvent, free_resolvent, free_resolvent_kernel, limit_resolvent, LineProblem,
};
use num_complex::Complex64;

fn main() {
    let zeta = Complex64::new(0.0, 1.0);
    let problem = LineProblem::new(15.0, 19201, zeta).unwrap();
    let f = make_grid_function(problem.grid(), |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();

    // Free line: banded solve against the closed-form kernel quadrature.
    let banded = free_resolvent(&problem, &f).unwrap();
    let kernel = free_resolvent_kernel(&problem, &f).unwrap();
    let diff: Vec<Complex64> = banded
        .u
        .values()
        .iter()
        .zip(kernel.values())
        .map(|(a, b)| a - b)
        .collect();
    let rel =
        norm(&deltaprime::grid::GridFunction::new(problem.grid(), diff).unwrap()) / norm(&kernel);
    println!("free resolvent vs kernel quadrature: {rel:.3e}");

    // Limit operator: the solution must satisfy the interface conditions.
    let interaction = PointInteraction::new(2.0, 1.0).unwrap();
    let sol = limit_resolvent(&interaction, &problem, &f).unwrap();
    let b = &sol.boundary;
    let c1 = (b.u_plus - (interaction.alpha * b.u_minus + interaction.beta * b.du_minus)).norm();
    let c2 = (b.du_plus - b.du_minus / interaction.alpha).norm();
    println!("limit solve: residual {:.3e}", sol.residual);
    println!("interface value condition:      {c1:.3e}");
    println!("interface derivative condition: {c2:.3e}");

    // Singular family member at eps = 0.1.
    let pair = PerturbationPair::canonical_sine(4001).unwrap();
    let target = moments_for_target(2.0, 1.0, pair.kappa()).unwrap();
    let window = standard_window(pair.grid(), "quartic").unwrap();
    let q = synthesize_q(&pair, target, &window).unwrap();
    let eps = 0.1;
    let problem = LineProblem::for_eps(15.0, eps, 64, zeta).unwrap();
    let f = make_grid_function(problem.grid(), |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let se = eps_resolvent(&pair, &q, &problem, eps, &f).unwrap();
    println!(
        "\neps = {eps}: singular-family residual {:.3e}",
        se.residual
    );
    println!(
        "traces at the window edge: u(-eps) = {:.6}, u(+eps) = {:.6}",
        se.boundary.u_minus, se.boundary.u_plus
    );
}
