//! Reflection and transmission of the limit interaction; unitarity check.

use deltaprime::design::PointInteraction;
use deltaprime::diagnostics::scattering_coeffs;
use deltaprime::linalg::NormalSampler;

fn main() {
    let classic = PointInteraction::new(1.0, 1.0).unwrap();
    println!("alpha = 1, beta = 1:");
    println!(
        "{:>6} {:>10} {:>10} {:>12}",
        "k", "|r|^2", "|t|^2", "defect"
    );
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let (r, t) = scattering_coeffs(&classic, k).unwrap();
        println!(
            "{k:>6.2} {:>10.6} {:>10.6} {:>12.3e}",
            r.norm_sqr(),
            t.norm_sqr(),
            (r.norm_sqr() + t.norm_sqr() - 1.0).abs()
        );
    }
    let (r, t) = scattering_coeffs(&classic, 1.0).unwrap();
    println!(
        "\nat k = 1: |r|^2 = {:.12} (expect 0.2), |t|^2 = {:.12} (expect 0.8)",
        r.norm_sqr(),
        t.norm_sqr()
    );

    let mut sampler = NormalSampler::new(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = sampler.normal() * 2.0;
        if alpha.abs() < 1e-3 {
            continue;
        }
        let beta = sampler.normal() * 2.0;
        let k = sampler.normal().abs() * 3.0 + 1e-3;
        let p = PointInteraction::new(alpha, beta).unwrap();
        let (r, t) = scattering_coeffs(&p, k).unwrap();
        worst = worst.max((r.norm_sqr() + t.norm_sqr() - 1.0).abs());
    }
    println!("worst unitarity defect over 1000 random (alpha, beta, k): {worst:.3e}");
}
