//! Construction and validation of the rank-two perturbation pair.

use crate::csvio;
use crate::error::{Error, Result};
use crate::grid::{
    antider2_pinned, cumsimpson, derivative, integral, make_grid_function, norm, Grid, GridFunction,
};
use std::f64::consts::PI;
use std::path::Path;

/// The pair (phi1, phi2) together with its antiderivatives and moments.
///
/// Both profiles have zero mean and vanishing first antiderivatives at the
/// endpoints; the antiderivatives are orthogonal and the norm product n1*n2
/// equals one. kappa = omega(1) must be nonzero.
#[derive(Clone, Debug)]
pub struct PerturbationPair {
    grid: Grid,
    phi1: GridFunction<f64>,
    phi2: GridFunction<f64>,
    p1: GridFunction<f64>,
    p2: GridFunction<f64>,
    pp1: GridFunction<f64>,
    pp2: GridFunction<f64>,
    n1: f64,
    n2: f64,
    m1: f64,
    m2: f64,
    omega: GridFunction<f64>,
    kappa: f64,
}

fn simpson_dot(f: &GridFunction<f64>, g: &[f64]) -> f64 {
    let gr = f.grid();
    (0..gr.len())
        .map(|i| gr.simpson_weight(i) * f.values()[i] * g[i])
        .sum()
}

fn antider_norm(grid: Grid, f: &[f64]) -> f64 {
    let gf = GridFunction::from_values(grid, f.to_vec());
    norm(&cumsimpson(&gf))
}

impl PerturbationPair {
    /// Orthonormalize two profiles, differentiate, and enforce the pair
    /// hypotheses up to quadrature accuracy.
    pub fn build(eta1: &GridFunction<f64>, eta2: &GridFunction<f64>) -> Result<PerturbationPair> {
        let grid = eta1.grid();
        grid.ensure_same(&eta2.grid())?;
        let n = grid.len();

        let mut e1 = eta1.values().to_vec();
        let r1 = norm(eta1);
        if r1 < 1e-8 {
            return Err(Error::LinearDependence(r1));
        }
        for v in &mut e1 {
            *v /= r1;
        }
        let e1f = GridFunction::from_values(grid, e1.clone());
        let mut e2 = eta2.values().to_vec();
        for _ in 0..2 {
            let c = simpson_dot(&e1f, &e2);
            for (v, w) in e2.iter_mut().zip(&e1) {
                *v -= c * w;
            }
        }
        let e2f = GridFunction::from_values(grid, e2.clone());
        let r2 = norm(&e2f);
        if r2 < 1e-8 {
            return Err(Error::LinearDependence(r2));
        }
        for v in &mut e2 {
            *v /= r2;
        }

        let mut f1 = derivative(&GridFunction::from_values(grid, e1)).into_values();
        let mut f2 = derivative(&GridFunction::from_values(grid, e2)).into_values();

        let vol = grid.right() - grid.left();
        for f in [&mut f1, &mut f2] {
            for _ in 0..2 {
                let gf = GridFunction::from_values(grid, f.clone());
                let mean = integral(&gf) / vol;
                if mean.abs() < 1e-3 * norm(&gf).max(1.0) {
                    for v in f.iter_mut() {
                        *v -= mean;
                    }
                }
            }
        }

        for _ in 0..2 {
            let p1 = cumsimpson(&GridFunction::from_values(grid, f1.clone()));
            let p2 = cumsimpson(&GridFunction::from_values(grid, f2.clone()));
            let c = simpson_dot(&p2, p1.values()) / simpson_dot(&p1, p1.values());
            for (v, w) in f2.iter_mut().zip(&f1) {
                *v -= c * w;
            }
        }

        let c1 = antider_norm(grid, &f1);
        for v in &mut f1 {
            *v /= c1;
        }
        let n1 = antider_norm(grid, &f1);
        let c2 = n1 * antider_norm(grid, &f2);
        for v in &mut f2 {
            *v /= c2;
        }
        let _ = n;
        Self::assemble(grid, f1, f2)
    }

    /// Rebuild a pair from raw profile samples without re-enforcement.
    pub fn from_components(grid: Grid, phi1: Vec<f64>, phi2: Vec<f64>) -> Result<PerturbationPair> {
        let f1 = GridFunction::new(grid, phi1)?;
        let f2 = GridFunction::new(grid, phi2)?;
        Self::assemble(grid, f1.into_values(), f2.into_values())
    }

    fn assemble(grid: Grid, f1: Vec<f64>, f2: Vec<f64>) -> Result<PerturbationPair> {
        let phi1 = GridFunction::new(grid, f1)?;
        let phi2 = GridFunction::new(grid, f2)?;
        let p1 = cumsimpson(&phi1);
        let p2 = cumsimpson(&phi2);
        let pp1 = antider2_pinned(&phi1);
        let pp2 = antider2_pinned(&phi2);
        let n1 = norm(&p1);
        let n2 = norm(&p2);
        let m1 = simpson_dot(&phi1, &grid.xs());
        let m2 = simpson_dot(&phi2, &grid.xs());
        let omega_vals: Vec<f64> = (0..grid.len())
            .map(|i| n2 * pp1.values()[i] - n1 * pp2.values()[i])
            .collect();
        let omega = GridFunction::from_values(grid, omega_vals);
        let kappa = omega.values()[grid.len() - 1];
        if kappa.abs() <= 1e-10 {
            return Err(Error::FreeOperatorLimit(kappa));
        }
        Ok(PerturbationPair {
            grid,
            phi1,
            phi2,
            p1,
            p2,
            pp1,
            pp2,
            n1,
            n2,
            m1,
            m2,
            omega,
            kappa,
        })
    }

    /// The built-in sine pair on [-1, 1].
    pub fn canonical_sine(n: usize) -> Result<PerturbationPair> {
        let grid = Grid::interval(n)?;
        let eta1 = make_grid_function(grid, |x| (PI * (x + 1.0) / 2.0).sin())?;
        let eta2 = make_grid_function(grid, |x| (PI * (x + 1.0)).sin())?;
        Self::build(&eta1, &eta2)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }
    pub fn phi1(&self) -> &GridFunction<f64> {
        &self.phi1
    }
    pub fn phi2(&self) -> &GridFunction<f64> {
        &self.phi2
    }
    /// First antiderivatives of the profiles.
    pub fn p1(&self) -> &GridFunction<f64> {
        &self.p1
    }
    pub fn p2(&self) -> &GridFunction<f64> {
        &self.p2
    }
    /// Second antiderivatives of the profiles.
    pub fn pp1(&self) -> &GridFunction<f64> {
        &self.pp1
    }
    pub fn pp2(&self) -> &GridFunction<f64> {
        &self.pp2
    }
    pub fn n1(&self) -> f64 {
        self.n1
    }
    pub fn n2(&self) -> f64 {
        self.n2
    }
    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn omega(&self) -> &GridFunction<f64> {
        &self.omega
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// kappa from the omega endpoint and from the moment formula
    /// n1*m2 - n2*m1; the two must agree.
    pub fn kappa_crosscheck(&self) -> (f64, f64) {
        (self.kappa, self.n1 * self.m2 - self.n2 * self.m1)
    }

    /// Check every pair hypothesis and report measured defects.
    pub fn validate(&self) -> PairValidationReport {
        let n = self.grid.len();
        let one = vec![1.0; n];
        let (k_om, k_m) = self.kappa_crosscheck();
        let omega_p = derivative(&self.omega);
        let checks = vec![
            PairCheck::new("mean_phi1", simpson_dot(&self.phi1, &one), 1e-10),
            PairCheck::new("mean_phi2", simpson_dot(&self.phi2, &one), 1e-10),
            PairCheck::new(
                "antiderivative_orthogonality",
                simpson_dot(&self.p1, self.p2.values()),
                1e-10,
            ),
            PairCheck::new("norm_product_minus_one", self.n1 * self.n2 - 1.0, 1e-12),
            PairCheck::new("p1_left", self.p1.values()[0], 1e-8),
            PairCheck::new("p1_right", self.p1.values()[n - 1], 1e-8),
            PairCheck::new("p2_right", self.p2.values()[n - 1], 1e-8),
            PairCheck::new(
                "pp1_right_plus_m1",
                self.pp1.values()[n - 1] + self.m1,
                1e-8,
            ),
            PairCheck::new(
                "pp2_right_plus_m2",
                self.pp2.values()[n - 1] + self.m2,
                1e-8,
            ),
            PairCheck::new("omega_left", self.omega.values()[0], 1e-8),
            PairCheck::new(
                "omega_right_minus_kappa",
                self.omega.values()[n - 1] - self.kappa,
                1e-12,
            ),
            PairCheck::new("omega_slope_left", omega_p.values()[0], 1e-6),
            PairCheck::new("omega_slope_right", omega_p.values()[n - 1], 1e-6),
            PairCheck::new("kappa_deficiency", (1e-10 - self.kappa.abs()).max(0.0), 0.0),
            PairCheck::new("kappa_crosscheck", k_om - k_m, 1e-8),
        ];
        PairValidationReport { checks }
    }

    /// Write the pair as CSV with columns x, phi1, phi2, omega.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        csvio::write_columns(
            path,
            &["x", "phi1", "phi2", "omega"],
            &[
                &self.grid.xs(),
                self.phi1.values(),
                self.phi2.values(),
                self.omega.values(),
            ],
        )
    }

    /// Read profiles back from CSV; derived quantities are recomputed.
    pub fn read_csv(path: &Path) -> Result<PerturbationPair> {
        let (header, cols) = csvio::read_columns(path)?;
        if header.len() < 3 || header[0] != "x" || header[1] != "phi1" || header[2] != "phi2" {
            return Err(Error::Csv(format!(
                "expected columns x, phi1, phi2[, omega] in {}",
                path.display()
            )));
        }
        let grid = csvio::grid_from_xs(&cols[0])?;
        Self::from_components(grid, cols[1].clone(), cols[2].clone())
    }
}

/// One named hypothesis check; passes when |measured| <= tolerance.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PairCheck {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl PairCheck {
    fn new(name: &'static str, measured: f64, tolerance: f64) -> PairCheck {
        PairCheck {
            name,
            measured,
            tolerance,
            pass: measured.abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PairValidationReport {
    pub checks: Vec<PairCheck>,
}

impl PairValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&PairCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, rescale_to_fast};

    fn canonical() -> PerturbationPair {
        PerturbationPair::canonical_sine(4001).unwrap()
    }

    #[test]
    fn canonical_pair_values() {
        let p = canonical();
        assert!((p.n1() - 1.0).abs() < 1e-6);
        assert!((p.n2() - 1.0).abs() < 1e-6);
        assert!((p.m1() + 4.0 / PI).abs() < 1e-6, "m1 = {}", p.m1());
        assert!(p.m2().abs() < 1e-6);
        assert!((p.kappa() - 4.0 / PI).abs() < 1e-6);
        let mid = p.grid().len() / 2;
        assert!(p.omega().values()[mid].abs() < 1e-6);
    }

    #[test]
    fn canonical_pair_validates() {
        let p = canonical();
        let rep = p.validate();
        assert!(rep.all_pass(), "failed: {:?}", rep.failed());
    }

    #[test]
    fn kappa_crosscheck_agrees() {
        let p = canonical();
        let (a, b) = p.kappa_crosscheck();
        assert!((a - b).abs() < 1e-8);
        assert!((a - 4.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn zero_second_moment_specialization() {
        let p = canonical();
        let (_, k_m) = p.kappa_crosscheck();
        assert!((k_m + p.n2() * p.m1()).abs() < 1e-12);
    }

    #[test]
    fn dependent_profiles_are_rejected() {
        let grid = Grid::interval(801).unwrap();
        let e1 = make_grid_function(grid, |x| (PI * (x + 1.0) / 2.0).sin()).unwrap();
        let e2 = e1.map(|v| 2.0 * v);
        assert!(matches!(
            PerturbationPair::build(&e1, &e2),
            Err(Error::LinearDependence(_))
        ));
    }

    #[test]
    fn negated_profiles_keep_kappa_magnitude() {
        let grid = Grid::interval(2001).unwrap();
        let e1 = make_grid_function(grid, |x| (PI * (x + 1.0) / 2.0).sin()).unwrap();
        let e2 = make_grid_function(grid, |x| (PI * (x + 1.0)).sin()).unwrap();
        let p = PerturbationPair::build(&e1, &e2).unwrap();
        let q = PerturbationPair::build(&e1.map(|v| -v), &e2.map(|v| -v)).unwrap();
        assert!((p.kappa().abs() - q.kappa().abs()).abs() < 1e-12);
    }

    #[test]
    fn tampered_components_fail_validation() {
        let p = canonical();
        let doubled = PerturbationPair::from_components(
            p.grid(),
            p.phi1().values().to_vec(),
            p.phi2().values().iter().map(|v| 2.0 * v).collect(),
        )
        .unwrap();
        let rep = doubled.validate();
        assert!(rep
            .failed()
            .iter()
            .any(|c| c.name == "norm_product_minus_one"));

        let shifted = PerturbationPair::from_components(
            p.grid(),
            p.phi1().values().iter().map(|v| v + 0.1).collect(),
            p.phi2().values().to_vec(),
        )
        .unwrap();
        let rep = shifted.validate();
        assert!(rep.failed().iter().any(|c| c.name == "mean_phi1"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("deltaprime_pair_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pair.csv");
        let p = canonical();
        p.write_csv(&path).unwrap();
        let q = PerturbationPair::read_csv(&path).unwrap();
        assert!((p.kappa() - q.kappa()).abs() < 1e-12);
        assert!(q.validate().all_pass());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn omega_curvature_matches_profiles() {
        let p = canonical();
        let om_pp = crate::grid::second_derivative(p.omega());
        let g = p.grid();
        let mut worst = 0.0f64;
        for i in 2..g.len() - 2 {
            let want = p.n2() * p.phi1().values()[i] - p.n1() * p.phi2().values()[i];
            worst = worst.max((om_pp.values()[i] - want).abs());
        }
        assert!(worst < 1e-6, "worst = {worst}");
    }

    #[test]
    fn omega_rescales_to_fast_variable() {
        let p = canonical();
        let fast = Grid::interval(401).unwrap();
        let r = rescale_to_fast(p.omega(), 0.5, fast).unwrap();
        assert!(r.values()[0] < r.values()[400]);
        let probe = make_grid_function(fast, |t| {
            let x = 0.5 * t;
            2.0 / PI * (1.0 + (PI * x / 2.0).sin()) - 1.0 / PI * (1.0 + (PI * x).cos())
        })
        .unwrap();
        let diff = GridFunction::from_values(
            fast,
            r.values()
                .iter()
                .zip(probe.values())
                .map(|(a, b)| a - b)
                .collect(),
        );
        assert!(inner_product(&diff, &diff).unwrap().sqrt() < 1e-4);
    }
}
