//! Experiment configuration and the four report-producing commands backing
//! the command-line front end: verify, design, converge, diagnose.

use crate::csvio;
use crate::design::{moments_for_target, standard_window, synthesize_q, PointInteraction};
use crate::diagnostics::run_diagnostics;
use crate::error::{Error, Result};
use crate::grid::norm;
use crate::halfbound::{g_functionals, halfbound_residuals, random_h, solvability_data, solve_bvp};
use crate::linalg::NormalSampler;
use crate::pair::PerturbationPair;
use crate::resolvent::{run_sweep, GapSampling};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which perturbation pair to run on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSpec {
    /// Builtin profile family; currently only "sine".
    Builtin(String),
    /// CSV file with columns x, phi1, phi2 as written by PerturbationPair.
    Csv { csv: PathBuf },
}

/// Full description of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::pair")]
    pub pair: PairSpec,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::beta")]
    pub beta: f64,
    /// Interface parameters the diagnostics run against; default to the
    /// design targets, override to probe the consistency manifold.
    #[serde(default)]
    pub operator_alpha: Option<f64>,
    #[serde(default)]
    pub operator_beta: Option<f64>,
    #[serde(default = "defaults::zeta")]
    pub zeta: Vec<Complex64>,
    #[serde(default = "defaults::eps")]
    pub eps: Vec<f64>,
    /// Nodes on the fast interval [-1, 1].
    #[serde(default = "defaults::grid_n")]
    pub grid_n: usize,
    /// Line mesh rule: h = eps / points_per_eps.
    #[serde(default = "defaults::points_per_eps")]
    pub points_per_eps: usize,
    /// Line half width L.
    #[serde(default = "defaults::half_width")]
    pub half_width: f64,
    #[serde(default = "defaults::window")]
    pub window: String,
    #[serde(default = "defaults::forcing")]
    pub forcing: String,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

mod defaults {
    use super::*;

    pub fn pair() -> PairSpec {
        PairSpec::Builtin("sine".into())
    }
    pub fn alpha() -> f64 {
        2.0
    }
    pub fn beta() -> f64 {
        1.0
    }
    pub fn zeta() -> Vec<Complex64> {
        vec![Complex64::new(0.0, 1.0)]
    }
    pub fn eps() -> Vec<f64> {
        vec![0.2, 0.1, 0.05, 0.025, 0.0125]
    }
    pub fn grid_n() -> usize {
        4001
    }
    pub fn points_per_eps() -> usize {
        64
    }
    pub fn half_width() -> f64 {
        15.0
    }
    pub fn window() -> String {
        "quartic".into()
    }
    pub fn forcing() -> String {
        "gaussian".into()
    }
    pub fn out_dir() -> PathBuf {
        "out".into()
    }
    pub fn seed() -> u64 {
        42
    }
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        serde_json::from_str("{}").expect("defaults are total")
    }
}

impl ExperimentConfig {
    /// Enforce the config invariants; violations are config errors.
    pub fn validate(&self) -> Result<()> {
        if let PairSpec::Builtin(name) = &self.pair {
            if name != "sine" {
                return Err(Error::Config(format!("unknown builtin pair '{name}'")));
            }
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::Config("alpha and beta must be finite".into()));
        }
        if self.alpha == 0.0 {
            return Err(Error::Config("alpha must be nonzero".into()));
        }
        if let Some(a) = self.operator_alpha {
            if !a.is_finite() || a == 0.0 {
                return Err(Error::Config(
                    "operator_alpha must be finite and nonzero".into(),
                ));
            }
        }
        if let Some(b) = self.operator_beta {
            if !b.is_finite() {
                return Err(Error::Config("operator_beta must be finite".into()));
            }
        }
        if self.zeta.is_empty() {
            return Err(Error::Config("need at least one zeta".into()));
        }
        for z in &self.zeta {
            if !z.is_finite() {
                return Err(Error::Config("zeta must be finite".into()));
            }
            if z.im == 0.0 {
                return Err(Error::Config(format!("zeta = {z} must be nonreal")));
            }
        }
        if self.eps.is_empty() {
            return Err(Error::Config("need at least one eps".into()));
        }
        for e in &self.eps {
            if !(e.is_finite() && *e > 0.0 && *e <= 1.0) {
                return Err(Error::Config(format!("eps = {e} must lie in (0, 1]")));
            }
        }
        if self.eps.windows(2).any(|p| p[1] >= p[0]) {
            return Err(Error::Config(
                "eps values must be strictly decreasing".into(),
            ));
        }
        if self.points_per_eps == 0 {
            return Err(Error::Config("points_per_eps must be positive".into()));
        }
        match self.forcing.as_str() {
            "gaussian" | "zero" => {}
            other => return Err(Error::Config(format!("unknown forcing '{other}'"))),
        }
        Ok(())
    }

    /// Load, parse and validate a JSON config file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn build_pair(&self) -> Result<PerturbationPair> {
        match &self.pair {
            PairSpec::Builtin(_) => PerturbationPair::canonical_sine(self.grid_n),
            PairSpec::Csv { csv } => PerturbationPair::read_csv(csv),
        }
    }

    pub fn interaction(&self) -> Result<PointInteraction> {
        PointInteraction::new(self.alpha, self.beta)
    }

    /// Interaction the operators run against, with any overrides applied.
    pub fn operator_interaction(&self) -> Result<PointInteraction> {
        PointInteraction::new(
            self.operator_alpha.unwrap_or(self.alpha),
            self.operator_beta.unwrap_or(self.beta),
        )
    }

    pub fn forcing_rule(&self) -> fn(f64) -> Complex64 {
        match self.forcing.as_str() {
            "zero" => |_| Complex64::new(0.0, 0.0),
            _ => default_forcing,
        }
    }
}

/// Unit-norm Gaussian used as the default sweep forcing.
pub fn default_forcing(x: f64) -> Complex64 {
    Complex64::new(
        (2.0 / std::f64::consts::PI).powf(0.25) * (-x * x).exp(),
        0.0,
    )
}

/// One named check inside verify.json.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckEntry {
    fn new(name: &str, measured: f64, tolerance: f64) -> CheckEntry {
        CheckEntry {
            name: name.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
        }
    }
}

/// Contents of verify.json.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckEntry>,
    pub all_pass: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Run the pair, kernel and boundary-value-problem check suite and write
/// verify.json; returns 0 when every check passes, 1 otherwise.
pub fn cmd_verify(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let pair = config.build_pair()?;

    let mut checks = Vec::new();
    let report = pair.validate();
    for c in &report.checks {
        checks.push(CheckEntry::new(c.name, c.measured, c.tolerance));
    }

    let (k_end, k_mom) = pair.kappa_crosscheck();
    checks.push(CheckEntry::new(
        "kappa_crosscheck",
        (k_end - k_mom).abs(),
        1e-8,
    ));

    let hb = halfbound_residuals(&pair)?;
    checks.push(CheckEntry::new("b_kills_constants", hb.r_const, 1e-10));
    checks.push(CheckEntry::new("b_kills_omega", hb.r_omega, 1e-6));

    let mut sampler = NormalSampler::new(config.seed);
    let mut worst_end = 0.0f64;
    let mut worst_resid = 0.0f64;
    let mut worst_g = 0.0f64;
    for trial in 0..10 {
        let h = random_h(pair.grid(), &mut sampler, trial % 2 == 0);
        let nh = norm(&h);
        let data = solvability_data(&pair, &h)?;
        let sol = solve_bvp(&pair, &data)?;
        let n = pair.grid().len();
        let ends = sol.v.values()[0].abs().max(sol.v.values()[n - 1].abs());
        worst_end = worst_end.max(ends);
        worst_resid = worst_resid.max(sol.residual / nh.max(1e-300));
        let (g1, g2) = g_functionals(&pair, &h, data.a)?;
        worst_g = worst_g.max((g1 - g2).abs() / (1.0 + nh));
    }
    checks.push(CheckEntry::new("bvp_endpoint_values", worst_end, 1e-8));
    checks.push(CheckEntry::new("bvp_relative_residual", worst_resid, 1e-6));
    checks.push(CheckEntry::new("bvp_g1_equals_g2", worst_g, 1e-10));

    let all_pass = checks.iter().all(|c| c.pass);
    write_json(
        &out_dir.join("verify.json"),
        &VerifyReport { checks, all_pass },
    )?;
    Ok(if all_pass { 0 } else { 1 })
}

/// Contents of design.json.
#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub gram_residual: f64,
}

/// Design the coupling potential for the configured target and write q.csv
/// plus design.json; the excluded beta = 0, alpha != 1 family exits 1.
pub fn cmd_design(config: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let pair = config.build_pair()?;
    let target = match moments_for_target(config.alpha, config.beta, pair.kappa()) {
        Ok(t) => t,
        Err(e @ (Error::ExcludedFamily | Error::FreeTarget)) => {
            eprintln!("design: {e}");
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    let window = standard_window(pair.grid(), &config.window)?;
    let q = synthesize_q(&pair, target, &window)?;

    let xs = pair.grid().xs();
    csvio::write_columns(&out_dir.join("q.csv"), &["x", "q"], &[&xs, q.q.values()])?;
    write_json(
        &out_dir.join("design.json"),
        &DesignReport {
            alpha: config.alpha,
            beta: config.beta,
            kappa: pair.kappa(),
            a0: q.a0,
            a1: q.a1,
            a2: q.a2,
            gram_residual: q.gram_residual,
        },
    )?;
    Ok(0)
}

/// Contents of rate.json (one per zeta).
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub zeta: Complex64,
    pub alpha: f64,
    pub beta: f64,
}

fn indexed(out_dir: &Path, stem: &str, ext: &str, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        out_dir.join(format!("{stem}.{ext}"))
    } else {
        out_dir.join(format!("{stem}_{}.{ext}", index + 1))
    }
}

/// Run the gap sweep for every configured zeta, writing sweep.csv and
/// rate.json per zeta; returns 0 iff every fitted slope is at least 0.45
/// and every gap sequence is strictly decreasing.
pub fn cmd_converge(config: &ExperimentConfig, out_dir: &Path, parallel: bool) -> Result<i32> {
    config.validate()?;
    if config.eps.len() < 3 {
        return Err(Error::FitInput);
    }
    let pair = config.build_pair()?;
    let target = moments_for_target(config.alpha, config.beta, pair.kappa())?;
    let window = standard_window(pair.grid(), &config.window)?;
    let q = synthesize_q(&pair, target, &window)?;
    let interaction = config.operator_interaction()?;
    let sampling = GapSampling {
        seed: config.seed,
        ..GapSampling::default()
    };

    let mut ok = true;
    let count = config.zeta.len();
    for (i, &zeta) in config.zeta.iter().enumerate() {
        let report = run_sweep(
            &pair,
            &q,
            &interaction,
            zeta,
            &config.eps,
            config.half_width,
            config.points_per_eps,
            &sampling,
            parallel,
        )?;
        let eps: Vec<f64> = report.entries.iter().map(|e| e.epsilon).collect();
        let gaps: Vec<f64> = report.entries.iter().map(|e| e.gap).collect();
        let iters: Vec<f64> = report.entries.iter().map(|e| e.iterations as f64).collect();
        let warns: Vec<f64> = report.entries.iter().map(|e| e.warn as u8 as f64).collect();
        csvio::write_columns(
            &indexed(out_dir, "sweep", "csv", i, count),
            &["epsilon", "gap", "iterations", "warn"],
            &[&eps, &gaps, &iters, &warns],
        )?;
        write_json(
            &indexed(out_dir, "rate", "json", i, count),
            &RateReport {
                slope: report.slope,
                intercept: report.intercept,
                r2: report.r2,
                zeta: report.zeta,
                alpha: interaction.alpha,
                beta: interaction.beta,
            },
        )?;
        let decreasing = gaps.windows(2).all(|p| p[1] < p[0]);
        if report.slope < 0.45 || !decreasing {
            ok = false;
        }
    }
    Ok(if ok { 0 } else { 1 })
}

/// Run the approximate-solution diagnostics across the eps list and write
/// diagnostics.csv; returns 0 iff the zero-terms residuals pass, so any
/// operator override off the consistency manifold exits 1.
pub fn cmd_diagnose(config: &ExperimentConfig, out_dir: &Path, parallel: bool) -> Result<i32> {
    config.validate()?;
    let pair = config.build_pair()?;
    let target = moments_for_target(config.alpha, config.beta, pair.kappa())?;
    let window = standard_window(pair.grid(), &config.window)?;
    let q = synthesize_q(&pair, target, &window)?;
    let interaction = config.operator_interaction()?;
    let zeta = config.zeta[0];
    let rule = config.forcing_rule();

    let sweep = run_diagnostics(
        &pair,
        &q,
        &interaction,
        zeta,
        &config.eps,
        config.half_width,
        config.points_per_eps,
        rule,
        parallel,
    )?;

    let cols: [Vec<f64>; 6] = [
        sweep.rows.iter().map(|r| r.epsilon).collect(),
        sweep.rows.iter().map(|r| r.jump_sum).collect(),
        sweep.rows.iter().map(|r| r.xi).collect(),
        sweep.rows.iter().map(|r| r.eta).collect(),
        sweep.rows.iter().map(|r| r.residual).collect(),
        sweep.rows.iter().map(|r| r.y_minus_u).collect(),
    ];
    csvio::write_columns(
        &out_dir.join("diagnostics.csv"),
        &["epsilon", "jump_sum", "xi", "eta", "residual", "y_minus_u"],
        &[&cols[0], &cols[1], &cols[2], &cols[3], &cols[4], &cols[5]],
    )?;
    if !sweep.zero_terms_pass() {
        eprintln!(
            "diagnose: zero-terms residual {:.6e} exceeds 1e-7 * (||f|| + 1); \
             the coupling does not realize the requested interaction",
            sweep.zero_terms_worst
        );
        return Ok(1);
    }
    Ok(0)
}

/// Map an error to the conventional exit code: bad configuration and
/// impossible-fit preconditions are usage errors (2), anything else is a
/// runtime failure (1).
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::FitInput => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir =
            std::env::temp_dir().join(format!("deltaprime_exp_{name}_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn defaults_validate_and_round_trip() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
        let again = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = ExperimentConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));

        let bad = ExperimentConfig {
            eps: vec![0.1, 0.2],
            ..Default::default()
        };
        assert!(bad.validate().is_err());

        let bad = ExperimentConfig {
            zeta: vec![Complex64::new(1.0, 0.0)],
            ..Default::default()
        };
        assert!(bad.validate().is_err());

        let bad = ExperimentConfig {
            pair: PairSpec::Builtin("cosine".into()),
            ..Default::default()
        };
        assert!(bad.validate().is_err());

        let parsed: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"alpha": 2.0, "unknown_field": 1}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn verify_passes_on_the_builtin_pair() {
        let dir = tmp("verify");
        let config = ExperimentConfig::default();
        let code = cmd_verify(&config, &dir).unwrap();
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(dir.join("verify.json")).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(report["all_pass"], serde_json::Value::Bool(true));
        assert!(report["checks"].as_array().unwrap().len() >= 8);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn verify_flags_a_broken_pair() {
        let dir = tmp("verify_bad");
        let grid = crate::grid::Grid::interval(2001).unwrap();
        let good = PerturbationPair::canonical_sine(2001).unwrap();
        let mut phi1 = good.phi1().values().to_vec();
        for v in phi1.iter_mut() {
            *v += 0.05;
        }
        let broken =
            PerturbationPair::from_components(grid, phi1, good.phi2().values().to_vec()).unwrap();
        let csv = dir.join("pair.csv");
        broken.write_csv(&csv).unwrap();

        let config = ExperimentConfig {
            pair: PairSpec::Csv { csv },
            grid_n: 2001,
            ..Default::default()
        };
        let code = cmd_verify(&config, &dir).unwrap();
        assert_eq!(code, 1);
        let text = std::fs::read_to_string(dir.join("verify.json")).unwrap();
        assert!(text.contains("\"pass\": false"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn design_emits_the_expected_moments() {
        let dir = tmp("design");
        let mut config = ExperimentConfig {
            grid_n: 2001,
            ..Default::default()
        };
        assert_eq!(cmd_design(&config, &dir).unwrap(), 0);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("design.json")).unwrap())
                .unwrap();
        assert!((report["a0"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
        let (_, cols) = csvio::read_columns(&dir.join("q.csv")).unwrap();
        assert_eq!(cols[0].len(), 2001);

        config.alpha = 3.0;
        config.beta = 0.0;
        assert_eq!(cmd_design(&config, &dir).unwrap(), 1);

        config.alpha = 1.0;
        config.beta = 1.0;
        assert_eq!(cmd_design(&config, &dir).unwrap(), 0);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("design.json")).unwrap())
                .unwrap();
        assert!(report["a0"].as_f64().unwrap().abs() <= 1e-12);
        assert!(report["a1"].as_f64().unwrap().abs() <= 1e-12);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn converge_rejects_short_sweeps() {
        let dir = tmp("converge_short");
        let config = ExperimentConfig {
            eps: vec![0.1],
            ..Default::default()
        };
        config.validate().unwrap();
        let err = cmd_converge(&config, &dir, false).unwrap_err();
        assert_eq!(exit_code_for(&err), 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn diagnose_gates_on_the_zero_terms() {
        let dir = tmp("diagnose");
        let mut config = ExperimentConfig {
            grid_n: 2001,
            eps: vec![0.2, 0.1],
            ..Default::default()
        };
        assert_eq!(cmd_diagnose(&config, &dir, false).unwrap(), 0);
        let (hdr, cols) = csvio::read_columns(&dir.join("diagnostics.csv")).unwrap();
        assert_eq!(
            hdr,
            vec!["epsilon", "jump_sum", "xi", "eta", "residual", "y_minus_u"]
        );
        assert_eq!(cols[0], vec![0.2, 0.1]);
        assert!(cols[1][1] < cols[1][0]);

        config.operator_alpha = Some(2.2);
        assert_eq!(cmd_diagnose(&config, &dir, false).unwrap(), 1);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn zero_forcing_zeroes_every_column() {
        let dir = tmp("diagnose_zero");
        let config = ExperimentConfig {
            grid_n: 2001,
            eps: vec![0.2, 0.1],
            forcing: "zero".into(),
            ..Default::default()
        };
        assert_eq!(cmd_diagnose(&config, &dir, false).unwrap(), 0);
        let (_, cols) = csvio::read_columns(&dir.join("diagnostics.csv")).unwrap();
        for col in &cols[1..] {
            assert!(col.iter().all(|v| v.abs() <= 1e-12));
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
