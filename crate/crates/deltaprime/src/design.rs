//! Mapping between coupling moments (a0, a1, a2) and interaction parameters
//! (alpha, beta), plus synthesis of a potential realizing target moments.

use crate::error::{Error, Result};
use crate::grid::{make_grid_function, pair_re, Grid, GridFunction};
use crate::linalg::{cond3, solve3};
use crate::pair::PerturbationPair;

/// Interface parameters of the two-parametric point interaction.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PointInteraction {
    pub alpha: f64,
    pub beta: f64,
}

impl PointInteraction {
    pub fn new(alpha: f64, beta: f64) -> Result<PointInteraction> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Config("alpha and beta must be finite".into()));
        }
        if alpha == 0.0 {
            return Err(Error::AlphaZero);
        }
        Ok(PointInteraction { alpha, beta })
    }
}

/// Potential with its realized moments against powers of omega.
#[derive(Clone, Debug)]
pub struct CouplingPotential {
    pub q: GridFunction<f64>,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub gram_residual: f64,
}

impl CouplingPotential {
    pub fn moments(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }
}

/// Target moments realizing the interaction (alpha, beta) for a given kappa.
pub fn moments_for_target(alpha: f64, beta: f64, kappa: f64) -> Result<[f64; 3]> {
    if alpha == 0.0 {
        return Err(Error::AlphaZero);
    }
    if kappa == 0.0 {
        return Err(Error::FreeOperatorLimit(kappa));
    }
    if beta == 0.0 {
        if alpha == 1.0 {
            return Err(Error::FreeTarget);
        }
        return Err(Error::ExcludedFamily);
    }
    if alpha == 1.0 {
        return Ok([0.0, 0.0, kappa * kappa / beta]);
    }
    let ab = alpha * beta;
    Ok([
        (1.0 - alpha) * (1.0 - alpha) / ab,
        kappa * (1.0 - alpha) / ab,
        kappa * kappa / ab,
    ])
}

/// Recover (alpha, beta) from realized moments.
pub fn alphabeta_of(a0: f64, a1: f64, a2: f64, kappa: f64) -> Result<PointInteraction> {
    let scale = a0.abs().max(a1.abs()).max(a2.abs());
    if a2.abs() <= 1e-14 * scale.max(1e-300) || a2 == 0.0 {
        return Err(Error::A2Zero);
    }
    let defect = (a0 * a2 - a1 * a1).abs();
    if defect > 1e-10 * (a1 * a1).max(1.0) {
        return Err(Error::CouplingConstraint(defect));
    }
    let den = a2 - kappa * a1;
    if den.abs() <= 1e-12 * (a2.abs() + (kappa * a1).abs()).max(1e-300) {
        return Err(Error::DegenerateAlpha);
    }
    PointInteraction::new(den / a2, kappa * kappa / den)
}

/// Built-in window profiles vanishing at the interval endpoints.
pub fn standard_window(grid: Grid, name: &str) -> Result<GridFunction<f64>> {
    match name {
        "quartic" => make_grid_function(grid, |x| {
            let s = 1.0 - x * x;
            s * s
        }),
        "cosine" => make_grid_function(grid, |x| {
            let c = (std::f64::consts::PI * x / 2.0).cos();
            c * c
        }),
        other => Err(Error::Config(format!("unknown window '{other}'"))),
    }
}

fn check_window(pair: &PerturbationPair, w: &GridFunction<f64>) -> Result<()> {
    pair.grid().ensure_same(&w.grid())?;
    let n = w.grid().len();
    let scale = w.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::BadWindow);
    }
    if w.values()[0].abs() > 1e-12 * scale || w.values()[n - 1].abs() > 1e-12 * scale {
        return Err(Error::BadWindow);
    }
    if w.values()[1..n - 1].iter().any(|&v| v <= 0.0) {
        return Err(Error::BadWindow);
    }
    Ok(())
}

/// Synthesize q = (c0 + c1*omega + c2*omega^2) * w with prescribed moments.
///
/// Solves the 3x3 Gram system, applies one residual refinement, and reports
/// the final Gram residual.
pub fn synthesize_q(
    pair: &PerturbationPair,
    target: [f64; 3],
    window: &GridFunction<f64>,
) -> Result<CouplingPotential> {
    check_window(pair, window)?;
    let grid = pair.grid();
    let n = grid.len();
    let om = pair.omega().values();
    let w = window.values();

    let basis: Vec<Vec<f64>> = (0..3)
        .map(|j| (0..n).map(|i| w[i] * om[i].powi(j)).collect())
        .collect();
    let mut gram = [[0.0f64; 3]; 3];
    for (k, row) in gram.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                acc += grid.simpson_weight(i) * basis[j][i] * om[i].powi(k as i32);
            }
            *entry = acc;
        }
    }
    let cond = cond3(gram);
    if cond > 1e12 {
        return Err(Error::WindowDegenerate(cond));
    }

    let mut c = solve3(gram, target)?;
    let assemble = |c: &[f64; 3]| -> GridFunction<f64> {
        GridFunction::from_values(
            grid,
            (0..n)
                .map(|i| c[0] * basis[0][i] + c[1] * basis[1][i] + c[2] * basis[2][i])
                .collect(),
        )
    };
    let measure = |q: &GridFunction<f64>| -> Result<[f64; 3]> {
        let mut m = [0.0f64; 3];
        for (k, mk) in m.iter_mut().enumerate() {
            let omk =
                GridFunction::from_values(grid, (0..n).map(|i| om[i].powi(k as i32)).collect());
            *mk = pair_re(&omk, q)?;
        }
        Ok(m)
    };

    let q = assemble(&c);
    let meas = measure(&q)?;
    let delta = solve3(
        gram,
        [
            target[0] - meas[0],
            target[1] - meas[1],
            target[2] - meas[2],
        ],
    )?;
    for (ci, di) in c.iter_mut().zip(&delta) {
        *ci += di;
    }
    let q = assemble(&c);
    let meas = measure(&q)?;

    let mut gram_residual = 0.0f64;
    for k in 0..3 {
        let mut acc = -target[k];
        for j in 0..3 {
            acc += gram[k][j] * c[j];
        }
        gram_residual += acc * acc;
    }
    let gram_residual = gram_residual.sqrt();

    Ok(CouplingPotential {
        q,
        a0: meas[0],
        a1: meas[1],
        a2: meas[2],
        gram_residual,
    })
}
