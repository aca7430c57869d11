//! Discrete resolvents on a truncated line: the singular rank-two family,
//! its point-interaction limit, and the operator-norm gap between them.

use crate::design::{CouplingPotential, PointInteraction};
use crate::error::{Error, Result};
use crate::grid::{cumsimpson, interp_linear, Grid, GridFunction};
use crate::linalg::{fit_line, solve2, vec_norm, Banded, BandedLu, NormalSampler};
use crate::pair::PerturbationPair;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

const WINDOW_SLACK: f64 = 1.0 + 1e-14;

/// Principal square root of `-zeta`, normalized to positive real part.
pub fn decay_rate(zeta: Complex64) -> Complex64 {
    let s = (-zeta).sqrt();
    if s.re < 0.0 {
        -s
    } else {
        s
    }
}

/// Truncated line [-L, L] with a spectral parameter off the real axis and an
/// optional compactly supported potential.
#[derive(Clone, Debug)]
pub struct LineProblem {
    grid: Grid,
    zeta: Complex64,
    potential: Option<GridFunction<f64>>,
}

impl LineProblem {
    pub fn new(half_width: f64, n: usize, zeta: Complex64) -> Result<LineProblem> {
        if !zeta.is_finite() {
            return Err(Error::LineProblem("zeta must be finite".into()));
        }
        if zeta.im == 0.0 {
            return Err(Error::RealZeta);
        }
        let budget = 5.0 / decay_rate(zeta).re;
        if !(half_width.is_finite() && half_width >= budget) {
            return Err(Error::LineProblem(format!(
                "half-width {half_width} is below the decay budget {budget:.3}"
            )));
        }
        let grid = Grid::new(-half_width, half_width, n)?;
        Ok(LineProblem {
            grid,
            zeta,
            potential: None,
        })
    }

    /// Line whose mesh width is `eps / points_per_eps`.
    pub fn for_eps(
        half_width: f64,
        eps: f64,
        points_per_eps: usize,
        zeta: Complex64,
    ) -> Result<LineProblem> {
        if !(eps > 0.0 && eps.is_finite()) || points_per_eps == 0 {
            return Err(Error::LineProblem(format!(
                "need eps > 0 and a positive mesh rule, got eps = {eps}, {points_per_eps} points"
            )));
        }
        let h = eps / points_per_eps as f64;
        let half_count = (half_width / h).round() as usize;
        LineProblem::new(half_width, 2 * half_count + 1, zeta)
    }

    /// Attach a potential; it must vanish in a neighborhood of the endpoints.
    pub fn with_potential(mut self, potential: GridFunction<f64>) -> Result<LineProblem> {
        self.grid.ensure_same(&potential.grid())?;
        if let Some((lo, hi)) = potential.support() {
            if lo == 0 || hi == self.grid.len() - 1 {
                return Err(Error::LineProblem(
                    "potential must be supported strictly inside the line".into(),
                ));
            }
        }
        self.potential = Some(potential);
        Ok(self)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    pub fn potential(&self) -> Option<&GridFunction<f64>> {
        self.potential.as_ref()
    }

    fn potential_values(&self) -> Vec<f64> {
        match &self.potential {
            Some(v) => v.values().to_vec(),
            None => vec![0.0; self.grid.len()],
        }
    }
}

/// One-sided traces of a solve at the interaction point (or at the window
/// edges for the singular family).
#[derive(Clone, Copy, Debug)]
pub struct BoundaryData {
    /// Half-width of the window the traces straddle (0 for the limit).
    pub at: f64,
    pub u_minus: Complex64,
    pub u_plus: Complex64,
    pub du_minus: Complex64,
    pub du_plus: Complex64,
}

/// Solution record: grid values, traces, and solver diagnostics.
#[derive(Clone, Debug)]
pub struct ResolventSolve {
    pub u: GridFunction<Complex64>,
    pub boundary: BoundaryData,
    /// Relative residual of the defining linear system.
    pub residual: f64,
    /// Crude conditioning proxy (pivot growth, capacitance conditioning).
    pub cond_estimate: f64,
}

struct RankTwo {
    u1: Vec<f64>,
    u2: Vec<f64>,
    z1: Vec<Complex64>,
    z2: Vec<Complex64>,
    cap: [[Complex64; 2]; 2],
    coupling: f64,
}

/// Factored discretization of the rank-two family at a fixed eps.
pub struct EpsOperator {
    grid: Grid,
    zeta: Complex64,
    eps: f64,
    lu: BandedLu,
    /// Real zero-order coefficient V + q(x/eps)/eps at every node.
    qv: Vec<f64>,
    w: Vec<f64>,
    rank2: Option<RankTwo>,
    cond: f64,
}

fn quad_weights(grid: Grid) -> Vec<f64> {
    let h = grid.h();
    let mut w = vec![h; grid.len()];
    w[0] = h / 2.0;
    w[grid.len() - 1] = h / 2.0;
    w
}

fn cumtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
    }
    out
}

fn dot_w(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn dot_wc(w: &[f64], a: &[f64], b: &[Complex64]) -> Complex64 {
    w.iter()
        .zip(a)
        .zip(b)
        .map(|((&w, &a), &b)| b * (w * a))
        .sum()
}

fn build_tridiag(grid: Grid, zeta: Complex64, qv: &[f64]) -> Banded {
    let n = grid.len();
    let h = grid.h();
    let h2 = h * h;
    let s = decay_rate(zeta);
    let mut band = Banded::new(n, 1, 1);
    let off = Complex64::new(-1.0 / h2, 0.0);
    for i in 0..n {
        if i > 0 {
            band.set(i, i - 1, off);
        }
        if i < n - 1 {
            band.set(i, i + 1, off);
        }
        let d = if i == 0 || i == n - 1 {
            Complex64::new(1.0 / h2, 0.0) + s / h + (Complex64::new(qv[i], 0.0) - zeta) * 0.5
        } else {
            Complex64::new(2.0 / h2 + qv[i], 0.0) - zeta
        };
        band.set(i, i, d);
    }
    band
}

impl EpsOperator {
    /// Discretize eps^-3 B_eps + eps^-1 q(./eps) on top of the free part.
    pub fn new(
        problem: &LineProblem,
        pair: &PerturbationPair,
        q: &GridFunction<f64>,
        eps: f64,
    ) -> Result<EpsOperator> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::LineProblem(format!(
                "eps = {eps} must lie in (0, 1]"
            )));
        }
        let grid = problem.grid();
        let n = grid.len();
        let inside: Vec<usize> = (0..n)
            .filter(|&i| (grid.x(i) / eps).abs() <= WINDOW_SLACK)
            .collect();
        if inside.len() < 64 {
            return Err(Error::EpsResolution(inside.len()));
        }

        let mut qv = problem.potential_values();
        for &i in &inside {
            let t = (grid.x(i) / eps).clamp(-1.0, 1.0);
            qv[i] += interp_linear(q, t) / eps;
        }

        let band = build_tridiag(grid, problem.zeta(), &qv);
        let lu = band.factor()?;

        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        for &i in &inside {
            let t = (grid.x(i) / eps).clamp(-1.0, 1.0);
            u1[i] = interp_linear(pair.phi1(), t);
            u2[i] = interp_linear(pair.phi2(), t);
        }

        let w = quad_weights(grid);
        let h = grid.h();

        // The sampled profiles must satisfy the structural identities of the
        // pair in the line quadrature, not just on their native grid: zero
        // window means, orthogonal antiderivatives, unit product of scales.
        let wvol: f64 = inside.iter().map(|&i| w[i]).sum();
        for u in [&mut u1, &mut u2] {
            for _ in 0..2 {
                let mean = dot_w(&w, u, &vec![1.0; n]) / wvol;
                for &i in &inside {
                    u[i] -= mean;
                }
            }
        }
        for _ in 0..2 {
            let p1 = cumtrapz(&u1, h);
            let p2 = cumtrapz(&u2, h);
            let c = dot_w(&w, &p2, &p1) / dot_w(&w, &p1, &p1);
            for i in 0..n {
                u2[i] -= c * u1[i];
            }
        }
        let p1 = cumtrapz(&u1, h);
        let p2 = cumtrapz(&u2, h);
        let scale = eps.powi(3) / (dot_w(&w, &p1, &p1).sqrt() * dot_w(&w, &p2, &p2).sqrt());
        for v in u2.iter_mut() {
            *v *= scale;
        }

        let coupling = eps.powi(-3);
        let mut z1: Vec<Complex64> = u1.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut z2: Vec<Complex64> = u2.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        lu.solve(&mut z1);
        lu.solve(&mut z2);

        let ic = Complex64::new(1.0 / coupling, 0.0);
        let cap = [
            [ic + dot_wc(&w, &u2, &z1), dot_wc(&w, &u2, &z2)],
            [dot_wc(&w, &u1, &z1), ic + dot_wc(&w, &u1, &z2)],
        ];
        let det = cap[0][0] * cap[1][1] - cap[0][1] * cap[1][0];
        let biggest = cap
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if det.norm() <= 1e-14 * (biggest * biggest).max(f64::MIN_POSITIVE) {
            return Err(Error::EpsResonance(det.norm()));
        }
        let inv_sq: f64 = cap.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>() / det.norm_sqr();
        let cap_cond = (cap.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>() * inv_sq).sqrt();
        let cond = lu.pivot_ratio().max(cap_cond);

        Ok(EpsOperator {
            grid,
            zeta: problem.zeta(),
            eps,
            lu,
            qv,
            w,
            rank2: Some(RankTwo {
                u1,
                u2,
                z1,
                z2,
                cap,
                coupling,
            }),
            cond,
        })
    }

    /// Plain Schroedinger discretization: no window, no rank-two part.
    pub fn free(problem: &LineProblem) -> Result<EpsOperator> {
        let grid = problem.grid();
        let qv = problem.potential_values();
        let band = build_tridiag(grid, problem.zeta(), &qv);
        let lu = band.factor()?;
        let cond = lu.pivot_ratio();
        Ok(EpsOperator {
            grid,
            zeta: problem.zeta(),
            eps: 0.0,
            lu,
            qv,
            w: quad_weights(grid),
            rank2: None,
            cond,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn solve_raw(&self, mut g: Vec<Complex64>) -> Vec<Complex64> {
        self.lu.solve(&mut g);
        if let Some(r2) = &self.rank2 {
            let rhs = [dot_wc(&self.w, &r2.u2, &g), dot_wc(&self.w, &r2.u1, &g)];
            let t = solve2(r2.cap, rhs).expect("capacitance checked at build time");
            for i in 0..g.len() {
                g[i] -= r2.z1[i] * t[0] + r2.z2[i] * t[1];
            }
        }
        g
    }

    pub(crate) fn solve_vec(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        let mut g = f.to_vec();
        g[0] *= 0.5;
        g[n - 1] *= 0.5;
        self.solve_raw(g)
    }

    pub(crate) fn solve_adj_vec(&self, f: &[Complex64]) -> Vec<Complex64> {
        // The full matrix is complex symmetric, so the adjoint solve is a
        // conjugated plain solve with the end scaling applied afterwards.
        let n = f.len();
        let g: Vec<Complex64> = f.iter().map(|v| v.conj()).collect();
        let mut y: Vec<Complex64> = self.solve_raw(g).iter().map(|v| v.conj()).collect();
        y[0] *= 0.5;
        y[n - 1] *= 0.5;
        y
    }

    /// Action of the discretized operator minus zeta, ghost rows eliminated.
    ///
    /// The end rows carry the unscaled outgoing-wave closure, which makes the
    /// matrix symmetric in the trapezoid-weighted pairing and lines its output
    /// up against the raw right-hand side `f`.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let h = self.grid.h();
        let h2 = h * h;
        let s = decay_rate(self.zeta);
        let mut r = vec![Complex64::new(0.0, 0.0); n];
        r[0] = (2.0 * u[0] - 2.0 * u[1]) / h2
            + (2.0 * s / h) * u[0]
            + (Complex64::new(self.qv[0], 0.0) - self.zeta) * u[0];
        for i in 1..n - 1 {
            r[i] = (2.0 * u[i] - u[i - 1] - u[i + 1]) / h2
                + (Complex64::new(self.qv[i], 0.0) - self.zeta) * u[i];
        }
        r[n - 1] = (2.0 * u[n - 1] - 2.0 * u[n - 2]) / h2
            + (2.0 * s / h) * u[n - 1]
            + (Complex64::new(self.qv[n - 1], 0.0) - self.zeta) * u[n - 1];
        if let Some(r2) = &self.rank2 {
            let p2 = dot_wc(&self.w, &r2.u2, u);
            let p1 = dot_wc(&self.w, &r2.u1, u);
            for i in 0..n {
                r[i] += (p2 * r2.u1[i] + p1 * r2.u2[i]) * r2.coupling;
            }
        }
        r
    }

    /// Solve (S_eps - zeta) u = f and report traces and diagnostics.
    pub fn solve(&self, f: &GridFunction<Complex64>) -> Result<ResolventSolve> {
        self.grid.ensure_same(&f.grid())?;
        let u = self.solve_vec(f.values());

        let r = self.apply(&u);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.grid.len() {
            num += self.w[i] * (r[i] - f.values()[i]).norm_sqr();
            den += self.w[i] * f.values()[i].norm_sqr();
        }
        let residual = (num / den.max(f64::MIN_POSITIVE)).sqrt();

        let h = self.grid.h();
        let im = ((-self.eps - self.grid.left()) / h).round() as usize;
        let ip = ((self.eps - self.grid.left()) / h).round() as usize;
        let boundary = BoundaryData {
            at: self.eps,
            u_minus: u[im],
            u_plus: u[ip],
            du_minus: (3.0 * u[im] - 4.0 * u[im - 1] + u[im - 2]) / (2.0 * h),
            du_plus: (-3.0 * u[ip] + 4.0 * u[ip + 1] - u[ip + 2]) / (2.0 * h),
        };

        Ok(ResolventSolve {
            u: GridFunction::from_values(self.grid, u),
            boundary,
            residual,
            cond_estimate: self.cond,
        })
    }
}

/// Factored discretization of the point-interaction limit operator.
///
/// The interaction node is duplicated, so the internal system has one more
/// unknown than the line grid; interface rows tie the two copies together.
pub struct LimitOperator {
    grid: Grid,
    i0: usize,
    lu: BandedLu,
    band: Banded,
    alpha: f64,
}

impl LimitOperator {
    pub fn new(interaction: &PointInteraction, problem: &LineProblem) -> Result<LimitOperator> {
        if interaction.alpha == 0.0 {
            return Err(Error::AlphaZero);
        }
        let grid = problem.grid();
        let zeta = problem.zeta();
        let n = grid.len();
        let i0 = n / 2;
        let nn = n + 1;
        let h = grid.h();
        let h2 = h * h;
        let s = decay_rate(zeta);
        let vv = problem.potential_values();
        let (alpha, beta) = (interaction.alpha, interaction.beta);

        let off = Complex64::new(-1.0 / h2, 0.0);
        let robin =
            |v: f64| Complex64::new(1.0 / h2, 0.0) + s / h + (Complex64::new(v, 0.0) - zeta) * 0.5;
        // One-sided first-derivative stencil u'(x0) ~ (3u0 - 4u(-h) + u(-2h)) / 2h.
        let (c1, c2, c3) = (3.0 / (2.0 * h), -4.0 / (2.0 * h), 1.0 / (2.0 * h));
        let re = |v: f64| Complex64::new(v, 0.0);

        let mut band = Banded::new(nn, 3, 2);
        band.set(0, 0, robin(vv[0]));
        band.set(0, 1, off);
        for j in 1..i0 {
            band.set(j, j - 1, off);
            band.set(j, j + 1, off);
            band.set(j, j, Complex64::new(2.0 / h2 + vv[j], 0.0) - zeta);
        }
        // Value condition u(+0) = alpha u(-0) + beta u'(-0).
        band.set(i0, i0 + 1, re(1.0));
        band.set(i0, i0, re(-alpha - beta * c1));
        band.set(i0, i0 - 1, re(-beta * c2));
        band.set(i0, i0 - 2, re(-beta * c3));
        // Derivative condition u'(+0) = u'(-0) / alpha.
        band.set(i0 + 1, i0 + 1, re(-c1));
        band.set(i0 + 1, i0 + 2, re(-c2));
        band.set(i0 + 1, i0 + 3, re(-c3));
        band.set(i0 + 1, i0, re(-c1 / alpha));
        band.set(i0 + 1, i0 - 1, re(-c2 / alpha));
        band.set(i0 + 1, i0 - 2, re(-c3 / alpha));
        for j in i0 + 2..nn - 1 {
            band.set(j, j - 1, off);
            band.set(j, j + 1, off);
            band.set(j, j, Complex64::new(2.0 / h2 + vv[j - 1], 0.0) - zeta);
        }
        band.set(nn - 1, nn - 1, robin(vv[n - 1]));
        band.set(nn - 1, nn - 2, off);

        let raw = band.clone();
        let lu = band.factor()?;
        Ok(LimitOperator {
            grid,
            i0,
            lu,
            band: raw,
            alpha,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Index of the interaction node (the left copy in the duplicated system).
    pub(crate) fn interface_index(&self) -> usize {
        self.i0
    }

    fn embed(&self, f: &[Complex64]) -> Vec<Complex64> {
        let (i0, n) = (self.i0, self.grid.len());
        let mut g = vec![Complex64::new(0.0, 0.0); n + 1];
        g[0] = f[0] * 0.5;
        g[1..i0].copy_from_slice(&f[1..i0]);
        g[i0 + 2..n].copy_from_slice(&f[i0 + 1..n - 1]);
        g[n] = f[n - 1] * 0.5;
        g
    }

    pub(crate) fn restrict(&self, u: &[Complex64]) -> Vec<Complex64> {
        let (i0, n) = (self.i0, self.grid.len());
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[..i0].copy_from_slice(&u[..i0]);
        v[i0] = (u[i0] + u[i0 + 1]) * 0.5;
        v[i0 + 1..n].copy_from_slice(&u[i0 + 2..n + 1]);
        v
    }

    fn restrict_adj(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (i0, n) = (self.i0, self.grid.len());
        let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
        u[..i0].copy_from_slice(&v[..i0]);
        u[i0] = v[i0] * 0.5;
        u[i0 + 1] = v[i0] * 0.5;
        u[i0 + 2..n + 1].copy_from_slice(&v[i0 + 1..n]);
        u
    }

    fn embed_adj(&self, y: &[Complex64]) -> Vec<Complex64> {
        let (i0, n) = (self.i0, self.grid.len());
        let mut f = vec![Complex64::new(0.0, 0.0); n];
        f[0] = y[0] * 0.5;
        f[1..i0].copy_from_slice(&y[1..i0]);
        f[i0 + 1..n - 1].copy_from_slice(&y[i0 + 2..n]);
        f[n - 1] = y[n] * 0.5;
        f
    }

    pub(crate) fn solve_dup_vec(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut g = self.embed(f);
        self.lu.solve(&mut g);
        g
    }

    pub(crate) fn solve_vec(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.restrict(&self.solve_dup_vec(f))
    }

    pub(crate) fn solve_adj_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut y: Vec<Complex64> = self.restrict_adj(v).iter().map(|c| c.conj()).collect();
        self.lu.solve_trans(&mut y);
        let y: Vec<Complex64> = y.iter().map(|c| c.conj()).collect();
        self.embed_adj(&y)
    }

    /// One-sided traces of a duplicated-node solution at the interaction.
    pub(crate) fn traces(&self, u: &[Complex64]) -> (Complex64, Complex64, Complex64, Complex64) {
        let (i0, h) = (self.i0, self.grid.h());
        let um = u[i0];
        let up = u[i0 + 1];
        let dm = (3.0 * u[i0] - 4.0 * u[i0 - 1] + u[i0 - 2]) / (2.0 * h);
        let dp = (-3.0 * u[i0 + 1] + 4.0 * u[i0 + 2] - u[i0 + 3]) / (2.0 * h);
        (um, up, dm, dp)
    }

    /// Solve (S_ab - zeta) u = f and report traces and diagnostics.
    pub fn solve(&self, f: &GridFunction<Complex64>) -> Result<ResolventSolve> {
        self.grid.ensure_same(&f.grid())?;
        let g = self.embed(f.values());
        let mut dup = g.clone();
        self.lu.solve(&mut dup);

        let applied = self.band.apply(&dup);
        let diff: Vec<Complex64> = applied.iter().zip(&g).map(|(a, b)| a - b).collect();
        let residual = vec_norm(&diff) / vec_norm(&g).max(f64::MIN_POSITIVE);

        let (um, up, dm, dp) = self.traces(&dup);
        let boundary = BoundaryData {
            at: 0.0,
            u_minus: um,
            u_plus: up,
            du_minus: dm,
            du_plus: dp,
        };
        Ok(ResolventSolve {
            u: GridFunction::from_values(self.grid, self.restrict(&dup)),
            boundary,
            residual,
            cond_estimate: self.lu.pivot_ratio(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Resolvent of the limit operator applied to `f`.
pub fn limit_resolvent(
    interaction: &PointInteraction,
    problem: &LineProblem,
    f: &GridFunction<Complex64>,
) -> Result<ResolventSolve> {
    LimitOperator::new(interaction, problem)?.solve(f)
}

/// Resolvent of the rank-two family at `eps` applied to `f`.
pub fn eps_resolvent(
    pair: &PerturbationPair,
    q: &CouplingPotential,
    problem: &LineProblem,
    eps: f64,
    f: &GridFunction<Complex64>,
) -> Result<ResolventSolve> {
    EpsOperator::new(problem, pair, &q.q, eps)?.solve(f)
}

/// Resolvent of the unperturbed operator (the zero-profile, zero-q reduction).
pub fn free_resolvent(
    problem: &LineProblem,
    f: &GridFunction<Complex64>,
) -> Result<ResolventSolve> {
    EpsOperator::free(problem)?.solve(f)
}

/// Quadrature oracle for the free resolvent on a potential-free line:
/// u(x) = integral of exp(-s|x - y|) f(y) / (2s) dy.
pub fn free_resolvent_kernel(
    problem: &LineProblem,
    f: &GridFunction<Complex64>,
) -> Result<GridFunction<Complex64>> {
    let grid = problem.grid();
    grid.ensure_same(&f.grid())?;
    if problem.potential.is_some() {
        return Err(Error::LineProblem(
            "kernel oracle only covers the potential-free line".into(),
        ));
    }
    let s = decay_rate(problem.zeta());
    let n = grid.len();
    let up: Vec<Complex64> = (0..n)
        .map(|i| (s * grid.x(i)).exp() * f.values()[i])
        .collect();
    let dn: Vec<Complex64> = (0..n)
        .map(|i| (-s * grid.x(i)).exp() * f.values()[i])
        .collect();
    let c1 = cumsimpson(&GridFunction::from_values(grid, up));
    let c2 = cumsimpson(&GridFunction::from_values(grid, dn));
    let total = c2.values()[n - 1];
    let vals: Vec<Complex64> = (0..n)
        .map(|i| {
            let x = grid.x(i);
            ((-s * x).exp() * c1.values()[i] + (s * x).exp() * (total - c2.values()[i])) / (2.0 * s)
        })
        .collect();
    Ok(GridFunction::from_values(grid, vals))
}

/// Power-iteration controls for gap estimation.
#[derive(Clone, Copy, Debug)]
pub struct GapSampling {
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GapSampling {
    fn default() -> GapSampling {
        GapSampling {
            seed: 42,
            tol: 1e-3,
            max_iter: 30,
        }
    }
}

/// Operator-norm estimate returned by the power iteration.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub iterations: usize,
    /// Set when the iteration hit its cap without meeting the tolerance.
    pub warn: bool,
}

pub(crate) trait ResolventAction {
    fn len(&self) -> usize;
    fn act(&self, f: &[Complex64]) -> Vec<Complex64>;
    fn act_adj(&self, f: &[Complex64]) -> Vec<Complex64>;
}

impl ResolventAction for EpsOperator {
    fn len(&self) -> usize {
        self.grid.len()
    }
    fn act(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.solve_vec(f)
    }
    fn act_adj(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.solve_adj_vec(f)
    }
}

impl ResolventAction for LimitOperator {
    fn len(&self) -> usize {
        self.grid.len()
    }
    fn act(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.solve_vec(f)
    }
    fn act_adj(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.solve_adj_vec(f)
    }
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Largest singular value of the difference of two solvers, by power
/// iteration on the normal operator D* D.
pub(crate) fn gap_between(
    a: &dyn ResolventAction,
    b: &dyn ResolventAction,
    sampling: &GapSampling,
) -> Result<GapEstimate> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch);
    }
    let mut sampler = NormalSampler::new(sampling.seed);
    let mut g = sampler.complex_vec(a.len());
    let scale = vec_norm(&g);
    for v in g.iter_mut() {
        *v /= scale;
    }
    let mut est = 0.0;
    let mut warn = true;
    let mut iterations = 0;
    for it in 1..=sampling.max_iter {
        iterations = it;
        let d = sub(&a.act(&g), &b.act(&g));
        let gn = sub(&a.act_adj(&d), &b.act_adj(&d));
        let lam = vec_norm(&gn);
        if lam <= f64::MIN_POSITIVE {
            est = 0.0;
            warn = false;
            break;
        }
        let fresh = lam.sqrt();
        for (dst, src) in g.iter_mut().zip(&gn) {
            *dst = src / lam;
        }
        let settled = est > 0.0 && (fresh - est).abs() < sampling.tol * est;
        est = fresh;
        if settled {
            warn = false;
            break;
        }
    }
    Ok(GapEstimate {
        gap: est,
        iterations,
        warn,
    })
}

/// Operator-norm gap between the eps-resolvent and the limit resolvent.
pub fn resolvent_gap(
    pair: &PerturbationPair,
    q: &CouplingPotential,
    interaction: &PointInteraction,
    problem: &LineProblem,
    eps: f64,
    sampling: &GapSampling,
) -> Result<GapEstimate> {
    let ep = EpsOperator::new(problem, pair, &q.q, eps)?;
    let lim = LimitOperator::new(interaction, problem)?;
    gap_between(&ep, &lim, sampling)
}

/// Least-squares slope of log(gap) against log(eps).
pub fn fit_rate(entries: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if entries.len() < 3 {
        return Err(Error::FitInput);
    }
    let mut xs = Vec::with_capacity(entries.len());
    let mut ys = Vec::with_capacity(entries.len());
    for &(eps, gap) in entries {
        if !(eps > 0.0 && gap > 0.0 && eps.is_finite() && gap.is_finite()) {
            return Err(Error::FitInput);
        }
        xs.push(eps.ln());
        ys.push(gap.ln());
    }
    Ok(fit_line(&xs, &ys))
}

/// One row of a convergence sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub gap: f64,
    pub iterations: usize,
    pub warn: bool,
}

/// Gap-versus-eps sweep with its fitted log-log rate.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub entries: Vec<SweepEntry>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub zeta: Complex64,
    pub alpha: f64,
    pub beta: f64,
}

/// Run a gap sweep over decreasing eps values and fit the convergence rate.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    pair: &PerturbationPair,
    q: &CouplingPotential,
    interaction: &PointInteraction,
    zeta: Complex64,
    eps_list: &[f64],
    half_width: f64,
    points_per_eps: usize,
    sampling: &GapSampling,
    parallel: bool,
) -> Result<ConvergenceReport> {
    let mut eps: Vec<f64> = eps_list.to_vec();
    if eps.len() < 3 || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::FitInput);
    }
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if eps.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::FitInput);
    }

    let one = |e: f64| -> Result<SweepEntry> {
        let problem = LineProblem::for_eps(half_width, e, points_per_eps, zeta)?;
        let ep = EpsOperator::new(&problem, pair, &q.q, e)?;
        let lim = LimitOperator::new(interaction, &problem)?;
        let est = gap_between(&ep, &lim, sampling)?;
        Ok(SweepEntry {
            epsilon: e,
            gap: est.gap,
            iterations: est.iterations,
            warn: est.warn,
        })
    };

    let entries: Vec<SweepEntry> = if parallel {
        eps.par_iter().map(|&e| one(e)).collect::<Result<_>>()?
    } else {
        eps.iter().map(|&e| one(e)).collect::<Result<_>>()?
    };

    let pts: Vec<(f64, f64)> = entries.iter().map(|e| (e.epsilon, e.gap)).collect();
    let (slope, intercept, r2) = fit_rate(&pts)?;
    Ok(ConvergenceReport {
        entries,
        slope,
        intercept,
        r2,
        zeta,
        alpha: interaction.alpha,
        beta: interaction.beta,
    })
}
