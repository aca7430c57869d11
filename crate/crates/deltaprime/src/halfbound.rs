//! The half-bound projector B, its kernel residuals, and the inhomogeneous
//! boundary value problem on the unit interval.

use crate::error::{Error, Result};
use crate::grid::{
    antider2_pinned, integral, norm, pair_re, second_derivative, GridFunction, Scalar,
};
use crate::linalg::NormalSampler;
use crate::pair::PerturbationPair;
use std::f64::consts::PI;

/// Apply B u = -u'' + (phi2, u) phi1 + (phi1, u) phi2.
pub fn apply_b<T: Scalar>(pair: &PerturbationPair, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    pair.grid().ensure_same(&u.grid())?;
    let d2u = second_derivative(u);
    let c2 = pair_re(pair.phi2(), u)?;
    let c1 = pair_re(pair.phi1(), u)?;
    let vals: Vec<T> = (0..u.grid().len())
        .map(|i| {
            -d2u.values()[i] + c2.scale(pair.phi1().values()[i]) + c1.scale(pair.phi2().values()[i])
        })
        .collect();
    Ok(GridFunction::from_values(u.grid(), vals))
}

/// Norms of B applied to the two half-bound states 1 and omega.
#[derive(Clone, Debug, serde::Serialize)]
pub struct HalfBoundReport {
    pub r_const: f64,
    pub r_omega: f64,
}

/// Measure how well 1 and omega sit in the kernel of B.
pub fn halfbound_residuals(pair: &PerturbationPair) -> Result<HalfBoundReport> {
    let one = GridFunction::from_values(pair.grid(), vec![1.0; pair.grid().len()]);
    let b_one = apply_b(pair, &one)?;
    let b_om = apply_b(pair, pair.omega())?;
    Ok(HalfBoundReport {
        r_const: norm(&b_one),
        r_omega: norm(&b_om) / norm(pair.omega()),
    })
}

/// Right-hand side together with the boundary functionals (a, b).
#[derive(Clone, Debug)]
pub struct BvpData<T: Scalar> {
    pub h: GridFunction<T>,
    pub a: T,
    pub b: T,
}

/// Solution of B v = h with v' (+-1) = a, b built in through the slope terms.
#[derive(Clone, Debug)]
pub struct BvpSolution<T: Scalar> {
    pub v: GridFunction<T>,
    pub g1: T,
    /// Coefficient of omega in the decomposition v = v0 + a - s * omega.
    pub omega_coefficient: T,
    pub residual: f64,
}

/// The two solvability functionals a = (1 - omega/kappa, h), b = -(omega, h)/kappa.
pub fn solvability_data<T: Scalar>(
    pair: &PerturbationPair,
    h: &GridFunction<T>,
) -> Result<BvpData<T>> {
    pair.grid().ensure_same(&h.grid())?;
    let kap = pair.kappa();
    let om_h = pair_re(pair.omega(), h)?;
    let a = integral(h) - om_h.scale(1.0 / kap);
    let b = -om_h.scale(1.0 / kap);
    Ok(BvpData { h: h.clone(), a, b })
}

/// Pairing (phi_j, h^(-2)) through integration by parts:
/// m_j (1, h) + (PP_j, h), with PP_j the stored second antiderivative.
fn pairing_by_parts<T: Scalar>(pp: &GridFunction<f64>, m: f64, h: &GridFunction<T>) -> Result<T> {
    Ok(integral(h).scale(m) + pair_re(pp, h)?)
}

/// The functionals g1, g2 appearing in the particular solution; they must
/// agree whenever (a, b) satisfy the solvability conditions.
pub fn g_functionals<T: Scalar>(
    pair: &PerturbationPair,
    h: &GridFunction<T>,
    a: T,
) -> Result<(T, T)> {
    let pair1 = pairing_by_parts(pair.pp1(), pair.m1(), h)?;
    let pair2 = pairing_by_parts(pair.pp2(), pair.m2(), h)?;
    let g1 = (a.scale(pair.m1()) - pair1).scale(pair.n2());
    let g2 = (a.scale(pair.m2()) - pair2).scale(pair.n1());
    Ok((g1, g2))
}

/// Solve B v = h subject to the slope data; errors when the data violate the
/// solvability conditions.
pub fn solve_bvp<T: Scalar>(pair: &PerturbationPair, data: &BvpData<T>) -> Result<BvpSolution<T>> {
    let grid = pair.grid();
    grid.ensure_same(&data.h.grid())?;
    let h = &data.h;
    let nh = norm(h);
    let kap = pair.kappa();

    let one_h = integral(h);
    let om_h = pair_re(pair.omega(), h)?;
    let d1 = (data.a - data.b - one_h).abs();
    let d2 = (data.a - one_h + om_h.scale(1.0 / kap)).abs();
    let tol = 1e-8 * (1.0 + nh);
    if d1 > tol || d2 > tol {
        return Err(Error::Solvability(d1, d2));
    }

    let h2 = antider2_pinned(h);
    let (g1, _g2) = g_functionals(pair, h, data.a)?;
    let k1 = g1.scale(pair.n2());
    let n = grid.len();
    let mut v0: Vec<T> = (0..n)
        .map(|i| k1.scale(pair.pp1().values()[i]) - h2.values()[i] + data.a.scale(grid.x(i)))
        .collect();
    let s = (v0[n - 1] + data.a).scale(1.0 / kap);
    for (i, v) in v0.iter_mut().enumerate() {
        *v = *v + data.a - s.scale(pair.omega().values()[i]);
    }
    let v = GridFunction::from_values(grid, v0);
    let bv = apply_b(pair, &v)?;
    let resid: f64 = {
        let diff: Vec<T> = bv
            .values()
            .iter()
            .zip(h.values())
            .map(|(x, y)| *x - *y)
            .collect();
        norm(&GridFunction::from_values(grid, diff))
    };
    Ok(BvpSolution {
        v,
        g1,
        omega_coefficient: s,
        residual: resid,
    })
}

/// (||v|| + ||v''||) / ||h||, a discrete W2 stability ratio.
pub fn w2_ratio(pair: &PerturbationPair, h: &GridFunction<f64>) -> Result<f64> {
    let data = solvability_data(pair, h)?;
    let sol = solve_bvp(pair, &data)?;
    Ok((norm(&sol.v) + norm(&second_derivative(&sol.v))) / norm(h))
}

/// Smooth random forcing used by the consistency suites: a low-order sine
/// series or a polynomial bump, plus a constant offset.
pub fn random_h(
    grid: crate::grid::Grid,
    sampler: &mut NormalSampler,
    poly: bool,
) -> GridFunction<f64> {
    let n = grid.len();
    let mut vals = vec![0.0; n];
    if poly {
        let c: Vec<f64> = sampler.normal_vec(4);
        let offset = sampler.normal() * 0.2;
        for (i, v) in vals.iter_mut().enumerate() {
            let u = grid.x(i);
            *v = (c[0] + c[1] * u + c[2] * u * u + c[3] * u * u * u) * (1.0 - u * u) + offset;
        }
    } else {
        let c: Vec<f64> = (0..6)
            .map(|k| sampler.normal() / ((k + 1) * (k + 1)) as f64)
            .collect();
        let offset = sampler.normal() * 0.3;
        for (i, v) in vals.iter_mut().enumerate() {
            let x = grid.x(i);
            let mut acc = offset;
            for (k, ck) in c.iter().enumerate() {
                acc += ck * ((k + 1) as f64 * PI * (x + 1.0) / 2.0).sin();
            }
            *v = acc;
        }
    }
    GridFunction::from_values(grid, vals)
}
