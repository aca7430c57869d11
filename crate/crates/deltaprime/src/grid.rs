//! Uniform grids, sampled functions, quadrature, and difference calculus.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Scalar field of a grid function: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn from_re(x: f64) -> Self;
    /// Multiply by a real scalar.
    fn scale(self, s: f64) -> Self;
    fn conj(self) -> Self;
    /// Modulus.
    fn abs(self) -> f64;
    fn recip(self) -> Self;
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_re(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn conj(self) -> Self {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn recip(self) -> Self {
        Complex64::new(1.0, 0.0) / self
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Uniform grid with an odd number of nodes on a closed interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    left: f64,
    right: f64,
    n: usize,
}

impl Grid {
    pub fn new(left: f64, right: f64, n: usize) -> Result<Grid> {
        if !left.is_finite() || !right.is_finite() {
            return Err(Error::Grid("endpoints must be finite".into()));
        }
        if left >= right {
            return Err(Error::Grid(format!(
                "left endpoint {left} must be below right endpoint {right}"
            )));
        }
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::Grid(format!("node count {n} must be odd and >= 3")));
        }
        Ok(Grid { left, right, n })
    }

    /// The unit interval [-1, 1].
    pub fn interval(n: usize) -> Result<Grid> {
        Grid::new(-1.0, 1.0, n)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mesh width.
    pub fn h(&self) -> f64 {
        (self.right - self.left) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.left + self.h() * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Composite Simpson weight of node `i`.
    pub fn simpson_weight(&self, i: usize) -> f64 {
        let h = self.h();
        if i == 0 || i == self.n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        }
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Function sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Scalar> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.finite() {
                return Err(Error::NonFinite {
                    x: grid.x(i),
                    index: i,
                });
            }
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            values: vec![T::ZERO; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// First and last index holding a nonzero value, if any.
    pub fn support(&self) -> Option<(usize, usize)> {
        let lo = self.values.iter().position(|v| *v != T::ZERO)?;
        let hi = self.values.iter().rposition(|v| *v != T::ZERO)?;
        Some((lo, hi))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub(crate) fn from_values(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }
}

/// Sample a pointwise rule on a grid, rejecting non-finite values.
pub fn make_grid_function<T: Scalar>(
    grid: Grid,
    rule: impl Fn(f64) -> T,
) -> Result<GridFunction<T>> {
    let values: Vec<T> = (0..grid.len()).map(|i| rule(grid.x(i))).collect();
    GridFunction::new(grid, values)
}

/// Composite-Simpson inner product, conjugate-linear in the second slot.
pub fn inner_product<T: Scalar>(f: &GridFunction<T>, g: &GridFunction<T>) -> Result<T> {
    f.grid.ensure_same(&g.grid)?;
    let mut acc = T::ZERO;
    for i in 0..f.grid.len() {
        let w = f.grid.simpson_weight(i);
        acc = acc + (f.values[i] * g.values[i].conj()).scale(w);
    }
    Ok(acc)
}

/// Bilinear Simpson pairing with a real first factor; no conjugation.
pub fn pair_re<T: Scalar>(f: &GridFunction<f64>, g: &GridFunction<T>) -> Result<T> {
    f.grid().ensure_same(&g.grid)?;
    let mut acc = T::ZERO;
    for i in 0..g.grid.len() {
        let w = g.grid.simpson_weight(i);
        acc = acc + g.values[i].scale(w * f.values()[i]);
    }
    Ok(acc)
}

/// Simpson integral of `f` over the grid interval.
pub fn integral<T: Scalar>(f: &GridFunction<T>) -> T {
    let mut acc = T::ZERO;
    for i in 0..f.grid.len() {
        acc = acc + f.values[i].scale(f.grid.simpson_weight(i));
    }
    acc
}

/// L2 norm under the Simpson weights.
pub fn norm<T: Scalar>(f: &GridFunction<T>) -> f64 {
    let mut acc = 0.0;
    for i in 0..f.grid.len() {
        let a = f.values[i].abs();
        acc += f.grid.simpson_weight(i) * a * a;
    }
    acc.sqrt()
}

/// Cumulative antiderivative vanishing at the left endpoint.
///
/// Order 1 is the cumulative trapezoid rule; order 2 composes it with itself.
pub fn antiderivative<T: Scalar>(f: &GridFunction<T>, order: u32) -> Result<GridFunction<T>> {
    match order {
        1 => Ok(cumtrapz(f)),
        2 => Ok(cumtrapz(&cumtrapz(f))),
        _ => Err(Error::Grid(format!(
            "antiderivative order {order} not supported"
        ))),
    }
}

fn cumtrapz<T: Scalar>(f: &GridFunction<T>) -> GridFunction<T> {
    let n = f.grid.len();
    let h = f.grid.h();
    let mut out = vec![T::ZERO; n];
    for i in 1..n {
        out[i] = out[i - 1] + (f.values[i - 1] + f.values[i]).scale(h / 2.0);
    }
    GridFunction::from_values(f.grid, out)
}

/// Cumulative Simpson antiderivative (third-order at odd nodes, fourth at even).
pub(crate) fn cumsimpson<T: Scalar>(f: &GridFunction<T>) -> GridFunction<T> {
    let n = f.grid.len();
    let h = f.grid.h();
    let v = &f.values;
    let mut out = vec![T::ZERO; n];
    for i in (2..n).step_by(2) {
        out[i] = out[i - 2] + (v[i - 2] + v[i - 1].scale(4.0) + v[i]).scale(h / 3.0);
    }
    for i in (1..n).step_by(2) {
        let corr = if i + 1 < n {
            (v[i - 1].scale(5.0) + v[i].scale(8.0) - v[i + 1]).scale(h / 12.0)
        } else {
            (v[i - 1] + v[i]).scale(h / 2.0)
        };
        out[i] = out[i - 1] + corr;
    }
    GridFunction::from_values(f.grid, out)
}

/// Second antiderivative through the exact discrete recurrence, tilted so the
/// right endpoint matches the cumulative-Simpson composition.
///
/// The second central difference of the result reproduces `f` at interior
/// nodes to round-off.
pub(crate) fn antider2_pinned<T: Scalar>(f: &GridFunction<T>) -> GridFunction<T> {
    let n = f.grid.len();
    let h = f.grid.h();
    let v = &f.values;
    let mut out = vec![T::ZERO; n];
    out[1] = (v[0].scale(1.0 / 3.0) + v[1].scale(1.0 / 6.0)).scale(h * h);
    for i in 1..n - 1 {
        out[i + 1] = out[i].scale(2.0) - out[i - 1] + v[i].scale(h * h);
    }
    let target = {
        let once = cumsimpson(f);
        cumsimpson(&once).values[n - 1]
    };
    let tilt = target - out[n - 1];
    let (a, b) = (f.grid.left(), f.grid.right());
    for (i, o) in out.iter_mut().enumerate() {
        let t = (f.grid.x(i) - a) / (b - a);
        *o = *o + tilt.scale(t);
    }
    GridFunction::from_values(f.grid, out)
}

/// Second-order first derivative: central inside, one-sided at the ends.
pub fn derivative<T: Scalar>(f: &GridFunction<T>) -> GridFunction<T> {
    let n = f.grid.len();
    let h = f.grid.h();
    let v = &f.values;
    let mut out = vec![T::ZERO; n];
    out[0] = (v[0].scale(-3.0) + v[1].scale(4.0) - v[2]).scale(1.0 / (2.0 * h));
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]).scale(1.0 / (2.0 * h));
    }
    out[n - 1] = (v[n - 1].scale(3.0) - v[n - 2].scale(4.0) + v[n - 3]).scale(1.0 / (2.0 * h));
    GridFunction::from_values(f.grid, out)
}

/// Second-order second derivative: central inside, one-sided at the ends.
pub(crate) fn second_derivative<T: Scalar>(f: &GridFunction<T>) -> GridFunction<T> {
    let n = f.grid.len();
    let h = f.grid.h();
    let v = &f.values;
    let mut out = vec![T::ZERO; n];
    let s = 1.0 / (h * h);
    out[0] = (v[0].scale(2.0) - v[1].scale(5.0) + v[2].scale(4.0) - v[3]).scale(s);
    for i in 1..n - 1 {
        out[i] = (v[i - 1] - v[i].scale(2.0) + v[i + 1]).scale(s);
    }
    out[n - 1] =
        (v[n - 1].scale(2.0) - v[n - 2].scale(5.0) + v[n - 3].scale(4.0) - v[n - 4]).scale(s);
    GridFunction::from_values(f.grid, out)
}

/// Linear interpolation of `f` at an arbitrary point inside its grid.
pub(crate) fn interp_linear<T: Scalar>(f: &GridFunction<T>, x: f64) -> T {
    let g = f.grid;
    let h = g.h();
    let t = (x - g.left()) / h;
    let i = (t.floor() as isize).clamp(0, g.len() as isize - 2) as usize;
    let frac = (t - i as f64).clamp(0.0, 1.0);
    f.values[i].scale(1.0 - frac) + f.values[i + 1].scale(frac)
}

/// Sample `f(eps * t)` on a fast grid by linear interpolation.
pub fn rescale_to_fast<T: Scalar>(
    f: &GridFunction<T>,
    eps: f64,
    fast: Grid,
) -> Result<GridFunction<T>> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::Grid(format!("eps = {eps} must be positive")));
    }
    let g = f.grid();
    let (lo, hi) = (eps * fast.left(), eps * fast.right());
    if lo < g.left() - 1e-12 || hi > g.right() + 1e-12 {
        return Err(Error::Grid(format!(
            "window [{lo}, {hi}] not covered by grid [{}, {}]",
            g.left(),
            g.right()
        )));
    }
    let values = (0..fast.len())
        .map(|i| interp_linear(f, eps * fast.x(i)))
        .collect();
    Ok(GridFunction::from_values(fast, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eta1(x: f64) -> f64 {
        (PI * (x + 1.0) / 2.0).sin()
    }

    fn eta2(x: f64) -> f64 {
        (PI * (x + 1.0)).sin()
    }

    #[test]
    fn zero_rule_gives_zero_norm() {
        let g = Grid::interval(101).unwrap();
        let f = make_grid_function(g, |_| 0.0).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert_eq!(norm(&f), 0.0);
        assert_eq!(f.support(), None);
    }

    #[test]
    fn sine_rule_values() {
        let g = Grid::interval(4001).unwrap();
        let f = make_grid_function(g, eta1).unwrap();
        assert!(f.values()[0].abs() < 1e-15);
        assert!(f.values()[4000].abs() < 1e-12);
        assert!((f.values()[2000] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_rule_on_three_nodes() {
        let g = Grid::interval(3).unwrap();
        let f = make_grid_function(g, |x| x).unwrap();
        assert_eq!(f.values(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn sine_inner_products() {
        let g = Grid::interval(4001).unwrap();
        let f1 = make_grid_function(g, eta1).unwrap();
        let f2 = make_grid_function(g, eta2).unwrap();
        assert!((inner_product(&f1, &f1).unwrap() - 1.0).abs() < 1e-10);
        assert!(inner_product(&f1, &f2).unwrap().abs() < 1e-10);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let g = Grid::interval(101).unwrap();
        let f2 = make_grid_function(g, |x| x * x).unwrap();
        let f3 = make_grid_function(g, |x| x * x * x).unwrap();
        assert!((integral(&f2) - 2.0 / 3.0).abs() < 1e-14);
        assert!(integral(&f3).abs() < 1e-15);
    }

    #[test]
    fn antiderivative_of_zero_is_zero() {
        let g = Grid::interval(101).unwrap();
        let z = GridFunction::<f64>::zeros(g);
        assert_eq!(antiderivative(&z, 1).unwrap().values(), z.values());
        assert_eq!(antiderivative(&z, 2).unwrap().values(), z.values());
    }

    #[test]
    fn antiderivative_matches_closed_form_at_second_order() {
        let g = Grid::interval(4001).unwrap();
        let phi1 = make_grid_function(g, |x| PI / 2.0 * (PI * (x + 1.0) / 2.0).cos()).unwrap();
        let a = antiderivative(&phi1, 1).unwrap();
        let err = a
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - eta1(g.x(i))).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-7, "err = {err}");
    }

    #[test]
    fn second_antiderivative_hits_minus_first_moment() {
        let g = Grid::interval(4001).unwrap();
        let phi1 = make_grid_function(g, |x| PI / 2.0 * (PI * (x + 1.0) / 2.0).cos()).unwrap();
        let a2 = antiderivative(&phi1, 2).unwrap();
        let end = a2.values()[g.len() - 1];
        assert!((end - 4.0 / PI).abs() < 1e-6, "end = {end}");
    }

    #[test]
    fn order_two_is_the_literal_composition() {
        let g = Grid::interval(1001).unwrap();
        let f = make_grid_function(g, |x| (3.0 * x).cos() + x).unwrap();
        let twice = antiderivative(&antiderivative(&f, 1).unwrap(), 1).unwrap();
        assert_eq!(antiderivative(&f, 2).unwrap().values(), twice.values());
    }

    #[test]
    fn antiderivative_endpoint_vanishes_for_zero_mean_data() {
        let g = Grid::interval(2001).unwrap();
        let f = make_grid_function(g, |x| -PI * (PI * x).cos()).unwrap();
        let a = antiderivative(&f, 1).unwrap();
        assert!(a.values()[g.len() - 1].abs() <= 1e-12 * norm(&f));
    }

    #[test]
    fn antiderivative_refines_at_second_order() {
        let coarse = Grid::interval(2001).unwrap();
        let fine = Grid::interval(4001).unwrap();
        let err = |g: Grid| {
            let f = make_grid_function(g, f64::exp).unwrap();
            let a = antiderivative(&f, 1).unwrap();
            a.values()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - (g.x(i).exp() - (-1.0f64).exp())).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(coarse) / err(fine);
        assert!((3.5..=4.5).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn pinned_second_antiderivative_inverts_d2() {
        let g = Grid::interval(801).unwrap();
        let f = make_grid_function(g, |x| (2.0 * x).sin() + 0.3 * x * x).unwrap();
        let a2 = antider2_pinned(&f);
        let back = second_derivative(&a2);
        for i in 1..g.len() - 1 {
            assert!((back.values()[i] - f.values()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn derivative_is_second_order_including_ends() {
        let g = Grid::interval(1001).unwrap();
        let f = make_grid_function(g, |x| x * x).unwrap();
        let d = derivative(&f);
        for i in 0..g.len() {
            assert!((d.values()[i] - 2.0 * g.x(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn rescale_constant_and_linear() {
        let line = Grid::new(-15.0, 15.0, 3001).unwrap();
        let fast = Grid::interval(401).unwrap();
        let c = make_grid_function(line, |_| 2.5).unwrap();
        let rc = rescale_to_fast(&c, 0.1, fast).unwrap();
        assert!(rc.values().iter().all(|v| (v - 2.5).abs() < 1e-14));

        let idf = make_grid_function(line, |x| x).unwrap();
        let ri = rescale_to_fast(&idf, 0.5, fast).unwrap();
        for i in 0..fast.len() {
            assert!((ri.values()[i] - 0.5 * fast.x(i)).abs() < 1e-13);
        }
    }

    #[test]
    fn rescale_gaussian_within_interpolation_error() {
        let line = Grid::new(-15.0, 15.0, 30001).unwrap();
        let fast = Grid::interval(401).unwrap();
        let f = make_grid_function(line, |x| (-x * x).exp()).unwrap();
        let r = rescale_to_fast(&f, 0.1, fast).unwrap();
        let h = line.h();
        let bound = h * h / 8.0 * 2.0 + 1e-14;
        for i in 0..fast.len() {
            let x = 0.1 * fast.x(i);
            assert!((r.values()[i] - (-x * x).exp()).abs() <= bound);
        }
    }

    #[test]
    fn non_finite_rule_is_rejected() {
        let g = Grid::interval(5).unwrap();
        let res = make_grid_function(g, |x| 1.0 / x);
        assert!(matches!(res, Err(Error::NonFinite { index: 2, .. })));
    }

    #[test]
    fn grid_construction_rejects_bad_input() {
        assert!(Grid::new(-1.0, 1.0, 4).is_err());
        assert!(Grid::new(-1.0, 1.0, 1).is_err());
        assert!(Grid::new(1.0, -1.0, 5).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 5).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = make_grid_function(Grid::interval(11).unwrap(), |x| x).unwrap();
        let b = make_grid_function(Grid::interval(13).unwrap(), |x| x).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn complex_inner_product_conjugates_second_slot() {
        let g = Grid::interval(101).unwrap();
        let f = make_grid_function(g, |x| Complex64::new(0.0, x)).unwrap();
        let ip = inner_product(&f, &f).unwrap();
        assert!(ip.im.abs() < 1e-15);
        assert!((ip.re - 2.0 / 3.0).abs() < 1e-10);
    }
}
