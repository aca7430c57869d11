//! Complex linear algebra: banded and dense LU, small systems, line fits,
//! and a seeded normal sampler.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Complex band matrix in LAPACK-style storage with room for pivoting fill-in.
///
/// Entry (i, j) lives at `ab[(kl + ku + i - j) * n + j]`; the first `kl`
/// storage rows are fill-in workspace.
#[derive(Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
}

impl Banded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Banded {
        Banded {
            n,
            kl,
            ku,
            ab: vec![Complex64::new(0.0, 0.0); (2 * kl + ku + 1) * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "outside band");
        (self.kl + self.ku + i - j) * self.n + j
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i + self.ku < j || j + self.kl < i {
            return Complex64::new(0.0, 0.0);
        }
        self.ab[(self.kl + self.ku + i - j) * self.n + j]
    }

    /// y = A x using the stored band.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(n - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..=hi {
                acc += self.ab[(self.kl + self.ku + i - j) * n + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// LU factorization with partial pivoting.
    pub fn factor(self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = n;
        let mut ab = self.ab;
        let mut ipiv = vec![0usize; n];
        let kv = kl + ku;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0usize;
            let mut best = ab[(kv) * w + j].norm_sqr();
            for i in 1..=km {
                let cand = ab[(kv + i) * w + j].norm_sqr();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            ipiv[j] = j + p;
            if best == 0.0 {
                return Err(Error::Singular);
            }
            let ju = (j + ku + kl).min(n - 1);
            if p != 0 {
                for c in j..=ju {
                    let a = (kv + j - c) * w + c;
                    let b = (kv + j + p - c) * w + c;
                    ab.swap(a, b);
                }
            }
            let piv = ab[kv * w + j];
            for i in 1..=km {
                let k = (kv + i) * w + j;
                ab[k] /= piv;
            }
            for c in j + 1..=ju {
                let ujc = ab[(kv + j - c) * w + c];
                if ujc.norm_sqr() == 0.0 {
                    continue;
                }
                for i in 1..=km {
                    let m = ab[(kv + i) * w + j];
                    let k = (kv + j + i - c) * w + c;
                    ab[k] -= m * ujc;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ab,
            ipiv,
        })
    }
}

/// Factored band matrix.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.n);
        let kv = kl + ku;
        for j in 0..n - 1 {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let lm = kl.min(n - 1 - j);
            let bj = b[j];
            for i in 1..=lm {
                b[j + i] -= self.ab[(kv + i) * w + j] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[kv * w + j];
            let lm = (kl + ku).min(j);
            let bj = b[j];
            for i in 1..=lm {
                b[j - i] -= self.ab[(kv - i) * w + j] * bj;
            }
        }
    }

    /// Solve Aᵀ x = b in place (transpose, no conjugation).
    pub fn solve_trans(&self, b: &mut [Complex64]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.n);
        let kv = kl + ku;
        for j in 0..n {
            let lm = (kl + ku).min(j);
            let mut acc = b[j];
            for i in 1..=lm {
                acc -= self.ab[(kv - i) * w + j] * b[j - i];
            }
            b[j] = acc / self.ab[kv * w + j];
        }
        for j in (0..n - 1).rev() {
            let lm = kl.min(n - 1 - j);
            let mut acc = b[j];
            for i in 1..=lm {
                acc -= self.ab[(kv + i) * w + j] * b[j + i];
            }
            b[j] = acc;
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
        }
    }

    /// Solve Aᴴ x = b in place.
    pub fn solve_adj(&self, b: &mut [Complex64]) {
        for v in b.iter_mut() {
            *v = v.conj();
        }
        self.solve_trans(b);
        for v in b.iter_mut() {
            *v = v.conj();
        }
    }

    /// Ratio of largest to smallest pivot modulus; a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        let w = self.n;
        let kv = self.kl + self.ku;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for j in 0..self.n {
            let d = self.ab[kv * w + j].norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

/// Dense complex LU with partial pivoting; the elimination runs row-parallel
/// once the matrix is large.
pub struct DenseLu {
    n: usize,
    a: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: Vec<Complex64>, n: usize) -> Result<DenseLu> {
        assert_eq!(a.len(), n * n);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let mut p = j;
            let mut best = a[j * n + j].norm_sqr();
            for i in j + 1..n {
                let cand = a[i * n + j].norm_sqr();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            ipiv[j] = p;
            if best == 0.0 {
                return Err(Error::Singular);
            }
            if p != j {
                for c in 0..n {
                    a.swap(j * n + c, p * n + c);
                }
            }
            let piv = a[j * n + j];
            for i in j + 1..n {
                let m = a[i * n + j] / piv;
                a[i * n + j] = m;
            }
            let (head, tail) = a.split_at_mut((j + 1) * n);
            let urow = &head[j * n..(j + 1) * n];
            let update = |row: &mut [Complex64]| {
                let m = row[j];
                if m.norm_sqr() != 0.0 {
                    for c in j + 1..n {
                        row[c] -= m * urow[c];
                    }
                }
            };
            if n - j > 256 {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(DenseLu { n, a, ipiv })
    }

    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
        }
        for j in 0..n {
            let bj = b[j];
            for i in j + 1..n {
                b[i] -= self.a[i * n + j] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.a[j * n + j];
            let bj = b[j];
            for i in 0..j {
                b[i] -= self.a[i * n + j] * bj;
            }
        }
    }
}

/// Solve a 2x2 complex system; returns `None` when the determinant underflows.
pub fn solve2(a: [[Complex64; 2]; 2], b: [Complex64; 2]) -> Option<[Complex64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() == 0.0 {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

/// Solve a 3x3 real system by explicit elimination with pivoting.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Result<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for j in 0..3 {
        let p = (j..3)
            .max_by(|&r, &s| m[r][j].abs().total_cmp(&m[s][j].abs()))
            .unwrap();
        if m[p][j] == 0.0 {
            return Err(Error::Singular);
        }
        m.swap(j, p);
        for i in j + 1..3 {
            let f = m[i][j] / m[j][j];
            for c in j..4 {
                m[i][c] -= f * m[j][c];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for j in (0..3).rev() {
        let mut acc = m[j][3];
        for c in j + 1..3 {
            acc -= m[j][c] * x[c];
        }
        x[j] = acc / m[j][j];
    }
    Ok(x)
}

/// 1-norm condition number of a 3x3 real matrix via the explicit inverse.
pub fn cond3(a: [[f64; 3]; 3]) -> f64 {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det == 0.0 || !det.is_finite() {
        return f64::INFINITY;
    }
    let inv = [
        [
            (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det,
            (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det,
            (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det,
        ],
        [
            (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det,
            (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det,
            (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det,
        ],
        [
            (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det,
            (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det,
            (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det,
        ],
    ];
    let norm1 = |m: &[[f64; 3]; 3]| {
        (0..3)
            .map(|j| (0..3).map(|i| m[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm1(&a) * norm1(&inv)
}

/// Least-squares line fit; returns (slope, intercept, r^2).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Seeded standard-normal sampler (Box-Muller over ChaCha8), reproducible
/// across platforms.
pub struct NormalSampler {
    rng: ChaCha8Rng,
}

impl NormalSampler {
    pub fn new(seed: u64) -> NormalSampler {
        NormalSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pair(&mut self) -> (f64, f64) {
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        (r * th.cos(), r * th.sin())
    }

    pub fn normal(&mut self) -> f64 {
        self.pair().0
    }

    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    pub fn complex_vec(&mut self, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|_| {
                let (a, b) = self.pair();
                Complex64::new(a, b)
            })
            .collect()
    }
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> (Banded, Vec<Complex64>) {
        let mut s = NormalSampler::new(seed);
        let mut b = Banded::new(n, kl, ku);
        let mut dense = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let (re, im) = (s.normal(), s.normal());
                let mut v = c(re, im);
                if i == j && i % 7 == 3 {
                    v = v.scale(1e-8);
                }
                b.set(i, j, v);
                dense[i * n + j] = v;
            }
        }
        (b, dense)
    }

    #[test]
    fn banded_solve_matches_dense() {
        for &(n, kl, ku, seed) in &[
            (40usize, 3usize, 2usize, 1u64),
            (13, 1, 1, 2),
            (60, 2, 3, 3),
        ] {
            let (band, dense) = random_banded(n, kl, ku, seed);
            let mut s = NormalSampler::new(seed + 100);
            let rhs = s.complex_vec(n);
            let lu = band.factor().unwrap();
            let mut x = rhs.clone();
            lu.solve(&mut x);
            let dlu = DenseLu::factor(dense, n).unwrap();
            let mut xd = rhs.clone();
            dlu.solve(&mut xd);
            for i in 0..n {
                assert!((x[i] - xd[i]).norm() < 1e-9, "entry {i}");
            }
        }
    }

    #[test]
    fn banded_transpose_solve_is_consistent() {
        let (band, dense) = random_banded(35, 3, 2, 9);
        let lu = band.factor().unwrap();
        let mut s = NormalSampler::new(4);
        let rhs = s.complex_vec(35);
        let mut x = rhs.clone();
        lu.solve_trans(&mut x);
        let mut resid = vec![c(0.0, 0.0); 35];
        for i in 0..35 {
            for j in 0..35 {
                resid[i] += dense[j * 35 + i] * x[j];
            }
            resid[i] -= rhs[i];
        }
        assert!(vec_norm(&resid) < 1e-9);
    }

    #[test]
    fn banded_adjoint_solve_is_consistent() {
        let (band, dense) = random_banded(28, 2, 2, 5);
        let lu = band.factor().unwrap();
        let mut s = NormalSampler::new(6);
        let rhs = s.complex_vec(28);
        let mut x = rhs.clone();
        lu.solve_adj(&mut x);
        let mut resid = vec![c(0.0, 0.0); 28];
        for i in 0..28 {
            for j in 0..28 {
                resid[i] += dense[j * 28 + i].conj() * x[j];
            }
            resid[i] -= rhs[i];
        }
        assert!(vec_norm(&resid) < 1e-9);
    }

    #[test]
    fn banded_apply_matches_dense_product() {
        let (band, dense) = random_banded(21, 3, 2, 11);
        let mut s = NormalSampler::new(12);
        let x = s.complex_vec(21);
        let y = band.apply(&x);
        for i in 0..21 {
            let mut acc = c(0.0, 0.0);
            for j in 0..21 {
                acc += dense[i * 21 + j] * x[j];
            }
            assert!((y[i] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_parallel_path_agrees_with_serial() {
        let n = 300;
        let mut s = NormalSampler::new(7);
        let a: Vec<Complex64> = s.complex_vec(n * n);
        let rhs = s.complex_vec(n);
        let lu = DenseLu::factor(a.clone(), n).unwrap();
        let mut x = rhs.clone();
        lu.solve(&mut x);
        let mut resid = vec![c(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = c(0.0, 0.0);
            for j in 0..n {
                acc += a[i * n + j] * x[j];
            }
            resid[i] = acc - rhs[i];
        }
        assert!(vec_norm(&resid) / vec_norm(&rhs) < 1e-10);
    }

    #[test]
    fn small_real_system() {
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = [1.0, -2.0, 0.5];
        let b = [
            a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
            a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
            a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
        ];
        let got = solve3(a, b).unwrap();
        for i in 0..3 {
            assert!((got[i] - x[i]).abs() < 1e-12);
        }
        assert!(cond3(a) < 1e2);
        let near = [
            [1.0, 1.0, 1.0],
            [1.0, 1.0 + 1e-14, 1.0],
            [1.0, 1.0, 1.0 + 1e-14],
        ];
        assert!(cond3(near) > 1e12);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 2.0).collect();
        let (s, i, r2) = fit_line(&xs, &ys);
        assert!((s - 0.5).abs() < 1e-14);
        assert!((i + 2.0).abs() < 1e-14);
        assert!((r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let a = NormalSampler::new(42).complex_vec(16);
        let b = NormalSampler::new(42).complex_vec(16);
        let d = NormalSampler::new(43).complex_vec(16);
        assert_eq!(a, b);
        assert_ne!(a, d);
        let mean = a.iter().map(|z| z.re).sum::<f64>() / 16.0;
        assert!(mean.abs() < 1.5);
    }
}
