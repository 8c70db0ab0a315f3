//! Cardinal cubic B-spline prefiltering and evaluation.
//!
//! Evaluation uses the reduction of the 4-tap sum per axis to two weighted
//! linear lookups, so a 2-D query costs four bilinear fetches.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::GridSpec;

/// Pole of the cubic B-spline prefilter.
pub const POLE: f64 = -0.267_949_192_431_122_7; // sqrt(3) - 2

/// Number of pole powers after which `POLE^k` is below 1e-18.
const HORIZON: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Whole-sample symmetric extension.
    Mirror,
    /// Constant extension of the edge coefficient.
    Clamp,
    /// Periodic extension, used for the log-polar buffers.
    Periodic,
}

/// Cubic cardinal B-spline.
pub fn bspline(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// `(B(a-2), B(a-1), B(a), B(a+1))` for a fractional offset `a` in `[0, 1)`.
///
/// For a query at `k + a`, `w[i]` multiplies the coefficient at tap `k + 2 - i`.
pub fn bspline_weights(a: f64) -> [f64; 4] {
    let b = 1.0 - a;
    let a2 = a * a;
    let a3 = a2 * a;
    [
        a3 / 6.0,
        (1.0 + 3.0 * a + 3.0 * a2 - 3.0 * a3) / 6.0,
        (4.0 - 6.0 * a2 + 3.0 * a3) / 6.0,
        b * b * b / 6.0,
    ]
}

/// `B^(k/n) = 2/3 + cos(2 pi k / n) / 3` for `k = 0..n`.
pub fn bspline_spectrum(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 2.0 / 3.0 + (2.0 * PI * k as f64 / n as f64).cos() / 3.0)
        .collect()
}

/// Mirror-boundary prefilter of a sequence.
pub fn prefilter_1d(samples: &[f64]) -> Vec<f64> {
    let mut c = samples.to_vec();
    prefilter_in_place(&mut c, Boundary::Mirror);
    c
}

/// Turns samples into spline coefficients in place.
pub fn prefilter_in_place(c: &mut [f64], boundary: Boundary) {
    let n = c.len();
    if n == 0 {
        return;
    }
    if n == 1 {
        return;
    }
    if boundary == Boundary::Clamp {
        clamp_solve(c);
        return;
    }
    let z = POLE;
    // causal pass
    c[0] = match boundary {
        Boundary::Mirror => mirror_causal_init(c, z),
        Boundary::Clamp => unreachable!(),
        Boundary::Periodic => {
            let terms = n.min(HORIZON + 1);
            let mut acc = c[0];
            let mut zk = 1.0;
            for i in 1..terms {
                zk *= z;
                acc += zk * c[n - i];
            }
            let denom = if n <= HORIZON {
                1.0 - z.powi(n as i32)
            } else {
                1.0
            };
            6.0 * acc / denom
        }
    };
    for k in 1..n {
        c[k] = 6.0 * c[k] + z * c[k - 1];
    }
    // anticausal pass
    c[n - 1] = match boundary {
        Boundary::Mirror => z / (z * z - 1.0) * (c[n - 1] + z * c[n - 2]),
        Boundary::Clamp => unreachable!(),
        Boundary::Periodic => {
            let terms = n.min(HORIZON + 1);
            let mut acc = c[n - 1];
            let mut zk = 1.0;
            for i in 1..terms {
                zk *= z;
                acc += zk * c[i - 1];
            }
            let denom = if n <= HORIZON {
                1.0 - z.powi(n as i32)
            } else {
                1.0
            };
            -z * acc / denom
        }
    };
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

/// Thomas solve of `(c_{k-1} + 4 c_k + c_{k+1}) / 6 = f_k` with the
/// coefficients extended by their edge values.
fn clamp_solve(c: &mut [f64]) {
    let n = c.len();
    let mut diag = vec![4.0; n];
    diag[0] = 5.0;
    diag[n - 1] = 5.0;
    for v in c.iter_mut() {
        *v *= 6.0;
    }
    let mut upper = vec![0.0; n];
    upper[0] = 1.0 / diag[0];
    c[0] /= diag[0];
    for k in 1..n {
        let m = diag[k] - upper[k - 1];
        upper[k] = 1.0 / m;
        c[k] = (c[k] - c[k - 1]) / m;
    }
    for k in (0..n - 1).rev() {
        c[k] -= upper[k] * c[k + 1];
    }
}

fn mirror_causal_init(f: &[f64], z: f64) -> f64 {
    let n = f.len();
    if n > HORIZON {
        let mut acc = 0.0;
        let mut zk = 1.0;
        for &v in f.iter().take(HORIZON + 1) {
            acc += zk * v;
            zk *= z;
        }
        return 6.0 * acc;
    }
    let z2n = z.powi(2 * n as i32 - 2);
    let mut acc = f[0] + z.powi(n as i32 - 1) * f[n - 1];
    for (k, &v) in f.iter().enumerate().take(n - 1).skip(1) {
        acc += (z.powi(k as i32) + z.powi((2 * n - 2 - k) as i32)) * v;
    }
    6.0 * acc / (1.0 - z2n)
}

/// Prefiltered coefficients on a source grid.
#[derive(Debug, Clone)]
pub struct SplineCoeffs {
    pub values: Vec<f64>,
    pub grid: GridSpec,
    pub boundary: Boundary,
}

/// Prefilters along columns and rows, in that order. The two 1-D filters commute.
pub fn prefilter_2d(raster: &[f64], grid: GridSpec, boundary: Boundary) -> Result<SplineCoeffs> {
    let mut values = raster.to_vec();
    prefilter_2d_in_place(&mut values, grid.rows, grid.cols, boundary)?;
    Ok(SplineCoeffs {
        values,
        grid,
        boundary,
    })
}

pub fn prefilter_2d_in_place(
    v: &mut [f64],
    rows: usize,
    cols: usize,
    boundary: Boundary,
) -> Result<()> {
    if v.len() != rows * cols {
        return Err(Error::Shape(format!(
            "raster has {} values, grid {rows}x{cols}",
            v.len()
        )));
    }
    prefilter_rows(v, cols, boundary);
    prefilter_cols(v, rows, cols, boundary);
    Ok(())
}

pub fn prefilter_rows(v: &mut [f64], cols: usize, boundary: Boundary) {
    for row in v.chunks_exact_mut(cols) {
        prefilter_in_place(row, boundary);
    }
}

pub fn prefilter_cols(v: &mut [f64], rows: usize, cols: usize, boundary: Boundary) {
    let mut tmp = vec![0.0; rows];
    for c in 0..cols {
        for r in 0..rows {
            tmp[r] = v[r * cols + c];
        }
        prefilter_in_place(&mut tmp, boundary);
        for r in 0..rows {
            v[r * cols + c] = tmp[r];
        }
    }
}

#[inline]
fn wrap_index(i: isize, n: usize, boundary: Boundary) -> usize {
    let n_i = n as isize;
    if (0..n_i).contains(&i) {
        return i as usize;
    }
    match boundary {
        Boundary::Periodic => i.rem_euclid(n_i) as usize,
        Boundary::Clamp => i.clamp(0, n_i - 1) as usize,
        Boundary::Mirror => {
            if n == 1 {
                return 0;
            }
            let period = 2 * (n_i - 1);
            let j = i.rem_euclid(period);
            (if j < n_i { j } else { period - j }) as usize
        }
    }
}

/// The two linear lookups replacing the four taps along one axis:
/// `(tap, fraction, weight)` pairs.
#[inline]
pub fn lookup_pairs(u: f64) -> (isize, [(isize, f64, f64); 2]) {
    let k = u.floor();
    let w = bspline_weights(u - k);
    let k = k as isize;
    let lo = w[3] + w[2];
    let hi = w[1] + w[0];
    let flo = if lo > 0.0 { w[2] / lo } else { 1.0 };
    let fhi = if hi > 0.0 { w[0] / hi } else { 0.0 };
    (k, [(k - 1, flo, lo), (k + 1, fhi, hi)])
}

impl SplineCoeffs {
    fn check(&self, u: f64, n: usize) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::OutOfRange(format!("non-finite query {u}")));
        }
        if self.boundary != Boundary::Periodic && (u < -1.0 || u > n as f64) {
            return Err(Error::OutOfRange(format!("query {u} outside [-1, {n}]")));
        }
        Ok(())
    }

    /// Value at continuous index `(u, v)` (row, column).
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        self.check(u, self.grid.rows)?;
        self.check(v, self.grid.cols)?;
        Ok(self.eval_unchecked(u, v))
    }

    /// Like [`eval`](Self::eval) but skips the range check. Queries outside the
    /// extension margin still return a value from the boundary extension.
    #[inline]
    pub fn eval_unchecked(&self, u: f64, v: f64) -> f64 {
        let (rows, cols) = (self.grid.rows, self.grid.cols);
        let (_, pu) = lookup_pairs(u);
        let (_, pv) = lookup_pairs(v);
        let mut acc = 0.0;
        for &(ru, fu, wu) in &pu {
            let r0 = wrap_index(ru, rows, self.boundary) * cols;
            let r1 = wrap_index(ru + 1, rows, self.boundary) * cols;
            for &(cv, fv, wv) in &pv {
                let c0 = wrap_index(cv, cols, self.boundary);
                let c1 = wrap_index(cv + 1, cols, self.boundary);
                let top = self.values[r0 + c0] + fv * (self.values[r0 + c1] - self.values[r0 + c0]);
                let bot = self.values[r1 + c0] + fv * (self.values[r1 + c1] - self.values[r1 + c0]);
                acc += wu * wv * (top + fu * (bot - top));
            }
        }
        acc
    }

    pub fn interp(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        points.iter().map(|&(u, v)| self.eval(u, v)).collect()
    }
}

/// Evaluates a 1-D coefficient sequence at continuous index `u`.
#[inline]
pub fn eval_1d(c: &[f64], u: f64, boundary: Boundary) -> f64 {
    let (_, p) = lookup_pairs(u);
    let n = c.len();
    let mut acc = 0.0;
    for &(k, f, w) in &p {
        let a = c[wrap_index(k, n, boundary)];
        let b = c[wrap_index(k + 1, n, boundary)];
        acc += w * (a + f * (b - a));
    }
    acc
}

pub fn interp_cubic_2d(coeffs: &SplineCoeffs, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    coeffs.interp(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(rows: usize, cols: usize) -> GridSpec {
        GridSpec {
            kind: GridKind::Cartesian,
            rows,
            cols,
            origin: [0.0, 0.0],
            spacing: [1.0, 1.0],
        }
    }

    /// Dense solve of the mirror-extended system `(c_{k-1} + 4 c_k + c_{k+1}) / 6 = f_k`.
    fn tridiagonal_oracle(f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut a = vec![vec![0.0; n]; n];
        for k in 0..n {
            a[k][k] += 4.0 / 6.0;
            let l = if k == 0 { 1 } else { k - 1 };
            let r = if k == n - 1 { n - 2 } else { k + 1 };
            a[k][l] += 1.0 / 6.0;
            a[k][r] += 1.0 / 6.0;
        }
        let mut b = f.to_vec();
        for i in 0..n {
            let p = a[i][i];
            for j in i + 1..n {
                let q = a[j][i] / p;
                if q != 0.0 {
                    for k in i..n {
                        a[j][k] -= q * a[i][k];
                    }
                    b[j] -= q * b[i];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i][j] * x[j];
            }
            x[i] = s / a[i][i];
        }
        x
    }

    fn four_tap(c: &SplineCoeffs, u: f64, v: f64) -> f64 {
        let (ku, kv) = (u.floor(), v.floor());
        let mut acc = 0.0;
        for i in -1..=2 {
            for j in -1..=2 {
                let r = wrap_index(ku as isize + i, c.grid.rows, c.boundary);
                let cc = wrap_index(kv as isize + j, c.grid.cols, c.boundary);
                acc += bspline(u - (ku + i as f64))
                    * bspline(v - (kv + j as f64))
                    * c.values[r * c.grid.cols + cc];
            }
        }
        acc
    }

    #[test]
    fn weights_examples() {
        let w = bspline_weights(0.0);
        let e = [0.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for i in 0..4 {
            assert!((w[i] - e[i]).abs() < 1e-15);
        }
        let w = bspline_weights(0.5);
        let e = [0.0208333, 0.4791667, 0.4791667, 0.0208333];
        for i in 0..4 {
            assert!((w[i] - e[i]).abs() < 1e-7);
        }
        for &a in &[0.0, 0.13, 0.5, 0.77, 0.999] {
            let w = bspline_weights(a);
            for i in 0..4 {
                assert!((w[i] - bspline(a - 2.0 + i as f64)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = bspline_spectrum(16);
        assert_eq!(s[0], 1.0);
        assert!((s[8] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s[4] - 2.0 / 3.0).abs() < 1e-15);
        assert!(s.iter().all(|&v| (1.0 / 3.0 - 1e-15..=1.0).contains(&v)));
    }

    #[test]
    fn prefilter_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[4usize, 5, 9, 32, 33, 64, 100] {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = prefilter_1d(&f);
            let o = tridiagonal_oracle(&f);
            for k in 0..n {
                assert!(
                    (c[k] - o[k]).abs() < 1e-12,
                    "n={n} k={k}: {} vs {}",
                    c[k],
                    o[k]
                );
            }
        }
        let mut imp = vec![0.0; 32];
        imp[11] = 1.0;
        let c = prefilter_1d(&imp);
        let o = tridiagonal_oracle(&imp);
        for k in 0..32 {
            assert!((c[k] - o[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn prefilter_constant_and_reconvolve() {
        for b in [Boundary::Mirror, Boundary::Clamp, Boundary::Periodic] {
            let mut c = vec![2.5; 40];
            prefilter_in_place(&mut c, b);
            assert!(c.iter().all(|&v| (v - 2.5).abs() < 1e-13), "{b:?}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in [Boundary::Mirror, Boundary::Clamp, Boundary::Periodic] {
            let mut c = f.clone();
            prefilter_in_place(&mut c, b);
            for k in 1..63 {
                let r = (c[k - 1] + 4.0 * c[k] + c[k + 1]) / 6.0;
                assert!((r - f[k]).abs() < 1e-12, "{b:?}");
            }
        }
        let mut c = f.clone();
        prefilter_in_place(&mut c, Boundary::Periodic);
        let r0 = (c[63] + 4.0 * c[0] + c[1]) / 6.0;
        assert!((r0 - f[0]).abs() < 1e-12);
        let mut c = f.clone();
        prefilter_in_place(&mut c, Boundary::Clamp);
        assert!(((5.0 * c[0] + c[1]) / 6.0 - f[0]).abs() < 1e-12);
    }

    #[test]
    fn periodic_long_sequence() {
        let n = 300;
        let f: Vec<f64> = (0..n)
            .map(|k| (2.0 * PI * 7.0 * k as f64 / n as f64).sin())
            .collect();
        let mut c = f.clone();
        prefilter_in_place(&mut c, Boundary::Periodic);
        let gain = 1.0 / (2.0 / 3.0 + (2.0 * PI * 7.0 / n as f64).cos() / 3.0);
        for k in 0..n {
            assert!((c[k] - gain * f[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_condition_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (rows, cols) = (20, 27);
        let f: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let c = prefilter_2d(&f, grid(rows, cols), Boundary::Mirror).unwrap();
        for r in 0..rows {
            for k in 0..cols {
                let v = c.eval(r as f64, k as f64).unwrap();
                assert!((v - f[r * cols + k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ramp_reproduced() {
        let (rows, cols) = (64, 64);
        let f: Vec<f64> = (0..rows * cols)
            .map(|i| 0.5 + 0.25 * (i / cols) as f64 - 0.1 * (i % cols) as f64)
            .collect();
        let c = prefilter_2d(&f, grid(rows, cols), Boundary::Mirror).unwrap();
        for &(u, v) in &[(30.3, 27.9), (32.5, 32.5), (40.01, 25.71)] {
            let e = 0.5 + 0.25 * u - 0.1 * v;
            assert!((c.eval(u, v).unwrap() - e).abs() < 1e-10);
        }
    }

    #[test]
    fn two_lookup_equals_four_tap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f: Vec<f64> = (0..32 * 32).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in [Boundary::Mirror, Boundary::Periodic, Boundary::Clamp] {
            let c = prefilter_2d(&f, grid(32, 32), b).unwrap();
            for _ in 0..1000 {
                let u = rng.random_range(-1.0..32.0);
                let v = rng.random_range(-1.0..32.0);
                assert!((c.eval(u, v).unwrap() - four_tap(&c, u, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_and_commuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let prod: Vec<f64> = (0..32 * 32).map(|i| a[i / 32] * b[i % 32]).collect();
        let c = prefilter_2d(&prod, grid(32, 32), Boundary::Mirror).unwrap();
        let (ca, cb) = (prefilter_1d(&a), prefilter_1d(&b));
        for i in 0..32 * 32 {
            assert!((c.values[i] - ca[i / 32] * cb[i % 32]).abs() < 1e-10);
        }
        let f: Vec<f64> = (0..32 * 32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = f.clone();
        prefilter_rows(&mut x, 32, Boundary::Mirror);
        prefilter_cols(&mut x, 32, 32, Boundary::Mirror);
        let mut y = f.clone();
        prefilter_cols(&mut y, 32, 32, Boundary::Mirror);
        prefilter_rows(&mut y, 32, Boundary::Mirror);
        for i in 0..32 * 32 {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn range_errors() {
        let c = prefilter_2d(&[1.0; 16], grid(4, 4), Boundary::Mirror).unwrap();
        assert!(c.eval(-1.5, 0.0).is_err());
        assert!(c.eval(0.0, 4.5).is_err());
        assert!(c.eval(f64::NAN, 0.0).is_err());
        assert!(c.eval(3.9, -0.9).is_ok());
        assert!(prefilter_2d(&[1.0; 15], grid(4, 4), Boundary::Mirror).is_err());
    }
}
