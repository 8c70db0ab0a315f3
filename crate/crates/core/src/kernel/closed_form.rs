//! Closed form of `P(mu, alpha, beta) = int_{-beta}^{beta} cos(t)^alpha e^{i mu t} dt`
//! as a gamma-function ratio minus two terminating-at-infinity 3F2 series in
//! `cos^2 beta`.
//!
//! For `|mu|` much larger than `|Im alpha|` the series terms grow by many orders
//! of magnitude before converging, and `f64` summation loses every digit. The
//! plain evaluator detects this and reports [`ClosedFormError::IllConditioned`];
//! the extended evaluator sums the series in fixed point with enough bits.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fixed::{FixedCtx, Fx};
use super::gamma::{is_pole, ln_gamma};
use crate::error::{Error, Result};

const MAX_TERMS: usize = 100_000;
const EPS: f64 = f64::EPSILON;
/// Estimated relative error above which the `f64` result is rejected.
pub const CONDITION_TOL: f64 = 1e-10;
/// Absolute error accepted regardless of the size of the result.
pub const ABS_TOL: f64 = 1e-14;
/// Radius of the circle used to average across removable singularities.
const REG_RADIUS: f64 = 0.1;
const REG_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormError {
    /// Estimated relative error of the `f64` evaluation.
    IllConditioned(f64),
    NonConvergent,
}

impl std::fmt::Display for ClosedFormError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::IllConditioned(e) => write!(
                f,
                "ill-conditioned series (estimated relative error {e:.1e})"
            ),
            Self::NonConvergent => write!(f, "series did not converge within {MAX_TERMS} terms"),
        }
    }
}

impl From<ClosedFormError> for Error {
    fn from(e: ClosedFormError) -> Self {
        Error::Kernel(e.to_string())
    }
}

/// Parameters of the two series `3F2(1, a2, a3; b1, b2; x)`; they differ in `b2` only.
#[derive(Clone, Copy)]
struct SeriesParams {
    a2: Complex64,
    a3: Complex64,
    b1: Complex64,
    b2: Complex64,
    x: f64,
}

impl SeriesParams {
    fn ratio(&self, n: f64) -> Complex64 {
        (self.a2 + n) * (self.a3 + n) * self.x / ((self.b1 + n) * (self.b2 + n))
    }
}

/// Sum, sum of magnitudes.
fn series_f64(p: &SeriesParams) -> std::result::Result<(Complex64, f64), ClosedFormError> {
    let mut t = Complex64::new(1.0, 0.0);
    let mut s = t;
    let mut abs = 1.0;
    for n in 0..MAX_TERMS {
        let r = p.ratio(n as f64);
        t *= r;
        s += t;
        let m = t.norm();
        abs += m;
        if !abs.is_finite() {
            return Err(ClosedFormError::IllConditioned(f64::INFINITY));
        }
        if r.norm() < 1.0 && m <= 1e-16 * s.norm() || m == 0.0 {
            return Ok((s, abs));
        }
    }
    Err(ClosedFormError::NonConvergent)
}

/// `log2` of the largest term magnitude.
fn log2_peak(p: &SeriesParams) -> std::result::Result<f64, ClosedFormError> {
    let mut lt = 0.0f64;
    let mut peak = 0.0f64;
    for n in 0..MAX_TERMS {
        let r = p.ratio(n as f64).norm();
        if r == 0.0 {
            return Ok(peak);
        }
        lt += r.log2();
        peak = peak.max(lt);
        if r < 1.0 && lt < peak - 400.0 {
            return Ok(peak);
        }
    }
    Err(ClosedFormError::NonConvergent)
}

/// Prefactors of the closed form at one `(mu, alpha)`.
struct Parts {
    p0: Complex64,
    p0_err: f64,
    pref1: Complex64,
    pref2: Complex64,
    s1: SeriesParams,
    s2: SeriesParams,
}

fn parts(mu: f64, alpha: Complex64, beta: f64, sin_mb: f64, cos_mb: f64) -> Parts {
    let half = Complex64::new(0.5, 0.0);
    let za = (alpha + 1.0) * 0.5;
    let zb = (alpha + 2.0) * 0.5;
    let zc = (alpha + mu) * 0.5 + 1.0;
    let zd = (alpha - mu) * 0.5 + 1.0;
    let (p0, p0_err) = if is_pole(zc) || is_pole(zd) {
        (Complex64::new(0.0, 0.0), 0.0)
    } else {
        let la = ln_gamma(za);
        let lh = ln_gamma(half);
        let lb = ln_gamma(zb);
        let lc = ln_gamma(zc);
        let ld = ln_gamma(zd);
        let v = (la + lh + lb - lc - ld).exp();
        let mag = la.norm() + lb.norm() + lc.norm() + ld.norm() + 10.0;
        (v, v.norm() * EPS * mag)
    };
    let (sb, cb) = beta.sin_cos();
    let lcb = cb.ln();
    let pref1 = if sin_mb == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        ((alpha + 2.0) * lcb).exp() * (2.0 * mu * sin_mb) / ((alpha + 1.0) * (alpha + 2.0))
    };
    let pref2 = ((alpha + 1.0) * lcb).exp() * (2.0 * cos_mb * sb) / (alpha + 1.0);
    let a2 = alpha * 0.5 + mu * 0.5 + 1.0;
    let a3 = alpha * 0.5 - mu * 0.5 + 1.0;
    let b1 = (alpha + 3.0) * 0.5;
    let x = cb * cb;
    Parts {
        p0,
        p0_err,
        pref1,
        pref2,
        s1: SeriesParams {
            a2,
            a3,
            b1,
            b2: alpha * 0.5 + 2.0,
            x,
        },
        s2: SeriesParams {
            a2,
            a3,
            b1,
            b2: alpha * 0.5 + 1.0,
            x,
        },
    }
}

/// Whether `alpha` is close enough to a negative integer that the formula's
/// removable singularities must be averaged out.
fn near_singular(alpha: Complex64) -> bool {
    alpha.re < -0.5 && (alpha - alpha.re.round()).norm() < REG_RADIUS / 2.0
}

fn circle_mean<F>(alpha: Complex64, mut f: F) -> std::result::Result<Complex64, ClosedFormError>
where
    F: FnMut(Complex64) -> std::result::Result<Complex64, ClosedFormError>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..REG_POINTS {
        let phi = 2.0 * PI * (j as f64 + 0.5) / REG_POINTS as f64;
        acc += f(alpha + Complex64::from_polar(REG_RADIUS, phi))?;
    }
    Ok(acc / REG_POINTS as f64)
}

fn f64_direct(
    mu: f64,
    alpha: Complex64,
    beta: f64,
    sin_mb: f64,
    cos_mb: f64,
) -> std::result::Result<Complex64, ClosedFormError> {
    let p = parts(mu, alpha, beta, sin_mb, cos_mb);
    let (f1, abs1) = if p.pref1 == Complex64::new(0.0, 0.0) {
        (Complex64::new(0.0, 0.0), 0.0)
    } else {
        series_f64(&p.s1)?
    };
    let (f2, abs2) = series_f64(&p.s2)?;
    let value = p.p0 + p.pref1 * f1 - p.pref2 * f2;
    let err = 8.0 * EPS * (p.pref1.norm() * abs1 + p.pref2.norm() * abs2) + p.p0_err;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(ClosedFormError::IllConditioned(f64::INFINITY));
    }
    let rel = err / value.norm().max(f64::MIN_POSITIVE);
    if rel > CONDITION_TOL && err > ABS_TOL {
        return Err(ClosedFormError::IllConditioned(rel));
    }
    Ok(value)
}

/// `f64` closed form; `sin_mb`, `cos_mb` are `sin(mu beta)`, `cos(mu beta)`,
/// passed in so that grid frequencies can use exact values.
pub fn closed_form_f64(
    mu: f64,
    alpha: Complex64,
    beta: f64,
    sin_mb: f64,
    cos_mb: f64,
) -> std::result::Result<Complex64, ClosedFormError> {
    if near_singular(alpha) {
        circle_mean(alpha, |a| f64_direct(mu, a, beta, sin_mb, cos_mb))
    } else {
        f64_direct(mu, alpha, beta, sin_mb, cos_mb)
    }
}

fn series_fixed(
    ctx: &FixedCtx,
    alpha: &Fx,
    mu: &Fx,
    x: &Fx,
    b2_shift: i64,
    p: &SeriesParams,
) -> Complex64 {
    let ha = ctx.half(alpha);
    let hm = ctx.half(mu);
    let a2 = ctx.add_int(&ctx.add(&ha, &hm), 1);
    let neg_hm = Fx {
        re: -&hm.re,
        im: -&hm.im,
    };
    let a3 = ctx.add_int(&ctx.add(&ha, &neg_hm), 1);
    let b1 = ctx.half(&ctx.add_int(alpha, 3));
    let b2 = ctx.add_int(&ha, b2_shift);
    let mut t = ctx.one();
    let mut s = ctx.one();
    for n in 0..MAX_TERMS as i64 {
        let num = ctx.mul(&ctx.mul(&ctx.add_int(&a2, n), &ctx.add_int(&a3, n)), x);
        let den = ctx.mul(&ctx.add_int(&b1, n), &ctx.add_int(&b2, n));
        t = ctx.div(&ctx.mul(&t, &num), &den);
        s = ctx.add(&s, &t);
        let tm = ctx.to_complex(&t).norm();
        if tm == 0.0 {
            break;
        }
        if p.ratio(n as f64).norm() < 1.0 && tm <= 1e-24 * ctx.to_complex(&s).norm() {
            break;
        }
    }
    ctx.to_complex(&s)
}

fn extended_direct(
    mu: f64,
    alpha: Complex64,
    beta: f64,
    sin_mb: f64,
    cos_mb: f64,
) -> std::result::Result<Complex64, ClosedFormError> {
    let p = parts(mu, alpha, beta, sin_mb, cos_mb);
    let need1 = p.pref1 != Complex64::new(0.0, 0.0);
    let mut peak = log2_peak(&p.s2)?;
    if need1 {
        peak = peak.max(log2_peak(&p.s1)?);
    }
    let bits = (peak.max(0.0).ceil() as u32 + 140).next_multiple_of(32);
    let ctx = FixedCtx::new(bits);
    let a = ctx.complex(alpha);
    let m = ctx.complex(Complex64::new(mu, 0.0));
    let c = ctx.complex(Complex64::new(beta.cos(), 0.0));
    let x = ctx.mul(&c, &c);
    let f2 = series_fixed(&ctx, &a, &m, &x, 1, &p.s2);
    let f1 = if need1 {
        series_fixed(&ctx, &a, &m, &x, 2, &p.s1)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(p.p0 + p.pref1 * f1 - p.pref2 * f2)
}

/// Closed form with the series summed in fixed point at a precision sized
/// from the largest term, so that cancellation does not destroy the result.
pub fn closed_form_extended(
    mu: f64,
    alpha: Complex64,
    beta: f64,
    sin_mb: f64,
    cos_mb: f64,
) -> std::result::Result<Complex64, ClosedFormError> {
    if near_singular(alpha) {
        circle_mean(alpha, |a| extended_direct(mu, a, beta, sin_mb, cos_mb))
    } else {
        extended_direct(mu, alpha, beta, sin_mb, cos_mb)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < PI / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} outside (0, pi/2)"
        )));
    }
    Ok(())
}

/// `P(mu, alpha, beta)` from the closed form in `f64` arithmetic. Fails with
/// [`Error::Kernel`] when the estimated error exceeds [`CONDITION_TOL`] and
/// the estimated absolute error exceeds [`ABS_TOL`].
pub fn p_closed_form(mu: f64, alpha: Complex64, beta: f64) -> Result<Complex64> {
    check_beta(beta)?;
    let (s, c) = (mu * beta).sin_cos();
    Ok(closed_form_f64(mu, alpha, beta, s, c)?)
}

/// `P(mu, alpha, beta)` from the closed form with extended-precision series.
pub fn p_closed_form_extended(mu: f64, alpha: Complex64, beta: f64) -> Result<Complex64> {
    check_beta(beta)?;
    let (s, c) = (mu * beta).sin_cos();
    Ok(closed_form_extended(mu, alpha, beta, s, c)?)
}

/// `h(mu, alpha, beta)` of the two-step recursion in `alpha`.
pub fn recursion_h(mu: f64, alpha: Complex64, beta: f64) -> Complex64 {
    let (sb, cb) = beta.sin_cos();
    let (smb, cmb) = (mu * beta).sin_cos();
    let lcb = cb.ln();
    let ca = (alpha * lcb).exp();
    let ca1 = ((alpha - 1.0) * lcb).exp();
    (ca * (mu * smb) - alpha * ca1 * (cmb * sb)) * 2.0 / (alpha * (alpha - 1.0))
}

/// Right-hand side of `P(mu, alpha - 2) = alpha/(alpha-1) (1 - mu^2/alpha^2) P(mu, alpha) + h`.
pub fn recursion_step(mu: f64, alpha: Complex64, beta: f64, p_alpha: Complex64) -> Complex64 {
    alpha / (alpha - 1.0) * (1.0 - mu * mu / (alpha * alpha)) * p_alpha
        + recursion_h(mu, alpha, beta)
}
