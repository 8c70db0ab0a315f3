//! Endpoint-corrected trapezoidal evaluation of `P(mu, alpha, beta)`, per bin
//! and for a whole row of `mu` values through one FFT.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Corrections added to the trapezoid weights of the first and last seven nodes,
/// in units of `1/120960`. The rule integrates polynomials of degree 7 exactly.
pub const ENDPOINT_CORRECTIONS: [i64; 7] = [-23681, 55688, -66109, 57024, -31523, 9976, -1375];
pub const ENDPOINT_DENOM: f64 = 120_960.0;

/// Weights of the corrected rule on `n + 1` equispaced nodes (`n >= 14`),
/// for unit spacing.
pub fn endpoint_weights(n: usize) -> Vec<f64> {
    assert!(n >= 14, "need at least 15 nodes");
    let mut w = vec![1.0; n + 1];
    w[0] = 0.5;
    w[n] = 0.5;
    for (i, &c) in ENDPOINT_CORRECTIONS.iter().enumerate() {
        let d = c as f64 / ENDPOINT_DENOM;
        w[i] += d;
        w[n - i] += d;
    }
    w
}

fn integrand(theta: f64, mu: f64, alpha: Complex64) -> Complex64 {
    (alpha * theta.cos().ln()).exp() * Complex64::from_polar(1.0, mu * theta)
}

/// Resolution scale of `cos^alpha` near the interval ends: its phase
/// frequency plus the inverse distance to the singularity at `pi/2`.
fn alpha_frequency(alpha: Complex64, beta: f64) -> f64 {
    alpha.im.abs() * beta.tan() + (1.0 + alpha.re.abs()) / (PI / 2.0 - beta)
}

/// Node count used by [`p_quadrature`].
pub fn quadrature_nodes(mu: f64, alpha: Complex64, beta: f64, oversampling: usize) -> usize {
    let cycles = (2.0 * beta * (mu.abs() + alpha_frequency(alpha, beta)) / PI)
        .ceil()
        .max(1.0) as usize;
    (4 * oversampling * cycles).max(64)
}

/// `P(mu, alpha, beta)` by the corrected trapezoid rule.
pub fn p_quadrature(
    mu: f64,
    alpha: Complex64,
    beta: f64,
    oversampling: usize,
) -> Result<Complex64> {
    if oversampling < 2 {
        return Err(Error::InvalidParameter(format!(
            "oversampling {oversampling} < 2"
        )));
    }
    if !(beta > 0.0 && beta < PI / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} outside (0, pi/2)"
        )));
    }
    let n = quadrature_nodes(mu, alpha, beta, oversampling);
    let h = 2.0 * beta / n as f64;
    let w = endpoint_weights(n);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &wj) in w.iter().enumerate() {
        acc += integrand(-beta + j as f64 * h, mu, alpha) * wj;
    }
    Ok(acc * h)
}

/// `P(mu_k, alpha, beta)` for `mu_k = -2 pi k / period`, `k = 0..=kmax`, from one
/// FFT of the corrected samples. `period` must be a multiple of `2 beta`.
pub fn p_row_fft(
    kmax: usize,
    alpha: Complex64,
    beta: f64,
    period: f64,
    oversampling: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let pad = (period / (2.0 * beta)).round().max(1.0) as usize;
    let mu_max = 2.0 * PI * kmax as f64 / period;
    let need = oversampling as f64 * 2.0 * beta * (mu_max + alpha_frequency(alpha, beta)) / PI;
    let nq = (need.ceil() as usize)
        .max(2 * kmax + 1)
        .max(64)
        .next_power_of_two();
    let h = 2.0 * beta / nq as f64;
    let w = endpoint_weights(nq);
    let len = pad * nq;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (j, &wj) in w.iter().enumerate() {
        let theta = -beta + j as f64 * h;
        buf[j % len] += (alpha * theta.cos().ln()).exp() * wj;
    }
    planner.plan_fft_forward(len).process(&mut buf);
    (0..=kmax)
        .map(|k| {
            // exp(-i mu_k beta) = exp(i pi k / pad)
            let phase = Complex64::from_polar(1.0, PI * (k % (2 * pad)) as f64 / pad as f64);
            buf[k % len] * phase * h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correction_sum_is_zero() {
        assert_eq!(ENDPOINT_CORRECTIONS.iter().sum::<i64>(), 0);
        let w = endpoint_weights(20);
        assert!((w.iter().sum::<f64>() - 20.0).abs() < 1e-13);
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        let n = 30;
        let w = endpoint_weights(n);
        for deg in 0..=7 {
            let q: f64 = w
                .iter()
                .enumerate()
                .map(|(j, &wj)| wj * (j as f64).powi(deg))
                .sum();
            let exact = (n as f64).powi(deg + 1) / (deg + 1) as f64;
            assert!((q - exact).abs() < 1e-9 * exact, "degree {deg}");
        }
    }

    #[test]
    fn elementary_case() {
        let v = p_quadrature(2.0, Complex64::new(0.0, 0.0), PI / 3.0, 8).unwrap();
        assert!((v - Complex64::new((2.0 * PI / 3.0).sin(), 0.0)).norm() < 1e-8);
        let beta = PI / 3.0;
        let s = beta.sin();
        let v = p_quadrature(0.0, Complex64::new(-1.0, 0.0), beta, 8).unwrap();
        assert!((v.re - ((1.0 + s) / (1.0 - s)).ln()).abs() < 1e-8);
        assert!(p_quadrature(0.0, Complex64::new(0.0, 0.0), beta, 1).is_err());
    }

    #[test]
    fn row_fft_matches_per_bin() {
        let beta = PI / 4.0;
        let mut planner = FftPlanner::new();
        for &alpha in &[Complex64::new(-1.0, -7.3), Complex64::new(0.0, 3.1)] {
            for &period in &[2.0 * beta, 4.0 * beta] {
                let row = p_row_fft(20, alpha, beta, period, 16, &mut planner);
                for (k, v) in row.iter().enumerate() {
                    let mu = -2.0 * PI * k as f64 / period;
                    let d = p_quadrature(mu, alpha, beta, 8).unwrap();
                    let e = crate::kernel::p_closed_form_extended(mu, alpha, beta).unwrap();
                    assert!(
                        (v - e).norm() < 1e-7 * e.norm().max(1e-2),
                        "k={k}: {v} vs {e}"
                    );
                    assert!(
                        (d - e).norm() < 1e-7 * e.norm().max(1e-2),
                        "k={k}: {d} vs {e}"
                    );
                }
            }
        }
    }
}
