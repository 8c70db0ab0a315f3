//! Fourier coefficients of the log-polar kernels `zeta` (Radon) and `zeta#`
//! (back-projection) on the doubled periodic rectangle `[-beta, beta) x [log a_r, 0)`.
//!
//! Bin `(k_t, k_r)` holds `P(mu, alpha, beta)` with `mu = -2 pi k_t / T_theta` and
//! `alpha = -2 pi i k_r / T_rho - 1` (Radon) or `alpha = 2 pi i k_r / T_rho`
//! (back-projection), where `T_theta = 2 beta` and `T_rho = -log a_r` on the
//! standard grid.

pub mod closed_form;
pub mod fixed;
pub mod gamma;
pub mod quadrature;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::geometry::GeometryPlan;
use closed_form::{closed_form_extended, closed_form_f64, ClosedFormError};

pub use closed_form::{p_closed_form, p_closed_form_extended, recursion_h, recursion_step};
pub use quadrature::{p_quadrature, p_row_fft};

/// Quadrature oversampling for plan spectra; the rule's error is near 1e-10 here.
pub const DEFAULT_OVERSAMPLING: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Radon,
    Backprojection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelMethod {
    /// `f64` closed form; bins it cannot resolve come from the FFT quadrature.
    #[default]
    ClosedForm,
    /// Closed form with extended-precision series wherever `f64` is not enough.
    ClosedFormExtended,
    /// Endpoint-corrected quadrature only.
    Quadrature,
}

/// How many bins each evaluation path produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpectrumStats {
    pub closed_form: usize,
    pub extended: usize,
    pub quadrature: usize,
}

#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    pub kind: KernelKind,
    /// Number of `k_theta` bins.
    pub rows: usize,
    /// Number of `k_rho` bins.
    pub cols: usize,
    /// Row-major, both axes in FFT order. Nyquist bins hold the average of the
    /// two aliased frequencies, so the inverse transform of a real sequence
    /// stays real.
    pub coeffs: Vec<Complex64>,
    pub beta: f64,
    pub theta_period: f64,
    pub rho_period: f64,
    pub stats: SpectrumStats,
}

impl KernelSpectrum {
    pub fn at(&self, kt: isize, kr: isize) -> Complex64 {
        let r = kt.rem_euclid(self.rows as isize) as usize;
        let c = kr.rem_euclid(self.cols as isize) as usize;
        self.coeffs[r * self.cols + c]
    }
}

/// Description of one spectrum computation.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumSpec {
    pub kind: KernelKind,
    pub beta: f64,
    pub rows: usize,
    pub cols: usize,
    pub theta_period: f64,
    pub rho_period: f64,
    pub method: KernelMethod,
    pub oversampling: usize,
}

impl SpectrumSpec {
    pub fn for_plan(plan: &GeometryPlan, kind: KernelKind, method: KernelMethod) -> Self {
        Self {
            kind,
            beta: plan.beta(),
            rows: plan.sector_rows(),
            cols: plan.n_rho,
            theta_period: 2.0 * plan.beta(),
            rho_period: plan.rho_period,
            method,
            oversampling: DEFAULT_OVERSAMPLING,
        }
    }

    pub fn alpha(&self, kr: isize) -> Complex64 {
        let w = 2.0 * PI * kr as f64 / self.rho_period;
        match self.kind {
            KernelKind::Radon => Complex64::new(-1.0, -w),
            KernelKind::Backprojection => Complex64::new(0.0, w),
        }
    }

    pub fn mu(&self, kt: isize) -> f64 {
        -2.0 * PI * kt as f64 / self.theta_period
    }

    /// `sin(mu beta)`, `cos(mu beta)`, exact when `mu beta` is a multiple of `pi/2`.
    fn sincos_mu_beta(&self, kt: isize) -> (f64, f64) {
        let q = 2.0 * kt as f64 * self.beta / self.theta_period;
        let q2 = 2.0 * q;
        if (q2 - q2.round()).abs() < 1e-9 {
            match (-(q2.round() as i64)).rem_euclid(4) {
                0 => (0.0, 1.0),
                1 => (1.0, 0.0),
                2 => (0.0, -1.0),
                _ => (-1.0, 0.0),
            }
        } else {
            (-PI * q).sin_cos()
        }
    }
}

/// Values `P(mu_k, alpha(kr))` for `k = 0..=rows/2`.
fn row_values(
    spec: &SpectrumSpec,
    kr: isize,
    planner: &mut FftPlanner<f64>,
) -> (Vec<Complex64>, SpectrumStats) {
    let kmax = spec.rows / 2;
    let alpha = spec.alpha(kr);
    let mut stats = SpectrumStats::default();
    let quad = |planner: &mut FftPlanner<f64>| {
        p_row_fft(
            kmax,
            alpha,
            spec.beta,
            spec.theta_period,
            spec.oversampling,
            planner,
        )
    };
    if spec.method == KernelMethod::Quadrature {
        stats.quadrature = kmax + 1;
        return (quad(planner), stats);
    }
    let mut out = Vec::with_capacity(kmax + 1);
    let mut missing = Vec::new();
    for k in 0..=kmax as isize {
        let (s, c) = spec.sincos_mu_beta(k);
        let mu = spec.mu(k);
        match closed_form_f64(mu, alpha, spec.beta, s, c) {
            Ok(v) => {
                stats.closed_form += 1;
                out.push(v);
            }
            Err(_) => {
                let ext = if spec.method == KernelMethod::ClosedFormExtended {
                    closed_form_extended(mu, alpha, spec.beta, s, c)
                } else {
                    Err(ClosedFormError::NonConvergent)
                };
                match ext {
                    Ok(v) => {
                        stats.extended += 1;
                        out.push(v);
                    }
                    Err(_) => {
                        missing.push(k as usize);
                        out.push(Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        let q = quad(planner);
        for &k in &missing {
            out[k] = q[k];
        }
        stats.quadrature += missing.len();
    }
    (out, stats)
}

/// Computes a full spectrum. Symmetries used: `P` is even in `mu`, and
/// `alpha(-kr) = conj(alpha(kr))` gives Hermitian symmetry in `k_rho`.
pub fn compute_spectrum(spec: &SpectrumSpec) -> KernelSpectrum {
    let (rows, cols) = (spec.rows, spec.cols);
    let half_cols = cols / 2;
    let computed: Vec<(Vec<Complex64>, SpectrumStats)> = (0..=half_cols as isize)
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, kr| row_values(spec, kr, planner))
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); rows * cols];
    let mut stats = SpectrumStats::default();
    for (kr, (vals, st)) in computed.iter().enumerate() {
        stats.closed_form += st.closed_form;
        stats.extended += st.extended;
        stats.quadrature += st.quadrature;
        let nyquist_rho = cols % 2 == 0 && kr == half_cols;
        for r in 0..rows {
            let kt = if r <= rows / 2 { r } else { rows - r };
            let v = vals[kt];
            if nyquist_rho {
                coeffs[r * cols + kr] = Complex64::new(v.re, 0.0);
            } else {
                coeffs[r * cols + kr] = v;
                if kr > 0 {
                    coeffs[r * cols + (cols - kr)] = v.conj();
                }
            }
        }
    }
    KernelSpectrum {
        kind: spec.kind,
        rows,
        cols,
        coeffs,
        beta: spec.beta,
        theta_period: spec.theta_period,
        rho_period: spec.rho_period,
        stats,
    }
}

type CacheKey = (usize, usize, usize, usize, KernelKind, KernelMethod);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<KernelSpectrum>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<KernelSpectrum>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Spectrum for a plan, computed once per `(N, M, N_theta, N_rho, kind, method)`.
pub fn plan_spectrum(
    plan: &GeometryPlan,
    kind: KernelKind,
    method: KernelMethod,
) -> Arc<KernelSpectrum> {
    let key = (plan.n, plan.sectors, plan.n_theta, plan.n_rho, kind, method);
    if let Some(s) = cache().lock().unwrap().get(&key) {
        return s.clone();
    }
    let s = Arc::new(compute_spectrum(&SpectrumSpec::for_plan(
        plan, kind, method,
    )));
    cache().lock().unwrap().entry(key).or_insert(s).clone()
}

pub fn zeta_spectrum(plan: &GeometryPlan) -> Arc<KernelSpectrum> {
    plan_spectrum(plan, KernelKind::Radon, KernelMethod::ClosedForm)
}

pub fn zeta_bp_spectrum(plan: &GeometryPlan) -> Arc<KernelSpectrum> {
    plan_spectrum(plan, KernelKind::Backprojection, KernelMethod::ClosedForm)
}
