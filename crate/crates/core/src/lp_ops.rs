//! Fast Radon transform and back-projection through per-sector log-polar
//! convolutions.
//!
//! Sector `m` handles the angles within `beta/2` of `m beta`. The image is moved
//! by `T_m` into the disc of radius `a_R` centred at `(1 - a_R, 0)`, where both
//! operators become periodic convolutions on `[-beta, beta) x [log a_r, 0)` in
//! log-polar coordinates. Each sector costs one forward and one inverse 2-D FFT.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::{signed_bin, Fft2, FftCounter};
use crate::geometry::GeometryPlan;
use crate::kernel::{plan_spectrum, KernelKind, KernelMethod, KernelSpectrum};
use crate::raster::{Image, Raster, Sinogram};
use crate::spline::{
    bspline_spectrum, eval_1d, prefilter_2d, prefilter_in_place, Boundary, SplineCoeffs,
};

/// Zero samples added at both ends of a sinogram row before prefiltering, so
/// the spline decays to zero past `|s| = 1`.
const ROW_PAD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Sectors run on the rayon pool.
    #[default]
    Parallel,
    Sequential,
}

/// Seconds spent per stage in the last transform, summed over sectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub prefilter: f64,
    pub resample: f64,
    pub fft: f64,
    pub assemble: f64,
}

impl StageTimings {
    fn add(&mut self, o: &StageTimings) {
        self.prefilter += o.prefilter;
        self.resample += o.resample;
        self.fft += o.fft;
        self.assemble += o.assemble;
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Everything a transform needs for one geometry, built once.
pub struct RadonPlan {
    pub geometry: GeometryPlan,
    pub zeta: Arc<KernelSpectrum>,
    pub zeta_bp: Arc<KernelSpectrum>,
    /// `B^` along theta on the coarse buffer.
    pub bspline_theta: Vec<f64>,
    /// `B^` along theta on the fine buffer.
    pub bspline_theta_fine: Vec<f64>,
    pub bspline_rho: Vec<f64>,
    execution: Execution,
    // transposed layout (k_rho, k_theta) with all scalings folded in
    radon_mult: Vec<Complex64>,
    bp_mult: Vec<Complex64>,
    // 1 / B^ on the fine buffer, transposed layout
    fine_inv_b: Vec<f64>,
    coarse: Fft2,
    fine: Fft2,
    counter: FftCounter,
    timings: Mutex<StageTimings>,
}

impl std::fmt::Debug for RadonPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadonPlan")
            .field("n", &self.geometry.n)
            .field("sectors", &self.geometry.sectors)
            .field("n_theta", &self.geometry.n_theta)
            .field("n_rho", &self.geometry.n_rho)
            .field("execution", &self.execution)
            .finish()
    }
}

impl RadonPlan {
    pub fn new(geometry: GeometryPlan) -> Self {
        Self::with_method(geometry, KernelMethod::ClosedForm)
    }

    pub fn with_method(geometry: GeometryPlan, method: KernelMethod) -> Self {
        let zeta = plan_spectrum(&geometry, KernelKind::Radon, method);
        let zeta_bp = plan_spectrum(&geometry, KernelKind::Backprojection, method);
        let n = geometry.sector_rows();
        let nf = geometry.fine_rows();
        let nr = geometry.n_rho;
        let bt = bspline_spectrum(n);
        let btf = bspline_spectrum(nf);
        let br = bspline_spectrum(nr);
        let r = geometry.theta_oversampling as f64;
        let norm = 1.0 / (n * nr) as f64;
        let mut radon_mult = vec![Complex64::new(0.0, 0.0); n * nr];
        let mut bp_mult = vec![Complex64::new(0.0, 0.0); n * nr];
        for i in 0..nr {
            for j in 0..n {
                let z = zeta.coeffs[j * nr + i];
                let zb = zeta_bp.coeffs[j * nr + i];
                radon_mult[i * n + j] = z * (norm / (r * bt[j] * br[i]));
                bp_mult[i * n + j] = zb * norm;
            }
        }
        let mut fine_inv_b = vec![0.0; nf * nr];
        for i in 0..nr {
            for j in 0..nf {
                fine_inv_b[i * nf + j] = 1.0 / (btf[j] * br[i]);
            }
        }
        let mut planner = FftPlanner::new();
        let coarse = Fft2::new(&mut planner, n, nr);
        let fine = Fft2::new(&mut planner, nf, nr);
        Self {
            geometry,
            zeta,
            zeta_bp,
            bspline_theta: bt,
            bspline_theta_fine: btf,
            bspline_rho: br,
            execution: Execution::default(),
            radon_mult,
            bp_mult,
            fine_inv_b,
            coarse,
            fine,
            counter: FftCounter::default(),
            timings: Mutex::new(StageTimings::default()),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    /// FFT calls since construction or the last [`reset_fft_count`](Self::reset_fft_count).
    pub fn fft_count(&self) -> usize {
        self.counter.total()
    }

    pub fn reset_fft_count(&self) {
        self.counter.reset();
    }

    pub fn last_timings(&self) -> StageTimings {
        *self.timings.lock().unwrap()
    }

    fn run_sectors<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        let m = self.geometry.sectors;
        match self.execution {
            Execution::Parallel => (0..m).into_par_iter().map(f).collect(),
            Execution::Sequential => (0..m).map(f).collect(),
        }
    }

    fn rho0(&self) -> f64 {
        -((self.geometry.n_rho - 1) as f64) * self.geometry.drho
    }
}

/// Affine pieces of `T_m^{-1}`: `x = A (y - (1 - a_R, 0))`.
fn t_inv_matrix(plan: &GeometryPlan, m: usize) -> [f64; 4] {
    let a = plan.constants.a_scale;
    let (s, c) = (m as f64 * plan.beta()).sin_cos();
    [c / a, -s / a, s / a, c / a]
}

fn t_matrix(plan: &GeometryPlan, m: usize) -> [f64; 4] {
    let a = plan.constants.a_scale;
    let (s, c) = (m as f64 * plan.beta()).sin_cos();
    [a * c, a * s, -a * s, a * c]
}

/// The Radon transform of `image` on the plan's sinogram grid.
pub fn fast_radon(image: &Image, plan: &RadonPlan) -> Result<Sinogram> {
    let g = &plan.geometry;
    image.check_grid(&g.image_grid())?;
    if !image.is_finite() {
        return Err(Error::NonFinite("image contains non-finite pixels".into()));
    }
    let t0 = Instant::now();
    let coeffs = prefilter_2d(&image.data, image.grid, Boundary::Mirror)?;
    let mut total = StageTimings {
        prefilter: secs(t0.elapsed()),
        ..Default::default()
    };

    let parts = plan.run_sectors(|m| radon_sector(plan, &coeffs, m));

    let t1 = Instant::now();
    let mut sino = Raster::zeros(g.sinogram_grid());
    for (rows, t) in parts {
        total.add(&t);
        for (l, vals) in rows {
            sino.data[l * g.n_s..(l + 1) * g.n_s].copy_from_slice(&vals);
        }
    }
    total.assemble += secs(t1.elapsed());
    *plan.timings.lock().unwrap() = total;
    Ok(sino)
}

fn radon_sector(
    plan: &RadonPlan,
    coeffs: &SplineCoeffs,
    m: usize,
) -> (Vec<(usize, Vec<f64>)>, StageTimings) {
    let g = &plan.geometry;
    let mut t = StageTimings::default();
    let (n, nf, nr) = (g.sector_rows(), g.fine_rows(), g.n_rho);
    let rho0 = plan.rho0();
    let a = g.constants.a_scale;
    let ainv = t_inv_matrix(g, m);
    let o = -1.0;
    let h = g.h;

    // T_m f times e^rho on the fine data rows
    let t0 = Instant::now();
    let er: Vec<f64> = (0..nr).map(|c| (rho0 + c as f64 * g.drho).exp()).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); nf * nr];
    for rf in nf / 4..=3 * nf / 4 {
        let (sn, cs) = ((rf as f64 - (nf / 2) as f64) * g.dtheta_lp).sin_cos();
        let row = &mut buf[rf * nr..(rf + 1) * nr];
        for (c, v) in row.iter_mut().enumerate() {
            let y0 = er[c] * cs - (1.0 - a);
            let y1 = er[c] * sn;
            let x1 = ainv[0] * y0 + ainv[1] * y1;
            let x2 = ainv[2] * y0 + ainv[3] * y1;
            if x1 * x1 + x2 * x2 <= 1.0 {
                let val = coeffs.eval_unchecked((x2 - o) / h, (x1 - o) / h);
                *v = Complex64::new(val * er[c], 0.0);
            }
        }
    }
    t.resample += secs(t0.elapsed());

    // low-pass to the coarse theta grid and convolve
    let t0 = Instant::now();
    let spec = plan.fine.forward_t(buf, &plan.counter, true);
    let mut coarse = vec![Complex64::new(0.0, 0.0); n * nr];
    for i in 0..nr {
        let src = &spec[i * nf..(i + 1) * nf];
        let dst = &mut coarse[i * n..(i + 1) * n];
        let mult = &plan.radon_mult[i * n..(i + 1) * n];
        for j in 0..n {
            let v = if j == n / 2 {
                (src[n / 2] + src[nf - n / 2]) * 0.5
            } else {
                src[signed_bin(j, n).rem_euclid(nf as isize) as usize]
            };
            dst[j] = v * mult[j];
        }
    }
    drop(spec);
    let out = plan.coarse.inverse_t(coarse, &plan.counter);
    t.fft += secs(t0.elapsed());

    // evaluate on the sinogram rows of this sector
    let t0 = Instant::now();
    let c = SplineCoeffs {
        values: out.iter().map(|v| v.re).collect(),
        grid: g.sector_grid(),
        boundary: Boundary::Periodic,
    };
    drop(out);
    let ns = g.n_theta_sector as isize;
    let log_ar = -g.rho_period;
    let mut rows = Vec::with_capacity(ns as usize);
    for j in -ns / 2..ns / 2 {
        let (l, flip) = g.sector_row(m, j);
        let phi = j as f64 * g.dtheta_p;
        let u = (j + (n / 2) as isize) as f64;
        let cphi = (1.0 - a) * phi.cos();
        let vals: Vec<f64> = (0..g.n_s)
            .map(|k| {
                let s = -1.0 + k as f64 * g.ds;
                let s = if flip { -s } else { s };
                let arg = a * s + cphi;
                if arg <= 0.0 {
                    return 0.0;
                }
                let rho = arg.ln();
                if rho < log_ar {
                    return 0.0;
                }
                c.eval_unchecked(u, (rho - rho0) / g.drho) / a
            })
            .collect();
        rows.push((l, vals));
    }
    t.resample += secs(t0.elapsed());
    (rows, t)
}

/// Spline coefficients of every sinogram row, padded with `ROW_PAD` zeros on
/// both sides.
fn prefilter_sinogram_rows(sino: &Sinogram) -> Vec<Vec<f64>> {
    let ns = sino.cols();
    (0..sino.rows())
        .map(|l| {
            let mut row = vec![0.0; ns + 2 * ROW_PAD];
            row[ROW_PAD..ROW_PAD + ns].copy_from_slice(sino.row(l));
            prefilter_in_place(&mut row, Boundary::Mirror);
            row
        })
        .collect()
}

#[inline]
fn sample_row(row: &[f64], u: f64) -> f64 {
    let up = u + ROW_PAD as f64;
    if up < 1.0 || up > (row.len() - 2) as f64 {
        0.0
    } else {
        eval_1d(row, up, Boundary::Mirror)
    }
}

/// Back-projection of `sino` onto the plan's image grid. Pixels
/// outside the unit disc are zero.
pub fn fast_backprojection(sino: &Sinogram, plan: &RadonPlan) -> Result<Image> {
    let g = &plan.geometry;
    sino.check_grid(&g.sinogram_grid())?;
    if !sino.is_finite() {
        return Err(Error::NonFinite(
            "sinogram contains non-finite values".into(),
        ));
    }
    let t0 = Instant::now();
    let rows = prefilter_sinogram_rows(sino);
    let mut total = StageTimings {
        prefilter: secs(t0.elapsed()),
        ..Default::default()
    };

    let parts = plan.run_sectors(|m| bp_sector(plan, &rows, m));

    let t1 = Instant::now();
    let mut img = Raster::zeros(g.image_grid());
    for (part, t) in parts {
        total.add(&t);
        for (d, v) in img.data.iter_mut().zip(&part) {
            *d += v;
        }
    }
    img.scale(2.0);
    total.assemble += secs(t1.elapsed());
    *plan.timings.lock().unwrap() = total;
    Ok(img)
}

fn bp_sector(plan: &RadonPlan, rows: &[Vec<f64>], m: usize) -> (Vec<f64>, StageTimings) {
    let g = &plan.geometry;
    let mut t = StageTimings::default();
    let (n, nf, nr) = (g.sector_rows(), g.fine_rows(), g.n_rho);
    let rho0 = plan.rho0();
    let a = g.constants.a_scale;

    // g o S_m^{-1} on the coarse data rows
    let t0 = Instant::now();
    let er: Vec<f64> = (0..nr).map(|c| (rho0 + c as f64 * g.drho).exp()).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); n * nr];
    let ns = g.n_theta_sector as isize;
    for j in -ns / 2..ns / 2 {
        let (l, flip) = g.sector_row(m, j);
        let phi = j as f64 * g.dtheta_p;
        let cphi = (1.0 - a) * phi.cos();
        let r = (j + (n / 2) as isize) as usize;
        let dst = &mut buf[r * nr..(r + 1) * nr];
        for (c, v) in dst.iter_mut().enumerate() {
            let s = (er[c] - cphi) / a;
            let s = if flip { -s } else { s };
            *v = Complex64::new(sample_row(&rows[l], (s + 1.0) / g.ds), 0.0);
        }
    }
    t.resample += secs(t0.elapsed());

    // convolve, then band-limited upsampling to the fine theta grid
    let t0 = Instant::now();
    let spec = plan.coarse.forward_t(buf, &plan.counter, true);
    let mut fine = vec![Complex64::new(0.0, 0.0); nf * nr];
    for i in 0..nr {
        let src = &spec[i * n..(i + 1) * n];
        let mult = &plan.bp_mult[i * n..(i + 1) * n];
        let dst = &mut fine[i * nf..(i + 1) * nf];
        for j in 0..n {
            let v = src[j] * mult[j];
            if j == n / 2 {
                dst[n / 2] += v * 0.5;
                dst[nf - n / 2] += v * 0.5;
            } else {
                dst[signed_bin(j, n).rem_euclid(nf as isize) as usize] = v;
            }
        }
        let ib = &plan.fine_inv_b[i * nf..(i + 1) * nf];
        for (d, &w) in dst.iter_mut().zip(ib) {
            *d *= w;
        }
    }
    drop(spec);
    let out = plan.fine.inverse_t(fine, &plan.counter);
    t.fft += secs(t0.elapsed());

    // evaluate at T_m x for every pixel of the disc
    let t0 = Instant::now();
    let c = SplineCoeffs {
        values: out.iter().map(|v| v.re).collect(),
        grid: g.fine_grid(),
        boundary: Boundary::Periodic,
    };
    drop(out);
    let tm = t_matrix(g, m);
    let beta = g.beta();
    let mut img = vec![0.0; g.n * g.n];
    let grid = g.image_grid();
    for r in 0..g.n {
        for col in 0..g.n {
            let (x2, x1) = grid.coord(r, col);
            if x1 * x1 + x2 * x2 > 1.0 {
                continue;
            }
            let y0 = tm[0] * x1 + tm[1] * x2 + 1.0 - a;
            let y1 = tm[2] * x1 + tm[3] * x2;
            let psi = y1.atan2(y0);
            let rho = 0.5 * (y0 * y0 + y1 * y1).ln();
            img[r * g.n + col] =
                c.eval_unchecked((psi + beta) / g.dtheta_lp, (rho - rho0) / g.drho);
        }
    }
    t.resample += secs(t0.elapsed());
    (img, t)
}

/// Periodic convolution of a doubled-grid raster with a kernel spectrum,
/// optionally dividing by the B-spline transfer function on both axes.
///
/// Returns the real part and the largest imaginary magnitude.
pub fn lp_convolve_residue(
    data: &[f64],
    rows: usize,
    cols: usize,
    spectrum: &KernelSpectrum,
    divide_bspline: bool,
) -> Result<(Vec<f64>, f64)> {
    if spectrum.rows != rows || spectrum.cols != cols || data.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{}x{} data ({} values) against a {}x{} spectrum",
            rows,
            cols,
            data.len(),
            spectrum.rows,
            spectrum.cols
        )));
    }
    let mut planner = FftPlanner::new();
    let f = Fft2::new(&mut planner, rows, cols);
    let counter = FftCounter::default();
    let buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut t = f.forward_t(buf, &counter, false);
    let bt = bspline_spectrum(rows);
    let br = bspline_spectrum(cols);
    let norm = 1.0 / (rows * cols) as f64;
    for i in 0..cols {
        for j in 0..rows {
            let mut w = norm;
            if divide_bspline {
                w /= bt[j] * br[i];
            }
            t[i * rows + j] *= spectrum.coeffs[j * cols + i] * w;
        }
    }
    let out = f.inverse_t(t, &counter);
    let im = out.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    Ok((out.iter().map(|v| v.re).collect(), im))
}

pub fn lp_convolve(
    data: &[f64],
    rows: usize,
    cols: usize,
    spectrum: &KernelSpectrum,
    divide_bspline: bool,
) -> Result<Vec<f64>> {
    lp_convolve_residue(data, rows, cols, spectrum, divide_bspline).map(|r| r.0)
}

/// `<a, b>` on the sinogram grid with the full-circle line measure.
pub fn sinogram_dot(plan: &GeometryPlan, a: &[f64], b: &[f64]) -> f64 {
    2.0 * plan.dtheta_p * plan.ds * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

pub fn image_dot(plan: &GeometryPlan, a: &[f64], b: &[f64]) -> f64 {
    plan.h * plan.h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Largest normalised gap `|<Rf, g> - <f, R# g>| / (|f| |g|)` over `trials`
/// random smooth pairs.
pub fn adjoint_gap(plan: &RadonPlan, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let g = &plan.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = crate::oracle::smooth_random_image(g, 2.0, &mut rng);
        let s = crate::oracle::smooth_random_sinogram(g, 2.0, &mut rng);
        let rf = fast_radon(&f, plan)?;
        let bs = fast_backprojection(&s, plan)?;
        let lhs = sinogram_dot(g, &rf.data, &s.data);
        let rhs = image_dot(g, &f.data, &bs.data);
        let nf = image_dot(g, &f.data, &f.data).sqrt();
        let ns = sinogram_dot(g, &s.data, &s.data).sqrt();
        if nf > 0.0 && ns > 0.0 {
            worst = worst.max((lhs - rhs).abs() / (nf * ns));
        }
    }
    Ok(worst)
}

/// Angle of sinogram row `l`.
pub fn row_angle(plan: &GeometryPlan, l: usize) -> f64 {
    l as f64 * plan.dtheta_p
}
