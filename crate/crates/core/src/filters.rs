//! Reconstruction filters along `s` and filtered back-projection.
//!
//! Frequencies are in the scaled unit `sigma = 2 nu`, `nu` in cycles per unit
//! length, so the sampling band of an `N`-sample row is `|sigma| <= N/2`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{signed_bin, Fft2, FftCounter};
use crate::geometry::GridSpec;
use crate::lp_ops::{fast_backprojection, RadonPlan};
use crate::oracle::direct_backprojection;
use crate::raster::{Image, Raster, Sinogram};

/// Scale turning `R#(W g)` into the reconstruction when `W` has transfer
/// `|sigma|` and `R#` integrates over the full circle.
pub const C_NORM: f64 = 0.25;

/// Zero padding of the rows before the FFT, as a multiple of `N_s`.
pub const FILTER_PADDING: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    Ramp,
    SheppLogan,
    Cosine,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Ramp, FilterKind::SheppLogan, FilterKind::Cosine];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Ramp => "ramp",
            FilterKind::SheppLogan => "shepp-logan",
            FilterKind::Cosine => "cosine",
        }
    }

    /// Apodisation multiplying `|sigma|` on the band of an `n`-sample row.
    pub fn window(self, sigma: f64, n: usize) -> f64 {
        let x = sigma / n as f64;
        match self {
            FilterKind::Ramp => 1.0,
            FilterKind::SheppLogan => {
                if x == 0.0 {
                    1.0
                } else {
                    (PI * x).sin() / (PI * x)
                }
            }
            FilterKind::Cosine => (PI * x).cos(),
        }
    }

    /// Continuous transfer function, zero outside `|sigma| <= n/2`.
    pub fn response(self, sigma: f64, n: usize) -> f64 {
        if sigma.abs() > n as f64 / 2.0 {
            0.0
        } else {
            sigma.abs() * self.window(sigma, n)
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(FilterKind::Ramp),
            "shepp-logan" => Ok(FilterKind::SheppLogan),
            "cosine" => Ok(FilterKind::Cosine),
            _ => Err(Error::InvalidParameter(format!(
                "unknown filter '{s}', expected ramp, shepp-logan or cosine"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    pub kind: FilterKind,
    /// Transfer values on the DFT bins of the padded row, FFT order.
    pub weights: Vec<f64>,
    /// Band edge `N_s / 2`.
    pub cutoff: f64,
    pub n_s: usize,
}

impl FilterSpectrum {
    pub fn padded_len(&self) -> usize {
        self.weights.len()
    }

    /// Scaled frequency of padded bin `i`.
    pub fn sigma(&self, i: usize) -> f64 {
        let l = self.weights.len();
        signed_bin(i, l) as f64 * self.n_s as f64 / l as f64
    }
}

/// Filter for `n_s`-sample rows padded to `pad * n_s`.
///
/// The ramp comes from the DFT of the band-limited ramp kernel sampled in
/// space, `h(0) = 1/4`, `h(n) = -1/(pi n)^2` for odd `n`, truncated to the
/// padded row. Its zero-frequency weight is small but positive, which keeps
/// the mean level of zero-padded rows right. The window multiplies the result.
pub fn make_filter_padded(kind: FilterKind, n_s: usize, pad: usize) -> Result<FilterSpectrum> {
    check_filter_args(n_s, pad)?;
    let l = n_s * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (i, b) in buf.iter_mut().enumerate() {
        let k = signed_bin(i, l).unsigned_abs();
        b.re = if k == 0 {
            0.25
        } else if k % 2 == 1 {
            -1.0 / (PI * k as f64).powi(2)
        } else {
            0.0
        };
    }
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    let mut f = FilterSpectrum {
        kind,
        weights: vec![0.0; l],
        cutoff: n_s as f64 / 2.0,
        n_s,
    };
    for (i, b) in buf.iter().enumerate().take(l / 2 + 1) {
        let w = n_s as f64 * b.re * kind.window(f.sigma(i), n_s);
        f.weights[i] = w;
        f.weights[(l - i) % l] = w;
    }
    Ok(f)
}

/// The same filter built by sampling `|sigma|` at the bins.
///
/// This kills constant rows exactly, but on zero-padded rows it loses part of
/// the mean level. The kink of `|sigma|` at the origin spoils the trapezoidal
/// sum over the bins; the first-order end-point correction estimates the slope
/// from the first bin and raises the weights at `|bin| = 1` by `1/12`.
pub fn make_filter_sampled(kind: FilterKind, n_s: usize, pad: usize) -> Result<FilterSpectrum> {
    check_filter_args(n_s, pad)?;
    let l = n_s * pad;
    let mut f = FilterSpectrum {
        kind,
        weights: vec![0.0; l],
        cutoff: n_s as f64 / 2.0,
        n_s,
    };
    for i in 0..l {
        let s = f.sigma(i);
        f.weights[i] = kind.response(s, n_s);
    }
    f.weights[1] *= 13.0 / 12.0;
    f.weights[l - 1] *= 13.0 / 12.0;
    Ok(f)
}

fn check_filter_args(n_s: usize, pad: usize) -> Result<()> {
    if n_s < 4 || pad == 0 {
        return Err(Error::InvalidParameter(format!(
            "filter needs n_s >= 4 and pad >= 1, got {n_s}, {pad}"
        )));
    }
    Ok(())
}

pub fn make_filter(kind: FilterKind, plan: &RadonPlan) -> Result<FilterSpectrum> {
    make_filter_padded(kind, plan.geometry.n_s, FILTER_PADDING)
}

/// Convolves every row with the filter through a padded FFT.
pub fn apply_filter(sino: &Sinogram, filt: &FilterSpectrum) -> Result<Sinogram> {
    let ns = sino.cols();
    if ns != filt.n_s {
        return Err(Error::Shape(format!(
            "sinogram width {ns} but filter built for {}",
            filt.n_s
        )));
    }
    let l = filt.padded_len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(l);
    let inv = planner.plan_fft_inverse(l);
    let mut out = sino.clone();
    out.data.par_chunks_mut(ns).for_each(|row| {
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for (b, &v) in buf.iter_mut().zip(row.iter()) {
            b.re = v;
        }
        fwd.process(&mut buf);
        for (b, &w) in buf.iter_mut().zip(&filt.weights) {
            *b *= w;
        }
        inv.process(&mut buf);
        for (r, b) in row.iter_mut().zip(&buf) {
            *r = b.re / l as f64;
        }
    });
    Ok(out)
}

/// Filtered back-projection through the fast operator.
pub fn fbp(sino: &Sinogram, kind: FilterKind, plan: &RadonPlan) -> Result<Image> {
    let filt = make_filter(kind, plan)?;
    let mut img = fast_backprojection(&apply_filter(sino, &filt)?, plan)?;
    img.scale(C_NORM);
    Ok(img)
}

/// The same pipeline with the direct back-projection.
pub fn fbp_direct(sino: &Sinogram, kind: FilterKind, image_grid: GridSpec) -> Result<Image> {
    let filt = make_filter_padded(kind, sino.cols(), FILTER_PADDING)?;
    let mut img = direct_backprojection(&apply_filter(sino, &filt)?, image_grid);
    img.scale(C_NORM);
    Ok(img)
}

/// The image FBP would return from exact data: `image` convolved with the
/// radial window of `kind`, truncated to the sampling band.
pub fn filtered_reference(image: &Image, kind: FilterKind) -> Image {
    let n = image.rows();
    let l = 2 * n;
    let mut planner = FftPlanner::new();
    let f = Fft2::new(&mut planner, l, l);
    let counter = FftCounter::default();
    let mut buf = vec![Complex64::new(0.0, 0.0); l * l];
    for r in 0..image.rows() {
        for c in 0..image.cols() {
            buf[r * l + c].re = image.get(r, c);
        }
    }
    let mut t = f.forward_t(buf, &counter, true);
    // bin k of the padded grid is nu = k / (l h) cycles per unit, sigma = 2 nu
    let h = image.grid.spacing[0];
    let scale = 2.0 / (l as f64 * h);
    for i in 0..l {
        for j in 0..l {
            let k1 = signed_bin(i, l) as f64;
            let k2 = signed_bin(j, l) as f64;
            let sigma = scale * (k1 * k1 + k2 * k2).sqrt();
            let w = if sigma > n as f64 / 2.0 {
                0.0
            } else {
                kind.window(sigma, n)
            };
            t[i * l + j] *= w / (l * l) as f64;
        }
    }
    let back = f.inverse_t(t, &counter);
    let mut out = Raster::zeros(image.grid);
    for r in 0..n {
        for c in 0..image.cols() {
            out.data[r * image.cols() + c] = back[r * l + c].re;
        }
    }
    out
}
