//! Sector constants, sampling rates, grid descriptors and the coordinate maps
//! linking the Cartesian, polar and log-polar domains.
//!
//! Conventions: the image lives in the unit disc. Cartesian pixels have pitch
//! `h = 2/N` and centres at `(j - N/2) h`, `j = 0..N`. Sinogram rows are
//! `theta_l = l * pi / N_theta` and columns `s_k = -1 + k * 2/N`. A sector `m`
//! covers normal angles whose residual `theta - m*beta` lies in `[-beta/2, beta/2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `beta = pi/M` together with the normalised disc scale `a_scale` and the
/// inner radius `a_inner` of the support annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorConstants {
    pub beta: f64,
    /// Scale of the unit disc after the sector map (`a_R`).
    pub a_scale: f64,
    /// Smallest `t = e^rho` reached by a line of the sector (`a_r`).
    pub a_inner: f64,
}

pub fn sector_constants(m: usize) -> Result<SectorConstants> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "sector count must be at least 3, got {m}"
        )));
    }
    let beta = PI / m as f64;
    let (sh, ch) = (beta / 2.0).sin_cos();
    Ok(SectorConstants {
        beta,
        a_scale: sh / (1.0 + sh),
        a_inner: (ch - sh) / (1.0 + sh),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Cartesian,
    Polar,
    LogpolarFine,
    LogpolarSector,
}

/// A uniform lattice: sample `(i, j)` sits at `origin + (i, j) * spacing`.
/// Axis 0 is the row axis (`x2` for images, `theta` otherwise), axis 1 the
/// column axis (`x1`, `s` or `rho`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub rows: usize,
    pub cols: usize,
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin[0] + row as f64 * self.spacing[0],
            self.origin[1] + col as f64 * self.spacing[1],
        )
    }

    /// Continuous (row, col) index of a physical coordinate pair.
    pub fn index_of(&self, a: f64, b: f64) -> (f64, f64) {
        (
            (a - self.origin[0]) / self.spacing[0],
            (b - self.origin[1]) / self.spacing[1],
        )
    }
}

/// Every sampling parameter for one `(N, M, N_theta)` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryPlan {
    pub n: usize,
    pub sectors: usize,
    pub constants: SectorConstants,
    pub n_theta: usize,
    pub n_s: usize,
    pub n_rho: usize,
    /// Sinogram rows handled by one sector; the FFT buffers have twice as many.
    pub n_theta_sector: usize,
    /// Ratio between the fine and the coarse log-polar angle grids.
    pub theta_oversampling: usize,
    pub dtheta_p: f64,
    pub dtheta_lp: f64,
    pub ds: f64,
    pub drho: f64,
    /// Image pixel pitch.
    pub h: f64,
    /// Period of the log-polar buffers along rho, `-log a_inner`.
    pub rho_period: f64,
}

/// Default angle count: `ceil(1.5 N)` rounded up to a multiple of `2M`.
pub fn default_n_theta(n: usize, m: usize) -> usize {
    let base = (3 * n).div_ceil(2);
    base.div_ceil(2 * m) * 2 * m
}

/// Angle count from the Nyquist estimate `pi/2 * N`, rounded up to a multiple of `2M`.
pub fn nyquist_n_theta(n: usize, m: usize) -> usize {
    let base = (PI / 2.0 * n as f64).ceil() as usize;
    base.div_ceil(2 * m) * 2 * m
}

/// Minimal `N_rho` with `(1 - 2 a_R / N)^N_rho <= a_r`.
pub fn min_n_rho(n: usize, c: &SectorConstants) -> usize {
    (c.a_inner.ln() / (1.0 - 2.0 * c.a_scale / n as f64).ln()).ceil() as usize
}

pub fn sampling_plan(n: usize, m: usize) -> Result<GeometryPlan> {
    sampling_plan_with(n, m, default_n_theta(n, m))
}

pub fn sampling_plan_with(n: usize, m: usize, n_theta: usize) -> Result<GeometryPlan> {
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "image size must be even and at least 16, got {n}"
        )));
    }
    let constants = sector_constants(m)?;
    if n_theta == 0 || !n_theta.is_multiple_of(2 * m) {
        return Err(Error::InvalidParameter(format!(
            "angle count {n_theta} must be a positive multiple of 2M = {}",
            2 * m
        )));
    }
    let n_rho = min_n_rho(n, &constants);
    let rho_period = -constants.a_inner.ln();
    let dtheta_p = PI / n_theta as f64;
    let max_dtheta = 2.0 * constants.a_scale / n as f64;
    let theta_oversampling = (dtheta_p / max_dtheta).ceil().max(1.0) as usize;
    Ok(GeometryPlan {
        n,
        sectors: m,
        constants,
        n_theta,
        n_s: n,
        n_rho,
        n_theta_sector: n_theta / m,
        theta_oversampling,
        dtheta_p,
        dtheta_lp: dtheta_p / theta_oversampling as f64,
        ds: 2.0 / n as f64,
        drho: rho_period / n_rho as f64,
        h: 2.0 / n as f64,
        rho_period,
    })
}

impl GeometryPlan {
    pub fn beta(&self) -> f64 {
        self.constants.beta
    }

    /// Rows of the coarse doubled buffer covering `theta in [-beta, beta)`.
    pub fn sector_rows(&self) -> usize {
        2 * self.n_theta_sector
    }

    pub fn fine_rows(&self) -> usize {
        self.sector_rows() * self.theta_oversampling
    }

    pub fn image_grid(&self) -> GridSpec {
        let o = -(self.n as f64) / 2.0 * self.h;
        GridSpec {
            kind: GridKind::Cartesian,
            rows: self.n,
            cols: self.n,
            origin: [o, o],
            spacing: [self.h, self.h],
        }
    }

    pub fn sinogram_grid(&self) -> GridSpec {
        GridSpec {
            kind: GridKind::Polar,
            rows: self.n_theta,
            cols: self.n_s,
            origin: [0.0, -1.0],
            spacing: [self.dtheta_p, self.ds],
        }
    }

    fn rho_origin(&self) -> f64 {
        -((self.n_rho - 1) as f64) * self.drho
    }

    /// Coarse buffer: `theta_r = (r - n/2) dtheta_p`, `rho_c = (c - N_rho + 1) drho`.
    pub fn sector_grid(&self) -> GridSpec {
        GridSpec {
            kind: GridKind::LogpolarSector,
            rows: self.sector_rows(),
            cols: self.n_rho,
            origin: [-self.beta(), self.rho_origin()],
            spacing: [self.dtheta_p, self.drho],
        }
    }

    pub fn fine_grid(&self) -> GridSpec {
        GridSpec {
            kind: GridKind::LogpolarFine,
            rows: self.fine_rows(),
            cols: self.n_rho,
            origin: [-self.beta(), self.rho_origin()],
            spacing: [self.dtheta_lp, self.drho],
        }
    }

    /// Sector, in-sector offset and wrap flag of sinogram row `l`.
    ///
    /// The residual angle is `(j as f64) * dtheta_p` with `j` in
    /// `[-N_theta_sector/2, N_theta_sector/2)`. When `wrapped` is set the row's
    /// angle lies in the last half-sector before `pi`, and the line is the same
    /// as `(theta - pi, -s)`.
    pub fn row_sector(&self, l: usize) -> (usize, isize, bool) {
        let ns = self.n_theta_sector;
        let q = (l + ns / 2) / ns;
        let j = l as isize - (q * ns) as isize;
        (q % self.sectors, j, q == self.sectors)
    }

    /// Inverse of [`row_sector`](Self::row_sector): sinogram row for sector `m`
    /// and offset `j`, plus the flag telling whether `s` must be negated.
    pub fn sector_row(&self, m: usize, j: isize) -> (usize, bool) {
        let ns = self.n_theta_sector as isize;
        let l = m as isize * ns + j;
        if l < 0 {
            ((l + self.n_theta as isize) as usize, true)
        } else {
            (l as usize, false)
        }
    }
}

fn rotation(m: usize, beta: f64) -> (f64, f64) {
    (m as f64 * beta).sin_cos()
}

/// `T_m(x) = a_R R_m x + (1 - a_R, 0)` with `R_m` the clockwise rotation by `m beta`.
pub fn map_t(c: &SectorConstants, m: usize, x: [f64; 2]) -> [f64; 2] {
    let (s, co) = rotation(m, c.beta);
    let rx = co * x[0] + s * x[1];
    let ry = -s * x[0] + co * x[1];
    [c.a_scale * rx + 1.0 - c.a_scale, c.a_scale * ry]
}

pub fn map_t_inv(c: &SectorConstants, m: usize, y: [f64; 2]) -> [f64; 2] {
    let (s, co) = rotation(m, c.beta);
    let ux = (y[0] - 1.0 + c.a_scale) / c.a_scale;
    let uy = y[1] / c.a_scale;
    [co * ux - s * uy, s * ux + co * uy]
}

/// `S_m(theta, s) = (theta - m beta, log(a_R s + (1 - a_R) cos(theta - m beta)))`.
pub fn map_s(c: &SectorConstants, m: usize, theta: f64, s: f64) -> Result<(f64, f64)> {
    let phi = theta - m as f64 * c.beta;
    let t = c.a_scale * s + (1.0 - c.a_scale) * phi.cos();
    if t <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "line (theta={theta}, s={s}) does not meet sector {m}"
        )));
    }
    Ok((phi, t.ln()))
}

pub fn map_s_inv(c: &SectorConstants, m: usize, phi: f64, rho: f64) -> (f64, f64) {
    let s = (rho.exp() - (1.0 - c.a_scale) * phi.cos()) / c.a_scale;
    (phi + m as f64 * c.beta, s)
}

/// Sector index `round(theta/beta) mod M`, halves rounded up.
pub fn theta_to_sector(theta: f64, m: usize) -> usize {
    let beta = PI / m as f64;
    let q = (theta / beta + 0.5).floor() as i64;
    q.rem_euclid(m as i64) as usize
}

/// Residual angle of `theta` relative to its sector centre, in `[-beta/2, beta/2)`.
pub fn sector_residual(theta: f64, m: usize) -> f64 {
    let beta = PI / m as f64;
    let q = (theta / beta + 0.5).floor();
    theta - q * beta
}
