//! Reference data and brute-force operators: the ellipse phantom with its
//! analytic sinogram, direct line-integral Radon transform and back-projection,
//! Poisson noise and random smooth test fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GeometryPlan, GridKind, GridSpec};
use crate::raster::{Image, Raster, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    /// Counter-clockwise angle of the first semi-axis, radians.
    pub rotation: f64,
}

impl EllipseSpec {
    pub fn disc(amplitude: f64, center: [f64; 2], radius: f64) -> Self {
        Self {
            amplitude,
            center,
            semi_axes: [radius, radius],
            rotation: 0.0,
        }
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        let (s, c) = self.rotation.sin_cos();
        let d1 = x1 - self.center[0];
        let d2 = x2 - self.center[1];
        let u = (c * d1 + s * d2) / self.semi_axes[0];
        let v = (-s * d1 + c * d2) / self.semi_axes[1];
        u * u + v * v <= 1.0
    }

    /// Integral along the line `x . (cos theta, sin theta) = s`.
    pub fn line_integral(&self, theta: f64, s: f64) -> f64 {
        let (a, b) = (self.semi_axes[0], self.semi_axes[1]);
        let g = theta - self.rotation;
        let r2 = a * a * g.cos().powi(2) + b * b * g.sin().powi(2);
        let sp = s - self.center[0] * theta.cos() - self.center[1] * theta.sin();
        if sp * sp >= r2 {
            return 0.0;
        }
        2.0 * self.amplitude * a * b * (r2 - sp * sp).sqrt() / r2
    }
}

/// The modified Shepp-Logan table (Toft's higher-contrast variant of the
/// original head phantom), axes in units of the unit disc.
pub fn shepp_logan() -> Vec<EllipseSpec> {
    const T: [[f64; 6]; 10] = [
        [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
        [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
        [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
        [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
        [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
        [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
        [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
        [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
        [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
        [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
    ];
    T.iter()
        .map(|r| EllipseSpec {
            amplitude: r[0],
            semi_axes: [r[1], r[2]],
            center: [r[3], r[4]],
            rotation: r[5].to_radians(),
        })
        .collect()
}

/// `N x N` Cartesian grid on `[-1, 1)^2`.
pub fn image_grid(n: usize) -> GridSpec {
    let h = 2.0 / n as f64;
    GridSpec {
        kind: GridKind::Cartesian,
        rows: n,
        cols: n,
        origin: [-1.0, -1.0],
        spacing: [h, h],
    }
}

/// Point samples of a sum of ellipses at the pixel centres.
pub fn rasterize(ellipses: &[EllipseSpec], grid: GridSpec) -> Image {
    Raster::from_fn(grid, |x2, x1| {
        ellipses
            .iter()
            .filter(|e| e.contains(x1, x2))
            .map(|e| e.amplitude)
            .sum()
    })
}

pub fn phantom_image(n: usize) -> Result<Image> {
    if n < 16 {
        return Err(Error::InvalidParameter(format!("phantom size {n} < 16")));
    }
    Ok(rasterize(&shepp_logan(), image_grid(n)))
}

pub fn phantom_sinogram(ellipses: &[EllipseSpec], grid: GridSpec) -> Sinogram {
    Raster::from_fn(grid, |theta, s| {
        ellipses.iter().map(|e| e.line_integral(theta, s)).sum()
    })
}

/// Bilinear interpolation with zero outside the lattice.
#[inline]
fn bilinear(img: &Image, u: f64, v: f64) -> f64 {
    let (rows, cols) = (img.rows() as isize, img.cols() as isize);
    let (fu, fv) = (u.floor(), v.floor());
    let (i, j) = (fu as isize, fv as isize);
    if i < -1 || j < -1 || i >= rows || j >= cols {
        return 0.0;
    }
    let (a, b) = (u - fu, v - fv);
    let at = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= rows || c >= cols {
            0.0
        } else {
            img.data[(r * cols + c) as usize]
        }
    };
    (1.0 - a) * ((1.0 - b) * at(i, j) + b * at(i, j + 1))
        + a * ((1.0 - b) * at(i + 1, j) + b * at(i + 1, j + 1))
}

/// Trapezoid-rule line integrals of the bilinear image over the chords of the
/// unit disc, sampled at half the pixel pitch.
pub fn direct_radon(image: &Image, grid: GridSpec) -> Sinogram {
    let h = image.grid.spacing[1];
    let step = h / 2.0;
    let (o2, o1) = (image.grid.origin[0], image.grid.origin[1]);
    let mut out = Raster::zeros(grid);
    out.data
        .par_chunks_mut(grid.cols)
        .enumerate()
        .for_each(|(l, row)| {
            let theta = grid.origin[0] + l as f64 * grid.spacing[0];
            let (sn, cs) = theta.sin_cos();
            for (k, v) in row.iter_mut().enumerate() {
                let s = grid.origin[1] + k as f64 * grid.spacing[1];
                if s.abs() >= 1.0 {
                    continue;
                }
                let half = (1.0 - s * s).sqrt();
                let n = ((2.0 * half / step).ceil() as usize).max(2);
                let dt = 2.0 * half / n as f64;
                let mut acc = 0.0;
                for i in 0..=n {
                    let t = -half + i as f64 * dt;
                    let x1 = s * cs - t * sn;
                    let x2 = s * sn + t * cs;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    acc += w * bilinear(image, (x2 - o2) / h, (x1 - o1) / h);
                }
                *v = acc * dt;
            }
        });
    out
}

/// `2 sum_l g(theta_l, x . theta_l) dtheta` with linear interpolation in `s`
/// (zero past the sampled offsets), on `image_grid`. Pixels outside the unit
/// disc are zero.
pub fn direct_backprojection(sino: &Sinogram, image_grid: GridSpec) -> Image {
    let g = sino.grid;
    let trig: Vec<(f64, f64)> = (0..g.rows)
        .map(|l| (g.origin[0] + l as f64 * g.spacing[0]).sin_cos())
        .collect();
    let ns = g.cols as isize;
    let mut out = Raster::zeros(image_grid);
    out.data
        .par_chunks_mut(image_grid.cols)
        .enumerate()
        .for_each(|(r, row)| {
            for (c, v) in row.iter_mut().enumerate() {
                let (x2, x1) = image_grid.coord(r, c);
                if x1 * x1 + x2 * x2 > 1.0 {
                    continue;
                }
                let mut acc = 0.0;
                for (l, &(sn, cs)) in trig.iter().enumerate() {
                    let u = (x1 * cs + x2 * sn - g.origin[1]) / g.spacing[1];
                    let k = u.floor();
                    let a = u - k;
                    let k = k as isize;
                    let at = |k: isize| {
                        if k < 0 || k >= ns {
                            0.0
                        } else {
                            sino.data[l * g.cols + k as usize]
                        }
                    };
                    acc += (1.0 - a) * at(k) + a * at(k + 1);
                }
                *v = 2.0 * acc * g.spacing[0];
            }
        });
    out
}

/// Each bin becomes `Poisson(dose * v / max) * max / dose`.
pub fn add_poisson_noise(sino: &Sinogram, dose: f64, seed: u64) -> Result<Sinogram> {
    if !(dose > 0.0 && dose.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dose must be positive, got {dose}"
        )));
    }
    if sino.data.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "noise needs a finite nonnegative sinogram".into(),
        ));
    }
    let max = sino.max();
    let mut out = sino.clone();
    if max <= 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut out.data {
        let lambda = dose * *v / max;
        if lambda > 0.0 {
            let p = Poisson::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            *v = p.sample(&mut rng) * max / dose;
        }
    }
    Ok(out)
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil().max(1.0) as isize;
    let w: Vec<f64> = (-r..=r)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with zero extension.
pub fn gaussian_blur(data: &[f64], rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let w = gaussian_taps(sigma);
    let r = (w.len() / 2) as isize;
    let mut tmp = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (t, &wt) in w.iter().enumerate() {
                let jj = j as isize + t as isize - r;
                if jj >= 0 && (jj as usize) < cols {
                    acc += wt * data[i * cols + jj as usize];
                }
            }
            tmp[i * cols + j] = acc;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for (t, &wt) in w.iter().enumerate() {
            let ii = i as isize + t as isize - r;
            if ii >= 0 && (ii as usize) < rows {
                for j in 0..cols {
                    out[i * cols + j] += wt * tmp[ii as usize * cols + j];
                }
            }
        }
    }
    out
}

/// 1 up to radius `r0`, smooth cosine roll-off to 0 at `r1`.
pub fn taper(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        1.0
    } else if r >= r1 {
        0.0
    } else {
        0.5 * (1.0 + (PI * (r - r0) / (r1 - r0)).cos())
    }
}

/// Gaussian-blurred white noise (`sigma` in pixels), tapered to zero before the
/// unit circle and scaled to unit peak magnitude.
pub fn smooth_random_image<R: Rng>(plan: &GeometryPlan, sigma: f64, rng: &mut R) -> Image {
    let n = plan.n;
    let noise: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let mut data = gaussian_blur(&noise, n, n, sigma);
    let grid = plan.image_grid();
    for r in 0..n {
        for c in 0..n {
            let (x2, x1) = grid.coord(r, c);
            data[r * n + c] *= taper((x1 * x1 + x2 * x2).sqrt(), 0.75, 0.95);
        }
    }
    normalise(&mut data);
    Raster { grid, data }
}

/// Smooth random sinogram vanishing near `|s| = 1` and consistent with the
/// identity `g(theta + pi, s) = g(theta, -s)` across the angular wrap.
pub fn smooth_random_sinogram<R: Rng>(plan: &GeometryPlan, sigma: f64, rng: &mut R) -> Sinogram {
    let (nt, ns) = (plan.n_theta, plan.n_s);
    let pad = (4.0 * sigma).ceil() as usize + 1;
    // extend the angle range on both sides by the twisted copy, blur, crop
    let base: Vec<f64> = (0..nt * ns).map(|_| rng.sample(StandardNormal)).collect();
    let rows = nt + 2 * pad;
    let mut ext = vec![0.0; rows * ns];
    for i in 0..rows {
        let l = i as isize - pad as isize;
        let (src, flip) = if l < 0 {
            (l + nt as isize, true)
        } else if l >= nt as isize {
            (l - nt as isize, true)
        } else {
            (l, false)
        };
        for k in 0..ns {
            let kk = if flip { (ns - k) % ns } else { k };
            let v = if flip && k == 0 {
                0.0
            } else {
                base[src as usize * ns + kk]
            };
            ext[i * ns + k] = v;
        }
    }
    let blurred = gaussian_blur(&ext, rows, ns, sigma);
    let mut data = blurred[pad * ns..(pad + nt) * ns].to_vec();
    for l in 0..nt {
        for k in 0..ns {
            let s = -1.0 + k as f64 * plan.ds;
            data[l * ns + k] *= taper(s.abs(), 0.75, 0.95);
        }
    }
    normalise(&mut data);
    Raster {
        grid: plan.sinogram_grid(),
        data,
    }
}

fn normalise(data: &mut [f64]) {
    let m = data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        data.iter_mut().for_each(|v| *v /= m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sampling_plan;

    #[test]
    fn phantom_values() {
        let p = phantom_image(64).unwrap();
        assert!((p.get(32, 32) - 0.2).abs() < 1e-12);
        assert_eq!(p.get(0, 0), 0.0);
        assert!(p.data.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        assert!(phantom_image(8).is_err());
    }

    #[test]
    fn disc_sinogram_and_shift() {
        let plan = sampling_plan(32, 3).unwrap();
        let g = plan.sinogram_grid();
        let d = phantom_sinogram(&[EllipseSpec::disc(1.0, [0.0, 0.0], 1.0)], g);
        for l in 0..g.rows {
            for k in 0..g.cols {
                let s = -1.0 + k as f64 * plan.ds;
                assert!((d.get(l, k) - 2.0 * (1.0 - s * s).max(0.0).sqrt()).abs() < 1e-7);
            }
        }
        let e = EllipseSpec::disc(1.0, [0.3, 0.0], 0.4);
        let e0 = EllipseSpec::disc(1.0, [0.0, 0.0], 0.4);
        for &(t, s) in &[(0.3, 0.1), (1.2, -0.2), (2.9, 0.05)] {
            assert!(
                (e.line_integral(t, s) - e0.line_integral(t, s - 0.3 * f64::cos(t))).abs() < 1e-12
            );
        }
    }

    #[test]
    fn direct_radon_of_disc() {
        let plan = sampling_plan(128, 3).unwrap();
        let disc = [EllipseSpec::disc(1.0, [0.0, 0.0], 0.5)];
        let img = rasterize(&disc, plan.image_grid());
        let d = direct_radon(&img, plan.sinogram_grid());
        let a = phantom_sinogram(&disc, plan.sinogram_grid());
        let err = crate::raster::relative_l2(&d.data, &a.data);
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn direct_backprojection_of_indicator() {
        let plan = sampling_plan(64, 3).unwrap();
        let chi = Raster::filled(plan.sinogram_grid(), 1.0);
        let b = direct_backprojection(&chi, plan.image_grid());
        assert!((b.get(32, 32) - 2.0 * PI).abs() < 0.02 * 2.0 * PI);
        assert_eq!(b.get(0, 0), 0.0);
    }

    #[test]
    fn noise_is_deterministic() {
        let plan = sampling_plan(32, 3).unwrap();
        let s = phantom_sinogram(&shepp_logan(), plan.sinogram_grid());
        let a = add_poisson_noise(&s, 1e3, 5).unwrap();
        let b = add_poisson_noise(&s, 1e3, 5).unwrap();
        assert_eq!(a, b);
        for (x, y) in s.data.iter().zip(&a.data) {
            if *x == 0.0 {
                assert_eq!(*y, 0.0);
            }
        }
        let hi = add_poisson_noise(&s, 1e8, 1).unwrap();
        assert!(crate::raster::relative_l2(&hi.data, &s.data) < 1e-3);
        assert!(add_poisson_noise(&s, 0.0, 1).is_err());
    }

    #[test]
    fn random_fields_vanish_at_the_edge() {
        let plan = sampling_plan(32, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = smooth_random_image(&plan, 2.0, &mut rng);
        assert_eq!(f.get(0, 16), 0.0);
        let g = smooth_random_sinogram(&plan, 2.0, &mut rng);
        assert_eq!(g.get(5, 0), 0.0);
        assert!(g.max() > 0.0);
    }
}
