//! Complex log-gamma and reciprocal gamma.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `B_{2k} / (2k (2k - 1))` for k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Gamma(z)` up to an additive multiple of `2 pi i`. Exponentiating the
/// result always gives `Gamma(z)`.
///
/// Poles (`z` a non-positive integer) give a real part of `+inf`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        if is_pole(z) {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        return Complex64::new(PI.ln(), 0.0)
            - ln_sin_pi(z)
            - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    stirling(z) - shift
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        series += p * c;
        p *= inv2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series
}

/// `ln sin(pi z)`, free of overflow for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    let i = Complex64::i();
    if w.im > 20.0 {
        -i * w + Complex64::new(-LN_2, PI / 2.0) + (-(2.0 * i * w).exp()).ln_1p()
    } else if w.im < -20.0 {
        i * w + Complex64::new(-LN_2, -PI / 2.0) + (-(-2.0 * i * w).exp()).ln_1p()
    } else {
        w.sin().ln()
    }
}

trait Ln1p {
    fn ln_1p(self) -> Self;
}

impl Ln1p for Complex64 {
    fn ln_1p(self) -> Self {
        if self.norm() < 1e-5 {
            self - self * self / 2.0 + self * self * self / 3.0
        } else {
            (self + 1.0).ln()
        }
    }
}

pub fn is_pole(z: Complex64) -> bool {
    z.im.abs() <= 1e-13 * (1.0 + z.re.abs())
        && z.re <= 0.0
        && (z.re - z.re.round()).abs() <= 1e-12 * (1.0 + z.re.abs())
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// `1 / Gamma(z)`, exactly zero at the poles of `Gamma`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_pole(z) {
        Complex64::new(0.0, 0.0)
    } else {
        (-ln_gamma(z)).exp()
    }
}
