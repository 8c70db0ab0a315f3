//! Binary fixed-point complex numbers on top of `BigInt`, used to sum
//! hypergeometric series whose terms cancel far below `f64` resolution.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub struct Fx {
    pub re: BigInt,
    pub im: BigInt,
}

/// Scale `2^bits` shared by all numbers of one computation.
#[derive(Clone, Copy, Debug)]
pub struct FixedCtx {
    pub bits: u32,
}

fn decode(x: f64) -> (u64, i32, bool) {
    let b = x.to_bits();
    let neg = b >> 63 == 1;
    let exp = ((b >> 52) & 0x7ff) as i32;
    let frac = b & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074, neg)
    } else {
        (frac | (1u64 << 52), exp - 1075, neg)
    }
}

impl FixedCtx {
    pub fn new(bits: u32) -> Self {
        Self { bits }
    }

    /// Exact conversion of a finite `f64`, truncated below `2^-bits`.
    pub fn real(&self, x: f64) -> BigInt {
        assert!(x.is_finite(), "non-finite value in fixed-point conversion");
        let (mant, exp, neg) = decode(x);
        let shift = exp + self.bits as i32;
        let v = BigInt::from(mant);
        let v = if shift >= 0 {
            v << shift as u32
        } else {
            v >> (-shift) as u32
        };
        if neg {
            -v
        } else {
            v
        }
    }

    pub fn complex(&self, z: Complex64) -> Fx {
        Fx {
            re: self.real(z.re),
            im: self.real(z.im),
        }
    }

    pub fn int(&self, n: i64) -> BigInt {
        BigInt::from(n) << self.bits
    }

    pub fn one(&self) -> Fx {
        Fx {
            re: self.int(1),
            im: BigInt::zero(),
        }
    }

    pub fn add(&self, a: &Fx, b: &Fx) -> Fx {
        Fx {
            re: &a.re + &b.re,
            im: &a.im + &b.im,
        }
    }

    pub fn add_int(&self, a: &Fx, n: i64) -> Fx {
        Fx {
            re: &a.re + self.int(n),
            im: a.im.clone(),
        }
    }

    /// Halves exactly when the low bit is clear; otherwise truncates one ulp.
    pub fn half(&self, a: &Fx) -> Fx {
        Fx {
            re: &a.re >> 1u32,
            im: &a.im >> 1u32,
        }
    }

    pub fn mul(&self, a: &Fx, b: &Fx) -> Fx {
        let re = (&a.re * &b.re - &a.im * &b.im) >> self.bits;
        let im = (&a.re * &b.im + &a.im * &b.re) >> self.bits;
        Fx { re, im }
    }

    pub fn div(&self, a: &Fx, b: &Fx) -> Fx {
        let den = &b.re * &b.re + &b.im * &b.im;
        let re = ((&a.re * &b.re + &a.im * &b.im) << self.bits) / &den;
        let im = ((&a.im * &b.re - &a.re * &b.im) << self.bits) / &den;
        Fx { re, im }
    }

    pub fn to_f64(&self, v: &BigInt) -> f64 {
        let drop = v.bits().saturating_sub(64) as u32;
        let shifted = v >> drop;
        let e = drop as i32 - self.bits as i32;
        // split the power to stay inside the f64 exponent range
        shifted.to_f64().unwrap_or(f64::NAN) * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
    }

    pub fn to_complex(&self, a: &Fx) -> Complex64 {
        Complex64::new(self.to_f64(&a.re), self.to_f64(&a.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_arithmetic() {
        let ctx = FixedCtx::new(200);
        for &x in &[0.0, 1.0, -2.5, 1e-30, -3.7e12, 0.1] {
            assert_eq!(ctx.to_f64(&ctx.real(x)), x);
        }
        let a = ctx.complex(Complex64::new(1.5, -0.25));
        let b = ctx.complex(Complex64::new(-0.75, 2.0));
        let p = ctx.to_complex(&ctx.mul(&a, &b));
        let e = Complex64::new(1.5, -0.25) * Complex64::new(-0.75, 2.0);
        assert!((p - e).norm() < 1e-15);
        let q = ctx.to_complex(&ctx.div(&a, &b));
        let e = Complex64::new(1.5, -0.25) / Complex64::new(-0.75, 2.0);
        assert!((q - e).norm() < 1e-15);
        assert_eq!(
            ctx.to_complex(&ctx.add_int(&a, 3)),
            Complex64::new(4.5, -0.25)
        );
    }

    #[test]
    fn exact_cancellation() {
        // (1e30 + x) - 1e30 keeps x exactly at 200 bits.
        let ctx = FixedCtx::new(200);
        let big = ctx.real(1e30);
        let x = ctx.real(0.123456789);
        let r = (&big + &x) - &big;
        assert_eq!(ctx.to_f64(&r), 0.123456789);
    }
}
