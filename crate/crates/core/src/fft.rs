//! Counted 2-D FFTs built from row transforms and a transpose.
//!
//! A forward transform of a `rows x cols` buffer returns the spectrum in
//! transposed layout (`cols x rows`, row index `k_col`, column index `k_row`);
//! the inverse takes that layout back to a `rows x cols` buffer. Keeping the
//! spectrum transposed lets band truncation along the original row axis act on
//! contiguous memory.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Number of 2-D transforms executed.
#[derive(Debug, Default)]
pub struct FftCounter {
    forward: AtomicUsize,
    inverse: AtomicUsize,
}

impl FftCounter {
    pub fn forward(&self) -> usize {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn inverse(&self) -> usize {
        self.inverse.load(Ordering::Relaxed)
    }

    pub fn total(&self) -> usize {
        self.forward() + self.inverse()
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.inverse.store(0, Ordering::Relaxed);
    }
}

pub fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    const B: usize = 32;
    let mut dst = vec![Complex64::new(0.0, 0.0); rows * cols];
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}

/// Forward and inverse plans for one `rows x cols` shape.
#[derive(Clone)]
pub struct Fft2 {
    pub rows: usize,
    pub cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.rows, self.cols)
    }
}

impl Fft2 {
    pub fn new(planner: &mut FftPlanner<f64>, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    /// Unnormalised forward transform; `skip_zero_rows` avoids transforming
    /// rows that are entirely zero.
    pub fn forward_t(
        &self,
        mut data: Vec<Complex64>,
        counter: &FftCounter,
        skip_zero_rows: bool,
    ) -> Vec<Complex64> {
        assert_eq!(data.len(), self.rows * self.cols);
        counter.forward.fetch_add(1, Ordering::Relaxed);
        for row in data.chunks_exact_mut(self.cols) {
            if skip_zero_rows && row.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
                continue;
            }
            self.row_fwd.process(row);
        }
        let mut t = transpose(&data, self.rows, self.cols);
        drop(data);
        for row in t.chunks_exact_mut(self.rows) {
            self.col_fwd.process(row);
        }
        t
    }

    /// Unnormalised inverse of a transposed-layout spectrum.
    pub fn inverse_t(&self, mut t: Vec<Complex64>, counter: &FftCounter) -> Vec<Complex64> {
        assert_eq!(t.len(), self.rows * self.cols);
        counter.inverse.fetch_add(1, Ordering::Relaxed);
        for row in t.chunks_exact_mut(self.rows) {
            self.col_inv.process(row);
        }
        let mut data = transpose(&t, self.cols, self.rows);
        drop(t);
        for row in data.chunks_exact_mut(self.cols) {
            self.row_inv.process(row);
        }
        data
    }
}

/// Signed frequency of FFT bin `i` of a length-`n` transform.
#[inline]
pub fn signed_bin(i: usize, n: usize) -> isize {
    if i <= n / 2 {
        i as isize
    } else {
        i as isize - n as isize
    }
}
