//! Direct separable Fourier sums between truncated horizontal spectra and
//! uniform periodic grids. Mode counts are small, so no FFT is needed.

use crate::jet::Scalar;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Twiddle tables for spectra `|m1|,|m2| ≤ M` on an `n1 × n2` grid.
#[derive(Clone, Debug)]
pub struct HorizontalDft {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    tw1: Vec<Complex64>,
    tw2: Vec<Complex64>,
}

impl HorizontalDft {
    pub fn new(n1: usize, n2: usize, m: usize) -> Self {
        let side = 2 * m + 1;
        let table = |n: usize| {
            let mut t = Vec::with_capacity(n * side);
            for i in 0..n {
                for q in 0..side {
                    let mm = q as f64 - m as f64;
                    t.push(Complex64::from_polar(1.0, 2.0 * PI * mm * i as f64 / n as f64));
                }
            }
            t
        };
        Self { n1, n2, m, tw1: table(n1), tw2: table(n2) }
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    /// Index of `(m1, m2)` in a spectrum buffer.
    #[inline]
    pub fn spec_index(&self, m1: i32, m2: i32) -> usize {
        let m = self.m as i32;
        (m1 + m) as usize * self.side() + (m2 + m) as usize
    }

    #[inline]
    pub fn spec_len(&self) -> usize {
        self.side() * self.side()
    }

    /// `f(x_i, y_j) = Σ ĉ(m1,m2) e^{2πi(m1 i/n1 + m2 j/n2)}`.
    pub fn inverse<T: Scalar>(&self, spec: &[T], out: &mut [T]) {
        let side = self.side();
        debug_assert_eq!(spec.len(), side * side);
        debug_assert_eq!(out.len(), self.n1 * self.n2);
        // stage 1: over m2 for every m1 row
        let mut rows = vec![T::zero(); side * self.n2];
        for q1 in 0..side {
            let src = &spec[q1 * side..(q1 + 1) * side];
            if src.iter().all(|v| v.is_zero()) {
                continue;
            }
            for j in 0..self.n2 {
                let tw = &self.tw2[j * side..(j + 1) * side];
                let mut acc = T::zero();
                for (c, w) in src.iter().zip(tw) {
                    acc += *c * *w;
                }
                rows[q1 * self.n2 + j] = acc;
            }
        }
        for i in 0..self.n1 {
            let tw = &self.tw1[i * side..(i + 1) * side];
            for j in 0..self.n2 {
                let mut acc = T::zero();
                for (q1, w) in tw.iter().enumerate() {
                    acc += rows[q1 * self.n2 + j] * *w;
                }
                out[i * self.n2 + j] = acc;
            }
        }
    }

    /// `ĉ(m1,m2) = (n1 n2)^{-1} Σ f(x_i,y_j) e^{-2πi(m1 i/n1 + m2 j/n2)}`.
    pub fn forward<T: Scalar>(&self, grid: &[T], out: &mut [T]) {
        let side = self.side();
        let norm = 1.0 / (self.n1 * self.n2) as f64;
        let mut cols = vec![T::zero(); side * self.n2];
        for j in 0..self.n2 {
            for q1 in 0..side {
                let mut acc = T::zero();
                for i in 0..self.n1 {
                    acc += grid[i * self.n2 + j] * self.tw1[i * side + q1].conj();
                }
                cols[q1 * self.n2 + j] = acc;
            }
        }
        for q1 in 0..side {
            for q2 in 0..side {
                let mut acc = T::zero();
                for j in 0..self.n2 {
                    acc += cols[q1 * self.n2 + j] * self.tw2[j * side + q2].conj();
                }
                out[q1 * side + q2] = acc * norm;
            }
        }
    }
}
