//! Truncated Taylor series in time. A `Jet` holds `f(t + s) = Σ c_n s^n` for
//! `n < JET_LEN`; arithmetic propagates exact time derivatives through every
//! construction step.

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub const JET_LEN: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet(pub [Complex64; JET_LEN]);

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl Jet {
    pub const fn zero() -> Self {
        Jet([ZERO; JET_LEN])
    }

    pub fn constant(c: Complex64) -> Self {
        let mut j = Self::zero();
        j.0[0] = c;
        j
    }

    pub fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    /// `e^{i ω (t+s)}` expanded in `s`.
    pub fn phase(omega: f64, t: f64) -> Self {
        let base = Complex64::new(0.0, omega * t).exp();
        let step = Complex64::new(0.0, omega);
        let mut j = Self::zero();
        let mut term = base;
        for n in 0..JET_LEN {
            j.0[n] = term;
            term = term * step / (n as f64 + 1.0);
        }
        j
    }

    /// Builds a jet from ordinary derivatives `[f, f', f'', ...]`.
    pub fn from_derivatives(d: &[Complex64]) -> Self {
        let mut j = Self::zero();
        let mut fact = 1.0;
        for (n, v) in d.iter().take(JET_LEN).enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            j.0[n] = *v / fact;
        }
        j
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        self.0[0]
    }

    /// The `n`-th ordinary time derivative.
    pub fn derivative(&self, n: usize) -> Complex64 {
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        self.0[n] * fact
    }

    /// Time derivative as a jet; the top coefficient is lost.
    pub fn dt(&self) -> Self {
        let mut j = Self::zero();
        for n in 0..JET_LEN - 1 {
            j.0[n] = self.0[n + 1] * (n as f64 + 1.0);
        }
        j
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut j = *self;
        for v in j.0.iter_mut() {
            *v *= c;
        }
        j
    }

    pub fn scale_re(&self, c: f64) -> Self {
        let mut j = *self;
        for v in j.0.iter_mut() {
            *v *= c;
        }
        j
    }

    pub fn conj(&self) -> Self {
        let mut j = *self;
        for v in j.0.iter_mut() {
            *v = v.conj();
        }
        j
    }

    pub fn re(&self) -> Self {
        let mut j = *self;
        for v in j.0.iter_mut() {
            *v = Complex64::new(v.re, 0.0);
        }
        j
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Self {
        let mut r = Self::zero();
        r.0[0] = self.0[0].inv();
        for n in 1..JET_LEN {
            let mut acc = ZERO;
            for k in 1..=n {
                acc += self.0[k] * r.0[n - k];
            }
            r.0[n] = -acc * r.0[0];
        }
        r
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Multiply-accumulate `self += a * b`.
    #[inline]
    pub fn fma(&mut self, a: &Jet, b: &Jet) {
        for n in 0..JET_LEN {
            for k in 0..=n {
                self.0[n] += a.0[k] * b.0[n - k];
            }
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        self += rhs;
        self
    }
}

impl AddAssign for Jet {
    #[inline]
    fn add_assign(&mut self, rhs: Jet) {
        for n in 0..JET_LEN {
            self.0[n] += rhs.0[n];
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet {
    #[inline]
    fn sub_assign(&mut self, rhs: Jet) {
        for n in 0..JET_LEN {
            self.0[n] -= rhs.0[n];
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet::zero();
        out.fma(&self, &rhs);
        out
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: f64) -> Jet {
        self.scale_re(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_rule_matches_hand_derivatives() {
        // f = t^2, g = t^3 at t = 2: (fg)' = 5 t^4 = 80, (fg)'' = 20 t^3 = 160
        let f = Jet::from_derivatives(&[c(4.0), c(4.0), c(2.0), c(0.0)]);
        let g = Jet::from_derivatives(&[c(8.0), c(12.0), c(12.0), c(6.0)]);
        let h = f * g;
        assert!((h.derivative(1) - c(80.0)).norm() < 1e-12);
        assert!((h.derivative(2) - c(160.0)).norm() < 1e-12);
        assert!((h.derivative(3) - c(240.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_derivatives_are_powers_of_i_omega() {
        let p = Jet::phase(3.0, 0.7);
        let base = Complex64::new(0.0, 2.1).exp();
        for n in 0..JET_LEN {
            let expect = base * Complex64::new(0.0, 3.0).powu(n as u32);
            assert!((p.derivative(n) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn recip_inverts() {
        let f = Jet::from_derivatives(&[c(2.0), c(-1.0), c(0.5), c(3.0)]);
        let one = f * f.recip();
        assert!((one.value() - c(1.0)).norm() < 1e-14);
        for n in 1..JET_LEN {
            assert!(one.0[n].norm() < 1e-14);
        }
    }
}

/// Arithmetic shared by plain complex numbers and time jets, so right-hand sides
/// can be written once and evaluated either pointwise or as Taylor series.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Mul<Complex64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn from_c(c: Complex64) -> Self;
    fn conj(self) -> Self;
    fn lead(self) -> Complex64;
    fn is_zero(&self) -> bool;
    /// `e^{iωt}` at the expansion point `t`.
    fn phase(omega: f64, t: f64) -> Self;
}

impl Scalar for Complex64 {
    #[inline]
    fn zero() -> Self {
        ZERO
    }
    #[inline]
    fn from_c(c: Complex64) -> Self {
        c
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn lead(self) -> Complex64 {
        self
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    #[inline]
    fn phase(omega: f64, t: f64) -> Self {
        Complex64::from_polar(1.0, omega * t)
    }
}

impl Scalar for Jet {
    #[inline]
    fn zero() -> Self {
        Jet::zero()
    }
    #[inline]
    fn from_c(c: Complex64) -> Self {
        Jet::constant(c)
    }
    #[inline]
    fn conj(self) -> Self {
        Jet::conj(&self)
    }
    #[inline]
    fn lead(self) -> Complex64 {
        self.0[0]
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.0.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
    #[inline]
    fn phase(omega: f64, t: f64) -> Self {
        Jet::phase(omega, t)
    }
}
