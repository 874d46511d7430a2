//! Exact algebra of separated fields `(σ, u1, u2, u3) = (C, C, C, S)(m3 z)·e^{i m_h·x_h}`
//! with `C = cos`, `S = sin`. Products of such fields stay in the class, which makes
//! quadratic interactions computable without quadrature.

use super::lattice::{Lattice, Sign, WaveVector};
use super::osc::eigen_coeffs;
use super::params::Geometry;
use crate::jet::Scalar;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Coefficient vector of one separated term.
pub type Coeff4<T> = [T; 4];

#[inline]
fn zero4<T: Scalar>() -> Coeff4<T> {
    [T::zero(); 4]
}

#[inline]
fn i_times<T: Scalar>(x: T, k: f64) -> T {
    x * Complex64::new(0.0, k)
}

/// Sparse separated field keyed by `(m1, m2, m3)` with `m3 ≥ 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModalField<T> {
    terms: BTreeMap<Lattice, Coeff4<T>>,
}

impl<T: Scalar> ModalField<T> {
    pub fn new() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds a term, folding negative `m3` through `C_{-n} = C_n`, `S_{-n} = -S_n`.
    pub fn add(&mut self, key: Lattice, c: Coeff4<T>) {
        let (key, flip) = if key[2] < 0 { ([key[0], key[1], -key[2]], true) } else { (key, false) };
        let e = self.terms.entry(key).or_insert_with(zero4);
        for q in 0..3 {
            e[q] += c[q];
        }
        if key[2] != 0 {
            if flip {
                e[3] -= c[3];
            } else {
                e[3] += c[3];
            }
        }
    }

    pub fn get(&self, key: Lattice) -> Option<&Coeff4<T>> {
        self.terms.get(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Lattice, &Coeff4<T>)> {
        self.terms.iter()
    }

    pub fn scale(&mut self, a: Complex64) {
        for c in self.terms.values_mut() {
            for v in c.iter_mut() {
                *v = *v * a;
            }
        }
    }

    pub fn axpy(&mut self, a: Complex64, x: &ModalField<T>) {
        for (k, c) in x.iter() {
            self.add(*k, [c[0] * a, c[1] * a, c[2] * a, c[3] * a]);
        }
    }

    /// `Q(self, other) = (u·∇)V + pc·σ·(div v, ∇σ_V)` with `pc = (γ-1)/2`.
    pub fn q_form(&self, other: &ModalField<T>, geom: &Geometry, pc: f64) -> ModalField<T> {
        let mut out = ModalField::new();
        for (k, u) in self.iter() {
            for (l, v) in other.iter() {
                for (m, c) in q_pair(geom, *k, u, *l, v, pc) {
                    out.add(m, c);
                }
            }
        }
        out
    }

    /// `L(σ, u) = -(div u, ∇σ)`.
    pub fn apply_l(&self, geom: &Geometry) -> ModalField<T> {
        let mut out = ModalField::new();
        for (m, c) in self.iter() {
            let w = WaveVector::of(geom, *m);
            let div = i_times(c[1], w.k[0]) + i_times(c[2], w.k[1]) + c[3] * w.k[2];
            out.add(*m, [-div, -i_times(c[0], w.k[0]), -i_times(c[0], w.k[1]), c[0] * w.k[2]]);
        }
        out
    }

    /// Pointwise value at `(x1, x2, z)`.
    pub fn eval(&self, geom: &Geometry, p: [f64; 3]) -> Coeff4<T> {
        let mut out = zero4();
        for (m, c) in self.iter() {
            let w = WaveVector::of(geom, *m);
            let e = Complex64::from_polar(1.0, w.k[0] * p[0] + w.k[1] * p[1]);
            let (s, co) = (w.k[2] * p[2]).sin_cos();
            for q in 0..3 {
                out[q] += c[q] * (e * co);
            }
            out[3] += c[3] * (e * s);
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ModalField<U> {
        ModalField { terms: self.terms.iter().map(|(k, c)| (*k, [f(&c[0]), f(&c[1]), f(&c[2]), f(&c[3])])).collect() }
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&Lattice) -> bool) {
        self.terms.retain(|k, _| keep(k));
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().flat_map(|c| c.iter().map(|v| v.lead().norm())).fold(0.0, f64::max)
    }
}

impl ModalField<Complex64> {
    /// `Σ_α w_k b_k^α N_k^α e^{iα|k|τ}` as separated terms.
    pub fn from_osc(state: &super::osc::OscState, tau: f64) -> Self {
        let g = *state.geometry();
        let mut out = ModalField::new();
        for (m, a, b) in state.iter() {
            if b == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = WaveVector::of(&g, m.lattice());
            let amp = b * m.weight() * Complex64::from_polar(1.0, a.value() * w.norm * tau);
            let n = eigen_coeffs(&g, m.lattice(), a);
            out.add(m.lattice(), [n[0] * amp, n[1] * amp, n[2] * amp, n[3] * amp]);
        }
        out
    }
}

/// Quadratic form of two single separated terms. Returns the contributions at
/// `m3 = k3 + l3` and `m3 = |k3 - l3|` (which coincide when either index vanishes).
#[inline]
pub fn q_pair<T: Scalar>(
    geom: &Geometry,
    k: Lattice,
    u: &Coeff4<T>,
    l: Lattice,
    v: &Coeff4<T>,
    pc: f64,
) -> [(Lattice, Coeff4<T>); 2] {
    let lw = WaveVector::of(geom, l).k;
    let (p, q) = (k[2], l[2]);
    let w3 = if p == 0 { T::zero() } else { u[3] };
    let w3p = if q == 0 { T::zero() } else { v[3] };
    let (s, w1, w2) = (u[0], u[1], u[2]);
    let (sp, w1p, w2p) = (v[0], v[1], v[2]);

    let adv = i_times(w1, lw[0]) + i_times(w2, lw[1]);
    let divp = i_times(w1p, lw[0]) + i_times(w2p, lw[1]) + w3p * lw[2];
    let a =
        [adv * sp + s * divp * pc, adv * w1p + i_times(s * sp, lw[0]) * pc, adv * w2p + i_times(s * sp, lw[1]) * pc];
    let b = [-(w3 * sp) * lw[2], -(w3 * w1p) * lw[2], -(w3 * w2p) * lw[2]];
    let d = adv * w3p - (s * sp) * (pc * lw[2]);
    let e = (w3 * w3p) * lw[2];

    let mh = [k[0] + l[0], k[1] + l[1]];
    let sum = [(a[0] - b[0]) * 0.5, (a[1] - b[1]) * 0.5, (a[2] - b[2]) * 0.5, (d + e) * 0.5];
    let r = p - q;
    let sgn = r.signum() as f64;
    let diff = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5, (e - d) * (0.5 * sgn)];
    [([mh[0], mh[1], p + q], sum), ([mh[0], mh[1], r.abs()], diff)]
}

/// Decomposition of one separated coefficient vector into the two acoustic
/// eigenvectors and the kernel of `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection<T> {
    pub plus: T,
    pub minus: T,
    pub kernel: Coeff4<T>,
}

/// Vertical mass of `cos²` and `sin²` over `[0, a3]`.
#[inline]
pub fn vertical_mass(a3: f64, m3: i32) -> (f64, f64) {
    if m3 == 0 {
        (a3, 0.0)
    } else {
        (0.5 * a3, 0.5 * a3)
    }
}

/// Coefficient of `N_m^γ` in `c` with respect to the `L²(Ω)` inner product.
#[inline]
pub fn eigen_component<T: Scalar>(geom: &Geometry, m: Lattice, sign: Sign, c: &Coeff4<T>) -> T {
    let n = eigen_coeffs(geom, m, sign);
    let (ic, is) = vertical_mass(geom.a[2], m[2]);
    let num = (c[0] * n[0].conj() + c[1] * n[1].conj() + c[2] * n[2].conj()) * ic + c[3] * n[3].conj() * is;
    let den = (n[0].norm_sqr() + n[1].norm_sqr() + n[2].norm_sqr()) * ic + n[3].norm_sqr() * is;
    num * (1.0 / den)
}

pub fn project<T: Scalar>(geom: &Geometry, m: Lattice, c: &Coeff4<T>) -> Projection<T> {
    if m == [0, 0, 0] {
        return Projection { plus: T::zero(), minus: T::zero(), kernel: [c[0], c[1], c[2], T::zero()] };
    }
    let plus = eigen_component(geom, m, Sign::Plus, c);
    let minus = eigen_component(geom, m, Sign::Minus, c);
    let np = eigen_coeffs(geom, m, Sign::Plus);
    let nm = eigen_coeffs(geom, m, Sign::Minus);
    let mut kernel = *c;
    for q in 0..4 {
        kernel[q] = kernel[q] - plus * np[q] - minus * nm[q];
    }
    if m[2] == 0 {
        kernel[3] = T::zero();
    }
    Projection { plus, minus, kernel }
}

/// Leray projection of a separated velocity coefficient (`σ` is discarded unless `m = 0`).
pub fn leray<T: Scalar>(geom: &Geometry, m: Lattice, c: &Coeff4<T>) -> Coeff4<T> {
    if m[0] == 0 && m[1] == 0 && m[2] == 0 {
        return [c[0], c[1], c[2], T::zero()];
    }
    let w = WaveVector::of(geom, m).k;
    // gradient direction of p·cos(m3 z)e^{i m_h x}: (i m1, i m2, -m3)
    let g = [Complex64::new(0.0, w[0]), Complex64::new(0.0, w[1]), Complex64::new(-w[2], 0.0)];
    let use3 = m[2] != 0;
    let gg = g[0].norm_sqr() + g[1].norm_sqr() + if use3 { g[2].norm_sqr() } else { 0.0 };
    let mut dot = c[1] * g[0].conj() + c[2] * g[1].conj();
    if use3 {
        dot += c[3] * g[2].conj();
    }
    let f = 1.0 / gg;
    let out3 = if use3 { c[3] - dot * g[2] * f } else { T::zero() };
    [T::zero(), c[1] - dot * g[0] * f, c[2] - dot * g[1] * f, out3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::lattice::ModeIndex;

    fn num_q(
        geom: &Geometry,
        u: &ModalField<Complex64>,
        v: &ModalField<Complex64>,
        p: [f64; 3],
        pc: f64,
    ) -> Coeff4<Complex64> {
        // central differences of v, pointwise products
        let h = 1e-5;
        let uu = u.eval(geom, p);
        let mut grad = [[Complex64::new(0.0, 0.0); 3]; 4];
        for d in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[d] += h;
            pm[d] -= h;
            let (a, b) = (v.eval(geom, pp), v.eval(geom, pm));
            for c in 0..4 {
                grad[c][d] = (a[c] - b[c]) / (2.0 * h);
            }
        }
        let vv = v.eval(geom, p);
        let _ = vv;
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for c in 0..4 {
            out[c] = uu[1] * grad[c][0] + uu[2] * grad[c][1] + uu[3] * grad[c][2];
        }
        let div = grad[1][0] + grad[2][1] + grad[3][2];
        out[0] += uu[0] * div * pc;
        for d in 0..3 {
            out[1 + d] += uu[0] * grad[0][d] * pc;
        }
        out
    }

    #[test]
    fn q_pair_matches_pointwise_products() {
        let g = Geometry::new(2.0, 3.0, 1.5).unwrap();
        let pc = 0.2;
        let mut u = ModalField::new();
        u.add(
            [1, -1, 2],
            [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5), Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.4)],
        );
        u.add(
            [0, 2, 0],
            [Complex64::new(0.1, 0.0), Complex64::new(0.2, -0.3), Complex64::new(0.0, 0.6), Complex64::new(0.0, 0.0)],
        );
        let mut v = ModalField::new();
        v.add(
            [2, 1, 1],
            [Complex64::new(-0.4, 0.2), Complex64::new(0.1, 0.1), Complex64::new(0.3, -0.2), Complex64::new(0.5, 0.5)],
        );
        v.add(
            [-1, 0, 3],
            [Complex64::new(0.2, 0.0), Complex64::new(0.0, 0.3), Complex64::new(-0.1, 0.0), Complex64::new(0.2, -0.1)],
        );
        let q = u.q_form(&v, &g, pc);
        for p in [[0.3, 0.4, 0.2], [1.1, 2.5, 1.3], [0.0, 0.0, 0.7]] {
            let a = q.eval(&g, p);
            let b = num_q(&g, &u, &v, p, pc);
            for c in 0..4 {
                assert!((a[c] - b[c]).norm() < 1e-7, "{c}: {} vs {}", a[c], b[c]);
            }
        }
    }

    #[test]
    fn projection_recovers_eigenvectors() {
        let g = Geometry::new(2.0, 3.0, 1.5).unwrap();
        for m in [[1, 2, 0], [0, 0, 2], [-1, 1, 3]] {
            let np = eigen_coeffs(&g, m, Sign::Plus);
            let nm = eigen_coeffs(&g, m, Sign::Minus);
            let mut c = [Complex64::new(0.0, 0.0); 4];
            for q in 0..4 {
                c[q] = np[q] * Complex64::new(0.5, 0.2) + nm[q] * Complex64::new(-0.3, 0.0);
            }
            let p = project(&g, m, &c);
            assert!((p.plus - Complex64::new(0.5, 0.2)).norm() < 1e-13);
            assert!((p.minus + Complex64::new(0.3, 0.0)).norm() < 1e-13);
            assert!(p.kernel.iter().all(|v| v.norm() < 1e-13));
        }
        let _ = ModeIndex::new(1, 0, 0);
    }

    #[test]
    fn kernel_part_is_divergence_free() {
        let g = Geometry::new(2.0, 3.0, 1.5).unwrap();
        let m = [1, -2, 2];
        let c =
            [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5), Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.4)];
        let p = project(&g, m, &c);
        let w = WaveVector::of(&g, m).k;
        let div =
            p.kernel[1] * Complex64::new(0.0, w[0]) + p.kernel[2] * Complex64::new(0.0, w[1]) + p.kernel[3] * w[2];
        assert!(div.norm() < 1e-13 && p.kernel[0].norm() < 1e-13);
        let l = leray(&g, m, &c);
        let div = l[1] * Complex64::new(0.0, w[0]) + l[2] * Complex64::new(0.0, w[1]) + l[3] * w[2];
        assert!(div.norm() < 1e-13);
    }
}
