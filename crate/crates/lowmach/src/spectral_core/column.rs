//! Fields that are trigonometric in `x_h` and given in closed form in `z`.
//! Each term carries a time jet, so a column field can be sampled together with
//! its exact time derivatives and its first two `z`-derivatives.

use super::modal::ModalField;
use super::params::Geometry;
use crate::jet::{Jet, Scalar};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which wall a boundary construction belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Bottom, Side::Top];

    /// Distance to this wall.
    #[inline]
    pub fn distance(self, z: f64, a3: f64) -> f64 {
        match self {
            Side::Bottom => z,
            Side::Top => a3 - z,
        }
    }
}

/// Cubic polynomial coefficients `p(z) = Σ c_n z^n`.
pub type Poly = [Complex64; 4];

fn poly_eval(p: &Poly, z: f64) -> Complex64 {
    ((p[3] * z + p[2]) * z + p[1]) * z + p[0]
}

fn poly_diff(p: &Poly) -> Poly {
    [p[1], p[2] * 2.0, p[3] * 3.0, CZERO]
}

/// `p(a - z)` expanded in powers of `z`.
pub fn poly_reflect(p: &Poly, a: f64) -> Poly {
    let mut out = [CZERO; 4];
    for (n, c) in p.iter().enumerate() {
        // (a - z)^n = Σ_j C(n,j) a^{n-j} (-z)^j
        for j in 0..=n {
            let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]][n][j];
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out[j] += c * (binom * a.powi((n - j) as i32) * sign);
        }
    }
    out
}

pub fn real_poly(c: [f64; 4]) -> Poly {
    c.map(|v| Complex64::new(v, 0.0))
}

/// Vertical profile of one term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZProfile {
    /// `P(z) cos(kz) + S(z) sin(kz)` with cubic `P`, `S`.
    PolyTrig { k: f64, cos: Poly, sin: Poly },
    /// `e^{-rate·d(z)}` with `d` the distance to `side`.
    Decay { rate: Complex64, side: Side },
}

impl ZProfile {
    pub fn cos(k: f64) -> Self {
        ZProfile::PolyTrig { k, cos: real_poly([1.0, 0.0, 0.0, 0.0]), sin: [CZERO; 4] }
    }

    pub fn sin(k: f64) -> Self {
        ZProfile::PolyTrig { k, cos: [CZERO; 4], sin: real_poly([1.0, 0.0, 0.0, 0.0]) }
    }

    pub fn poly(p: Poly) -> Self {
        ZProfile::PolyTrig { k: 0.0, cos: p, sin: [CZERO; 4] }
    }

    /// The derivative profile, in closed form.
    pub fn derivative(&self) -> Self {
        match *self {
            ZProfile::PolyTrig { k, cos, sin } => {
                let (dp, ds) = (poly_diff(&cos), poly_diff(&sin));
                let mut c = dp;
                let mut s = ds;
                for n in 0..4 {
                    c[n] += sin[n] * k;
                    s[n] -= cos[n] * k;
                }
                ZProfile::PolyTrig { k, cos: c, sin: s }
            }
            ZProfile::Decay { .. } => *self,
        }
    }

    /// `[f, f', f'']` at `z`.
    pub fn eval(&self, z: f64, a3: f64) -> [Complex64; 3] {
        match *self {
            ZProfile::PolyTrig { k, .. } => {
                let d1 = self.derivative();
                let d2 = d1.derivative();
                let (s, c) = (k * z).sin_cos();
                let at = |p: &ZProfile| match p {
                    ZProfile::PolyTrig { cos, sin, .. } => poly_eval(cos, z) * c + poly_eval(sin, z) * s,
                    ZProfile::Decay { .. } => unreachable!(),
                };
                [at(self), at(&d1), at(&d2)]
            }
            ZProfile::Decay { rate, side } => {
                let d = side.distance(z, a3);
                let e = (-rate * d).exp();
                let sgn = match side {
                    Side::Bottom => -1.0,
                    Side::Top => 1.0,
                };
                [e, rate * e * sgn, rate * rate * e]
            }
        }
    }
}

/// One separated term `coef(t)·profile(z)·e^{i m_h·x_h}` in component `comp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnTerm {
    pub mh: [i32; 2],
    pub comp: usize,
    pub coef: Jet,
    pub profile: ZProfile,
}

/// Horizontal spectra of `(σ, u1, u2, u3)` and their `z`-derivatives at one height.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpectrum {
    pub m: usize,
    pub val: Vec<[Jet; 4]>,
    pub dz: Vec<[Jet; 4]>,
    pub dzz: Vec<[Jet; 4]>,
    /// Terms that fell outside the box.
    pub dropped: usize,
}

impl LevelSpectrum {
    pub fn zeros(m: usize) -> Self {
        let n = (2 * m + 1) * (2 * m + 1);
        let z = [Jet::zero(); 4];
        Self { m, val: vec![z; n], dz: vec![z; n], dzz: vec![z; n], dropped: 0 }
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    #[inline]
    pub fn index(&self, mh: [i32; 2]) -> Option<usize> {
        let m = self.m as i32;
        if mh[0].abs() > m || mh[1].abs() > m {
            return None;
        }
        Some((mh[0] + m) as usize * self.side() + (mh[1] + m) as usize)
    }

    /// Mode of a buffer index.
    #[inline]
    pub fn mode(&self, i: usize) -> [i32; 2] {
        let m = self.m as i32;
        let s = self.side();
        [(i / s) as i32 - m, (i % s) as i32 - m]
    }

    /// Adds `coef·[f, f', f'']` to component `comp` of mode `mh`.
    #[inline]
    pub fn add(&mut self, mh: [i32; 2], comp: usize, coef: &Jet, prof: [Complex64; 3]) {
        match self.index(mh) {
            Some(i) => {
                self.val[i][comp] += coef.scale(prof[0]);
                self.dz[i][comp] += coef.scale(prof[1]);
                self.dzz[i][comp] += coef.scale(prof[2]);
            }
            None => self.dropped += 1,
        }
    }

    /// Adds `[f, f', f'']` jets directly.
    #[inline]
    pub fn add_jets(&mut self, mh: [i32; 2], comp: usize, v: [Jet; 3]) {
        match self.index(mh) {
            Some(i) => {
                self.val[i][comp] += v[0];
                self.dz[i][comp] += v[1];
                self.dzz[i][comp] += v[2];
            }
            None => self.dropped += 1,
        }
    }

    pub fn accumulate(&mut self, other: &LevelSpectrum) {
        assert_eq!(self.m, other.m);
        for (a, b) in [(&mut self.val, &other.val), (&mut self.dz, &other.dz), (&mut self.dzz, &other.dzz)] {
            for (x, y) in a.iter_mut().zip(b) {
                for q in 0..4 {
                    x[q] += y[q];
                }
            }
        }
        self.dropped += other.dropped;
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().flat_map(|c| c.iter().map(|v| v.value().norm())).fold(0.0, f64::max)
    }
}

/// Anything that can be sampled into a [`LevelSpectrum`].
pub trait ColumnSource: Sync {
    /// Adds this field's spectra at height `z`.
    fn add_level(&self, geom: &Geometry, z: f64, out: &mut LevelSpectrum);
}

/// A sum of [`ColumnTerm`]s.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ColumnField {
    pub terms: Vec<ColumnTerm>,
}

impl ColumnField {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn push(&mut self, mh: [i32; 2], comp: usize, coef: Jet, profile: ZProfile) {
        if !coef.is_zero() {
            self.terms.push(ColumnTerm { mh, comp, coef, profile });
        }
    }

    pub fn extend(&mut self, other: ColumnField) {
        self.terms.extend(other.terms);
    }

    pub fn scale(&mut self, c: Complex64) {
        for t in &mut self.terms {
            t.coef = t.coef.scale(c);
        }
    }

    /// Separated field `(C, C, C, S)(m3 z)` expanded term by term.
    pub fn from_modal(geom: &Geometry, field: &ModalField<Jet>) -> Self {
        let k3 = geom.scale()[2];
        let mut out = Self::new();
        for (m, c) in field.iter() {
            let kz = m[2] as f64 * k3;
            for (q, v) in c.iter().enumerate() {
                let prof = if q < 3 { ZProfile::cos(kz) } else { ZProfile::sin(kz) };
                out.push([m[0], m[1]], q, *v, prof);
            }
        }
        out
    }

    pub fn max_mode(&self) -> i32 {
        self.terms.iter().map(|t| t.mh[0].abs().max(t.mh[1].abs())).max().unwrap_or(0)
    }
}

impl ColumnSource for ColumnField {
    fn add_level(&self, geom: &Geometry, z: f64, out: &mut LevelSpectrum) {
        let a3 = geom.a[2];
        for t in &self.terms {
            let p = t.profile.eval(z, a3);
            out.add(t.mh, t.comp, &t.coef, p);
        }
    }
}

impl<S: ColumnSource + ?Sized> ColumnSource for Box<S> {
    fn add_level(&self, geom: &Geometry, z: f64, out: &mut LevelSpectrum) {
        (**self).add_level(geom, z, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn polytrig_derivatives_match_differences() {
        let p = ZProfile::PolyTrig {
            k: 1.7,
            cos: [c(0.3), c(-1.0), c(0.2), c(0.05)],
            sin: [c(1.0), Complex64::new(0.0, 0.4), c(0.0), c(-0.1)],
        };
        let h = 1e-4;
        for z in [0.1, 0.9, 2.3] {
            let v = p.eval(z, 3.0);
            let (a, b) = (p.eval(z + h, 3.0), p.eval(z - h, 3.0));
            assert!(((a[0] - b[0]) / (2.0 * h) - v[1]).norm() < 1e-6);
            assert!(((a[1] - b[1]) / (2.0 * h) - v[2]).norm() < 1e-6);
        }
    }

    #[test]
    fn decay_derivatives_point_into_the_interior() {
        let r = Complex64::new(3.0, 2.0);
        for side in Side::BOTH {
            let p = ZProfile::Decay { rate: r, side };
            let h = 1e-6;
            let z = 0.4;
            let v = p.eval(z, 1.0);
            let d = (p.eval(z + h, 1.0)[0] - p.eval(z - h, 1.0)[0]) / (2.0 * h);
            assert!((d - v[1]).norm() < 1e-6);
            assert!((v[2] - r * r * v[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn reflection_expands_binomially() {
        let p = real_poly([1.0, -2.0, 0.5, 3.0]);
        let q = poly_reflect(&p, 1.3);
        for z in [0.0, 0.4, 1.1] {
            assert!((poly_eval(&q, z) - poly_eval(&p, 1.3 - z)).norm() < 1e-12);
        }
    }

    #[test]
    fn modal_expansion_agrees_with_pointwise_evaluation() {
        let g = Geometry::unit();
        let mut f = ModalField::<Jet>::new();
        f.add([1, -2, 3], [Jet::real(0.5), Jet::real(-1.0), Jet::constant(Complex64::new(0.0, 2.0)), Jet::real(0.7)]);
        let col = ColumnField::from_modal(&g, &f);
        let z = 0.37;
        let mut lvl = LevelSpectrum::zeros(2);
        col.add_level(&g, z, &mut lvl);
        let i = lvl.index([1, -2]).unwrap();
        let x = [0.2, 1.1];
        let e = Complex64::from_polar(1.0, x[0] - 2.0 * x[1]);
        let direct = f.eval(&g, [x[0], x[1], z]);
        for q in 0..4 {
            assert!((lvl.val[i][q].value() * e - direct[q].value()).norm() < 1e-13);
        }
    }
}
