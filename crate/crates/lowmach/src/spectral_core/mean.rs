use super::lattice::{Lattice, WaveVector};
use super::modal::{leray, ModalField};
use super::params::Geometry;
use crate::error::{Error, Result};
use crate::sum::Neumaier;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Divergence-free mean flow `v_h = Σ ĉ_k cos(k3 z) e^{ik_h·x_h}`,
/// `v_3 = Σ -i (k_h·ĉ_k)/k3 · sin(k3 z) e^{ik_h·x_h}`, plus a constant density offset.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFlowState {
    geom: Geometry,
    k: usize,
    pub t: f64,
    pub sigma0: f64,
    coef: Vec<[Complex64; 2]>,
}

/// Named initial mean flows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanPreset {
    Zero,
    /// `(U sin κ1x cos κ2y, -U(κ1/κ2) cos κ1x sin κ2y, 0)`.
    TaylorGreen {
        amplitude: f64,
    },
    /// Kolmogorov shear `(U sin κ2 y, 0, 0)`.
    Shear {
        amplitude: f64,
    },
    Random {
        amplitude: f64,
        seed: u64,
    },
}

impl MeanFlowState {
    pub fn zeros(geom: Geometry, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter { field: "K", reason: "mean truncation must be at least 1".into() });
        }
        let n = (2 * k + 1) * (2 * k + 1) * (k + 1);
        Ok(Self { geom, k, t: 0.0, sigma0: 0.0, coef: vec![[CZERO; 2]; n] })
    }

    pub fn preset(geom: Geometry, k: usize, preset: MeanPreset) -> Result<Self> {
        let mut s = Self::zeros(geom, k)?;
        let sc = geom.scale();
        let half = Complex64::new(0.0, -0.25); // 1/(4i)
        match preset {
            MeanPreset::Zero => {}
            MeanPreset::TaylorGreen { amplitude } => {
                let r = sc[0] / sc[1];
                // sin x cos y and cos x sin y expanded over (±1, ±1)
                for (s1, s2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    let u1 = half * (s1 as f64) * amplitude;
                    let u2 = -half * (s2 as f64) * amplitude * r;
                    s.set([s1, s2, 0], [u1, u2])?;
                }
            }
            MeanPreset::Shear { amplitude } => {
                // sin y = (e^{iy} - e^{-iy}) / (2i)
                s.set([0, 1, 0], [Complex64::new(0.0, -0.5 * amplitude), CZERO])?;
            }
            MeanPreset::Random { amplitude, seed } => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                s.fill_random(&mut rng, amplitude, 2.0);
            }
        }
        Ok(s)
    }

    fn fill_random<R: Rng>(&mut self, rng: &mut R, amplitude: f64, decay: f64) {
        let k = self.k as i32;
        for k1 in -k..=k {
            for k2 in -k..=k {
                for k3 in 0..=k {
                    let m = [k1, k2, k3];
                    if m == [0, 0, 0] {
                        continue;
                    }
                    let w = WaveVector::of(&self.geom, m);
                    let a = amplitude * (1.0 + w.norm).powf(-decay);
                    let v = [
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * a,
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * a,
                    ];
                    let _ = self.set(m, v);
                }
            }
        }
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn contains(&self, m: Lattice) -> bool {
        let k = self.k as i32;
        m[0].abs() <= k && m[1].abs() <= k && m[2] >= 0 && m[2] <= k
    }

    #[inline]
    pub fn index(&self, m: Lattice) -> usize {
        let k = self.k as i32;
        let side = 2 * self.k + 1;
        (((m[0] + k) as usize) * side + (m[1] + k) as usize) * (self.k + 1) + m[2] as usize
    }

    pub fn modes(&self) -> impl Iterator<Item = Lattice> + '_ {
        let k = self.k as i32;
        (-k..=k).flat_map(move |a| (-k..=k).flat_map(move |b| (0..=k).map(move |c| [a, b, c])))
    }

    #[inline]
    pub fn get(&self, m: Lattice) -> [Complex64; 2] {
        if self.contains(m) {
            self.coef[self.index(m)]
        } else {
            [CZERO; 2]
        }
    }

    #[inline]
    pub fn as_slice(&self) -> &[[Complex64; 2]] {
        &self.coef
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [[Complex64; 2]] {
        &mut self.coef
    }

    /// Sets `ĉ_m` and its conjugate partner; at `m3 = 0` the component along `m_h` is removed.
    pub fn set(&mut self, m: Lattice, v: [Complex64; 2]) -> Result<()> {
        if !self.contains(m) {
            return Err(Error::OutsideTruncation(m[0], m[1], m[2]));
        }
        let v = if m[2] == 0 { self.horizontal_solenoidal(m, v) } else { v };
        let i = self.index(m);
        let j = self.index([-m[0], -m[1], m[2]]);
        self.coef[i] = v;
        self.coef[j] = [v[0].conj(), v[1].conj()];
        if i == j {
            self.coef[i] = [Complex64::new(v[0].re, 0.0), Complex64::new(v[1].re, 0.0)];
        }
        Ok(())
    }

    fn horizontal_solenoidal(&self, m: Lattice, v: [Complex64; 2]) -> [Complex64; 2] {
        if m[0] == 0 && m[1] == 0 {
            return v;
        }
        let w = WaveVector::of(&self.geom, m).k;
        let kk = w[0] * w[0] + w[1] * w[1];
        let dot = (v[0] * w[0] + v[1] * w[1]) / kk;
        [v[0] - dot * w[0], v[1] - dot * w[1]]
    }

    /// Sine coefficient of `v_3` at `m`.
    #[inline]
    pub fn vertical(&self, m: Lattice) -> Complex64 {
        if m[2] == 0 {
            return CZERO;
        }
        let c = self.get(m);
        let w = WaveVector::of(&self.geom, m).k;
        Complex64::new(0.0, -1.0) * (c[0] * w[0] + c[1] * w[1]) / w[2]
    }

    /// Horizontal average `(1/|Ω|)∫ v_h`.
    pub fn mean_horizontal(&self) -> [f64; 2] {
        let c = self.get([0, 0, 0]);
        [c[0].re, c[1].re]
    }

    pub fn to_modal(&self) -> ModalField<Complex64> {
        let mut f = ModalField::new();
        for m in self.modes() {
            let c = self.get(m);
            let s = if m == [0, 0, 0] { Complex64::new(self.sigma0, 0.0) } else { CZERO };
            if c[0] != CZERO || c[1] != CZERO || s != CZERO {
                f.add(m, [s, c[0], c[1], self.vertical(m)]);
            }
        }
        f
    }

    /// Leray projection of a separated velocity field onto this truncation.
    pub fn from_modal(geom: Geometry, k: usize, field: &ModalField<Complex64>) -> Result<Self> {
        let mut s = Self::zeros(geom, k)?;
        for (m, c) in field.iter() {
            if !s.contains(*m) {
                continue;
            }
            if *m == [0, 0, 0] {
                s.sigma0 = c[0].re;
            }
            let p = leray(&geom, *m, c);
            let i = s.index(*m);
            s.coef[i] = [p[1], p[2]];
        }
        Ok(s)
    }

    /// `½‖v‖²_{L²(Ω)}`.
    pub fn kinetic_energy(&self) -> f64 {
        let a3 = self.geom.a[2];
        let mut acc = Neumaier::new();
        for m in self.modes() {
            let c = self.get(m);
            let ic = if m[2] == 0 { a3 } else { 0.5 * a3 };
            acc.add(ic * (c[0].norm_sqr() + c[1].norm_sqr()));
            if m[2] > 0 {
                acc.add(0.5 * a3 * self.vertical(m).norm_sqr());
            }
        }
        0.5 * self.geom.area() * acc.total()
    }

    /// `‖∇_h v‖²_{L²(Ω)}`.
    pub fn horizontal_enstrophy(&self) -> f64 {
        let a3 = self.geom.a[2];
        let mut acc = Neumaier::new();
        for m in self.modes() {
            let w = WaveVector::of(&self.geom, m);
            let h2 = w.norm_h * w.norm_h;
            let c = self.get(m);
            let ic = if m[2] == 0 { a3 } else { 0.5 * a3 };
            acc.add(h2 * ic * (c[0].norm_sqr() + c[1].norm_sqr()));
            if m[2] > 0 {
                acc.add(h2 * 0.5 * a3 * self.vertical(m).norm_sqr());
            }
        }
        self.geom.area() * acc.total()
    }

    pub fn axpy(&mut self, a: f64, x: &MeanFlowState) {
        for (y, v) in self.coef.iter_mut().zip(&x.coef) {
            y[0] += v[0] * a;
            y[1] += v[1] * a;
        }
    }

    pub fn with_coefficients(&self, coef: Vec<[Complex64; 2]>) -> Self {
        assert_eq!(coef.len(), self.coef.len());
        Self { coef, ..self.clone() }
    }

    /// Exact Taylor–Green velocity at time `t` for the preset of the same amplitude.
    pub fn taylor_green_exact(geom: Geometry, k: usize, amplitude: f64, mu1: f64, t: f64) -> Result<Self> {
        let sc = geom.scale();
        let decay = (-mu1 * (sc[0] * sc[0] + sc[1] * sc[1]) * t).exp();
        let mut s = Self::preset(geom, k, MeanPreset::TaylorGreen { amplitude: amplitude * decay })?;
        s.t = t;
        Ok(s)
    }

    pub fn max_abs_diff(&self, other: &MeanFlowState) -> f64 {
        self.coef
            .iter()
            .zip(&other.coef)
            .map(|(a, b)| (a[0] - b[0]).norm().max((a[1] - b[1]).norm()))
            .fold(0.0, f64::max)
    }

    /// `L²(Ω)` distance between two flows of equal truncation.
    pub fn l2_distance(&self, other: &MeanFlowState) -> f64 {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        (2.0 * d.kinetic_energy()).sqrt()
    }
}

/// Wavenumber used by the shear preset, `2π/a2`.
pub fn shear_wavenumber(geom: &Geometry) -> f64 {
    2.0 * PI / geom.a[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_divergence_free_and_real() {
        let g = Geometry::new(2.0 * PI, 3.0, 1.0).unwrap();
        for p in [
            MeanPreset::TaylorGreen { amplitude: 1.0 },
            MeanPreset::Shear { amplitude: 0.7 },
            MeanPreset::Random { amplitude: 1.0, seed: 4 },
        ] {
            let s = MeanFlowState::preset(g, 3, p).unwrap();
            let f = s.to_modal();
            for (m, c) in f.iter() {
                let w = WaveVector::of(&g, *m).k;
                let div = c[1] * Complex64::new(0.0, w[0]) + c[2] * Complex64::new(0.0, w[1]) + c[3] * w[2];
                assert!(div.norm() < 1e-13, "{m:?}");
            }
            for pt in [[0.3, 0.2, 0.1], [1.0, 2.0, 0.5]] {
                let v = f.eval(&g, pt);
                assert!(v.iter().all(|x| x.im.abs() < 1e-13));
            }
        }
    }

    #[test]
    fn taylor_green_pointwise() {
        let g = Geometry::new(2.0 * PI, 2.0 * PI, 1.0).unwrap();
        let s = MeanFlowState::preset(g, 2, MeanPreset::TaylorGreen { amplitude: 1.0 }).unwrap();
        let f = s.to_modal();
        let (x, y) = (0.4, 1.3);
        let v = f.eval(&g, [x, y, 0.2]);
        assert!((v[1].re - x.sin() * y.cos()).abs() < 1e-14);
        assert!((v[2].re + x.cos() * y.sin()).abs() < 1e-14);
        // energy: ½∫ = ½·a3·(2π)²·(¼+¼)
        let e = 0.5 * 1.0 * 4.0 * PI * PI * 0.5;
        assert!((s.kinetic_energy() - e).abs() < 1e-12);
    }
}
