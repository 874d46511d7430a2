use super::lattice::{wavevector, Lattice, ModeIndex, Sign, Truncation, WaveVector};
use super::params::Geometry;
use crate::error::{Error, Result};
use crate::sum::Neumaier;
use num_complex::Complex64;
use rand::Rng;

/// Coefficients of `N_k^α` on the separated basis `(cos, cos, cos, sin)(k3 z)·e^{i k_h·x_h}`.
#[inline]
pub fn eigen_coeffs(geom: &Geometry, k: Lattice, sign: Sign) -> [Complex64; 4] {
    let w = WaveVector::of(geom, k);
    let f = geom.c_star() / (2.0 * w.norm);
    [
        Complex64::new(-sign.value() * w.norm * f, 0.0),
        Complex64::new(w.k[0] * f, 0.0),
        Complex64::new(w.k[1] * f, 0.0),
        Complex64::new(0.0, w.k[2] * f),
    ]
}

/// Pointwise value of `N_k^α` at `(x1, x2, z)`.
pub fn eigenmode_eval(geom: &Geometry, mode: ModeIndex, sign: Sign, point: [f64; 3]) -> [Complex64; 4] {
    let w = wavevector(geom, mode);
    let c = eigen_coeffs(geom, mode.lattice(), sign);
    let e = Complex64::from_polar(1.0, w.k[0] * point[0] + w.k[1] * point[1]);
    let (s, co) = (w.k[2] * point[2]).sin_cos();
    [c[0] * co * e, c[1] * co * e, c[2] * co * e, c[3] * s * e]
}

/// Amplitudes `b_k^α` of the filtered oscillating state on the half lattice.
///
/// The synthesised field is `Σ_k w_k Σ_α b_k^α N_k^α e^{iα|k|τ}` with `w_k = 2` for
/// `k3 > 0`, which is the full-lattice sum folded by `b_k = b_{Sk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscState {
    geom: Geometry,
    trunc: Truncation,
    pub t: f64,
    amp: Vec<Complex64>,
}

impl OscState {
    pub fn zeros(geom: Geometry, k: usize) -> Result<Self> {
        let trunc = Truncation::new(k)?;
        Ok(Self { geom, trunc, t: 0.0, amp: vec![Complex64::new(0.0, 0.0); 2 * trunc.len()] })
    }

    /// Builds a state from `(mode, sign, value)` triples, completing each entry by
    /// its reality partner.
    pub fn from_entries(
        geom: Geometry,
        k: usize,
        entries: impl IntoIterator<Item = (ModeIndex, Sign, Complex64)>,
    ) -> Result<Self> {
        let mut s = Self::zeros(geom, k)?;
        for (m, a, v) in entries {
            s.set(m, a, v)?;
        }
        Ok(s)
    }

    /// Random admissible state with amplitudes decaying like `(1+|k|)^{-decay}`.
    pub fn random<R: Rng>(geom: Geometry, k: usize, rng: &mut R, scale: f64, decay: f64) -> Result<Self> {
        let mut s = Self::zeros(geom, k)?;
        for i in 0..s.trunc.len() {
            let m = s.trunc.mode(i);
            let w = wavevector(&geom, m);
            let amp = scale * (1.0 + w.norm).powf(-decay);
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            s.set(m, Sign::Plus, v)?;
        }
        Ok(s)
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    #[inline]
    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.trunc.k
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.trunc.len()
    }

    #[inline]
    pub fn mode(&self, i: usize) -> ModeIndex {
        self.trunc.mode(i)
    }

    #[inline]
    pub fn slot(&self, i: usize, sign: Sign) -> usize {
        2 * i + sign.slot()
    }

    pub fn get(&self, mode: ModeIndex, sign: Sign) -> Result<Complex64> {
        let i = self.trunc.index(mode).ok_or(Error::OutsideTruncation(mode.k1(), mode.k2(), mode.k3()))?;
        Ok(self.amp[2 * i + sign.slot()])
    }

    /// Amplitude of a full-lattice index, zero outside the truncation.
    #[inline]
    pub fn get_lattice(&self, k: Lattice, sign: Sign) -> Complex64 {
        let m = [k[0], k[1], k[2].abs()];
        if !self.trunc.contains(m) {
            return Complex64::new(0.0, 0.0);
        }
        let i = self.trunc.index(ModeIndex::fold(m).expect("nonzero")).expect("contained");
        self.amp[2 * i + sign.slot()]
    }

    /// Sets `b_k^α` and its partner `b_{(-k_h,k3)}^{-α} = -conj(b_k^α)`.
    pub fn set(&mut self, mode: ModeIndex, sign: Sign, value: Complex64) -> Result<()> {
        let i = self.trunc.index(mode).ok_or(Error::OutsideTruncation(mode.k1(), mode.k2(), mode.k3()))?;
        let j = self.trunc.index(mode.conjugate()).expect("box is symmetric");
        self.amp[2 * i + sign.slot()] = value;
        self.amp[2 * j + sign.flip().slot()] = -value.conj();
        Ok(())
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.amp
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    /// New state with the same layout and the given amplitudes.
    pub fn with_amplitudes(&self, amp: Vec<Complex64>) -> Self {
        assert_eq!(amp.len(), self.amp.len());
        Self { geom: self.geom, trunc: self.trunc, t: self.t, amp }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Sign, Complex64)> + '_ {
        (0..self.trunc.len()).flat_map(move |i| {
            let m = self.trunc.mode(i);
            Sign::BOTH.into_iter().map(move |a| (m, a, self.amp[2 * i + a.slot()]))
        })
    }

    /// Largest violation of `b_k^+ = -conj(b_{(-k_h,k3)}^-)`.
    pub fn reality_defect(&self) -> (f64, Option<ModeIndex>) {
        let mut worst = (0.0, None);
        for i in 0..self.trunc.len() {
            let m = self.trunc.mode(i);
            let j = self.trunc.index(m.conjugate()).expect("symmetric");
            let d = (self.amp[2 * i] + self.amp[2 * j + 1].conj()).norm();
            if d > worst.0 {
                worst = (d, Some(m));
            }
        }
        worst
    }

    pub fn check_reality(&self, tol: f64) -> Result<()> {
        let scale = self.amp.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        match self.reality_defect() {
            (d, Some(m)) if d > tol * scale => {
                Err(Error::RealityViolation { k1: m.k1(), k2: m.k2(), k3: m.k3(), defect: d })
            }
            _ => Ok(()),
        }
    }

    /// Projects onto the real subspace by averaging each amplitude with its partner.
    pub fn enforce_reality(&mut self) {
        for i in 0..self.trunc.len() {
            let m = self.trunc.mode(i);
            let j = self.trunc.index(m.conjugate()).expect("symmetric");
            let v = 0.5 * (self.amp[2 * i] - self.amp[2 * j + 1].conj());
            self.amp[2 * i] = v;
            self.amp[2 * j + 1] = -v.conj();
        }
    }

    /// `self += a·x` on matching layouts.
    pub fn axpy(&mut self, a: f64, x: &OscState) {
        for (y, v) in self.amp.iter_mut().zip(&x.amp) {
            *y += v * a;
        }
    }

    /// Unweighted `Σ |b_k^α|²` over stored amplitudes.
    pub fn energy(&self) -> f64 {
        let mut acc = Neumaier::new();
        acc.extend(self.amp.iter().map(|v| v.norm_sqr()));
        acc.total()
    }

    pub fn max_abs_diff(&self, other: &OscState) -> f64 {
        self.amp.iter().zip(&other.amp).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Restricts or zero-extends to another truncation.
    pub fn retruncate(&self, k: usize) -> Result<Self> {
        let mut out = Self::zeros(self.geom, k)?;
        out.t = self.t;
        for i in 0..out.trunc.len() {
            let m = out.trunc.mode(i);
            if let Some(j) = self.trunc.index(m) {
                out.amp[2 * i] = self.amp[2 * j];
                out.amp[2 * i + 1] = self.amp[2 * j + 1];
            }
        }
        Ok(out)
    }
}

/// `L N_k^α = iα|k| N_k^α` applied to every amplitude.
pub fn apply_l_spectrally(state: &OscState) -> OscState {
    let mut out = state.clone();
    for i in 0..state.n_modes() {
        let w = wavevector(state.geometry(), state.mode(i));
        for a in Sign::BOTH {
            out.amp[2 * i + a.slot()] *= Complex64::new(0.0, a.value() * w.norm);
        }
    }
    out
}

/// Conjugation by the acoustic group: `b_k^α ↦ b_k^α e^{iα|k|τ}`.
pub fn semigroup_phase(state: &OscState, tau: f64) -> OscState {
    let mut out = state.clone();
    for i in 0..state.n_modes() {
        let w = wavevector(state.geometry(), state.mode(i));
        for a in Sign::BOTH {
            out.amp[2 * i + a.slot()] *= Complex64::from_polar(1.0, a.value() * w.norm * tau);
        }
    }
    out
}

/// `(½ Σ |b_k^α|² |k|^{2s})^{1/2}` in lexicographic order.
pub fn sobolev_norm(state: &OscState, s: f64) -> f64 {
    let mut acc = Neumaier::new();
    for i in 0..state.n_modes() {
        let w = wavevector(state.geometry(), state.mode(i));
        let f = w.norm.powf(2.0 * s);
        acc.add(f * (state.amp[2 * i].norm_sqr() + state.amp[2 * i + 1].norm_sqr()));
    }
    (0.5 * acc.total()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn eigenmode_example_at_origin() {
        let g = Geometry::unit();
        let v = eigenmode_eval(&g, ModeIndex::new(1, 0, 0).unwrap(), Sign::Plus, [0.0; 3]);
        let c = (4.0 * PI.powi(3)).sqrt().recip();
        let expect = [-c / 2.0, c / 2.0, 0.0, 0.0];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - Complex64::new(b, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn vertical_component_vanishes_on_walls() {
        let g = Geometry::new(1.3, 0.7, 2.1).unwrap();
        for m in Truncation::new(3).unwrap().modes() {
            for a in Sign::BOTH {
                for z in [0.0, g.a[2]] {
                    let v = eigenmode_eval(&g, m, a, [0.3, 0.2, z]);
                    assert!(v[3].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = Geometry::unit();
        let m = ModeIndex::new(1, 0, 2).unwrap();
        let s = OscState::from_entries(g, 2, [(m, Sign::Plus, Complex64::new(1.0, 0.0))]).unwrap();
        assert!((sobolev_norm(&s, 0.0) - 1.0).abs() < 1e-14);
        assert!((sobolev_norm(&s, 1.0) - 5f64.sqrt()).abs() < 1e-13);
        assert!((sobolev_norm(&s, 2.0) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn set_keeps_reality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = OscState::random(Geometry::unit(), 3, &mut rng, 1.0, 1.0).unwrap();
        assert!(s.reality_defect().0 < 1e-15);
    }

    #[test]
    fn apply_l_examples() {
        let g = Geometry::unit();
        let m = ModeIndex::new(1, 0, 0).unwrap();
        let s = OscState::from_entries(g, 1, [(m, Sign::Plus, Complex64::new(1.0, 0.0))]).unwrap();
        let l = apply_l_spectrally(&s);
        assert!((l.get(m, Sign::Plus).unwrap() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let l2 = apply_l_spectrally(&l);
        assert!((l2.get(m, Sign::Plus).unwrap() + Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
