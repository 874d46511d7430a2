//! Second interior corrector: the non-resonant part of the `O(1)` interaction,
//! integrated in fast time in closed form.

use crate::jet::Scalar;
use crate::resonance::is_resonant;
use crate::spectral_core::lattice::reflect;
use crate::spectral_core::modal::{project, q_pair, Coeff4};
use crate::spectral_core::{eigen_coeffs, Lattice, ModalField, OscState, PhysicalParams, Sign, WaveVector};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Relative size below which a frequency mismatch counts as zero.
const FREQ_TOL: f64 = 1e-11;
/// Frequency mismatches below this are reported as small divisors.
const NEAR_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Osc(Sign),
    Mean,
}

/// One separated term `coef(t)·e^{iωt/ε}` of the interior profile.
#[derive(Clone, Copy, Debug)]
pub struct Wave<T> {
    pub mode: Lattice,
    pub freq: f64,
    pub origin: Origin,
    /// Scalar amplitude `w_k b_k^α` for acoustic terms, zero for the mean.
    pub amp: T,
    pub coef: Coeff4<T>,
}

/// Separated terms of `Σ w b N e^{iα|k|τ} + (0, v)`.
pub fn interior_waves<T: Scalar>(state: &OscState, amps: &[T], mean: &ModalField<T>) -> Vec<Wave<T>> {
    let g = *state.geometry();
    let mut out = Vec::new();
    for i in 0..state.n_modes() {
        let m = state.mode(i);
        let w = WaveVector::of(&g, m.lattice());
        for s in Sign::BOTH {
            let b = amps[state.slot(i, s)];
            if b.is_zero() {
                continue;
            }
            let amp = b * m.weight();
            let n = eigen_coeffs(&g, m.lattice(), s);
            out.push(Wave {
                mode: m.lattice(),
                freq: s.value() * w.norm,
                origin: Origin::Osc(s),
                amp,
                coef: [amp * n[0], amp * n[1], amp * n[2], amp * n[3]],
            });
        }
    }
    for (m, c) in mean.iter() {
        if c.iter().all(|v| v.is_zero()) {
            continue;
        }
        out.push(Wave { mode: *m, freq: 0.0, origin: Origin::Mean, amp: T::zero(), coef: *c });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    Eigen(Sign),
    Kernel,
}

/// Non-resonant forcing component `F e^{iωτ}` projected on one target.
#[derive(Clone, Copy, Debug)]
pub struct Forcing<T> {
    pub mode: Lattice,
    pub freq: f64,
    pub target: Target,
    /// Frequency seen in the frame rotating with the target, `ω - γ|m|` or `ω`.
    pub detuning: f64,
    /// Eigen-coefficient in the first slot for eigen targets, full vector for the kernel.
    pub value: Coeff4<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NearResonance {
    pub mode: Lattice,
    pub freq: f64,
    pub detuning: f64,
    pub source: &'static str,
}

/// Forcing list, diagnostics of what was left to the filtered equations.
#[derive(Clone, Debug)]
pub struct ForcingSet<T> {
    pub terms: Vec<Forcing<T>>,
    pub near: Vec<NearResonance>,
    /// Zero-frequency kernel part of the acoustic and mean-acoustic interactions,
    /// which must vanish after summation over ordered pairs.
    pub zero_kernel: ModalField<T>,
    /// Eigen-coefficients of the exactly resonant interactions, left to the amplitude equations.
    pub resonant: BTreeMap<(Lattice, Sign), T>,
}

impl<T: Scalar> ForcingSet<T> {
    pub fn zero_kernel_max(&self) -> f64 {
        self.zero_kernel.max_abs()
    }
}

fn push_projections<T: Scalar>(
    params: &PhysicalParams,
    m: Lattice,
    f: &Coeff4<T>,
    freq: f64,
    resonant: &dyn Fn(Sign) -> bool,
    kernel_allowed: bool,
    source: &'static str,
    set: &mut ForcingSet<T>,
) {
    let g = params.geometry();
    let p = project(&g, m, f);
    let scale = 1.0 + freq.abs();
    if m != [0, 0, 0] {
        let norm = WaveVector::of(&g, m).norm;
        for (s, c) in [(Sign::Plus, p.plus), (Sign::Minus, p.minus)] {
            if c.is_zero() {
                continue;
            }
            if resonant(s) {
                *set.resonant.entry((m, s)).or_insert_with(T::zero) += c;
                continue;
            }
            let det = freq - s.value() * norm;
            if det.abs() <= FREQ_TOL * (scale + norm) {
                set.near.push(NearResonance { mode: m, freq, detuning: det, source });
                continue;
            }
            if det.abs() < NEAR_TOL {
                set.near.push(NearResonance { mode: m, freq, detuning: det, source });
            }
            set.terms.push(Forcing {
                mode: m,
                freq,
                target: Target::Eigen(s),
                detuning: det,
                value: [c, T::zero(), T::zero(), T::zero()],
            });
        }
    }
    if !kernel_allowed {
        return;
    }
    let k = p.kernel;
    if k.iter().all(|v| v.is_zero()) {
        return;
    }
    if freq.abs() <= FREQ_TOL * scale {
        set.zero_kernel.add(m, k);
        return;
    }
    set.terms.push(Forcing { mode: m, freq, target: Target::Kernel, detuning: freq, value: k });
}

/// Non-resonant forcing of the corrector equation `(∂τ - L)V = -F`.
pub fn corrector_forcing<T: Scalar>(params: &PhysicalParams, waves: &[Wave<T>]) -> ForcingSet<T> {
    let g = params.geometry();
    let pc = params.pressure_coeff();
    let mut set =
        ForcingSet { terms: Vec::new(), near: Vec::new(), zero_kernel: ModalField::new(), resonant: BTreeMap::new() };
    for a in waves {
        for b in waves {
            let outs = q_pair(&g, a.mode, &a.coef, b.mode, &b.coef, pc);
            let freq = a.freq + b.freq;
            for (idx, (m, f)) in outs.into_iter().enumerate() {
                let second = if idx == 0 { b.mode } else { reflect(b.mode) };
                match (a.origin, b.origin) {
                    (Origin::Osc(al), Origin::Osc(be)) => {
                        let res = |s: Sign| is_resonant(a.mode, al, second, be, s);
                        push_projections(params, m, &f, freq, &res, true, "acoustic pair", &mut set);
                    }
                    (Origin::Mean, Origin::Mean) => {
                        push_projections(params, m, &f, 0.0, &|_| false, false, "mean pair", &mut set);
                    }
                    (Origin::Mean, Origin::Osc(be)) | (Origin::Osc(be), Origin::Mean) => {
                        let osc_mode = if matches!(a.origin, Origin::Osc(_)) { a.mode } else { b.mode };
                        let drift = (a.origin == Origin::Mean && a.mode == [0, 0, 0])
                            || (b.origin == Origin::Mean && b.mode == [0, 0, 0]);
                        let res = |s: Sign| drift && s == be && (m == osc_mode || m == reflect(osc_mode));
                        push_projections(params, m, &f, freq, &res, true, "mean-acoustic pair", &mut set);
                    }
                }
            }
        }
    }
    for a in waves {
        if let Origin::Osc(al) = a.origin {
            let w = WaveVector::of(&g, a.mode);
            let visc = 0.5 * (params.mu1 * w.norm_h * w.norm_h + params.mu2 * w.norm * w.norm);
            if visc == 0.0 {
                continue;
            }
            set.terms.push(Forcing {
                mode: a.mode,
                freq: a.freq,
                target: Target::Eigen(al.flip()),
                detuning: a.freq + al.value() * w.norm,
                value: [a.amp * visc, T::zero(), T::zero(), T::zero()],
            });
        }
    }
    set
}

/// Closed-form corrector `V = Σ -F e^{iωτ}/(i·detuning)` projected on its targets.
#[derive(Clone, Debug)]
pub struct SecondCorrector<T> {
    pub terms: Vec<(Lattice, f64, Coeff4<T>)>,
}

impl<T: Scalar> SecondCorrector<T> {
    pub fn from_forcing(params: &PhysicalParams, forcing: &ForcingSet<T>) -> Self {
        let g = params.geometry();
        let mut terms = Vec::with_capacity(forcing.terms.len());
        for f in &forcing.terms {
            let inv = Complex64::new(0.0, 1.0 / f.detuning); // -1/(i d) = i/d
            let coef = match f.target {
                Target::Eigen(s) => {
                    let n = eigen_coeffs(&g, f.mode, s);
                    let c = f.value[0] * inv;
                    [c * n[0], c * n[1], c * n[2], c * n[3]]
                }
                Target::Kernel => f.value.map(|v| v * inv),
            };
            terms.push((f.mode, f.freq, coef));
        }
        Self { terms }
    }

    /// Separated field at time `t`; phases use the fast time `t/ε`.
    pub fn field(&self, t: f64, eps: f64) -> ModalField<T> {
        let mut out = ModalField::new();
        for (m, freq, c) in &self.terms {
            let ph = T::phase(freq / eps, t);
            out.add(*m, c.map(|v| v * ph));
        }
        out
    }
}

/// Closed-form corrector of an interior profile.
pub fn second_corrector<T: Scalar>(
    params: &PhysicalParams,
    state: &OscState,
    amps: &[T],
    mean: &ModalField<T>,
) -> (SecondCorrector<T>, ForcingSet<T>) {
    let waves = interior_waves(state, amps, mean);
    let forcing = corrector_forcing(params, &waves);
    (SecondCorrector::from_forcing(params, &forcing), forcing)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct AccKey {
    mode: Lattice,
    target: Target,
    freq: i64,
}

/// `V` obtained by accumulating frozen-coefficient fast-time integrals from `V(0) = 0`.
#[derive(Clone, Debug, Default)]
pub struct CorrectorAccumulator {
    entries: BTreeMap<AccKey, (f64, f64, Coeff4<Complex64>)>,
}

impl CorrectorAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `∫_{τ1}^{τ2}` of the frozen forcing in the frame rotating with each target.
    pub fn step(&mut self, forcing: &ForcingSet<Complex64>, t1: f64, t2: f64, eps: f64) {
        let (tau1, tau2) = (t1 / eps, t2 / eps);
        for f in &forcing.terms {
            let key = AccKey { mode: f.mode, target: f.target, freq: (f.freq * 1e9).round() as i64 };
            let d = f.detuning;
            let int =
                (Complex64::new(0.0, d * tau2).exp() - Complex64::new(0.0, d * tau1).exp()) / Complex64::new(0.0, d);
            let e = self.entries.entry(key).or_insert((f.freq, f.freq - d, [Complex64::new(0.0, 0.0); 4]));
            for q in 0..4 {
                e.2[q] -= f.value[q] * int;
            }
        }
    }

    /// `V` at fast time `t/ε`.
    pub fn field(&self, params: &PhysicalParams, t: f64, eps: f64) -> ModalField<Complex64> {
        let g = params.geometry();
        let mut out = ModalField::new();
        for (k, (_, rot, c)) in &self.entries {
            let ph = Complex64::from_polar(1.0, rot * t / eps);
            match k.target {
                Target::Eigen(s) => {
                    let n = eigen_coeffs(&g, k.mode, s);
                    let a = c[0] * ph;
                    out.add(k.mode, [a * n[0], a * n[1], a * n[2], a * n[3]]);
                }
                Target::Kernel => out.add(k.mode, c.map(|v| v * ph)),
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Fast-time quadrature of `V(τ) = -∫_0^τ e^{(τ-s)L} F(s) ds` with composite Simpson.
pub fn corrector_by_quadrature(
    params: &PhysicalParams,
    forcing: &ForcingSet<Complex64>,
    tau: f64,
    substeps: usize,
) -> ModalField<Complex64> {
    let g = params.geometry();
    let n = substeps + substeps % 2;
    let h = tau / n as f64;
    let mut out = ModalField::new();
    for f in &forcing.terms {
        let rot = f.freq - f.detuning;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let s = j as f64 * h;
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += Complex64::from_polar(1.0, rot * (tau - s) + f.freq * s) * w;
        }
        let acc = -acc * (h / 3.0);
        match f.target {
            Target::Eigen(s) => {
                let nvec = eigen_coeffs(&g, f.mode, s);
                let a = f.value[0] * acc;
                out.add(f.mode, [a * nvec[0], a * nvec[1], a * nvec[2], a * nvec[3]]);
            }
            Target::Kernel => out.add(f.mode, f.value.map(|v| v * acc)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::{MeanFlowState, MeanPreset, ModeIndex};

    fn params() -> PhysicalParams {
        PhysicalParams::standard(1e-2, 1e-2).unwrap()
    }

    fn single_pair_state() -> OscState {
        let g = params().geometry();
        let c = Complex64::new(0.3, 0.1);
        OscState::from_entries(
            g,
            2,
            [
                (ModeIndex::new(1, 0, 1).unwrap(), Sign::Plus, c),
                (ModeIndex::new(0, 1, 1).unwrap(), Sign::Minus, c * 0.5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_state_gives_zero_corrector() {
        let p = params();
        let s = OscState::zeros(p.geometry(), 2).unwrap();
        let (v, f) = second_corrector(&p, &s, s.as_slice(), &ModalField::new());
        assert!(v.terms.is_empty() && f.terms.is_empty());
    }

    #[test]
    fn corrector_solves_its_fast_equation() {
        let p = params();
        let s = single_pair_state();
        let mean = MeanFlowState::preset(p.geometry(), 1, MeanPreset::Shear { amplitude: 0.4 }).unwrap().to_modal();
        let (v, forcing) = second_corrector(&p, &s, s.as_slice(), &mean);
        assert!(forcing.zero_kernel_max() < 1e-14, "{}", forcing.zero_kernel_max());
        // (∂τ - L)V + F = 0 for each closed-form term
        let g = p.geometry();
        let tau = 0.37;
        for (f, (m, freq, c)) in forcing.terms.iter().zip(&v.terms) {
            let ph = Complex64::from_polar(1.0, freq * tau);
            let vt = c.map(|x| x * ph);
            let mut one = ModalField::new();
            one.add(*m, vt);
            let lv = one.apply_l(&g);
            let lvc = lv.get(*m).copied().unwrap_or([Complex64::new(0.0, 0.0); 4]);
            let forcing_vec = match f.target {
                Target::Eigen(sg) => {
                    let n = eigen_coeffs(&g, *m, sg);
                    n.map(|x| x * f.value[0])
                }
                Target::Kernel => f.value,
            };
            for q in 0..4 {
                if m[2] == 0 && q == 3 {
                    continue;
                }
                let r = vt[q] * Complex64::new(0.0, *freq) - lvc[q] + forcing_vec[q] * ph;
                assert!(r.norm() < 1e-12 * (1.0 + forcing_vec[q].norm()), "{m:?} {:?} {r}", f.target);
            }
        }
    }

    #[test]
    fn accumulator_matches_fine_quadrature() {
        let p = params();
        let s = single_pair_state();
        let (_, forcing) = second_corrector(&p, &s, s.as_slice(), &ModalField::new());
        let eps = p.eps;
        let t_end = 0.05;
        let mut acc = CorrectorAccumulator::new();
        acc.step(&forcing, 0.0, t_end, eps);
        let a = acc.field(&p, t_end, eps);
        let b = corrector_by_quadrature(&p, &forcing, t_end / eps, 1000);
        let scale = b.max_abs();
        assert!(scale > 0.0);
        for (m, c) in b.iter() {
            let d = a.get(*m).unwrap();
            for q in 0..4 {
                assert!((d[q] - c[q]).norm() <= 1e-3 * scale, "{m:?}");
            }
        }
    }
}
