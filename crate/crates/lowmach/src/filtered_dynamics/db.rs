use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar, JET_LEN};
use crate::layer_profiles::lambda1;
use crate::resonance::{nonlinear_tangent, ResonantTriadSet};
use crate::spectral_core::{OscState, PhysicalParams, Sign, WaveVector};
use num_complex::Complex64;

/// Largest `|rate|·dt` accepted by a single step.
const RATE_GUARD: f64 = 700.0;

/// Per-slot `λ_{k,1}^α` in [`OscState`] slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDamping {
    pub lambda: Vec<Complex64>,
}

impl EigenDamping {
    pub fn new(params: &PhysicalParams, k: usize) -> Result<Self> {
        let geom = params.geometry();
        let trunc = crate::spectral_core::Truncation::new(k)?;
        let mut lambda = Vec::with_capacity(2 * trunc.len());
        for m in trunc.modes() {
            for s in Sign::BOTH {
                lambda.push(lambda1(&geom, params.mu1, m.lattice(), s));
            }
        }
        Ok(Self { lambda })
    }
}

/// The damped-Burgers system `∂t b = -r b + N(b)` with `N` the resonant
/// self-interaction and `r` the diagonal linear rate.
#[derive(Clone, Debug)]
pub struct DbSystem<'a> {
    set: &'a ResonantTriadSet,
    params: PhysicalParams,
    rates: Vec<Complex64>,
    damping: Vec<f64>,
}

impl<'a> DbSystem<'a> {
    /// `drift` is the horizontal average of the mean flow, constant along the flow.
    pub fn new(set: &'a ResonantTriadSet, params: &PhysicalParams, drift: [f64; 2]) -> Result<Self> {
        params.validate()?;
        let geom = params.geometry();
        let lam = EigenDamping::new(params, set.k())?;
        let root = (params.nu / params.eps).sqrt();
        let trunc = set.truncation();
        let mut rates = Vec::with_capacity(2 * trunc.len());
        let mut damping = Vec::with_capacity(2 * trunc.len());
        for (i, m) in trunc.modes().enumerate() {
            let w = WaveVector::of(&geom, m.lattice());
            let visc = 0.5 * (params.mu1 * w.norm_h * w.norm_h + params.mu2 * w.norm * w.norm);
            let adv = Complex64::new(0.0, w.k[0] * drift[0] + w.k[1] * drift[1]);
            for s in Sign::BOTH {
                let l = lam.lambda[2 * i + s.slot()];
                rates.push(adv + visc - l * root);
                damping.push(-l.re * root);
            }
        }
        Ok(Self { set, params: *params, rates, damping })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn set(&self) -> &ResonantTriadSet {
        self.set
    }

    /// Complex linear rate `r` per slot.
    pub fn rates(&self) -> &[Complex64] {
        &self.rates
    }

    /// Boundary damping part `√(ν/ε)·Re(-λ)` per slot.
    pub fn damping_rates(&self) -> &[f64] {
        &self.damping
    }

    pub fn nonlinear<T: Scalar>(&self, amps: &[T]) -> Vec<T> {
        nonlinear_tangent(self.set, &self.params.geometry(), self.params.gamma, amps, [0.0, 0.0])
    }

    /// Full right-hand side of the system.
    pub fn tangent<T: Scalar>(&self, amps: &[T]) -> Vec<T> {
        let mut out = self.nonlinear(amps);
        for ((o, a), r) in out.iter_mut().zip(amps).zip(&self.rates) {
            *o -= *a * *r;
        }
        out
    }

    /// `Σ Re(r)|b|²` over stored slots, so that `½ d/dt Σ|b|² = -dissipation`.
    pub fn dissipation(&self, amps: &[Complex64]) -> f64 {
        let mut acc = crate::sum::Neumaier::new();
        for (a, r) in amps.iter().zip(&self.rates) {
            acc.add(r.re * a.norm_sqr());
        }
        acc.total()
    }

    fn propagator(&self, h: f64) -> Vec<Complex64> {
        self.rates.iter().map(|r| (-*r * h).exp()).collect()
    }

    /// One integrating-factor RK4 step.
    pub fn step(&self, amps: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter { field: "dt", reason: format!("must be positive, got {dt}") });
        }
        let max_rate = self.rates.iter().map(|r| r.norm()).fold(0.0, f64::max);
        if max_rate * dt > RATE_GUARD {
            return Err(Error::StepGuard(format!("dt·max|rate| = {:.3e} exceeds {RATE_GUARD}", max_rate * dt)));
        }
        let e = self.propagator(dt);
        let eh = self.propagator(0.5 * dt);
        let h = dt;
        let n = amps.len();
        let comb = |f: &dyn Fn(usize) -> Complex64| -> Vec<Complex64> { (0..n).map(f).collect() };
        let k1 = self.nonlinear(amps);
        let s2 = comb(&|i| eh[i] * (amps[i] + k1[i] * (0.5 * h)));
        let k2 = self.nonlinear(&s2);
        let s3 = comb(&|i| eh[i] * amps[i] + k2[i] * (0.5 * h));
        let k3 = self.nonlinear(&s3);
        let s4 = comb(&|i| e[i] * amps[i] + eh[i] * k3[i] * h);
        let k4 = self.nonlinear(&s4);
        let out = comb(&|i| e[i] * amps[i] + (e[i] * k1[i] + eh[i] * (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0));
        if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::StepGuard("non-finite amplitude after step".into()));
        }
        Ok(out)
    }

    /// Taylor coefficients of `b(t+s)` obtained by recursion on the right-hand side.
    pub fn jets(&self, amps: &[Complex64]) -> Vec<Jet> {
        let mut jets: Vec<Jet> = amps.iter().map(|a| Jet::constant(*a)).collect();
        for j in 0..JET_LEN - 1 {
            let rhs = self.tangent(&jets);
            let inv = 1.0 / (j as f64 + 1.0);
            for (b, r) in jets.iter_mut().zip(&rhs) {
                b.0[j + 1] = r.0[j] * inv;
            }
        }
        jets
    }
}

/// Advances a state with `n` equal steps covering `[state.t, t_end]`.
pub fn db_advance(system: &DbSystem, state: &OscState, t_end: f64, dt: f64) -> Result<OscState> {
    let span = t_end - state.t;
    if span < 0.0 {
        return Err(Error::InvalidParameter { field: "t_end", reason: "lies before the state time".into() });
    }
    let n = (span / dt - 1e-9).ceil().max(0.0) as usize;
    let mut amps = state.as_slice().to_vec();
    if n > 0 {
        let h = span / n as f64;
        for _ in 0..n {
            amps = system.step(&amps, h)?;
        }
    }
    let mut out = state.with_amplitudes(amps);
    out.t = t_end;
    Ok(out)
}
