use super::db::DbSystem;
use super::vins::InsSystem;
use crate::error::{Error, Result};
use crate::resonance::ResonantTriadSet;
use crate::spectral_core::{
    eigenmode_norm_sqr, sobolev_norm, MeanFlowState, OscState, PhysicalParams, Sign, WaveVector,
};
use crate::sum::Neumaier;
use num_complex::Complex64;
use std::fmt::Write as _;

const BLOW_UP: f64 = 1e6;

/// Filtered profile: acoustic amplitudes plus the mean flow at a common slow time.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredState {
    pub osc: OscState,
    pub mean: MeanFlowState,
    pub t: f64,
}

impl FilteredState {
    pub fn new(mut osc: OscState, mut mean: MeanFlowState) -> Result<Self> {
        if osc.geometry() != mean.geometry() {
            return Err(Error::InvalidParameter {
                field: "geometry",
                reason: "acoustic and mean states differ".into(),
            });
        }
        osc.t = 0.0;
        mean.t = 0.0;
        Ok(Self { osc, mean, t: 0.0 })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Sobolev index reported next to the `L²` norm.
    pub sobolev: f64,
    /// Times at which full states are kept; each becomes a step boundary.
    pub sample_times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilteredSample {
    pub t: f64,
    pub norm_s0: f64,
    pub norm_s: f64,
    pub damping_budget: f64,
    pub drift: [f64; 2],
    /// `Σ|b|²` over stored slots.
    pub energy: f64,
    /// `Σ Re(rate)|b|²`.
    pub dissipation: f64,
    /// `‖∇_h U_osc‖²_{L²(Ω)}`.
    pub grad_h_sq: f64,
}

#[derive(Clone, Debug)]
pub struct FilteredRun {
    pub samples: Vec<FilteredSample>,
    pub snapshots: Vec<FilteredState>,
    pub last: FilteredState,
    /// Per slot `∫|∂t b|`.
    pub ptb: Vec<f64>,
}

impl FilteredRun {
    /// CSV with columns `t,norm_s0,norm_s,damping_budget,A1,A2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,norm_s0,norm_s,damping_budget,A1,A2\n");
        for r in &self.samples {
            let _ = writeln!(
                s,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                r.t, r.norm_s0, r.norm_s, r.damping_budget, r.drift[0], r.drift[1]
            );
        }
        s
    }

    /// `(∫‖∇_h U_osc‖² dt)^{1/2}` by the trapezoid rule over recorded steps.
    pub fn grad_h_l2t(&self) -> f64 {
        let mut acc = Neumaier::new();
        for w in self.samples.windows(2) {
            acc.add(0.5 * (w[1].t - w[0].t) * (w[0].grad_h_sq + w[1].grad_h_sq));
        }
        acc.total().sqrt()
    }
}

fn grad_h_sq(state: &OscState) -> f64 {
    let g = state.geometry();
    let mut acc = Neumaier::new();
    for (m, _, b) in state.iter() {
        let w = WaveVector::of(g, m.lattice());
        let weight = m.weight();
        acc.add(weight * weight * eigenmode_norm_sqr(g, m) * w.norm_h * w.norm_h * b.norm_sqr());
    }
    acc.total()
}

/// Integrates the filtered system and records diagnostics after every step.
pub fn run_filtered(
    initial: &FilteredState,
    set: &ResonantTriadSet,
    params: &PhysicalParams,
    opts: &RunOptions,
) -> Result<FilteredRun> {
    if !(opts.dt > 0.0) || !(opts.t_end >= initial.t) {
        return Err(Error::InvalidParameter { field: "dt", reason: "need dt > 0 and t_end ≥ t0".into() });
    }
    let drift = initial.mean.mean_horizontal();
    let db = DbSystem::new(set, params, drift)?;
    let ins = InsSystem::new(params.geometry(), initial.mean.k(), params.mu1)?;
    let damping = db.damping_rates().to_vec();

    let mut breaks: Vec<f64> =
        opts.sample_times.iter().copied().filter(|t| *t > initial.t && *t < opts.t_end).collect();
    breaks.push(opts.t_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut osc = initial.osc.clone();
    let mut mean = initial.mean.clone();
    let mut t = initial.t;
    let sample = |osc: &OscState, mean: &MeanFlowState, t: f64, budget: f64| FilteredSample {
        t,
        norm_s0: sobolev_norm(osc, 0.0),
        norm_s: sobolev_norm(osc, opts.sobolev),
        damping_budget: budget,
        drift: mean.mean_horizontal(),
        energy: osc.energy(),
        dissipation: db.dissipation(osc.as_slice()),
        grad_h_sq: grad_h_sq(osc),
    };
    let weighted = |amps: &[Complex64]| -> f64 { amps.iter().zip(&damping).map(|(b, d)| d * b.norm_sqr()).sum() };

    let n0 = sobolev_norm(&osc, 0.0).max(f64::MIN_POSITIVE);
    let mut samples = vec![sample(&osc, &mean, t, 0.0)];
    let mut snapshots = Vec::new();
    if opts.sample_times.iter().any(|s| *s == t) {
        snapshots.push(FilteredState { osc: osc.clone(), mean: mean.clone(), t });
    }
    let mut ptb = vec![0.0; osc.as_slice().len()];
    let mut prev_rate: Vec<f64> = db.tangent(osc.as_slice()).iter().map(|v| v.norm()).collect();
    let mut prev_weighted = weighted(osc.as_slice());
    let mut budget = 0.0;

    for &target in &breaks {
        let span = target - t;
        let n = (span / opts.dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let amps = db.step(osc.as_slice(), h)?;
            osc = osc.with_amplitudes(amps);
            mean = ins.step(&mean, h)?;
            t += h;
            osc.t = t;
            mean.t = t;
            let rate: Vec<f64> = db.tangent(osc.as_slice()).iter().map(|v| v.norm()).collect();
            for ((p, a), b) in ptb.iter_mut().zip(&prev_rate).zip(&rate) {
                *p += 0.5 * h * (a + b);
            }
            prev_rate = rate;
            let w = weighted(osc.as_slice());
            budget += 0.5 * h * (prev_weighted + w);
            prev_weighted = w;
            let s = sample(&osc, &mean, t, budget);
            if !(s.norm_s0 <= BLOW_UP * n0) {
                return Err(Error::BlowUp { t, growth: s.norm_s0 / n0 });
            }
            samples.push(s);
        }
        t = target;
        osc.t = t;
        mean.t = t;
        if opts.sample_times.iter().any(|s| (*s - t).abs() <= 1e-12 * (1.0 + t.abs())) {
            snapshots.push(FilteredState { osc: osc.clone(), mean: mean.clone(), t });
        }
    }
    Ok(FilteredRun { samples, snapshots, last: FilteredState { osc, mean, t }, ptb })
}

/// Per-mode table of `∫|∂t b_k^α|` from a finished run.
pub fn ptb_budget(run: &FilteredRun) -> Vec<(crate::spectral_core::ModeIndex, Sign, f64)> {
    let s = &run.last.osc;
    let mut out = Vec::with_capacity(run.ptb.len());
    for i in 0..s.n_modes() {
        for sg in Sign::BOTH {
            out.push((s.mode(i), sg, run.ptb[s.slot(i, sg)]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::enumerate_resonances;
    use crate::spectral_core::{MeanPreset, ModeIndex};

    #[test]
    fn linear_mode_budget_equals_initial_amplitude() {
        let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
        let g = p.geometry();
        let set = enumerate_resonances(1).unwrap();
        let m = ModeIndex::new(1, 0, 1).unwrap();
        let osc = OscState::from_entries(g, 1, [(m, Sign::Plus, Complex64::new(0.5, 0.0))]).unwrap();
        let mean = MeanFlowState::zeros(g, 1).unwrap();
        let st = FilteredState::new(osc, mean).unwrap();
        let run =
            run_filtered(&st, &set, &p, &RunOptions { t_end: 30.0, dt: 1e-2, sobolev: 1.0, sample_times: vec![] })
                .unwrap();
        let b = ptb_budget(&run);
        let v = b.iter().find(|(mm, s, _)| *mm == m && *s == Sign::Plus).unwrap().2;
        // |∂t b| = |r||b| so the integral is |r|/Re r·|b(0)|
        let db = DbSystem::new(&set, &p, [0.0, 0.0]).unwrap();
        let r = db.rates()[2 * set.truncation().index(m).unwrap()];
        assert!((v - 0.5 * r.norm() / r.re).abs() < 1e-4, "{v}");
        assert!(run.samples.last().unwrap().damping_budget <= 0.25);
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
        let g = p.geometry();
        let set = enumerate_resonances(1).unwrap();
        let osc = OscState::zeros(g, 1).unwrap();
        let mean = MeanFlowState::preset(g, 1, MeanPreset::Shear { amplitude: 1.0 }).unwrap();
        let st = FilteredState::new(osc, mean).unwrap();
        let opts = RunOptions { t_end: 0.5, dt: 0.03, sobolev: 1.0, sample_times: vec![0.125, 0.375] };
        let run = run_filtered(&st, &set, &p, &opts).unwrap();
        let times: Vec<f64> = run.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.125, 0.375]);
        assert!(run.to_csv().starts_with("t,norm_s0,norm_s,damping_budget,A1,A2\n"));
    }
}
