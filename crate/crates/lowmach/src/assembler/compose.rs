use super::spec::{AssemblySpec, Term, Tier};
use crate::error::{Error, Result};
use crate::filtered_dynamics::{
    interior_waves, run_filtered, second_corrector, DbSystem, FilteredRun, FilteredState, InsSystem, Origin, RunOptions,
};
use crate::jet::{Jet, Scalar};
use crate::layer_profiles::{
    build_eigen_corrector, build_oscillating_layers, corrector_traces, eigen_traces, prandtl_solve, wall_waves,
    NormalTrace, PrandtlGrid, PrandtlLayer, PrandtlRun, PrandtlSolver, WallCorrectors,
};
use crate::par;
use crate::resonance::ResonantTriadSet;
use crate::spectral_core::{
    ColumnField, ColumnSource, Geometry, GridField, LevelSpectrum, MeanFlowState, MeanPreset, ModalField, ModeIndex,
    OscState, PhysicalParams, Side, Sign,
};
use num_complex::Complex64;

/// Amplitude of the standard acoustic mode and of the standard shear.
pub const STANDARD_AMPLITUDE: f64 = 0.5;

/// Standard data: the acoustic pair on `(1,1,1)` plus a Kolmogorov shear.
pub fn standard_initial(geom: Geometry, k_osc: usize, k_mean: usize) -> Result<FilteredState> {
    let mut osc = OscState::zeros(geom, k_osc)?;
    let m = ModeIndex::new(1, 1, 1)?;
    osc.set(m, Sign::Plus, Complex64::new(STANDARD_AMPLITUDE, 0.0))?;
    osc.set(m, Sign::Minus, Complex64::new(STANDARD_AMPLITUDE, 0.0))?;
    let mean = MeanFlowState::preset(geom, k_mean, MeanPreset::Shear { amplitude: STANDARD_AMPLITUDE })?;
    FilteredState::new(osc, mean)
}

/// Slow Prandtl layers of both walls.
#[derive(Clone, Debug)]
pub struct LayerRuns {
    pub solvers: [PrandtlSolver; 2],
    pub runs: [PrandtlRun; 2],
}

/// Everything the assembler samples: filtered states and wall layers at common times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: PhysicalParams,
    pub set: ResonantTriadSet,
    pub initial: FilteredState,
    pub times: Vec<f64>,
    pub filtered: FilteredRun,
    pub layers: Option<LayerRuns>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryOptions {
    pub dt: f64,
    /// `None` skips the Prandtl layers (tier A only).
    pub prandtl: Option<PrandtlGrid>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { dt: 1e-3, prandtl: Some(PrandtlGrid::default()) }
    }
}

/// Integrates the filtered system and the wall layers, keeping states at `times`.
pub fn simulate(
    params: &PhysicalParams,
    initial: FilteredState,
    set: ResonantTriadSet,
    t_end: f64,
    times: &[f64],
    opts: &TrajectoryOptions,
) -> Result<Trajectory> {
    let run_opts = RunOptions { t_end, dt: opts.dt, sobolev: 1.0, sample_times: times.to_vec() };
    let filtered = run_filtered(&initial, &set, params, &run_opts)?;
    if filtered.snapshots.len() != times.len() {
        return Err(Error::Grid(format!("{} sample times but {} snapshots", times.len(), filtered.snapshots.len())));
    }
    let layers = match opts.prandtl {
        None => None,
        Some(grid) => {
            let kp = initial.mean.k();
            let make = |side| PrandtlSolver::new(params, kp, side, grid);
            let solvers = [make(Side::Bottom)?, make(Side::Top)?];
            let runs = par::map_slice(&solvers, |s| prandtl_solve(s, params, &initial.mean, t_end, times));
            let mut it = runs.into_iter();
            let runs = [it.next().unwrap()?, it.next().unwrap()?];
            if runs.iter().any(|r| r.snapshots.len() != times.len()) {
                return Err(Error::Grid("layer snapshots do not match the sample times".into()));
            }
            Some(LayerRuns { solvers, runs })
        }
    };
    Ok(Trajectory { params: *params, set, initial, times: times.to_vec(), filtered, layers })
}

/// One ingredient of the approximate solution, possibly made of several pieces.
pub struct Group {
    pub term: Term,
    pub parts: Vec<Box<dyn ColumnSource + Send>>,
}

impl ColumnSource for Group {
    fn add_level(&self, geom: &Geometry, z: f64, out: &mut LevelSpectrum) {
        for p in &self.parts {
            p.add_level(geom, z, out);
        }
    }
}

/// The approximate solution at one sample time, split by ingredient.
pub struct Composition {
    pub t: f64,
    pub groups: Vec<Group>,
    /// Horizontal-mean normal flux the lift could not remove.
    pub dropped_flux: f64,
}

impl Composition {
    pub fn group(&self, term: Term) -> Option<&Group> {
        self.groups.iter().find(|g| g.term == term)
    }

    /// Spectrum of the sum of the groups accepted by `keep` at height `z`.
    pub fn level(&self, geom: &Geometry, m: usize, z: f64, keep: &dyn Fn(Term) -> bool) -> LevelSpectrum {
        let mut out = LevelSpectrum::zeros(m);
        for g in self.groups.iter().filter(|g| keep(g.term)) {
            g.add_level(geom, z, &mut out);
        }
        out
    }
}

/// `Σ w b N e^{iα|k|t/ε} + (0, v)` with Taylor coefficients in `t`.
pub fn interior_field(state: &OscState, amps: &[Jet], mean: &ModalField<Jet>, eps: f64, t: f64) -> ModalField<Jet> {
    let mut out = ModalField::new();
    for w in interior_waves(state, amps, mean) {
        match w.origin {
            Origin::Osc(_) => {
                let ph = Jet::phase(w.freq / eps, t);
                out.add(w.mode, w.coef.map(|c| c * ph));
            }
            Origin::Mean => out.add(w.mode, w.coef),
        }
    }
    out
}

/// Builds every ingredient enabled by `spec` at sample `index` of `traj`.
pub fn compose(spec: &AssemblySpec, traj: &Trajectory, index: usize) -> Result<Composition> {
    let p = &spec.params;
    let snap =
        traj.filtered.snapshots.get(index).ok_or_else(|| Error::Grid(format!("sample {index} is not stored")))?;
    let t = snap.t;
    let geom = p.geometry();
    let db = DbSystem::new(&traj.set, p, traj.initial.mean.mean_horizontal())?;
    let amps = db.jets(snap.osc.as_slice());
    let ins = InsSystem::new(geom, snap.mean.k(), p.mu1)?;
    let mean = ins.jets(&snap.mean);
    let mut groups = Vec::new();
    let mut push = |term: Term, parts: Vec<Box<dyn ColumnSource + Send>>| groups.push(Group { term, parts });

    if spec.enabled(Term::Interior) {
        let f = interior_field(&snap.osc, &amps, &mean, p.eps, t);
        push(Term::Interior, vec![Box::new(ColumnField::from_modal(&geom, &f))]);
    }
    if spec.enabled(Term::AcousticLayer) {
        let (bottom, top) = build_oscillating_layers(&snap.osc, p);
        let mut f = bottom.field(&snap.osc, &amps, p, t);
        f.extend(top.field(&snap.osc, &amps, p, t));
        push(Term::AcousticLayer, vec![Box::new(f)]);
    }
    if spec.enabled(Term::EigenCorrector) {
        let mut f = build_eigen_corrector(&snap.osc, &amps, p, t).field;
        f.scale(Complex64::new(p.delta_osc(), 0.0));
        push(Term::EigenCorrector, vec![Box::new(f)]);
    }
    let mut layers: Vec<PrandtlLayer> = Vec::new();
    if spec.enabled(Term::Prandtl) {
        let runs =
            traj.layers.as_ref().ok_or(Error::MissingComponent { tier: spec.tier.letter(), what: "Prandtl layers" })?;
        for (solver, run) in runs.solvers.iter().zip(&runs.runs) {
            let waves = wall_waves(&snap.osc, &amps, p, t, solver.side);
            layers.push(PrandtlLayer::new(solver, &run.snapshots[index], &mean, waves, p));
        }
    }
    let corrector = if spec.enabled(Term::InteriorCorrector) || spec.enabled(Term::WallCorrector) {
        Some(second_corrector(p, &snap.osc, &amps, &mean).0)
    } else {
        None
    };
    let mut walls = None;
    if spec.enabled(Term::WallCorrector) {
        let mut fast = Vec::new();
        let mut slow = Vec::new();
        if spec.enabled(Term::InteriorCorrector) {
            if let Some(v) = &corrector {
                let (f, s) = corrector_traces(v, p.eps, t);
                fast.extend(f);
                slow.extend(s);
            }
        }
        if spec.enabled(Term::EigenCorrector) {
            fast.extend(eigen_traces(&snap.osc, &amps, p, t));
        }
        walls = Some(WallCorrectors::tangential(p, &fast, &slow));
    }
    if spec.enabled(Term::InteriorCorrector) {
        if let Some(v) = &corrector {
            let f = v.field(t, p.eps).map(|c| c.scale_re(p.eps));
            push(Term::InteriorCorrector, vec![Box::new(ColumnField::from_modal(&geom, &f))]);
        }
    }
    if !layers.is_empty() {
        push(Term::Prandtl, layers.into_iter().map(|l| Box::new(l) as Box<dyn ColumnSource + Send>).collect());
    }
    let mut dropped_flux = 0.0;
    if let Some(mut w) = walls {
        let traces = normal_traces(&geom, spec.box_m, &groups, [&w.stokes, &w.tangential_lift]);
        w.lift_normal(&geom, &traces);
        dropped_flux = w.dropped_flux;
        groups.push(Group {
            term: Term::WallCorrector,
            parts: vec![Box::new(w.normal_lift), Box::new(w.stokes), Box::new(w.tangential_lift)],
        });
    }
    groups.sort_by_key(|g| g.term);
    Ok(Composition { t, groups, dropped_flux })
}

/// Normal velocity of `groups` plus `extra` on both walls.
fn normal_traces(geom: &Geometry, m: usize, groups: &[Group], extra: [&ColumnField; 2]) -> Vec<NormalTrace> {
    let mut out = Vec::new();
    for side in Side::BOTH {
        let z = match side {
            Side::Bottom => 0.0,
            Side::Top => geom.a[2],
        };
        let mut l = LevelSpectrum::zeros(m);
        for g in groups {
            g.add_level(geom, z, &mut l);
        }
        for f in extra {
            f.add_level(geom, z, &mut l);
        }
        for (i, v) in l.val.iter().enumerate() {
            if !v[3].is_zero() {
                out.push(NormalTrace { side, mh: l.mode(i), value: v[3] });
            }
        }
    }
    out
}

/// Largest horizontal index among the ingredients of a trajectory.
pub fn default_box(traj: &Trajectory) -> usize {
    let k_osc = traj.initial.osc.k();
    let k_mean = traj.initial.mean.k();
    2 * k_osc.max(k_mean)
}

/// Real part of `U^a` at sample `index` on the grid of `spec`.
pub fn assemble(spec: &AssemblySpec, traj: &Trajectory, index: usize) -> Result<GridField> {
    let comp = compose(spec, traj, index)?;
    let g = &spec.grid;
    let dft = crate::spectral_core::dft::HorizontalDft::new(g.n1, g.n2, spec.box_m);
    let geom = spec.params.geometry();
    let planes = par::map_slice(g.z(), |&z| {
        let lvl = comp.level(&geom, spec.box_m, z, &|_| true);
        let mut out: [Vec<f64>; 4] = Default::default();
        for (c, o) in out.iter_mut().enumerate() {
            let spec_c: Vec<Complex64> = lvl.val.iter().map(|v| v[c].value()).collect();
            let mut grid = vec![Complex64::new(0.0, 0.0); g.n1 * g.n2];
            dft.inverse(&spec_c, &mut grid);
            *o = grid.iter().map(|v| v.re).collect();
        }
        out
    });
    let mut field = GridField::zeros(g);
    let plane = g.n1 * g.n2;
    for (iz, p) in planes.into_iter().enumerate() {
        for c in 0..4 {
            field.data[c][iz * plane..(iz + 1) * plane].copy_from_slice(&p[c]);
        }
    }
    Ok(field)
}

/// Tier label used in error messages.
pub fn require_layers(traj: &Trajectory, tier: Tier) -> Result<()> {
    if tier >= Tier::B && traj.layers.is_none() {
        return Err(Error::MissingComponent { tier: tier.letter(), what: "Prandtl layers" });
    }
    Ok(())
}
