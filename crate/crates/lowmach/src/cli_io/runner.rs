use super::config::{Preset, RunConfig, Scenario};
use super::output::{column_csv, plot_tables, Artifacts, Manifest};
use super::verify;
use crate::assembler::{
    assemble, default_box, rate_fit, residual_tiers, simulate, standard_initial, strong_from_report, sweep_csv,
    AssemblySpec, RateFit, ResidualReport, StrongReport, SweepPoint, SweepRow, Tier, Trajectory, TrajectoryOptions,
};
use crate::error::{Error, Result};
use crate::filtered_dynamics::{run_filtered, FilteredState, RunOptions};
use crate::layer_profiles::{prandtl_solve, PrandtlSolver};
use crate::resonance::{enumerate_resonances, small_divisor_probe};
use crate::spectral_core::{write_snapshot, GridSpec, MeanFlowState, MeanPreset, OscState, PhysicalParams, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::ZeroMode
        | Error::OutsideTruncation(..)
        | Error::MissingComponent { .. }
        | Error::Grid(_)
        | Error::Degenerate(_) => 2,
        Error::StepGuard(_)
        | Error::BlowUp { .. }
        | Error::Decay(_)
        | Error::RealityViolation { .. }
        | Error::Io(_) => 3,
        Error::Verification(_) => 4,
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::Io(e.to_string()))
}

pub fn initial_state(cfg: &RunConfig, params: &PhysicalParams) -> Result<FilteredState> {
    let g = params.geometry();
    let r = &cfg.run;
    match r.preset {
        Preset::Standard => standard_initial(g, r.k, r.k_mean),
        Preset::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            let osc = OscState::random(g, r.k, &mut rng, 0.5, 1.0)?;
            let mean = MeanFlowState::preset(g, r.k_mean, MeanPreset::Random { amplitude: 0.5, seed: r.seed })?;
            FilteredState::new(osc, mean)
        }
        Preset::TaylorGreen => {
            let mean = MeanFlowState::preset(g, r.k_mean, MeanPreset::TaylorGreen { amplitude: 1.0 })?;
            FilteredState::new(OscState::zeros(g, r.k)?, mean)
        }
    }
}

fn sample_times(cfg: &RunConfig) -> Vec<f64> {
    let h = cfg.run.t_end / cfg.run.samples as f64;
    (0..cfg.run.samples).map(|i| (i as f64 + 0.5) * h).collect()
}

fn assembly_spec(cfg: &RunConfig, params: PhysicalParams, tier: Tier) -> Result<AssemblySpec> {
    let g = params.geometry();
    let n = cfg.assemble.n_h;
    let grid = GridSpec::layered(g, n, n, params.delta_osc())?;
    AssemblySpec::new(tier, params, grid, cfg.assemble.box_m, cfg.run.t_end, cfg.run.samples)
}

fn trajectory(cfg: &RunConfig, params: &PhysicalParams, spec: &mut AssemblySpec) -> Result<Trajectory> {
    let init = initial_state(cfg, params)?;
    let set = enumerate_resonances(cfg.run.k)?;
    let opts = TrajectoryOptions {
        dt: cfg.run.dt,
        prandtl: if spec.tier >= Tier::B { Some(cfg.prandtl.grid()) } else { None },
    };
    let traj = simulate(params, init, set, cfg.run.t_end, &spec.sample_times(), &opts)?;
    if spec.box_m == 0 {
        spec.box_m = default_box(&traj);
    }
    Ok(traj)
}

fn filtered(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let p = cfg.params()?;
    let init = initial_state(cfg, &p)?;
    let set = enumerate_resonances(cfg.run.k)?;
    let opts = RunOptions { t_end: cfg.run.t_end, dt: cfg.run.dt, sobolev: 1.0, sample_times: sample_times(cfg) };
    let run = run_filtered(&init, &set, &p, &opts)?;
    out.write("filtered.csv", &run.to_csv())?;
    out.write("final_state.txt", &write_snapshot(&run.last.osc))?;
    #[derive(Serialize)]
    struct Summary {
        t_end: f64,
        energy_start: f64,
        energy_end: f64,
        grad_h_l2t: f64,
    }
    let s = Summary {
        t_end: run.last.t,
        energy_start: run.samples.first().map_or(0.0, |s| s.energy),
        energy_end: run.samples.last().map_or(0.0, |s| s.energy),
        grad_h_l2t: run.grad_h_l2t(),
    };
    out.write("summary.json", &json(&s)?)
}

fn resonance(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let p = cfg.params()?;
    let set = enumerate_resonances(cfg.run.k)?;
    out.write("resonances.txt", &set.dump())?;
    out.write("small_divisors.json", &json(&small_divisor_probe(&p.geometry(), cfg.run.k)?)?)
}

fn prandtl(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let p = cfg.params()?;
    let init = initial_state(cfg, &p)?;
    let times = sample_times(cfg);
    let mut summary = BTreeMap::new();
    for side in Side::BOTH {
        let name = if side == Side::Bottom { "bottom" } else { "top" };
        let solver = PrandtlSolver::new(&p, cfg.run.k_mean, side, cfg.prandtl.grid())?;
        let run = prandtl_solve(&solver, &p, &init.mean, cfg.run.t_end, &times)?;
        let mut mon = String::from("t,monitor\n");
        for (t, m) in &run.monitor {
            let _ = writeln!(mon, "{t:e},{m:e}");
        }
        out.write(&format!("prandtl_{name}_monitor.csv"), &mon)?;
        out.write(&format!("prandtl_{name}_final.csv"), &solver.snapshot_csv(&run.last))?;
        summary.insert(
            name,
            [("steps", run.steps as f64), ("bc_defect", run.bc_defect), ("far_field", run.far_field)]
                .into_iter()
                .collect::<BTreeMap<_, _>>(),
        );
    }
    out.write("summary.json", &json(&summary)?)
}

fn assemble_run(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let p = cfg.params()?;
    let mut spec = assembly_spec(cfg, p, cfg.assemble.tier)?;
    let traj = trajectory(cfg, &p, &mut spec)?;
    let report = residual_tiers(&spec, &traj, &[spec.tier])?.remove(0);
    out.write("residual.json", &(report.to_json() + "\n"))?;
    out.write("strong.json", &json(&strong_from_report(&report, &traj))?)?;
    let field = assemble(&spec, &traj, spec.samples - 1)?;
    out.write("column.csv", &column_csv(&field, 0, 0))
}

/// Everything a residual sweep produces.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Reports in `(ε, tier)` order, matching `rows`.
    pub reports: Vec<ResidualReport>,
    /// One row per `ε` for the highest tier.
    pub strong: Vec<StrongReport>,
    pub fits: BTreeMap<Tier, RateFit>,
}

impl Sweep {
    /// `sweep.csv`, `strong.csv` and `rate_fit.json` as `(name, contents)`.
    pub fn tables(&self) -> Result<Vec<(String, String)>> {
        let mut s = String::from("eps,nu,deviation,deviation_ratio,grad_h,grad_ratio\n");
        for r in &self.strong {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                r.eps, r.nu, r.deviation, r.deviation_ratio, r.grad_h, r.grad_ratio
            );
        }
        let fits: BTreeMap<String, &RateFit> = self.fits.iter().map(|(t, f)| (t.to_string(), f)).collect();
        Ok(vec![
            ("sweep.csv".into(), sweep_csv(&self.rows)),
            ("strong.csv".into(), s),
            ("rate_fit.json".into(), json(&fits)?),
        ])
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<Sweep> {
    let base = cfg.params()?;
    let top = *cfg.sweep.tiers.iter().max().unwrap_or(&Tier::C);
    let mut out = Sweep { rows: Vec::new(), reports: Vec::new(), strong: Vec::new(), fits: BTreeMap::new() };
    for &eps in &cfg.sweep.eps {
        let p = base.with_eps_nu(eps, eps.powf(cfg.sweep.kappa))?;
        let mut spec = assembly_spec(cfg, p, top)?;
        let traj = trajectory(cfg, &p, &mut spec)?;
        let reports = residual_tiers(&spec, &traj, &cfg.sweep.tiers)?;
        for r in &reports {
            out.rows.push(SweepRow::new(p.eps, p.nu, cfg.sweep.kappa, r.tier, r.total));
        }
        if let Some(r) = reports.iter().find(|r| r.tier == top) {
            out.strong.push(strong_from_report(r, &traj));
        }
        out.reports.extend(reports);
    }
    for &tier in &cfg.sweep.tiers {
        let pts: Vec<SweepPoint> = out
            .rows
            .iter()
            .filter(|r| r.tier == tier)
            .map(|r| SweepPoint { eps: r.eps, nu: r.nu, residual: r.residual })
            .collect();
        out.fits.insert(tier, rate_fit(&pts)?);
    }
    Ok(out)
}

fn sweep_run(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    for (name, text) in sweep(cfg)?.tables()? {
        out.write(&name, &text)?;
    }
    Ok(())
}

fn verify_run(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let checks = verify::suite(cfg.run.seed)?;
    out.write("verify.json", &json(&checks)?)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed.join(", ")))
    }
}

/// Runs one scenario and writes its artifacts plus `manifest.json` into `cfg.output`.
pub fn run(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let mut out = Artifacts::create(&cfg.output)?;
    out.write("config.toml", &cfg.canonical())?;
    let result = match cfg.scenario {
        Scenario::Filtered => filtered(cfg, &mut out),
        Scenario::Resonance => resonance(cfg, &mut out),
        Scenario::Prandtl => prandtl(cfg, &mut out),
        Scenario::Assemble => assemble_run(cfg, &mut out),
        Scenario::Sweep => sweep_run(cfg, &mut out),
        Scenario::Verify => verify_run(cfg, &mut out),
    };
    for (name, text) in plot_tables(out.dir())? {
        out.write(&name, &text)?;
    }
    let manifest = out.finish(cfg)?;
    result.map(|_| manifest)
}
