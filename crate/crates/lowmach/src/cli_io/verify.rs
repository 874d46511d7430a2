//! Quick invariant suite behind the `verify` scenario.

use crate::assembler::{
    rate_fit, residual_tiers, simulate, standard_initial, AssemblySpec, SweepPoint, Tier, TrajectoryOptions,
};
use crate::error::Result;
use crate::filtered_dynamics::{vins_advance, InsSystem};
use crate::layer_profiles::{corrector_mode, lambda1, prandtl_solve, PrandtlGrid, PrandtlSolver};
use crate::resonance::{energy_flux, enumerate_resonances, triad_class};
use crate::spectral_core::{
    apply_l_grid, apply_l_spectrally, eta, semigroup_phase, sobolev_norm, synthesize, Geometry, GridSpec,
    MeanFlowState, MeanPreset, OscState, PhysicalParams, Side, Sign, Truncation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity and its threshold.
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn below(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, passed: value <= threshold, value, threshold }
    }
}

fn eigen_relation(seed: u64) -> Result<Check> {
    let g = Geometry::new(2.0, 1.0, 1.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let osc = OscState::random(g, 3, &mut rng, 1.0, 0.0)?;
    let mean = MeanFlowState::zeros(g, 1)?;
    let spec = GridSpec::uniform(g, 10, 10, 12)?;
    let lu = apply_l_grid(&synthesize(&osc, &mean, 0.0, &spec)?)?;
    let exact = synthesize(&apply_l_spectrally(&osc), &mean, 0.0, &spec)?;
    Ok(Check::below("eigen_relation", lu.max_abs_diff(&exact) / exact.max_abs().max(1.0), 1e-10))
}

fn isometry(seed: u64) -> Result<Check> {
    let g = Geometry::new(1.0, 1.3, 0.8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = OscState::random(g, 4, &mut rng, 1.0, 1.0)?;
        let tau = rng.gen_range(-50.0..50.0);
        let n0 = sobolev_norm(&s, 1.0);
        worst = worst.max((sobolev_norm(&semigroup_phase(&s, tau), 1.0) - n0).abs() / n0);
    }
    Ok(Check::below("semigroup_isometry", worst, 1e-12))
}

fn triads() -> Result<Check> {
    let set = enumerate_resonances(3)?;
    let bad =
        set.iter().filter(|(c, m, k, l)| !triad_class(*k, *l).map(|r| r.contains(&(*c, *m))).unwrap_or(false)).count();
    Ok(Check::below("triad_identities", bad as f64, 0.0))
}

fn neutrality(seed: u64) -> Result<Check> {
    let g = Geometry::new(1.1, 0.9, 1.4)?;
    let k = 3;
    let set = enumerate_resonances(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let s = OscState::random(g, k, &mut rng, 1.0, 0.5)?;
        let e: f64 = s.as_slice().iter().map(|b| b.norm_sqr()).sum();
        worst = worst.max(energy_flux(&set, &s).abs() / (e.powf(1.5) * k as f64));
    }
    Ok(Check::below("energy_neutrality", worst, 1e-12))
}

fn eigen_corrector() -> Result<Vec<Check>> {
    let p = PhysicalParams::standard(1e-2, 1e-2)?;
    let g = p.geometry();
    let mut ode: f64 = 0.0;
    let mut lam: f64 = f64::NEG_INFINITY;
    for m in Truncation::new(2)?.modes() {
        for s in Sign::BOTH {
            if m.k3() >= 1 {
                ode = ode.max(corrector_mode(&p, m.lattice(), s).ode_residual(&g, 64));
            }
            if m.k1() != 0 || m.k2() != 0 {
                lam = lam.max(lambda1(&g, p.mu1, m.lattice(), s).re);
            }
        }
    }
    Ok(vec![Check::below("corrector_ode", ode, 1e-10), Check::below("corrector_damping", lam, -f64::MIN_POSITIVE)])
}

fn taylor_green() -> Result<Check> {
    let g = Geometry::new(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 1.0)?;
    let ins = InsSystem::new(g, 2, 1.0)?;
    let m0 = MeanFlowState::preset(g, 2, MeanPreset::TaylorGreen { amplitude: 1.0 })?;
    let end = vins_advance(&ins, &m0, 0.5, 1e-3)?;
    let exact = MeanFlowState::taylor_green_exact(g, 2, 1.0, 1.0, end.t)?;
    Ok(Check::below("taylor_green", end.l2_distance(&exact), 1e-6))
}

fn prandtl() -> Result<Check> {
    let p = PhysicalParams::standard(1e-2, 1e-2)?;
    let mean = MeanFlowState::preset(p.geometry(), 1, MeanPreset::Shear { amplitude: 1.0 })?;
    let mut worst: f64 = 0.0;
    for side in Side::BOTH {
        let s = PrandtlSolver::new(&p, 1, side, PrandtlGrid { intervals: 100, ..Default::default() })?;
        let run = prandtl_solve(&s, &p, &mean, 0.1, &[])?;
        worst = worst.max(run.bc_defect).max(run.far_field);
    }
    Ok(Check::below("prandtl_boundary", worst, 1e-8))
}

fn assembly() -> Result<Vec<Check>> {
    let p = PhysicalParams::standard(1e-2, 1e-2)?;
    let g = p.geometry();
    let grid = GridSpec::layered(g, 8, 8, p.delta_osc())?;
    let spec = AssemblySpec::new(Tier::C, p, grid, 4, 0.2, 2)?;
    let traj = simulate(
        &p,
        standard_initial(g, 2, 2)?,
        enumerate_resonances(2)?,
        0.2,
        &spec.sample_times(),
        &TrajectoryOptions::default(),
    )?;
    let r = residual_tiers(&spec, &traj, &Tier::ALL)?;
    let order = if r[0].total >= r[1].total && r[1].total >= r[2].total { 0.0 } else { 1.0 };
    let split = (r[2].attribution_sum() - r[2].total).abs() / r[2].total;
    Ok(vec![
        Check::below("tier_c_boundary", r[2].boundary_max, 1e-9),
        Check::below("tier_order", order, 0.0),
        Check::below("attribution_sum", split, 1e-10),
    ])
}

fn detector() -> Result<Check> {
    let pts: Vec<SweepPoint> =
        [1e-2f64, 1e-3, 1e-4, 1e-5].iter().map(|&e| SweepPoint { eps: e, nu: e, residual: e.powf(0.25) }).collect();
    let flagged = rate_fit(&pts)?.violates;
    let ok: Vec<SweepPoint> = pts.iter().map(|p| SweepPoint { residual: 2.0 * eta(p.eps, p.nu), ..*p }).collect();
    let clean = !rate_fit(&ok)?.violates;
    Ok(Check::below("rate_detector", if flagged && clean { 0.0 } else { 1.0 }, 0.0))
}

/// Runs every check; seeds make it reproducible.
pub fn suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![eigen_relation(seed)?, isometry(seed)?, triads()?, neutrality(seed)?];
    out.extend(eigen_corrector()?);
    out.push(taylor_green()?);
    out.push(prandtl()?);
    out.extend(assembly()?);
    out.push(detector()?);
    Ok(out)
}
