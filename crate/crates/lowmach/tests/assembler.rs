use lowmach::assembler::*;
use lowmach::filtered_dynamics::FilteredState;
use lowmach::jet::Jet;
use lowmach::resonance::enumerate_resonances;
use lowmach::spectral_core::{GridSpec, LevelSpectrum, MeanFlowState, OscState, PhysicalParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn uniform(p: &PhysicalParams, intervals: usize) -> GridSpec {
    GridSpec::uniform(p.geometry(), 8, 8, intervals).unwrap()
}

#[test]
fn constant_field_has_volume_norm() {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let grid = uniform(&p, 40);
    let c = Complex64::new(0.6, -0.8) * 1.7;
    let mut col = Column::zeros(1, grid.nz());
    let i = col.index([0, 0]).unwrap();
    for l in &mut col.levels {
        l[i][2] = Jet::constant(c);
    }
    let n = conormal_norm(&g, p.eps, grid.z(), grid.z_weights(), &ConormalSpec::default(), &col).unwrap();
    let volume = g.a[0] * g.a[1] * g.a[2];
    // Z3 powers amplify rounding by (φ/h)^3
    assert!((n - c.norm() * volume.sqrt()).abs() < 1e-10 * n, "{n} vs {}", c.norm() * volume.sqrt());
}

#[test]
fn vertical_sine_matches_quadrature() {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let a3 = g.a[2];
    let grid = uniform(&p, 2000);
    let mut col = Column::zeros(0, grid.nz());
    for (l, &z) in col.levels.iter_mut().zip(grid.z()) {
        l[0][0] = Jet::constant(Complex64::new((std::f64::consts::PI * z / a3).sin(), 0.0));
    }
    let spec = ConormalSpec { order: 1, max_time: 0, stencil: 5 };
    let n = conormal_norm(&g, p.eps, grid.z(), grid.z_weights(), &spec, &col).unwrap();
    // Simpson on a separate fine grid
    let k = std::f64::consts::PI / a3;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let m = 20000;
        let h = a3 / m as f64;
        (0..=m)
            .map(|j| {
                let w = if j == 0 || j == m {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(j as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let area = g.a[0] * g.a[1];
    let f0 = simpson(&|z| (k * z).sin().powi(2));
    let f3 = simpson(&|z| (z * (a3 - z) * k * (k * z).cos()).powi(2));
    let oracle = (area * f0).sqrt() + (area * f3).sqrt();
    assert!(((n - oracle) / oracle).abs() < 1e-8, "{n} vs {oracle}");
}

#[test]
fn conormal_order_is_capped() {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let grid = uniform(&p, 10);
    let col = Column::zeros(1, grid.nz());
    let spec = ConormalSpec { order: 4, ..Default::default() };
    assert!(conormal_norm(&p.geometry(), p.eps, grid.z(), grid.z_weights(), &spec, &col).is_err());
}

fn random_column(seed: u64, nz: usize) -> Column {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut col = Column::zeros(2, nz);
    for l in &mut col.levels {
        for v in l.iter_mut() {
            for c in v.iter_mut() {
                for q in c.0.iter_mut() {
                    *q = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
    }
    col
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn conormal_norm_is_homogeneous(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
        let grid = uniform(&p, 12);
        let col = random_column(seed, grid.nz());
        let c = Complex64::new(re, im);
        let mut scaled = col.clone();
        for l in &mut scaled.levels {
            for v in l.iter_mut() {
                for q in v.iter_mut() {
                    *q = q.scale(c);
                }
            }
        }
        let spec = ConormalSpec::default();
        let g = p.geometry();
        let a = conormal_norm(&g, p.eps, grid.z(), grid.z_weights(), &spec, &col).unwrap();
        let b = conormal_norm(&g, p.eps, grid.z(), grid.z_weights(), &spec, &scaled).unwrap();
        prop_assert!((b - c.norm() * a).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn attribution_splits_the_norm(s1 in 0u64..1000, s2 in 0u64..1000) {
        let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
        let grid = uniform(&p, 12);
        let a = random_column(s1, grid.nz());
        let mut b = random_column(s2 + 1000, grid.nz());
        b.m = 2;
        let g = p.geometry();
        let spec = ConormalSpec::default();
        let (total, shares) = conormal_parts(&g, p.eps, grid.z(), grid.z_weights(), &spec, &[&a, &b]).unwrap();
        prop_assert!((shares.iter().sum::<f64>() - total).abs() <= 1e-12 * total);
    }
}

#[test]
fn frozen_acoustic_mode_leaves_only_dissipation() {
    let p = PhysicalParams::standard(1e-3, 1e-2).unwrap();
    let g = p.geometry();
    let sc = g.scale();
    let lat = [2, -1, 3];
    let k = [sc[0] * lat[0] as f64, sc[1] * lat[1] as f64, sc[2] * lat[2] as f64];
    let kk = k.iter().map(|x| x * x).sum::<f64>();
    let kh = k[0] * k[0] + k[1] * k[1];
    let norm = kk.sqrt();
    let t = 0.37;
    for alpha in [1.0, -1.0] {
        let amp = Jet::phase(alpha * norm / p.eps, t).scale(Complex64::new(0.3, 0.4));
        let i = Complex64::new(0.0, 1.0);
        for z in [0.0, 0.41, 1.9] {
            let (c, s) = ((k[2] * z).cos(), (k[2] * z).sin());
            let mut lvl = LevelSpectrum::zeros(3);
            let n = lvl.index([lat[0], lat[1]]).unwrap();
            // (σ, u) = (-α|k| cos, k1 cos, k2 cos, i k3 sin)
            let prof = [
                [
                    Complex64::from(-alpha * norm * c),
                    Complex64::from(alpha * norm * k[2] * s),
                    Complex64::from(alpha * norm * k[2] * k[2] * c),
                ],
                [
                    Complex64::from(k[0] * c),
                    Complex64::from(-k[0] * k[2] * s),
                    Complex64::from(-k[0] * k[2] * k[2] * c),
                ],
                [
                    Complex64::from(k[1] * c),
                    Complex64::from(-k[1] * k[2] * s),
                    Complex64::from(-k[1] * k[2] * k[2] * c),
                ],
                [i * k[2] * s, i * k[2] * k[2] * c, -i * k[2] * k[2] * k[2] * s],
            ];
            for (q, pr) in prof.iter().enumerate() {
                lvl.val[n][q] = amp.scale(pr[0]);
                lvl.dz[n][q] = amp.scale(pr[1]);
                lvl.dzz[n][q] = amp.scale(pr[2]);
            }
            let inviscid = linear_residual(&g, &p, &lvl, false);
            // the last Taylor coefficient of ∂t is truncated
            let worst =
                inviscid[n].iter().flat_map(|j| j.0[..=MAX_TIME_ORDER].iter()).map(|c| c.norm()).fold(0.0, f64::max);
            let scale = 0.5 * norm * (norm / p.eps).powi(MAX_TIME_ORDER as i32 + 1);
            assert!(worst < 1e-13 * scale, "inviscid {worst:e}");
            let r = linear_residual(&g, &p, &lvl, true);
            let lambda = p.mu1 * (kh + p.nu * k[2] * k[2]) + p.mu2 * kk;
            assert!(r[n][0].0[..=MAX_TIME_ORDER].iter().all(|c| c.norm() < 1e-13 * scale));
            for q in 1..4 {
                let want = lvl.val[n][q].scale_re(lambda);
                for d in 0..=MAX_TIME_ORDER {
                    assert!((r[n][q].0[d] - want.0[d]).norm() < 1e-10 * (1.0 + want.0[d].norm()), "q {q} d {d}");
                }
            }
        }
    }
}

struct Scenario {
    spec: AssemblySpec,
    traj: Trajectory,
    reports: Vec<ResidualReport>,
}

fn scenario() -> &'static Scenario {
    static S: OnceLock<Scenario> = OnceLock::new();
    S.get_or_init(|| {
        let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
        let g = p.geometry();
        let init = standard_initial(g, 2, 2).unwrap();
        let set = enumerate_resonances(2).unwrap();
        let grid = GridSpec::layered(g, 8, 8, p.delta_osc()).unwrap();
        let spec = AssemblySpec::new(Tier::C, p, grid, 4, 0.2, 2).unwrap();
        let traj = simulate(&p, init, set, 0.2, &spec.sample_times(), &TrajectoryOptions::default()).unwrap();
        let reports = residual_tiers(&spec, &traj, &Tier::ALL).unwrap();
        Scenario { spec, traj, reports }
    })
}

#[test]
fn zero_data_has_zero_residual() {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let init = FilteredState::new(OscState::zeros(g, 1).unwrap(), MeanFlowState::zeros(g, 1).unwrap()).unwrap();
    let grid = GridSpec::layered(g, 8, 8, p.delta_osc()).unwrap();
    let spec = AssemblySpec::new(Tier::C, p, grid, 2, 0.1, 2).unwrap();
    let opts = TrajectoryOptions {
        prandtl: Some(lowmach::layer_profiles::PrandtlGrid { intervals: 40, ..Default::default() }),
        ..Default::default()
    };
    let traj = simulate(&p, init, enumerate_resonances(1).unwrap(), 0.1, &spec.sample_times(), &opts).unwrap();
    let field = assemble(&spec, &traj, 0).unwrap();
    assert!(field.data.iter().all(|c| c.iter().all(|v| *v == 0.0)));
    let r = residual(&spec, &traj).unwrap();
    assert_eq!(r.total, 0.0);
    assert!(r.per_term.values().all(|v| *v == 0.0));
}

#[test]
fn attribution_sums_to_total() {
    for r in &scenario().reports {
        assert!((r.attribution_sum() - r.total).abs() < 1e-10 * r.total, "{}", r.tier);
        assert!(r.per_term.contains_key(BOUNDARY_TERM));
    }
}

#[test]
fn tiers_decrease() {
    let r = &scenario().reports;
    assert!(r[0].total >= r[1].total && r[1].total >= r[2].total, "{} {} {}", r[0].total, r[1].total, r[2].total);
}

#[test]
fn tier_c_meets_the_walls() {
    let s = scenario();
    let r = &s.reports[2];
    assert!(r.boundary_max < 1e-12, "{:e}", r.boundary_max);
    assert!(s.reports[0].boundary_max > 1e-3);
    let field = assemble(&s.spec, &s.traj, 1).unwrap();
    assert!(field.boundary_velocity_max() < 1e-12);
}

#[test]
fn report_json_has_the_public_keys() {
    let v: serde_json::Value = serde_json::from_str(&scenario().reports[2].to_json()).unwrap();
    for key in ["eps", "nu", "tier", "T", "total", "per_term", "boundary_max"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["tier"], "C");
}

#[test]
fn layers_are_required_for_tier_b() {
    let s = scenario();
    let mut traj = s.traj.clone();
    traj.layers = None;
    assert!(require_layers(&traj, Tier::A).is_ok());
    assert!(require_layers(&traj, Tier::B).is_err());
    assert!(compose(&s.spec, &traj, 0).is_err());
}

#[test]
fn dropping_the_corrector_moves_its_defect_to_the_layer() {
    let s = scenario();
    let spec = s.spec.with_tier(Tier::A);
    let full = residual(&spec, &s.traj).unwrap();
    let cut = residual(&spec.clone().without(Term::EigenCorrector), &s.traj).unwrap();
    let label = Term::AcousticLayer.label();
    assert!(cut.total > full.total);
    assert!(cut.per_term[label] > full.per_term[label]);
    assert!(!cut.per_term.contains_key(Term::EigenCorrector.label()));
}

#[test]
fn residual_is_stable_under_refinement() {
    let s = scenario();
    let fine = AssemblySpec { grid: s.spec.grid.refined().unwrap(), ..s.spec.clone() };
    let a = &s.reports[2];
    let b = residual(&fine, &s.traj).unwrap();
    assert!(((b.total - a.total) / a.total).abs() < 0.05, "{} vs {}", a.total, b.total);
}

#[test]
fn strong_quantities_match_the_report() {
    let s = scenario();
    let direct = strong_convergence_check(&s.spec, &s.traj).unwrap();
    let reused = strong_from_report(&s.reports[2], &s.traj);
    assert!((direct.deviation - reused.deviation).abs() < 1e-10 * direct.deviation);
    assert!(direct.grad_h > 0.0 && direct.grad_ratio.is_finite());
}
