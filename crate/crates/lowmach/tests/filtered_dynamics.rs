use lowmach::filtered_dynamics::run_filtered;
use lowmach::filtered_dynamics::{corrector_forcing, interior_waves, DbSystem, FilteredState, InsSystem, RunOptions};
use lowmach::resonance::enumerate_resonances;
use lowmach::spectral_core::{
    Geometry, MeanFlowState, MeanPreset, ModalField, OscState, PhysicalParams, Sign, WaveVector,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(a: [f64; 3]) -> PhysicalParams {
    PhysicalParams::new(a, 1e-2, 1e-2, 1.0, 0.5, 1.4).unwrap()
}

/// The exactly resonant projection of `Q(U,U)` plus the mean drift is the
/// negative of the amplitude equation's nonlinear tangent, with the storage weight.
#[test]
fn resonant_projection_reproduces_the_amplitude_equation() {
    for (seed, a) in
        [(1u64, [2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, std::f64::consts::PI]), (5, [1.0, 1.7, 0.6])]
    {
        let p = params(a);
        let g = p.geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let osc = OscState::random(g, 2, &mut rng, 1.0, 0.8).unwrap();
        let mean = MeanFlowState::preset(g, 1, MeanPreset::Random { amplitude: 0.5, seed }).unwrap();
        let set = enumerate_resonances(2).unwrap();
        let db = DbSystem::new(&set, &p, mean.mean_horizontal()).unwrap();
        let mut drift_only = mean.clone();
        for m in mean.modes().collect::<Vec<_>>() {
            if m != [0, 0, 0] {
                drift_only.set(m, [Complex64::new(0.0, 0.0); 2]).unwrap();
            }
        }
        let waves = interior_waves(&osc, osc.as_slice(), &drift_only.to_modal());
        let forcing = corrector_forcing(&p, &waves);
        let nl = db.nonlinear(osc.as_slice());
        for (i, m) in set.truncation().modes().enumerate() {
            let w = WaveVector::of(&g, m.lattice());
            for s in Sign::BOTH {
                let slot = 2 * i + s.slot();
                let drift =
                    Complex64::new(0.0, w.k[0] * mean.mean_horizontal()[0] + w.k[1] * mean.mean_horizontal()[1]);
                let expect = (drift * osc.as_slice()[slot] - nl[slot]) * m.weight();
                let got = forcing.resonant.get(&(m.lattice(), s)).copied().unwrap_or_default();
                assert!((got - expect).norm() < 1e-11 * (1.0 + expect.norm()), "{m} {s:?}: {got} vs {expect}");
            }
        }
        assert!(forcing.zero_kernel_max() < 1e-12);
    }
}

#[test]
fn energy_is_conserved_without_linear_terms() {
    // tiny viscosities and no boundary damping leave only the resonant transfer
    let g = Geometry::new(1.0, 1.3, 0.7).unwrap();
    let p = PhysicalParams::new(g.a, 1.0, 1e-30, 1e-30, 0.0, 1.4).unwrap();
    let set = enumerate_resonances(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let osc = OscState::random(g, 3, &mut rng, 0.5, 1.0).unwrap();
    let st = FilteredState::new(osc, MeanFlowState::zeros(g, 1).unwrap()).unwrap();
    let mut defects = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let run =
            run_filtered(&st, &set, &p, &RunOptions { t_end: 0.4, dt, sobolev: 1.0, sample_times: vec![] }).unwrap();
        let e0 = run.samples[0].energy;
        defects.push((run.samples.last().unwrap().energy - e0).abs() / e0);
    }
    assert!(defects[2] < 1e-8);
    if defects[1] > 1e-13 {
        let order = (defects[0] / defects[1]).log2();
        assert!(order > 3.5, "{defects:?}");
    }
}

#[test]
fn mean_flow_jets_follow_the_galerkin_flow() {
    let g = Geometry::unit();
    let ins = InsSystem::new(g, 2, 1.0).unwrap();
    let m = MeanFlowState::preset(g, 2, MeanPreset::Random { amplitude: 0.8, seed: 4 }).unwrap();
    let jets = ins.jets(&m);
    let h = 1e-3;
    let next = ins.step(&m, h).unwrap().to_modal();
    let cur: ModalField<Complex64> = m.to_modal();
    for (k, c) in next.iter() {
        let j = jets.get(*k).unwrap();
        let base = cur.get(*k).copied().unwrap_or_default();
        for q in 1..4 {
            let taylor = j[q].0[0] + j[q].0[1] * h + j[q].0[2] * h * h + j[q].0[3] * h * h * h;
            assert!((taylor - c[q]).norm() < 1e-9 * (1.0 + base[q].norm()), "{k:?} {q}");
        }
    }
}
