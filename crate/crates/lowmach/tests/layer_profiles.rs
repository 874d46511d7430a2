use lowmach::jet::Jet;
use lowmach::layer_profiles::{prandtl_solve, wall_trace, PrandtlGrid, PrandtlSolver, PrandtlState, WallTrace};
use lowmach::spectral_core::{MeanFlowState, MeanPreset, ModalField, PhysicalParams, Side};
use num_complex::Complex64;

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn zero_trace(p: &PhysicalParams, kp: usize) -> WallTrace<Complex64> {
    wall_trace(&p.geometry(), &ModalField::<Complex64>::new(), Side::Bottom, kp)
}

/// `v = θ e^{-θ} cos t` in the second component of mode `(1, 0)`.
fn mms_error(intervals: usize, dt: f64) -> f64 {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let grid = PrandtlGrid { intervals, dt, ..Default::default() };
    let solver = PrandtlSolver::new(&p, 1, Side::Bottom, grid).unwrap();
    let trace = zero_trace(&p, 1);
    let slot = 2 * 3 + 1; // mode (1, 0) in the 3×3 box
    let exact = |t: f64, th: f64| th * (-th).exp() * t.cos();
    let forcing = move |t: f64, th: f64| {
        let e = (-th).exp();
        let f = -th * e * t.sin() + (th * e - (th - 2.0) * e) * t.cos();
        let mut out = vec![[CZERO; 2]; 9];
        out[slot][1] = Complex64::new(f, 0.0);
        out
    };
    let th = solver.mesh().theta().to_vec();
    let mut state = PrandtlState {
        t: 0.0,
        v: th
            .iter()
            .map(|&x| {
                let mut row = vec![[CZERO; 2]; 9];
                row[slot][1] = Complex64::new(exact(0.0, x), 0.0);
                row
            })
            .collect(),
    };
    let steps = (0.5 / dt).round() as usize;
    for _ in 0..steps {
        state = solver.step(&state, &trace, &trace, dt, Some(&forcing)).unwrap();
    }
    th.iter().zip(&state.v).map(|(&x, row)| (row[slot][1].re - exact(state.t, x)).abs()).fold(0.0, f64::max)
}

#[test]
fn manufactured_layer_converges_at_second_order() {
    let e: Vec<f64> = [50, 100, 200].iter().map(|&n| mms_error(n, 0.01 * 50.0 / n as f64)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "errors {e:?}");
    }
}

fn self_convergence(preset: MeanPreset, kp: usize) -> (f64, f64, f64) {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let mean = MeanFlowState::preset(g, kp, preset).unwrap();
    let runs: Vec<(PrandtlSolver, PrandtlState)> = [40, 80, 160]
        .iter()
        .map(|&n| {
            let grid = PrandtlGrid { intervals: n, dt: 2e-3, ..Default::default() };
            let s = PrandtlSolver::new(&p, kp, Side::Bottom, grid).unwrap();
            let run = prandtl_solve(&s, &p, &mean, 0.2, &[]).unwrap();
            (s, run.last)
        })
        .collect();
    let diff = |a: &PrandtlState, b: &PrandtlState, stride: usize| -> f64 {
        a.v.iter()
            .enumerate()
            .map(|(j, row)| {
                row.iter()
                    .zip(&b.v[stride * j])
                    .map(|(x, y)| (x[0] - y[0]).norm().max((x[1] - y[1]).norm()))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let e1 = diff(&runs[0].1, &runs[1].1, 2);
    let e2 = diff(&runs[1].1, &runs[2].1, 2);
    (e1, e2, (e1 / e2).log2())
}

#[test]
fn nonlinear_layer_self_converges() {
    let (e1, e2, order) = self_convergence(MeanPreset::Random { amplitude: 0.5, seed: 3 }, 1);
    assert!((1.7..=2.3).contains(&order), "differences {e1:e} {e2:e}");
}

#[test]
fn boundary_data_and_far_field() {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let mean = MeanFlowState::preset(g, 1, MeanPreset::Shear { amplitude: 1.0 }).unwrap();
    for side in Side::BOTH {
        let s = PrandtlSolver::new(&p, 1, side, PrandtlGrid::default()).unwrap();
        let run = prandtl_solve(&s, &p, &mean, 0.1, &[0.05, 0.1]).unwrap();
        assert_eq!(run.snapshots.len(), 2);
        assert!(run.bc_defect < 1e-12);
        assert!(run.far_field < 1e-8);
        assert!(run.monitor.iter().all(|(_, m)| m.is_finite()));
    }
}

#[test]
fn taylor_jets_match_the_trajectory() {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let mean = MeanFlowState::preset(g, 1, MeanPreset::Random { amplitude: 0.4, seed: 9 }).unwrap();
    let grid = PrandtlGrid { intervals: 60, dt: 1e-4, ..Default::default() };
    let s = PrandtlSolver::new(&p, 1, Side::Bottom, grid).unwrap();
    let h = 2e-3;
    let run = prandtl_solve(&s, &p, &mean, 0.1 + h, &[0.1 - h, 0.1, 0.1 + h]).unwrap();
    let ins = lowmach::filtered_dynamics::InsSystem::new(g, 1, p.mu1).unwrap();
    let mut m = mean.clone();
    while m.t < 0.1 - 1e-12 {
        m = ins.step(&m, 1e-3).unwrap();
    }
    let trace: WallTrace<Jet> = wall_trace(&g, &ins.jets(&m), Side::Bottom, 1);
    let jets = s.jets(&run.snapshots[1], &trace);
    let mut worst: f64 = 0.0;
    for j in 1..60 {
        for k in 0..9 {
            let fd = (run.snapshots[2].v[j][k][0] - run.snapshots[0].v[j][k][0]) / (2.0 * h);
            worst = worst.max((jets[j][k][0].derivative(1) - fd).norm());
        }
    }
    assert!(worst < 1e-3, "worst {worst:e}");
}
