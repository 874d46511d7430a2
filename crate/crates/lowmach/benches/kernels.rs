//! Level-parallel kernels on the rayon pool against the same kernels on one thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lowmach::assembler::{conormal_norm, Column, ConormalSpec};
use lowmach::jet::Jet;
use lowmach::spectral_core::{synthesize, GridSpec, MeanFlowState, MeanPreset, OscState, PhysicalParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

fn single_thread() -> Pool {
    #[cfg(feature = "parallel")]
    return rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("single-thread pool");
    #[cfg(not(feature = "parallel"))]
    return ();
}

/// Runs `f` on the one-thread pool, or directly when rayon is compiled out.
fn sequential<T: Send>(pool: &Pool, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    return pool.install(f);
    #[cfg(not(feature = "parallel"))]
    {
        let () = pool;
        f()
    }
}

fn variants() -> Vec<(&'static str, bool)> {
    if lowmach::par::is_parallel() {
        vec![("parallel", true), ("sequential", false)]
    } else {
        vec![("sequential", false)]
    }
}

fn bench_conormal(c: &mut Criterion) {
    let p = PhysicalParams::standard(1e-3, 1e-3).unwrap();
    let g = p.geometry();
    let grid = GridSpec::layered(g, 16, 16, p.delta_osc()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut col = Column::zeros(6, grid.nz());
    for level in &mut col.levels {
        for cell in level.iter_mut() {
            for v in cell.iter_mut() {
                let mut j = Jet::zero();
                for k in 0..4 {
                    j.0[k] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
                *v = j;
            }
        }
    }
    let spec = ConormalSpec::default();
    let run = || conormal_norm(&g, p.eps, grid.z(), grid.z_weights(), &spec, black_box(&col)).unwrap();
    let pool = single_thread();
    let mut group = c.benchmark_group("conormal_norm");
    group.sample_size(10);
    for (name, par) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| if par { run() } else { sequential(&pool, run) })
        });
    }
    group.finish();
}

fn bench_synthesize(c: &mut Criterion) {
    let p = PhysicalParams::standard(1e-2, 1e-2).unwrap();
    let g = p.geometry();
    let grid = GridSpec::layered(g, 16, 16, p.delta_osc()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let osc = OscState::random(g, 4, &mut rng, 1.0, 1.0).unwrap();
    let mean = MeanFlowState::preset(g, 3, MeanPreset::Random { amplitude: 0.5, seed: 2 }).unwrap();
    let run = || synthesize(black_box(&osc), &mean, 0.0, &grid).unwrap();
    let pool = single_thread();
    let mut group = c.benchmark_group("synthesize");
    group.sample_size(10);
    for (name, par) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| if par { run() } else { sequential(&pool, run) })
        });
    }
    group.finish();
}

criterion_group!(kernels, bench_conormal, bench_synthesize);
criterion_main!(kernels);
