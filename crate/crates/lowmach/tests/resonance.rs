use lowmach::resonance::{enumerate_resonances, filtered_convolution_d, small_divisor_probe};
use lowmach::spectral_core::{Geometry, Lattice, OscState, Sign, Truncation, WaveVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

type Triple = (u8, Lattice, Lattice, Lattice);

/// Floating-point triangle tests over every ordered pair of the half lattice.
fn float_oracle(geom: &Geometry, k: usize) -> BTreeSet<Triple> {
    let trunc = Truncation::new(k).unwrap();
    let modes: Vec<Lattice> = trunc.modes().map(|m| m.lattice()).collect();
    let n = |v: Lattice| WaveVector::of(geom, v).norm;
    let s = |v: Lattice| [v[0], v[1], -v[2]];
    let inside = |m: Lattice| m[2] >= 0 && m != [0, 0, 0] && trunc.contains(m);
    let mut out = BTreeSet::new();
    for &kv in &modes {
        for &lv in &modes {
            let m = [kv[0] + lv[0], kv[1] + lv[1], kv[2] + lv[2]];
            if inside(m) && (n(kv) + n(lv) - n(m)).abs() <= 1e-9 {
                out.insert((1, m, kv, lv));
            }
            let sl = s(lv);
            let m = [kv[0] + sl[0], kv[1] + sl[1], kv[2] + sl[2]];
            if inside(m) && (n(kv) - n(lv) - n(m)).abs() <= 1e-9 {
                out.insert((2, m, kv, lv));
            }
            let sk = s(kv);
            let m = [lv[0] + sk[0], lv[1] + sk[1], lv[2] + sk[2]];
            if inside(m) && (n(lv) - n(kv) - n(m)).abs() <= 1e-9 {
                out.insert((3, m, kv, lv));
            }
        }
    }
    out
}

fn exact(k: usize) -> BTreeSet<Triple> {
    enumerate_resonances(k).unwrap().iter().map(|(c, m, kv, lv)| (c.number(), m, kv, lv)).collect()
}

#[test]
fn exact_enumeration_matches_float_oracle_on_random_geometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let reference = exact(6);
    let mut geoms = vec![Geometry::unit(), Geometry::new(1.0, 3.0, 2f64.sqrt()).unwrap()];
    while geoms.len() < 10 {
        geoms.push(Geometry::new(rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0)).unwrap());
    }
    for g in &geoms {
        for k in [2, 6] {
            let oracle = float_oracle(g, k);
            let ex = if k == 6 { reference.clone() } else { exact(k) };
            assert_eq!(ex, oracle, "geometry {:?} K={k}", g.a);
        }
    }
}

#[test]
fn convolution_matches_brute_force_sum() {
    let g = Geometry::new(1.3, 2.1, 0.9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let state = OscState::random(g, 3, &mut rng, 1.0, 0.7).unwrap();
    let set = enumerate_resonances(3).unwrap();
    let oracle = float_oracle(&g, 3);
    let b = |v: Lattice, s: Sign| state.get_lattice(v, s);
    for m in state.truncation().modes() {
        for a in Sign::BOTH {
            let mut d = Complex64::new(0.0, 0.0);
            for &(c, mm, kv, lv) in &oracle {
                if mm != m.lattice() {
                    continue;
                }
                d += match c {
                    1 => b(kv, a) * b(lv, a),
                    2 => -b(kv, a) * b(lv, a.flip()),
                    _ => -b(kv, a.flip()) * b(lv, a),
                };
            }
            let got = filtered_convolution_d(&set, &state, m.lattice(), a).unwrap();
            assert!((got - d).norm() <= 1e-13 * (1.0 + d.norm()), "{m} {a:?}");
        }
    }
}

#[test]
fn every_listed_pair_satisfies_its_identity() {
    let set = enumerate_resonances(4).unwrap();
    for (c, m, k, l) in set.iter() {
        let r = lowmach::resonance::triad_class(k, l).unwrap();
        assert!(r.contains(&(c, m)), "{c:?} {m:?} {k:?} {l:?}");
        assert!(k != [0, 0, 0] && l != [0, 0, 0]);
    }
}

#[test]
fn probe_minimum_is_nonincreasing_from_k4_to_k6() {
    let g = Geometry::unit();
    let r4 = small_divisor_probe(&g, 4).unwrap();
    let r6 = small_divisor_probe(&g, 6).unwrap();
    assert!(r4.min_omega > 0.0 && r6.min_omega > 0.0);
    assert!(r6.min_omega <= r4.min_omega);
}
