//! Exact acoustic resonances on the half lattice and the filtered quadratic
//! interaction they induce.

mod probe;

pub use probe::{small_divisor_probe, SmallDivisorReport};

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::par;
use crate::spectral_core::lattice::{add, norm2, reflect, Lattice, ModeIndex, Sign, Truncation, WaveVector};
use crate::spectral_core::{Geometry, MeanFlowState, OscState};
use num_complex::Complex64;
use std::fmt::Write as _;

/// Which lattice identity a resonant ordered pair satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriadClass {
    /// `k + l = m` with `k`, `l` pointing the same way.
    Parallel,
    /// `k + Sl = m` with `k`, `Sl` opposite and `|k| > |l|`.
    ReflectedSecond,
    /// `l + Sk = m` with `l`, `Sk` opposite and `|l| > |k|`.
    ReflectedFirst,
}

impl TriadClass {
    pub const ALL: [TriadClass; 3] = [TriadClass::Parallel, TriadClass::ReflectedSecond, TriadClass::ReflectedFirst];

    pub fn number(self) -> u8 {
        match self {
            TriadClass::Parallel => 1,
            TriadClass::ReflectedSecond => 2,
            TriadClass::ReflectedFirst => 3,
        }
    }
}

#[inline]
fn cross_is_zero(a: Lattice, b: Lattice) -> bool {
    let (a, b) = (a.map(i64::from), b.map(i64::from));
    a[1] * b[2] == a[2] * b[1] && a[2] * b[0] == a[0] * b[2] && a[0] * b[1] == a[1] * b[0]
}

#[inline]
fn dot(a: Lattice, b: Lattice) -> i64 {
    (0..3).map(|i| i64::from(a[i]) * i64::from(b[i])).sum()
}

/// Same direction: `b = c·a` with `c > 0`.
#[inline]
pub fn same_direction(a: Lattice, b: Lattice) -> bool {
    cross_is_zero(a, b) && dot(a, b) > 0
}

/// Opposite direction: `b = c·a` with `c < 0`.
#[inline]
pub fn opposite_direction(a: Lattice, b: Lattice) -> bool {
    cross_is_zero(a, b) && dot(a, b) < 0
}

/// Every resonance class the ordered pair `(k, l)` belongs to, with the output index.
///
/// The decision is made on integer indices only. For a positive diagonal scaling
/// `|k| + |l| = |k + l|` holds exactly when the index vectors point the same way,
/// and lengths along one ray compare like integer squared norms.
pub fn triad_class(k: Lattice, l: Lattice) -> Result<Vec<(TriadClass, Lattice)>> {
    if k == [0, 0, 0] || l == [0, 0, 0] {
        return Err(Error::ZeroMode);
    }
    let mut out = Vec::new();
    if same_direction(k, l) {
        out.push((TriadClass::Parallel, add(k, l)));
    }
    let sl = reflect(l);
    if opposite_direction(k, sl) && norm2(k) > norm2(l) {
        out.push((TriadClass::ReflectedSecond, add(k, sl)));
    }
    let sk = reflect(k);
    if opposite_direction(l, sk) && norm2(l) > norm2(k) {
        out.push((TriadClass::ReflectedFirst, add(l, sk)));
    }
    Ok(out)
}

/// Exact resonance of `α|k| + β|l| = γ|k + l′|` where `l′` is the second vector
/// as it enters the sum (`l` or `Sl`).
pub fn is_resonant(k: Lattice, alpha: Sign, l_prime: Lattice, beta: Sign, gamma: Sign) -> bool {
    let m = add(k, l_prime);
    if m == [0, 0, 0] {
        return false;
    }
    if same_direction(k, l_prime) {
        return alpha == beta && beta == gamma;
    }
    if opposite_direction(k, l_prime) {
        let (nk, nl) = (norm2(k), norm2(l_prime));
        return alpha != beta && if nk > nl { gamma == alpha } else { gamma == beta };
    }
    false
}

/// Resonant ordered pairs for every target mode of a truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonantTriadSet {
    trunc: Truncation,
    /// `pairs[m][c]` lists `(k, l)` truncation indices of class `c`.
    pairs: Vec<[Vec<(u32, u32)>; 3]>,
}

/// Complete resonant sets for all targets with `|m1|,|m2|,m3 ≤ K`; independent of the geometry.
pub fn enumerate_resonances(k: usize) -> Result<ResonantTriadSet> {
    let trunc = Truncation::new(k)?;
    let pairs = par::map_range(trunc.len(), |mi| class_lists(&trunc, trunc.mode(mi).lattice()));
    Ok(ResonantTriadSet { trunc, pairs })
}

/// Pairs `(k, l)` from the truncation feeding target `m`, split by class; `m` itself
/// need not lie in the truncation.
fn class_lists(trunc: &Truncation, m: Lattice) -> [Vec<(u32, u32)>; 3] {
    let mut lists: [Vec<(u32, u32)>; 3] = Default::default();
    for ki in 0..trunc.len() {
        let kv = trunc.mode(ki).lattice();
        let diff = [m[0] - kv[0], m[1] - kv[1], m[2] - kv[2]];
        if let Some(li) = lookup(trunc, diff) {
            if same_direction(kv, diff) {
                lists[0].push((ki as u32, li as u32));
            }
        }
        let l = reflect(diff);
        if let Some(li) = lookup(trunc, l) {
            if opposite_direction(kv, diff) && norm2(kv) > norm2(l) {
                lists[1].push((ki as u32, li as u32));
            }
        }
        let sk = reflect(kv);
        let l = [m[0] - sk[0], m[1] - sk[1], m[2] - sk[2]];
        if let Some(li) = lookup(trunc, l) {
            if opposite_direction(l, sk) && norm2(l) > norm2(kv) {
                lists[2].push((ki as u32, li as u32));
            }
        }
    }
    lists
}

#[inline]
fn lookup(trunc: &Truncation, l: Lattice) -> Option<usize> {
    if l[2] < 0 || l == [0, 0, 0] || !trunc.contains(l) {
        return None;
    }
    trunc.index(ModeIndex::new(l[0], l[1], l[2]).ok()?)
}

impl ResonantTriadSet {
    #[inline]
    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.trunc.k
    }

    /// Pairs of one class for the target with truncation index `m`.
    pub fn pairs(&self, m: usize, class: TriadClass) -> &[(u32, u32)] {
        &self.pairs[m][class.number() as usize - 1]
    }

    /// All `(class, m, k, l)` as lattice vectors, in target order.
    pub fn iter(&self) -> impl Iterator<Item = (TriadClass, Lattice, Lattice, Lattice)> + '_ {
        (0..self.trunc.len()).flat_map(move |mi| {
            TriadClass::ALL.into_iter().flat_map(move |c| {
                self.pairs(mi, c).iter().map(move |&(k, l)| {
                    (
                        c,
                        self.trunc.mode(mi).lattice(),
                        self.trunc.mode(k as usize).lattice(),
                        self.trunc.mode(l as usize).lattice(),
                    )
                })
            })
        })
    }

    /// Lattice pairs of each class for an arbitrary target, drawn from this truncation.
    pub fn pairs_for(&self, m: Lattice) -> [Vec<(Lattice, Lattice)>; 3] {
        class_lists(&self.trunc, m).map(|v| {
            v.into_iter()
                .map(|(k, l)| (self.trunc.mode(k as usize).lattice(), self.trunc.mode(l as usize).lattice()))
                .collect()
        })
    }

    pub fn total_pairs(&self) -> usize {
        self.pairs.iter().map(|p| p.iter().map(Vec::len).sum::<usize>()).sum()
    }

    /// Text dump, one `class m1 m2 m3 nu k1 k2 k3 l1 l2 l3` line per pair and output sign.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (c, m, k, l) in self.iter() {
            for nu in Sign::BOTH {
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {} {} {} {} {} {}",
                    c.number(),
                    m[0],
                    m[1],
                    m[2],
                    nu.symbol(),
                    k[0],
                    k[1],
                    k[2],
                    l[0],
                    l[1],
                    l[2]
                );
            }
        }
        s
    }

    /// `d_m^ν` for the target with truncation index `m`, over amplitudes in
    /// [`OscState`] slot layout.
    pub fn convolution<T: Scalar>(&self, amps: &[T], m: usize, nu: Sign) -> T {
        let (p, q) = (nu.slot(), nu.flip().slot());
        let mut acc = T::zero();
        for &(k, l) in self.pairs(m, TriadClass::Parallel) {
            acc += amps[2 * k as usize + p] * amps[2 * l as usize + p];
        }
        for &(k, l) in self.pairs(m, TriadClass::ReflectedSecond) {
            acc -= amps[2 * k as usize + p] * amps[2 * l as usize + q];
        }
        for &(k, l) in self.pairs(m, TriadClass::ReflectedFirst) {
            acc -= amps[2 * k as usize + q] * amps[2 * l as usize + p];
        }
        acc
    }
}

/// `d_m^α` of a state; `m` may carry either sign of `m3` since `d_m = d_{Sm}`.
pub fn filtered_convolution_d(set: &ResonantTriadSet, state: &OscState, m: Lattice, alpha: Sign) -> Result<Complex64> {
    if state.k() != set.k() {
        return Err(Error::InvalidParameter {
            field: "K",
            reason: "resonance set and state truncations differ".into(),
        });
    }
    let mode = ModeIndex::fold(m)?;
    let mi = set.trunc.index(mode).ok_or(Error::OutsideTruncation(m[0], m[1], m[2]))?;
    Ok(set.convolution(state.as_slice(), mi, alpha))
}

/// Contribution of the resonant self-interaction and the mean-flow drift to
/// `∂t b_m^α`, i.e. `-(γ+1)/8·c_*·i|m| d_m^α - i m_h·A b_m^α`.
pub fn nonlinear_tangent<T: Scalar>(
    set: &ResonantTriadSet,
    geom: &Geometry,
    gamma: f64,
    amps: &[T],
    drift: [f64; 2],
) -> Vec<T> {
    let coeff = (gamma + 1.0) / 8.0 * geom.c_star();
    let trunc = set.trunc;
    let per_mode = par::map_range(trunc.len(), |mi| {
        let w = WaveVector::of(geom, trunc.mode(mi).lattice());
        let adv = Complex64::new(0.0, -(w.k[0] * drift[0] + w.k[1] * drift[1]));
        Sign::BOTH.map(|nu| {
            let d = set.convolution(amps, mi, nu);
            d * Complex64::new(0.0, -coeff * w.norm) + amps[2 * mi + nu.slot()] * adv
        })
    });
    let mut out = Vec::with_capacity(2 * trunc.len());
    for pair in per_mode {
        out.extend(pair);
    }
    out
}

/// Filtered nonlinearity of `W_osc` in the presence of the mean flow, as a tangent state.
pub fn filtered_nonlinearity(set: &ResonantTriadSet, state: &OscState, mean: &MeanFlowState, gamma: f64) -> OscState {
    let amps = nonlinear_tangent(set, state.geometry(), gamma, state.as_slice(), mean.mean_horizontal());
    state.with_amplitudes(amps)
}

/// `Re Σ_{m,α} i|m| d_m^α conj(b_m^α)`, which vanishes identically.
pub fn energy_flux(set: &ResonantTriadSet, state: &OscState) -> f64 {
    let g = state.geometry();
    let mut acc = crate::sum::Neumaier::new();
    for mi in 0..set.trunc.len() {
        let w = WaveVector::of(g, set.trunc.mode(mi).lattice());
        for nu in Sign::BOTH {
            let d = set.convolution(state.as_slice(), mi, nu);
            acc.add((Complex64::new(0.0, w.norm) * d * state.as_slice()[2 * mi + nu.slot()].conj()).re);
        }
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::{sobolev_norm, MeanPreset};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn class_examples() {
        assert_eq!(triad_class([1, 0, 2], [1, 0, 2]).unwrap(), vec![(TriadClass::Parallel, [2, 0, 4])]);
        assert_eq!(triad_class([2, 0, 4], [-1, 0, 2]).unwrap(), vec![(TriadClass::ReflectedSecond, [1, 0, 2])]);
        assert!(triad_class([1, 0, 0], [0, 1, 0]).unwrap().is_empty());
        assert!(matches!(triad_class([0, 0, 0], [1, 0, 0]), Err(Error::ZeroMode)));
    }

    #[test]
    fn class_example_lengths_hold_in_floating_point() {
        let g = Geometry::unit();
        let n = |k: Lattice| WaveVector::of(&g, k).norm;
        assert!((n([2, 0, 4]) - n([-1, 0, 2]) - n([1, 0, 2])).abs() < 1e-14);
        assert!((n([1, 0, 0]) + n([0, 1, 0]) - n([1, 1, 0])).abs() > 0.5);
    }

    #[test]
    fn ray_target_in_k2() {
        let set = enumerate_resonances(2).unwrap();
        assert_eq!(set.pairs_for([2, 0, 4])[0], vec![([1, 0, 2], [1, 0, 2])]);
        let set = enumerate_resonances(4).unwrap();
        let mi = set.truncation().index(ModeIndex::new(2, 0, 4).unwrap()).unwrap();
        let pairs: Vec<_> = set
            .pairs(mi, TriadClass::Parallel)
            .iter()
            .map(|&(k, l)| (set.truncation().mode(k as usize).lattice(), set.truncation().mode(l as usize).lattice()))
            .collect();
        assert_eq!(pairs, vec![([1, 0, 2], [1, 0, 2])]);
    }

    #[test]
    fn single_ray_convolution() {
        let g = Geometry::unit();
        let m = ModeIndex::new(1, 0, 2).unwrap();
        let s = OscState::from_entries(g, 4, [(m, Sign::Plus, c(1.0))]).unwrap();
        let set = enumerate_resonances(4).unwrap();
        let d = filtered_convolution_d(&set, &s, [2, 0, 4], Sign::Plus).unwrap();
        assert!((d - c(1.0)).norm() < 1e-15);
        let mean = MeanFlowState::zeros(g, 1).unwrap();
        let t = filtered_nonlinearity(&set, &s, &mean, 1.4);
        let expect = Complex64::new(0.0, -(2.4 / 8.0) * g.c_star() * 20f64.sqrt());
        assert!((t.get(ModeIndex::new(2, 0, 4).unwrap(), Sign::Plus).unwrap() - expect).norm() < 1e-14);
        for (mode, a, v) in t.iter() {
            let fam = matches!(mode.lattice(), [2, 0, 4] | [-2, 0, 4]);
            if !fam {
                assert!(v.norm() < 1e-15, "{mode} {a:?} {v}");
            }
        }
    }

    #[test]
    fn vertical_mode_drift_vanishes() {
        let g = Geometry::unit();
        let m = ModeIndex::new(0, 0, 1).unwrap();
        let s = OscState::from_entries(g, 1, [(m, Sign::Plus, c(1.0))]).unwrap();
        let set = enumerate_resonances(1).unwrap();
        let amps = nonlinear_tangent(&set, &g, 1.4, s.as_slice(), [0.3, -0.2]);
        assert!(amps.iter().all(|v| v.norm() < 1e-15));
        let _ = MeanPreset::Zero;
    }

    #[test]
    fn geometry_does_not_enter_the_sets() {
        let a = enumerate_resonances(3).unwrap();
        let b = enumerate_resonances(3).unwrap();
        assert_eq!(a, b);
        assert!(a.total_pairs() > 0);
    }

    #[test]
    fn dump_has_one_line_per_pair_and_sign() {
        let set = enumerate_resonances(2).unwrap();
        assert_eq!(set.dump().lines().count(), 2 * set.total_pairs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn convolution_is_reflection_symmetric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = OscState::random(Geometry::unit(), 3, &mut rng, 1.0, 1.0).unwrap();
            let set = enumerate_resonances(3).unwrap();
            for m in set.truncation().modes() {
                for a in Sign::BOTH {
                    let d1 = filtered_convolution_d(&set, &s, m.lattice(), a).unwrap();
                    let d2 = filtered_convolution_d(&set, &s, reflect(m.lattice()), a).unwrap();
                    prop_assert_eq!(d1, d2);
                }
            }
        }

        #[test]
        fn energy_flux_vanishes(seed in any::<u64>(), a1 in 0.5f64..3.0, a2 in 0.5f64..3.0, a3 in 0.5f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Geometry::new(a1, a2, a3).unwrap();
            let s = OscState::random(g, 3, &mut rng, 1.0, 0.5).unwrap();
            let set = enumerate_resonances(3).unwrap();
            let e: f64 = s.energy();
            prop_assert!(energy_flux(&set, &s).abs() <= 1e-12 * e.powf(1.5) * 3.0);
            prop_assert!(sobolev_norm(&s, 0.0) > 0.0);
        }

        #[test]
        fn tangent_preserves_reality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Geometry::new(1.0, 2.0, 0.5).unwrap();
            let s = OscState::random(g, 2, &mut rng, 1.0, 0.5).unwrap();
            let set = enumerate_resonances(2).unwrap();
            let mean = MeanFlowState::preset(g, 1, MeanPreset::Random { amplitude: 1.0, seed }).unwrap();
            let t = filtered_nonlinearity(&set, &s, &mean, 1.4);
            prop_assert!(t.reality_defect().0 < 1e-13);
        }
    }
}
