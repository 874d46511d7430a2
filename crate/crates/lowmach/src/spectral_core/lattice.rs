use super::params::Geometry;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Signed integer lattice vector; the third entry may be negative.
pub type Lattice = [i32; 3];

/// Reflection `S(k) = (k1, k2, -k3)`.
#[inline]
pub const fn reflect(k: Lattice) -> Lattice {
    [k[0], k[1], -k[2]]
}

#[inline]
pub fn add(k: Lattice, l: Lattice) -> Lattice {
    [k[0] + l[0], k[1] + l[1], k[2] + l[2]]
}

#[inline]
pub fn norm2(k: Lattice) -> i64 {
    k.iter().map(|&x| (x as i64) * (x as i64)).sum()
}

/// Half-lattice representative `(k1, k2, k3)` with `k3 ≥ 0`, never zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex([i32; 3]);

impl ModeIndex {
    pub fn new(k1: i32, k2: i32, k3: i32) -> Result<Self> {
        if k1 == 0 && k2 == 0 && k3 == 0 {
            return Err(Error::ZeroMode);
        }
        if k3 < 0 {
            return Err(Error::InvalidParameter {
                field: "k3",
                reason: format!("half-lattice index must be nonnegative, got {k3}"),
            });
        }
        Ok(Self([k1, k2, k3]))
    }

    /// Folds a full-lattice vector onto the half lattice (`b_k = b_{Sk}`).
    pub fn fold(k: Lattice) -> Result<Self> {
        Self::new(k[0], k[1], k[2].abs())
    }

    #[inline]
    pub const fn k1(self) -> i32 {
        self.0[0]
    }
    #[inline]
    pub const fn k2(self) -> i32 {
        self.0[1]
    }
    #[inline]
    pub const fn k3(self) -> i32 {
        self.0[2]
    }
    #[inline]
    pub const fn lattice(self) -> Lattice {
        self.0
    }

    /// `(-k_h, k3)`, the index carrying the complex-conjugate partner.
    #[inline]
    pub fn conjugate(self) -> Self {
        Self([-self.0[0], -self.0[1], self.0[2]])
    }

    #[inline]
    pub fn has_horizontal(self) -> bool {
        self.0[0] != 0 || self.0[1] != 0
    }

    /// Multiplicity of the representative in the full lattice.
    #[inline]
    pub fn weight(self) -> f64 {
        if self.0[2] > 0 {
            2.0
        } else {
            1.0
        }
    }

    #[inline]
    pub fn max_abs(self) -> i32 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Branch `α ∈ {+,-}` of the acoustic spectrum `±i|k|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    #[inline]
    pub const fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    #[inline]
    pub const fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    #[inline]
    pub const fn slot(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" | "+1" | "1" => Some(Sign::Plus),
            "-" | "-1" => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// Physical wavevector of a lattice index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveVector {
    pub k: [f64; 3],
    pub norm: f64,
    pub norm_h: f64,
}

impl WaveVector {
    #[inline]
    pub fn of(geom: &Geometry, k: Lattice) -> Self {
        let s = geom.scale();
        let v = [s[0] * k[0] as f64, s[1] * k[1] as f64, s[2] * k[2] as f64];
        let h2 = v[0] * v[0] + v[1] * v[1];
        Self { k: v, norm: (h2 + v[2] * v[2]).sqrt(), norm_h: h2.sqrt() }
    }
}

/// Wavevector of a stored (nonzero) mode.
pub fn wavevector(geom: &Geometry, mode: ModeIndex) -> WaveVector {
    WaveVector::of(geom, mode.lattice())
}

/// Dense lexicographic enumeration of the half-lattice box `|k1|,|k2|,k3 ≤ K`
/// without the zero mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub k: usize,
}

impl Truncation {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter { field: "K", reason: "truncation must be at least 1".into() });
        }
        Ok(Self { k })
    }

    #[inline]
    fn side(&self) -> usize {
        2 * self.k + 1
    }

    #[inline]
    fn raw(&self, m: Lattice) -> usize {
        let k = self.k as i32;
        (((m[0] + k) as usize * self.side()) + (m[1] + k) as usize) * (self.k + 1) + m[2] as usize
    }

    #[inline]
    fn zero_raw(&self) -> usize {
        self.raw([0, 0, 0])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.side() * self.side() * (self.k + 1) - 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, m: Lattice) -> bool {
        let k = self.k as i32;
        m[0].abs() <= k && m[1].abs() <= k && m[2] >= 0 && m[2] <= k && m != [0, 0, 0]
    }

    /// Position of a mode in lexicographic order.
    #[inline]
    pub fn index(&self, m: ModeIndex) -> Option<usize> {
        let l = m.lattice();
        if !self.contains(l) {
            return None;
        }
        let r = self.raw(l);
        Some(if r > self.zero_raw() { r - 1 } else { r })
    }

    pub fn mode(&self, i: usize) -> ModeIndex {
        let r = if i >= self.zero_raw() { i + 1 } else { i };
        let k3 = (r % (self.k + 1)) as i32;
        let rest = r / (self.k + 1);
        let k2 = (rest % self.side()) as i32 - self.k as i32;
        let k1 = (rest / self.side()) as i32 - self.k as i32;
        ModeIndex([k1, k2, k3])
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wavevector_examples() {
        let w = wavevector(&Geometry::unit(), ModeIndex::new(1, 0, 2).unwrap());
        assert!((w.k[0] - 1.0).abs() < 1e-15 && (w.k[2] - 2.0).abs() < 1e-15);
        assert!((w.norm - 5f64.sqrt()).abs() < 1e-14);

        let w = wavevector(&Geometry::new(1.0, 1.0, 1.0).unwrap(), ModeIndex::new(1, 0, 0).unwrap());
        assert!((w.k[0] - 2.0 * PI).abs() < 1e-14 && w.k[1] == 0.0 && w.k[2] == 0.0);

        let w = wavevector(&Geometry::new(2.0 * PI, PI, PI).unwrap(), ModeIndex::new(0, 1, 3).unwrap());
        assert!((w.k[1] - 2.0).abs() < 1e-14 && (w.k[2] - 3.0).abs() < 1e-14);
        assert!((w.norm - 13f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_mode_rejected() {
        assert_eq!(ModeIndex::new(0, 0, 0), Err(Error::ZeroMode));
    }

    #[test]
    fn truncation_indexing_round_trips() {
        let t = Truncation::new(3).unwrap();
        assert_eq!(t.len(), 7 * 7 * 4 - 1);
        let mut prev = None;
        for i in 0..t.len() {
            let m = t.mode(i);
            assert_eq!(t.index(m), Some(i));
            if let Some(p) = prev {
                assert!(p < m);
            }
            prev = Some(m);
        }
    }
}
