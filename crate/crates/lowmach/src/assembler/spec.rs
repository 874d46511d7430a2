use crate::error::{Error, Result};
use crate::spectral_core::{GridSpec, PhysicalParams};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Nested levels of the approximate solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    /// Interior profile, acoustic layers and the eigen-corrector.
    A,
    /// Tier A plus the Prandtl-type layers.
    B,
    /// Tier B plus the interior corrector and the wall correctors.
    C,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::A, Tier::B, Tier::C];

    pub fn letter(self) -> char {
        match self {
            Tier::A => 'A',
            Tier::B => 'B',
            Tier::C => 'C',
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "A" | "a" => Some(Tier::A),
            "B" | "b" => Some(Tier::B),
            "C" | "c" => Some(Tier::C),
            _ => None,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Ingredients of the approximate solution, each owning one residual bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Interior,
    AcousticLayer,
    EigenCorrector,
    Prandtl,
    InteriorCorrector,
    WallCorrector,
    Nonlinear,
}

impl Term {
    pub const ALL: [Term; 7] = [
        Term::Interior,
        Term::AcousticLayer,
        Term::EigenCorrector,
        Term::Prandtl,
        Term::InteriorCorrector,
        Term::WallCorrector,
        Term::Nonlinear,
    ];

    /// Ingredients that carry a field (everything but the quadratic bucket).
    pub const FIELDS: [Term; 6] = [
        Term::Interior,
        Term::AcousticLayer,
        Term::EigenCorrector,
        Term::Prandtl,
        Term::InteriorCorrector,
        Term::WallCorrector,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Term::Interior => "R0_interior",
            Term::AcousticLayer => "R1_acoustic_layer",
            Term::EigenCorrector => "R2_eigen_corrector",
            Term::Prandtl => "R3_prandtl",
            Term::InteriorCorrector => "R4_interior_corrector",
            Term::WallCorrector => "R5_wall_corrector",
            Term::Nonlinear => "R6_nonlinear",
        }
    }

    pub fn min_tier(self) -> Tier {
        match self {
            Term::Interior | Term::AcousticLayer | Term::EigenCorrector | Term::Nonlinear => Tier::A,
            Term::Prandtl => Tier::B,
            Term::InteriorCorrector | Term::WallCorrector => Tier::C,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Term::ALL.into_iter().find(|t| t.label() == s || t.label()[3..] == *s)
    }
}

/// Discrete conormal norm `Σ_{|α|≤order, α0≤max_time} ‖Z^α f‖_{L²}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConormalSpec {
    pub order: usize,
    pub max_time: usize,
    /// Nodes in each `φ∂z` stencil.
    pub stencil: usize,
}

/// Largest order supported by the Taylor streams.
pub const MAX_CONORMAL_ORDER: usize = 3;
/// Largest number of `ε∂t` factors supported by the Taylor streams.
pub const MAX_TIME_ORDER: usize = 2;

impl Default for ConormalSpec {
    fn default() -> Self {
        Self { order: 3, max_time: 2, stencil: 5 }
    }
}

impl ConormalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order > MAX_CONORMAL_ORDER {
            return Err(Error::InvalidParameter {
                field: "conormal_order",
                reason: format!("at most {MAX_CONORMAL_ORDER}, got {}", self.order),
            });
        }
        if self.max_time > MAX_TIME_ORDER {
            return Err(Error::InvalidParameter {
                field: "conormal_time",
                reason: format!("at most {MAX_TIME_ORDER}, got {}", self.max_time),
            });
        }
        if self.stencil < 3 {
            return Err(Error::InvalidParameter { field: "stencil", reason: "needs at least 3 nodes".into() });
        }
        Ok(())
    }

    /// Multi-indices `(α0, α1, α2, α3)`.
    pub fn indices(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a3 in 0..=self.order {
            for a0 in 0..=self.max_time.min(self.order - a3) {
                for a1 in 0..=self.order - a3 - a0 {
                    for a2 in 0..=self.order - a3 - a0 - a1 {
                        out.push([a0, a1, a2, a3]);
                    }
                }
            }
        }
        out
    }
}

/// What to assemble and how to measure it.
#[derive(Clone, Debug, PartialEq)]
pub struct AssemblySpec {
    pub tier: Tier,
    pub params: PhysicalParams,
    pub grid: GridSpec,
    /// Horizontal box `|m1|,|m2| ≤ box_m` of every ingredient.
    pub box_m: usize,
    pub t_end: f64,
    /// Number of midpoint samples in `[0, T]`.
    pub samples: usize,
    pub disabled: BTreeSet<Term>,
    pub viscous: bool,
    pub conormal: ConormalSpec,
}

impl AssemblySpec {
    pub fn new(
        tier: Tier,
        params: PhysicalParams,
        grid: GridSpec,
        box_m: usize,
        t_end: f64,
        samples: usize,
    ) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(Error::InvalidParameter { field: "T", reason: format!("must be positive, got {t_end}") });
        }
        if samples == 0 {
            return Err(Error::InvalidParameter { field: "samples", reason: "need at least one time sample".into() });
        }
        if grid.geom != params.geometry() {
            return Err(Error::Grid("grid and parameters describe different boxes".into()));
        }
        Ok(Self {
            tier,
            params,
            grid,
            box_m,
            t_end,
            samples,
            disabled: BTreeSet::new(),
            viscous: true,
            conormal: ConormalSpec::default(),
        })
    }

    /// Midpoints of `samples` equal subintervals of `[0, T]`.
    pub fn sample_times(&self) -> Vec<f64> {
        let h = self.t_end / self.samples as f64;
        (0..self.samples).map(|i| (i as f64 + 0.5) * h).collect()
    }

    #[inline]
    pub fn sample_weight(&self) -> f64 {
        self.t_end / self.samples as f64
    }

    #[inline]
    pub fn enabled(&self, term: Term) -> bool {
        term.min_tier() <= self.tier && !self.disabled.contains(&term)
    }

    pub fn with_tier(&self, tier: Tier) -> Self {
        Self { tier, ..self.clone() }
    }

    pub fn without(mut self, term: Term) -> Self {
        self.disabled.insert(term);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_four_conormal_indices() {
        let idx = ConormalSpec::default().indices();
        assert_eq!(idx.len(), 34);
        assert!(idx.iter().all(|a| a.iter().sum::<usize>() <= 3 && a[0] <= 2));
    }

    #[test]
    fn tiers_nest() {
        assert!(Term::ALL.iter().filter(|t| t.min_tier() <= Tier::A).count() < Term::ALL.len());
        assert_eq!(Term::parse("prandtl"), Some(Term::Prandtl));
        assert_eq!(Tier::parse("c"), Some(Tier::C));
    }
}
