use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Periodic lengths `a1, a2` and slab height `a3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub a: [f64; 3],
}

impl Geometry {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        for (field, v) in [("a1", a1), ("a2", a2), ("a3", a3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter { field, reason: format!("must be positive, got {v}") });
            }
        }
        Ok(Self { a: [a1, a2, a3] })
    }

    /// The box `(2π, 2π, π)` on which lattice indices equal wavenumbers.
    pub fn unit() -> Self {
        Self { a: [2.0 * PI, 2.0 * PI, PI] }
    }

    /// Factors mapping integer indices to wavenumbers.
    #[inline]
    pub fn scale(&self) -> [f64; 3] {
        [2.0 * PI / self.a[0], 2.0 * PI / self.a[1], PI / self.a[2]]
    }

    #[inline]
    pub fn volume(&self) -> f64 {
        self.a[0] * self.a[1] * self.a[2]
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.a[0] * self.a[1]
    }

    /// Normalisation constant of the eigenbasis, `1/√|Ω|`.
    #[inline]
    pub fn c_star(&self) -> f64 {
        self.volume().sqrt().recip()
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.a[2]
    }
}

/// Physical and asymptotic parameters of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub eps: f64,
    pub nu: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: f64,
}

impl PhysicalParams {
    pub fn new(a: [f64; 3], eps: f64, nu: f64, mu1: f64, mu2: f64, gamma: f64) -> Result<Self> {
        let p = Self { a1: a[0], a2: a[1], a3: a[2], eps, nu, mu1, mu2, gamma };
        p.validate()?;
        Ok(p)
    }

    /// Box `(2π, 2π, π)`, `μ1 = 1`, `μ2 = 1/2`, `γ = 1.4`.
    pub fn standard(eps: f64, nu: f64) -> Result<Self> {
        Self::new([2.0 * PI, 2.0 * PI, PI], eps, nu, 1.0, 0.5, 1.4)
    }

    pub fn validate(&self) -> Result<()> {
        Geometry::new(self.a1, self.a2, self.a3)?;
        let bad = |field: &'static str, reason: String| Err(Error::InvalidParameter { field, reason });
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad("eps", format!("must lie in (0,1], got {}", self.eps));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return bad("nu", format!("must lie in (0,1], got {}", self.nu));
        }
        if !(self.mu1 > 0.0 && self.mu1.is_finite()) {
            return bad("mu1", format!("must be positive, got {}", self.mu1));
        }
        if !(self.mu1 * self.nu + self.mu2 > 0.0 && self.mu2.is_finite()) {
            return bad("mu2", format!("requires mu1*nu + mu2 > 0, got mu2 = {}", self.mu2));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("must exceed 1, got {}", self.gamma));
        }
        Ok(())
    }

    #[inline]
    pub fn geometry(&self) -> Geometry {
        Geometry { a: [self.a1, self.a2, self.a3] }
    }

    #[inline]
    pub fn c_star(&self) -> f64 {
        self.geometry().c_star()
    }

    /// Acoustic layer thickness `√(εν)`.
    #[inline]
    pub fn delta_osc(&self) -> f64 {
        (self.eps * self.nu).sqrt()
    }

    /// Prandtl layer thickness `√ν`.
    #[inline]
    pub fn delta_prandtl(&self) -> f64 {
        self.nu.sqrt()
    }

    /// Target residual scale `ε + (εν)^¼ + ν^¾`.
    #[inline]
    pub fn eta(&self) -> f64 {
        eta(self.eps, self.nu)
    }

    /// Coefficient `(γ-1)/2` of the pressure nonlinearity.
    #[inline]
    pub fn pressure_coeff(&self) -> f64 {
        0.5 * (self.gamma - 1.0)
    }

    pub fn with_eps_nu(&self, eps: f64, nu: f64) -> Result<Self> {
        let p = Self { eps, nu, ..*self };
        p.validate()?;
        Ok(p)
    }
}

#[inline]
pub fn eta(eps: f64, nu: f64) -> f64 {
    eps + (eps * nu).powf(0.25) + nu.powf(0.75)
}
