use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar, JET_LEN};
use crate::spectral_core::modal::leray;
use crate::spectral_core::{Geometry, Lattice, MeanFlowState, ModalField, WaveVector};
use num_complex::Complex64;

/// Galerkin system `∂t v + P(v·∇v - μ1 Δ_h v) = 0` on a mean-flow box.
#[derive(Clone, Debug)]
pub struct InsSystem {
    geom: Geometry,
    k: usize,
    mu1: f64,
}

impl InsSystem {
    pub fn new(geom: Geometry, k: usize, mu1: f64) -> Result<Self> {
        if !(mu1 > 0.0) {
            return Err(Error::InvalidParameter { field: "mu1", reason: "must be positive".into() });
        }
        Ok(Self { geom, k, mu1 })
    }

    fn in_box(&self, m: &Lattice) -> bool {
        let k = self.k as i32;
        m[0].abs() <= k && m[1].abs() <= k && (0..=k).contains(&m[2])
    }

    fn rate(&self, m: Lattice) -> f64 {
        let w = WaveVector::of(&self.geom, m);
        self.mu1 * w.norm_h * w.norm_h
    }

    /// `-P(v·∇v)` restricted to the box, as mean-flow coefficients.
    pub fn nonlinear(&self, mean: &MeanFlowState) -> Result<Vec<[Complex64; 2]>> {
        let f = mean.to_modal();
        let q = f.q_form(&f, &self.geom, 0.0);
        let p = MeanFlowState::from_modal(self.geom, self.k, &q)?;
        Ok(p.as_slice().iter().map(|c| [-c[0], -c[1]]).collect())
    }

    /// Right-hand side on separated fields, with the viscous term included.
    pub fn modal_rhs<T: Scalar>(&self, v: &ModalField<T>) -> ModalField<T> {
        let q = v.q_form(v, &self.geom, 0.0);
        let mut out = ModalField::new();
        for (m, c) in q.iter() {
            if self.in_box(m) {
                let p = leray(&self.geom, *m, c);
                out.add(*m, [T::zero(), -p[1], -p[2], -p[3]]);
            }
        }
        for (m, c) in v.iter() {
            let r = -self.rate(*m);
            out.add(*m, [T::zero(), c[1] * r, c[2] * r, c[3] * r]);
        }
        out
    }

    /// One integrating-factor RK4 step; the horizontal viscosity is exact.
    pub fn step(&self, mean: &MeanFlowState, dt: f64) -> Result<MeanFlowState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter { field: "dt", reason: format!("must be positive, got {dt}") });
        }
        let modes: Vec<Lattice> = mean.modes().collect();
        let e: Vec<f64> = modes.iter().map(|m| (-self.rate(*m) * dt).exp()).collect();
        let eh: Vec<f64> = modes.iter().map(|m| (-self.rate(*m) * 0.5 * dt).exp()).collect();
        let b = mean.as_slice().to_vec();
        let n = b.len();
        let lin = |x: &[[Complex64; 2]], y: &[[Complex64; 2]], f: &dyn Fn(usize, Complex64, Complex64) -> Complex64| {
            (0..n).map(|i| [f(i, x[i][0], y[i][0]), f(i, x[i][1], y[i][1])]).collect::<Vec<_>>()
        };
        let h = dt;
        let k1 = self.nonlinear(mean)?;
        let s2 = lin(&b, &k1, &|i, x, y| (x + y * (0.5 * h)) * eh[i]);
        let k2 = self.nonlinear(&mean.with_coefficients(s2))?;
        let s3 = lin(&b, &k2, &|i, x, y| x * eh[i] + y * (0.5 * h));
        let k3 = self.nonlinear(&mean.with_coefficients(s3))?;
        let s4 = lin(&b, &k3, &|i, x, y| x * e[i] + y * (eh[i] * h));
        let k4 = self.nonlinear(&mean.with_coefficients(s4))?;
        let out: Vec<[Complex64; 2]> = (0..n)
            .map(|i| {
                let f = |q: usize| {
                    b[i][q] * e[i] + (k1[i][q] * e[i] + (k2[i][q] + k3[i][q]) * (2.0 * eh[i]) + k4[i][q]) * (h / 6.0)
                };
                [f(0), f(1)]
            })
            .collect();
        let mut next = mean.with_coefficients(out);
        next.t = mean.t + dt;
        Ok(next)
    }

    /// Separated representation of `v` with Taylor coefficients in time.
    pub fn jets(&self, mean: &MeanFlowState) -> ModalField<Jet> {
        let mut v = mean.to_modal().map(|c| Jet::constant(*c));
        for j in 0..JET_LEN - 1 {
            let rhs = self.modal_rhs(&v);
            let inv = 1.0 / (j as f64 + 1.0);
            for (m, c) in rhs.iter() {
                let lift = |x: &Jet| {
                    let mut y = Jet::zero();
                    y.0[j + 1] = x.0[j] * inv;
                    y
                };
                v.add(*m, [Jet::zero(), lift(&c[1]), lift(&c[2]), lift(&c[3])]);
            }
        }
        v
    }
}

/// Advances the mean flow with equal steps covering `[mean.t, t_end]`.
pub fn vins_advance(system: &InsSystem, mean: &MeanFlowState, t_end: f64, dt: f64) -> Result<MeanFlowState> {
    let span = t_end - mean.t;
    if span < 0.0 {
        return Err(Error::InvalidParameter { field: "t_end", reason: "lies before the state time".into() });
    }
    let n = (span / dt - 1e-9).ceil().max(0.0) as usize;
    let mut cur = mean.clone();
    if n > 0 {
        let h = span / n as f64;
        for _ in 0..n {
            cur = system.step(&cur, h)?;
        }
    }
    cur.t = t_end;
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::MeanPreset;

    #[test]
    fn zero_field_stays_zero() {
        let g = Geometry::unit();
        let s = InsSystem::new(g, 2, 1.0).unwrap();
        let m = MeanFlowState::zeros(g, 2).unwrap();
        let n = s.step(&m, 0.1).unwrap();
        assert_eq!(n.max_abs_diff(&m), 0.0);
    }

    #[test]
    fn taylor_green_is_exact() {
        let g = Geometry::new(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 1.0).unwrap();
        let s = InsSystem::new(g, 2, 1.0).unwrap();
        let m = MeanFlowState::preset(g, 2, MeanPreset::TaylorGreen { amplitude: 1.0 }).unwrap();
        let out = vins_advance(&s, &m, 0.5, 1e-3).unwrap();
        let exact = MeanFlowState::taylor_green_exact(g, 2, 1.0, 1.0, 0.5).unwrap();
        assert!(out.l2_distance(&exact) < 1e-6);
    }

    #[test]
    fn nonlinear_term_is_energy_neutral() {
        let g = Geometry::new(1.0, 1.5, 0.8).unwrap();
        let s = InsSystem::new(g, 2, 0.7).unwrap();
        let m = MeanFlowState::preset(g, 2, MeanPreset::Random { amplitude: 1.0, seed: 9 }).unwrap();
        let n = m.with_coefficients(s.nonlinear(&m).unwrap());
        let mut plus = m.clone();
        plus.axpy(1.0, &n);
        let mut minus = m.clone();
        minus.axpy(-1.0, &n);
        let flux = 0.5 * (plus.kinetic_energy() - minus.kinetic_energy());
        assert!(flux.abs() < 1e-12 * (1.0 + m.kinetic_energy()), "{flux}");
    }

    #[test]
    fn jets_start_with_the_rhs() {
        let g = Geometry::unit();
        let s = InsSystem::new(g, 2, 1.0).unwrap();
        let m = MeanFlowState::preset(g, 2, MeanPreset::Random { amplitude: 0.5, seed: 2 }).unwrap();
        let jets = s.jets(&m);
        let rhs = s.modal_rhs(&m.to_modal());
        for (k, c) in rhs.iter() {
            let j = jets.get(*k).unwrap();
            for q in 1..4 {
                assert!((j[q].0[1] - c[q]).norm() < 1e-12);
            }
        }
    }
}
