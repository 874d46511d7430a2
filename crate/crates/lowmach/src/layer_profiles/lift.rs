//! Divergence-free correctors that restore the wall conditions left open by the
//! layers and the interior corrector.
//!
//! Oscillating horizontal traces are removed by Stokes layers of the exact rate
//! `√(iω/(εμ1ν))`; slow traces are removed by cubic lifts.

use super::eigen::corrector_mode;
use super::prandtl::PrandtlLayer;
use crate::filtered_dynamics::SecondCorrector;
use crate::jet::{Jet, Scalar};
use crate::spectral_core::column::{poly_reflect, real_poly, Poly};
use crate::spectral_core::{ColumnField, Geometry, OscState, PhysicalParams, Side, Sign, WaveVector, ZProfile};
use num_complex::Complex64;

/// Frequencies below this count as slow.
const SLOW_FREQ: f64 = 1e-9;

/// `g(z) = z²(z - a3)/a3²`: `g = g' = 0` at `0`, `g(a3) = 0`, `g'(a3) = 1`.
pub fn tangential_profile(a3: f64) -> Poly {
    real_poly([0.0, 0.0, -1.0 / a3, 1.0 / (a3 * a3)])
}

/// `h(z) = z²(3a3 - 2z)/a3³`: `h = h' = 0` at `0`, `h(a3) = 1`, `h'(a3) = 0`.
pub fn normal_profile(a3: f64) -> Poly {
    real_poly([0.0, 0.0, 3.0 / (a3 * a3), -2.0 / (a3 * a3 * a3)])
}

fn wall_poly(p: Poly, side: Side, a3: f64) -> ZProfile {
    match side {
        Side::Bottom => ZProfile::poly(poly_reflect(&p, a3)),
        Side::Top => ZProfile::poly(p),
    }
}

#[inline]
fn wall_cos(side: Side, m3: i32) -> f64 {
    if side == Side::Top && m3 % 2 != 0 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
fn wavenumber(geom: &Geometry, mh: [i32; 2]) -> [f64; 2] {
    let s = geom.scale();
    [s[0] * mh[0] as f64, s[1] * mh[1] as f64]
}

/// Cancels a horizontal trace `trace` on `side` without touching the other wall.
pub fn tangential_lift(geom: &Geometry, mh: [i32; 2], side: Side, trace: [Jet; 2], out: &mut ColumnField) {
    let a3 = geom.a[2];
    let k = wavenumber(geom, mh);
    let i = Complex64::new(0.0, 1.0);
    let g = wall_poly(tangential_profile(a3), side, a3);
    let dg = g.derivative();
    let div = trace[0].scale(i * k[0]) + trace[1].scale(i * k[1]);
    let (sh, s3) = match side {
        Side::Bottom => (1.0, -1.0),
        Side::Top => (-1.0, 1.0),
    };
    out.push(mh, 1, trace[0].scale_re(sh), dg);
    out.push(mh, 2, trace[1].scale_re(sh), dg);
    out.push(mh, 3, div.scale_re(s3), g);
}

/// Cancels a normal trace `value` on `side`; returns `false` for the horizontal mean,
/// whose net flux cannot be lifted.
pub fn normal_lift(geom: &Geometry, mh: [i32; 2], side: Side, value: Jet, out: &mut ColumnField) -> bool {
    if mh == [0, 0] {
        return false;
    }
    let a3 = geom.a[2];
    let k = wavenumber(geom, mh);
    let k2 = k[0] * k[0] + k[1] * k[1];
    let h = wall_poly(normal_profile(a3), side, a3);
    let dh = h.derivative();
    let c = -value;
    out.push(mh, 3, c, h);
    out.push(mh, 1, c.scale(Complex64::new(0.0, k[0] / k2)), dh);
    out.push(mh, 2, c.scale(Complex64::new(0.0, k[1] / k2)), dh);
    true
}

/// Horizontal wall trace oscillating as `e^{iωt/ε}`.
#[derive(Clone, Copy, Debug)]
pub struct OscTrace {
    pub side: Side,
    pub mh: [i32; 2],
    pub freq: f64,
    pub vel: [Jet; 2],
}

/// Stokes layer cancelling an oscillating trace, with the vertical part fixed by `div = 0`.
pub fn stokes_layer(params: &PhysicalParams, tr: &OscTrace, out: &mut ColumnField) {
    let g = params.geometry();
    let k = wavenumber(&g, tr.mh);
    let i = Complex64::new(0.0, 1.0);
    let rate = (Complex64::new(0.0, tr.freq / (params.eps * params.mu1 * params.nu))).sqrt();
    let prof = ZProfile::Decay { rate, side: tr.side };
    out.push(tr.mh, 1, -tr.vel[0], prof);
    out.push(tr.mh, 2, -tr.vel[1], prof);
    let div = tr.vel[0].scale(i * k[0]) + tr.vel[1].scale(i * k[1]);
    let s = match tr.side {
        Side::Bottom => -1.0,
        Side::Top => 1.0,
    };
    out.push(tr.mh, 3, div.scale(s / rate), prof);
}

/// Wall traces of `εV`, split into oscillating and slow parts.
pub fn corrector_traces(v: &SecondCorrector<Jet>, eps: f64, t: f64) -> (Vec<OscTrace>, Vec<OscTrace>) {
    let mut fast = Vec::new();
    let mut slow = Vec::new();
    for (m, freq, c) in &v.terms {
        if c[1].is_zero() && c[2].is_zero() {
            continue;
        }
        let ph = Jet::phase(freq / eps, t);
        for side in Side::BOTH {
            let f = eps * wall_cos(side, m[2]);
            let vel = [(c[1] * ph).scale_re(f), (c[2] * ph).scale_re(f)];
            let tr = OscTrace { side, mh: [m[0], m[1]], freq: *freq, vel };
            if freq.abs() < SLOW_FREQ {
                slow.push(tr);
            } else {
                fast.push(tr);
            }
        }
    }
    (fast, slow)
}

/// Wall traces of `√(εν)S`, nonzero only for flat modes `k3 = 0`.
pub fn eigen_traces(state: &OscState, amps: &[Jet], params: &PhysicalParams, t: f64) -> Vec<OscTrace> {
    let g = *state.geometry();
    let scale = params.delta_osc();
    let mut out = Vec::new();
    for i in 0..state.n_modes() {
        let m = state.mode(i);
        let w = WaveVector::of(&g, m.lattice());
        if m.k3() != 0 || w.norm_h == 0.0 {
            continue;
        }
        for s in Sign::BOTH {
            let b = amps[state.slot(i, s)];
            if b.is_zero() {
                continue;
            }
            let cm = corrector_mode(params, m.lattice(), s);
            let amp = b.scale_re(m.weight() * scale) * Jet::phase(s.value() * w.norm / params.eps, t);
            for side in Side::BOTH {
                let z = match side {
                    Side::Bottom => 0.0,
                    Side::Top => g.a[2],
                };
                let vel = [amp.scale(cm.psi[1].eval(z, g.a[2])[0]), amp.scale(cm.psi[2].eval(z, g.a[2])[0])];
                out.push(OscTrace { side, mh: [m.k1(), m.k2()], freq: s.value() * w.norm, vel });
            }
        }
    }
    out
}

/// Normal velocity left on a wall by the other ingredients.
#[derive(Clone, Copy, Debug)]
pub struct NormalTrace {
    pub side: Side,
    pub mh: [i32; 2],
    pub value: Jet,
}

/// Correctors of the highest tier.
#[derive(Clone, Debug, Default)]
pub struct WallCorrectors {
    /// Cubic lifts of the normal traces.
    pub normal_lift: ColumnField,
    /// Stokes layers for oscillating horizontal traces.
    pub stokes: ColumnField,
    /// Cubic lifts of slow horizontal traces.
    pub tangential_lift: ColumnField,
    /// Largest horizontal-mean normal flux that was left in place.
    pub dropped_flux: f64,
}

impl WallCorrectors {
    /// Horizontal correctors only; the normal lift follows from the traces they leave.
    pub fn tangential(params: &PhysicalParams, osc_traces: &[OscTrace], slow_traces: &[OscTrace]) -> Self {
        let g = params.geometry();
        let mut out = Self::default();
        for tr in osc_traces {
            stokes_layer(params, tr, &mut out.stokes);
        }
        for tr in slow_traces {
            tangential_lift(&g, tr.mh, tr.side, tr.vel, &mut out.tangential_lift);
        }
        out
    }

    pub fn lift_normal(&mut self, geom: &Geometry, traces: &[NormalTrace]) {
        for tr in traces {
            if !normal_lift(geom, tr.mh, tr.side, tr.value, &mut self.normal_lift) {
                self.dropped_flux = self.dropped_flux.max(tr.value.value().norm());
            }
        }
    }
}

/// Stokes layers and lifts for the given horizontal traces plus the slow normal traces of `layers`.
pub fn build_wall_correctors(
    params: &PhysicalParams,
    osc_traces: &[OscTrace],
    slow_traces: &[OscTrace],
    layers: &[&PrandtlLayer],
) -> WallCorrectors {
    let mut out = WallCorrectors::tangential(params, osc_traces, slow_traces);
    let normals: Vec<NormalTrace> = layers
        .iter()
        .flat_map(|l| l.slow_normal_trace().into_iter().map(|(mh, value)| NormalTrace { side: l.side, mh, value }))
        .collect();
    out.lift_normal(&params.geometry(), &normals);
    out
}
