//! Acoustic boundary layers of width `√(εν)` cancelling the horizontal trace of
//! the interior acoustic field at each wall.

use crate::jet::{Jet, Scalar};
use crate::spectral_core::{ColumnField, OscState, PhysicalParams, Side, Sign, WaveVector, ZProfile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One decaying mode of a layer, in the units of the stretched variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub side: Side,
    pub k1: i32,
    pub k2: i32,
    pub k3: i32,
    pub sign: i8,
    pub stretch: f64,
    pub re_mu: f64,
    pub im_mu: f64,
}

impl LayerRecord {
    #[inline]
    pub fn mu(&self) -> Complex64 {
        Complex64::new(self.re_mu, self.im_mu)
    }

    #[inline]
    pub fn sign(&self) -> Sign {
        if self.sign > 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Layer attached to one wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub side: Side,
    pub stretch: f64,
    pub records: Vec<LayerRecord>,
}

/// Decay rate `√(|k|/(2μ1))(1 + αi)` in the stretched variable.
pub fn layer_rate(norm: f64, mu1: f64, sign: Sign) -> Complex64 {
    let r = (norm / (2.0 * mu1)).sqrt();
    Complex64::new(r, sign.value() * r)
}

/// Records of the bottom and top layers for every stored slot with `k_h ≠ 0`.
pub fn build_oscillating_layers(state: &OscState, params: &PhysicalParams) -> (LayerProfile, LayerProfile) {
    let g = *state.geometry();
    let delta = params.delta_osc();
    let mut out = Side::BOTH.map(|side| LayerProfile { side, stretch: delta, records: Vec::new() });
    for i in 0..state.n_modes() {
        let m = state.mode(i);
        let w = WaveVector::of(&g, m.lattice());
        if w.norm_h == 0.0 {
            continue;
        }
        for s in Sign::BOTH {
            let mu = layer_rate(w.norm, params.mu1, s);
            for p in out.iter_mut() {
                p.records.push(LayerRecord {
                    side: p.side,
                    k1: m.k1(),
                    k2: m.k2(),
                    k3: m.k3(),
                    sign: s.value() as i8,
                    stretch: delta,
                    re_mu: mu.re,
                    im_mu: mu.im,
                });
            }
        }
    }
    let [b, t] = out;
    (b, t)
}

impl LayerProfile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).unwrap_or_default()
    }

    /// Layer field at time `t` for amplitudes `amps` (use `b` for the layer itself,
    /// `∂t b` for its remainder source).
    pub fn field(&self, state: &OscState, amps: &[Jet], params: &PhysicalParams, t: f64) -> ColumnField {
        let g = *state.geometry();
        let cs = g.c_star();
        let delta = self.stretch;
        let trunc = state.truncation();
        let mut out = ColumnField::new();
        for r in &self.records {
            let k = [r.k1, r.k2, r.k3];
            let Some(idx) = crate::spectral_core::ModeIndex::new(r.k1, r.k2, r.k3).ok().and_then(|m| trunc.index(m))
            else {
                continue;
            };
            let sign = r.sign();
            let b = amps[state.slot(idx, sign)];
            if b.is_zero() {
                continue;
            }
            let w = WaveVector::of(&g, k);
            let wall = match self.side {
                Side::Bottom => 1.0,
                Side::Top => {
                    if r.k3 % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            let weight = if r.k3 > 0 { 2.0 } else { 1.0 };
            let amp = b.scale_re(weight) * Jet::phase(sign.value() * w.norm / params.eps, t);
            let mu = r.mu();
            let rate = mu / delta;
            let h = [-0.5 * cs * w.k[0] / w.norm * wall, -0.5 * cs * w.k[1] / w.norm * wall];
            let div = Complex64::new(0.0, w.k[0] * h[0] + w.k[1] * h[1]);
            let prof = ZProfile::Decay { rate, side: self.side };
            out.push([r.k1, r.k2], 1, amp.scale_re(h[0]), prof);
            out.push([r.k1, r.k2], 2, amp.scale_re(h[1]), prof);
            let v = match self.side {
                Side::Bottom => div * delta / mu,
                Side::Top => -div * delta / mu,
            };
            out.push([r.k1, r.k2], 3, amp.scale(v), prof);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::{ColumnSource, Geometry, LevelSpectrum, ModeIndex};

    fn single_mode() -> (OscState, PhysicalParams) {
        let g = Geometry::unit();
        let mut s = OscState::zeros(g, 2).unwrap();
        s.set(ModeIndex::new(1, 0, 2).unwrap(), Sign::Plus, Complex64::new(1.0, 0.0)).unwrap();
        (s, PhysicalParams::standard(1e-2, 1e-2).unwrap())
    }

    #[test]
    fn decay_rate_of_the_worked_example() {
        let (s, p) = single_mode();
        let (b, _) = build_oscillating_layers(&s, &p);
        let r = b.records.iter().find(|r| [r.k1, r.k2, r.k3] == [1, 0, 2] && r.sign == 1).unwrap();
        let expect = (5f64.sqrt() / 2.0).sqrt();
        assert!((r.re_mu - expect).abs() < 1e-14 && (r.im_mu - expect).abs() < 1e-14);
        assert!(b.records.iter().all(|r| r.re_mu > 0.0));
    }

    #[test]
    fn layer_cancels_the_horizontal_trace() {
        let (s, p) = single_mode();
        let amps: Vec<Jet> = s.as_slice().iter().map(|b| Jet::constant(*b)).collect();
        let g = *s.geometry();
        let (b, t) = build_oscillating_layers(&s, &p);
        let t0 = 0.3;
        let mut field = b.field(&s, &amps, &p, t0);
        field.extend(t.field(&s, &amps, &p, t0));
        let interior =
            crate::spectral_core::ModalField::<Complex64>::from_osc(&s, t0 / p.eps).map(|c| Jet::constant(*c));
        field.extend(ColumnField::from_modal(&g, &interior));
        for z in [0.0, g.a[2]] {
            let mut lvl = LevelSpectrum::zeros(2);
            field.add_level(&g, z, &mut lvl);
            for c in &lvl.val {
                assert!(c[1].value().norm() < 1e-14 && c[2].value().norm() < 1e-14);
            }
        }
    }
}
