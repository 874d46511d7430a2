use super::is_resonant;
use crate::error::Result;
use crate::par;
use crate::spectral_core::lattice::{add, reflect, Sign, Truncation, WaveVector};
use crate::spectral_core::Geometry;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

/// Nonzero resonance defects `ω = α|k| + β|l| - γ|m|` over triads inside a truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallDivisorReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub min_omega: f64,
    /// Least-squares slope of `-ln ω_min(k,l)` against `ln((1+|k|)(1+|l|))`.
    pub r0_fit: f64,
    /// Decade bins of `|ω|`.
    pub histogram: Vec<HistogramBin>,
}

struct PairScan {
    min: f64,
    decades: Vec<(i32, u64)>,
    fit_x: f64,
    fit_y: f64,
}

/// Scans every ordered pair `(k, l)` of the half lattice, both placements `l`
/// and `Sl`, and all eight sign patterns, keeping targets inside the truncation.
pub fn small_divisor_probe(geom: &Geometry, k: usize) -> Result<SmallDivisorReport> {
    let trunc = Truncation::new(k)?;
    let modes: Vec<_> = trunc.modes().map(|m| m.lattice()).collect();
    let norms: Vec<f64> = modes.iter().map(|&m| WaveVector::of(geom, m).norm).collect();
    let rows = par::map_range(modes.len(), |ki| {
        let kv = modes[ki];
        let mut out = Vec::new();
        for (li, &lv) in modes.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut decades: Vec<(i32, u64)> = Vec::new();
            let placements = if lv[2] == 0 { vec![lv] } else { vec![lv, reflect(lv)] };
            for lp in placements {
                let m = add(kv, lp);
                if m == [0, 0, 0] || !trunc.contains(m) {
                    continue;
                }
                let nm = WaveVector::of(geom, m).norm;
                for a in Sign::BOTH {
                    for b in Sign::BOTH {
                        for g in Sign::BOTH {
                            if is_resonant(kv, a, lp, b, g) {
                                continue;
                            }
                            let w = (a.value() * norms[ki] + b.value() * norms[li] - g.value() * nm).abs();
                            best = best.min(w);
                            let d = w.log10().floor() as i32;
                            match decades.iter_mut().find(|(e, _)| *e == d) {
                                Some((_, c)) => *c += 1,
                                None => decades.push((d, 1)),
                            }
                        }
                    }
                }
            }
            if best.is_finite() {
                out.push(PairScan {
                    min: best,
                    decades,
                    fit_x: ((1.0 + norms[ki]) * (1.0 + norms[li])).ln(),
                    fit_y: -best.ln(),
                });
            }
        }
        out
    });
    let mut min_omega = f64::INFINITY;
    let mut counts = std::collections::BTreeMap::<i32, u64>::new();
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in rows.iter().flatten() {
        min_omega = min_omega.min(p.min);
        for &(d, c) in &p.decades {
            *counts.entry(d).or_default() += c;
        }
        n += 1.0;
        sx += p.fit_x;
        sy += p.fit_y;
        sxx += p.fit_x * p.fit_x;
        sxy += p.fit_x * p.fit_y;
    }
    let denom = n * sxx - sx * sx;
    let r0_fit = if n >= 2.0 && denom.abs() > 0.0 { (n * sxy - sx * sy) / denom } else { 0.0 };
    let histogram = counts
        .into_iter()
        .map(|(d, count)| HistogramBin { lower: 10f64.powi(d), upper: 10f64.powi(d + 1), count })
        .collect();
    Ok(SmallDivisorReport { k, min_omega, r0_fit, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_k1_minimum() {
        let r = small_divisor_probe(&Geometry::unit(), 1).unwrap();
        assert!(r.min_omega > 0.0);
        assert!(r.min_omega <= 2.0 - 2f64.sqrt() + 1e-12);
        assert!(r.histogram.iter().map(|b| b.count).sum::<u64>() > 0);
    }

    #[test]
    fn minimum_shrinks_with_truncation() {
        let g = Geometry::new(1.0, 3.0, 2f64.sqrt()).unwrap();
        let a = small_divisor_probe(&g, 2).unwrap();
        let b = small_divisor_probe(&g, 3).unwrap();
        assert!(b.min_omega <= a.min_omega);
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains("\"K\":3") && json.contains("r0_fit"));
    }
}
