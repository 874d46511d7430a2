use super::compose::{compose, Trajectory};
use super::residual::ResidualReport;
use super::spec::{AssemblySpec, Term, Tier};
use crate::error::{Error, Result};
use crate::par;
use crate::spectral_core::{eta, ColumnSource, LevelSpectrum};
use crate::sum::Neumaier;
use serde::Serialize;
use std::fmt::Write as _;

/// Smallest exponent of `η` along `ν = ε^κ`.
pub fn dominant_exponent(kappa: f64) -> f64 {
    1.0f64.min(0.25 * (1.0 + kappa)).min(0.75 * kappa)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub nu: f64,
    pub residual: f64,
}

/// Ratio slopes below this mean `residual/η` grows as `ε → 0`.
pub const VIOLATION_SLOPE: f64 = -0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// `ln ν / ln ε` fitted through the origin.
    pub kappa: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_ratio / min_ratio`.
    pub spread: f64,
    /// Slope of `ln residual` against `ln ε`.
    pub slope: f64,
    /// Exponent of the dominant `η` term on the sweep line.
    pub dominant_exponent: f64,
    /// Slope of `ln(residual/η)` against `ln ε`.
    pub ratio_slope: f64,
    pub violates: bool,
}

impl RateFit {
    pub fn bounded_within(&self, factor: f64) -> bool {
        self.spread <= factor
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn rate_fit(points: &[SweepPoint]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter {
            field: "sweep",
            reason: format!("need at least 3 points, got {}", points.len()),
        });
    }
    if points.iter().any(|p| !(p.eps > 0.0 && p.eps < 1.0 && p.nu > 0.0 && p.residual > 0.0)) {
        return Err(Error::InvalidParameter {
            field: "sweep",
            reason: "needs 0 < ε < 1, ν > 0 and positive residuals".into(),
        });
    }
    let le: Vec<f64> = points.iter().map(|p| p.eps.ln()).collect();
    if le.iter().all(|l| (l - le[0]).abs() < 1e-12) {
        return Err(Error::InvalidParameter { field: "sweep", reason: "all points share one ε".into() });
    }
    let ln: Vec<f64> = points.iter().map(|p| p.nu.ln()).collect();
    let kappa = le.iter().zip(&ln).map(|(a, b)| a * b).sum::<f64>() / le.iter().map(|a| a * a).sum::<f64>();
    let ratios: Vec<f64> = points.iter().map(|p| p.residual / eta(p.eps, p.nu)).collect();
    let max_ratio = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let lr: Vec<f64> = points.iter().map(|p| p.residual.ln()).collect();
    let lq: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let ratio_slope = ls_slope(&le, &lq);
    Ok(RateFit {
        kappa,
        spread: max_ratio / min_ratio,
        max_ratio,
        min_ratio,
        ratios,
        slope: ls_slope(&le, &lr),
        dominant_exponent: dominant_exponent(kappa),
        ratio_slope,
        violates: ratio_slope < VIOLATION_SLOPE,
    })
}

/// One row of a sweep table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub nu: f64,
    pub kappa: f64,
    pub tier: Tier,
    pub residual: f64,
    pub eta: f64,
    pub ratio: f64,
}

impl SweepRow {
    pub fn new(eps: f64, nu: f64, kappa: f64, tier: Tier, residual: f64) -> Self {
        let e = eta(eps, nu);
        Self { eps, nu, kappa, tier, residual, eta: e, ratio: residual / e }
    }
}

/// CSV with columns `eps,nu,kappa,tier,residual,eta,ratio`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("eps,nu,kappa,tier,residual,eta,ratio\n");
    for r in rows {
        let _ = writeln!(s, "{:e},{:e},{},{},{:e},{:e},{:e}", r.eps, r.nu, r.kappa, r.tier, r.residual, r.eta, r.ratio);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongReport {
    pub eps: f64,
    pub nu: f64,
    /// `‖U^a - (0, v) - U_osc‖_{L²_T L²}`.
    pub deviation: f64,
    /// `ε + ν^{1/4}`.
    pub deviation_envelope: f64,
    pub deviation_ratio: f64,
    /// `‖∇_h U_osc‖_{L²_T L²}`.
    pub grad_h: f64,
    /// `min(1, (ε/ν)^{1/4})`.
    pub grad_envelope: f64,
    pub grad_ratio: f64,
}

impl StrongReport {
    fn new(eps: f64, nu: f64, deviation: f64, grad_h: f64) -> Self {
        let de = eps + nu.powf(0.25);
        let ge = 1.0f64.min((eps / nu).powf(0.25));
        Self {
            eps,
            nu,
            deviation,
            deviation_envelope: de,
            deviation_ratio: deviation / de,
            grad_h,
            grad_envelope: ge,
            grad_ratio: grad_h / ge,
        }
    }
}

/// Both strong-convergence quantities, reusing the deviation of a residual report.
pub fn strong_from_report(report: &ResidualReport, traj: &Trajectory) -> StrongReport {
    StrongReport::new(report.eps, report.nu, report.deviation_l2t, traj.filtered.grad_h_l2t())
}

/// Both strong-convergence quantities at the samples of `spec`.
pub fn strong_convergence_check(spec: &AssemblySpec, traj: &Trajectory) -> Result<StrongReport> {
    let geom = spec.params.geometry();
    let z = spec.grid.z();
    let wz = spec.grid.z_weights();
    let mut acc = Neumaier::new();
    for i in 0..traj.times.len() {
        let comp = compose(spec, traj, i)?;
        let levels = par::map_range(z.len(), |j| {
            let mut l = LevelSpectrum::zeros(spec.box_m);
            for g in comp.groups.iter().filter(|g| g.term != Term::Interior) {
                g.add_level(&geom, z[j], &mut l);
            }
            l.val.iter().flat_map(|v| v.iter().map(|c| c.value().norm_sqr())).sum::<f64>()
        });
        for (w, v) in wz.iter().zip(levels) {
            acc.add(spec.sample_weight() * geom.area() * w * v);
        }
    }
    Ok(StrongReport::new(spec.params.eps, spec.params.nu, acc.total().sqrt(), traj.filtered.grad_h_l2t()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(kappa: f64, f: impl Fn(f64, f64) -> f64) -> Vec<SweepPoint> {
        [1e-2f64, 1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&eps| {
                let nu = eps.powf(kappa);
                SweepPoint { eps, nu, residual: f(eps, nu) }
            })
            .collect()
    }

    #[test]
    fn twice_eta_has_constant_ratio() {
        let fit = rate_fit(&line(1.0, |e, n| 2.0 * eta(e, n))).unwrap();
        assert!(fit.ratios.iter().all(|r| (r - 2.0).abs() < 1e-12));
        assert!((fit.spread - 1.0).abs() < 1e-12);
        assert!(!fit.violates);
        assert!((fit.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slow_decay_is_flagged() {
        let fit = rate_fit(&line(1.0, |e, _| e.powf(0.25))).unwrap();
        assert!(fit.violates, "{fit:?}");
        assert!(fit.spread > 5.0);
    }

    #[test]
    fn compliant_slope_matches_dominant_term() {
        let fit = rate_fit(&line(1.0, |e, n| (e * n).powf(0.25))).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert_eq!(fit.dominant_exponent, 0.5);
        assert!(!fit.violates);
    }

    #[test]
    fn short_sweeps_are_rejected() {
        let pts = line(1.0, eta);
        assert!(rate_fit(&pts[..1]).is_err());
        assert!(rate_fit(&pts[..2]).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = sweep_csv(&[SweepRow::new(1e-2, 1e-2, 1.0, Tier::C, 0.3)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("eps,nu,kappa,tier,residual,eta,ratio"));
        assert!(lines.next().unwrap().starts_with("1e-2,1e-2,1,C,3e-1,"));
    }
}
