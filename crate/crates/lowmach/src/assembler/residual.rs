use super::compose::{compose, Composition, Trajectory};
use super::spec::{AssemblySpec, ConormalSpec, Term, Tier};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::par;
use crate::spectral_core::dft::HorizontalDft;
use crate::spectral_core::fd::derivative_stencils;
use crate::spectral_core::{Geometry, LevelSpectrum, PhysicalParams};
use crate::sum::Neumaier;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

/// Spectra `[(σ, u1, u2, u3)]` on the box `|m1|,|m2| ≤ m` at every grid level.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub m: usize,
    pub levels: Vec<Vec<[Jet; 4]>>,
}

impl Column {
    pub fn zeros(m: usize, nz: usize) -> Self {
        let side = 2 * m + 1;
        Self { m, levels: vec![vec![[Jet::zero(); 4]; side * side]; nz] }
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    #[inline]
    pub fn mode(&self, i: usize) -> [i32; 2] {
        let s = self.side();
        [(i / s) as i32 - self.m as i32, (i % s) as i32 - self.m as i32]
    }

    #[inline]
    pub fn index(&self, mh: [i32; 2]) -> Option<usize> {
        let m = self.m as i32;
        if mh[0].abs() > m || mh[1].abs() > m {
            return None;
        }
        Some((mh[0] + m) as usize * self.side() + (mh[1] + m) as usize)
    }

    /// `φ ∂z` by `width`-point differences across levels.
    pub fn conormal_z(&self, z: &[f64], width: usize) -> Column {
        let a3 = z[z.len() - 1];
        let st = derivative_stencils(z, width);
        let levels = par::map_range(z.len(), |j| {
            let (s, w) = &st[j];
            let phi = z[j] * (a3 - z[j]);
            let mut out = vec![[Jet::zero(); 4]; self.levels[j].len()];
            for (i, wi) in w.iter().enumerate() {
                let c = wi * phi;
                if c == 0.0 {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(&self.levels[s + i]) {
                    for q in 0..4 {
                        o[q] += v[q].scale_re(c);
                    }
                }
            }
            out
        });
        Column { m: self.m, levels }
    }
}

/// Norm of `total = Σ parts` with the attribution `⟨Z^α part, Z^α total⟩/‖Z^α total‖` per part.
/// Parts may live on smaller boxes than the total.
pub fn conormal_parts(
    geom: &Geometry,
    eps: f64,
    z: &[f64],
    wz: &[f64],
    spec: &ConormalSpec,
    parts: &[&Column],
) -> Result<(f64, Vec<f64>)> {
    spec.validate()?;
    if parts.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let nz = z.len();
    if parts.iter().any(|p| p.levels.len() != nz) || wz.len() != nz {
        return Err(Error::Grid("column height differs from the grid".into()));
    }
    let big = parts.iter().map(|p| p.m).max().unwrap_or(0);
    let mut total = Column::zeros(big, nz);
    let maps: Vec<Vec<Option<usize>>> =
        parts.iter().map(|p| (0..total.levels[0].len()).map(|i| p.index(total.mode(i))).collect()).collect();
    for (p, map) in parts.iter().zip(&maps) {
        for (tl, pl) in total.levels.iter_mut().zip(&p.levels) {
            for (i, src) in map.iter().enumerate() {
                if let Some(s) = src {
                    for q in 0..4 {
                        tl[i][q] += pl[*s][q];
                    }
                }
            }
        }
    }
    let sc = geom.scale();
    let area = geom.area();
    let idx = spec.indices();
    let mut norms = Vec::with_capacity(idx.len());
    let mut shares = vec![0.0; parts.len()];
    let mut cur_total = total;
    let mut cur_parts: Vec<Column> = parts.iter().map(|p| (*p).clone()).collect();
    for a3 in 0..=spec.order {
        if a3 > 0 {
            cur_total = cur_total.conormal_z(z, spec.stencil);
            cur_parts = cur_parts.iter().map(|c| c.conormal_z(z, spec.stencil)).collect();
        }
        let combos: Vec<[usize; 3]> = idx.iter().filter(|a| a[3] == a3).map(|a| [a[0], a[1], a[2]]).collect();
        if combos.is_empty() {
            continue;
        }
        // per level sums, reduced afterwards in level order
        let per_level = par::map_range(nz, |j| {
            let mut tot = vec![0.0; combos.len()];
            let mut ip = vec![vec![0.0; combos.len()]; parts.len()];
            let tl = &cur_total.levels[j];
            for (i, tv) in tl.iter().enumerate() {
                let mh = cur_total.mode(i);
                let k1 = (sc[0] * mh[0] as f64).powi(2);
                let k2 = (sc[1] * mh[1] as f64).powi(2);
                let mut a = [0.0; 3];
                for (j0, av) in a.iter_mut().enumerate().take(spec.max_time + 1) {
                    *av = tv.iter().map(|c| c.0[j0].norm_sqr()).sum();
                }
                let mut b = vec![[0.0; 3]; parts.len()];
                for (g, map) in maps.iter().enumerate() {
                    let Some(pi) = map[i] else { continue };
                    let pv = &cur_parts[g].levels[j][pi];
                    for j0 in 0..=spec.max_time {
                        b[g][j0] = (0..4).map(|q| (tv[q].0[j0].conj() * pv[q].0[j0]).re).sum();
                    }
                }
                for (ci, c) in combos.iter().enumerate() {
                    let w = k1.powi(c[1] as i32) * k2.powi(c[2] as i32);
                    if w == 0.0 {
                        continue;
                    }
                    tot[ci] += w * a[c[0]];
                    for g in 0..parts.len() {
                        ip[g][ci] += w * b[g][c[0]];
                    }
                }
            }
            (tot, ip)
        });
        for (ci, c) in combos.iter().enumerate() {
            let f0 = eps.powi(c[0] as i32) * (1..=c[0]).product::<usize>() as f64;
            let f2 = f0 * f0 * area;
            let mut n = Neumaier::new();
            let mut g_acc = vec![Neumaier::new(); parts.len()];
            for (j, (tot, ip)) in per_level.iter().enumerate() {
                n.add(wz[j] * tot[ci]);
                for g in 0..parts.len() {
                    g_acc[g].add(wz[j] * ip[g][ci]);
                }
            }
            let norm = (f2 * n.total()).max(0.0).sqrt();
            norms.push(norm);
            if norm > 0.0 {
                for g in 0..parts.len() {
                    shares[g] += f2 * g_acc[g].total() / norm;
                }
            }
        }
    }
    let mut acc = Neumaier::new();
    acc.extend(norms);
    Ok((acc.total(), shares))
}

/// Conormal norm of a single column.
pub fn conormal_norm(
    geom: &Geometry,
    eps: f64,
    z: &[f64],
    wz: &[f64],
    spec: &ConormalSpec,
    col: &Column,
) -> Result<f64> {
    conormal_parts(geom, eps, z, wz, spec, &[col]).map(|r| r.0)
}

/// `(∂t - L/ε)U - diag(0, div_ν𝓢)U` of one level, mode by mode.
pub fn linear_residual(geom: &Geometry, params: &PhysicalParams, lvl: &LevelSpectrum, viscous: bool) -> Vec<[Jet; 4]> {
    let sc = geom.scale();
    let inv_eps = 1.0 / params.eps;
    let i = Complex64::new(0.0, 1.0);
    (0..lvl.val.len())
        .map(|n| {
            let mh = lvl.mode(n);
            let k = [sc[0] * mh[0] as f64, sc[1] * mh[1] as f64];
            let kk = k[0] * k[0] + k[1] * k[1];
            let (v, d, dd) = (&lvl.val[n], &lvl.dz[n], &lvl.dzz[n]);
            let div = v[1].scale(i * k[0]) + v[2].scale(i * k[1]) + d[3];
            let mut r = [
                v[0].dt() + div.scale_re(inv_eps),
                v[1].dt() + v[0].scale(i * k[0] * inv_eps),
                v[2].dt() + v[0].scale(i * k[1] * inv_eps),
                v[3].dt() + d[0].scale_re(inv_eps),
            ];
            if viscous {
                let ddiv = d[1].scale(i * k[0]) + d[2].scale(i * k[1]) + dd[3];
                let grad_div = [div.scale(i * k[0]), div.scale(i * k[1]), ddiv];
                for q in 0..3 {
                    let lap = v[q + 1].scale_re(-params.mu1 * kk) + dd[q + 1].scale_re(params.mu1 * params.nu);
                    r[q + 1] -= lap + grad_div[q].scale_re(params.mu2);
                }
            }
            r
        })
        .collect()
}

/// Pointwise `Q(U, U)` on a dealiased horizontal grid.
#[derive(Clone, Debug)]
pub struct Quadratic {
    m: usize,
    pc: f64,
    k: Vec<[f64; 2]>,
    input: HorizontalDft,
    output: HorizontalDft,
}

impl Quadratic {
    /// Input box `m`, output box `2m`, grid `4m + 1`.
    pub fn new(geom: &Geometry, m: usize, pc: f64) -> Self {
        let n = 4 * m + 1;
        let side = 2 * m + 1;
        let sc = geom.scale();
        let k = (0..side * side)
            .map(|i| {
                let m1 = (i / side) as f64 - m as f64;
                let m2 = (i % side) as f64 - m as f64;
                [sc[0] * m1, sc[1] * m2]
            })
            .collect();
        Self { m, pc, k, input: HorizontalDft::new(n, n, m), output: HorizontalDft::new(n, n, 2 * m) }
    }

    #[inline]
    pub fn output_box(&self) -> usize {
        2 * self.m
    }

    pub fn eval(&self, lvl: &LevelSpectrum) -> Vec<[Jet; 4]> {
        assert_eq!(lvl.m, self.m);
        let npts = self.input.n1 * self.input.n2;
        let i = Complex64::new(0.0, 1.0);
        let grid = |spec: Vec<Jet>| -> Vec<Jet> {
            let mut g = vec![Jet::zero(); npts];
            self.input.inverse(&spec, &mut g);
            g
        };
        let comp = |src: &Vec<[Jet; 4]>, q: usize, d: Option<usize>| -> Vec<Jet> {
            grid(
                src.iter()
                    .zip(&self.k)
                    .map(|(v, k)| match d {
                        None => v[q],
                        Some(dir) => v[q].scale(i * k[dir]),
                    })
                    .collect(),
            )
        };
        let val: Vec<Vec<Jet>> = (0..4).map(|q| comp(&lvl.val, q, None)).collect();
        let dx: Vec<Vec<Jet>> = (0..4).map(|q| comp(&lvl.val, q, Some(0))).collect();
        let dy: Vec<Vec<Jet>> = (0..4).map(|q| comp(&lvl.val, q, Some(1))).collect();
        let dz: Vec<Vec<Jet>> = (0..4).map(|q| comp(&lvl.dz, q, None)).collect();
        let mut q_grid = vec![vec![Jet::zero(); npts]; 4];
        for p in 0..npts {
            let (s, u1, u2, u3) = (val[0][p], val[1][p], val[2][p], val[3][p]);
            for c in 0..4 {
                q_grid[c][p] = u1 * dx[c][p] + u2 * dy[c][p] + u3 * dz[c][p];
            }
            let div = dx[1][p] + dy[2][p] + dz[3][p];
            let sp = s.scale_re(self.pc);
            q_grid[0][p] += sp * div;
            q_grid[1][p] += sp * dx[0][p];
            q_grid[2][p] += sp * dy[0][p];
            q_grid[3][p] += sp * dz[0][p];
        }
        let side = 2 * self.output_box() + 1;
        let mut out = vec![[Jet::zero(); 4]; side * side];
        let mut buf = vec![Jet::zero(); side * side];
        for c in 0..4 {
            self.output.forward(&q_grid[c], &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                o[c] = *b;
            }
        }
        out
    }
}

/// One time sample of a residual report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub t: f64,
    pub conormal: f64,
    pub per_term: BTreeMap<String, f64>,
    /// `L²(Ω)` norm of each residual component (value stream).
    pub component_l2: [f64; 4],
    /// `‖u^a‖_{L²(∂Ω)}` summed over both walls.
    pub boundary_l2: f64,
    /// Largest `|u^a|` over the wall nodes.
    pub boundary_max: f64,
    /// `‖U^a - (0, v) - U_osc‖_{L²(Ω)}`.
    pub deviation_l2: f64,
}

/// Residual of one tier on `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub eps: f64,
    pub nu: f64,
    pub tier: Tier,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// `conormal + boundary_l1`.
    pub total: f64,
    /// `L¹_T` attribution per ingredient plus the boundary defect; sums to `total`.
    pub per_term: BTreeMap<String, f64>,
    pub boundary_max: f64,
    pub conormal: f64,
    pub boundary_l1: f64,
    /// `‖U^a - (0, v) - U_osc‖_{L²_T L²}`.
    pub deviation_l2t: f64,
    pub dropped_modes: usize,
    pub dropped_flux: f64,
    pub samples: Vec<SampleReport>,
}

impl ResidualReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// Sum of the attribution buckets.
    pub fn attribution_sum(&self) -> f64 {
        self.per_term.values().sum()
    }
}

/// Label of the boundary-defect bucket.
pub const BOUNDARY_TERM: &str = "boundary";

struct LevelOut {
    linear: Vec<Vec<[Jet; 4]>>,
    nonlinear: Vec<Vec<[Jet; 4]>>,
    /// Per tier `Σ|û|²` of the deviation from interior profile.
    deviation: Vec<f64>,
    dropped: usize,
}

fn tier_has(tier: Tier, spec: &AssemblySpec, term: Term) -> bool {
    term.min_tier() <= tier && spec.enabled(term)
}

fn evaluate_level(
    spec: &AssemblySpec,
    comp: &Composition,
    quad: &Quadratic,
    tiers: &[Tier],
    z: f64,
) -> (LevelOut, Vec<LevelSpectrum>) {
    let geom = spec.params.geometry();
    let m = spec.box_m;
    let mut dropped = 0;
    let lvls: Vec<LevelSpectrum> = comp
        .groups
        .iter()
        .map(|g| {
            let mut l = LevelSpectrum::zeros(m);
            use crate::spectral_core::ColumnSource;
            g.add_level(&geom, z, &mut l);
            dropped += l.dropped;
            l
        })
        .collect();
    let linear = lvls.iter().map(|l| linear_residual(&geom, &spec.params, l, spec.viscous)).collect();
    let mut nonlinear = Vec::with_capacity(tiers.len());
    let mut deviation = Vec::with_capacity(tiers.len());
    let mut totals = Vec::with_capacity(tiers.len());
    for &tier in tiers {
        let mut total = LevelSpectrum::zeros(m);
        let mut dev = LevelSpectrum::zeros(m);
        for (g, l) in comp.groups.iter().zip(&lvls) {
            if tier_has(tier, spec, g.term) {
                total.accumulate(l);
                if g.term != Term::Interior {
                    dev.accumulate(l);
                }
            }
        }
        deviation.push(dev.val.iter().flat_map(|v| v.iter().map(|c| c.value().norm_sqr())).sum());
        if spec.enabled(Term::Nonlinear) {
            nonlinear.push(quad.eval(&total));
        }
        totals.push(total);
    }
    (LevelOut { linear, nonlinear, deviation, dropped }, totals)
}

fn wall_norms(geom: &Geometry, lvl: &LevelSpectrum, dft: &HorizontalDft) -> (f64, f64) {
    let l2: f64 = lvl.val.iter().map(|v| (1..4).map(|q| v[q].value().norm_sqr()).sum::<f64>()).sum();
    let mut max: f64 = 0.0;
    let mut grid = vec![Complex64::new(0.0, 0.0); dft.n1 * dft.n2];
    let mut mag = vec![0.0; grid.len()];
    for q in 1..4 {
        let spec: Vec<Complex64> = lvl.val.iter().map(|v| v[q].value()).collect();
        dft.inverse(&spec, &mut grid);
        for (m, g) in mag.iter_mut().zip(&grid) {
            *m += g.norm_sqr();
        }
    }
    for m in mag {
        max = max.max(m.sqrt());
    }
    ((geom.area() * l2).sqrt(), max)
}

/// Residual reports of several tiers sharing one composition per sample.
pub fn residual_tiers(spec: &AssemblySpec, traj: &Trajectory, tiers: &[Tier]) -> Result<Vec<ResidualReport>> {
    spec.conormal.validate()?;
    if let Some(t) = tiers.iter().find(|t| **t > spec.tier) {
        return Err(Error::InvalidParameter {
            field: "tier",
            reason: format!("tier {t} exceeds the assembled tier {}", spec.tier),
        });
    }
    let times = spec.sample_times();
    if traj.times.len() != times.len() || traj.times.iter().zip(&times).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Grid("trajectory samples differ from the assembly sample times".into()));
    }
    let geom = spec.params.geometry();
    let z = spec.grid.z();
    let wz = spec.grid.z_weights();
    let nz = z.len();
    let quad = Quadratic::new(&geom, spec.box_m, spec.params.pressure_coeff());
    let wall_dft = HorizontalDft::new(spec.grid.n1, spec.grid.n2, spec.box_m);
    let weight = spec.sample_weight();
    let mut reports: Vec<ResidualReport> = tiers
        .iter()
        .map(|&tier| ResidualReport {
            eps: spec.params.eps,
            nu: spec.params.nu,
            tier,
            t_end: spec.t_end,
            total: 0.0,
            per_term: BTreeMap::new(),
            boundary_max: 0.0,
            conormal: 0.0,
            boundary_l1: 0.0,
            deviation_l2t: 0.0,
            dropped_modes: 0,
            dropped_flux: 0.0,
            samples: Vec::new(),
        })
        .collect();

    for (si, &t) in times.iter().enumerate() {
        let comp = compose(spec, traj, si)?;
        let outs = par::map_range(nz, |j| evaluate_level(spec, &comp, &quad, tiers, z[j]));
        let terms: Vec<Term> = comp.groups.iter().map(|g| g.term).collect();
        let mut linear_cols: Vec<Column> =
            terms.iter().map(|_| Column { m: spec.box_m, levels: Vec::with_capacity(nz) }).collect();
        let mut nonlinear_cols: Vec<Column> =
            tiers.iter().map(|_| Column { m: quad.output_box(), levels: Vec::with_capacity(nz) }).collect();
        let mut deviation = vec![Neumaier::new(); tiers.len()];
        let mut walls = Vec::new();
        let mut dropped = 0;
        for (j, (out, totals)) in outs.into_iter().enumerate() {
            for (c, l) in linear_cols.iter_mut().zip(out.linear) {
                c.levels.push(l);
            }
            for (c, l) in nonlinear_cols.iter_mut().zip(out.nonlinear) {
                c.levels.push(l);
            }
            for (d, v) in deviation.iter_mut().zip(&out.deviation) {
                d.add(wz[j] * v);
            }
            if j == 0 || j == nz - 1 {
                walls.push(totals.iter().map(|t| wall_norms(&geom, t, &wall_dft)).collect::<Vec<_>>());
            }
            dropped += out.dropped;
        }
        for (ti, &tier) in tiers.iter().enumerate() {
            let mut parts: Vec<&Column> = Vec::new();
            let mut labels: Vec<Term> = Vec::new();
            for (c, term) in linear_cols.iter().zip(&terms) {
                if tier_has(tier, spec, *term) {
                    parts.push(c);
                    labels.push(*term);
                }
            }
            if spec.enabled(Term::Nonlinear) {
                parts.push(&nonlinear_cols[ti]);
                labels.push(Term::Nonlinear);
            }
            let (norm, shares) = conormal_parts(&geom, spec.params.eps, z, wz, &spec.conormal, &parts)?;
            let component_l2 = component_norms(&geom, wz, &parts);
            let (b_l2, b_max) = walls.iter().fold((0.0, 0.0f64), |acc, w| (acc.0 + w[ti].0, acc.1.max(w[ti].1)));
            let mut per_term = BTreeMap::new();
            for (term, s) in labels.iter().zip(&shares) {
                per_term.insert(term.label().to_string(), *s);
            }
            let r = &mut reports[ti];
            for (k, v) in &per_term {
                *r.per_term.entry(k.clone()).or_insert(0.0) += weight * v;
            }
            r.conormal += weight * norm;
            r.boundary_l1 += weight * b_l2;
            r.boundary_max = r.boundary_max.max(b_max);
            r.deviation_l2t += weight * geom.area() * deviation[ti].total();
            r.dropped_modes += dropped;
            r.dropped_flux = r.dropped_flux.max(comp.dropped_flux);
            r.samples.push(SampleReport {
                t,
                conormal: norm,
                per_term,
                component_l2,
                boundary_l2: b_l2,
                boundary_max: b_max,
                deviation_l2: (geom.area() * deviation[ti].total()).sqrt(),
            });
        }
    }
    for r in &mut reports {
        r.deviation_l2t = r.deviation_l2t.sqrt();
        r.per_term.insert(BOUNDARY_TERM.to_string(), r.boundary_l1);
        r.total = r.conormal + r.boundary_l1;
    }
    Ok(reports)
}

/// Residual report of `spec.tier`.
pub fn residual(spec: &AssemblySpec, traj: &Trajectory) -> Result<ResidualReport> {
    residual_tiers(spec, traj, &[spec.tier]).map(|mut v| v.remove(0))
}

fn component_norms(geom: &Geometry, wz: &[f64], parts: &[&Column]) -> [f64; 4] {
    let big = parts.iter().map(|p| p.m).max().unwrap_or(0);
    let mut acc = [0.0; 4];
    for (j, w) in wz.iter().enumerate() {
        let mut total = Column::zeros(big, 1);
        for p in parts {
            for (i, v) in p.levels[j].iter().enumerate() {
                if let Some(ti) = total.index(p.mode(i)) {
                    for q in 0..4 {
                        total.levels[0][ti][q] += v[q];
                    }
                }
            }
        }
        for v in &total.levels[0] {
            for q in 0..4 {
                acc[q] += w * v[q].value().norm_sqr();
            }
        }
    }
    acc.map(|a| (geom.area() * a).sqrt())
}
