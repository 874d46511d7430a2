use super::dft::HorizontalDft;
use super::grid::{GridField, GridSpec, Vertical};
use super::lattice::{ModeIndex, Sign};
use super::mean::MeanFlowState;
use super::modal::{eigen_component, project, vertical_mass, ModalField};
use super::osc::OscState;
use super::params::Geometry;
use crate::error::{Error, Result};
use crate::par;
use num_complex::Complex64;
use std::f64::consts::PI;

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn horizontal_extent(field: &ModalField<Complex64>) -> usize {
    field.iter().map(|(m, _)| m[0].unsigned_abs().max(m[1].unsigned_abs()) as usize).max().unwrap_or(0)
}

/// Samples a separated field on a grid, keeping the real part.
pub fn modal_to_grid(field: &ModalField<Complex64>, spec: &GridSpec) -> GridField {
    let m = horizontal_extent(field);
    let dft = HorizontalDft::new(spec.n1, spec.n2, m);
    let plane = spec.n1 * spec.n2;
    let sc = spec.geom.scale();
    let levels: Vec<[Vec<f64>; 4]> = par::map_slice(spec.z(), |&z| {
        let mut specs = [(); 4].map(|_| vec![CZERO; dft.spec_len()]);
        for (k, c) in field.iter() {
            let (s, co) = (sc[2] * k[2] as f64 * z).sin_cos();
            let i = dft.spec_index(k[0], k[1]);
            for q in 0..3 {
                specs[q][i] += c[q] * co;
            }
            specs[3][i] += c[3] * s;
        }
        let mut buf = vec![CZERO; plane];
        specs.map(|sp| {
            dft.inverse(&sp, &mut buf);
            buf.iter().map(|v| v.re).collect()
        })
    });
    let mut out = GridField::zeros(spec);
    for (iz, lv) in levels.into_iter().enumerate() {
        for c in 0..4 {
            out.data[c][iz * plane..(iz + 1) * plane].copy_from_slice(&lv[c]);
        }
    }
    out
}

/// `U = Σ w_k b_k^α N_k^α e^{iα|k|τ} + (σ0, v)` sampled on the grid.
pub fn synthesize(osc: &OscState, mean: &MeanFlowState, tau: f64, grid: &GridSpec) -> Result<GridField> {
    osc.check_reality(1e-12)?;
    let mut f = ModalField::from_osc(osc, tau);
    f.axpy(Complex64::new(1.0, 0.0), &mean.to_modal());
    Ok(modal_to_grid(&f, grid))
}

/// Inverse of [`synthesize`] on a uniform vertical grid: returns the acoustic
/// amplitudes and the solenoidal remainder.
pub fn analyze(field: &GridField, k_osc: usize, k_mean: usize) -> Result<(OscState, MeanFlowState)> {
    let spec = &field.spec;
    let intervals = match spec.vertical {
        Vertical::Uniform { intervals } => intervals,
        Vertical::Layered { .. } => return Err(Error::Grid("analysis needs a uniform vertical grid".into())),
    };
    let kmax = k_osc.max(k_mean);
    if spec.n1 < 2 * kmax + 1 || spec.n2 < 2 * kmax + 1 || intervals < 2 * kmax + 1 {
        return Err(Error::Grid(format!("grid too coarse for truncation {kmax}")));
    }
    let g = spec.geom;
    let modal = grid_to_modal(field, kmax as i32);
    let mut osc = OscState::zeros(g, k_osc)?;
    let mut rest = ModalField::new();
    for (m, c) in modal.iter() {
        let inside = m.iter().all(|v| v.unsigned_abs() as usize <= k_osc);
        if *m == [0, 0, 0] || !inside {
            rest.add(*m, *c);
            continue;
        }
        let mode = ModeIndex::new(m[0], m[1], m[2])?;
        let p = project(&g, *m, c);
        let i = osc.truncation().index(mode).expect("inside");
        let w = mode.weight();
        osc.as_mut_slice()[2 * i + Sign::Plus.slot()] = p.plus / w;
        osc.as_mut_slice()[2 * i + Sign::Minus.slot()] = p.minus / w;
        rest.add(*m, p.kernel);
    }
    let mean = MeanFlowState::from_modal(g, k_mean, &rest)?;
    Ok((osc, mean))
}

/// Separated coefficients `|m1|,|m2|,m3 ≤ kmax` by horizontal DFT and vertical trapezoid quadrature.
pub fn grid_to_modal(field: &GridField, kmax: i32) -> ModalField<Complex64> {
    let spec = &field.spec;
    let dft = HorizontalDft::new(spec.n1, spec.n2, kmax as usize);
    let plane = spec.n1 * spec.n2;
    let nz = spec.nz();
    let mut hat = [(); 4].map(|_| vec![CZERO; nz * dft.spec_len()]);
    let mut buf = vec![CZERO; plane];
    let mut out = vec![CZERO; dft.spec_len()];
    for iz in 0..nz {
        for c in 0..4 {
            for (b, v) in buf.iter_mut().zip(&field.data[c][iz * plane..(iz + 1) * plane]) {
                *b = Complex64::new(*v, 0.0);
            }
            dft.forward(&buf, &mut out);
            hat[c][iz * dft.spec_len()..(iz + 1) * dft.spec_len()].copy_from_slice(&out);
        }
    }
    let sc = spec.geom.scale();
    let a3 = spec.geom.a[2];
    let mut f = ModalField::new();
    for m1 in -kmax..=kmax {
        for m2 in -kmax..=kmax {
            let i = dft.spec_index(m1, m2);
            for m3 in 0..=kmax {
                let (ic, is) = vertical_mass(a3, m3);
                let mut c = [CZERO; 4];
                for (iz, (&z, &w)) in spec.z().iter().zip(spec.z_weights()).enumerate() {
                    let (s, co) = (sc[2] * m3 as f64 * z).sin_cos();
                    for q in 0..3 {
                        c[q] += hat[q][iz * dft.spec_len() + i] * (w * co);
                    }
                    c[3] += hat[3][iz * dft.spec_len() + i] * (w * s);
                }
                for q in c.iter_mut().take(3) {
                    *q /= ic;
                }
                c[3] = if is > 0.0 { c[3] / is } else { CZERO };
                if c.iter().any(|v| v.norm() > 1e-300) {
                    f.add([m1, m2, m3], c);
                }
            }
        }
    }
    f
}

/// `‖N_k^α‖²_{L²(Ω)}`, equal to `1/4` for `k3 > 0` and `1/2` for `k3 = 0`.
pub fn eigenmode_norm_sqr(geom: &Geometry, mode: ModeIndex) -> f64 {
    let n = super::osc::eigen_coeffs(geom, mode.lattice(), Sign::Plus);
    let (ic, is) = vertical_mass(geom.a[2], mode.k3());
    geom.area() * ((n[0].norm_sqr() + n[1].norm_sqr() + n[2].norm_sqr()) * ic + n[3].norm_sqr() * is)
}

/// Coefficient of `N_m^γ` in a separated term (re-exported for callers of `analyze`).
pub fn eigen_coefficient(geom: &Geometry, mode: ModeIndex, sign: Sign, c: &[Complex64; 4]) -> Complex64 {
    eigen_component(geom, mode.lattice(), sign, c)
}

/// Vertical spectral differentiation on a uniform endpoint-inclusive grid.
#[derive(Clone, Debug)]
pub struct VerticalSpectral {
    n: usize,
    scale: f64,
}

impl VerticalSpectral {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        match spec.vertical {
            Vertical::Uniform { intervals } => Ok(Self { n: intervals, scale: PI / spec.geom.a[2] }),
            Vertical::Layered { .. } => Err(Error::Grid("spectral z-derivative needs a uniform grid".into())),
        }
    }

    /// Derivative of an even (cosine) column; the result is odd.
    pub fn d_cos(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let coef: Vec<f64> = (0..=n)
            .map(|q| {
                let mut acc = 0.0;
                for (j, v) in f.iter().enumerate() {
                    let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                    acc += w * v * (PI * (q * j) as f64 / n as f64).cos();
                }
                let norm = if q == 0 || q == n { 1.0 } else { 2.0 };
                acc * norm / n as f64
            })
            .collect();
        (0..=n)
            .map(|j| {
                -(1..n).map(|q| coef[q] * q as f64 * self.scale * (PI * (q * j) as f64 / n as f64).sin()).sum::<f64>()
            })
            .collect()
    }

    /// Derivative of an odd (sine) column; the result is even.
    pub fn d_sin(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let coef: Vec<f64> = (1..n)
            .map(|q| {
                let acc: f64 = (1..n).map(|j| f[j] * (PI * (q * j) as f64 / n as f64).sin()).sum();
                2.0 * acc / n as f64
            })
            .collect();
        (0..=n)
            .map(|j| {
                (1..n)
                    .map(|q| coef[q - 1] * q as f64 * self.scale * (PI * (q * j) as f64 / n as f64).cos())
                    .sum::<f64>()
            })
            .collect()
    }
}

/// `L(σ, u) = -(div u, ∇σ)` by spectral differentiation in all directions.
pub fn apply_l_grid(field: &GridField) -> Result<GridField> {
    let spec = &field.spec;
    let vs = VerticalSpectral::new(spec)?;
    let (n1, n2, nz) = (spec.n1, spec.n2, spec.nz());
    let plane = n1 * n2;
    let m = (n1.min(n2) - 1) / 2;
    let dft = HorizontalDft::new(n1, n2, m);
    let sc = spec.geom.scale();
    let mut out = GridField::zeros(spec);
    let mut buf = vec![CZERO; plane];
    let mut hat = vec![CZERO; dft.spec_len()];
    let mut dx = vec![CZERO; dft.spec_len()];
    let mut back = vec![CZERO; plane];
    // horizontal derivatives, level by level
    let hderiv = |c: usize,
                  dir: usize,
                  iz: usize,
                  buf: &mut Vec<Complex64>,
                  hat: &mut Vec<Complex64>,
                  dx: &mut Vec<Complex64>,
                  back: &mut Vec<Complex64>| {
        for (b, v) in buf.iter_mut().zip(&field.data[c][iz * plane..(iz + 1) * plane]) {
            *b = Complex64::new(*v, 0.0);
        }
        dft.forward(buf, hat);
        for m1 in -(m as i32)..=m as i32 {
            for m2 in -(m as i32)..=m as i32 {
                let i = dft.spec_index(m1, m2);
                let k = if dir == 0 { sc[0] * m1 as f64 } else { sc[1] * m2 as f64 };
                dx[i] = hat[i] * Complex64::new(0.0, k);
            }
        }
        dft.inverse(dx, back);
        back.iter().map(|v| v.re).collect::<Vec<f64>>()
    };
    for iz in 0..nz {
        let d1u1 = hderiv(1, 0, iz, &mut buf, &mut hat, &mut dx, &mut back);
        let d2u2 = hderiv(2, 1, iz, &mut buf, &mut hat, &mut dx, &mut back);
        let d1s = hderiv(0, 0, iz, &mut buf, &mut hat, &mut dx, &mut back);
        let d2s = hderiv(0, 1, iz, &mut buf, &mut hat, &mut dx, &mut back);
        for p in 0..plane {
            let g = iz * plane + p;
            out.data[0][g] = -(d1u1[p] + d2u2[p]);
            out.data[1][g] = -d1s[p];
            out.data[2][g] = -d2s[p];
        }
    }
    let mut col = vec![0.0; nz];
    for p in 0..plane {
        for (iz, c) in col.iter_mut().enumerate() {
            *c = field.data[3][iz * plane + p];
        }
        let dzu3 = vs.d_sin(&col);
        for (iz, c) in col.iter_mut().enumerate() {
            *c = field.data[0][iz * plane + p];
        }
        let dzs = vs.d_cos(&col);
        for iz in 0..nz {
            out.data[0][iz * plane + p] -= dzu3[iz];
            out.data[3][iz * plane + p] = -dzs[iz];
        }
    }
    Ok(out)
}
