use crate::jet::{Jet, Scalar};
use crate::spectral_core::column::Poly;
use crate::spectral_core::{
    eigen_coeffs, ColumnField, Geometry, Lattice, ModalField, OscState, PhysicalParams, Sign, WaveVector, ZProfile,
};
use num_complex::Complex64;

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Boundary-induced eigenvalue shift `λ^± = -2(1±i)/a3·√(μ1/2)·|k_h|²/|k|^{3/2}`.
pub fn lambda1(geom: &Geometry, mu1: f64, k: Lattice, sign: Sign) -> Complex64 {
    let w = WaveVector::of(geom, k);
    if w.norm_h == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mag = 2.0 / geom.a[2] * (0.5 * mu1).sqrt() * w.norm_h * w.norm_h / w.norm.powf(1.5);
    Complex64::new(-mag, -sign.value() * mag)
}

/// Corrector profile of one slot: `Ψ = (p, ∇(f(z) e^{ik_h·x_h}))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectorMode {
    pub mode: Lattice,
    pub sign: Sign,
    pub lambda: Complex64,
    /// Vertical profile `f`.
    pub f: ZProfile,
    /// Profiles of `(σ, u1, u2, u3)`; the horizontal ones include the factor `i k_j`.
    pub psi: [ZProfile; 4],
    /// `|∂z f(0) - required|`; zero in the closed-form branch.
    pub neumann_defect: f64,
}

fn scale_profile(p: &ZProfile, c: Complex64) -> ZProfile {
    match *p {
        ZProfile::PolyTrig { k, cos, sin } => {
            ZProfile::PolyTrig { k, cos: cos.map(|v| v * c), sin: sin.map(|v| v * c) }
        }
        ZProfile::Decay { .. } => *p,
    }
}

fn add_profiles(a: &ZProfile, b: &ZProfile) -> ZProfile {
    match (*a, *b) {
        (ZProfile::PolyTrig { k, cos: c1, sin: s1 }, ZProfile::PolyTrig { k: k2, cos: c2, sin: s2 }) if k == k2 => {
            let mut c = c1;
            let mut s = s1;
            for n in 0..4 {
                c[n] += c2[n];
                s[n] += s2[n];
            }
            ZProfile::PolyTrig { k, cos: c, sin: s }
        }
        _ => panic!("profiles with different frequencies cannot be merged"),
    }
}

/// Builds `Ψ_{k,1}^α`. For `k3 ≥ 1`, `f = αλc_*/(2k3)·sin(k3 z)(z - a3/2)`; for `k3 = 0`
/// the Neumann problem `f'' = αλc_*` is solved by the symmetric parabola and the
/// mismatch with the required wall flux is recorded.
pub fn corrector_mode(params: &PhysicalParams, mode: Lattice, sign: Sign) -> CorrectorMode {
    let g = params.geometry();
    let a3 = g.a[2];
    let cs = g.c_star();
    let w = WaveVector::of(&g, mode);
    let lambda = lambda1(&g, params.mu1, mode, sign);
    let al = sign.value();
    let src = lambda * (al * cs);
    let (f, neumann_defect) = if mode[2] != 0 {
        let a = src / (2.0 * w.k[2]);
        let sin: Poly = [a * (-0.5 * a3), a, CZERO, CZERO];
        (ZProfile::PolyTrig { k: w.k[2], cos: [CZERO; 4], sin }, 0.0)
    } else {
        let b = src * 0.5;
        let p: Poly = [b * (0.25 * a3 * a3), b * (-a3), b, CZERO];
        // required ∂z f(0) = -αλc_* a3/4, obtained -αλc_* a3/2
        (ZProfile::poly(p), (src * (0.25 * a3)).norm())
    };
    let p_part = scale_profile(&ZProfile::cos(w.k[2]), Complex64::new(0.0, 1.0) * lambda * (cs / (2.0 * w.norm)));
    let sigma = add_profiles(&p_part, &scale_profile(&f, Complex64::new(0.0, -al * w.norm)));
    let psi = [
        sigma,
        scale_profile(&f, Complex64::new(0.0, w.k[0])),
        scale_profile(&f, Complex64::new(0.0, w.k[1])),
        f.derivative(),
    ];
    CorrectorMode { mode, sign, lambda, f, psi, neumann_defect }
}

impl CorrectorMode {
    /// `max_z |f'' + k3² f - αλc_* cos(k3 z)|` on `n` uniform nodes.
    pub fn ode_residual(&self, geom: &Geometry, n: usize) -> f64 {
        let a3 = geom.a[2];
        let k3 = WaveVector::of(geom, self.mode).k[2];
        let src = self.lambda * (self.sign.value() * geom.c_star());
        (0..=n)
            .map(|j| {
                let z = a3 * j as f64 / n as f64;
                let v = self.f.eval(z, a3);
                (v[2] + v[0] * (k3 * k3) - src * (k3 * z).cos()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise defect of `(iα|k| - L)Ψ + λN = 0` at height `z` (horizontal phase factored out).
    pub fn identity_defect(&self, geom: &Geometry, z: f64) -> f64 {
        let a3 = geom.a[2];
        let w = WaveVector::of(geom, self.mode);
        let v: Vec<[Complex64; 3]> = self.psi.iter().map(|p| p.eval(z, a3)).collect();
        let n = eigen_coeffs(geom, self.mode, self.sign);
        let (s, c) = (w.k[2] * z).sin_cos();
        let nz = [n[0] * c, n[1] * c, n[2] * c, n[3] * s];
        let i = Complex64::new(0.0, 1.0);
        let om = i * (self.sign.value() * w.norm);
        let div = i * w.k[0] * v[1][0] + i * w.k[1] * v[2][0] + v[3][1];
        let grad = [i * w.k[0] * v[0][0], i * w.k[1] * v[0][0], v[0][1]];
        let r = [
            om * v[0][0] + div + self.lambda * nz[0],
            om * v[1][0] + grad[0] + self.lambda * nz[1],
            om * v[2][0] + grad[1] + self.lambda * nz[2],
            om * v[3][0] + grad[2] + self.lambda * nz[3],
        ];
        r.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// The eigen-corrector field `Σ w b Ψ e^{iα|k|t/ε}` and its damping source `Σ(-λ) w b N`.
#[derive(Clone, Debug)]
pub struct EigenCorrector {
    pub modes: Vec<CorrectorMode>,
    pub field: ColumnField,
    pub source: ModalField<Jet>,
    /// Largest recorded Neumann mismatch (nonzero only with `k3 = 0` modes present).
    pub neumann_defect: f64,
}

pub fn build_eigen_corrector(state: &OscState, amps: &[Jet], params: &PhysicalParams, t: f64) -> EigenCorrector {
    let g = *state.geometry();
    let mut modes = Vec::new();
    let mut field = ColumnField::new();
    let mut source = ModalField::new();
    let mut defect: f64 = 0.0;
    for i in 0..state.n_modes() {
        let m = state.mode(i);
        let w = WaveVector::of(&g, m.lattice());
        if w.norm_h == 0.0 {
            continue;
        }
        for s in Sign::BOTH {
            let b = amps[state.slot(i, s)];
            if b.is_zero() {
                continue;
            }
            let cm = corrector_mode(params, m.lattice(), s);
            let amp = b.scale_re(m.weight()) * Jet::phase(s.value() * w.norm / params.eps, t);
            let kh = [m.k1(), m.k2()];
            for (q, prof) in cm.psi.iter().enumerate() {
                field.push(kh, q, amp, *prof);
            }
            let n = eigen_coeffs(&g, m.lattice(), s);
            let c = amp.scale(-cm.lambda);
            source.add(m.lattice(), n.map(|v| c * v));
            defect = defect.max(cm.neumann_defect * b.lead().norm());
            modes.push(cm);
        }
    }
    EigenCorrector { modes, field, source, neumann_defect: defect }
}
