//! Prandtl-type layer of width `√ν` for the mean flow.
//!
//! The slow layer `v(t, x_h, θ)` is solved on a graded `θ`-mesh with Crank–Nicolson
//! diffusion and explicit transport. The acoustic trace drives an `O(ε)` fast
//! response, which is added in closed form when the layer is sampled.

use crate::error::{Error, Result};
use crate::filtered_dynamics::InsSystem;
use crate::jet::{Jet, Scalar, JET_LEN};
use crate::spectral_core::fd::fd_weights;
use crate::spectral_core::{
    eigen_coeffs, ColumnSource, Geometry, LevelSpectrum, MeanFlowState, ModalField, OscState, PhysicalParams, Side,
    Sign, WaveVector,
};
use crate::sum::Neumaier;
use num_complex::Complex64;
use std::fmt::Write as _;

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
/// Relative far-field bound checked at `θ ≥ 0.9 θ_max`.
pub const DECAY_TOL: f64 = 1e-8;

/// Resolution of the layer solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrandtlGrid {
    /// Number of mesh intervals.
    pub intervals: usize,
    pub theta_max: f64,
    /// Geometric stretching `s` of `θ_j = θ_max (e^{s j/n} - 1)/(e^s - 1)`.
    pub stretch: f64,
    pub dt: f64,
    /// `κ` of the monitor weight `e^{2κθ²}`.
    pub monitor_kappa: f64,
}

impl Default for PrandtlGrid {
    fn default() -> Self {
        Self { intervals: 200, theta_max: 20.0, stretch: 3.0, dt: 1e-3, monitor_kappa: 0.25 }
    }
}

#[derive(Clone, Copy, Debug)]
struct Stencil {
    start: usize,
    w: [f64; 4],
    len: usize,
}

impl Stencil {
    #[inline]
    fn apply<T: Scalar>(&self, f: &dyn Fn(usize) -> T) -> T {
        let mut acc = T::zero();
        for i in 0..self.len {
            acc += f(self.start + i) * self.w[i];
        }
        acc
    }
}

/// Graded mesh on `[0, θ_max]` with second-order difference stencils.
#[derive(Clone, Debug)]
pub struct ThetaMesh {
    theta: Vec<f64>,
    theta_max: f64,
    stretch: f64,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
}

impl ThetaMesh {
    pub fn new(intervals: usize, theta_max: f64, stretch: f64) -> Result<Self> {
        if intervals < 8 || !(theta_max > 0.0) || !(stretch > 0.0) {
            return Err(Error::Grid(format!(
                "theta mesh needs ≥ 8 intervals and positive extent/stretch, got {intervals}, {theta_max}, {stretch}"
            )));
        }
        let n = intervals;
        let den = stretch.exp_m1();
        let theta: Vec<f64> = (0..=n).map(|j| theta_max * (stretch * j as f64 / n as f64).exp_m1() / den).collect();
        let stencil = |j: usize, start: usize, len: usize, order: usize| {
            let w = fd_weights(theta[j], &theta[start..start + len], 2);
            let mut arr = [0.0; 4];
            arr[..len].copy_from_slice(&w[order]);
            Stencil { start, w: arr, len }
        };
        let mut d1 = Vec::with_capacity(n + 1);
        let mut d2 = Vec::with_capacity(n + 1);
        for j in 0..=n {
            if j == 0 {
                d1.push(stencil(0, 0, 3, 1));
                d2.push(stencil(0, 0, 4, 2));
            } else if j == n {
                d1.push(stencil(n, n - 2, 3, 1));
                d2.push(stencil(n, n - 3, 4, 2));
            } else {
                d1.push(stencil(j, j - 1, 3, 1));
                d2.push(stencil(j, j - 1, 3, 2));
            }
        }
        Ok(Self { theta, theta_max, stretch, d1, d2 })
    }

    #[inline]
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    #[inline]
    pub fn intervals(&self) -> usize {
        self.theta.len() - 1
    }

    #[inline]
    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    /// Spline parameter (node units) of `θ` with its first two derivatives.
    fn param(&self, theta: f64) -> (f64, f64, f64) {
        let n = self.intervals() as f64;
        let b = self.stretch.exp_m1() / self.theta_max;
        let q = 1.0 + b * theta;
        (n * q.ln() / self.stretch, n * b / (self.stretch * q), -n * b * b / (self.stretch * q * q))
    }

    /// Cumulative tail integrals `∫_{θ_j}^{θ_max} f` by the trapezoid rule.
    fn tail<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let n = self.intervals();
        let mut out = vec![T::zero(); n + 1];
        for j in (0..n).rev() {
            let h = self.theta[j + 1] - self.theta[j];
            out[j] = out[j + 1] + (f[j] + f[j + 1]) * (0.5 * h);
        }
        out
    }
}

/// Natural cubic spline on unit-spaced knots `0..=n`.
#[derive(Clone, Debug)]
struct Spline<T> {
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Scalar> Spline<T> {
    fn new(y: Vec<T>) -> Self {
        let n = y.len() - 1;
        let mut m = vec![T::zero(); n + 1];
        if n >= 2 {
            // M_{j-1} + 4 M_j + M_{j+1} = 6 (y_{j+1} - 2y_j + y_{j-1}), M_0 = M_n = 0
            let mut cp = vec![0.0; n];
            let mut dp = vec![T::zero(); n];
            for j in 1..n {
                let rhs = (y[j + 1] - y[j] * 2.0 + y[j - 1]) * 6.0;
                let (a, b) = (1.0, 4.0);
                let denom = b - a * cp[j - 1];
                cp[j] = 1.0 / denom;
                dp[j] = (rhs - dp[j - 1] * a) * (1.0 / denom);
            }
            for j in (1..n).rev() {
                m[j] = dp[j] - m[j + 1] * cp[j];
            }
        }
        Self { y, m }
    }

    /// `[S, S_u, S_uu]` at parameter `u ∈ [0, n]`.
    fn eval(&self, u: f64) -> [T; 3] {
        let n = self.y.len() - 1;
        let j = (u.floor() as usize).min(n - 1);
        let a = (j + 1) as f64 - u;
        let b = u - j as f64;
        let (y0, y1, m0, m1) = (self.y[j], self.y[j + 1], self.m[j], self.m[j + 1]);
        let c0 = y0 - m0 * (1.0 / 6.0);
        let c1 = y1 - m1 * (1.0 / 6.0);
        let s = m0 * (a * a * a / 6.0) + m1 * (b * b * b / 6.0) + c0 * a + c1 * b;
        let d = m1 * (0.5 * b * b) - m0 * (0.5 * a * a) + c1 - c0;
        let dd = m0 * a + m1 * b;
        [s, d, dd]
    }
}

/// Boundary data of the mean flow in the frame of one wall.
#[derive(Clone, Debug, PartialEq)]
pub struct WallTrace<T> {
    pub kp: usize,
    /// Horizontal velocity spectrum on the box `|m1|,|m2| ≤ kp`.
    pub vel: Vec<[T; 2]>,
    /// Wall-normal derivative of the wall-normal velocity.
    pub normal: Vec<T>,
}

#[inline]
fn box_index(kp: usize, m: [i32; 2]) -> Option<usize> {
    let k = kp as i32;
    if m[0].abs() > k || m[1].abs() > k {
        return None;
    }
    Some((m[0] + k) as usize * (2 * kp + 1) + (m[1] + k) as usize)
}

#[inline]
fn box_mode(kp: usize, i: usize) -> [i32; 2] {
    let s = 2 * kp + 1;
    [(i / s) as i32 - kp as i32, (i % s) as i32 - kp as i32]
}

#[inline]
fn wall_cos(side: Side, m3: i32) -> f64 {
    match side {
        Side::Bottom => 1.0,
        Side::Top => {
            if m3 % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Trace of a separated mean field on one wall.
pub fn wall_trace<T: Scalar>(geom: &Geometry, field: &ModalField<T>, side: Side, kp: usize) -> WallTrace<T> {
    let n = (2 * kp + 1) * (2 * kp + 1);
    let mut out = WallTrace { kp, vel: vec![[T::zero(); 2]; n], normal: vec![T::zero(); n] };
    let k3s = geom.scale()[2];
    for (m, c) in field.iter() {
        let Some(i) = box_index(kp, [m[0], m[1]]) else { continue };
        let f = wall_cos(side, m[2]);
        out.vel[i][0] += c[1] * f;
        out.vel[i][1] += c[2] * f;
        out.normal[i] += c[3] * (f * k3s * m[2] as f64);
    }
    out
}

impl<T: Scalar> WallTrace<T> {
    pub fn max_abs(&self) -> f64 {
        self.vel.iter().flat_map(|v| v.iter().map(|x| x.lead().norm())).sum()
    }
}

/// Slow layer on the mesh: `v[node][mode]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrandtlState {
    pub t: f64,
    pub v: Vec<Vec<[Complex64; 2]>>,
}

/// `out += a ⊛ b` on the box `kp`.
fn conv_acc<T: Scalar>(kp: usize, a: &[T], b: &[T], out: &mut [T]) {
    let nz_a: Vec<usize> = (0..a.len()).filter(|&i| !a[i].is_zero()).collect();
    if nz_a.is_empty() {
        return;
    }
    let nz_b: Vec<usize> = (0..b.len()).filter(|&i| !b[i].is_zero()).collect();
    for &i in &nz_a {
        let mi = box_mode(kp, i);
        for &j in &nz_b {
            let mj = box_mode(kp, j);
            if let Some(k) = box_index(kp, [mi[0] + mj[0], mi[1] + mj[1]]) {
                out[k] += a[i] * b[j];
            }
        }
    }
}

/// Forcing hook `(t, θ) ↦ spectrum`, used for manufactured solutions.
pub type LayerForcing<'a> = &'a (dyn Fn(f64, f64) -> Vec<[Complex64; 2]> + Sync);

/// Crank–Nicolson/explicit-transport solver for one wall.
#[derive(Clone, Debug)]
pub struct PrandtlSolver {
    pub geom: Geometry,
    pub mu1: f64,
    pub kp: usize,
    pub side: Side,
    pub grid: PrandtlGrid,
    mesh: ThetaMesh,
}

impl PrandtlSolver {
    pub fn new(params: &PhysicalParams, kp: usize, side: Side, grid: PrandtlGrid) -> Result<Self> {
        if !(grid.dt > 0.0) {
            return Err(Error::InvalidParameter { field: "dt", reason: "layer time step must be positive".into() });
        }
        let mesh = ThetaMesh::new(grid.intervals, grid.theta_max, grid.stretch)?;
        Ok(Self { geom: params.geometry(), mu1: params.mu1, kp, side, grid, mesh })
    }

    #[inline]
    pub fn mesh(&self) -> &ThetaMesh {
        &self.mesh
    }

    #[inline]
    fn n_modes(&self) -> usize {
        (2 * self.kp + 1) * (2 * self.kp + 1)
    }

    #[inline]
    fn wavenumber(&self, i: usize) -> [f64; 2] {
        let m = box_mode(self.kp, i);
        let s = self.geom.scale();
        [s[0] * m[0] as f64, s[1] * m[1] as f64]
    }

    /// `v(0) = -trace·(1 + θ²)e^{-θ²}`, which is flat to second order at the wall.
    pub fn initial(&self, trace: &WallTrace<Complex64>) -> PrandtlState {
        let v = self
            .mesh
            .theta
            .iter()
            .map(|&th| {
                let g = (1.0 + th * th) * (-th * th).exp();
                trace.vel.iter().map(|c| [-c[0] * g, -c[1] * g]).collect()
            })
            .collect();
        PrandtlState { t: 0.0, v }
    }

    /// Transport terms at every node.
    fn advection<T: Scalar>(&self, v: &[Vec<[T; 2]>], trace: &WallTrace<T>) -> Vec<Vec<[T; 2]>> {
        let nm = self.n_modes();
        let nodes = v.len();
        let kp = self.kp;
        let k: Vec<[f64; 2]> = (0..nm).map(|i| self.wavenumber(i)).collect();
        let i = Complex64::new(0.0, 1.0);
        let grad = |f: &dyn Fn(usize) -> T, d: usize| -> Vec<T> { (0..nm).map(|m| f(m) * (i * k[m][d])).collect() };
        let v0: [Vec<T>; 2] = [0, 1].map(|q| trace.vel.iter().map(|c| c[q]).collect());
        let dv0: [[Vec<T>; 2]; 2] = [0, 1].map(|q| [0, 1].map(|d| grad(&|m| trace.vel[m][q], d)));
        // tail integrals and the induced normal velocity
        let mut v3 = vec![vec![T::zero(); nm]; nodes];
        for m in 0..nm {
            for q in 0..2 {
                let col: Vec<T> = v.iter().map(|row| row[m][q]).collect();
                if col.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let tail = self.mesh.tail(&col);
                for (j, t) in tail.iter().enumerate() {
                    v3[j][m] += *t * (i * k[m][q]);
                }
            }
        }
        let mut out = vec![vec![[T::zero(); 2]; nm]; nodes];
        for j in 1..nodes - 1 {
            let th = self.mesh.theta[j];
            let row = &v[j];
            let carrier: [Vec<T>; 2] = [0, 1].map(|d| (0..nm).map(|m| v0[d][m] + row[m][d]).collect());
            let vel: [Vec<T>; 2] = [0, 1].map(|d| (0..nm).map(|m| row[m][d]).collect());
            let w: Vec<T> = (0..nm).map(|m| v3[j][m] - v3[0][m] + trace.normal[m] * th).collect();
            for q in 0..2 {
                let mut acc = vec![T::zero(); nm];
                for d in 0..2 {
                    let dvq = grad(&|m| row[m][q], d);
                    conv_acc(kp, &carrier[d], &dvq, &mut acc);
                    conv_acc(kp, &vel[d], &dv0[q][d], &mut acc);
                }
                let st = self.mesh.d1[j];
                let dth: Vec<T> = (0..nm).map(|m| st.apply(&|n| v[n][m][q])).collect();
                conv_acc(kp, &w, &dth, &mut acc);
                for m in 0..nm {
                    out[j][m][q] = acc[m];
                }
            }
        }
        out
    }

    /// `∂t v` at interior nodes; boundary rows are left at zero.
    pub fn rhs<T: Scalar>(&self, v: &[Vec<[T; 2]>], trace: &WallTrace<T>) -> Vec<Vec<[T; 2]>> {
        let mut out = self.advection(v, trace);
        let nm = self.n_modes();
        let nodes = v.len();
        for j in 1..nodes - 1 {
            for m in 0..nm {
                let kk = self.wavenumber(m);
                let k2 = kk[0] * kk[0] + kk[1] * kk[1];
                for q in 0..2 {
                    let d2 = self.mesh.d2[j].apply(&|n| v[n][m][q]);
                    out[j][m][q] = (d2 - v[j][m][q] * k2) * self.mu1 - out[j][m][q];
                }
            }
        }
        out
    }

    /// Advective CFL number of the explicit transport.
    fn cfl(&self, v: &[Vec<[Complex64; 2]>], trace: &WallTrace<Complex64>, dt: f64) -> f64 {
        let nm = self.n_modes();
        let kmax = (0..nm).map(|m| self.wavenumber(m)).map(|k| k[0].abs().max(k[1].abs())).fold(0.0, f64::max);
        let bound = |row: &[[Complex64; 2]]| -> f64 { row.iter().map(|c| c[0].norm() + c[1].norm()).sum() };
        let v0 = bound(&trace.vel);
        let w0: f64 = trace.normal.iter().map(|c| c.norm()).sum();
        let mut worst: f64 = 0.0;
        let div_sum: f64 = v.iter().map(|row| bound(row)).sum::<f64>() * kmax;
        for j in 1..v.len() - 1 {
            let h = (self.mesh.theta[j + 1] - self.mesh.theta[j]).min(self.mesh.theta[j] - self.mesh.theta[j - 1]);
            let horiz = (v0 + bound(&v[j])) * kmax;
            let vert = self.mesh.theta[j] * w0 + div_sum * self.mesh.theta_max / v.len() as f64;
            worst = worst.max(dt * (horiz + vert / h));
        }
        worst
    }

    /// One step from `trace_now` to `trace_next`.
    pub fn step(
        &self,
        state: &PrandtlState,
        trace_now: &WallTrace<Complex64>,
        trace_next: &WallTrace<Complex64>,
        dt: f64,
        forcing: Option<LayerForcing>,
    ) -> Result<PrandtlState> {
        let cfl = self.cfl(&state.v, trace_now, dt);
        if cfl > 1.0 {
            return Err(Error::StepGuard(format!(
                "layer transport CFL {cfl:.3} exceeds 1 at t = {:.6}; use dt ≤ {:.3e}",
                state.t,
                0.5 * dt / cfl
            )));
        }
        let adv = self.advection(&state.v, trace_now);
        let n = self.mesh.intervals();
        let nm = self.n_modes();
        let th = &self.mesh.theta;
        let fmid: Option<Vec<Vec<[Complex64; 2]>>> =
            forcing.map(|f| th.iter().map(|&x| f(state.t + 0.5 * dt, x)).collect());
        let mut next = vec![vec![[CZERO; 2]; nm]; n + 1];
        for m in 0..nm {
            let kk = self.wavenumber(m);
            let k2 = kk[0] * kk[0] + kk[1] * kk[1];
            for q in 0..2 {
                let bc0 = -trace_next.vel[m][q];
                let all_zero = bc0 == CZERO
                    && state.v.iter().all(|row| row[m][q] == CZERO)
                    && adv.iter().all(|row| row[m][q] == CZERO)
                    && fmid.as_ref().map_or(true, |f| f.iter().all(|row| row[m][q] == CZERO));
                if all_zero {
                    continue;
                }
                // interior unknowns 1..n-1
                let mut lower = vec![0.0; n + 1];
                let mut diag = vec![0.0; n + 1];
                let mut upper = vec![0.0; n + 1];
                let mut rhs = vec![CZERO; n + 1];
                for j in 1..n {
                    let st = self.mesh.d2[j];
                    let (a, b, c) = (st.w[0], st.w[1], st.w[2]);
                    let h = 0.5 * self.mu1;
                    lower[j] = -h * a;
                    diag[j] = 1.0 / dt - h * (b - k2);
                    upper[j] = -h * c;
                    let vm = |i: usize| state.v[i][m][q];
                    let lin = (vm(j - 1) * a + vm(j) * b + vm(j + 1) * c - vm(j) * k2) * h;
                    rhs[j] = vm(j) / dt + lin - adv[j][m][q];
                    if let Some(f) = &fmid {
                        rhs[j] += f[j][m][q];
                    }
                }
                rhs[1] -= bc0 * lower[1];
                // Thomas sweep
                let mut cp = vec![0.0; n + 1];
                let mut dp = vec![CZERO; n + 1];
                for j in 1..n {
                    let l = if j > 1 { lower[j] } else { 0.0 };
                    let den = diag[j] - l * cp[j - 1];
                    cp[j] = upper[j] / den;
                    dp[j] = (rhs[j] - dp[j - 1] * l) / den;
                }
                let mut x = vec![CZERO; n + 1];
                x[0] = bc0;
                for j in (1..n).rev() {
                    x[j] = dp[j] - x[j + 1] * cp[j];
                }
                for j in 0..=n {
                    next[j][m][q] = x[j];
                }
            }
        }
        let out = PrandtlState { t: state.t + dt, v: next };
        if out
            .v
            .iter()
            .flatten()
            .any(|c| !(c[0].re.is_finite() && c[0].im.is_finite() && c[1].re.is_finite() && c[1].im.is_finite()))
        {
            return Err(Error::StepGuard(format!("non-finite layer value at t = {:.6}", out.t)));
        }
        Ok(out)
    }

    /// `max |v(θ)|` over `θ ≥ 0.9 θ_max`.
    pub fn far_field(&self, state: &PrandtlState) -> f64 {
        let cut = 0.9 * self.mesh.theta_max;
        state
            .v
            .iter()
            .zip(&self.mesh.theta)
            .filter(|(_, th)| **th >= cut)
            .map(|(row, _)| row.iter().map(|c| c[0].norm() + c[1].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |v(0) + trace|`.
    pub fn boundary_defect(&self, state: &PrandtlState, trace: &WallTrace<Complex64>) -> f64 {
        state.v[0]
            .iter()
            .zip(&trace.vel)
            .map(|(a, b)| (a[0] + b[0]).norm().max((a[1] + b[1]).norm()))
            .fold(0.0, f64::max)
    }

    /// `(Σ_modes ∫ e^{2κθ²}|v̂|² dθ · |T²|)^{1/2}`.
    pub fn monitor(&self, state: &PrandtlState) -> f64 {
        let kappa = self.grid.monitor_kappa;
        let th = &self.mesh.theta;
        let mut acc = Neumaier::new();
        for j in 0..th.len() - 1 {
            let h = th[j + 1] - th[j];
            let f = |i: usize| -> f64 {
                let w = (2.0 * kappa * th[i] * th[i]).exp();
                state.v[i].iter().map(|c| c[0].norm_sqr() + c[1].norm_sqr()).sum::<f64>() * w
            };
            acc.add(0.5 * h * (f(j) + f(j + 1)));
        }
        (acc.total() * self.geom.area()).sqrt()
    }

    /// Nodal Taylor jets of `v` at a stored state.
    pub fn jets(&self, state: &PrandtlState, trace: &WallTrace<Jet>) -> Vec<Vec<[Jet; 2]>> {
        let n = self.mesh.intervals();
        let mut v: Vec<Vec<[Jet; 2]>> = state
            .v
            .iter()
            .map(|row| row.iter().map(|c| [Jet::constant(c[0]), Jet::constant(c[1])]).collect())
            .collect();
        for (m, tv) in trace.vel.iter().enumerate() {
            v[0][m] = [-tv[0], -tv[1]];
            v[n][m] = [Jet::zero(); 2];
        }
        for order in 0..JET_LEN - 1 {
            let r = self.rhs(&v, trace);
            let inv = 1.0 / (order as f64 + 1.0);
            for j in 1..n {
                for (vm, rm) in v[j].iter_mut().zip(&r[j]) {
                    for q in 0..2 {
                        vm[q].0[order + 1] = rm[q].0[order] * inv;
                    }
                }
            }
        }
        v
    }

    /// CSV snapshot: `theta` then real/imaginary columns for each nonzero mode and component.
    pub fn snapshot_csv(&self, state: &PrandtlState) -> String {
        let nm = self.n_modes();
        let live: Vec<usize> = (0..nm).filter(|&m| state.v.iter().any(|row| row[m] != [CZERO; 2])).collect();
        let mut s = String::from("theta");
        for &m in &live {
            let k = box_mode(self.kp, m);
            for q in 1..=2 {
                let _ = write!(s, ",re_u{q}_{}_{},im_u{q}_{}_{}", k[0], k[1], k[0], k[1]);
            }
        }
        s.push('\n');
        for (j, th) in self.mesh.theta.iter().enumerate() {
            let _ = write!(s, "{th:.10e}");
            for &m in &live {
                for q in 0..2 {
                    let c = state.v[j][m][q];
                    let _ = write!(s, ",{:.10e},{:.10e}", c.re, c.im);
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Trajectory of one wall layer.
#[derive(Clone, Debug)]
pub struct PrandtlRun {
    pub side: Side,
    pub snapshots: Vec<PrandtlState>,
    pub last: PrandtlState,
    pub steps: usize,
    pub bc_defect: f64,
    pub far_field: f64,
    /// `(t, monitor)` after every step.
    pub monitor: Vec<(f64, f64)>,
}

/// Integrates the layer of one wall alongside the mean flow that supplies its trace.
pub fn prandtl_solve(
    solver: &PrandtlSolver,
    params: &PhysicalParams,
    mean0: &MeanFlowState,
    t_end: f64,
    sample_times: &[f64],
) -> Result<PrandtlRun> {
    let ins = InsSystem::new(params.geometry(), mean0.k(), params.mu1)?;
    let geom = params.geometry();
    let trace_of = |m: &MeanFlowState| wall_trace(&geom, &m.to_modal(), solver.side, solver.kp);
    let mut mean = mean0.clone();
    let mut trace = trace_of(&mean);
    let mut state = solver.initial(&trace);
    state.t = mean.t;
    let scale = 1.0 + trace.max_abs();
    let mut breaks: Vec<f64> = sample_times.iter().copied().filter(|t| *t > state.t && *t < t_end).collect();
    breaks.push(t_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut snapshots = Vec::new();
    if sample_times.iter().any(|s| (*s - state.t).abs() <= 1e-12) {
        snapshots.push(state.clone());
    }
    let mut bc_defect = solver.boundary_defect(&state, &trace);
    let mut far = solver.far_field(&state);
    let mut monitor = vec![(state.t, solver.monitor(&state))];
    let mut steps = 0;
    for &target in &breaks {
        let span = target - state.t;
        if span <= 0.0 {
            continue;
        }
        let n = (span / solver.grid.dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let next_mean = ins.step(&mean, h)?;
            let next_trace = trace_of(&next_mean);
            state = solver.step(&state, &trace, &next_trace, h, None)?;
            mean = next_mean;
            trace = next_trace;
            steps += 1;
            bc_defect = bc_defect.max(solver.boundary_defect(&state, &trace));
            far = far.max(solver.far_field(&state));
            if far > DECAY_TOL * scale {
                return Err(Error::Decay(format!(
                    "layer value {far:.3e} at θ ≥ {:.1} exceeds {DECAY_TOL:e}·{scale:.3}",
                    0.9 * solver.grid.theta_max
                )));
            }
            monitor.push((state.t, solver.monitor(&state)));
        }
        state.t = target;
        if sample_times.iter().any(|s| (*s - target).abs() <= 1e-12 * (1.0 + target.abs())) {
            snapshots.push(state.clone());
        }
    }
    Ok(PrandtlRun { side: solver.side, snapshots, last: state, steps, bc_defect, far_field: far, monitor })
}

/// Acoustic trace on a wall: one oscillating term.
#[derive(Clone, Copy, Debug)]
pub struct WallWave {
    pub mh: [i32; 2],
    pub kh: [f64; 2],
    /// Slow-time frequency `α|k|`.
    pub omega: f64,
    pub vel: [Jet; 2],
    pub normal: Jet,
    pub sigma: Jet,
}

/// Wall traces of `Σ w b N e^{iα|k|t/ε}` in the frame of `side`.
pub fn wall_waves(state: &OscState, amps: &[Jet], params: &PhysicalParams, t: f64, side: Side) -> Vec<WallWave> {
    let g = *state.geometry();
    let mut out = Vec::new();
    for i in 0..state.n_modes() {
        let m = state.mode(i);
        let w = WaveVector::of(&g, m.lattice());
        for s in Sign::BOTH {
            let b = amps[state.slot(i, s)];
            if b.is_zero() {
                continue;
            }
            let omega = s.value() * w.norm;
            let f = wall_cos(side, m.k3());
            let amp = b.scale_re(m.weight() * f) * Jet::phase(omega / params.eps, t);
            let n = eigen_coeffs(&g, m.lattice(), s);
            out.push(WallWave {
                mh: [m.k1(), m.k2()],
                kh: [w.k[0], w.k[1]],
                omega,
                vel: [amp.scale(n[1]), amp.scale(n[2])],
                normal: amp.scale(n[3] * w.k[2]),
                sigma: amp.scale(n[0]),
            });
        }
    }
    out
}

#[derive(Clone, Debug)]
struct ModeSplines {
    mode: [i32; 2],
    k: [f64; 2],
    v: [Spline<Jet>; 2],
    d1: [Spline<Jet>; 2],
    d2: [Spline<Jet>; 2],
    tail: [Spline<Jet>; 2],
}

/// Layer of one wall at one time, sampled in `z` with exact stretched coordinates.
#[derive(Clone, Debug)]
pub struct PrandtlLayer {
    pub side: Side,
    sqrt_nu: f64,
    eps: f64,
    mu1: f64,
    mesh: ThetaMesh,
    modes: Vec<ModeSplines>,
    waves: Vec<WallWave>,
    /// Include the acoustic response and the compressible flux correction.
    pub coupled: bool,
}

impl PrandtlLayer {
    pub fn new(
        solver: &PrandtlSolver,
        state: &PrandtlState,
        mean_jets: &ModalField<Jet>,
        waves: Vec<WallWave>,
        params: &PhysicalParams,
    ) -> Self {
        let trace = wall_trace(&solver.geom, mean_jets, solver.side, solver.kp);
        let v = solver.jets(state, &trace);
        let mesh = solver.mesh.clone();
        let nodes = v.len();
        let mut modes = Vec::new();
        for m in 0..solver.n_modes() {
            if v.iter().all(|row| row[m][0].is_zero() && row[m][1].is_zero()) {
                continue;
            }
            let col = |q: usize| -> Vec<Jet> { v.iter().map(|row| row[m][q]).collect() };
            let deriv =
                |q: usize, st: &[Stencil]| -> Vec<Jet> { (0..nodes).map(|j| st[j].apply(&|n| v[n][m][q])).collect() };
            modes.push(ModeSplines {
                mode: box_mode(solver.kp, m),
                k: solver.wavenumber(m),
                v: [0, 1].map(|q| Spline::new(col(q))),
                d1: [0, 1].map(|q| Spline::new(deriv(q, &mesh.d1))),
                d2: [0, 1].map(|q| Spline::new(deriv(q, &mesh.d2))),
                tail: [0, 1].map(|q| Spline::new(mesh.tail(&col(q)))),
            });
        }
        Self {
            side: solver.side,
            sqrt_nu: params.nu.sqrt(),
            eps: params.eps,
            mu1: params.mu1,
            mesh,
            modes,
            waves,
            coupled: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Wall value of the normal velocity carried by the slow layer, in physical orientation.
    pub fn slow_normal_trace(&self) -> Vec<([i32; 2], Jet)> {
        let i = Complex64::new(0.0, 1.0);
        let flip = match self.side {
            Side::Bottom => 1.0,
            Side::Top => -1.0,
        };
        self.modes
            .iter()
            .filter(|ms| ms.k != [0.0, 0.0])
            .map(|ms| {
                let d = ms.tail[0].y[0].scale(i * ms.k[0]) + ms.tail[1].y[0].scale(i * ms.k[1]);
                (ms.mode, d.scale_re(flip * self.sqrt_nu))
            })
            .collect()
    }

    /// Wall-frame spectra `[u_h(2), u3]` with their first two wall-normal derivatives.
    fn wall_frame(&self, theta: f64, out: &mut dyn FnMut([i32; 2], usize, [Jet; 3])) {
        if theta > self.mesh.theta_max || self.modes.is_empty() {
            return;
        }
        let (u, du, _) = self.mesh.param(theta);
        let sn = self.sqrt_nu;
        let i = Complex64::new(0.0, 1.0);
        struct Slow {
            mode: [i32; 2],
            k: [f64; 2],
            v: [Jet; 2],
            vt: [Jet; 2],
            vtt: [Jet; 2],
            vttt: [Jet; 2],
            tail: [Jet; 2],
            v0: [Jet; 2],
        }
        let slow: Vec<Slow> = self
            .modes
            .iter()
            .map(|ms| {
                let e = |s: &Spline<Jet>| s.eval(u);
                let d2 = [e(&ms.d2[0]), e(&ms.d2[1])];
                Slow {
                    mode: ms.mode,
                    k: ms.k,
                    v: [e(&ms.v[0])[0], e(&ms.v[1])[0]],
                    vt: [e(&ms.d1[0])[0], e(&ms.d1[1])[0]],
                    vtt: [d2[0][0], d2[1][0]],
                    vttt: [d2[0][1] * du, d2[1][1] * du],
                    tail: [e(&ms.tail[0])[0], e(&ms.tail[1])[0]],
                    v0: [ms.v[0].y[0], ms.v[1].y[0]],
                }
            })
            .collect();
        let div = |k: [f64; 2], a: [Jet; 2]| -> Jet { a[0].scale(i * k[0]) + a[1].scale(i * k[1]) };
        for s in &slow {
            out(s.mode, 0, [s.v[0], s.vt[0].scale_re(1.0 / sn), s.vtt[0].scale_re(1.0 / (sn * sn))]);
            out(s.mode, 1, [s.v[1], s.vt[1].scale_re(1.0 / sn), s.vtt[1].scale_re(1.0 / (sn * sn))]);
            out(s.mode, 2, [div(s.k, s.tail).scale_re(sn), -div(s.k, s.v), -div(s.k, s.vt).scale_re(1.0 / sn)]);
        }
        if !self.coupled {
            return;
        }
        let eps = self.eps;
        for w in &self.waves {
            let c = Complex64::new(0.0, -eps / w.omega); // ε/(iω)
            let r = (Complex64::new(0.0, w.omega / (eps * self.mu1))).sqrt();
            let ex = (-r * theta).exp();
            let grad_sigma = [w.sigma.scale(i * w.kh[0]), w.sigma.scale(i * w.kh[1])];
            for s in &slow {
                let mode = [w.mh[0] + s.mode[0], w.mh[1] + s.mode[1]];
                let kt = [w.kh[0] + s.k[0], w.kh[1] + s.k[1]];
                let a_dot_l = w.vel[0].scale(i * s.k[0]) + w.vel[1].scale(i * s.k[1]);
                let lin = |x: [Jet; 2]| -> [Jet; 2] {
                    let xk = x[0].scale(i * w.kh[0]) + x[1].scale(i * w.kh[1]);
                    [a_dot_l * x[0] + xk * w.vel[0], a_dot_l * x[1] + xk * w.vel[1]]
                };
                let (f, ft, ftt, fi, f0) = {
                    let (l0, l1, l2, li, lz) = (lin(s.v), lin(s.vt), lin(s.vtt), lin(s.tail), lin(s.v0));
                    let n = w.normal;
                    let f = [0, 1].map(|q| l0[q] + n * s.vt[q].scale_re(theta));
                    let ft = [0, 1].map(|q| l1[q] + n * (s.vt[q] + s.vtt[q].scale_re(theta)));
                    let ftt = [0, 1].map(|q| l2[q] + n * (s.vtt[q].scale_re(2.0) + s.vttt[q].scale_re(theta)));
                    let fi = [0, 1].map(|q| li[q] - n * (s.v[q].scale_re(theta) + s.tail[q]));
                    (f, ft, ftt, fi, lz)
                };
                let vf = [0, 1].map(|q| (f0[q].scale(ex) - f[q]).scale(c));
                let vft = [0, 1].map(|q| (-ft[q] - f0[q].scale(r * ex)).scale(c));
                let vftt = [0, 1].map(|q| (f0[q].scale(r * r * ex) - ftt[q]).scale(c));
                let vfi = [0, 1].map(|q| (f0[q].scale(ex / r) - fi[q]).scale(c));
                for q in 0..2 {
                    out(mode, q, [vf[q], vft[q].scale_re(1.0 / sn), vftt[q].scale_re(1.0 / (sn * sn))]);
                }
                out(mode, 2, [div(kt, vfi).scale_re(sn), -div(kt, vf), -div(kt, vft).scale_re(1.0 / sn)]);
                // compressible flux correction ε∫ v·∇σ
                let dot = |x: [Jet; 2]| x[0] * grad_sigma[0] + x[1] * grad_sigma[1];
                out(mode, 2, [dot(s.tail).scale_re(eps * sn), -dot(s.v).scale_re(eps), -dot(s.vt).scale_re(eps / sn)]);
            }
        }
    }
}

impl ColumnSource for PrandtlLayer {
    fn add_level(&self, geom: &Geometry, z: f64, out: &mut LevelSpectrum) {
        let d = self.side.distance(z, geom.a[2]);
        let theta = d / self.sqrt_nu;
        let side = self.side;
        self.wall_frame(theta, &mut |mode, comp, v| {
            let v = match (side, comp) {
                (Side::Bottom, _) => v,
                (Side::Top, 2) => [-v[0], v[1], -v[2]],
                (Side::Top, _) => [v[0], -v[1], v[2]],
            };
            out.add_jets(mode, comp + 1, v);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_interpolates_and_is_exact_on_lines() {
        let y: Vec<Complex64> = (0..=10).map(|j| Complex64::new(2.0 * j as f64 - 1.0, 0.0)).collect();
        let s = Spline::new(y);
        let v = s.eval(3.4);
        assert!((v[0].re - 5.8).abs() < 1e-13 && (v[1].re - 2.0).abs() < 1e-13 && v[2].re.abs() < 1e-13);
    }

    #[test]
    fn zero_trace_gives_zero_layer() {
        let p = PhysicalParams::standard(0.01, 0.01).unwrap();
        let g = p.geometry();
        let solver =
            PrandtlSolver::new(&p, 2, Side::Bottom, PrandtlGrid { intervals: 40, ..Default::default() }).unwrap();
        let mean = MeanFlowState::zeros(g, 2).unwrap();
        let run = prandtl_solve(&solver, &p, &mean, 0.05, &[0.05]).unwrap();
        assert!(run.last.v.iter().flatten().all(|c| c[0] == CZERO && c[1] == CZERO));
    }

    #[test]
    fn tail_integral_of_exponential() {
        let mesh = ThetaMesh::new(400, 30.0, 3.0).unwrap();
        let f: Vec<Complex64> = mesh.theta().iter().map(|t| Complex64::new((-t).exp(), 0.0)).collect();
        let tail = mesh.tail(&f);
        for (j, t) in mesh.theta().iter().enumerate().step_by(50) {
            assert!((tail[j].re - (-t).exp()).abs() < 1e-4);
        }
    }
}
