use super::params::Geometry;
use crate::error::{Error, Result};
use crate::sum::Neumaier;
use serde::{Deserialize, Serialize};

/// Vertical node families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Vertical {
    /// Equispaced nodes including both walls, trapezoid weights; exact for
    /// cosine/sine products below the grid Nyquist index.
    Uniform { intervals: usize },
    /// Geometric clustering at both walls (first spacing `delta/16`, growth `ratio`)
    /// up to `a3/cap_div`, uniform in between.
    Layered { delta: f64, ratio: f64, cap_div: f64 },
}

/// Tensor grid: uniform periodic horizontally, walls included vertically.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub geom: Geometry,
    pub n1: usize,
    pub n2: usize,
    pub vertical: Vertical,
    z: Vec<f64>,
    wz: Vec<f64>,
}

impl GridSpec {
    pub fn uniform(geom: Geometry, n1: usize, n2: usize, intervals: usize) -> Result<Self> {
        Self::check_sizes(n1, n2, intervals + 1)?;
        let a3 = geom.a[2];
        let z: Vec<f64> = (0..=intervals).map(|j| a3 * j as f64 / intervals as f64).collect();
        let wz = trapezoid_weights(&z);
        Ok(Self { geom, n1, n2, vertical: Vertical::Uniform { intervals }, z, wz })
    }

    pub fn layered(geom: Geometry, n1: usize, n2: usize, delta: f64) -> Result<Self> {
        Self::layered_with(geom, n1, n2, delta, 1.05, 40.0)
    }

    pub fn layered_with(geom: Geometry, n1: usize, n2: usize, delta: f64, ratio: f64, cap_div: f64) -> Result<Self> {
        if !(delta > 0.0 && ratio > 1.0 && cap_div >= 4.0) {
            return Err(Error::Grid(format!(
                "bad layered grid parameters delta={delta} ratio={ratio} cap_div={cap_div}"
            )));
        }
        let a3 = geom.a[2];
        let half = 0.5 * a3;
        let hmax = a3 / cap_div;
        let mut h = (delta / 16.0).min(hmax);
        let mut lower = vec![0.0];
        let mut z = 0.0;
        loop {
            if z + h >= half - 0.5 * h {
                break;
            }
            z += h;
            lower.push(z);
            h = (h * ratio).min(hmax);
        }
        lower.push(half);
        let mut nodes = lower.clone();
        for &v in lower.iter().rev().skip(1) {
            nodes.push(a3 - v);
        }
        Self::check_sizes(n1, n2, nodes.len())?;
        let wz = trapezoid_weights(&nodes);
        Ok(Self { geom, n1, n2, vertical: Vertical::Layered { delta, ratio, cap_div }, z: nodes, wz })
    }

    fn check_sizes(n1: usize, n2: usize, nz: usize) -> Result<()> {
        if n1 < 4 || n2 < 4 || nz < 4 {
            return Err(Error::Grid(format!("grid sizes must be at least 4, got {n1}x{n2}x{nz}")));
        }
        Ok(())
    }

    /// Returns a copy with doubled resolution in every direction.
    pub fn refined(&self) -> Result<Self> {
        match self.vertical {
            Vertical::Uniform { intervals } => Self::uniform(self.geom, 2 * self.n1, 2 * self.n2, 2 * intervals),
            Vertical::Layered { delta, ratio, cap_div } => {
                Self::layered_with(self.geom, 2 * self.n1, 2 * self.n2, delta / 2.0, ratio.sqrt(), 2.0 * cap_div)
            }
        }
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    #[inline]
    pub fn z_weights(&self) -> &[f64] {
        &self.wz
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.nz()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, iz: usize) -> usize {
        (iz * self.n1 + i1) * self.n2 + i2
    }

    #[inline]
    pub fn x(&self, i1: usize, i2: usize) -> [f64; 2] {
        [self.geom.a[0] * i1 as f64 / self.n1 as f64, self.geom.a[1] * i2 as f64 / self.n2 as f64]
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.geom.area() / (self.n1 * self.n2) as f64
    }
}

fn trapezoid_weights(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut w = vec![0.0; n];
    for j in 0..n - 1 {
        let h = z[j + 1] - z[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    w
}

/// Four real components `(σ, u1, u2, u3)` sampled on a grid, stored level by level.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub data: [Vec<f64>; 4],
}

impl GridField {
    pub fn zeros(spec: &GridSpec) -> Self {
        let n = spec.len();
        Self { spec: spec.clone(), data: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    #[inline]
    pub fn at(&self, c: usize, i1: usize, i2: usize, iz: usize) -> f64 {
        self.data[c][self.spec.index(i1, i2, iz)]
    }

    /// Discrete `L²(Ω)` norm of all components.
    pub fn l2(&self) -> f64 {
        let s = &self.spec;
        let mut acc = Neumaier::new();
        let plane = s.n1 * s.n2;
        for c in 0..4 {
            for iz in 0..s.nz() {
                let w = s.z_weights()[iz] * s.cell_area();
                for v in &self.data[c][iz * plane..(iz + 1) * plane] {
                    acc.add(w * v * v);
                }
            }
        }
        acc.total().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flat_map(|d| d.iter()).fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, a: f64, x: &GridField) {
        for (d, s) in self.data.iter_mut().zip(&x.data) {
            for (y, v) in d.iter_mut().zip(s) {
                *y += a * v;
            }
        }
    }

    /// Largest `|u|` over the wall nodes.
    pub fn boundary_velocity_max(&self) -> f64 {
        let s = &self.spec;
        let mut m = 0.0f64;
        for iz in [0, s.nz() - 1] {
            for i1 in 0..s.n1 {
                for i2 in 0..s.n2 {
                    for c in 1..4 {
                        m = m.max(self.at(c, i1, i2, iz).abs());
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_grid_resolves_the_layer() {
        let g = Geometry::unit();
        let delta = 1e-3;
        let s = GridSpec::layered(g, 8, 8, delta).unwrap();
        let z = s.z();
        assert_eq!(z[0], 0.0);
        assert!((z[z.len() - 1] - g.a[2]).abs() < 1e-14);
        assert!(z.windows(2).all(|w| w[1] > w[0]));
        let inside = z.iter().filter(|&&v| v > 0.0 && v <= delta).count();
        assert!(inside >= 10, "{inside}");
        let total: f64 = s.z_weights().iter().sum();
        assert!((total - g.a[2]).abs() < 1e-13);
    }
}
