//! Heavy-tailed equilibria on a velocity grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::config::bracket;
use crate::error::{Error, Result};
use crate::special::{integrate_panels, m1_constant};
use crate::velocity::VelocityGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    /// c <v>^{-1-2s}
    M1,
    /// Symmetric stable law with characteristic function exp(-|xi|^{2s}/(2s)).
    M2,
    /// Null vector of an assembled discrete operator.
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub s: f64,
    values: Vec<f64>,
    /// Factor applied to the continuum values to reach discrete mass 1.
    pub mass_renorm: f64,
    /// Continuum normalization constant, where one is known.
    pub continuum_constant: Option<f64>,
}

impl Equilibrium {
    /// Wrap already positive values, symmetrize and renormalize.
    pub fn from_values(kind: EquilibriumKind, s: f64, grid: &VelocityGrid, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != grid.len() {
            return Err(Error::Mismatch { expected: grid.len(), got: raw.len() });
        }
        let scale = raw.iter().map(|m| m.abs()).fold(0.0, f64::max);
        for (k, &m) in raw.iter().enumerate() {
            if m < -1e-13 * scale || !m.is_finite() {
                return Err(Error::NegativeDensity { v: grid.nodes()[k], value: m });
            }
        }
        let mut values = raw;
        for k in grid.half()..grid.len() {
            let p = grid.pair(k);
            let avg = 0.5 * (values[k] + values[p]);
            values[k] = avg;
            values[p] = avg;
        }
        if let Some((k, &m)) = values.iter().enumerate().find(|(_, &m)| m <= 0.0) {
            return Err(Error::NegativeDensity { v: grid.nodes()[k], value: m });
        }
        let mass: f64 = values.iter().zip(grid.weights()).map(|(m, w)| m * w).sum();
        let renorm = 1.0 / mass;
        values.iter_mut().for_each(|m| *m *= renorm);
        Ok(Self { kind, s, values, mass_renorm: renorm, continuum_constant: None })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete mass; 1 up to rounding.
    pub fn mass(&self, grid: &VelocityGrid) -> f64 {
        self.values.iter().zip(grid.weights()).map(|(m, w)| m * w).sum()
    }

    /// c_eps = sum M w / <eps v>^2
    pub fn c_eps(&self, grid: &VelocityGrid, eps: f64) -> f64 {
        self.values
            .iter()
            .zip(grid.nodes())
            .zip(grid.weights())
            .map(|((m, v), w)| m * w / (1.0 + eps * eps * v * v))
            .sum()
    }

    /// Smallest and largest M(v) <v>^{1+2s} over the grid.
    pub fn tail_bounds(&self, grid: &VelocityGrid) -> (f64, f64) {
        let p = 1.0 + 2.0 * self.s;
        self.values.iter().zip(grid.nodes()).fold((f64::INFINITY, 0.0f64), |(lo, hi), (m, &v)| {
            let r = m * bracket(v).powf(p);
            (lo.min(r), hi.max(r))
        })
    }
}

pub fn eval_m1(s: f64, grid: &VelocityGrid) -> Result<Equilibrium> {
    let c = m1_constant(s);
    let raw = grid.nodes().iter().map(|&v| c * bracket(v).powf(-1.0 - 2.0 * s)).collect();
    let mut eq = Equilibrium::from_values(EquilibriumKind::M1, s, grid, raw)?;
    eq.continuum_constant = Some(c);
    Ok(eq)
}

pub fn eval_m2(s: f64, grid: &VelocityGrid) -> Result<Equilibrium> {
    let raw = grid.nodes().iter().map(|&v| stable_density(v, s)).collect();
    Equilibrium::from_values(EquilibriumKind::M2, s, grid, raw)
}

/// Density of the symmetric law with characteristic function exp(-|xi|^{2s}/(2s)).
pub fn stable_density(v: f64, s: f64) -> f64 {
    let v = v.abs();
    if v <= 20.0 || s >= 1.0 {
        stable_density_fourier(v, s)
    } else {
        stable_density_series(v, s)
    }
}

/// (1/pi) int_0^inf exp(-xi^a/a) cos(xi v) d xi, a = 2s.
pub fn stable_density_fourier(v: f64, s: f64) -> f64 {
    let a = 2.0 * s;
    let xi_max = (a * 45.0).powf(1.0 / a);
    let mut edges = vec![0.0];
    let mut e = 1e-10;
    while e < 1.0 {
        edges.push(e);
        e *= 2.0;
    }
    let width = if v > 0.0 { (PI / (2.0 * v)).min(0.25) } else { 0.25 };
    let mut x = 1.0;
    edges.push(x);
    while x < xi_max {
        x = (x + width).min(xi_max);
        edges.push(x);
    }
    integrate_panels(&edges, |xi| (-xi.powf(a) / a).exp() * (xi * v).cos()) / PI
}

/// Large-|v| asymptotic series of the same density.
pub fn stable_density_series(v: f64, s: f64) -> f64 {
    let a = 2.0 * s;
    let lc = (1.0 / a).ln();
    let lv = v.abs().ln();
    let mut total = 0.0;
    for n in 1..25 {
        let nf = n as f64;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let mag = (ln_gamma(a * nf + 1.0) - ln_gamma(nf + 1.0) + nf * lc - (a * nf + 1.0) * lv).exp();
        total += sign * mag * (PI * a * nf / 2.0).sin();
    }
    total / PI
}
