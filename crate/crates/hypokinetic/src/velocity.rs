//! Symmetric velocity quadrature for heavy-tailed densities.
//!
//! Nodes are midpoints of a graded partition of [0, vmax] mirrored to the
//! negative half-line. Each side carries one extra node standing for the whole
//! tail beyond vmax: its position and weight reproduce the mass (and, for
//! s > 1/2, the first moment) of <v>^{-1-2s} over (vmax, inf).

use serde::{Deserialize, Serialize};

use crate::config::bracket;
use crate::error::{Error, Result};
use crate::special::integrate_to_infinity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    /// v = a sinh(b xi): uniform spacing `center_spacing` near 0, geometric in the tail.
    Sinh { center_spacing: f64 },
    /// v = vmax xi^power
    Algebraic { power: f64 },
}

impl Grading {
    pub fn default_for(n: usize) -> Self {
        Grading::Sinh { center_spacing: 0.02 * 512.0 / n as f64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Partition of [0, vmax]; faces[k]..faces[k+1] is the cell of the k-th positive interior node.
    faces: Vec<f64>,
    vmax: f64,
    tail_exponent: f64,
}

pub fn build_velocity_grid(s: f64, vmax: f64, n: usize, grading: Grading) -> Result<VelocityGrid> {
    if !n.is_multiple_of(2) {
        return Err(Error::Grid(format!("node count {n} is odd")));
    }
    if n < 4 {
        return Err(Error::Grid(format!("node count {n} too small")));
    }
    if !(vmax > 1.0) {
        return Err(Error::Grid(format!("vmax = {vmax} must exceed 1")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Grid(format!("s = {s} outside (0, 1)")));
    }
    let k_int = n / 2 - 1;
    let kf = k_int as f64;
    let (map, jac): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match grading {
        Grading::Sinh { center_spacing } => {
            if !(center_spacing > 0.0) || center_spacing * kf >= vmax {
                return Err(Error::Grid(format!(
                    "center spacing {center_spacing} incompatible with {k_int} nodes up to {vmax}"
                )));
            }
            let b = sinh_rate(center_spacing * kf, vmax);
            let a = center_spacing * kf / b;
            (Box::new(move |xi| a * (b * xi).sinh()), Box::new(move |xi| a * b * (b * xi).cosh()))
        }
        Grading::Algebraic { power } => {
            if !(power >= 1.0) {
                return Err(Error::Grid(format!("grading power {power} below 1")));
            }
            (
                Box::new(move |xi: f64| vmax * xi.powf(power)),
                Box::new(move |xi: f64| vmax * power * xi.powf(power - 1.0)),
            )
        }
    };
    let mut faces: Vec<f64> = (0..=k_int).map(|k| map(k as f64 / kf)).collect();
    faces[k_int] = vmax;
    let mut pos_v = Vec::with_capacity(k_int + 1);
    let mut pos_w = Vec::with_capacity(k_int + 1);
    for k in 0..k_int {
        let xi = (k as f64 + 0.5) / kf;
        pos_v.push(map(xi));
        pos_w.push(jac(xi) / kf);
    }
    let (vt, wt) = tail_node(s, vmax);
    pos_v.push(vt);
    pos_w.push(wt);

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in (0..=k_int).rev() {
        nodes.push(-pos_v[k]);
        weights.push(pos_w[k]);
    }
    nodes.extend_from_slice(&pos_v);
    weights.extend_from_slice(&pos_w);
    Ok(VelocityGrid { nodes, weights, faces, vmax, tail_exponent: s })
}

/// Solve (c / b) sinh(b) = vmax for b.
fn sinh_rate(c: f64, vmax: f64) -> f64 {
    let (mut lo, mut hi) = (1e-8, 1.0);
    while c / hi * hi.sinh() < vmax {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c / mid * mid.sinh() > vmax {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn tail_node(s: f64, vmax: f64) -> (f64, f64) {
    let p = 1.0 + 2.0 * s;
    let reference = |v: f64| bracket(v).powf(-p);
    let mass = integrate_to_infinity(vmax, 0.0, reference);
    let vt = if s > 0.5 {
        integrate_to_infinity(vmax, 0.0, |v| v * reference(v)) / mass
    } else {
        2.0 * vmax
    };
    (vt, mass / reference(vt))
}

impl VelocityGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    /// Exponent used for the tail closure nodes.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    /// Index of -v_k.
    pub fn pair(&self, k: usize) -> usize {
        self.nodes.len() - 1 - k
    }

    /// First index with v > 0.
    pub fn half(&self) -> usize {
        self.nodes.len() / 2
    }

    pub fn is_tail(&self, k: usize) -> bool {
        k == 0 || k == self.nodes.len() - 1
    }

    /// Velocity of the face between nodes i and i+1.
    pub fn face(&self, i: usize) -> f64 {
        let h = self.half();
        if i + 1 == h {
            0.0
        } else if i >= h {
            self.faces[i - h + 1]
        } else {
            -self.faces[h - 1 - i]
        }
    }

    /// Weighted sum of g over the grid.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&v, &w)| g(v) * w).sum()
    }

    /// Sum of g_k phi(v_k) w_k for odd phi, accumulated over mirror pairs so
    /// that even g gives exactly zero.
    pub fn odd_moment(&self, g: &[f64], phi: impl Fn(f64) -> f64) -> f64 {
        (self.half()..self.len())
            .map(|k| (g[k] - g[self.pair(k)]) * phi(self.nodes[k]) * self.weights[k])
            .sum()
    }

    /// Sum of g(v_k) w_k over v_k * normal > 0.
    pub fn integrate_outgoing(&self, normal: f64, g: impl Fn(usize) -> f64) -> f64 {
        self.outgoing(normal).map(|k| g(k) * self.weights[k]).sum()
    }

    pub fn outgoing(&self, normal: f64) -> impl Iterator<Item = usize> + '_ {
        let h = self.half();
        let n = self.nodes.len();
        if normal > 0.0 {
            h..n
        } else {
            0..h
        }
    }

    pub fn incoming(&self, normal: f64) -> impl Iterator<Item = usize> + '_ {
        self.outgoing(-normal)
    }
}
