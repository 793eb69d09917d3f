//! Levy-Fokker-Planck generator: fractional diffusion plus the confining
//! drift d/dv (v g), assembled as a discrete Markov generator.
//!
//! The drift is upwinded face by face with the face value reconstructed from
//! the upwind node through the ratio M(v_face)/M(v_up) of the current
//! equilibrium estimate (a Chang-Cooper type flux). The estimate starts from
//! the decay profile and is replaced by the null vector of the previous
//! assembly a few times.

use nalgebra::{DMatrix, DVector};

use crate::config::bracket;
use crate::error::{Error, Result};
use crate::velocity::VelocityGrid;

use super::fractional::fractional_offdiagonal;

const EQUILIBRIUM_SWEEPS: usize = 5;

#[derive(Debug, Clone)]
pub struct LevyAssembly {
    pub matrix: DMatrix<f64>,
    /// Positive null vector with discrete mass 1.
    pub null_vector: Vec<f64>,
    /// Largest negative off-diagonal entry dropped from the fractional part,
    /// relative to the largest off-diagonal entry.
    pub clipped: f64,
    /// Largest gap between the conservative and the row-consistent diagonal,
    /// relative to the largest diagonal entry.
    pub mass_defect: f64,
}

/// Assemble with unit collision frequency.
pub fn assemble_levy(grid: &VelocityGrid, s: f64, defect_limit: f64) -> Result<LevyAssembly> {
    let n = grid.len();
    let mut frac = fractional_offdiagonal(grid, s);
    let offmax = frac.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut clipped = 0.0f64;
    for x in frac.iter_mut() {
        if *x < 0.0 {
            clipped = clipped.max(-*x);
            *x = 0.0;
        }
    }
    let clipped = clipped / offmax;

    let w = grid.weights();
    let mut mass_defect = 0.0f64;
    let mut diag_scale = 0.0f64;
    for j in 0..n {
        let col: f64 = (0..n).map(|k| w[k] * frac[(k, j)]).sum::<f64>() / w[j];
        let row: f64 = (0..n).map(|i| frac[(j, i)]).sum();
        mass_defect = mass_defect.max((col - row).abs());
        diag_scale = diag_scale.max(col.abs());
    }
    let mass_defect = mass_defect / diag_scale;
    if mass_defect > defect_limit {
        return Err(Error::MassDefect { defect: mass_defect, limit: defect_limit });
    }

    let mut estimate: Option<Vec<f64>> = None;
    let mut matrix = DMatrix::zeros(n, n);
    let mut null_vector = Vec::new();
    for _ in 0..EQUILIBRIUM_SWEEPS {
        matrix = with_drift(grid, s, &frac, estimate.as_deref());
        null_vector = null_vector_of(&matrix, w)?;
        estimate = Some(null_vector.clone());
    }
    if let Some(k) = null_vector.iter().position(|&m| m <= 0.0) {
        return Err(Error::NegativeDensity { v: grid.nodes()[k], value: null_vector[k] });
    }
    Ok(LevyAssembly { matrix, null_vector, clipped, mass_defect })
}

fn with_drift(grid: &VelocityGrid, s: f64, frac: &DMatrix<f64>, estimate: Option<&[f64]>) -> DMatrix<f64> {
    let n = grid.len();
    let v = grid.nodes();
    let w = grid.weights();
    let decay = |u: f64| bracket(u).powf(-1.0 - 2.0 * s);
    let mut a = frac.clone();
    for i in 0..n - 1 {
        let vf = grid.face(i);
        if vf == 0.0 {
            continue;
        }
        let (up, dn) = if vf > 0.0 { (i + 1, i) } else { (i, i + 1) };
        let ratio = match estimate {
            Some(m) if !grid.is_tail(up) => log_quadratic_ratio(grid, m, up, vf),
            _ => decay(vf) / decay(v[up]),
        };
        let rate = vf.abs() * ratio;
        a[(dn, up)] += rate / w[dn];
        a[(up, up)] -= rate / w[up];
    }
    for j in 0..n {
        a[(j, j)] = 0.0;
        let out: f64 = (0..n).map(|k| w[k] * a[(k, j)]).sum();
        a[(j, j)] = -out / w[j];
    }
    a
}

/// M(v_face)/M(v_up) from a quadratic fit of ln M against ln|v| through three
/// same-sign nodes around `up`.
fn log_quadratic_ratio(grid: &VelocityGrid, m: &[f64], up: usize, vf: f64) -> f64 {
    let v = grid.nodes();
    let side = v[up].signum();
    let mut idx: Vec<usize> = [up.wrapping_sub(1), up, up + 1]
        .into_iter()
        .filter(|&i| i < v.len() && v[i].signum() == side)
        .collect();
    if idx.len() < 3 {
        idx = if side > 0.0 { vec![up, up + 1, up + 2] } else { vec![up, up - 1, up - 2] };
    }
    let x: Vec<f64> = idx.iter().map(|&i| v[i].abs().ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| m[i].ln()).collect();
    let t = vf.abs().ln();
    let mut at = 0.0;
    for a in 0..3 {
        let mut l = 1.0;
        for b in 0..3 {
            if a != b {
                l *= (t - x[b]) / (x[a] - x[b]);
            }
        }
        at += l * y[a];
    }
    (at - m[up].ln()).exp()
}

/// Kernel vector normalized by sum w_k m_k = 1, with one refinement step.
pub fn null_vector_of(a: &DMatrix<f64>, w: &[f64]) -> Result<Vec<f64>> {
    let n = w.len();
    let mut b = a.clone();
    for j in 0..n {
        b[(0, j)] = w[j];
    }
    let lu = b.clone().lu();
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let mut x = lu.solve(&rhs).ok_or(Error::Singular("equilibrium of the drift-diffusion generator"))?;
    let r = &rhs - &b * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x.iter().copied().collect())
}
