//! Modified scalar product coupling the twisted density and current through
//! the elliptic inverse, and the coercivity functional built on it.

use serde::{Deserialize, Serialize};

use crate::boundary::reflection_defect;
use crate::error::{Error, Result};
use crate::evolution::apply_generator;
use crate::field::DistributionField;
use crate::model::Model;
use crate::moments::twisted_moments;

#[derive(Debug, Clone, Copy)]
pub struct HypoNorm<'a> {
    pub model: &'a Model,
    pub eps: f64,
    pub delta: f64,
}

/// Twisted moments and the gradient of the elliptic lift of rho_eps.
struct Lift {
    grad_u: Vec<f64>,
    j_eps: Vec<f64>,
}

impl<'a> HypoNorm<'a> {
    pub fn new(model: &'a Model, eps: f64, delta: f64) -> Self {
        Self { model, eps, delta }
    }

    fn lift(&self, f: &DistributionField) -> Lift {
        let (rho_eps, j_eps) = twisted_moments(f, self.eps, &self.model.grid);
        Lift { grad_u: self.model.solver.solve_gradient(&rho_eps), j_eps }
    }

    fn h_inner(&self, f: &DistributionField, g: &DistributionField) -> f64 {
        f.inner_h(g, &self.model.grid, self.model.equilibrium(), self.model.space.dx)
    }

    /// <d_x (Id - d_xx)^{-1} rho_eps[f], J_eps[g]>
    pub fn cross(&self, f: &DistributionField, g: &DistributionField) -> f64 {
        let lf = self.lift(f);
        let lg = self.lift(g);
        self.model.solver.inner(&lf.grad_u, &lg.j_eps)
    }

    pub fn inner(&self, f: &DistributionField, g: &DistributionField) -> f64 {
        let lf = self.lift(f);
        let lg = self.lift(g);
        let s = &self.model.solver;
        self.h_inner(f, g) + self.eps * self.delta * (s.inner(&lf.grad_u, &lg.j_eps) + s.inner(&lg.grad_u, &lf.j_eps))
    }

    pub fn norm_sq(&self, f: &DistributionField) -> f64 {
        let l = self.lift(f);
        self.h_inner(f, f) + 2.0 * self.eps * self.delta * self.model.solver.inner(&l.grad_u, &l.j_eps)
    }

    pub fn coercivity_functional(&self, f: &DistributionField) -> Result<CoercivityRecord> {
        check_admissible(f, self.model)?;
        let (lf, _) = apply_generator(f, self.eps, self.model)?;
        let m = self.model.equilibrium();
        let fp = f.micro(&self.model.grid, m);
        let micro_sq = fp.norm_h_sq(&self.model.grid, m, self.model.space.dx);
        let lhs = self.inner(&lf, f);
        let triple_sq = self.norm_sq(f);
        let h_sq = self.h_inner(f, f);
        let denom = triple_sq + self.model.collision_scale(self.eps) * micro_sq;
        let ratio = if denom > 0.0 { -lhs / denom } else { 0.0 };
        Ok(CoercivityRecord { eps: self.eps, delta: self.delta, lhs, h_norm_sq: h_sq, triple_norm_sq: triple_sq, micro_sq, ratio })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRecord {
    pub eps: f64,
    pub delta: f64,
    pub lhs: f64,
    #[serde(rename = "H_norm_sq")]
    pub h_norm_sq: f64,
    pub triple_norm_sq: f64,
    pub micro_sq: f64,
    pub ratio: f64,
}

/// Zero mass to 1e-12 and reflection at the wall cells to 1e-10, both
/// relative to the field's size.
pub fn check_admissible(f: &DistributionField, model: &Model) -> Result<()> {
    let m = model.equilibrium();
    let grid = &model.grid;
    let norm = f.norm_h_sq(grid, m, model.space.dx).sqrt();
    let mass = f.mass(grid, model.space.dx);
    if mass.abs() > 1e-12 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Inadmissible(format!("mass {mass:e}")));
    }
    let defect = reflection_defect(f, &model.space, m, grid)?;
    if defect > 1e-10 * f.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Inadmissible(format!("reflection defect {defect:e}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaSelection {
    pub delta: f64,
    /// Extreme values of triple_norm^2 / |f|^2 over ensemble and eps.
    pub lower: f64,
    pub upper: f64,
}

/// Range of triple_norm^2 / |f|^2 for one delta.
pub fn equivalence_range(model: &Model, eps_list: &[f64], ensemble: &[DistributionField], delta: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &eps in eps_list {
        let hn = HypoNorm::new(model, eps, delta);
        for f in ensemble {
            let h = hn.h_inner(f, f);
            if h == 0.0 {
                continue;
            }
            let r = hn.norm_sq(f) / h;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

/// Largest delta = 2^{-j}, j = 0..30, with the modified norm within a
/// factor 1/2 of the plain one for every ensemble member and eps.
pub fn select_delta(model: &Model, eps_list: &[f64], ensemble: &[DistributionField]) -> Result<DeltaSelection> {
    for j in 0..=30 {
        let delta = 0.5f64.powi(j);
        let (lo, hi) = equivalence_range(model, eps_list, ensemble, delta);
        if lo >= 0.5 && hi <= 1.5 {
            return Ok(DeltaSelection { delta, lower: lo, upper: hi });
        }
    }
    Err(Error::NoDelta)
}
