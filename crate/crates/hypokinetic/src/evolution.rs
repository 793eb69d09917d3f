//! Lie splitting of transport and collisions, and trajectory recording.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{boundary_dissipation, TraceData};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::hyponorm::HypoNorm;
use crate::model::Model;
use crate::transport::{apply_transport, cfl_limit, ImplicitTransport, TransportScheme};

/// Lambda f = -eps^{1-2s} v d_x f + eps^{-2s} L f, with the traces used.
pub fn apply_generator(f: &DistributionField, eps: f64, model: &Model) -> Result<(DistributionField, TraceData)> {
    let (mut out, traces) = apply_transport(f, model.transport_scale(eps), model)?;
    let c = model.collision.apply(f);
    out.axpy(model.collision_scale(eps), &c);
    Ok((out, traces))
}

/// Per-cell (Id - dt eps^{-2s} A_x)^{-1}; a single matrix when A_x does not vary.
#[derive(Debug, Clone)]
struct CollisionStep {
    inverses: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
    /// Equilibrium scaled to unit density, used to restore cell densities.
    unit_m: Vec<f64>,
}

impl CollisionStep {
    fn new(model: &Model, eps: f64, dt: f64) -> Result<Self> {
        let op = &model.collision;
        let nv = model.nv();
        let c = dt * model.collision_scale(eps);
        let invert = |scale: f64| -> Result<DMatrix<f64>> {
            let sys = DMatrix::identity(nv, nv) - op.base() * (c * scale);
            sys.lu().try_inverse().ok_or(Error::Singular("implicit collision step"))
        };
        let inverses = if op.uniform() {
            vec![invert(op.scales()[0])?]
        } else {
            op.scales().par_iter().map(|&s| invert(s)).collect::<Result<Vec<_>>>()?
        };
        let weights = model.grid.weights().to_vec();
        let m = model.equilibrium().values();
        let mass: f64 = m.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let unit_m = m.iter().map(|v| v / mass).collect();
        Ok(Self { inverses, weights, unit_m })
    }

    fn density(&self, cell: &[f64]) -> f64 {
        cell.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    fn restore_density(&self, cell: &mut [f64], rho: f64) {
        let defect = rho - self.density(cell);
        for (c, m) in cell.iter_mut().zip(&self.unit_m) {
            *c += defect * m;
        }
    }

    fn apply(&self, f: &mut DistributionField) {
        let (nx, nv) = (f.nx(), f.nv());
        // the equilibrium part of each cell is invariant; only the rest goes
        // through the inverse, so round-off stays relative to the deviation
        let rho: Vec<f64> = f.as_slice().chunks_exact(nv).map(|c| self.density(c)).collect();
        f.as_mut_slice().par_chunks_exact_mut(nv).zip(rho.par_iter()).for_each(|(cell, &r)| {
            cell.iter_mut().zip(&self.unit_m).for_each(|(c, m)| *c -= r * m);
        });
        if self.inverses.len() == 1 {
            let cols = DMatrix::from_column_slice(nv, nx, f.as_slice());
            let out = &self.inverses[0] * cols;
            f.as_mut_slice().copy_from_slice(out.as_slice());
        } else {
            f.as_mut_slice().par_chunks_exact_mut(nv).zip(self.inverses.par_iter()).for_each(|(cell, inv)| {
                let r = inv * nalgebra::DVector::from_column_slice(cell);
                cell.copy_from_slice(r.as_slice());
            });
        }
        f.as_mut_slice().par_chunks_exact_mut(nv).zip(rho.par_iter()).for_each(|(cell, &r)| {
            self.restore_density(cell, 0.0);
            cell.iter_mut().zip(&self.unit_m).for_each(|(c, m)| *c += r * m);
        });
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub f: DistributionField,
    pub t: f64,
    pub conserved_mass: f64,
}

impl SimState {
    pub fn new(f: DistributionField, model: &Model) -> Self {
        let conserved_mass = f.mass(&model.grid, model.space.dx);
        Self { f, t: 0.0, conserved_mass }
    }
}

/// Time stepper for one (eps, dt).
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    pub model: &'a Model,
    pub eps: f64,
    pub dt: f64,
    pub scheme: TransportScheme,
    implicit: Option<ImplicitTransport>,
    collision: CollisionStep,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, eps: f64, dt: f64, scheme: TransportScheme) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt = {dt} must be positive")));
        }
        let scale = model.transport_scale(eps);
        let implicit = match scheme {
            TransportScheme::ImplicitUpwind => Some(ImplicitTransport::new(model, scale, dt)?),
            TransportScheme::ExplicitUpwind => {
                let limit = cfl_limit(scale, model);
                if dt > limit {
                    return Err(Error::Cfl { dt, limit });
                }
                None
            }
        };
        let collision = CollisionStep::new(model, eps, dt)?;
        Ok(Self { model, eps, dt, scheme, implicit, collision })
    }

    /// Transport substep, then the collision substep.
    pub fn step(&self, state: &mut SimState) -> Result<()> {
        match &self.implicit {
            Some(tr) => tr.solve(&mut state.f, self.model)?,
            None => {
                let (inc, _) = apply_transport(&state.f, self.model.transport_scale(self.eps), self.model)?;
                state.f.axpy(self.dt, &inc);
            }
        }
        self.collision.apply(&mut state.f);
        state.t += self.dt;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    #[serde(rename = "H_norm")]
    pub h_norm: f64,
    pub triple_norm: f64,
    pub micro_norm: f64,
    pub mass: f64,
    /// eps^{1-2s}/2 times the weighted boundary norm of D_perp f_+.
    pub boundary_diss: f64,
}

pub fn record(state: &SimState, norm: &HypoNorm) -> Result<Record> {
    let model = norm.model;
    let m = model.equilibrium();
    let dx = model.space.dx;
    let f = &state.f;
    let traces = crate::boundary::traces_of(f, &model.space, m, &model.grid)?;
    Ok(Record {
        t: state.t,
        h_norm: f.norm_h_sq(&model.grid, m, dx).sqrt(),
        triple_norm: norm.norm_sq(f).max(0.0).sqrt(),
        micro_norm: f.micro(&model.grid, m).norm_h_sq(&model.grid, m, dx).sqrt(),
        mass: f.mass(&model.grid, dx),
        boundary_diss: 0.5 * model.transport_scale(norm.eps) * boundary_dissipation(&traces, m, &model.grid)?,
    })
}

/// Advance to `t_final` recording every `record_every` steps (and at t = 0).
pub fn evolve_and_record(
    state: &mut SimState,
    stepper: &Stepper,
    norm: &HypoNorm,
    t_final: f64,
    record_every: usize,
) -> Result<Vec<Record>> {
    let steps = (t_final / stepper.dt).round() as usize;
    let t0 = state.t;
    let mut out = vec![record(state, norm)?];
    for n in 1..=steps {
        stepper.step(state)?;
        state.t = t0 + n as f64 * stepper.dt;
        if n % record_every == 0 || n == steps {
            out.push(record(state, norm)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlphaSpec, Geometry, ModelConfig, OperatorKind, Resolution};
    use std::f64::consts::PI;

    fn model(op: OperatorKind, geometry: Geometry, alpha: f64) -> Model {
        let cfg = ModelConfig {
            operator: op,
            geometry,
            alpha: AlphaSpec::uniform(alpha),
            resolution: Resolution { nx: 16, nv: 64, ..Default::default() },
            ..Default::default()
        };
        Model::build(&cfg).unwrap()
    }

    fn run(md: &Model, f: DistributionField, eps: f64, dt: f64, t: f64) -> Vec<Record> {
        let mut st = SimState::new(f, md);
        let stp = Stepper::new(md, eps, dt, TransportScheme::ImplicitUpwind).unwrap();
        let hn = HypoNorm::new(md, eps, 0.25);
        evolve_and_record(&mut st, &stp, &hn, t, 1).unwrap()
    }

    #[test]
    fn equilibrium_is_fixed() {
        for op in [OperatorKind::Bgk, OperatorKind::BoltzmannKernel, OperatorKind::LevyFp] {
            for alpha in [0.0, 0.5, 1.0] {
                let md = model(op, Geometry::Slab, alpha);
                let m = DistributionField::macroscopic(&[1.0; 16], md.equilibrium());
                let mut st = SimState::new(m.clone(), &md);
                let stp = Stepper::new(&md, 0.25, 1e-2, TransportScheme::ImplicitUpwind).unwrap();
                for _ in 0..20 {
                    stp.step(&mut st).unwrap();
                }
                st.f.axpy(-1.0, &m);
                assert!(st.f.max_abs() < 1e-12 * m.max_abs(), "{op:?} alpha = {alpha}: {}", st.f.max_abs());
            }
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let md = model(OperatorKind::Bgk, Geometry::Slab, 0.5);
        let recs = run(&md, DistributionField::zeros(16, md.nv()), 1.0, 1e-2, 0.1);
        assert_eq!(recs.len(), 11);
        assert!(recs.iter().all(|r| r.h_norm == 0.0 && r.mass == 0.0 && r.micro_norm == 0.0));
    }

    #[test]
    fn mass_conserved_and_norm_decreasing() {
        let md = model(OperatorKind::Bgk, Geometry::Torus, 0.0);
        let xs = md.space.centers();
        let rho: Vec<f64> = xs.iter().map(|x| 0.5 * (2.0 * PI * x).cos()).collect();
        let f = DistributionField::macroscopic(&rho, md.equilibrium());
        let recs = run(&md, f, 1.0, 1e-2, 1.0);
        let n0 = recs[0].h_norm;
        for w in recs.windows(2) {
            assert!(w[1].h_norm < w[0].h_norm);
            assert!((w[1].mass - recs[0].mass).abs() < 1e-12 * n0);
        }
    }

    #[test]
    fn micro_data_follows_collision_exponential() {
        let md = model(OperatorKind::LevyFp, Geometry::Torus, 0.0);
        let m = md.equilibrium().values();
        let v = md.grid.nodes();
        let mut g: Vec<f64> = v.iter().zip(m).map(|(v, m)| m * (-v * v / 4.0).exp()).collect();
        let rho: f64 = g.iter().zip(md.grid.weights()).map(|(a, b)| a * b).sum();
        let mass: f64 = m.iter().zip(md.grid.weights()).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(m).for_each(|(a, m)| *a -= rho / mass * m);
        let f = DistributionField::from_fn(16, md.nv(), |_, k| g[k]);
        let t = 0.5;
        let recs = run(&md, f.clone(), 1.0, 1e-3, t);
        let a = md.collision.cell_matrix(0);
        let exact = (&a.matrix * t).exp() * nalgebra::DVector::from_vec(g.clone());
        let exact_f = DistributionField::from_fn(16, md.nv(), |_, k| exact[k]);
        let dx = md.space.dx;
        let want = exact_f.norm_h_sq(&md.grid, md.equilibrium(), dx).sqrt();
        let got = recs.last().unwrap().micro_norm;
        assert!((got - want).abs() < 2e-2 * want, "{got} vs {want}");
        let lambda0 = crate::collision::collision_coercivity(
            &a,
            md.equilibrium(),
            &md.grid,
            &[g.clone()],
        )
        .unwrap();
        let first_rate = (recs[0].micro_norm / recs[1].micro_norm).ln() / recs[1].t;
        assert!(first_rate >= 0.95 * lambda0, "{first_rate} vs {lambda0}");
    }

    #[test]
    fn splitting_error_is_first_order() {
        let md = model(OperatorKind::Bgk, Geometry::Torus, 0.0);
        let xs = md.space.centers();
        let f = DistributionField::from_fn(16, md.nv(), |i, k| {
            md.equilibrium().values()[k] * ((2.0 * PI * xs[i]).cos() + 0.3 * md.grid.nodes()[k] / crate::config::bracket(md.grid.nodes()[k]))
        });
        let end = |dt: f64| run(&md, f.clone(), 0.5, dt, 0.4).last().unwrap().h_norm;
        let (a, b, c) = (end(4e-3), end(2e-3), end(1e-3));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn explicit_step_checks_cfl() {
        let md = model(OperatorKind::Bgk, Geometry::Torus, 0.0);
        assert!(matches!(Stepper::new(&md, 1.0, 1.0, TransportScheme::ExplicitUpwind), Err(Error::Cfl { .. })));
        assert!(Stepper::new(&md, 1.0, 0.0, TransportScheme::ImplicitUpwind).is_err());
    }
}
