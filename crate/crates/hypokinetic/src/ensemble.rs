//! Initial data registry and seeded random test fields.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::make_admissible;
use crate::config::{bracket, Geometry};
use crate::error::Result;
use crate::field::DistributionField;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialData {
    /// M(v) times a mean-free density profile.
    Macro,
    /// Mean-free velocity perturbation, uniform in x.
    MicroBump,
    Mixed,
}

/// Profile whose lowest mode is admissible for the geometry.
fn lowest_mode(geometry: Geometry, x: f64) -> f64 {
    match geometry {
        Geometry::Slab => (PI * x).cos(),
        Geometry::Torus => (2.0 * PI * x).cos(),
    }
}

/// Bounded velocity profiles used to build microscopic parts.
fn velocity_profile(kind: usize, v: f64) -> f64 {
    match kind % 5 {
        0 => 1.0 / bracket(v),
        1 => v / bracket(v),
        2 => (-v * v / 4.0).exp(),
        3 => v * (-v.abs() / 3.0).exp(),
        _ => (v / 2.0).cos(),
    }
}

pub fn initial_field(model: &Model, kind: InitialData) -> Result<DistributionField> {
    let m = model.equilibrium().values();
    let v = model.grid.nodes();
    let xs = model.space.centers();
    let geom = model.space.geometry;
    let mut f = DistributionField::from_fn(model.nx(), model.nv(), |i, k| {
        let x = xs[i];
        let macro_part = lowest_mode(geom, x);
        let micro = 0.5 * velocity_profile(2, v[k]) + 0.3 * (2.0 * PI * x).sin() * velocity_profile(1, v[k]);
        m[k] * match kind {
            InitialData::Macro => macro_part,
            InitialData::MicroBump => micro,
            InitialData::Mixed => macro_part + micro,
        }
    });
    make_admissible(&mut f, &model.space, model.equilibrium(), &model.grid)?;
    let n = f.norm_h_sq(&model.grid, model.equilibrium(), model.space.dx).sqrt();
    f.scale(1.0 / n);
    Ok(f)
}

/// Random admissible field with unit H norm: smooth random density plus a
/// microscopic part whose amplitude spans three decades, so both macro- and
/// micro-dominated fields occur.
pub fn random_admissible_field<R: Rng>(model: &Model, rng: &mut R) -> Result<DistributionField> {
    let m = model.equilibrium().values();
    let v = model.grid.nodes();
    let xs = model.space.centers();
    let modes = 4;
    let rho_c: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let micro_amp = 10f64.powf(rng.gen_range(-3.0..0.5));
    let terms: Vec<(usize, usize, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0..5), rng.gen_range(1..=modes), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)))
        .collect();
    let mut f = DistributionField::from_fn(model.nx(), model.nv(), |i, k| {
        let x = xs[i];
        let rho: f64 = rho_c.iter().enumerate().map(|(n, c)| c * (PI * (n + 1) as f64 * x).cos()).sum();
        let micro: f64 = terms
            .iter()
            .map(|&(kind, mode, c, phase)| c * (PI * mode as f64 * x + 2.0 * PI * phase).cos() * velocity_profile(kind, v[k]))
            .sum();
        m[k] * (rho + micro_amp * micro)
    });
    make_admissible(&mut f, &model.space, model.equilibrium(), &model.grid)?;
    let n = f.norm_h_sq(&model.grid, model.equilibrium(), model.space.dx).sqrt();
    if n > 0.0 {
        f.scale(1.0 / n);
    }
    Ok(f)
}

/// Random velocity vectors M(v) times a bounded random profile.
pub fn random_velocity_vectors<R: Rng>(model: &Model, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let m = model.equilibrium().values();
    let v = model.grid.nodes();
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (0..v.len())
                .map(|k| m[k] * ((0..5).map(|j| c[j] * velocity_profile(j, v[k])).sum::<f64>() + 0.1 * rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect()
}

/// Random density plus a current aligned with the gradient of its elliptic
/// lift, which maximizes the cross term of the modified norm.
pub fn aligned_field<R: Rng>(model: &Model, rng: &mut R) -> Result<DistributionField> {
    let m = model.equilibrium().values();
    let v = model.grid.nodes();
    let xs = model.space.centers();
    let rho_c: Vec<f64> = (0..3).map(|n| rng.gen_range(-1.0..1.0) / (n + 1) as f64).collect();
    let rho: Vec<f64> = xs
        .iter()
        .map(|x| rho_c.iter().enumerate().map(|(n, c)| c * lowest_mode(model.space.geometry, (n + 1) as f64 * x)).sum())
        .collect();
    let lift = model.solver.solve_gradient(&rho);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let beta = sign * 10f64.powf(rng.gen_range(-1.0..1.0));
    let mut f = DistributionField::from_fn(model.nx(), model.nv(), |i, k| {
        m[k] * (rho[i] + beta * lift[i] * v[k] / bracket(v[k]).powi(2))
    });
    make_admissible(&mut f, &model.space, model.equilibrium(), &model.grid)?;
    let n = f.norm_h_sq(&model.grid, model.equilibrium(), model.space.dx).sqrt();
    if n > 0.0 {
        f.scale(1.0 / n);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::reflection_defect;
    use crate::config::{AlphaSpec, ModelConfig, Resolution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(geometry: Geometry) -> Model {
        let cfg = ModelConfig {
            geometry,
            alpha: AlphaSpec::uniform(1.0),
            resolution: Resolution { nx: 16, nv: 64, ..Default::default() },
            ..Default::default()
        };
        Model::build(&cfg).unwrap()
    }

    fn assert_admissible(md: &Model, f: &DistributionField) {
        let (m, g, dx) = (md.equilibrium(), &md.grid, md.space.dx);
        assert!((f.norm_h_sq(g, m, dx) - 1.0).abs() < 1e-12);
        assert!(f.mass(g, dx).abs() < 1e-14);
        assert!(reflection_defect(f, &md.space, m, g).unwrap() < 1e-13);
    }

    #[test]
    fn registry_fields_are_admissible() {
        for geom in [Geometry::Slab, Geometry::Torus] {
            let md = model(geom);
            for kind in [InitialData::Macro, InitialData::MicroBump, InitialData::Mixed] {
                assert_admissible(&md, &initial_field(&md, kind).unwrap());
            }
        }
    }

    #[test]
    fn random_fields_are_seeded_and_admissible() {
        let md = model(Geometry::Slab);
        let a = random_admissible_field(&md, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_admissible_field(&md, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_admissible(&md, &a);
        assert_admissible(&md, &aligned_field(&md, &mut ChaCha8Rng::seed_from_u64(9)).unwrap());
    }
}
