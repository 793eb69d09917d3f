//! Discrete collision operators acting on velocity samples of one cell.

mod fractional;
mod levy;

pub use fractional::fractional_offdiagonal;
pub use levy::{assemble_levy, null_vector_of, LevyAssembly};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, NuSpec, OperatorKind, SigmaSpec};
use crate::equilibria::{eval_m1, Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::space::SpatialGrid;
use crate::velocity::VelocityGrid;

/// Default bound on the relative mass-defect correction of the Levy operator.
pub const DEFAULT_DEFECT_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollisionKind {
    Bgk,
    Kernel,
    Levy,
}

/// Collision matrix at one position.
#[derive(Debug, Clone)]
pub struct CollisionMatrix {
    pub kind: CollisionKind,
    pub matrix: DMatrix<f64>,
}

impl CollisionMatrix {
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(g)).iter().copied().collect()
    }

    /// Largest |sum_k (A g)_k w_k| over unit basis vectors g.
    pub fn mass_defect(&self, w: &[f64]) -> f64 {
        let n = w.len();
        (0..n)
            .map(|j| (0..n).map(|k| w[k] * self.matrix[(k, j)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// A g = rho[g] M - g
pub fn build_bgk(m: &Equilibrium, grid: &VelocityGrid) -> CollisionMatrix {
    let n = grid.len();
    let mut a = DMatrix::from_fn(n, n, |k, j| m.values()[k] * grid.weights()[j]);
    for k in 0..n {
        a[(k, k)] -= 1.0;
    }
    CollisionMatrix { kind: CollisionKind::Bgk, matrix: a }
}

/// Linear Boltzmann operator int sigma(x, v, v') (M(v) g(v') - M(v') g(v)) dv'.
pub fn build_l1(sigma: &SigmaSpec, m: &Equilibrium, grid: &VelocityGrid, x: f64) -> Result<CollisionMatrix> {
    let (lo, hi) = sigma.bounds();
    if lo <= 0.0 {
        return Err(Error::KernelBounds(format!("lower bound {lo} not positive")));
    }
    let v = grid.nodes();
    let w = grid.weights();
    let mv = m.values();
    let n = v.len();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut loss = 0.0;
        for j in 0..n {
            if j == k {
                continue;
            }
            let sk = sigma.eval(x, v[k], v[j]);
            if sk < lo * (1.0 - 1e-12) || sk > hi * (1.0 + 1e-12) {
                return Err(Error::KernelBounds(format!(
                    "sigma({x}, {}, {}) = {sk} outside [{lo}, {hi}]",
                    v[k], v[j]
                )));
            }
            a[(k, j)] = sk * mv[k] * w[j];
            loss += sk * mv[j] * w[j];
        }
        a[(k, k)] = -loss;
    }
    Ok(CollisionMatrix { kind: CollisionKind::Kernel, matrix: a })
}

/// nu(x) times the unit-frequency Levy-Fokker-Planck generator.
pub fn build_l2(nu: &NuSpec, s: f64, grid: &VelocityGrid, x: f64) -> Result<CollisionMatrix> {
    let base = assemble_levy(grid, s, DEFAULT_DEFECT_LIMIT)?;
    build_l2_from(nu, &base, x)
}

pub fn build_l2_from(nu: &NuSpec, base: &LevyAssembly, x: f64) -> Result<CollisionMatrix> {
    let (lo, _) = nu.bounds();
    if lo <= 0.0 {
        return Err(Error::KernelBounds(format!("collision frequency bound {lo} not positive")));
    }
    Ok(CollisionMatrix { kind: CollisionKind::Levy, matrix: &base.matrix * nu.eval(x) })
}

/// Velocity-space inner product sum g h w / M.
pub fn inner_v(g: &[f64], h: &[f64], m: &Equilibrium, grid: &VelocityGrid) -> f64 {
    g.iter()
        .zip(h)
        .zip(m.values())
        .zip(grid.weights())
        .map(|(((a, b), mk), w)| a * b * w / mk)
        .sum()
}

/// g - rho[g] M
pub fn micro_v(g: &[f64], m: &Equilibrium, grid: &VelocityGrid) -> Vec<f64> {
    let rho: f64 = g.iter().zip(grid.weights()).map(|(a, w)| a * w).sum();
    g.iter().zip(m.values()).map(|(a, mk)| a - rho * mk).collect()
}

/// min over the ensemble of -<A g, g> / |g_perp|^2.
pub fn collision_coercivity(
    a: &CollisionMatrix,
    m: &Equilibrium,
    grid: &VelocityGrid,
    ensemble: &[Vec<f64>],
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for g in ensemble {
        let ag = a.apply(g);
        let gp = micro_v(g, m, grid);
        let ratio = -inner_v(&ag, g, m, grid) / inner_v(&gp, &gp, m, grid);
        worst = worst.min(ratio);
    }
    if !(worst > 0.0) {
        return Err(Error::Coercivity(worst));
    }
    Ok(worst)
}

/// Collision operator over the whole spatial grid, stored as one velocity
/// matrix times a per-cell factor.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    pub kind: CollisionKind,
    base: DMatrix<f64>,
    scales: Vec<f64>,
    equilibrium: Equilibrium,
    pub levy: Option<LevyDiagnostics>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevyDiagnostics {
    pub clipped: f64,
    pub mass_defect: f64,
}

impl CollisionOperator {
    pub fn assemble(cfg: &ModelConfig, grid: &VelocityGrid, space: &SpatialGrid) -> Result<Self> {
        let xs = space.centers();
        match cfg.operator {
            OperatorKind::Bgk => {
                let m = eval_m1(cfg.s, grid)?;
                let base = build_bgk(&m, grid).matrix;
                Ok(Self { kind: CollisionKind::Bgk, base, scales: vec![1.0; space.nx], equilibrium: m, levy: None })
            }
            OperatorKind::BoltzmannKernel => {
                let m = eval_m1(cfg.s, grid)?;
                let (factor, kernel) = separate(&cfg.sigma);
                let base = build_l1(&kernel, &m, grid, 0.0)?.matrix;
                let scales = xs.iter().map(|&x| factor.eval(x)).collect();
                Ok(Self { kind: CollisionKind::Kernel, base, scales, equilibrium: m, levy: None })
            }
            OperatorKind::LevyFp => {
                let asm = assemble_levy(grid, cfg.s, DEFAULT_DEFECT_LIMIT)?;
                let m = Equilibrium::from_values(EquilibriumKind::Discrete, cfg.s, grid, asm.null_vector.clone())?;
                let scales = xs.iter().map(|&x| cfg.nu.eval(x)).collect();
                Ok(Self {
                    kind: CollisionKind::Levy,
                    base: asm.matrix,
                    scales,
                    equilibrium: m,
                    levy: Some(LevyDiagnostics { clipped: asm.clipped, mass_defect: asm.mass_defect }),
                })
            }
        }
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.equilibrium
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn uniform(&self) -> bool {
        self.scales.iter().all(|&c| c == self.scales[0])
    }

    pub fn cell_matrix(&self, i: usize) -> CollisionMatrix {
        CollisionMatrix { kind: self.kind, matrix: &self.base * self.scales[i] }
    }

    pub fn apply(&self, f: &DistributionField) -> DistributionField {
        let nv = f.nv();
        let mut out = DistributionField::zeros(f.nx(), nv);
        out.as_mut_slice().par_chunks_exact_mut(nv).zip(f.as_slice().par_chunks_exact(nv)).enumerate().for_each(
            |(i, (o, g))| {
                let r = &self.base * DVector::from_column_slice(g);
                for (a, b) in o.iter_mut().zip(r.iter()) {
                    *a = self.scales[i] * b;
                }
            },
        );
        out
    }
}

/// Split a registry kernel into an x-factor and a velocity kernel.
fn separate(sigma: &SigmaSpec) -> (NuSpec, SigmaSpec) {
    match *sigma {
        SigmaSpec::Constant(c) => (NuSpec::Constant(c), SigmaSpec::Constant(1.0)),
        SigmaSpec::SinX { mean, amp } => (NuSpec::SinX { mean, amp }, SigmaSpec::Constant(1.0)),
        k @ SigmaSpec::VelocityDecay { .. } => (NuSpec::Constant(1.0), k),
    }
}

/// Weighted equilibrium residual |A M| / |M| in the velocity H norm.
pub fn equilibrium_residual(a: &DMatrix<f64>, target: &Equilibrium, weight: &Equilibrium, grid: &VelocityGrid) -> f64 {
    let am: Vec<f64> = (a * DVector::from_column_slice(target.values())).iter().copied().collect();
    (inner_v(&am, &am, weight, grid) / inner_v(target.values(), target.values(), weight, grid)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{build_velocity_grid, Grading};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(s: f64, n: usize) -> VelocityGrid {
        build_velocity_grid(s, 1e3, n, Grading::default_for(n)).unwrap()
    }

    fn random_vectors(m: &Equilibrium, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| m.values().iter().map(|mk| mk * rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn bgk_is_projection_minus_identity() {
        let g = grid(0.75, 64);
        let m = eval_m1(0.75, &g).unwrap();
        let a = build_bgk(&m, &g);
        let a2 = &a.matrix * &a.matrix;
        assert!((a2 + &a.matrix).abs().max() < 1e-13 * a.matrix.abs().max());
        let ens = random_vectors(&m, 20, 1);
        let ratio = collision_coercivity(&a, &m, &g, &ens).unwrap();
        assert!((ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unit_kernel_reduces_to_bgk() {
        let g = grid(0.75, 64);
        let m = eval_m1(0.75, &g).unwrap();
        let l1 = build_l1(&SigmaSpec::Constant(1.0), &m, &g, 0.3).unwrap();
        let bgk = build_bgk(&m, &g);
        for v in random_vectors(&m, 5, 2) {
            let a = l1.apply(&v);
            let b = bgk.apply(&v);
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
        let doubled = build_l1(&SigmaSpec::Constant(2.0), &m, &g, 0.3).unwrap();
        let ratio = collision_coercivity(&doubled, &m, &g, &random_vectors(&m, 5, 3)).unwrap();
        assert!((ratio - 2.0).abs() < 1e-10);
    }

    #[test]
    fn kernel_annihilates_equilibrium_and_is_symmetric() {
        let g = grid(0.75, 64);
        let m = eval_m1(0.75, &g).unwrap();
        let sigma = SigmaSpec::VelocityDecay { mean: 1.0, amp: 0.5 };
        let a = build_l1(&sigma, &m, &g, 0.3).unwrap();
        let am = a.apply(m.values());
        assert!(am.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-15);
        assert!(a.mass_defect(g.weights()) < 1e-14 * a.matrix.abs().max());
        let ens = random_vectors(&m, 6, 4);
        for p in ens.windows(2) {
            let lhs = inner_v(&a.apply(&p[0]), &p[1], &m, &g);
            let rhs = inner_v(&p[0], &a.apply(&p[1]), &m, &g);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
        assert!(collision_coercivity(&a, &m, &g, &ens).unwrap() > 0.0);
    }

    #[test]
    fn kernel_rejects_nonpositive_bound() {
        let g = grid(0.75, 16);
        let m = eval_m1(0.75, &g).unwrap();
        assert!(build_l1(&SigmaSpec::SinX { mean: 1.0, amp: 1.5 }, &m, &g, 0.1).is_err());
    }

    #[test]
    fn levy_generator_structure() {
        let s = 0.75;
        let g = grid(s, 128);
        let asm = assemble_levy(&g, s, DEFAULT_DEFECT_LIMIT).unwrap();
        let a = CollisionMatrix { kind: CollisionKind::Levy, matrix: asm.matrix.clone() };
        let mw: Vec<f64> = asm.null_vector.clone();
        assert!(a.mass_defect(g.weights()) < 1e-12 * asm.matrix.abs().max());
        let n = g.len();
        for k in 0..n {
            for j in 0..n {
                if k != j {
                    assert!(asm.matrix[(k, j)] >= 0.0);
                }
            }
        }
        let m = Equilibrium::from_values(EquilibriumKind::Discrete, s, &g, mw).unwrap();
        let am = a.apply(m.values());
        let scale = asm.matrix.abs().max();
        assert!(am.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-10 * scale);
        let ens = random_vectors(&m, 20, 5);
        assert!(collision_coercivity(&a, &m, &g, &ens).unwrap() > 0.0);
    }
}
