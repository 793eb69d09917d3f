//! Grid functions f(x_i, v_k) and their weighted norms.

use std::ops::{Index, IndexMut};

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::space::SpatialGrid;
use crate::velocity::VelocityGrid;

/// Row-major samples: cell i occupies `data[i * nv..(i + 1) * nv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    nx: usize,
    nv: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(nx: usize, nv: usize) -> Self {
        Self { nx, nv, data: vec![0.0; nx * nv] }
    }

    pub fn from_fn(nx: usize, nv: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * nv);
        for i in 0..nx {
            for k in 0..nv {
                data.push(f(i, k));
            }
        }
        Self { nx, nv, data }
    }

    pub fn from_vec(nx: usize, nv: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * nv {
            return Err(Error::Mismatch { expected: nx * nv, got: data.len() });
        }
        Ok(Self { nx, nv, data })
    }

    /// rho(x) M(v)
    pub fn macroscopic(rho: &[f64], m: &Equilibrium) -> Self {
        let mv = m.values();
        Self::from_fn(rho.len(), mv.len(), |i, k| rho[i] * mv[k])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.nv..(i + 1) * self.nv]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.nv..(i + 1) * self.nv]
    }

    pub fn cells(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.nv)
    }

    pub fn cells_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.nv)
    }

    pub fn check_shape(&self, space: &SpatialGrid, grid: &VelocityGrid) -> Result<()> {
        if self.nx != space.nx {
            return Err(Error::Mismatch { expected: space.nx, got: self.nx });
        }
        if self.nv != grid.len() {
            return Err(Error::Mismatch { expected: grid.len(), got: self.nv });
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Density per cell: sum_k f w_k.
    pub fn rho(&self, grid: &VelocityGrid) -> Vec<f64> {
        self.cells().map(|c| c.iter().zip(grid.weights()).map(|(f, w)| f * w).sum()).collect()
    }

    /// f - rho[f] M
    pub fn micro(&self, grid: &VelocityGrid, m: &Equilibrium) -> Self {
        let rho = self.rho(grid);
        let mv = m.values();
        Self::from_fn(self.nx, self.nv, |i, k| self[(i, k)] - rho[i] * mv[k])
    }

    /// Total mass sum_i sum_k f w_k dx.
    pub fn mass(&self, grid: &VelocityGrid, dx: f64) -> f64 {
        self.rho(grid).iter().sum::<f64>() * dx
    }

    /// Inner product of L^2(M^{-1} dv dx).
    pub fn inner_h(&self, other: &Self, grid: &VelocityGrid, m: &Equilibrium, dx: f64) -> f64 {
        let inv: Vec<f64> = grid.weights().iter().zip(m.values()).map(|(w, mk)| w / mk).collect();
        self.cells()
            .zip(other.cells())
            .map(|(a, b)| a.iter().zip(b).zip(&inv).map(|((x, y), g)| x * y * g).sum::<f64>())
            .sum::<f64>()
            * dx
    }

    pub fn norm_h_sq(&self, grid: &VelocityGrid, m: &Equilibrium, dx: f64) -> f64 {
        self.inner_h(self, grid, m, dx)
    }
}

impl Index<(usize, usize)> for DistributionField {
    type Output = f64;

    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.nv + k]
    }
}

impl IndexMut<(usize, usize)> for DistributionField {
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.nv + k]
    }
}

/// Norm of L^2(M^{-1} dv dx).
pub fn weighted_norm_h(
    f: &DistributionField,
    m: &Equilibrium,
    grid: &VelocityGrid,
    space: &SpatialGrid,
) -> Result<f64> {
    f.check_shape(space, grid)?;
    if m.len() != grid.len() {
        return Err(Error::Mismatch { expected: grid.len(), got: m.len() });
    }
    Ok(f.norm_h_sq(grid, m, space.dx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AlphaSpec;
    use crate::equilibria::eval_m1;
    use crate::velocity::{build_velocity_grid, Grading};

    fn setup() -> (VelocityGrid, Equilibrium, SpatialGrid) {
        let g = build_velocity_grid(0.75, 1e3, 64, Grading::default_for(64)).unwrap();
        let m = eval_m1(0.75, &g).unwrap();
        (g, m, SpatialGrid::slab(16, AlphaSpec::uniform(0.5)).unwrap())
    }

    #[test]
    fn macro_norm_is_l2_norm_of_density() {
        let (g, m, sp) = setup();
        let rho: Vec<f64> = sp.centers().iter().map(|x| 2f64.sqrt() * (2.0 * std::f64::consts::PI * x).cos()).collect();
        let f = DistributionField::macroscopic(&rho, &m);
        let n = weighted_norm_h(&f, &m, &g, &sp).unwrap();
        assert!((n - 1.0).abs() < 1e-12, "{n}");
        let uniform = DistributionField::macroscopic(&vec![1.0; sp.nx], &m);
        assert!((weighted_norm_h(&uniform, &m, &g, &sp).unwrap() - 1.0).abs() < 1e-12);
        let zero = DistributionField::zeros(sp.nx, g.len());
        assert_eq!(weighted_norm_h(&zero, &m, &g, &sp).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_rejected() {
        let (g, m, sp) = setup();
        let f = DistributionField::zeros(sp.nx + 1, g.len());
        assert!(weighted_norm_h(&f, &m, &g, &sp).is_err());
    }
}
