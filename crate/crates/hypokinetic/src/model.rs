//! Assembled discretization shared by every eps of a sweep.

use crate::collision::CollisionOperator;
use crate::config::ModelConfig;
use crate::elliptic::EllipticSolver;
use crate::equilibria::Equilibrium;
use crate::error::Result;
use crate::space::SpatialGrid;
use crate::velocity::{build_velocity_grid, Grading, VelocityGrid};

#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: ModelConfig,
    pub grid: VelocityGrid,
    pub space: SpatialGrid,
    pub collision: CollisionOperator,
    pub solver: EllipticSolver,
}

impl Model {
    pub fn build(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let r = &cfg.resolution;
        let grading = match r.center_spacing {
            Some(h) => Grading::Sinh { center_spacing: h },
            None => Grading::default_for(r.nv),
        };
        let grid = build_velocity_grid(cfg.s, r.vmax, r.nv, grading)?;
        let space = SpatialGrid::new(r.nx, cfg.geometry, cfg.alpha)?;
        let collision = CollisionOperator::assemble(cfg, &grid, &space)?;
        let solver = EllipticSolver::new(&space)?;
        Ok(Self { cfg: *cfg, grid, space, collision, solver })
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        self.collision.equilibrium()
    }

    pub fn nx(&self) -> usize {
        self.space.nx
    }

    pub fn nv(&self) -> usize {
        self.grid.len()
    }

    /// Transport prefactor eps^{1-2s}.
    pub fn transport_scale(&self, eps: f64) -> f64 {
        eps.powf(1.0 - 2.0 * self.cfg.s)
    }

    /// Collision prefactor eps^{-2s}.
    pub fn collision_scale(&self, eps: f64) -> f64 {
        eps.powf(-2.0 * self.cfg.s)
    }
}
