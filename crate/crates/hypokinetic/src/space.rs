use serde::{Deserialize, Serialize};

use crate::config::{AlphaSpec, Geometry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub x: f64,
    /// Outward normal, -1 at x = 0 and +1 at x = 1.
    pub normal: f64,
    pub alpha: f64,
}

/// Uniform cells on (0, 1), either a slab with two walls or a torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub nx: usize,
    pub dx: f64,
    pub geometry: Geometry,
    pub walls: Option<[Wall; 2]>,
}

impl SpatialGrid {
    pub fn slab(nx: usize, alpha: AlphaSpec) -> Result<Self> {
        Self::check(nx)?;
        for a in [alpha.left, alpha.right] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("accommodation {a} outside [0, 1]")));
            }
        }
        Ok(Self {
            nx,
            dx: 1.0 / nx as f64,
            geometry: Geometry::Slab,
            walls: Some([
                Wall { x: 0.0, normal: -1.0, alpha: alpha.left },
                Wall { x: 1.0, normal: 1.0, alpha: alpha.right },
            ]),
        })
    }

    pub fn torus(nx: usize) -> Result<Self> {
        Self::check(nx)?;
        Ok(Self { nx, dx: 1.0 / nx as f64, geometry: Geometry::Torus, walls: None })
    }

    pub fn new(nx: usize, geometry: Geometry, alpha: AlphaSpec) -> Result<Self> {
        match geometry {
            Geometry::Slab => Self::slab(nx, alpha),
            Geometry::Torus => Self::torus(nx),
        }
    }

    fn check(nx: usize) -> Result<()> {
        if nx < 2 {
            return Err(Error::Config(format!("nx = {nx} too small")));
        }
        Ok(())
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.center(i)).collect()
    }

    /// Cell adjacent to a wall.
    pub fn wall_cell(&self, wall: &Wall) -> usize {
        if wall.normal < 0.0 {
            0
        } else {
            self.nx - 1
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.geometry == Geometry::Torus
    }
}
