use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Linear Boltzmann operator with a symmetric kernel.
    BoltzmannKernel,
    Bgk,
    /// Fractional Laplacian plus confining drift.
    LevyFp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Slab,
    Torus,
}

/// Collision kernel registry. All entries are symmetric in (v, v').
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaSpec {
    Constant(f64),
    /// mean + amp * sin(2 pi x)
    SinX { mean: f64, amp: f64 },
    /// mean + amp / (<v> <v'>)
    VelocityDecay { mean: f64, amp: f64 },
}

impl SigmaSpec {
    pub fn eval(&self, x: f64, v: f64, vp: f64) -> f64 {
        match *self {
            SigmaSpec::Constant(c) => c,
            SigmaSpec::SinX { mean, amp } => mean + amp * (2.0 * std::f64::consts::PI * x).sin(),
            SigmaSpec::VelocityDecay { mean, amp } => mean + amp / (bracket(v) * bracket(vp)),
        }
    }

    /// (sigma0, sigma1)
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            SigmaSpec::Constant(c) => (c, c),
            SigmaSpec::SinX { mean, amp } => (mean - amp.abs(), mean + amp.abs()),
            SigmaSpec::VelocityDecay { mean, amp } => (mean.min(mean + amp), mean.max(mean + amp)),
        }
    }
}

/// Collision frequency registry, depending on x only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NuSpec {
    Constant(f64),
    SinX { mean: f64, amp: f64 },
}

impl NuSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NuSpec::Constant(c) => c,
            NuSpec::SinX { mean, amp } => mean + amp * (2.0 * std::f64::consts::PI * x).sin(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            NuSpec::Constant(c) => (c, c),
            NuSpec::SinX { mean, amp } => (mean - amp.abs(), mean + amp.abs()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, NuSpec::Constant(_))
    }
}

/// Accommodation at the two walls of the slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSpec {
    pub left: f64,
    pub right: f64,
}

impl AlphaSpec {
    pub fn uniform(alpha: f64) -> Self {
        Self { left: alpha, right: alpha }
    }

    pub fn is_specular(&self) -> bool {
        self.left == 0.0 && self.right == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Resolution {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    /// Node spacing at v = 0; `None` picks a default from `nv`.
    pub center_spacing: Option<f64>,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            nx: 64,
            nv: 256,
            vmax: 1e3,
            center_spacing: None,
            dt: 1e-2,
            t_final: 10.0,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub s: f64,
    pub eps: f64,
    pub operator: OperatorKind,
    pub sigma: SigmaSpec,
    pub nu: NuSpec,
    pub alpha: AlphaSpec,
    pub geometry: Geometry,
    pub delta: f64,
    pub resolution: Resolution,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            s: 0.75,
            eps: 1.0,
            operator: OperatorKind::Bgk,
            sigma: SigmaSpec::Constant(1.0),
            nu: NuSpec::Constant(1.0),
            alpha: AlphaSpec::uniform(0.5),
            geometry: Geometry::Slab,
            delta: 0.25,
            resolution: Resolution::default(),
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s = {} outside (0, 1)", self.s));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps = {} outside (0, 1]", self.eps));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta = {} negative", self.delta));
        }
        for a in [self.alpha.left, self.alpha.right] {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("accommodation {a} outside [0, 1]"));
            }
        }
        if self.geometry == Geometry::Slab && !self.alpha.is_specular() && self.s <= 0.5 {
            return bad(format!(
                "diffusive walls need s > 1/2 (the wall flux of M diverges otherwise); got s = {} with alpha = ({}, {})",
                self.s, self.alpha.left, self.alpha.right
            ));
        }
        let (s0, _) = self.sigma.bounds();
        if s0 <= 0.0 {
            return bad(format!("kernel lower bound {s0} not positive"));
        }
        let (n0, _) = self.nu.bounds();
        if n0 <= 0.0 {
            return bad(format!("collision frequency lower bound {n0} not positive"));
        }
        let r = &self.resolution;
        if r.nx < 4 {
            return bad(format!("nx = {} too small", r.nx));
        }
        if !r.nv.is_multiple_of(2) || r.nv < 8 {
            return bad(format!("nv = {} must be even and at least 8", r.nv));
        }
        if !(r.vmax > 1.0) {
            return bad(format!("vmax = {} must exceed 1", r.vmax));
        }
        if !(r.dt > 0.0 && r.t_final > 0.0) {
            return bad("dt and T must be positive".into());
        }
        if r.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }

    /// Walls inactive on the torus.
    pub fn effective_alpha(&self) -> Option<AlphaSpec> {
        match self.geometry {
            Geometry::Slab => Some(self.alpha),
            Geometry::Torus => None,
        }
    }
}

/// <v> = sqrt(1 + v^2)
pub fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}
