//! First-order upwind discretization of -v d_x on cell averages.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::boundary::{discrete_cm, traces_of, TraceData};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TransportScheme {
    ExplicitUpwind,
    ImplicitUpwind,
}

/// -scale v d_x f with upwind differences; wall ghosts from reflection of
/// the wall cells. Returns the increment and the traces used.
pub fn apply_transport(f: &DistributionField, scale: f64, model: &Model) -> Result<(DistributionField, TraceData)> {
    let grid = &model.grid;
    let space = &model.space;
    let m = model.equilibrium();
    f.check_shape(space, grid)?;
    let nx = space.nx;
    let nv = grid.len();
    let v = grid.nodes();
    let traces = traces_of(f, space, m, grid)?;
    let ghost = |k: usize, left: bool| -> f64 {
        match &space.walls {
            Some(_) => {
                let t = if left { &traces.walls[0] } else { &traces.walls[1] };
                t.values[k]
            }
            None => {
                if left {
                    f[(nx - 1, k)]
                } else {
                    f[(0, k)]
                }
            }
        }
    };
    let mut out = DistributionField::zeros(nx, nv);
    let c = scale / space.dx;
    for k in 0..nv {
        let vk = v[k];
        if vk > 0.0 {
            let mut prev = ghost(k, true);
            for i in 0..nx {
                let cur = f[(i, k)];
                out[(i, k)] = -c * vk * (cur - prev);
                prev = cur;
            }
        } else {
            let mut next = ghost(k, false);
            for i in (0..nx).rev() {
                let cur = f[(i, k)];
                out[(i, k)] = -c * vk * (next - cur);
                next = cur;
            }
        }
    }
    Ok((out, traces))
}

/// Largest stable explicit step.
pub fn cfl_limit(scale: f64, model: &Model) -> f64 {
    let vmax = model.grid.nodes().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    model.space.dx / (scale * vmax)
}

/// Backward Euler for the transport part, factored for one (dt, scale).
///
/// Along each velocity the upwind recursion is solved by a sweep, which
/// leaves the incoming wall values as unknowns; these couple across
/// velocities through reflection and are found from a dense system of size
/// nv, factored once.
#[derive(Debug, Clone)]
pub struct ImplicitTransport {
    ratio: Vec<f64>,
    ratio_pow: Vec<f64>,
    mu: Vec<f64>,
    ghost_lu: Option<LU<f64, Dyn, Dyn>>,
    c_m: [f64; 2],
}

impl ImplicitTransport {
    pub fn new(model: &Model, scale: f64, dt: f64) -> Result<Self> {
        let grid = &model.grid;
        let nx = model.space.nx;
        let nv = grid.len();
        let v = grid.nodes();
        let mu: Vec<f64> = v.iter().map(|x| scale * x.abs() * dt / model.space.dx).collect();
        let ratio: Vec<f64> = mu.iter().map(|m| m / (1.0 + m)).collect();
        let ratio_pow: Vec<f64> = ratio.iter().map(|r| r.powi(nx as i32)).collect();
        let mut c_m = [0.0; 2];
        let ghost_lu = match &model.space.walls {
            None => None,
            Some(walls) => {
                let m = model.equilibrium();
                for (slot, w) in c_m.iter_mut().zip(walls) {
                    if w.alpha > 0.0 {
                        *slot = discrete_cm(m, grid, w)?;
                    }
                }
                // unknown z_k: incoming value at the wall where v_k enters
                // (left wall for v > 0, right wall for v < 0)
                let mut g = DMatrix::<f64>::identity(nv, nv);
                let mv = m.values();
                let w = grid.weights();
                for k in 0..nv {
                    let (wall, c) = if v[k] > 0.0 { (&walls[0], c_m[0]) } else { (&walls[1], c_m[1]) };
                    // outgoing value at this wall for velocity j depends on z_j through r_j^N
                    let p = grid.pair(k);
                    g[(k, p)] -= (1.0 - wall.alpha) * ratio_pow[p];
                    if wall.alpha > 0.0 {
                        for j in grid.outgoing(wall.normal) {
                            g[(k, j)] -= wall.alpha * c * mv[k] * v[j].abs() * w[j] * ratio_pow[j];
                        }
                    }
                }
                Some(g.lu())
            }
        };
        Ok(Self { ratio, ratio_pow, mu, ghost_lu, c_m })
    }

    /// Solve (Id - dt T) f_new = f in place. The multiple of M carrying the
    /// mean density is a fixed point and is taken out before the sweeps,
    /// which lose relative accuracy at large mu.
    pub fn solve(&self, f: &mut DistributionField, model: &Model) -> Result<()> {
        let grid = &model.grid;
        let nx = f.nx();
        let nv = f.nv();
        let v = grid.nodes();
        let mv = model.equilibrium().values();
        let m_mass: f64 = mv.iter().zip(grid.weights()).map(|(a, b)| a * b).sum();
        let gamma = f.rho(grid).iter().sum::<f64>() / (nx as f64 * m_mass);
        if gamma != 0.0 {
            for cell in f.cells_mut() {
                cell.iter_mut().zip(mv).for_each(|(x, m)| *x -= gamma * m);
            }
        }
        // sweeps with zero inflow; `a` holds the particular solutions
        let mut a = DistributionField::zeros(nx, nv);
        for k in 0..nv {
            let (mu, inv) = (self.mu[k], 1.0 / (1.0 + self.mu[k]));
            if v[k] > 0.0 {
                let mut prev = 0.0;
                for i in 0..nx {
                    prev = (f[(i, k)] + mu * prev) * inv;
                    a[(i, k)] = prev;
                }
            } else {
                let mut next = 0.0;
                for i in (0..nx).rev() {
                    next = (f[(i, k)] + mu * next) * inv;
                    a[(i, k)] = next;
                }
            }
        }
        let inflow: Vec<f64> = match (&model.space.walls, &self.ghost_lu) {
            (None, _) => (0..nv)
                .map(|k| {
                    let end = if v[k] > 0.0 { a[(nx - 1, k)] } else { a[(0, k)] };
                    end / (1.0 - self.ratio_pow[k])
                })
                .collect(),
            (Some(walls), Some(lu)) => {
                let m = model.equilibrium();
                let mv = m.values();
                let w = grid.weights();
                let mut h = DVector::<f64>::zeros(nv);
                for k in 0..nv {
                    let (wall, c, cell) =
                        if v[k] > 0.0 { (&walls[0], self.c_m[0], 0) } else { (&walls[1], self.c_m[1], nx - 1) };
                    let p = grid.pair(k);
                    let mut val = (1.0 - wall.alpha) * a[(cell, p)];
                    if wall.alpha > 0.0 {
                        let flux: f64 = grid.outgoing(wall.normal).map(|j| a[(cell, j)] * v[j].abs() * w[j]).sum();
                        val += wall.alpha * c * mv[k] * flux;
                    }
                    h[k] = val;
                }
                lu.solve(&h).ok_or(Error::Singular("wall inflow system"))?.iter().copied().collect()
            }
            (Some(_), None) => unreachable!("slab transport always has a wall system"),
        };
        // torus: inflow[k] is the value in the last upwind cell; slab: the ghost
        for k in 0..nv {
            let r = self.ratio[k];
            let mut rp = r;
            if v[k] > 0.0 {
                for i in 0..nx {
                    f[(i, k)] = a[(i, k)] + rp * inflow[k];
                    rp *= r;
                }
            } else {
                for i in (0..nx).rev() {
                    f[(i, k)] = a[(i, k)] + rp * inflow[k];
                    rp *= r;
                }
            }
        }
        if gamma != 0.0 {
            for cell in f.cells_mut() {
                cell.iter_mut().zip(mv).for_each(|(x, m)| *x += gamma * m);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlphaSpec, Geometry, ModelConfig, Resolution};
    use std::f64::consts::PI;

    fn model(geometry: Geometry, alpha: f64, nx: usize) -> Model {
        let cfg = ModelConfig {
            geometry,
            alpha: AlphaSpec::uniform(alpha),
            resolution: Resolution { nx, nv: 64, ..Default::default() },
            ..Default::default()
        };
        Model::build(&cfg).unwrap()
    }

    #[test]
    fn uniform_field_on_torus_is_stationary() {
        let md = model(Geometry::Torus, 0.0, 16);
        let f = DistributionField::from_fn(16, md.nv(), |_, k| (k as f64).sin());
        let (inc, traces) = apply_transport(&f, 1.0, &md).unwrap();
        assert_eq!(inc.max_abs(), 0.0);
        assert!(traces.walls.is_empty());
        let mut g = f.clone();
        ImplicitTransport::new(&md, 1.0, 0.1).unwrap().solve(&mut g, &md).unwrap();
        g.axpy(-1.0, &f);
        assert!(g.max_abs() < 1e-12 * f.max_abs());
    }

    #[test]
    fn walls_conserve_mass() {
        for alpha in [0.0, 0.5, 1.0] {
            let md = model(Geometry::Slab, alpha, 16);
            let xs = md.space.centers();
            let rho: Vec<f64> = xs.iter().map(|x| 1.0 + 0.5 * (PI * x).cos()).collect();
            let f = DistributionField::macroscopic(&rho, md.equilibrium());
            let (inc, _) = apply_transport(&f, 1.0, &md).unwrap();
            let dx = md.space.dx;
            assert!(inc.mass(&md.grid, dx).abs() < 1e-12, "alpha = {alpha}");
            let mut g = f.clone();
            ImplicitTransport::new(&md, 1.0, 0.05).unwrap().solve(&mut g, &md).unwrap();
            let before = f.mass(&md.grid, dx);
            assert!((g.mass(&md.grid, dx) - before).abs() < 1e-12 * before, "alpha = {alpha}");
        }
    }

    /// Phase of the first Fourier mode of one velocity slice.
    fn phase(f: &DistributionField, k: usize, xs: &[f64]) -> f64 {
        let (mut c, mut s) = (0.0, 0.0);
        for (i, x) in xs.iter().enumerate() {
            c += f[(i, k)] * (2.0 * PI * x).cos();
            s += f[(i, k)] * (2.0 * PI * x).sin();
        }
        s.atan2(c)
    }

    #[test]
    fn slice_advects_along_characteristics() {
        let nx = 128;
        let md = model(Geometry::Torus, 0.0, nx);
        let xs = md.space.centers();
        let k = (0..md.nv()).min_by(|a, b| (md.grid.nodes()[*a] - 0.5).abs().total_cmp(&(md.grid.nodes()[*b] - 0.5).abs())).unwrap();
        let speed = 1.3 * md.grid.nodes()[k];
        let mut f = DistributionField::from_fn(nx, md.nv(), |i, _| (2.0 * PI * xs[i]).cos());
        let dt = 1e-3;
        let tr = ImplicitTransport::new(&md, 1.3, dt).unwrap();
        let quarter = (0.25 / speed / dt).round() as usize;
        for _ in 0..quarter {
            tr.solve(&mut f, &md).unwrap();
        }
        // cos(2 pi (x - c t)) has phase 2 pi c t
        let expected = 2.0 * PI * speed * quarter as f64 * dt;
        assert!((phase(&f, k, &xs) - expected).abs() < 2e-2, "{} vs {expected}", phase(&f, k, &xs));
    }

    #[test]
    fn explicit_and_implicit_agree_for_small_steps() {
        let md = model(Geometry::Slab, 0.5, 16);
        let xs = md.space.centers();
        let mut f = DistributionField::from_fn(16, md.nv(), |i, k| md.equilibrium().values()[k] * (PI * xs[i]).cos());
        crate::boundary::make_admissible(&mut f, &md.space, md.equilibrium(), &md.grid).unwrap();
        let dt = 1e-9;
        let (inc, _) = apply_transport(&f, 1.0, &md).unwrap();
        let mut g = f.clone();
        ImplicitTransport::new(&md, 1.0, dt).unwrap().solve(&mut g, &md).unwrap();
        g.axpy(-1.0, &f);
        g.scale(1.0 / dt);
        g.axpy(-1.0, &inc);
        assert!(g.max_abs() < 1e-3 * inc.max_abs(), "{} {}", g.max_abs(), inc.max_abs());
    }

    #[test]
    fn cfl_limit_scales_inversely_with_speed() {
        let md = model(Geometry::Torus, 0.0, 16);
        assert!((cfl_limit(2.0, &md) * 2.0 - cfl_limit(1.0, &md)).abs() < 1e-15);
    }
}
