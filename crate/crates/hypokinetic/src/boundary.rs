//! Wall traces, Maxwell reflection and the diffusive projection D.

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::space::{SpatialGrid, Wall};
use crate::velocity::VelocityGrid;

/// Trace at one wall as a full velocity vector: entries with v n > 0 hold
/// the outgoing trace, the others the incoming one.
#[derive(Debug, Clone, PartialEq)]
pub struct WallTrace {
    pub wall: Wall,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceData {
    pub walls: Vec<WallTrace>,
}

/// 1 / sum_{v n > 0} M(v) (v n) w
pub fn discrete_cm(m: &Equilibrium, grid: &VelocityGrid, wall: &Wall) -> Result<f64> {
    if wall.alpha > 0.0 && m.s <= 0.5 {
        return Err(Error::DivergentWallMoment(m.s));
    }
    Ok(1.0 / half_flux(m.values(), grid, wall.normal))
}

/// sum_{v n > 0} g (v n) w
pub fn half_flux(g: &[f64], grid: &VelocityGrid, normal: f64) -> f64 {
    let v = grid.nodes();
    grid.integrate_outgoing(normal, |k| g[k] * v[k] * normal)
}

/// Net flux sum_k g (v n) w over the whole velocity grid.
pub fn wall_flux(trace: &WallTrace, grid: &VelocityGrid) -> f64 {
    let n = trace.wall.normal;
    half_flux(&trace.values, grid, n) - half_flux(&trace.values, grid, -n)
}

/// D g_+ = c_M M sum_{out} g_+ (v n) w, on the outgoing half (zero elsewhere).
pub fn diffusive_part(out: &[f64], m: &Equilibrium, c_m: f64, grid: &VelocityGrid, normal: f64) -> Vec<f64> {
    let mean = c_m * half_flux(out, grid, normal);
    let mut d = vec![0.0; out.len()];
    for k in grid.outgoing(normal) {
        d[k] = mean * m.values()[k];
    }
    d
}

/// D_perp g_+ = g_+ - D g_+ on the outgoing half.
pub fn d_perp(out: &[f64], m: &Equilibrium, c_m: f64, grid: &VelocityGrid, normal: f64) -> Vec<f64> {
    let d = diffusive_part(out, m, c_m, grid, normal);
    let mut r = vec![0.0; out.len()];
    for k in grid.outgoing(normal) {
        r[k] = out[k] - d[k];
    }
    r
}

/// Fill the incoming half of `trace` from its outgoing half:
/// g_-(v) = (1 - alpha) g_+(-v) + alpha c_M M(v) sum_{out} g_+ (v n) w.
pub fn apply_reflection(trace: &WallTrace, m: &Equilibrium, c_m: f64, grid: &VelocityGrid) -> WallTrace {
    let wall = trace.wall;
    let mean = c_m * half_flux(&trace.values, grid, wall.normal);
    let mut values = trace.values.clone();
    for k in grid.incoming(wall.normal) {
        values[k] = (1.0 - wall.alpha) * trace.values[grid.pair(k)] + wall.alpha * mean * m.values()[k];
    }
    WallTrace { wall, values }
}

/// sum_{out} a b M^{-1} (v n) w
pub fn boundary_pairing(a: &[f64], b: &[f64], m: &Equilibrium, grid: &VelocityGrid, normal: f64) -> f64 {
    let v = grid.nodes();
    grid.integrate_outgoing(normal, |k| a[k] * b[k] / m.values()[k] * v[k] * normal)
}

/// Norm of the outgoing traces in L^2(Sigma_+; M^{-1} n v dv), summed over walls.
pub fn boundary_norm(traces: &TraceData, m: &Equilibrium, grid: &VelocityGrid) -> f64 {
    traces
        .walls
        .iter()
        .map(|t| boundary_pairing(&t.values, &t.values, m, grid, t.wall.normal))
        .sum::<f64>()
        .sqrt()
}

/// Boundary dissipation sum over walls of alpha (2 - alpha) |D_perp g_+|^2.
pub fn boundary_dissipation(traces: &TraceData, m: &Equilibrium, grid: &VelocityGrid) -> Result<f64> {
    let mut total = 0.0;
    for t in &traces.walls {
        let a = t.wall.alpha;
        if a == 0.0 {
            continue;
        }
        let c_m = discrete_cm(m, grid, &t.wall)?;
        let dp = d_perp(&t.values, m, c_m, grid, t.wall.normal);
        total += a * (2.0 - a) * boundary_pairing(&dp, &dp, m, grid, t.wall.normal);
    }
    Ok(total)
}

/// Both sides of the flux decomposition of int phi gamma g (v n) dv at a wall.
pub fn flux_decomposition_sides(
    phi: impl Fn(f64) -> f64,
    trace: &WallTrace,
    m: &Equilibrium,
    c_m: f64,
    grid: &VelocityGrid,
) -> (f64, f64) {
    let v = grid.nodes();
    let w = grid.weights();
    let n = trace.wall.normal;
    let alpha = trace.wall.alpha;
    let lhs: f64 = (0..v.len()).map(|k| phi(v[k]) * trace.values[k] * v[k] * n * w[k]).sum();
    let dp = d_perp(&trace.values, m, c_m, grid, n);
    let dg = diffusive_part(&trace.values, m, c_m, grid, n);
    let rhs: f64 = grid
        .outgoing(n)
        .map(|k| {
            let odd = phi(v[k]) - phi(-v[k]);
            (phi(v[k]) * alpha * dp[k] + odd * (1.0 - alpha) * dp[k] + odd * dg[k]) * v[k] * n * w[k]
        })
        .sum();
    (lhs, rhs)
}

/// |LHS - RHS| relative to the size of the individual flux terms.
pub fn flux_decomposition_residual(
    phi: impl Fn(f64) -> f64,
    trace: &WallTrace,
    m: &Equilibrium,
    c_m: f64,
    grid: &VelocityGrid,
) -> Result<f64> {
    let v = grid.nodes();
    let scale: f64 = (0..v.len())
        .map(|k| (phi(v[k]) * trace.values[k] * v[k] * grid.weights()[k]).abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let (lhs, rhs) = flux_decomposition_sides(&phi, trace, m, c_m, grid);
    let r = (lhs - rhs).abs() / scale;
    if r > 1e-10 {
        return Err(Error::BoundaryResidual(r));
    }
    Ok(r)
}

/// Wall-cell values of a field as traces. The outgoing half is the wall
/// cell itself; the incoming half is what reflection prescribes.
pub fn traces_of(f: &DistributionField, space: &SpatialGrid, m: &Equilibrium, grid: &VelocityGrid) -> Result<TraceData> {
    let mut walls = Vec::new();
    if let Some(ws) = &space.walls {
        for wall in ws {
            let raw = WallTrace { wall: *wall, values: f.cell(space.wall_cell(wall)).to_vec() };
            let c_m = if wall.alpha > 0.0 { discrete_cm(m, grid, wall)? } else { 0.0 };
            walls.push(apply_reflection(&raw, m, c_m, grid));
        }
    }
    Ok(TraceData { walls })
}

/// Largest |f - R f| over incoming velocities in the wall cells.
pub fn reflection_defect(f: &DistributionField, space: &SpatialGrid, m: &Equilibrium, grid: &VelocityGrid) -> Result<f64> {
    let traces = traces_of(f, space, m, grid)?;
    let mut worst = 0.0f64;
    for t in &traces.walls {
        let cell = f.cell(space.wall_cell(&t.wall));
        for k in grid.incoming(t.wall.normal) {
            worst = worst.max((cell[k] - t.values[k]).abs());
        }
    }
    Ok(worst)
}

/// Overwrite the incoming half of each wall cell with the reflection of its
/// outgoing half, then remove the global mass along M.
pub fn make_admissible(f: &mut DistributionField, space: &SpatialGrid, m: &Equilibrium, grid: &VelocityGrid) -> Result<()> {
    let traces = traces_of(f, space, m, grid)?;
    for t in &traces.walls {
        let i = space.wall_cell(&t.wall);
        let cell = f.cell_mut(i);
        for k in grid.incoming(t.wall.normal) {
            cell[k] = t.values[k];
        }
    }
    let mass = f.mass(grid, space.dx);
    for cell in f.cells_mut() {
        for (x, mk) in cell.iter_mut().zip(m.values()) {
            *x -= mass * mk;
        }
    }
    Ok(())
}
