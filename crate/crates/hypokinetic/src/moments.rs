//! Classical and twisted velocity moments and their scaling in eps.

use serde::{Deserialize, Serialize};

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::velocity::VelocityGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroFields {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
    pub rho_eps: Vec<f64>,
    pub j_eps: Vec<f64>,
    pub c_eps: f64,
}

fn twist(eps: f64, v: f64) -> f64 {
    1.0 / (1.0 + eps * eps * v * v)
}

/// sum_k g_k / <eps v_k>^2 w_k
pub fn rho_eps_cell(g: &[f64], grid: &VelocityGrid, eps: f64) -> f64 {
    g.iter().zip(grid.nodes()).zip(grid.weights()).map(|((a, &v), w)| a * w * twist(eps, v)).sum()
}

/// sum_k g_k v_k / <eps v_k>^2 w_k, accumulated over mirror pairs.
pub fn j_eps_cell(g: &[f64], grid: &VelocityGrid, eps: f64) -> f64 {
    grid.odd_moment(g, |v| v * twist(eps, v))
}

/// sum_k g_k v_k^2 / <eps v_k>^2 w_k
pub fn second_cell(g: &[f64], grid: &VelocityGrid, eps: f64) -> f64 {
    g.iter().zip(grid.nodes()).zip(grid.weights()).map(|((a, &v), w)| a * w * v * v * twist(eps, v)).sum()
}

pub fn compute_moments(f: &DistributionField, eps: f64, m: &Equilibrium, grid: &VelocityGrid) -> MacroFields {
    let mut out = MacroFields {
        rho: Vec::with_capacity(f.nx()),
        j: Vec::with_capacity(f.nx()),
        rho_eps: Vec::with_capacity(f.nx()),
        j_eps: Vec::with_capacity(f.nx()),
        c_eps: m.c_eps(grid, eps),
    };
    for g in f.cells() {
        out.rho.push(g.iter().zip(grid.weights()).map(|(a, w)| a * w).sum());
        out.j.push(grid.odd_moment(g, |v| v));
        out.rho_eps.push(rho_eps_cell(g, grid, eps));
        out.j_eps.push(j_eps_cell(g, grid, eps));
    }
    out
}

/// Only the two twisted moments, as needed by the modified norm.
pub fn twisted_moments(f: &DistributionField, eps: f64, grid: &VelocityGrid) -> (Vec<f64>, Vec<f64>) {
    f.cells().map(|g| (rho_eps_cell(g, grid, eps), j_eps_cell(g, grid, eps))).unzip()
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub eps: Vec<f64>,
    pub rho_eps: Vec<f64>,
    pub j_eps: Vec<f64>,
    pub second: Vec<f64>,
    /// Fitted slopes of the three series.
    pub slopes: [f64; 3],
    /// Leading-order exponents s, s - 1, s - 2.
    pub expected: [f64; 3],
}

impl ScalingProbe {
    pub fn max_deviation(&self) -> f64 {
        self.slopes.iter().zip(&self.expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        for (a, b) in self.slopes.iter().zip(&self.expected) {
            if (a - b).abs() > tol {
                return Err(Error::Slope { measured: *a, expected: *b, tol });
            }
        }
        Ok(())
    }
}

fn l2x(xs: impl Iterator<Item = f64>, dx: f64) -> f64 {
    (xs.map(|x| x * x).sum::<f64>() * dx).sqrt()
}

/// Norms over x of the twisted moments of a fixed microscopic field, and
/// their log-log slopes in eps.
pub fn moment_scaling_probe(
    f_perp: &DistributionField,
    eps_list: &[f64],
    s: f64,
    grid: &VelocityGrid,
    dx: f64,
) -> ScalingProbe {
    let mut rho = Vec::new();
    let mut j = Vec::new();
    let mut sec = Vec::new();
    for &e in eps_list {
        rho.push(l2x(f_perp.cells().map(|g| rho_eps_cell(g, grid, e)), dx));
        j.push(l2x(f_perp.cells().map(|g| j_eps_cell(g, grid, e)), dx));
        sec.push(l2x(f_perp.cells().map(|g| second_cell(g, grid, e)), dx));
    }
    ScalingProbe {
        slopes: [loglog_slope(eps_list, &rho), loglog_slope(eps_list, &j), loglog_slope(eps_list, &sec)],
        expected: [s, s - 1.0, s - 2.0],
        eps: eps_list.to_vec(),
        rho_eps: rho,
        j_eps: j,
        second: sec,
    }
}

/// Operator norms of g_perp -> (rho_eps, J_eps, second moment) on microscopic
/// velocity profiles, i.e. the best constants in the Cauchy-Schwarz bounds.
pub fn sharp_moment_constants(m: &Equilibrium, grid: &VelocityGrid, eps: f64) -> [f64; 3] {
    let v = grid.nodes();
    let w = grid.weights();
    let mv = m.values();
    let centered = |phi: &dyn Fn(f64) -> f64| {
        let mean: f64 = (0..v.len()).map(|k| mv[k] * phi(v[k]) * w[k]).sum();
        (0..v.len()).map(|k| mv[k] * (phi(v[k]) - mean).powi(2) * w[k]).sum::<f64>().sqrt()
    };
    [
        centered(&|x| twist(eps, x)),
        centered(&|x| x * twist(eps, x)),
        centered(&|x| x * x * twist(eps, x)),
    ]
}

/// Slopes of the sharp constants over `eps_list`.
pub fn sharp_scaling_probe(m: &Equilibrium, grid: &VelocityGrid, eps_list: &[f64]) -> ScalingProbe {
    let consts: Vec<[f64; 3]> = eps_list.iter().map(|&e| sharp_moment_constants(m, grid, e)).collect();
    let col = |i: usize| consts.iter().map(|c| c[i]).collect::<Vec<_>>();
    let (rho, j, sec) = (col(0), col(1), col(2));
    let s = m.s;
    ScalingProbe {
        slopes: [loglog_slope(eps_list, &rho), loglog_slope(eps_list, &j), loglog_slope(eps_list, &sec)],
        expected: [s, s - 1.0, s - 2.0],
        eps: eps_list.to_vec(),
        rho_eps: rho,
        j_eps: j,
        second: sec,
    }
}

/// m2(eps) = sum v^2 M w / <eps v>^2 and m2 eps^{2-2s}.
pub fn second_moment_weighted(m: &Equilibrium, eps: f64, grid: &VelocityGrid) -> (f64, f64) {
    let m2 = second_cell(m.values(), grid, eps);
    (m2, m2 * eps.powf(2.0 - 2.0 * m.s))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondMomentScaling {
    pub eps: Vec<f64>,
    pub m2: Vec<f64>,
    pub rescaled: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
}

/// Fit of log m2 against log eps. Fails when the quadrature cannot resolve
/// the smallest eps, detected as 1/eps approaching vmax.
pub fn second_moment_scaling(m: &Equilibrium, grid: &VelocityGrid, eps_list: &[f64]) -> Result<SecondMomentScaling> {
    let smallest = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    if 1.0 / smallest > 0.1 * grid.vmax() {
        return Err(Error::NotConverged(format!(
            "1/eps = {} not well inside vmax = {}",
            1.0 / smallest,
            grid.vmax()
        )));
    }
    let pairs: Vec<(f64, f64)> = eps_list.iter().map(|&e| second_moment_weighted(m, e, grid)).collect();
    let m2: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    Ok(SecondMomentScaling {
        slope: loglog_slope(eps_list, &m2),
        expected: 2.0 * m.s - 2.0,
        rescaled: pairs.iter().map(|p| p.1).collect(),
        eps: eps_list.to_vec(),
        m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::eval_m1;
    use crate::velocity::{build_velocity_grid, Grading};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(s: f64) -> (VelocityGrid, Equilibrium) {
        let g = build_velocity_grid(s, 1e3, 256, Grading::default_for(256)).unwrap();
        let m = eval_m1(s, &g).unwrap();
        (g, m)
    }

    fn random_field(m: &Equilibrium, nx: usize, seed: u64) -> DistributionField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DistributionField::from_fn(nx, m.len(), |_, k| m.values()[k] * rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn uniform_equilibrium_moments() {
        let (g, m) = setup(0.75);
        let f = DistributionField::macroscopic(&[1.0; 4], &m);
        let mf = compute_moments(&f, 0.5, &m, &g);
        for i in 0..4 {
            assert!((mf.rho[i] - 1.0).abs() < 1e-14);
            assert_eq!(mf.j[i], 0.0);
            assert_eq!(mf.j_eps[i], 0.0);
            assert!((mf.rho_eps[i] - mf.c_eps).abs() < 1e-15);
        }
    }

    #[test]
    fn cauchy_second_moment_at_unit_eps() {
        let (g, m) = setup(0.5);
        let (m2, _) = second_moment_weighted(&m, 1.0, &g);
        assert!((m2 - 0.5).abs() < 2e-4, "{m2}");
    }

    #[test]
    fn twisted_identities() {
        let (g, m) = setup(0.75);
        let f = random_field(&m, 6, 1);
        let fp = f.micro(&g, &m);
        for eps in [1.0, 0.5, 0.25, 0.125, 0.0625] {
            let a = compute_moments(&f, eps, &m, &g);
            let b = compute_moments(&fp, eps, &m, &g);
            for i in 0..6 {
                assert!((a.rho_eps[i] - a.c_eps * a.rho[i] - b.rho_eps[i]).abs() < 1e-14);
                assert!((a.j_eps[i] - b.j_eps[i]).abs() < 1e-15);
                let alt: f64 = fp
                    .cell(i)
                    .iter()
                    .zip(g.nodes())
                    .zip(g.weights())
                    .map(|((x, v), w)| -x * eps * eps * v * v / (1.0 + eps * eps * v * v) * w)
                    .sum();
                assert!((b.rho_eps[i] - alt).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn small_eps_recovers_classical_moments() {
        let (g, m) = setup(0.75);
        let f = random_field(&m, 3, 2);
        let a = compute_moments(&f, 1e-6, &m, &g);
        for i in 0..3 {
            assert!((a.rho_eps[i] - a.rho[i]).abs() < 1e-6);
            assert!((a.j_eps[i] - a.j[i]).abs() < 1e-4 * a.j[i].abs().max(1.0));
        }
    }

    #[test]
    fn slope_of_exact_power() {
        let xs = [0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.7)).collect();
        assert!((loglog_slope(&xs, &ys) + 0.7).abs() < 1e-13);
    }

    #[test]
    fn sharp_constants_dominate_ratios() {
        let (g, m) = setup(0.75);
        let f = random_field(&m, 1, 3).micro(&g, &m);
        let norm = f.norm_h_sq(&g, &m, 1.0).sqrt();
        for eps in [1.0, 0.25, 0.0625] {
            let c = sharp_moment_constants(&m, &g, eps);
            let cell = f.cell(0);
            assert!(rho_eps_cell(cell, &g, eps).abs() <= c[0] * norm * (1.0 + 1e-12));
            assert!(j_eps_cell(cell, &g, eps).abs() <= c[1] * norm * (1.0 + 1e-12));
            assert!(second_cell(cell, &g, eps).abs() <= c[2] * norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rho_eps_bounded_by_h_norm() {
        let (g, m) = setup(0.75);
        let dx = 1.0 / 8.0;
        for seed in 0..20 {
            let f = random_field(&m, 8, 10 + seed);
            let nf = f.norm_h_sq(&g, &m, dx).sqrt();
            for eps in [1.0, 0.5, 0.0625] {
                let (r, _) = twisted_moments(&f, eps, &g);
                assert!(l2x(r.into_iter(), dx) <= nf);
            }
        }
    }

    #[test]
    fn second_moment_guard() {
        let (g, m) = setup(0.75);
        assert!(second_moment_scaling(&m, &g, &[0.5, 1e-3]).is_err());
        let r = second_moment_scaling(&m, &g, &[0.5, 0.25]).unwrap();
        assert!(r.slope < 0.0);
    }
}
