//! Neumann (or periodic) inverse of Id - d^2/dx^2 on cell averages.
//!
//! With K the three-point negative Laplacian and B = Id - dx^2 K / 12, the
//! operator K B^{-1} is the compact fourth-order Laplacian. The solve is
//! (B + K) u = B (eta1 + div eta2), where div takes differences of face
//! values of eta2 (face averages, zero at walls).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::space::SpatialGrid;

#[derive(Debug, Clone)]
pub struct EllipticSolver {
    nx: usize,
    dx: f64,
    periodic: bool,
    chol: Cholesky<f64, Dyn>,
    chol_b: Cholesky<f64, Dyn>,
    lambda1: f64,
}

impl EllipticSolver {
    pub fn new(space: &SpatialGrid) -> Result<Self> {
        let nx = space.nx;
        let dx = space.dx;
        if !(dx > 0.0) || nx < 2 {
            return Err(Error::Singular("degenerate spatial grid"));
        }
        let periodic = space.is_periodic();
        let k = laplacian(nx, dx, periodic);
        let b = DMatrix::identity(nx, nx) - &k * (dx * dx / 12.0);
        let chol = Cholesky::new(&b + &k).ok_or(Error::Singular("elliptic operator"))?;
        let chol_b = Cholesky::new(b).ok_or(Error::Singular("compact smoothing"))?;
        let nf = nx as f64;
        let theta = if periodic { std::f64::consts::PI / nf } else { std::f64::consts::PI / (2.0 * nf) };
        let lam = 4.0 / (dx * dx) * theta.sin().powi(2);
        let lambda1 = lam / (1.0 - dx * dx * lam / 12.0);
        Ok(Self { nx, dx, periodic, chol, chol_b, lambda1 })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// First nonzero eigenvalue of the discrete -d^2/dx^2.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    fn apply_b(&self, r: &[f64]) -> Vec<f64> {
        let c = self.dx * self.dx / 12.0;
        let kr = apply_laplacian(r, self.dx, self.periodic);
        r.iter().zip(&kr).map(|(a, b)| a - c * b).collect()
    }

    /// Solve (Id - d_xx) u = eta1 + d_x eta2.
    pub fn solve(&self, eta1: &[f64], eta2: Option<&[f64]>) -> Vec<f64> {
        let mut rhs = eta1.to_vec();
        if let Some(e2) = eta2 {
            let faces = self.face_average(e2);
            for i in 0..self.nx {
                rhs[i] += (faces[i + 1] - faces[i]) / self.dx;
            }
        }
        let r = DVector::from_vec(self.apply_b(&rhs));
        self.chol.solve(&r).iter().copied().collect()
    }

    /// Face values of a cell field; faces[i] is the left face of cell i.
    fn face_average(&self, e: &[f64]) -> Vec<f64> {
        let n = self.nx;
        let mut f = vec![0.0; n + 1];
        for i in 1..n {
            f[i] = 0.5 * (e[i - 1] + e[i]);
        }
        if self.periodic {
            f[0] = 0.5 * (e[n - 1] + e[0]);
            f[n] = f[0];
        }
        f
    }

    /// Centered derivative; mirrored ghost cells on the slab.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.nx;
        (0..n)
            .map(|i| {
                let (l, r) = if self.periodic {
                    (u[(i + n - 1) % n], u[(i + 1) % n])
                } else {
                    (u[i.saturating_sub(1)], u[(i + 1).min(n - 1)])
                };
                (r - l) / (2.0 * self.dx)
            })
            .collect()
    }

    /// d_x (Id - d_xx)^{-1} eta
    pub fn solve_gradient(&self, eta: &[f64]) -> Vec<f64> {
        self.gradient(&self.solve(eta, None))
    }

    /// sum u_i v_i dx
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.dx
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// |u|^2 + <-d_xx u, u> with the compact Laplacian.
    pub fn h1_norm_sq(&self, u: &[f64]) -> f64 {
        let ku = DVector::from_vec(apply_laplacian(u, self.dx, self.periodic));
        let binv_ku: Vec<f64> = self.chol_b.solve(&ku).iter().copied().collect();
        self.inner(u, u) + self.inner(u, &binv_ku)
    }

    /// Wall values extrapolated with zero slope, |u(0)| + |u(1)|.
    pub fn wall_values(&self, u: &[f64]) -> f64 {
        let n = self.nx;
        ((9.0 * u[0] - u[1]) / 8.0).abs() + ((9.0 * u[n - 1] - u[n - 2]) / 8.0).abs()
    }

    /// Norm of the three-point second difference.
    pub fn second_difference_norm(&self, u: &[f64]) -> f64 {
        self.norm(&apply_laplacian(u, self.dx, self.periodic))
    }

    /// First nonzero eigenvalue by inverse iteration on mean-free vectors.
    pub fn measured_lambda1(&self) -> f64 {
        let n = self.nx;
        let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64 * 2.0 - 1.0) + 0.1 * (i as f64).sin()).collect();
        let mut rayleigh = 0.0;
        for _ in 0..500 {
            let mean = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|a| *a -= mean);
            let y = self.solve(&x, None);
            let nrm = self.norm(&y);
            rayleigh = self.inner(&x, &y) / self.inner(&x, &x);
            x = y.iter().map(|a| a / nrm).collect();
        }
        1.0 / rayleigh - 1.0
    }
}

/// Three-point negative Laplacian (positive semidefinite).
fn laplacian(n: usize, dx: f64, periodic: bool) -> DMatrix<f64> {
    let c = 1.0 / (dx * dx);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in [i.wrapping_sub(1), i + 1] {
            let nb = if j < n {
                Some(j)
            } else if periodic {
                Some(if j == n { 0 } else { n - 1 })
            } else {
                None
            };
            if let Some(j) = nb {
                k[(i, j)] -= c;
                diag += c;
            }
        }
        k[(i, i)] += diag;
    }
    k
}

fn apply_laplacian(u: &[f64], dx: f64, periodic: bool) -> Vec<f64> {
    let n = u.len();
    let c = 1.0 / (dx * dx);
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            if i > 0 {
                acc += u[i] - u[i - 1];
            } else if periodic {
                acc += u[0] - u[n - 1];
            }
            if i + 1 < n {
                acc += u[i] - u[i + 1];
            } else if periodic {
                acc += u[n - 1] - u[0];
            }
            c * acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AlphaSpec;
    use std::f64::consts::PI;

    fn slab(n: usize) -> EllipticSolver {
        EllipticSolver::new(&SpatialGrid::slab(n, AlphaSpec::uniform(0.0)).unwrap()).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        for solver in [slab(32), EllipticSolver::new(&SpatialGrid::torus(32).unwrap()).unwrap()] {
            let u = solver.solve(&vec![1.0; 32], None);
            let err = u.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{err:e}");
        }
    }

    #[test]
    fn cosine_modes() {
        let s = slab(256);
        let xs: Vec<f64> = (0..256).map(|i| (i as f64 + 0.5) / 256.0).collect();
        for k in 1..=3 {
            let kp = k as f64 * PI;
            let eta: Vec<f64> = xs.iter().map(|x| (kp * x).cos()).collect();
            let u = s.solve(&eta, None);
            let err = xs.iter().zip(&u).map(|(x, u)| (u - (kp * x).cos() / (1.0 + kp * kp)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "k = {k}: {err:e}");
        }
    }

    #[test]
    fn eigenvalue_matches_inverse_iteration() {
        let s = slab(64);
        assert!((s.measured_lambda1() - s.lambda1()).abs() < 1e-8 * s.lambda1());
        assert!((s.lambda1() - PI * PI).abs() < 1e-3);
        let t = EllipticSolver::new(&SpatialGrid::torus(64).unwrap()).unwrap();
        assert!((t.measured_lambda1() - t.lambda1()).abs() < 1e-8 * t.lambda1());
        assert!((t.lambda1() - 4.0 * PI * PI).abs() < 1e-2);
    }

    #[test]
    fn divergence_data_energy_bound() {
        let s = slab(64);
        let e1: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let e2: Vec<f64> = (0..64).map(|i| ((i * 5 % 11) as f64 - 5.0) / 5.0).collect();
        let u = s.solve(&e1, Some(&e2));
        assert!(s.h1_norm_sq(&u).sqrt() <= s.norm(&e1) + s.norm(&e2));
    }
}
