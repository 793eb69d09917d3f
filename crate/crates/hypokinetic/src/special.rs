//! Gamma-function constants and panel quadrature helpers.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use statrs::function::gamma::gamma;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(20).unwrap()))
}

/// Normalization of <v>^{-1-2s} on the real line.
pub fn m1_constant(s: f64) -> f64 {
    gamma(0.5 + s) / (PI.sqrt() * gamma(s))
}

/// Constant of the fractional Laplacian with symbol |xi|^{2s}.
pub fn frac_laplacian_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(0.5 + s) / (PI.sqrt() * gamma(-s).abs())
}

/// 20-point Gauss-Legendre on each consecutive pair of `edges`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(edges: &[f64], mut f: F) -> f64 {
    let gl = rule();
    edges.windows(2).map(|e| gl.integrate(e[0], e[1], &mut f)).sum()
}

/// Integral of `f` over [a, inf) for integrands decaying at least like a power
/// of (u - center). Panels grow geometrically in u - center.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(a: f64, center: f64, mut f: F) -> f64 {
    let d0 = a - center;
    assert!(d0 > 0.0, "tail integral must start to the right of its center");
    let mut edges = Vec::with_capacity(160);
    let mut d = d0;
    edges.push(a);
    while d < d0 * 1e24 {
        d *= 1.5;
        edges.push(center + d);
    }
    integrate_panels(&edges, &mut f)
}
