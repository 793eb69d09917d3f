//! Decay-rate fitting, eps sweeps and the invariant suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks::{self, CheckResult};
use crate::config::ModelConfig;
use crate::ensemble::{initial_field, random_admissible_field, InitialData};
use crate::error::{Error, Result};
use crate::evolution::{evolve_and_record, Record, SimState, Stepper};
use crate::field::DistributionField;
use crate::hyponorm::HypoNorm;
use crate::model::Model;
use crate::transport::TransportScheme;

pub const DEFAULT_EPS: [f64; 5] = [1.0, 0.5, 0.25, 0.125, 0.0625];
pub const SCALING_EPS: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda_hat: f64,
    pub c_hat: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    pub window: (f64, f64),
}

/// Least-squares line through log(values) over the last `window` fraction
/// of the time span.
pub fn fit_decay(times: &[f64], values: &[f64], window: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Mismatch { expected: times.len(), got: values.len() });
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Series(format!("window fraction {window} outside (0, 1]")));
    }
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Err(Error::Series("empty series".into()));
    };
    let start = t1 - window * (t1 - t0);
    let pts: Vec<(f64, f64)> = times.iter().zip(values).filter(|(t, _)| **t >= start - 1e-12).map(|(t, v)| (*t, *v)).collect();
    if pts.len() < 3 {
        return Err(Error::Series(format!("{} points in the fit window", pts.len())));
    }
    if pts.iter().any(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Series("zero or negative value in the fit window".into()));
    }
    if pts.last().unwrap().1 > pts[0].1 {
        return Err(Error::Series("series grows over the fit window".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let residual = (pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { lambda_hat: -slope, c_hat: intercept.exp(), residual, window: (pts[0].0, pts.last().unwrap().0) })
}

/// Records up to (excluding) the first one whose norm falls below
/// `floor` times the initial norm; beyond that only round-off remains.
pub fn above_floor(records: &[Record], floor: f64) -> &[Record] {
    let Some(first) = records.first() else { return records };
    let cut = floor * first.h_norm;
    let end = records.iter().position(|r| r.h_norm < cut).unwrap_or(records.len());
    &records[..end]
}

/// eps^{-2s} int |f_perp|^2 e^{2 lambda t} dt by the trapezoidal rule.
pub fn dissipation_integral(records: &[Record], lambda: f64, collision_scale: f64) -> f64 {
    let g = |r: &Record| r.micro_norm.powi(2) * (2.0 * lambda * r.t).exp();
    collision_scale * records.windows(2).map(|p| 0.5 * (p[1].t - p[0].t) * (g(&p[0]) + g(&p[1]))).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialChoice {
    Registry(InitialData),
    /// Random admissible field drawn from the run's seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub eps_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub initial: InitialChoice,
    pub window: f64,
    /// Relative norm level below which records are dropped from the fit.
    pub floor: f64,
    pub lambda_floor: f64,
    pub spread_limit: f64,
    pub residual_limit: f64,
    /// Largest admissible log-log slope of the dissipation integral
    /// against 1/eps, fitted over eps at or below the geometric middle of
    /// the sweep.
    pub dissipation_trend_limit: f64,
    pub coercivity_samples: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            eps_list: DEFAULT_EPS.to_vec(),
            seeds: vec![0],
            initial: InitialChoice::Registry(InitialData::Mixed),
            window: 0.8,
            floor: 1e-12,
            lambda_floor: 1e-2,
            spread_limit: 5.0,
            residual_limit: 0.5,
            dissipation_trend_limit: 0.5,
            coercivity_samples: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub eps: f64,
    pub seed: u64,
    pub lambda_hat: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub dissipation_integral: f64,
    pub min_coercivity_ratio: f64,
    /// max |mass(t) - mass(0)| / (|f_in| max(t, 1)).
    pub mass_drift_rate: f64,
    pub initial_norm: f64,
    pub error: Option<String>,
}

impl RunReport {
    fn failed(eps: f64, seed: u64, err: &Error) -> Self {
        Self {
            eps,
            seed,
            lambda_hat: f64::NAN,
            fit_window: (f64::NAN, f64::NAN),
            fit_residual: f64::NAN,
            c_hat: f64::NAN,
            dissipation_integral: f64::NAN,
            min_coercivity_ratio: f64::NAN,
            mass_drift_rate: f64::NAN,
            initial_norm: f64::NAN,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub min_lambda: f64,
    pub max_lambda: f64,
    pub spread: f64,
    pub max_fit_residual: f64,
    pub min_coercivity_ratio: f64,
    pub coercivity_spread: f64,
    pub dissipation_trend: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub config: ModelConfig,
    pub options: SweepOptions,
    pub runs: Vec<RunReport>,
    pub verdict: Verdict,
}

/// One trajectory with its fitted report and full series.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub series: Vec<Record>,
}

fn initial_for(model: &Model, choice: InitialChoice, seed: u64) -> Result<DistributionField> {
    match choice {
        InitialChoice::Registry(kind) => initial_field(model, kind),
        InitialChoice::Random => random_admissible_field(model, &mut ChaCha8Rng::seed_from_u64(seed)),
    }
}

/// Smallest coercivity ratio over a seeded random ensemble at one eps.
pub fn min_coercivity(model: &Model, eps: f64, samples: usize, seed: u64) -> Result<f64> {
    let norm = HypoNorm::new(model, eps, model.cfg.delta);
    let ensemble = checks::random_ensemble(model, samples, seed)?;
    let mut worst = f64::INFINITY;
    for f in &ensemble {
        worst = worst.min(norm.coercivity_functional(f)?.ratio);
    }
    Ok(worst)
}

/// Evolve one (eps, seed) trajectory and fit it.
pub fn run_single(model: &Model, eps: f64, seed: u64, opts: &SweepOptions) -> Result<RunOutput> {
    let res = &model.cfg.resolution;
    let f = initial_for(model, opts.initial, seed)?;
    let mut state = SimState::new(f, model);
    let stepper = Stepper::new(model, eps, res.dt, TransportScheme::ImplicitUpwind)?;
    let norm = HypoNorm::new(model, eps, model.cfg.delta);
    let series = evolve_and_record(&mut state, &stepper, &norm, res.t_final, res.record_every)?;
    let usable = above_floor(&series, opts.floor);
    let times: Vec<f64> = usable.iter().map(|r| r.t).collect();
    let values: Vec<f64> = usable.iter().map(|r| r.h_norm).collect();
    let fit = fit_decay(&times, &values, opts.window)?;
    let initial_norm = series[0].h_norm;
    let mass0 = series[0].mass;
    let mass_drift_rate = series
        .iter()
        .map(|r| (r.mass - mass0).abs() / (initial_norm * r.t.max(1.0)))
        .fold(0.0, f64::max);
    let report = RunReport {
        eps,
        seed,
        lambda_hat: fit.lambda_hat,
        fit_window: fit.window,
        fit_residual: fit.residual,
        c_hat: fit.c_hat,
        dissipation_integral: dissipation_integral(usable, fit.lambda_hat, model.collision_scale(eps)),
        min_coercivity_ratio: min_coercivity(model, eps, opts.coercivity_samples, seed.wrapping_add(0x5eed))?,
        mass_drift_rate,
        initial_norm,
        error: None,
    };
    Ok(RunOutput { report, series })
}

fn ratio_of_extremes(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let lo = xs.clone().fold(f64::INFINITY, f64::min);
    let hi = xs.fold(f64::NEG_INFINITY, f64::max);
    (lo, hi, hi / lo)
}

fn judge(runs: &[RunReport], opts: &SweepOptions) -> Verdict {
    let mut failures = Vec::new();
    for r in runs {
        if let Some(e) = &r.error {
            failures.push(format!("eps = {}, seed = {}: {e}", r.eps, r.seed));
        }
    }
    let ok: Vec<&RunReport> = runs.iter().filter(|r| r.error.is_none()).collect();
    let (min_lambda, max_lambda, spread) = ratio_of_extremes(ok.iter().map(|r| r.lambda_hat));
    let max_fit_residual = ok.iter().map(|r| r.fit_residual).fold(0.0, f64::max);
    let (min_c, _, c_spread) = ratio_of_extremes(ok.iter().map(|r| r.min_coercivity_ratio));
    let (e_lo, _, e_ratio) = ratio_of_extremes(ok.iter().map(|r| r.eps));
    let middle = e_lo * e_ratio.sqrt();
    let small: Vec<&&RunReport> = ok.iter().filter(|r| r.eps <= middle * (1.0 + 1e-12)).collect();
    let xs: Vec<f64> = small.iter().map(|r| 1.0 / r.eps).collect();
    let ys: Vec<f64> = small.iter().map(|r| r.dissipation_integral).collect();
    let dissipation_trend = if xs.len() >= 2 && xs.iter().any(|x| *x != xs[0]) && ys.iter().all(|y| *y > 0.0) {
        crate::moments::loglog_slope(&xs, &ys)
    } else {
        0.0
    };
    if ok.is_empty() {
        failures.push("no successful run".into());
    }
    if min_lambda < opts.lambda_floor {
        failures.push(format!("min lambda_hat {min_lambda:.4e} below {:e}", opts.lambda_floor));
    }
    if spread > opts.spread_limit {
        failures.push(format!("lambda_hat spread {spread:.3} above {}", opts.spread_limit));
    }
    if max_fit_residual > opts.residual_limit {
        failures.push(format!("fit residual {max_fit_residual:.3e} above {:e}", opts.residual_limit));
    }
    if !(min_c > 0.0) {
        failures.push(format!("coercivity ratio {min_c:.3e} not positive"));
    }
    if c_spread > opts.spread_limit {
        failures.push(format!("coercivity spread {c_spread:.3} above {}", opts.spread_limit));
    }
    if dissipation_trend > opts.dissipation_trend_limit {
        failures.push(format!("dissipation integral grows like eps^-{dissipation_trend:.3}"));
    }
    Verdict {
        min_lambda,
        max_lambda,
        spread,
        max_fit_residual,
        min_coercivity_ratio: min_c,
        coercivity_spread: c_spread,
        dissipation_trend,
        passed: failures.is_empty(),
        failures,
    }
}

/// Run every (eps, seed) pair in parallel. Failed runs are reported in
/// place without stopping the others; the output order follows
/// `eps_list` then `seeds`.
pub fn run_sweep_with_series(cfg: &ModelConfig, opts: &SweepOptions) -> Result<(DecayReport, Vec<Option<Vec<Record>>>)> {
    let model = Model::build(cfg)?;
    let jobs: Vec<(f64, u64)> = opts.eps_list.iter().flat_map(|&e| opts.seeds.iter().map(move |&s| (e, s))).collect();
    let outputs: Vec<(RunReport, Option<Vec<Record>>)> = jobs
        .par_iter()
        .map(|&(eps, seed)| match run_single(&model, eps, seed, opts) {
            Ok(out) => (out.report, Some(out.series)),
            Err(e) => (RunReport::failed(eps, seed, &e), None),
        })
        .collect();
    let (runs, series): (Vec<_>, Vec<_>) = outputs.into_iter().unzip();
    let verdict = judge(&runs, opts);
    Ok((DecayReport { config: *cfg, options: opts.clone(), runs, verdict }, series))
}

pub fn run_sweep(cfg: &ModelConfig, opts: &SweepOptions) -> Result<DecayReport> {
    run_sweep_with_series(cfg, opts).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub eps_list: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Multiplier applied to c_M in the zero-flux check (1 for none).
    pub cm_factor: f64,
    pub fixed_point_steps: usize,
    pub scaling_eps: Vec<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { eps_list: DEFAULT_EPS.to_vec(), samples: 100, seed: 0, cm_factor: 1.0, fixed_point_steps: 100, scaling_eps: SCALING_EPS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantLedger {
    pub config: ModelConfig,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl InvariantLedger {
    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Every module-level invariant for one configuration.
pub fn run_invariant_suite(cfg: &ModelConfig, opts: &SuiteOptions) -> Result<InvariantLedger> {
    let model = Model::build(cfg)?;
    let ensemble = checks::random_ensemble(&model, opts.samples, opts.seed)?;
    let mut out = Vec::new();

    let [r210, r211, r212] = checks::twisted_identity_residuals(&model, &ensemble, &opts.eps_list);
    out.push(CheckResult::at_most("identity_rho_eps_split", r210, 1e-12));
    out.push(CheckResult::at_most("identity_rho_eps_micro", r211, 1e-12));
    out.push(CheckResult::at_most("identity_j_eps_micro", r212, 1e-12));

    let flux = checks::zero_flux_residual(&model, opts.samples, opts.seed + 1, opts.cm_factor)?;
    out.push(CheckResult::at_most("zero_flux", flux, 1e-12));
    let dec = checks::boundary_decomposition_residual(&model, opts.samples, opts.seed + 2)?;
    out.push(CheckResult::at_most("boundary_flux_decomposition", dec, 1e-10));
    let orth = checks::projection_orthogonality(&model, opts.samples, opts.seed + 3)?;
    out.push(CheckResult::at_most("diffusive_projection_orthogonality", orth, 1e-12));

    let [h1, poincare, dual] = checks::elliptic_bound_ratios(&model, opts.samples, opts.seed + 4);
    out.push(CheckResult::at_most("elliptic_h1_bound", h1, 1.0 + 1e-10));
    out.push(CheckResult::at_most("elliptic_poincare_bound", poincare, 1.0 + 1e-10));
    out.push(CheckResult::at_most("elliptic_dual_bound", dual, 1.0 + 1e-10));

    let (lo, hi) = checks::norm_equivalence(&model, &ensemble, &opts.eps_list, cfg.delta);
    out.push(CheckResult::at_least("norm_equivalence_lower", lo, 0.5));
    out.push(CheckResult::at_most("norm_equivalence_upper", hi, 1.5));

    let drift = checks::equilibrium_drift(&model, cfg.eps, cfg.resolution.dt, opts.fixed_point_steps)?;
    out.push(CheckResult::at_most("equilibrium_fixed_point", drift, 1e-10));

    if opts.scaling_eps.len() >= 2 {
        for (name, slope, target) in checks::scaling_slopes(&model, &opts.scaling_eps)? {
            out.push(CheckResult::at_most(name, (slope - target).abs(), 0.15));
        }
    }

    let passed = out.iter().all(|c| c.passed);
    Ok(InvariantLedger { config: *cfg, checks: out, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(c: f64, rate: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let v = t.iter().map(|t| c * (-rate * t).exp()).collect();
        (t, v)
    }

    #[test]
    fn exact_exponentials() {
        let (t, v) = series(1.0, 2.0);
        let fit = fit_decay(&t, &v, 0.8).unwrap();
        assert!((fit.lambda_hat - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        let (t, v) = series(3.0, 1.0);
        let fit = fit_decay(&t, &v, 0.8).unwrap();
        assert!((fit.lambda_hat - 1.0).abs() < 1e-12);
        assert!((fit.c_hat - 3.0).abs() < 1e-10);
        assert!((fit.window.0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unusable_series_rejected() {
        let (t, _) = series(1.0, 1.0);
        assert!(fit_decay(&t, &vec![0.0; t.len()], 0.8).is_err());
        let growing: Vec<f64> = t.iter().map(|t| t.exp()).collect();
        assert!(fit_decay(&t, &growing, 0.8).is_err());
        assert!(fit_decay(&t[..2], &[1.0, 0.5], 0.8).is_err());
    }

    #[test]
    fn floor_truncates_series() {
        let recs: Vec<Record> = [1.0, 1e-3, 1e-12, 1e-11]
            .iter()
            .enumerate()
            .map(|(i, &h)| Record { t: i as f64, h_norm: h, triple_norm: h, micro_norm: h, mass: 0.0, boundary_diss: 0.0 })
            .collect();
        assert_eq!(above_floor(&recs, 1e-9).len(), 2);
    }

    #[test]
    fn dissipation_of_matching_exponential_is_linear_in_time() {
        let recs: Vec<Record> = (0..=10)
            .map(|i| {
                let t = i as f64;
                Record { t, h_norm: 1.0, triple_norm: 1.0, micro_norm: (-0.5 * t).exp(), mass: 0.0, boundary_diss: 0.0 }
            })
            .collect();
        assert!((dissipation_integral(&recs, 0.5, 2.0) - 20.0).abs() < 1e-12);
    }
}
