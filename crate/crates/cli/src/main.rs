use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hypokinetic::config::{AlphaSpec, Geometry, ModelConfig, OperatorKind};
use hypokinetic::ensemble::InitialData;
use hypokinetic::harness::{self, InitialChoice, SuiteOptions, SweepOptions};
use hypokinetic::io;
use hypokinetic::model::Model;
use hypokinetic::moments::{second_moment_scaling, sharp_scaling_probe};

#[derive(Parser)]
#[command(name = "hypokinetic", version, about = "Fractional-diffusion kinetic decay experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one trajectory and write its time series.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Initial::Mixed)]
        initial: Initial,
    },
    /// Evolve over a grid of eps and judge uniformity of the decay rates.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Initial::Mixed)]
        initial: Initial,
        /// Seeds for random initial data (comma separated).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Run the invariant suite and write a JSON ledger.
    Check {
        #[command(flatten)]
        common: Common,
        /// Multiply the wall normalization constant (fault injection).
        #[arg(long, default_value_t = 1.0)]
        cm_factor: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Scaling slopes of the twisted moments and of the weighted second moment.
    Moments {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with (a subset of) the model configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// eps values (comma separated).
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    #[arg(long)]
    vmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_enum)]
    operator: Option<Operator>,
    #[arg(long, value_enum)]
    geometry: Option<Geom>,
    /// Accommodation coefficient at both walls.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Bgk,
    Kernel,
    Levy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Geom {
    Slab,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    Macro,
    Micro,
    Mixed,
    Random,
}

impl Initial {
    fn choice(self) -> InitialChoice {
        match self {
            Initial::Macro => InitialChoice::Registry(InitialData::Macro),
            Initial::Micro => InitialChoice::Registry(InitialData::MicroBump),
            Initial::Mixed => InitialChoice::Registry(InitialData::Mixed),
            Initial::Random => InitialChoice::Random,
        }
    }
}

impl Common {
    fn config(&self) -> anyhow::Result<ModelConfig> {
        let mut cfg = match &self.config {
            Some(p) => io::read_config(p).with_context(|| format!("reading {}", p.display()))?,
            None => ModelConfig::default(),
        };
        let r = &mut cfg.resolution;
        if let Some(v) = self.nx {
            r.nx = v;
        }
        if let Some(v) = self.nv {
            r.nv = v;
        }
        if let Some(v) = self.vmax {
            r.vmax = v;
        }
        if let Some(v) = self.dt {
            r.dt = v;
        }
        if let Some(v) = self.t_final {
            r.t_final = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.s {
            cfg.s = v;
        }
        if let Some(op) = self.operator {
            cfg.operator = match op {
                Operator::Bgk => OperatorKind::Bgk,
                Operator::Kernel => OperatorKind::BoltzmannKernel,
                Operator::Levy => OperatorKind::LevyFp,
            };
        }
        if let Some(g) = self.geometry {
            cfg.geometry = match g {
                Geom::Slab => Geometry::Slab,
                Geom::Torus => Geometry::Torus,
            };
        }
        if let Some(a) = self.alpha {
            cfg.alpha = AlphaSpec::uniform(a);
        }
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn eps_list(&self, default: &[f64]) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(|| default.to_vec())
    }

    fn out_dir(&self) -> anyhow::Result<&Path> {
        std::fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(&self.out_dir)
    }
}

fn series_name(eps: f64, seed: u64) -> String {
    format!("series_eps{eps}_seed{seed}.csv")
}

fn simulate(common: &Common, initial: Initial) -> anyhow::Result<bool> {
    let cfg = common.config()?;
    let eps = match common.eps.as_deref() {
        None => cfg.eps,
        Some([e]) => *e,
        Some(_) => bail!("simulate takes a single --eps value"),
    };
    let model = Model::build(&cfg)?;
    let opts = SweepOptions { initial: initial.choice(), ..Default::default() };
    let out = harness::run_single(&model, eps, cfg.seed, &opts)?;
    let dir = common.out_dir()?;
    io::write_series(&dir.join(series_name(eps, cfg.seed)), &out.series)?;
    io::write_grid(&dir.join("grid.csv"), &model)?;
    io::write_json(&dir.join("metadata.json"), &io::RunMetadata::new(&model))?;
    io::write_json(&dir.join("run.json"), &out.report)?;
    let r = &out.report;
    println!("eps = {eps}: lambda_hat = {:.4}, C_hat = {:.3}, fit residual = {:.2e}", r.lambda_hat, r.c_hat, r.fit_residual);
    Ok(true)
}

fn sweep(common: &Common, initial: Initial, seeds: Option<Vec<u64>>) -> anyhow::Result<bool> {
    let cfg = common.config()?;
    let opts = SweepOptions {
        eps_list: common.eps_list(&harness::DEFAULT_EPS),
        seeds: seeds.unwrap_or_else(|| vec![cfg.seed]),
        initial: initial.choice(),
        ..Default::default()
    };
    let (report, series) = harness::run_sweep_with_series(&cfg, &opts)?;
    let dir = common.out_dir()?;
    for (run, s) in report.runs.iter().zip(&series) {
        if let Some(s) = s {
            io::write_series(&dir.join(series_name(run.eps, run.seed)), s)?;
        }
    }
    io::write_json(&dir.join("report.json"), &report)?;
    for run in &report.runs {
        match &run.error {
            None => println!(
                "eps = {:<8} seed = {:<3} lambda_hat = {:>8.4}  residual = {:.2e}  min coercivity = {:.3e}",
                run.eps, run.seed, run.lambda_hat, run.fit_residual, run.min_coercivity_ratio
            ),
            Some(e) => println!("eps = {:<8} seed = {:<3} failed: {e}", run.eps, run.seed),
        }
    }
    let v = &report.verdict;
    println!("lambda_hat in [{:.4}, {:.4}], spread {:.3}", v.min_lambda, v.max_lambda, v.spread);
    for f in &v.failures {
        println!("FAIL {f}");
    }
    println!("{}", if v.passed { "PASS" } else { "FAIL" });
    Ok(v.passed)
}

fn check(common: &Common, cm_factor: f64, samples: usize) -> anyhow::Result<bool> {
    let cfg = common.config()?;
    let opts = SuiteOptions {
        eps_list: common.eps_list(&harness::DEFAULT_EPS),
        samples,
        seed: cfg.seed,
        cm_factor,
        ..Default::default()
    };
    let ledger = harness::run_invariant_suite(&cfg, &opts)?;
    io::write_json(&common.out_dir()?.join("invariants.json"), &ledger)?;
    for c in &ledger.checks {
        println!("{} {:<40} {:>12.4e} (tolerance {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    Ok(ledger.passed)
}

fn moments(common: &Common) -> anyhow::Result<bool> {
    let cfg = common.config()?;
    let model = Model::build(&cfg)?;
    let eps = common.eps_list(&harness::SCALING_EPS);
    let m = model.equilibrium();
    let probe = sharp_scaling_probe(m, &model.grid, &eps);
    let second = second_moment_scaling(m, &model.grid, &eps)?;
    let names = ["rho_eps", "J_eps", "second moment (micro)"];
    for ((name, slope), target) in names.iter().zip(probe.slopes).zip(probe.expected) {
        println!("{name:<24} slope {slope:>8.4}  target {target:>8.4}");
    }
    println!("{:<24} slope {:>8.4}  target {:>8.4}", "second moment (M)", second.slope, second.expected);
    let value = serde_json::json!({ "probe": probe, "second_moment": second });
    io::write_json(&common.out_dir()?.join("moments.json"), &value)?;
    let tol = 0.15;
    Ok(probe.max_deviation() <= tol && (second.slope - second.expected).abs() <= tol)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { common, initial } => simulate(&common, initial),
        Command::Sweep { common, initial, seeds } => sweep(&common, initial, seeds),
        Command::Check { common, cm_factor, samples } => check(&common, cm_factor, samples),
        Command::Moments { common } => moments(&common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
