use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hotspot_pricing::{
    benchmark_expected_cost, exact_expected_cost_mul, expected_cost_het, expected_cost_hom, mc_benchmark_cost,
    mc_expected_cost_het, mc_expected_cost_hom, mc_expected_cost_mul, optimal_price_het_with, optimal_price_hom_with,
    optimal_price_mul_with, presets, EstimateWithCI, MarketParams, PricingSolution,
};
use serde::Serialize;

use crate::config::Config;
use crate::csv;
use crate::error::{CliError, CliResult};
use crate::sweep::{run_sweep, Experiment, SweepSpec};
use crate::validate::{render_report, run_validation, verdict};

#[derive(Debug, Parser)]
#[command(name = "hotspot-pricing", version, about = "Reward pricing for personal-hotspot data sharing")]
pub struct Cli {
    /// JSON config with optional market, tolerance, sweep, validation and monte_carlo sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte Carlo seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trial count; overrides the config.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Built-in market; overrides the config market.
    #[arg(long, global = true, value_enum)]
    pub market: Option<MarketPreset>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarketPreset {
    /// One type, mean usage 1.7 GB, 1e-3 pHs/m^2, eps $0.5.
    Baseline,
    /// Baseline with mean usage 1.9 GB.
    HeavyUsage,
    /// Two types with mean usages 0.5 and 2.9 GB, eps $0.2.
    TwoType,
    /// Mean usage 1.8 GB and 0.29 GB demand, for competing travelers.
    Overlap,
}

impl MarketPreset {
    pub fn params(self) -> MarketParams {
        match self {
            MarketPreset::Baseline => presets::baseline(),
            MarketPreset::HeavyUsage => presets::heavy_usage(),
            MarketPreset::TwoType => presets::two_type(2.0, 2.4),
            MarketPreset::Overlap => presets::overlap(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    Hom,
    Het,
    Mul,
    Benchmark,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal price against one pH type.
    PriceHom,
    /// Optimal price against several pH types.
    PriceHet,
    /// Optimal price with competing travelers.
    PriceMul {
        /// Traveler density per m^2; overrides the market's.
        #[arg(long)]
        traveler_density: Option<f64>,
    },
    /// Expected cost under complete information.
    Benchmark,
    /// Simulated expected cost at a price, next to its analytic value.
    Simulate {
        #[arg(long, value_enum)]
        model: SimModel,
        /// Posted price in USD; not used by the benchmark.
        #[arg(long)]
        price: Option<f64>,
    },
    /// Parameter sweep as CSV, from a preset or the config's sweep section.
    Sweep {
        /// fig5, fig6, fig7 or fig8.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Analytic-vs-simulation report; exits 1 if any |z| > 3.
    Validate {
        /// Test hook: shifts the analytic value of one quantity (benchmark, hom, het, mul).
        #[arg(long)]
        corrupt: Option<String>,
    },
}

/// Text to emit and the verdict that decides the exit status.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub verdict: CliResult<()>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, verdict: Ok(()) }
    }
}

#[derive(Serialize)]
struct PriceReport<'a> {
    model: &'a str,
    #[serde(flatten)]
    solution: PricingSolution,
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    model: &'a str,
    price: Option<f64>,
    analytic: f64,
    estimate: EstimateWithCI,
    z: f64,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn market(cli: &Cli, cfg: &Config) -> MarketParams {
    match (cli.market, &cfg.market) {
        (Some(preset), _) => preset.params(),
        (None, Some(m)) => m.clone(),
        (None, None) => presets::baseline(),
    }
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.monte_carlo.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.monte_carlo.n_trials = trials;
    }
    cfg.monte_carlo.validate()?;
    let tol = cfg.tolerance;
    let params = market(cli, &cfg);

    match &cli.command {
        Command::PriceHom => Ok(Output::ok(json(&PriceReport {
            model: "hom",
            solution: optimal_price_hom_with(&params, &tol)?,
        }))),
        Command::PriceHet => Ok(Output::ok(json(&PriceReport {
            model: "het",
            solution: optimal_price_het_with(&params, &tol)?,
        }))),
        Command::PriceMul { traveler_density } => {
            let params = match traveler_density {
                Some(lt) => params.with_traveler_density(*lt),
                None => params,
            };
            Ok(Output::ok(json(&PriceReport {
                model: "mul",
                solution: optimal_price_mul_with(&params, &tol)?,
            })))
        }
        Command::Benchmark => {
            #[derive(Serialize)]
            struct Report {
                expected_cost: f64,
            }
            Ok(Output::ok(json(&Report {
                expected_cost: benchmark_expected_cost(&params)?,
            })))
        }
        Command::Simulate { model, price } => {
            let mc = cfg.monte_carlo;
            let need_price = || {
                price.ok_or_else(|| CliError::Config("--price is required for this model".into()))
            };
            let (label, analytic, estimate) = match model {
                SimModel::Benchmark => (
                    "benchmark",
                    benchmark_expected_cost(&params)?,
                    mc_benchmark_cost(&params, mc.n_trials, mc.seed)?,
                ),
                SimModel::Hom => {
                    let p = need_price()?;
                    ("hom", expected_cost_hom(p, &params)?, mc_expected_cost_hom(p, &params, mc.n_trials, mc.seed)?)
                }
                SimModel::Het => {
                    let p = need_price()?;
                    ("het", expected_cost_het(p, &params)?, mc_expected_cost_het(p, &params, mc.n_trials, mc.seed)?)
                }
                SimModel::Mul => {
                    let p = need_price()?;
                    (
                        "mul",
                        exact_expected_cost_mul(p, &params)?,
                        mc_expected_cost_mul(p, &params, mc.n_trials, mc.seed)?,
                    )
                }
            };
            let price = if *model == SimModel::Benchmark { None } else { *price };
            Ok(Output::ok(json(&SimulationReport {
                model: label,
                price,
                analytic,
                estimate,
                z: estimate.z_score(analytic),
            })))
        }
        Command::Sweep { preset } => {
            let spec = match (preset, &cfg.sweep) {
                (Some(name), _) => {
                    let mut spec = SweepSpec::preset(Experiment::from_preset(name)?);
                    spec.base = cli.market.map(MarketPreset::params);
                    spec
                }
                (None, Some(spec)) => spec.clone(),
                (None, None) => {
                    return Err(CliError::Config(
                        "sweep needs --preset or a sweep section in --config".into(),
                    ))
                }
            };
            let rows = run_sweep(&spec, &tol, &cfg.monte_carlo)?;
            Ok(Output::ok(csv::render(&rows)))
        }
        Command::Validate { corrupt } => {
            let rows = run_validation(&params, &cfg.validation, &cfg.monte_carlo, corrupt.as_deref())?;
            Ok(Output {
                text: render_report(&rows),
                verdict: verdict(&rows),
            })
        }
    }
}

/// Writes `text` to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}
