//! Analytic-vs-simulation report over the four cost functions.

use std::fmt::Write as _;

use hotspot_pricing::{
    benchmark_expected_cost, exact_expected_cost_mul, expected_cost_het, expected_cost_hom, mc_benchmark_cost,
    mc_expected_cost_het, mc_expected_cost_hom, mc_expected_cost_mul, EstimateWithCI, MarketParams, PhType,
};

use crate::config::{McSettings, ValidationSpec};
use crate::csv::fmt_num;
use crate::error::{CliError, CliResult};

/// Rows whose |z| exceeds this fail.
pub const Z_LIMIT: f64 = 3.0;

/// Traveler density for the multi-traveler rows when neither the market nor
/// the validation section provides one.
pub const DEFAULT_TRAVELER_DENSITY: f64 = 1e-3;

/// Quantity names, as accepted by the `--corrupt` test hook.
pub const QUANTITIES: &[&str] = &["benchmark", "hom", "het", "mul"];

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: &'static str,
    /// Posted price; `None` for the benchmark, which has no posted price.
    pub price: Option<f64>,
    pub analytic: f64,
    pub estimate: EstimateWithCI,
}

impl Comparison {
    pub fn z(&self) -> f64 {
        self.estimate.z_score(self.analytic)
    }

    pub fn passed(&self) -> bool {
        self.z().abs() <= Z_LIMIT
    }
}

/// The market split into two identical types of half the density, so the
/// heterogeneous path is exercised on a market with a known answer.
fn halved(params: &MarketParams) -> MarketParams {
    let mut split = params.clone();
    split.ph_types = params
        .ph_types
        .iter()
        .flat_map(|t| {
            let half = PhType::new(t.plan, t.usage, 0.5 * t.density);
            [half, half]
        })
        .collect();
    split
}

fn default_prices(params: &MarketParams) -> Vec<f64> {
    let (lo, hi) = (params.reservation, params.roaming_fee);
    (0..5).map(|i| lo + (hi - lo) * f64::from(i) / 4.0).collect()
}

/// Runs every comparison. `corrupt` shifts the analytic value of the named
/// quantity, as a negative control for the report.
pub fn run_validation(
    params: &MarketParams,
    spec: &ValidationSpec,
    mc: &McSettings,
    corrupt: Option<&str>,
) -> CliResult<Vec<Comparison>> {
    mc.validate()?;
    params.single_type()?;
    if let Some(name) = corrupt {
        if !QUANTITIES.contains(&name) {
            return Err(CliError::Config(format!(
                "unknown quantity {name:?}; expected one of {}",
                QUANTITIES.join(", ")
            )));
        }
    }
    let prices = spec.prices_usd.clone().unwrap_or_else(|| default_prices(params));
    if prices.is_empty() || prices.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(CliError::Config("validation prices must be a nonempty list of nonnegative numbers".into()));
    }
    let het = halved(params);
    let lt = if params.traveler_density > 0.0 {
        params.traveler_density
    } else {
        spec.traveler_density_per_m2.unwrap_or(DEFAULT_TRAVELER_DENSITY)
    };
    let mul = params.clone().with_traveler_density(lt);

    let mut seed = mc.seed;
    let mut next_seed = || {
        let s = seed;
        seed = seed.wrapping_add(1);
        s
    };
    let n = mc.n_trials;
    let mut rows = vec![Comparison {
        quantity: "benchmark",
        price: None,
        analytic: benchmark_expected_cost(params)?,
        estimate: mc_benchmark_cost(params, n, next_seed())?,
    }];
    for &p in &prices {
        rows.push(Comparison {
            quantity: "hom",
            price: Some(p),
            analytic: expected_cost_hom(p, params)?,
            estimate: mc_expected_cost_hom(p, params, n, next_seed())?,
        });
        rows.push(Comparison {
            quantity: "het",
            price: Some(p),
            analytic: expected_cost_het(p, &het)?,
            estimate: mc_expected_cost_het(p, &het, n, next_seed())?,
        });
        rows.push(Comparison {
            quantity: "mul",
            price: Some(p),
            analytic: exact_expected_cost_mul(p, &mul)?,
            estimate: mc_expected_cost_mul(p, &mul, n, next_seed())?,
        });
    }
    if let Some(name) = corrupt {
        for row in rows.iter_mut().filter(|r| r.quantity == name) {
            row.analytic += 0.05 * row.analytic.abs().max(1.0);
        }
    }
    Ok(rows)
}

/// Plain-text table, one comparison per line, with a summary line.
pub fn render_report(rows: &[Comparison]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>12} {:>14} {:>14} {:>12} {:>8}  result",
        "quantity", "price", "analytic", "mc_mean", "mc_std_err", "z"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>14} {:>14} {:>12} {:>8.3}  {}",
            r.quantity,
            r.price.map(fmt_num).unwrap_or_else(|| "-".into()),
            fmt_num(r.analytic),
            fmt_num(r.estimate.mean),
            fmt_num(r.estimate.std_err),
            r.z(),
            if r.passed() { "PASS" } else { "FAIL" },
        );
    }
    let failed = rows.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "{} of {} comparisons within {Z_LIMIT} standard errors", rows.len() - failed, rows.len());
    out
}

/// Error when any comparison failed.
pub fn verdict(rows: &[Comparison]) -> CliResult<()> {
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::ValidationFailed {
            failed,
            total: rows.len(),
        })
    }
}
