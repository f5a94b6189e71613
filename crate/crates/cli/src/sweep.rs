//! Parameter sweeps behind the figure presets and custom grids.
//!
//! A sweep expands into grid points, prices each point independently (in
//! parallel), and emits rows in grid order. Monte Carlo trial streams are
//! keyed by `seed + row index`, so the CSV is byte-stable for a fixed spec.

use hotspot_pricing::{
    benchmark_expected_cost, mc_expected_cost_het, mc_expected_cost_hom, mc_expected_cost_mul, optimal_exact_cost_mul,
    optimal_price_het_with, optimal_price_hom_with, optimal_price_mul_with, presets, MarketParams, PricingError,
    ToleranceConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::McSettings;
use crate::csv::SweepRow;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Cost against pH density for several reservation utilities.
    CostVsDensity,
    /// Price for each hour of a day with hour-dependent pH density.
    PriceVsHour,
    /// Two-type cost against the usage gap between the types.
    CostVsDeltaMu,
    /// Cost against the density of competing travelers.
    CostVsTravelerDensity,
    Custom,
}

impl Experiment {
    /// Short preset name used on the command line.
    pub fn from_preset(name: &str) -> CliResult<Self> {
        match name {
            "fig5" => Ok(Self::CostVsDensity),
            "fig6" => Ok(Self::PriceVsHour),
            "fig7" => Ok(Self::CostVsDeltaMu),
            "fig8" => Ok(Self::CostVsTravelerDensity),
            other => Err(CliError::Config(format!(
                "unknown preset {other:?}; expected fig5, fig6, fig7 or fig8"
            ))),
        }
    }

    fn swept_name(&self) -> Option<&'static str> {
        match self {
            Self::CostVsDensity => Some("density_per_m2"),
            Self::PriceVsHour => Some("hour"),
            Self::CostVsDeltaMu => Some("delta_mu_gb"),
            Self::CostVsTravelerDensity => Some("traveler_density_per_m2"),
            Self::Custom => None,
        }
    }

    fn default_grid(&self) -> Vec<f64> {
        match self {
            Self::CostVsDensity => vec![1e-4, 2e-4, 3e-4, 5e-4, 7e-4, 1e-3, 1.5e-3, 2e-3, 3e-3, 5e-3],
            Self::PriceVsHour => (0..24).map(f64::from).collect(),
            Self::CostVsDeltaMu => (0..=12).map(|i| 0.2 * f64::from(i)).collect(),
            Self::CostVsTravelerDensity => vec![0.0, 2e-4, 4e-4, 6e-4, 8e-4, 1e-3, 1.2e-3, 1.5e-3, 2e-3, 3e-3],
            Self::Custom => Vec::new(),
        }
    }

    fn default_series(&self) -> Vec<f64> {
        match self {
            Self::CostVsDensity => vec![0.2, 0.5, 1.0],
            Self::CostVsDeltaMu => vec![1.8, 2.0],
            _ => Vec::new(),
        }
    }

    fn default_base(&self) -> MarketParams {
        match self {
            Self::CostVsDeltaMu => presets::two_type(2.0, 0.0),
            Self::CostVsTravelerDensity => presets::overlap(0.0),
            _ => presets::baseline(),
        }
    }
}

/// Pricing model applied at every point of a custom sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Hom,
    Het,
    Mul,
}

impl Model {
    pub fn label(&self) -> &'static str {
        match self {
            Model::Hom => "hom",
            Model::Het => "het",
            Model::Mul => "mul",
        }
    }

    fn default_for(params: &MarketParams) -> Self {
        match (params.ph_types.len(), params.traveler_density > 0.0) {
            (1, true) => Model::Mul,
            (1, false) => Model::Hom,
            _ => Model::Het,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweptParam {
    pub name: String,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub experiment: Experiment,
    /// Required for `custom`; for a preset, replaces its grid (the name must match).
    #[serde(default)]
    pub swept_param: Option<SweptParam>,
    /// Market every point starts from; each preset has its own default.
    #[serde(default)]
    pub base: Option<MarketParams>,
    /// Custom sweeps only; inferred from the market when absent.
    #[serde(default)]
    pub model: Option<Model>,
    /// One curve per value: reservation utilities (USD) for cost-vs-density,
    /// quotas (GB) for cost-vs-delta-mu.
    #[serde(default)]
    pub series: Option<Vec<f64>>,
    #[serde(default)]
    pub mc: Option<McSettings>,
}

/// Names accepted by custom sweeps; per-type fields apply to every type.
pub const CUSTOM_PARAMS: &[&str] = &[
    "density_per_m2",
    "traveler_density_per_m2",
    "reservation_usd",
    "roaming_fee_usd",
    "demand_gb",
    "radius_m",
    "quota_gb",
    "overage_rate_per_gb",
    "mean_gb",
    "std_gb",
];

pub fn apply_param(params: &mut MarketParams, name: &str, value: f64) -> CliResult<()> {
    match name {
        "traveler_density_per_m2" => params.traveler_density = value,
        "reservation_usd" => params.reservation = value,
        "roaming_fee_usd" => params.roaming_fee = value,
        "demand_gb" => params.demand = value,
        "radius_m" => params.radius = value,
        _ => {
            for ty in &mut params.ph_types {
                match name {
                    "density_per_m2" => ty.density = value,
                    "quota_gb" => ty.plan.quota = value,
                    "overage_rate_per_gb" => ty.plan.overage_rate = value,
                    "mean_gb" => ty.usage.mean = value,
                    "std_gb" => ty.usage.std = value,
                    _ => {
                        return Err(CliError::Config(format!(
                            "unknown swept parameter {name:?}; expected one of {}",
                            CUSTOM_PARAMS.join(", ")
                        )))
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_grid(name: &str, grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::Config(format!("grid for {name} is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("grid for {name} has a non-finite value")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("grid for {name} is not strictly increasing")));
    }
    Ok(())
}

impl SweepSpec {
    pub fn preset(experiment: Experiment) -> Self {
        Self {
            experiment,
            swept_param: None,
            base: None,
            model: None,
            series: None,
            mc: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(base) = &self.base {
            base.validate().map_err(|e| CliError::Config(format!("sweep.base: {e}")))?;
        }
        if let Some(mc) = &self.mc {
            mc.validate()?;
        }
        if let Some(series) = &self.series {
            check_grid("series", series)?;
        }
        match (self.experiment.swept_name(), &self.swept_param) {
            (None, None) => Err(CliError::Config("custom sweep needs swept_param".into())),
            (None, Some(sp)) => {
                if !CUSTOM_PARAMS.contains(&sp.name.as_str()) {
                    return Err(CliError::Config(format!(
                        "unknown swept parameter {:?}; expected one of {}",
                        sp.name,
                        CUSTOM_PARAMS.join(", ")
                    )));
                }
                check_grid(&sp.name, &sp.grid)
            }
            (Some(want), Some(sp)) => {
                if sp.name != want {
                    return Err(CliError::Config(format!(
                        "this preset sweeps {want:?}, not {:?}",
                        sp.name
                    )));
                }
                check_grid(&sp.name, &sp.grid)?;
                if self.experiment == Experiment::PriceVsHour
                    && sp.grid.iter().any(|&h| h.fract() != 0.0 || !(0.0..24.0).contains(&h))
                {
                    return Err(CliError::Config("hours must be integers in 0..=23".into()));
                }
                Ok(())
            }
            (Some(_), None) => Ok(()),
        }?;
        if self.experiment == Experiment::CostVsDeltaMu {
            if let Some(base) = &self.base {
                if base.ph_types.len() != 2 {
                    return Err(CliError::Config("cost-vs-delta-mu needs exactly two pH types".into()));
                }
            }
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        match &self.swept_param {
            Some(sp) => sp.grid.clone(),
            None => self.experiment.default_grid(),
        }
    }

    fn series(&self) -> Vec<f64> {
        self.series.clone().unwrap_or_else(|| self.experiment.default_series())
    }

    /// Expands the sweep into grid points in output order.
    pub fn points(&self, seed: u64) -> CliResult<Vec<Point>> {
        self.validate()?;
        let base = self.base.clone().unwrap_or_else(|| self.experiment.default_base());
        let grid = self.grid();
        let mut points = Vec::new();
        match self.experiment {
            Experiment::CostVsDensity => {
                for eps in self.series() {
                    for &lam in &grid {
                        points.push(Point {
                            series: format!("eps={}", crate::csv::fmt_num(eps)),
                            swept_value: lam,
                            params: base.clone().with_reservation(eps).with_density(lam),
                            model: Model::Hom,
                        });
                    }
                }
            }
            Experiment::PriceVsHour => {
                let densities = hourly_densities(seed);
                for &hour in &grid {
                    points.push(Point {
                        series: "hour-of-day".into(),
                        swept_value: hour,
                        params: base.clone().with_density(densities[hour as usize]),
                        model: Model::Hom,
                    });
                }
            }
            Experiment::CostVsDeltaMu => {
                let center = 0.5 * (base.ph_types[0].usage.mean + base.ph_types[1].usage.mean);
                for q in self.series() {
                    for &dmu in &grid {
                        let mut params = base.clone();
                        params.ph_types[0].usage.mean = center - 0.5 * dmu;
                        params.ph_types[1].usage.mean = center + 0.5 * dmu;
                        for ty in &mut params.ph_types {
                            ty.plan.quota = q;
                        }
                        points.push(Point {
                            series: format!("Q={}", crate::csv::fmt_num(q)),
                            swept_value: dmu,
                            params,
                            model: Model::Het,
                        });
                    }
                }
            }
            Experiment::CostVsTravelerDensity => {
                for &lt in &grid {
                    points.push(Point {
                        series: "overlap".into(),
                        swept_value: lt,
                        params: base.clone().with_traveler_density(lt),
                        model: Model::Mul,
                    });
                }
            }
            Experiment::Custom => {
                let sp = self.swept_param.as_ref().expect("validated");
                let model = self.model.unwrap_or_else(|| Model::default_for(&base));
                for &x in &grid {
                    let mut params = base.clone();
                    apply_param(&mut params, &sp.name, x)?;
                    points.push(Point {
                        series: model.label().into(),
                        swept_value: x,
                        params,
                        model,
                    });
                }
            }
        }
        Ok(points)
    }
}

/// Hour-of-day pH densities: U[0.1, 0.5]e-3 from 9pm to 7am, U[0.5, 2]e-3
/// from 8am to 8pm, drawn in hour order from `seed`.
pub fn hourly_densities(seed: u64) -> [f64; 24] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [0.0; 24];
    for (hour, slot) in out.iter_mut().enumerate() {
        *slot = if (8..=20).contains(&hour) {
            rng.random_range(0.5e-3..2e-3)
        } else {
            rng.random_range(0.1e-3..0.5e-3)
        };
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub series: String,
    pub swept_value: f64,
    pub params: MarketParams,
    pub model: Model,
}

/// Grid resolution for the exact multi-traveler optimum, whose objective is
/// much dearer to evaluate than the approximation.
const EXACT_GRID_POINTS: usize = 201;

impl Point {
    pub fn evaluate(&self, tol: &ToleranceConfig, mc: &McSettings, seed: u64) -> CliResult<SweepRow> {
        let mut row = SweepRow {
            series: self.series.clone(),
            swept_value: self.swept_value,
            ph_density: self.params.ph_types.iter().map(|t| t.density).sum(),
            ..Default::default()
        };
        match self.price(&mut row, tol, mc, seed) {
            Ok(()) => Ok(row),
            Err(PricingError::Infeasible { .. }) => {
                row.regime = "infeasible".into();
                Ok(row)
            }
            Err(e) => Err(CliError::Config(format!(
                "{} at {} = {}: {e}",
                self.series,
                self.model.label(),
                self.swept_value
            ))),
        }
    }

    fn price(
        &self,
        row: &mut SweepRow,
        tol: &ToleranceConfig,
        mc: &McSettings,
        seed: u64,
    ) -> hotspot_pricing::Result<()> {
        let p = &self.params;
        let sol = match self.model {
            Model::Hom => optimal_price_hom_with(p, tol)?,
            Model::Het => optimal_price_het_with(p, tol)?,
            Model::Mul => optimal_price_mul_with(p, tol)?,
        };
        let est = match self.model {
            Model::Hom => mc_expected_cost_hom(sol.price, p, mc.n_trials, seed)?,
            Model::Het => mc_expected_cost_het(sol.price, p, mc.n_trials, seed)?,
            Model::Mul => mc_expected_cost_mul(sol.price, p, mc.n_trials, seed)?,
        };
        row.price = Some(sol.price);
        row.expected_cost = Some(sol.expected_cost);
        row.regime = sol.regime.label();
        row.mc_mean = Some(est.mean);
        row.mc_std_err = Some(est.std_err);
        match self.model {
            Model::Mul => {
                let exact_tol = tol.with_grid_points(EXACT_GRID_POINTS);
                row.exact_cost = Some(optimal_exact_cost_mul(p, &exact_tol)?.1);
            }
            _ if p.ph_types.len() == 1 => row.benchmark_cost = Some(benchmark_expected_cost(p)?),
            _ => {}
        }
        Ok(())
    }
}

/// Prices every grid point in parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec, tol: &ToleranceConfig, fallback_mc: &McSettings) -> CliResult<Vec<SweepRow>> {
    let mc = spec.mc.unwrap_or(*fallback_mc);
    mc.validate()?;
    let points = spec.points(mc.seed)?;
    points
        .par_iter()
        .enumerate()
        .map(|(i, point)| point.evaluate(tol, &mc, mc.seed.wrapping_add(i as u64)))
        .collect()
}
