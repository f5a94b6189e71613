//! Market description: tariffs, usage statistics, pH types, and the
//! Poisson/shot-noise geometry that sets the sharing radius.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::numerics::{integrate, ToleranceConfig};

/// Two-part tariff: monthly quota, lump-sum fee, and overage rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffPlan {
    #[serde(rename = "quota_gb")]
    pub quota: f64,
    #[serde(rename = "lump_sum_usd", default)]
    pub lump_sum: f64,
    #[serde(rename = "overage_rate_per_gb")]
    pub overage_rate: f64,
}

impl TariffPlan {
    pub fn new(quota: f64, lump_sum: f64, overage_rate: f64) -> Self {
        Self {
            quota,
            lump_sum,
            overage_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quota > 0.0 && self.quota.is_finite()) {
            return Err(invalid(format!("quota must be positive, got {}", self.quota)));
        }
        if !(self.overage_rate > 0.0 && self.overage_rate.is_finite()) {
            return Err(invalid(format!(
                "overage rate must be positive, got {}",
                self.overage_rate
            )));
        }
        if !(self.lump_sum >= 0.0 && self.lump_sum.is_finite()) {
            return Err(invalid(format!(
                "lump-sum fee must be nonnegative, got {}",
                self.lump_sum
            )));
        }
        Ok(())
    }
}

/// Gaussian monthly usage of one pH population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsageModel {
    #[serde(rename = "mean_gb")]
    pub mean: f64,
    #[serde(rename = "std_gb")]
    pub std: f64,
    /// Variance of the pH's own usage estimate. Carried for completeness; the
    /// cost model treats the estimate as exact.
    #[serde(rename = "est_noise_var_gb2", default)]
    pub est_noise_var: f64,
}

impl UsageModel {
    pub fn new(mean: f64, std: f64) -> Self {
        Self {
            mean,
            std,
            est_noise_var: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(invalid(format!("usage std must be positive, got {}", self.std)));
        }
        if !(self.mean >= 0.0 && self.mean.is_finite()) {
            return Err(invalid(format!(
                "usage mean must be nonnegative, got {}",
                self.mean
            )));
        }
        if !(self.est_noise_var >= 0.0 && self.est_noise_var.is_finite()) {
            return Err(invalid(format!(
                "estimation noise variance must be nonnegative, got {}",
                self.est_noise_var
            )));
        }
        Ok(())
    }
}

/// A class of pHs sharing one tariff and one usage distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhType {
    pub plan: TariffPlan,
    pub usage: UsageModel,
    #[serde(rename = "density_per_m2")]
    pub density: f64,
}

impl PhType {
    pub fn new(plan: TariffPlan, usage: UsageModel, density: f64) -> Self {
        Self {
            plan,
            usage,
            density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        self.usage.validate()?;
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(invalid(format!(
                "pH density must be nonnegative, got {}",
                self.density
            )));
        }
        Ok(())
    }
}

/// Everything a pricing query needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    pub ph_types: Vec<PhType>,
    #[serde(rename = "roaming_fee_usd")]
    pub roaming_fee: f64,
    #[serde(rename = "demand_gb")]
    pub demand: f64,
    #[serde(rename = "reservation_usd")]
    pub reservation: f64,
    #[serde(rename = "radius_m")]
    pub radius: f64,
    #[serde(rename = "traveler_density_per_m2", default)]
    pub traveler_density: f64,
}

impl MarketParams {
    /// Checks every field invariant. A reservation utility above the roaming
    /// fee is reported as [`PricingError::Infeasible`].
    pub fn validate(&self) -> Result<()> {
        if self.ph_types.is_empty() {
            return Err(invalid("market needs at least one pH type".into()));
        }
        for (k, t) in self.ph_types.iter().enumerate() {
            t.validate()
                .map_err(|e| invalid(format!("pH type {}: {e}", k + 1)))?;
        }
        if !(self.demand > 0.0 && self.demand.is_finite()) {
            return Err(invalid(format!("demand must be positive, got {}", self.demand)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.traveler_density >= 0.0 && self.traveler_density.is_finite()) {
            return Err(invalid(format!(
                "traveler density must be nonnegative, got {}",
                self.traveler_density
            )));
        }
        if !(self.reservation > 0.0 && self.reservation.is_finite()) {
            return Err(invalid(format!(
                "reservation utility must be positive, got {}",
                self.reservation
            )));
        }
        if !self.roaming_fee.is_finite() {
            return Err(invalid(format!(
                "roaming fee must be finite, got {}",
                self.roaming_fee
            )));
        }
        if self.reservation > self.roaming_fee {
            return Err(PricingError::Infeasible {
                reservation: self.reservation,
                roaming_fee: self.roaming_fee,
            });
        }
        Ok(())
    }

    /// Validates and returns the only pH type, rejecting K != 1.
    pub fn single_type(&self) -> Result<&PhType> {
        if self.ph_types.len() != 1 {
            return Err(PricingError::UnsupportedMarket(format!(
                "operation needs exactly one pH type, market has {}",
                self.ph_types.len()
            )));
        }
        self.validate()?;
        Ok(&self.ph_types[0])
    }

    /// Expected number of type-`k` pHs (0-based) inside the sharing disc.
    pub fn expected_count(&self, k: usize) -> f64 {
        expected_ph_count(self.ph_types[k].density, self.radius)
    }

    /// Expected number of other travelers inside the sharing disc.
    pub fn expected_travelers(&self) -> f64 {
        expected_ph_count(self.traveler_density, self.radius)
    }

    /// True when some type's quota is smaller than the requested volume.
    pub fn quota_below_demand(&self) -> bool {
        self.ph_types.iter().any(|t| t.plan.quota < self.demand)
    }

    /// Same market with every type density scaled to `density` (K = 1 sweeps).
    pub fn with_density(mut self, density: f64) -> Self {
        for t in &mut self.ph_types {
            t.density = density;
        }
        self
    }

    pub fn with_traveler_density(mut self, traveler_density: f64) -> Self {
        self.traveler_density = traveler_density;
        self
    }

    pub fn with_reservation(mut self, reservation: f64) -> Self {
        self.reservation = reservation;
        self
    }
}

fn invalid(msg: String) -> PricingError {
    PricingError::InvalidMarket(msg)
}

/// Poisson probability `mean^n e^-mean / n!`.
pub fn poisson_pmf(mean: f64, n: u64) -> Result<f64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(PricingError::Domain(format!(
            "Poisson mean must be nonnegative, got {mean}"
        )));
    }
    Ok(pmf_unchecked(mean, n))
}

pub(crate) fn pmf_unchecked(mean: f64, n: u64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    (nf * mean.ln() - mean - libm::lgamma(nf + 1.0)).exp()
}

/// Number of Poisson terms kept by every truncated series: the omitted tail
/// has mass below 1e-12.
pub fn poisson_truncation(mean: f64) -> u64 {
    (mean + 20.0 * mean.sqrt() + 30.0).ceil() as u64
}

/// Poisson probabilities for `n = 0..=n_max`.
pub(crate) fn poisson_table(mean: f64, n_max: u64) -> Vec<f64> {
    (0..=n_max).map(|n| pmf_unchecked(mean, n)).collect()
}

/// Mean pH count `density * pi * d^2` in a disc of radius `d`.
pub fn expected_ph_count(density: f64, d: f64) -> f64 {
    density * PI * d * d
}

/// Radio environment used to derive the sharing radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    #[serde(rename = "tx_power_w")]
    pub tx_power: f64,
    /// Path-loss constant of the power-law model.
    #[serde(rename = "pathloss_const")]
    pub pathloss_const: f64,
    #[serde(rename = "ref_dist_m")]
    pub ref_dist: f64,
    #[serde(rename = "pathloss_exp")]
    pub pathloss_exp: f64,
    /// Receiver noise power.
    #[serde(rename = "noise_power_w")]
    pub noise_power: f64,
    #[serde(rename = "sinr_target")]
    pub sinr_target: f64,
    #[serde(rename = "density_per_m2")]
    pub density: f64,
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exp > 2.0) {
            return Err(PricingError::Domain(format!(
                "path-loss exponent must exceed 2 for finite interference, got {}",
                self.pathloss_exp
            )));
        }
        for (name, v) in [
            ("tx_power", self.tx_power),
            ("pathloss_const", self.pathloss_const),
            ("ref_dist", self.ref_dist),
            ("noise_power", self.noise_power),
            ("sinr_target", self.sinr_target),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PricingError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(PricingError::Domain(format!(
                "density must be nonnegative, got {}",
                self.density
            )));
        }
        Ok(())
    }

    /// Received-power coefficient `a` in `P_rx(r) = a * r^-alpha`.
    pub fn power_coefficient(&self) -> f64 {
        self.tx_power * self.pathloss_const * self.ref_dist.powf(self.pathloss_exp)
    }

    /// Range at which the SINR target is met with no interference.
    pub fn noise_limited_range(&self) -> f64 {
        (self.power_coefficient() / (self.sinr_target * self.noise_power)).powf(1.0 / self.pathloss_exp)
    }
}

/// Mean shot-noise interference from pHs outside radius `d`:
/// `2 pi lambda a d^(2-alpha) / (alpha - 2)`.
pub fn mean_interference(geo: &GeometryParams, d: f64) -> Result<f64> {
    geo.validate()?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(PricingError::Domain(format!("radius must be positive, got {d}")));
    }
    Ok(mean_interference_unchecked(geo, d))
}

fn mean_interference_unchecked(geo: &GeometryParams, d: f64) -> f64 {
    let alpha = geo.pathloss_exp;
    2.0 * PI * geo.density * geo.power_coefficient() * d.powf(2.0 - alpha) / (alpha - 2.0)
}

/// Laplace transform `E[exp(-s I_d)]` of the interference outside radius `d`.
///
/// The radial integral is taken in `u = ln(r/d)`. Quadrature runs until the
/// exponent `y = s a r^-alpha` drops below 1e-8; beyond that
/// `1 - e^-y = y - y^2/2 + O(y^3)` is integrated in closed form.
pub fn laplace_interference(geo: &GeometryParams, d: f64, s: f64) -> Result<f64> {
    geo.validate()?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(PricingError::Domain(format!("radius must be positive, got {d}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(PricingError::Domain(format!(
            "Laplace argument must be nonnegative, got {s}"
        )));
    }
    if s == 0.0 || geo.density == 0.0 {
        return Ok(1.0);
    }
    let alpha = geo.pathloss_exp;
    let y0 = s * geo.power_coefficient() * d.powf(-alpha);
    const Y_CUT: f64 = 1e-8;
    let u_cut = if y0 > Y_CUT { (y0 / Y_CUT).ln() / alpha } else { 0.0 };

    let tol = ToleranceConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        ..ToleranceConfig::default()
    };
    // Integrand of int_d^inf (1 - e^{-y(r)}) r dr / d^2 in log-radius.
    let body = integrate(
        |u| -(-y0 * (-alpha * u).exp()).exp_m1() * (2.0 * u).exp(),
        0.0,
        u_cut,
        &tol,
    )?;
    let yc = y0 * (-alpha * u_cut).exp();
    let e2 = (2.0 * u_cut).exp();
    let tail = yc * e2 / (alpha - 2.0) - 0.5 * yc * yc * e2 / (2.0 * alpha - 2.0);
    let exponent = 2.0 * PI * geo.density * d * d * (body + tail);
    if !exponent.is_finite() {
        return Err(PricingError::NonFinite {
            at: s,
            value: exponent,
        });
    }
    Ok((-exponent).exp())
}

/// Largest radius at which the SINR target holds with mean interference:
/// the fixed point of `d = (a / (gamma (I(d) + noise)))^(1/alpha)`.
///
/// The map is increasing in `d` with slope below `1 - 2/alpha`, so the
/// iteration started at the noise-limited range decreases monotonically.
/// Each step is relaxed by `1 / (1 - slope)` evaluated at the current iterate,
/// which turns it into a Newton step on `d - F(d)`.
pub fn ph_range(geo: &GeometryParams) -> Result<f64> {
    ph_range_with(geo, &ToleranceConfig::default())
}

pub fn ph_range_with(geo: &GeometryParams, tol: &ToleranceConfig) -> Result<f64> {
    geo.validate()?;
    let a = geo.power_coefficient();
    let alpha = geo.pathloss_exp;
    let map = |d: f64| {
        let i = mean_interference_unchecked(geo, d);
        let f = (a / (geo.sinr_target * (i + geo.noise_power))).powf(1.0 / alpha);
        let slope = (alpha - 2.0) / alpha * i / (i + geo.noise_power) * f / d;
        (f, slope)
    };
    let d0 = geo.noise_limited_range();
    let mut d = d0;
    for iteration in 1..=tol.max_iter {
        let (f, slope) = map(d);
        let next = (d + (f - d) / (1.0 - slope)).clamp(0.5 * d, d0);
        if !next.is_finite() {
            return Err(PricingError::NonFinite {
                at: d,
                value: next,
            });
        }
        if (next - d).abs() < 1e-9 * next {
            return Ok(next);
        }
        if iteration == tol.max_iter {
            return Err(PricingError::Convergence {
                iterations: iteration,
                previous: d,
                last: next,
            });
        }
        d = next;
    }
    unreachable!("max_iter >= 1 guarantees at least one iteration")
}
