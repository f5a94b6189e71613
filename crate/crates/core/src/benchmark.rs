//! Complete-information lower bound: the traveler pays the reservation
//! utility plus the smallest sharing cost among the pHs in range.

use std::f64::consts::SQRT_2;

use crate::error::{PricingError, Result};
use crate::market::{expected_ph_count, MarketParams, TariffPlan, UsageModel};
use crate::numerics::{erfc, integrate, ToleranceConfig};

fn quadrature_tol() -> ToleranceConfig {
    ToleranceConfig {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        ..ToleranceConfig::default()
    }
}

/// Expected payment `eps + E[min_i C_i]` when `n >= 1` pHs are in range.
pub fn expected_price_given_n(n: u64, plan: &TariffPlan, usage: &UsageModel, b: f64, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(PricingError::Domain(
            "at least one pH is needed; with none the traveler roams".into(),
        ));
    }
    let beta = plan.overage_rate;
    let shift = plan.quota - b - usage.mean;
    let scale = SQRT_2 * usage.std;
    let survival = |c: f64| 0.5 * erfc((c / beta + shift) / scale);
    let n = n as i32;
    let tail = integrate(|c| survival(c).powi(n), 0.0, beta * b, &quadrature_tol())?;
    Ok(eps + tail)
}

/// Expected cost under complete information, averaged over the Poisson pH
/// count:
/// `eps + (C0 - eps - beta B) e^-m + int_0^{beta B} exp(m (erfc(.) - 2) / 2) dx`.
pub fn benchmark_expected_cost(params: &MarketParams) -> Result<f64> {
    let ty = params.single_type()?;
    let m = expected_ph_count(ty.density, params.radius);
    let beta = ty.plan.overage_rate;
    let b = params.demand;
    let eps = params.reservation;
    let shift = ty.plan.quota - b - ty.usage.mean;
    let scale = SQRT_2 * ty.usage.std;
    // Integrand is exp(-m F(x)) with F the cost CDF.
    let integral = integrate(
        |x| (0.5 * m * (erfc((x / beta + shift) / scale) - 2.0)).exp(),
        0.0,
        beta * b,
        &quadrature_tol(),
    )?;
    Ok(eps + (params.roaming_fee - eps - beta * b) * (-m).exp() + integral)
}
