//! Optimal posted price against independent, identically distributed pHs.

use crate::error::{PricingError, Result};
use crate::market::MarketParams;
use crate::numerics::ToleranceConfig;
use crate::pooled::Pool;
use crate::sharing_cost::{price_thresholds, AcceptanceModel};

pub use crate::solution::{DiagnosticFlag, PricingSolution, Regime, SolverDiagnostics};

/// Improvements over roaming smaller than this are reported as roaming-only.
pub const ROAMING_IMPROVEMENT_FLOOR: f64 = 1e-9;

/// Probability that at least one pH in range accepts price `p`:
/// `1 - exp(-m accept(p))`.
pub fn success_prob_hom(p: f64, params: &MarketParams) -> Result<f64> {
    let ty = params.single_type()?;
    check_price(p)?;
    let m = params.expected_count(0);
    let a = AcceptanceModel::new(&ty.plan, &ty.usage, params.demand, params.reservation);
    Ok(-(-m * a.accept_prob(p)).exp_m1())
}

/// `p P(p) + C0 (1 - P(p))`.
pub fn expected_cost_hom(p: f64, params: &MarketParams) -> Result<f64> {
    let s = success_prob_hom(p, params)?;
    Ok(params.roaming_fee + (p - params.roaming_fee) * s)
}

/// Derivative of the smooth expected cost on the transition band
/// `[p_lo, p_hi]`: `1 - e^{-m omega} (1 + m (C0 - p) omega')`.
pub fn ec_hom_derivative(p: f64, params: &MarketParams) -> Result<f64> {
    let ty = params.single_type()?;
    let band = price_thresholds(&ty.plan, &ty.usage, params.demand, params.reservation);
    if !(band.p_lo..=band.p_hi).contains(&p) {
        return Err(PricingError::Domain(format!(
            "derivative is defined on [{}, {}], got {p}",
            band.p_lo, band.p_hi
        )));
    }
    let m = params.expected_count(0);
    let a = AcceptanceModel::new(&ty.plan, &ty.usage, params.demand, params.reservation);
    Ok(1.0 - (-m * a.omega(p)).exp() * (1.0 + m * (params.roaming_fee - p) * a.omega_slope(p)))
}

/// Optimal posted price against one pH type.
///
/// When `B + mu <= Q` the objective is convex between jumps and the
/// first-order condition is solved by bisection; otherwise each piece is
/// searched on a grid and refined. Saturation prices are always compared.
pub fn optimal_price_hom(params: &MarketParams) -> Result<PricingSolution> {
    optimal_price_hom_with(params, &ToleranceConfig::default())
}

pub fn optimal_price_hom_with(params: &MarketParams, tol: &ToleranceConfig) -> Result<PricingSolution> {
    tol.validate()?;
    let ty = params.single_type()?;
    let pool = Pool::new(params, std::slice::from_ref(ty));
    let opt = pool.minimize(tol)?;
    let c0 = params.roaming_fee;

    let mut diagnostics = SolverDiagnostics {
        iterations: opt.iterations,
        residual: opt.residual,
        convex: opt.convex,
        evaluations: opt.evaluations,
        rule_price: None,
        flags: Vec::new(),
    };
    if params.quota_below_demand() {
        diagnostics.flag(DiagnosticFlag::QuotaBelowDemand);
    }
    if !opt.convex {
        diagnostics.flag(DiagnosticFlag::GridSearch);
    }

    if c0 - opt.cost < ROAMING_IMPROVEMENT_FLOOR {
        return Ok(PricingSolution {
            price: c0,
            expected_cost: pool.cost(c0),
            success_prob: pool.success(c0),
            regime: Regime::RoamingOnly,
            diagnostics,
        });
    }

    let sat = AcceptanceModel::new(&ty.plan, &ty.usage, params.demand, params.reservation).saturation_price();
    let regime = if opt.price == params.reservation {
        Regime::BoundaryEps
    } else if opt.price == sat {
        Regime::Saturation
    } else {
        Regime::InteriorRoot
    };
    if opt.price == c0 && opt.interior_root {
        diagnostics.flag(DiagnosticFlag::UpperClipBinds);
    }
    Ok(PricingSolution {
        price: opt.price,
        expected_cost: opt.cost,
        success_prob: opt.success,
        regime,
        diagnostics,
    })
}

fn check_price(p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("price must be nonnegative, got {p}")))
    }
}
