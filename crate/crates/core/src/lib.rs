//! Reward pricing for personal-hotspot data sharing.
//!
//! A traveler who needs `B` GB of data posts one price `p` to the pHs within
//! radius `d`. Each pH sits on a Poisson process and pays a two-part tariff;
//! it accepts when `p` covers its extra overage charge plus a reservation
//! utility `eps`. Otherwise the traveler falls back to a roaming fee `C0`.
//!
//! The crate computes the traveler's optimal price and expected cost for
//! homogeneous pHs ([`homogeneous`]), several pH types ([`heterogeneous`]),
//! competing travelers ([`multi_traveler`]), and the complete-information
//! lower bound ([`benchmark`]). [`monte_carlo`] simulates the same market
//! directly and is used to check every formula.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod error;
pub mod heterogeneous;
pub mod homogeneous;
pub mod market;
pub mod monte_carlo;
pub mod multi_traveler;
pub mod numerics;
mod pooled;
pub mod presets;
pub mod sharing_cost;
mod solution;

pub use benchmark::{benchmark_expected_cost, expected_price_given_n};
pub use error::{PricingError, Result};
pub use heterogeneous::{
    expected_cost_het, optimal_price_het, optimal_price_het_with, segment_optimum, success_prob_het,
    type_thresholds, TypeThresholds,
};
pub use homogeneous::{
    ec_hom_derivative, expected_cost_hom, optimal_price_hom, optimal_price_hom_with, success_prob_hom,
};
pub use market::{
    expected_ph_count, laplace_interference, mean_interference, ph_range, poisson_pmf, GeometryParams,
    MarketParams, PhType, TariffPlan, UsageModel,
};
pub use monte_carlo::{
    mc_accept_freq, mc_benchmark_cost, mc_expected_cost_het, mc_expected_cost_hom, mc_expected_cost_mul,
    mc_serve_prob_mul, EstimateWithCI,
};
pub use multi_traveler::{
    approx_expected_cost_mul, crossing_traveler_density, exact_expected_cost_mul, high_density_root, omega_inverse,
    optimal_exact_cost_mul, optimal_price_mul, optimal_price_mul_with, serve_prob_bounds, serve_prob_exact,
    split_market, split_plan_subphs, ExactServeProb, ServeProbBounds, UsageSplit,
};
pub use numerics::{erfc_accurate, erfc_inv, find_root_bisect, gaussian_cdf, integrate, minimize_scalar, ToleranceConfig};
pub use sharing_cost::{accept_prob, cost_cdf, price_thresholds, sharing_cost, AcceptanceModel, PriceThresholds};
pub use solution::{DiagnosticFlag, PricingSolution, Regime, SolverDiagnostics};
