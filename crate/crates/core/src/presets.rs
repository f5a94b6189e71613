//! Reference markets used by tests, examples, and the CLI sweeps.

use crate::market::{MarketParams, PhType, TariffPlan, UsageModel};

/// 2 GB quota, $17 lump sum, $13/GB overage.
pub fn reference_plan(quota: f64) -> TariffPlan {
    TariffPlan::new(quota, 17.0, 13.0)
}

/// One pH type with mean usage 1.7 GB (std 0.1 GB) at 1e-3 pHs/m^2,
/// C0 = $3, B = 0.2 GB, eps = $0.5, d = 30 m.
pub fn baseline() -> MarketParams {
    MarketParams {
        ph_types: vec![PhType::new(reference_plan(2.0), UsageModel::new(1.7, 0.1), 1e-3)],
        roaming_fee: 3.0,
        demand: 0.2,
        reservation: 0.5,
        radius: 30.0,
        traveler_density: 0.0,
    }
}

/// [`baseline`] with mean usage 1.9 GB, so `B + mu > Q` and the optimal
/// price is interior.
pub fn heavy_usage() -> MarketParams {
    let mut p = baseline();
    p.ph_types[0].usage.mean = 1.9;
    p
}

/// Two types of 2.5e-4 pHs/m^2 each, mean usage `1.7 -+ delta_mu / 2` GB,
/// quota `quota` GB, eps = $0.2. The light type comes first.
pub fn two_type(quota: f64, delta_mu: f64) -> MarketParams {
    let ty = |mean: f64| PhType::new(reference_plan(quota), UsageModel::new(mean, 0.1), 2.5e-4);
    MarketParams {
        ph_types: vec![ty(1.7 - 0.5 * delta_mu), ty(1.7 + 0.5 * delta_mu)],
        roaming_fee: 3.0,
        demand: 0.2,
        reservation: 0.2,
        radius: 30.0,
        traveler_density: 0.0,
    }
}

/// Overlapping-traveler market: mean usage 1.8 GB, B = 0.29 GB,
/// 1e-3 pHs/m^2, and the given traveler density.
pub fn overlap(traveler_density: f64) -> MarketParams {
    let mut p = baseline();
    p.ph_types[0].usage.mean = 1.8;
    p.demand = 0.29;
    p.traveler_density = traveler_density;
    p
}
