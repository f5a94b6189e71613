//! Shared fixtures for the criterion benchmarks under `benches/`.

use hotspot_pricing::{presets, MarketParams};

/// Named markets covering every pricing path: boundary and interior
/// homogeneous optima, the diverse two-type market, and competing travelers
/// in each density regime.
pub fn markets() -> Vec<(&'static str, MarketParams)> {
    vec![
        ("baseline", presets::baseline()),
        ("heavy-usage", presets::heavy_usage()),
        ("two-type", presets::two_type(2.0, 2.4)),
        ("overlap-low", presets::overlap(2e-4)),
        ("overlap-medium", presets::overlap(6e-4)),
        ("overlap-high", presets::overlap(2e-3)),
    ]
}
