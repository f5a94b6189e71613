//! JSON run configuration. Every section is optional; field names carry
//! their units and unknown fields are rejected.

use std::path::Path;

use hotspot_pricing::{MarketParams, ToleranceConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::sweep::SweepSpec;

pub const DEFAULT_SEED: u64 = 0x5EED_2018;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub n_trials: u64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> CliResult<()> {
        if self.n_trials == 0 {
            return Err(CliError::Config("monte_carlo.n_trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Prices and effort for an analytic-vs-simulation check.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSpec {
    /// Prices to test; five evenly spaced prices on `[eps, C0]` when absent.
    pub prices_usd: Option<Vec<f64>>,
    /// Traveler density for the multi-traveler rows when the market has none.
    pub traveler_density_per_m2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub market: Option<MarketParams>,
    pub tolerance: ToleranceConfig,
    pub sweep: Option<SweepSpec>,
    pub validation: ValidationSpec,
    pub monte_carlo: McSettings,
}

impl Config {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.tolerance.validate().map_err(|e| CliError::Config(format!("tolerance: {e}")))?;
        cfg.monte_carlo.validate()?;
        if let Some(market) = &cfg.market {
            market.validate().map_err(|e| CliError::Config(format!("market: {e}")))?;
        }
        if let Some(sweep) = &cfg.sweep {
            sweep.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let err = Config::from_json("{\n  \"monte_carlo\": {\"n_trials\": 10, \"seeds\": 1}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("seeds") && msg.contains("line 2"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(Config::from_json(r#"{"monte_carlo": {"n_trials": 0}}"#).is_err());
    }

    #[test]
    fn market_round_trips() {
        let cfg = Config {
            market: Some(hotspot_pricing::presets::baseline()),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(Config::from_json(&text).unwrap(), cfg);
    }
}
