use std::fmt;

use serde::{Serialize, Serializer};

/// Which branch of the pricing rule produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The price sits at the reservation utility.
    BoundaryEps,
    /// The price solves the first-order condition inside `(eps, C0)`.
    InteriorRoot,
    /// The price sits at a saturation price `eps + beta_k B`, where the cost
    /// of the type-`k` pHs is always covered.
    Saturation,
    /// No price beats roaming; the traveler posts `C0`.
    RoamingOnly,
    /// Heterogeneous optimum of the objective pooling the first `k` types
    /// (1-based).
    Segment(usize),
    LowTravelerDensity,
    MediumTravelerDensity,
    HighTravelerDensity,
}

impl Regime {
    pub fn label(&self) -> String {
        match self {
            Regime::BoundaryEps => "boundary-eps".into(),
            Regime::InteriorRoot => "interior-root".into(),
            Regime::Saturation => "saturation".into(),
            Regime::RoamingOnly => "roaming-only".into(),
            Regime::Segment(k) => format!("segment-{k}"),
            Regime::LowTravelerDensity => "low-traveler-density".into(),
            Regime::MediumTravelerDensity => "medium-traveler-density".into(),
            Regime::HighTravelerDensity => "high-traveler-density".into(),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Regime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// Noteworthy events recorded while solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticFlag {
    /// Some type's quota is below the requested volume.
    QuotaBelowDemand,
    /// The `C0` upper clip changed the first-order solution.
    UpperClipBinds,
    /// The closed-form case rule was beaten by the global cross-check.
    CaseOverridden,
    /// The first-order condition changed sign more than once; a grid search
    /// decided instead.
    MultipleSignChanges,
    /// At least one objective piece was non-convex and searched on a grid.
    GridSearch,
}

/// Solver trace attached to every [`PricingSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SolverDiagnostics {
    /// Bisection iterations spent on first-order conditions.
    pub iterations: usize,
    /// `|EC'(price)|` when the price is an interior root, else 0.
    pub residual: f64,
    /// Whether every objective piece searched was convex.
    pub convex: bool,
    /// Objective evaluations, including grid points.
    pub evaluations: usize,
    /// Price the closed-form rule proposed, when it differs from the result
    /// or carries information of its own.
    pub rule_price: Option<f64>,
    pub flags: Vec<DiagnosticFlag>,
}

impl SolverDiagnostics {
    pub fn flag(&mut self, flag: DiagnosticFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    pub fn has(&self, flag: DiagnosticFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Optimal posted price and its consequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricingSolution {
    pub price: f64,
    pub expected_cost: f64,
    pub success_prob: f64,
    pub regime: Regime,
    pub diagnostics: SolverDiagnostics,
}
