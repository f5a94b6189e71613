//! One posted price facing several pH types with their own tariffs, usage
//! statistics, and densities.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{PricingError, Result};
use crate::market::MarketParams;
use crate::numerics::ToleranceConfig;
use crate::pooled::Pool;
use crate::solution::{DiagnosticFlag, PricingSolution, Regime, SolverDiagnostics};

/// Per-type threshold prices `T_k = eps + beta_k (B + mu_k - Q_k - 2 sqrt2 sigma_k)`,
/// below which type `k` essentially never accepts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeThresholds {
    pub t: Vec<f64>,
}

/// Threshold prices in type order. Types must be sorted so that the
/// thresholds are nondecreasing; the first violating pair is reported.
pub fn type_thresholds(params: &MarketParams) -> Result<TypeThresholds> {
    params.validate()?;
    let t: Vec<f64> = params
        .ph_types
        .iter()
        .map(|ty| {
            params.reservation
                + ty.plan.overage_rate
                    * (params.demand + ty.usage.mean - ty.plan.quota - 2.0 * SQRT_2 * ty.usage.std)
        })
        .collect();
    if let Some(k) = t.windows(2).position(|w| w[1] < w[0]) {
        return Err(PricingError::InvalidMarket(format!(
            "pH types must be ordered by threshold price: type {} has {:.6} but type {} has {:.6}",
            k + 1,
            t[k],
            k + 2,
            t[k + 1]
        )));
    }
    Ok(TypeThresholds { t })
}

/// `1 - exp(-sum_k m_k accept_k(p))`.
pub fn success_prob_het(p: f64, params: &MarketParams) -> Result<f64> {
    params.validate()?;
    check_price(p)?;
    Ok(Pool::new(params, &params.ph_types).success(p))
}

/// `C0 + (p - C0) P_het(p)`.
pub fn expected_cost_het(p: f64, params: &MarketParams) -> Result<f64> {
    params.validate()?;
    check_price(p)?;
    Ok(Pool::new(params, &params.ph_types).cost(p))
}

/// Minimizer on `[eps, C0]` of the expected cost that counts only the first
/// `k` types (1-based).
pub fn segment_optimum(k: usize, params: &MarketParams) -> Result<f64> {
    segment_optimum_with(k, params, &ToleranceConfig::default())
}

pub fn segment_optimum_with(k: usize, params: &MarketParams, tol: &ToleranceConfig) -> Result<f64> {
    params.validate()?;
    if k == 0 || k > params.ph_types.len() {
        return Err(PricingError::Domain(format!(
            "segment index must be in 1..={}, got {k}",
            params.ph_types.len()
        )));
    }
    Ok(Pool::new(params, &params.ph_types[..k]).minimize(tol)?.price)
}

/// Optimal single price for a multi-type market.
///
/// The threshold case rule picks the segment `k` with `T_k <= C0 < T_{k+1}`
/// (roaming when `C0 <= T_1`). All `K` segment optima are then compared on
/// the full objective and the best wins; a win by more than 1e-9 over the
/// rule's choice sets [`DiagnosticFlag::CaseOverridden`].
pub fn optimal_price_het(params: &MarketParams) -> Result<PricingSolution> {
    optimal_price_het_with(params, &ToleranceConfig::default())
}

pub fn optimal_price_het_with(params: &MarketParams, tol: &ToleranceConfig) -> Result<PricingSolution> {
    tol.validate()?;
    let thresholds = type_thresholds(params)?;
    let c0 = params.roaming_fee;
    let full = Pool::new(params, &params.ph_types);

    let mut diagnostics = SolverDiagnostics {
        convex: true,
        ..SolverDiagnostics::default()
    };
    if params.quota_below_demand() {
        diagnostics.flag(DiagnosticFlag::QuotaBelowDemand);
    }

    let case_segment = thresholds.t.iter().rposition(|&t| t <= c0).map(|i| i + 1);
    let mut segments = Vec::with_capacity(params.ph_types.len());
    for k in 1..=params.ph_types.len() {
        let opt = Pool::new(params, &params.ph_types[..k]).minimize(tol)?;
        diagnostics.iterations += opt.iterations;
        diagnostics.evaluations += opt.evaluations;
        diagnostics.convex &= opt.convex;
        segments.push((k, opt.price, full.cost(opt.price), opt));
    }
    if !diagnostics.convex {
        diagnostics.flag(DiagnosticFlag::GridSearch);
    }

    let (rule_price, rule_cost) = match case_segment {
        None => (c0, full.cost(c0)),
        Some(k) => (segments[k - 1].1, segments[k - 1].2),
    };
    diagnostics.rule_price = Some(rule_price);

    let mut best: Option<(usize, f64, f64)> = None;
    for &(k, p, c, _) in &segments {
        if best.is_none_or(|(_, _, bc)| c < bc - tol.abs_tol) {
            best = Some((k, p, c));
        }
    }
    let (mut k, mut price, mut cost) = best.expect("at least one type");
    if rule_cost <= cost + 1e-9 {
        // Keep the rule's choice unless it is beaten by more than 1e-9.
        if let Some(rk) = case_segment {
            k = rk;
        }
        price = rule_price;
        cost = rule_cost;
    } else {
        diagnostics.flag(DiagnosticFlag::CaseOverridden);
    }

    if c0 - cost < 1e-9 {
        return Ok(PricingSolution {
            price: c0,
            expected_cost: full.cost(c0),
            success_prob: full.success(c0),
            regime: Regime::RoamingOnly,
            diagnostics,
        });
    }
    let seg = &segments[k - 1].3;
    if seg.interior_root && seg.price == price {
        diagnostics.residual = seg.residual;
    }
    Ok(PricingSolution {
        price,
        expected_cost: cost,
        success_prob: full.success(price),
        regime: Regime::Segment(k),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{expected_cost_hom, optimal_price_hom, success_prob_hom};
    use crate::market::{PhType, TariffPlan, UsageModel};
    use crate::presets;

    fn fig7_grid() -> Vec<f64> {
        (0..=12).map(|i| 0.2 * i as f64).collect()
    }

    #[test]
    fn threshold_examples() {
        let mut p = presets::baseline();
        p.ph_types[0].usage.mean = 2.3;
        let t = type_thresholds(&p).unwrap();
        assert!((t.t[0] - 3.3231).abs() < 1e-3);

        let mut two = presets::baseline();
        two.ph_types.push(two.ph_types[0]);
        let t = type_thresholds(&two).unwrap();
        assert_eq!(t.t[0], t.t[1]);

        let mut d = presets::baseline();
        d.ph_types[0].usage = UsageModel::new(1.8, 1e-15);
        assert!((type_thresholds(&d).unwrap().t[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unordered_types_are_rejected() {
        let mut p = presets::two_type(2.0, 1.0);
        p.ph_types.swap(0, 1);
        match type_thresholds(&p) {
            Err(PricingError::InvalidMarket(msg)) => assert!(msg.contains("type 1") && msg.contains("type 2")),
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn single_type_reduces_to_homogeneous() {
        for params in [presets::baseline(), presets::heavy_usage()] {
            for i in 0..20 {
                let p = 0.3 + 0.14 * i as f64;
                let a = success_prob_het(p, &params).unwrap();
                let b = success_prob_hom(p, &params).unwrap();
                assert!((a - b).abs() <= 1e-12);
                let a = expected_cost_het(p, &params).unwrap();
                let b = expected_cost_hom(p, &params).unwrap();
                assert!((a - b).abs() <= 1e-12);
            }
            let het = optimal_price_het(&params).unwrap();
            let hom = optimal_price_hom(&params).unwrap();
            assert!((het.price - hom.price).abs() <= 1e-8);
            assert!((het.expected_cost - hom.expected_cost).abs() <= 1e-8);
            assert!((segment_optimum(1, &params).unwrap() - hom.price).abs() <= 1e-8);
        }
    }

    #[test]
    fn split_type_matches_merged() {
        let merged = presets::heavy_usage();
        let mut split = merged.clone();
        split.ph_types[0].density *= 0.5;
        split.ph_types.push(split.ph_types[0]);
        for i in 0..20 {
            let p = 0.5 + 0.12 * i as f64;
            let a = success_prob_het(p, &split).unwrap();
            let b = success_prob_het(p, &merged).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
        let a = segment_optimum(2, &split).unwrap();
        let b = segment_optimum(1, &merged).unwrap();
        assert!((a - b).abs() <= 1e-8);
    }

    #[test]
    fn success_prob_examples() {
        let p = presets::two_type(2.0, 2.4);
        assert_eq!(success_prob_het(0.1, &p).unwrap(), 0.0);
        let v = success_prob_het(0.2, &p).unwrap();
        assert!((v - 0.50682).abs() < 1e-4, "{v}");
    }

    #[test]
    fn expected_cost_examples() {
        let p = presets::two_type(2.0, 2.4);
        let light = expected_cost_het(0.2, &p).unwrap();
        assert!((light - 1.5809).abs() < 1e-3);
        let all = expected_cost_het(2.8, &p).unwrap();
        assert!((all - (3.0 - 0.2 * (1.0 - (-1.413_716_694_115_407f64).exp()))).abs() < 1e-9);
        assert!(all > light);
    }

    #[test]
    fn roaming_when_every_threshold_exceeds_c0() {
        let mut p = presets::two_type(1.0, 0.2);
        p.demand = 0.25;
        p.ph_types[0].usage.mean = 1.6;
        p.ph_types[1].usage.mean = 1.8;
        let t = type_thresholds(&p).unwrap();
        assert!(t.t[0] > 3.0);
        let s = optimal_price_het(&p).unwrap();
        assert_eq!(s.regime, Regime::RoamingOnly);
        assert_eq!(s.price, 3.0);
        assert_eq!(s.expected_cost, 3.0);
    }

    #[test]
    fn extreme_diversity_converges_to_light_type_only() {
        for q in [1.8, 2.0] {
            let s = optimal_price_het(&presets::two_type(q, 2.4)).unwrap();
            assert!((s.expected_cost - 1.58).abs() < 0.02, "Q = {q}: {}", s.expected_cost);
            assert!((s.price - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn diversity_helps_with_small_quota_and_hurts_with_large() {
        let costs = |q: f64| -> Vec<f64> {
            fig7_grid()
                .into_iter()
                .map(|dm| optimal_price_het(&presets::two_type(q, dm)).unwrap().expected_cost)
                .collect()
        };
        let small = costs(1.8);
        let large = costs(2.0);
        assert!(small.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{small:?}");
        assert!(large.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{large:?}");
        assert!((small[0] - 2.2).abs() < 0.02);
        assert!((large[0] - 1.05).abs() < 0.01);
    }

    #[test]
    fn segment_optimum_beats_grid() {
        let p = presets::two_type(2.0, 0.2);
        let k2 = segment_optimum(2, &p).unwrap();
        let f = |x: f64| expected_cost_het(x, &p).unwrap();
        let n = 100_001;
        let (gp, gc) = (0..n)
            .map(|i| 0.2 + 2.8 * i as f64 / (n - 1) as f64)
            .map(|x| (x, f(x)))
            .fold((0.0, f64::INFINITY), |a, x| if x.1 < a.1 { x } else { a });
        assert!((k2 - gp).abs() < 1e-3);
        assert!(f(k2) <= gc + 1e-12);
        assert!(segment_optimum(0, &p).is_err());
        assert!(segment_optimum(3, &p).is_err());
    }

    #[test]
    fn segment_optimum_is_best_on_its_segment() {
        for dm in fig7_grid() {
            let p = presets::two_type(2.0, dm);
            let t = type_thresholds(&p).unwrap().t;
            let k = t.iter().rposition(|&x| x <= 3.0).unwrap() + 1;
            let price = segment_optimum(k, &p).unwrap();
            let lo = t[k - 1].max(0.2);
            let hi = t.get(k).copied().unwrap_or(3.0).min(3.0);
            let sub = Pool::new(&p, &p.ph_types[..k]);
            for i in 0..=500 {
                let x = lo + (hi - lo) * i as f64 / 500.0;
                assert!(sub.cost(price) <= sub.cost(x) + 1e-6, "dm {dm}, x {x}");
            }
        }
    }

    #[test]
    fn pooled_objective_convex_when_within_quota() {
        let mut p = presets::two_type(2.2, 0.4);
        p.demand = 0.2;
        for ty in &p.ph_types {
            assert!(ty.usage.mean + p.demand <= ty.plan.quota);
        }
        let f = |x: f64| expected_cost_het(x, &p).unwrap();
        // Stay below the saturation jump at 2.8.
        let hi: f64 = 2.8 - 1e-6;
        let n = 1000;
        let h = (hi - 0.2) / n as f64;
        for i in 1..n {
            let x = 0.2 + h * i as f64;
            assert!(f(x + h) - 2.0 * f(x) + f(x - h) >= -1e-7);
        }
    }

    #[test]
    fn rule_choice_matches_cross_check_on_fig7_grid() {
        for q in [1.8, 2.0] {
            for dm in fig7_grid() {
                let s = optimal_price_het(&presets::two_type(q, dm)).unwrap();
                let n = 20_001;
                let grid = (0..n)
                    .map(|i| 0.2 + 2.8 * i as f64 / (n - 1) as f64)
                    .map(|x| expected_cost_het(x, &presets::two_type(q, dm)).unwrap())
                    .fold(f64::INFINITY, f64::min);
                assert!(s.expected_cost <= grid + 1e-9, "Q {q}, dm {dm}");
            }
        }
    }

    #[test]
    fn distinct_plans_are_supported() {
        let cheap = PhType::new(TariffPlan::new(3.0, 20.0, 10.0), UsageModel::new(2.0, 0.2), 4e-4);
        let tight = PhType::new(TariffPlan::new(1.0, 10.0, 15.0), UsageModel::new(0.9, 0.05), 4e-4);
        let mut p = presets::baseline();
        p.ph_types = vec![cheap, tight];
        let s = optimal_price_het(&p).unwrap();
        assert!((0.5..=3.0).contains(&s.price));
        assert!(s.expected_cost < 3.0);
    }
}
