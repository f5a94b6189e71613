//! Per-pH sharing cost under a two-part tariff and the resulting acceptance
//! probability of a posted price.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::market::{TariffPlan, UsageModel};
use crate::numerics::{erfc, gaussian_cdf};

/// Extra overage charge a pH with monthly usage `x` incurs by giving away `b`
/// of its quota.
pub fn sharing_cost(x: f64, plan: &TariffPlan, b: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(PricingError::Domain(format!("usage must be nonnegative, got {x}")));
    }
    if !(b > 0.0) {
        return Err(PricingError::Domain(format!("demand must be positive, got {b}")));
    }
    Ok(cost_unchecked(x, plan, b))
}

#[inline]
pub(crate) fn cost_unchecked(x: f64, plan: &TariffPlan, b: f64) -> f64 {
    let q = plan.quota;
    if x <= q - b {
        0.0
    } else if x < q {
        plan.overage_rate * (x + b - q)
    } else {
        plan.overage_rate * b
    }
}

/// `Pr(C <= c)` for the sharing cost of a pH with Gaussian usage. The law has
/// an atom at the cap `beta * B`, where the CDF is exactly one.
pub fn cost_cdf(c: f64, plan: &TariffPlan, usage: &UsageModel, b: f64) -> Result<f64> {
    let cap = plan.overage_rate * b;
    if !(0.0..=cap).contains(&c) {
        return Err(PricingError::Domain(format!(
            "cost must lie in [0, {cap}], got {c}"
        )));
    }
    if c == cap {
        return Ok(1.0);
    }
    gaussian_cdf(c / plan.overage_rate + plan.quota - b, usage.mean, usage.std)
}

/// Acceptance curve of one pH type for a fixed demand and reservation utility.
///
/// `omega` is the smooth erfc expression valid on the whole real line;
/// `accept_prob` clamps it to zero below `eps` and to one from the saturation
/// price `eps + beta * B` on, where every pH's cost is covered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceModel {
    eps: f64,
    beta: f64,
    /// `Q - B - mu`: headroom of the mean user after sharing.
    headroom: f64,
    /// `sqrt(2) * sigma * beta`.
    scale: f64,
    /// `eps + beta * B` less a few ulps, so a price written in decimal as
    /// `eps + beta * B` still saturates after rounding.
    saturation: f64,
}

impl AcceptanceModel {
    pub fn new(plan: &TariffPlan, usage: &UsageModel, b: f64, eps: f64) -> Self {
        let beta = plan.overage_rate;
        Self {
            eps,
            beta,
            headroom: plan.quota - b - usage.mean,
            scale: SQRT_2 * usage.std * beta,
            saturation: (eps + beta * b) - 4.0 * f64::EPSILON * (eps + beta * b).abs().max(1.0),
        }
    }

    pub fn reservation(&self) -> f64 {
        self.eps
    }

    /// Lowest price at which every pH accepts.
    pub fn saturation_price(&self) -> f64 {
        self.saturation
    }

    /// True when the mean user stays within quota after sharing (`B + mu <= Q`).
    pub fn mean_within_quota(&self) -> bool {
        self.headroom >= 0.0
    }

    #[inline]
    fn z(&self, p: f64) -> f64 {
        (p - self.eps + self.beta * self.headroom) / self.scale
    }

    /// Unclamped acceptance probability `erfc(-z) / 2`.
    #[inline]
    pub fn omega(&self, p: f64) -> f64 {
        0.5 * erfc(-self.z(p))
    }

    /// Derivative of [`omega`](Self::omega) in the price.
    #[inline]
    pub fn omega_slope(&self, p: f64) -> f64 {
        let z = self.z(p);
        (-z * z).exp() / (PI.sqrt() * self.scale)
    }

    /// Second derivative of [`omega`](Self::omega) in the price.
    #[inline]
    pub fn omega_curvature(&self, p: f64) -> f64 {
        -2.0 * self.z(p) / self.scale * self.omega_slope(p)
    }

    /// Probability that a random pH of this type accepts price `p`.
    #[inline]
    pub fn accept_prob(&self, p: f64) -> f64 {
        if p < self.eps {
            0.0
        } else if p >= self.saturation {
            1.0
        } else {
            self.omega(p).clamp(0.0, 1.0)
        }
    }

    /// Whether a pH whose sharing cost is `cost` accepts price `p`.
    #[inline]
    pub fn accepts_cost(&self, cost: f64, p: f64) -> bool {
        p >= self.saturation || (p >= self.eps && cost <= p - self.eps)
    }

    /// Price at which [`omega`](Self::omega) equals `target`, given
    /// `z = erfc^-1(2 (1 - target))`.
    pub(crate) fn price_at_z(&self, z: f64) -> f64 {
        self.eps - self.beta * self.headroom + self.scale * z
    }
}

/// Probability that a pH accepts price `p`.
pub fn accept_prob(p: f64, plan: &TariffPlan, usage: &UsageModel, b: f64, eps: f64) -> Result<f64> {
    if !(p >= 0.0) || p.is_infinite() {
        return Err(PricingError::Domain(format!("price must be nonnegative, got {p}")));
    }
    Ok(AcceptanceModel::new(plan, usage, b, eps).accept_prob(p))
}

/// Price band over which the acceptance probability moves from about
/// `erfc(2)/2` to `1 - erfc(2)/2`, cut to `[eps, eps + beta * B]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceThresholds {
    pub p_lo: f64,
    pub p_hi: f64,
}

pub fn price_thresholds(plan: &TariffPlan, usage: &UsageModel, b: f64, eps: f64) -> PriceThresholds {
    let beta = plan.overage_rate;
    let cap = beta * b;
    let spread = 2.0 * SQRT_2 * usage.std;
    let excess = b + usage.mean - plan.quota;
    let lo = (beta * (excess - spread)).clamp(0.0, cap);
    let hi = (beta * (excess + spread)).clamp(lo, cap);
    PriceThresholds {
        p_lo: eps + lo,
        p_hi: eps + hi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn plan() -> TariffPlan {
        TariffPlan::new(2.0, 17.0, 13.0)
    }
    fn usage() -> UsageModel {
        UsageModel::new(1.7, 0.1)
    }

    #[test]
    fn cost_branches() {
        assert_eq!(sharing_cost(1.7, &plan(), 0.2).unwrap(), 0.0);
        assert!((sharing_cost(1.9, &plan(), 0.2).unwrap() - 1.3).abs() < 1e-12);
        assert!((sharing_cost(2.5, &plan(), 0.2).unwrap() - 2.6).abs() < 1e-12);
        assert!(sharing_cost(-0.1, &plan(), 0.2).is_err());
    }

    #[test]
    fn cost_is_continuous_at_branch_points() {
        let p = plan();
        for &x in &[1.8, 2.0] {
            let l = sharing_cost(x - 1e-12, &p, 0.2).unwrap();
            let r = sharing_cost(x + 1e-12, &p, 0.2).unwrap();
            assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(cost_cdf(2.6, &plan(), &usage(), 0.2).unwrap(), 1.0);
        assert!((cost_cdf(0.0, &plan(), &usage(), 0.2).unwrap() - 0.841345).abs() < 1e-5);
        assert!((cost_cdf(1.3, &plan(), &usage(), 0.2).unwrap() - 0.97725).abs() < 1e-5);
        assert!(cost_cdf(-0.1, &plan(), &usage(), 0.2).is_err());
        assert!(cost_cdf(2.7, &plan(), &usage(), 0.2).is_err());
    }

    #[test]
    fn accept_prob_examples() {
        let (pl, us) = (plan(), usage());
        assert_eq!(accept_prob(0.4, &pl, &us, 0.2, 0.5).unwrap(), 0.0);
        assert!((accept_prob(0.5, &pl, &us, 0.2, 0.5).unwrap() - 0.841345).abs() < 1e-5);
        assert_eq!(accept_prob(3.11, &pl, &us, 0.2, 0.5).unwrap(), 1.0);
        assert_eq!(accept_prob(0.5 + 13.0 * 0.2, &pl, &us, 0.2, 0.5).unwrap(), 1.0);
        assert!(accept_prob(-1.0, &pl, &us, 0.2, 0.5).is_err());
    }

    #[test]
    fn accept_prob_matches_cost_cdf_on_middle_range() {
        let (pl, us) = (plan(), usage());
        for i in 0..260 {
            let c = i as f64 * 0.01;
            let a = accept_prob(0.5 + c, &pl, &us, 0.2, 0.5).unwrap();
            let f = cost_cdf(c, &pl, &us, 0.2).unwrap();
            assert!((a - f).abs() <= 1e-12, "c = {c}: {a} vs {f}");
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let m = AcceptanceModel::new(&plan(), &UsageModel::new(1.9, 0.1), 0.2, 0.5);
        for i in 0..20 {
            let p = 0.5 + 0.12 * i as f64;
            let h = 1e-6;
            let fd = (m.omega(p + h) - m.omega(p - h)) / (2.0 * h);
            assert!((fd - m.omega_slope(p)).abs() < 1e-7, "p = {p}");
            let fd2 = (m.omega_slope(p + h) - m.omega_slope(p - h)) / (2.0 * h);
            assert!((fd2 - m.omega_curvature(p)).abs() < 1e-5, "p = {p}");
        }
    }

    #[test]
    fn threshold_examples() {
        let t = price_thresholds(&plan(), &usage(), 0.2, 0.5);
        assert_eq!(t.p_lo, 0.5);
        assert!((t.p_hi - 2.87695).abs() < 1e-4);

        let t = price_thresholds(&plan(), &UsageModel::new(1.9, 0.1), 0.2, 0.5);
        assert_eq!(t.p_lo, 0.5);

        let t = price_thresholds(&plan(), &UsageModel::new(1.9, 1e-12), 0.2, 0.5);
        assert!((t.p_lo - t.p_hi).abs() < 1e-9);
        assert!((t.p_lo - (0.5 + 13.0 * 0.1)).abs() < 1e-9);
    }

    #[test]
    fn thresholds_bracket_the_transition() {
        let tail = 0.5 * erfc(2.0);
        for &mu in &[1.95, 2.0, 2.05] {
            let us = UsageModel::new(mu, 0.05);
            let t = price_thresholds(&plan(), &us, 0.2, 0.5);
            assert!(t.p_lo > 0.5);
            let m = AcceptanceModel::new(&plan(), &us, 0.2, 0.5);
            assert!(m.accept_prob(t.p_lo) <= tail + 1e-12);
            assert!(m.accept_prob(t.p_hi) >= 1.0 - tail - 1e-12);
        }
    }

    #[test]
    fn empirical_cost_cdf_within_dkw_band() {
        let (pl, us) = (plan(), UsageModel::new(1.9, 0.1));
        let b = 0.2;
        let n = 1_000_000usize;
        let normal = Normal::new(us.mean, us.std).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x00C0_FFEE);
        let mut costs: Vec<f64> = (0..n)
            .map(|_| {
                let x = loop {
                    let x = normal.sample(&mut rng);
                    if x >= 0.0 {
                        break x;
                    }
                };
                cost_unchecked(x, &pl, b)
            })
            .collect();
        costs.sort_by(f64::total_cmp);
        // DKW: Pr(sup |F_n - F| > e) <= 2 exp(-2 n e^2); 99% band.
        let band = ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt();
        for i in 0..=260 {
            let c = i as f64 * 0.01;
            let emp = costs.partition_point(|&v| v <= c) as f64 / n as f64;
            let exact = cost_cdf(c, &pl, &us, b).unwrap();
            assert!((emp - exact).abs() <= band, "c = {c}: {emp} vs {exact}");
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cost_bounded_monotone_lipschitz(x in 0.0f64..5.0, dx in 0.0f64..1.0, q in 0.3f64..4.0, beta in 0.1f64..30.0, b in 0.01f64..1.0) {
                let pl = TariffPlan::new(q, 10.0, beta);
                let c1 = sharing_cost(x, &pl, b).unwrap();
                let c2 = sharing_cost(x + dx, &pl, b).unwrap();
                prop_assert!((0.0..=beta * b + 1e-12).contains(&c1));
                prop_assert!(c2 >= c1);
                prop_assert!(c2 - c1 <= beta * dx + 1e-9);
            }

            #[test]
            fn accept_prob_nondecreasing(p1 in 0.0f64..5.0, dp in 0.0f64..2.0, mu in 0.0f64..3.0, sigma in 0.01f64..1.0) {
                let pl = TariffPlan::new(2.0, 17.0, 13.0);
                let us = UsageModel::new(mu, sigma);
                let a = accept_prob(p1, &pl, &us, 0.2, 0.5).unwrap();
                let b = accept_prob(p1 + dp, &pl, &us, 0.2, 0.5).unwrap();
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!(b >= a);
            }

            #[test]
            fn cdf_agrees_with_accept_prob(c in 0.0f64..2.6, mu in 0.5f64..3.0, sigma in 0.01f64..0.5) {
                let pl = TariffPlan::new(2.0, 17.0, 13.0);
                let us = UsageModel::new(mu, sigma);
                prop_assume!(c < 2.6);
                let f = cost_cdf(c, &pl, &us, 0.2).unwrap();
                let a = AcceptanceModel::new(&pl, &us, 0.2, 0.5).accept_prob(0.5 + c);
                prop_assert!((f - a).abs() <= 1e-12);
            }
        }
    }
}
