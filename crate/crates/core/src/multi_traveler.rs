//! Pricing when other travelers compete for the same pHs.
//!
//! `M ~ Poisson(m_t)` other travelers share the disc with the tagged one.
//! Of the `N ~ Poisson(m)` pHs, `N_y` accept the posted price, and the
//! tagged traveler is served with probability `min(1, N_y / (M + 1))`.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::homogeneous::optimal_price_hom_with;
use crate::market::{poisson_table, poisson_truncation, MarketParams, PhType, TariffPlan, UsageModel};
use crate::numerics::{bisect_with_count, erfc_inv, minimize_scalar, ToleranceConfig};
use crate::sharing_cost::AcceptanceModel;
use crate::solution::{DiagnosticFlag, PricingSolution, Regime, SolverDiagnostics};

/// Upper bounds on the service probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServeProbBounds {
    /// Supply-rich bound: at least one accepting pH, `1 - exp(-m accept(p))`.
    pub ub1: f64,
    /// Demand-rich bound: `m accept(p) (1 - exp(-m_t)) / m_t`, equal to
    /// `m accept(p)` when `m_t = 0`.
    pub ub2: f64,
    pub combined: f64,
}

/// Service probability from the truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactServeProb {
    pub value: f64,
    /// Probability mass of the omitted Poisson tails, which bounds the
    /// truncation error because every summand is at most one.
    pub truncation_error: f64,
}

struct MulContext {
    accept: AcceptanceModel,
    m: f64,
    m_t: f64,
    c0: f64,
    eps: f64,
}

impl MulContext {
    fn new(params: &MarketParams) -> Result<Self> {
        let ty = params.single_type()?;
        Ok(Self {
            accept: AcceptanceModel::new(&ty.plan, &ty.usage, params.demand, params.reservation),
            m: params.expected_count(0),
            m_t: params.expected_travelers(),
            c0: params.roaming_fee,
            eps: params.reservation,
        })
    }

    fn bounds(&self, p: f64) -> ServeProbBounds {
        let x = self.m * self.accept.accept_prob(p);
        let ub1 = -(-x).exp_m1();
        let ub2 = if self.m_t == 0.0 {
            x
        } else {
            x * -(-self.m_t).exp_m1() / self.m_t
        };
        ServeProbBounds {
            ub1,
            ub2,
            combined: ub1.min(ub2),
        }
    }

    fn approx_cost(&self, p: f64) -> f64 {
        self.c0 + (p - self.c0) * self.bounds(p).combined
    }

    fn exact(&self, p: f64) -> ExactServeProb {
        let omega = self.accept.accept_prob(p);
        let n_max = poisson_truncation(self.m);
        let m_max = poisson_truncation(self.m_t);
        let pn = poisson_table(self.m, n_max);
        let pm = poisson_table(self.m_t, m_max);

        // Law of the number of accepting pHs: sum_N Pois(N) Binom(N, y, omega).
        let mut willing = vec![0.0; n_max as usize + 1];
        for (n, &w) in pn.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (y, slot) in willing.iter_mut().enumerate().take(n + 1) {
                *slot += w * binomial_pmf(n as u64, y as u64, omega);
            }
        }
        let mut value = 0.0;
        for (mm, &w) in pm.iter().enumerate() {
            let seats = (mm + 1) as f64;
            let served: f64 = willing
                .iter()
                .enumerate()
                .map(|(y, &q)| q * (y as f64 / seats).min(1.0))
                .sum();
            value += w * served;
        }
        let tail_n = (1.0 - pn.iter().sum::<f64>()).max(0.0);
        let tail_m = (1.0 - pm.iter().sum::<f64>()).max(0.0);
        ExactServeProb {
            value,
            truncation_error: tail_n + tail_m,
        }
    }

    /// `omega(p) + (p - C0) omega'(p)`: the sign of the demand-rich objective's
    /// slope.
    fn high_density_slope(&self, p: f64) -> f64 {
        self.accept.omega(p) + (p - self.c0) * self.accept.omega_slope(p)
    }

    fn high_density_root(&self, tol: &ToleranceConfig) -> Result<HighDensityRoot> {
        let (lo, hi) = (self.eps, self.c0);
        if lo >= hi {
            return Ok(HighDensityRoot {
                price: lo,
                iterations: 0,
                multiple_sign_changes: false,
            });
        }
        const SCAN: usize = 1000;
        let xs: Vec<f64> = (0..=SCAN)
            .map(|i| if i == SCAN { hi } else { lo + (hi - lo) * i as f64 / SCAN as f64 })
            .collect();
        let hs: Vec<f64> = xs.iter().map(|&x| self.high_density_slope(x)).collect();
        let changes: Vec<usize> = (0..SCAN)
            .filter(|&i| (hs[i] < 0.0) != (hs[i + 1] < 0.0))
            .collect();
        match changes.as_slice() {
            [] if hs[0] >= 0.0 => Ok(HighDensityRoot {
                price: lo,
                iterations: 0,
                multiple_sign_changes: false,
            }),
            [] => Ok(HighDensityRoot {
                price: hi,
                iterations: 0,
                multiple_sign_changes: false,
            }),
            [i] if hs[*i] < 0.0 => {
                let (r, iterations) = bisect_with_count(|p| self.high_density_slope(p), xs[*i], xs[i + 1], tol)?;
                Ok(HighDensityRoot {
                    price: r,
                    iterations,
                    multiple_sign_changes: false,
                })
            }
            _ => {
                let m = minimize_scalar(|p| (p - self.c0) * self.accept.omega(p), lo, hi, tol)?;
                Ok(HighDensityRoot {
                    price: m.argmin,
                    iterations: 0,
                    multiple_sign_changes: true,
                })
            }
        }
    }

    fn omega_inverse(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target < 1.0) {
            return Err(PricingError::Domain(format!(
                "target acceptance probability must lie in (0, 1), got {target}"
            )));
        }
        Ok(self.accept.price_at_z(erfc_inv(2.0 * (1.0 - target))?))
    }
}

struct HighDensityRoot {
    price: f64,
    iterations: usize,
    multiple_sign_changes: bool,
}

fn binomial_pmf(n: u64, k: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let (nf, kf) = (n as f64, k as f64);
    let log_choose = libm::lgamma(nf + 1.0) - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0);
    (log_choose + kf * x.ln() + (nf - kf) * (-x).ln_1p()).exp()
}

/// Service probability of the tagged traveler from the Poisson/Binomial
/// series, truncated where each Poisson tail falls below 1e-12.
pub fn serve_prob_exact(p: f64, params: &MarketParams) -> Result<ExactServeProb> {
    check_price(p)?;
    Ok(MulContext::new(params)?.exact(p))
}

pub fn serve_prob_bounds(p: f64, params: &MarketParams) -> Result<ServeProbBounds> {
    check_price(p)?;
    Ok(MulContext::new(params)?.bounds(p))
}

/// Expected cost with the service probability replaced by `min(ub1, ub2)`.
pub fn approx_expected_cost_mul(p: f64, params: &MarketParams) -> Result<f64> {
    let ctx = MulContext::new(params)?;
    check_interval(p, ctx.eps, ctx.c0)?;
    Ok(ctx.approx_cost(p))
}

/// Expected cost with the series service probability.
pub fn exact_expected_cost_mul(p: f64, params: &MarketParams) -> Result<f64> {
    let ctx = MulContext::new(params)?;
    check_interval(p, ctx.eps, ctx.c0)?;
    Ok(ctx.c0 + (p - ctx.c0) * ctx.exact(p).value)
}

/// Price at which the unclamped acceptance probability equals `target`.
pub fn omega_inverse(target: f64, params: &MarketParams) -> Result<f64> {
    MulContext::new(params)?.omega_inverse(target)
}

/// Minimizer of the demand-rich objective `(p - C0) omega(p)` on `[eps, C0]`:
/// the root of `omega(p) + (p - C0) omega'(p)`, or `eps` when that expression
/// is nonnegative throughout. Independent of the traveler density.
pub fn high_density_root(params: &MarketParams) -> Result<f64> {
    Ok(MulContext::new(params)?
        .high_density_root(&ToleranceConfig::default())?
        .price)
}

/// Optimal price under traveler competition.
///
/// * `lambda_t <= lambda accept(p0)`: supply-rich throughout; the homogeneous
///   optimum `p0` is kept (low regime).
/// * `lambda accept(p0) < lambda_t <= lambda`: the bounds cross at
///   `p_x = omega^-1(lambda_t / lambda)`; the demand-rich bound is active
///   below `p_x`, so the price is `min(p_tilde, p_x)` (medium regime).
/// * `lambda_t > lambda`: demand-rich throughout; price `p_tilde` (high regime).
///
/// A grid search over the same objective guards every branch.
pub fn optimal_price_mul(params: &MarketParams) -> Result<PricingSolution> {
    optimal_price_mul_with(params, &ToleranceConfig::default())
}

pub fn optimal_price_mul_with(params: &MarketParams, tol: &ToleranceConfig) -> Result<PricingSolution> {
    tol.validate()?;
    let ctx = MulContext::new(params)?;
    let hom = optimal_price_hom_with(params, tol)?;
    let lambda = params.ph_types[0].density;
    let lambda_t = params.traveler_density;

    let mut diagnostics = SolverDiagnostics {
        convex: hom.diagnostics.convex,
        ..SolverDiagnostics::default()
    };
    if params.quota_below_demand() {
        diagnostics.flag(DiagnosticFlag::QuotaBelowDemand);
    }

    let low_edge = lambda * ctx.accept.accept_prob(hom.price);
    let (regime, rule_price) = if lambda_t <= low_edge {
        diagnostics.iterations = hom.diagnostics.iterations;
        diagnostics.residual = hom.diagnostics.residual;
        (Regime::LowTravelerDensity, hom.price)
    } else {
        let root = ctx.high_density_root(tol)?;
        diagnostics.iterations = root.iterations;
        if root.multiple_sign_changes {
            diagnostics.flag(DiagnosticFlag::MultipleSignChanges);
        }
        if lambda_t <= lambda {
            let target = lambda_t / lambda;
            let price = if target < 1.0 {
                let crossing = ctx.omega_inverse(target)?;
                debug_assert!(crossing >= ctx.eps - 1e-9, "crossing below eps");
                diagnostics.rule_price = Some(crossing);
                root.price.min(crossing)
            } else {
                root.price
            };
            (Regime::MediumTravelerDensity, price)
        } else {
            (Regime::HighTravelerDensity, root.price)
        }
    };

    let rule_cost = ctx.approx_cost(rule_price);
    let (lo, hi) = (ctx.eps, ctx.c0);
    let n = tol.grid_points;
    let mut best = (rule_price, rule_cost);
    let sat = ctx.accept.saturation_price();
    let extra = (sat <= hi).then_some(sat);
    for p in (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .chain(extra)
    {
        let c = ctx.approx_cost(p);
        if c < best.1 - 1e-9 {
            best = (p, c);
        }
    }
    diagnostics.evaluations = hom.diagnostics.evaluations + n + 1;
    if best.0 != rule_price {
        diagnostics.flag(DiagnosticFlag::CaseOverridden);
    }
    let (price, expected_cost) = best;
    Ok(PricingSolution {
        price,
        expected_cost,
        success_prob: ctx.bounds(price).combined,
        regime,
        diagnostics,
    })
}

/// Minimizer of the series-based expected cost on `[eps, C0]`, returned as
/// `(price, cost)`.
pub fn optimal_exact_cost_mul(params: &MarketParams, tol: &ToleranceConfig) -> Result<(f64, f64)> {
    let ctx = MulContext::new(params)?;
    let cost = |p: f64| ctx.c0 + (p - ctx.c0) * ctx.exact(p).value;
    let m = minimize_scalar(cost, ctx.eps, ctx.c0, tol)?;
    let sat = ctx.accept.saturation_price();
    if sat > ctx.eps && sat <= ctx.c0 {
        let c = cost(sat);
        if c < m.min {
            return Ok((sat, c));
        }
    }
    Ok((m.argmin, m.min))
}

/// How a pH's monthly usage is divided among its sub-pHs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UsageSplit {
    /// Each sub-pH carries exactly `x / q`: mean `mu / q`, std `sigma / q`.
    #[default]
    Deterministic,
    /// Sub-pH usages are independent with the same total mean:
    /// mean `mu / q`, std `sigma / sqrt(q)`.
    IndependentShares,
}

/// Partitions each pH into `q` sub-pHs holding `(Q/q, P0/q, beta)`, at `q`
/// times the spatial density.
pub fn split_plan_subphs(
    plan: &TariffPlan,
    usage: &UsageModel,
    density: f64,
    q: u32,
    split: UsageSplit,
) -> Result<(TariffPlan, UsageModel, f64)> {
    if q == 0 {
        return Err(PricingError::Domain("sub-pH count must be at least 1".into()));
    }
    let qf = f64::from(q);
    let plan = TariffPlan::new(plan.quota / qf, plan.lump_sum / qf, plan.overage_rate);
    let std_div = match split {
        UsageSplit::Deterministic => qf,
        UsageSplit::IndependentShares => qf.sqrt(),
    };
    let usage = UsageModel {
        mean: usage.mean / qf,
        std: usage.std / std_div,
        est_noise_var: usage.est_noise_var / (std_div * std_div),
    };
    Ok((plan, usage, density * qf))
}

/// Applies [`split_plan_subphs`] to every type of a market.
pub fn split_market(params: &MarketParams, q: u32, split: UsageSplit) -> Result<MarketParams> {
    let mut out = params.clone();
    out.ph_types = params
        .ph_types
        .iter()
        .map(|t| {
            split_plan_subphs(&t.plan, &t.usage, t.density, q, split)
                .map(|(plan, usage, density)| PhType::new(plan, usage, density))
        })
        .collect::<Result<_>>()?;
    Ok(out)
}

/// Traveler density `lambda accept(p)` at which the two bounds coincide.
pub fn crossing_traveler_density(p: f64, params: &MarketParams) -> Result<f64> {
    let ctx = MulContext::new(params)?;
    Ok(params.ph_types[0].density * ctx.accept.accept_prob(p))
}

fn check_price(p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("price must be nonnegative, got {p}")))
    }
}

fn check_interval(p: f64, lo: f64, hi: f64) -> Result<()> {
    if (lo..=hi).contains(&p) {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("price must lie in [{lo}, {hi}], got {p}")))
    }
}
