//! Expected-cost objective for a pool of independent Poisson pH types facing
//! one posted price, and its global minimizer on `[eps, C0]`.
//!
//! The objective is `C0 + (p - C0)(1 - exp(-S(p)))` with
//! `S(p) = sum_k m_k accept_k(p)`. Each saturation price `eps + beta_k B`
//! is a downward jump, so the minimizer works piecewise between jumps and
//! compares the piece optima with the jump points and both endpoints.

use crate::error::Result;
use crate::market::{expected_ph_count, MarketParams, PhType};
use crate::numerics::{bisect_with_count, minimize_scalar, ToleranceConfig};
use crate::sharing_cost::AcceptanceModel;

#[derive(Debug, Clone)]
pub(crate) struct Pool {
    members: Vec<(AcceptanceModel, f64)>,
    c0: f64,
    eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PoolOptimum {
    pub price: f64,
    pub cost: f64,
    pub success: f64,
    pub iterations: usize,
    /// `|EC'|` at the price when it came from a first-order root.
    pub residual: f64,
    pub interior_root: bool,
    pub convex: bool,
    pub evaluations: usize,
}

impl Pool {
    pub fn new(params: &MarketParams, types: &[PhType]) -> Self {
        let members = types
            .iter()
            .map(|t| {
                (
                    AcceptanceModel::new(&t.plan, &t.usage, params.demand, params.reservation),
                    expected_ph_count(t.density, params.radius),
                )
            })
            .collect();
        Self {
            members,
            c0: params.roaming_fee,
            eps: params.reservation,
        }
    }

    /// Mean number of accepting pHs in range.
    pub fn exponent(&self, p: f64) -> f64 {
        self.members.iter().map(|(a, m)| m * a.accept_prob(p)).sum()
    }

    pub fn success(&self, p: f64) -> f64 {
        -(-self.exponent(p)).exp_m1()
    }

    pub fn cost(&self, p: f64) -> f64 {
        self.c0 + (p - self.c0) * self.success(p)
    }

    /// Exponent on the smooth piece starting at `start`: types saturated at
    /// `start` contribute their full mean, the rest their smooth curve.
    fn piece_exponent(&self, p: f64, start: f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for (a, m) in &self.members {
            if a.saturation_price() <= start {
                s += m;
            } else {
                s += m * a.omega(p).clamp(0.0, 1.0);
                ds += m * a.omega_slope(p);
            }
        }
        (s, ds)
    }

    fn piece_cost(&self, p: f64, start: f64) -> f64 {
        let (s, _) = self.piece_exponent(p, start);
        self.c0 + (p - self.c0) * -(-s).exp_m1()
    }

    fn piece_slope(&self, p: f64, start: f64) -> f64 {
        let (s, ds) = self.piece_exponent(p, start);
        1.0 - (-s).exp() * (1.0 + (self.c0 - p) * ds)
    }

    fn piece_is_convex(&self, start: f64) -> bool {
        self.members
            .iter()
            .all(|(a, _)| a.saturation_price() <= start || a.mean_within_quota())
    }

    /// Saturation prices strictly inside `(eps, C0]`, sorted and deduplicated.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut jumps: Vec<f64> = self
            .members
            .iter()
            .map(|(a, _)| a.saturation_price())
            .filter(|&s| s > self.eps && s <= self.c0)
            .collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        jumps
    }

    /// Global minimizer of the expected cost on `[eps, C0]`. Ties within
    /// `abs_tol` go to the lowest price.
    pub fn minimize(&self, tol: &ToleranceConfig) -> Result<PoolOptimum> {
        let (lo, hi) = (self.eps, self.c0);
        let mut best = PoolOptimum {
            price: lo,
            cost: self.cost(lo),
            success: self.success(lo),
            iterations: 0,
            residual: 0.0,
            interior_root: false,
            convex: true,
            evaluations: 1,
        };
        if lo >= hi {
            return Ok(best);
        }

        let jumps = self.jump_points();
        let mut edges = vec![lo];
        edges.extend(jumps.iter().copied().filter(|&s| s < hi));
        edges.push(hi);

        let mut iterations = 0;
        let mut evaluations = 1;
        let mut convex = true;
        let mut candidates: Vec<(f64, bool, f64)> = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if self.piece_is_convex(a) {
                let ga = self.piece_slope(a, a);
                let gb = self.piece_slope(b, a);
                evaluations += 2;
                if ga >= 0.0 {
                    candidates.push((a, false, 0.0));
                } else if gb <= 0.0 {
                    candidates.push((b, false, 0.0));
                } else {
                    let (r, it) = bisect_with_count(|p| self.piece_slope(p, a), a, b, tol)?;
                    iterations += it;
                    evaluations += it;
                    candidates.push((r, true, self.piece_slope(r, a).abs()));
                }
            } else {
                convex = false;
                let m = minimize_scalar(|p| self.piece_cost(p, a), a, b, tol)?;
                evaluations += m.evaluations;
                candidates.push((m.argmin, false, 0.0));
            }
        }
        candidates.extend(jumps.iter().map(|&s| (s, false, 0.0)));
        candidates.push((hi, false, 0.0));
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0));

        for (p, root, residual) in candidates {
            let c = self.cost(p);
            evaluations += 1;
            if c < best.cost - tol.abs_tol {
                best = PoolOptimum {
                    price: p,
                    cost: c,
                    success: self.success(p),
                    iterations: 0,
                    residual,
                    interior_root: root,
                    convex,
                    evaluations: 0,
                };
            }
        }
        best.iterations = iterations;
        best.evaluations = evaluations;
        best.convex = convex;
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{TariffPlan, UsageModel};

    fn market(types: Vec<PhType>, eps: f64, c0: f64) -> MarketParams {
        MarketParams {
            ph_types: types,
            roaming_fee: c0,
            demand: 0.2,
            reservation: eps,
            radius: 30.0,
            traveler_density: 0.0,
        }
    }

    fn grid_min(pool: &Pool, lo: f64, hi: f64, n: usize) -> f64 {
        (0..n)
            .map(|i| pool.cost(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn jump_inside_interval_is_found() {
        // eps + beta B = 0.2 + 2.6 = 2.8 < C0 = 3, and the heavy type makes
        // the jump the global optimum.
        let heavy = PhType::new(TariffPlan::new(2.0, 17.0, 13.0), UsageModel::new(2.9, 0.1), 2.5e-4);
        let params = market(vec![heavy], 0.2, 3.0);
        let pool = Pool::new(&params, &params.ph_types);
        let opt = pool.minimize(&ToleranceConfig::default()).unwrap();
        assert!((opt.price - 2.8).abs() < 1e-12);
        assert!(opt.cost <= grid_min(&pool, 0.2, 3.0, 100_001) + 1e-12);
    }

    #[test]
    fn beats_dense_grid_on_mixed_pool() {
        let t1 = PhType::new(TariffPlan::new(1.8, 17.0, 13.0), UsageModel::new(1.4, 0.1), 2.5e-4);
        let t2 = PhType::new(TariffPlan::new(1.8, 17.0, 13.0), UsageModel::new(1.8, 0.1), 2.5e-4);
        let params = market(vec![t1, t2], 0.2, 3.0);
        let pool = Pool::new(&params, &params.ph_types);
        let opt = pool.minimize(&ToleranceConfig::default()).unwrap();
        assert!(opt.cost <= grid_min(&pool, 0.2, 3.0, 100_001) + 1e-9);
    }
}
