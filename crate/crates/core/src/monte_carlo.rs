//! Direct simulation of the sharing market, used as an oracle for every
//! analytic expectation.
//!
//! Trial `i` draws from its own ChaCha8 stream (`set_stream(i)`) under a key
//! derived from the seed, so a trial's randomness does not depend on which
//! worker runs it. Trials are grouped into fixed chunks whose moments are
//! merged in chunk order, which makes every estimate bit-identical for a
//! given seed regardless of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PricingError, Result};
use crate::market::{expected_ph_count, MarketParams, PhType, TariffPlan, UsageModel};
use crate::sharing_cost::{cost_unchecked, AcceptanceModel};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub std_err: f64,
    pub n_trials: u64,
    pub seed: u64,
}

impl EstimateWithCI {
    /// `(mean - reference) / std_err`. Defined as 0 when both sides are exact
    /// and agree, and as infinity when the estimate is exact but differs.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if self.std_err > 0.0 {
            diff / self.std_err
        } else if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }

    /// Whether `reference` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        self.z_score(reference).abs() <= k
    }
}

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb, nf) = (self.n as f64, other.n as f64, n as f64);
        Moments {
            n,
            mean: self.mean + delta * nb / nf,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nf,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn keyed_rng(seed: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for word in key.chunks_exact_mut(8) {
        word.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Runs `n_trials` independent trials of `trial` and summarizes the outputs.
pub fn run_trials<F>(n_trials: u64, seed: u64, trial: F) -> Result<EstimateWithCI>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if n_trials == 0 {
        return Err(PricingError::Domain("at least one trial is required".into()));
    }
    let base = keyed_rng(seed);
    let chunks = n_trials.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                let mut rng = base.clone();
                rng.set_stream(i);
                m.push(trial(&mut rng));
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let n = total.n as f64;
    let std_err = if total.n > 1 {
        (total.m2.max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(EstimateWithCI {
        mean: total.mean,
        std_err,
        n_trials,
        seed,
    })
}

/// Samplers for one pH type.
struct TypeSampler {
    count: Option<Poisson<f64>>,
    usage: Normal<f64>,
    plan: TariffPlan,
    accept: AcceptanceModel,
    demand: f64,
}

impl TypeSampler {
    fn new(ty: &PhType, params: &MarketParams) -> Result<Self> {
        Ok(Self {
            count: poisson(expected_ph_count(ty.density, params.radius))?,
            usage: normal(&ty.usage)?,
            plan: ty.plan,
            accept: AcceptanceModel::new(&ty.plan, &ty.usage, params.demand, params.reservation),
            demand: params.demand,
        })
    }

    fn draw_count<R: Rng>(&self, rng: &mut R) -> u64 {
        self.count.as_ref().map_or(0, |d| d.sample(rng) as u64)
    }

    fn draw_cost<R: Rng>(&self, rng: &mut R) -> f64 {
        cost_unchecked(draw_usage(&self.usage, rng), &self.plan, self.demand)
    }

    /// Draws `n` pHs and reports whether any accepts `p`.
    fn any_accepts<R: Rng>(&self, n: u64, p: f64, rng: &mut R) -> bool {
        (0..n).any(|_| self.accept.accepts_cost(self.draw_cost(rng), p))
    }
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| PricingError::Domain(format!("Poisson mean {mean}: {e}")))
}

fn normal(usage: &UsageModel) -> Result<Normal<f64>> {
    Normal::new(usage.mean, usage.std)
        .map_err(|e| PricingError::Domain(format!("usage distribution: {e}")))
}

/// Gaussian usage conditioned on being nonnegative (negative draws are redrawn).
fn draw_usage<R: Rng>(normal: &Normal<f64>, rng: &mut R) -> f64 {
    loop {
        let x = normal.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
}

fn check_price(p: f64) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("price must be finite, got {p}")))
    }
}

/// Realized traveler cost with one pH type: `p` if any pH in range accepts,
/// `C0` otherwise.
pub fn mc_expected_cost_hom(p: f64, params: &MarketParams, n_trials: u64, seed: u64) -> Result<EstimateWithCI> {
    let ty = params.single_type()?;
    check_price(p)?;
    let s = TypeSampler::new(ty, params)?;
    let c0 = params.roaming_fee;
    run_trials(n_trials, seed, |rng| {
        let n = s.draw_count(rng);
        if s.any_accepts(n, p, rng) {
            p
        } else {
            c0
        }
    })
}

/// Complete-information payment: `eps + min_i C_i` when at least one pH is in
/// range, `C0` otherwise.
pub fn mc_benchmark_cost(params: &MarketParams, n_trials: u64, seed: u64) -> Result<EstimateWithCI> {
    let ty = params.single_type()?;
    let s = TypeSampler::new(ty, params)?;
    let (c0, eps) = (params.roaming_fee, params.reservation);
    run_trials(n_trials, seed, |rng| {
        let n = s.draw_count(rng);
        if n == 0 {
            return c0;
        }
        let min_cost = (0..n).map(|_| s.draw_cost(rng)).fold(f64::INFINITY, f64::min);
        eps + min_cost
    })
}

/// Realized traveler cost with several independent pH types.
pub fn mc_expected_cost_het(p: f64, params: &MarketParams, n_trials: u64, seed: u64) -> Result<EstimateWithCI> {
    params.validate()?;
    check_price(p)?;
    let samplers = params
        .ph_types
        .iter()
        .map(|t| TypeSampler::new(t, params))
        .collect::<Result<Vec<_>>>()?;
    let c0 = params.roaming_fee;
    run_trials(n_trials, seed, |rng| {
        let mut served = false;
        for s in &samplers {
            let n = s.draw_count(rng);
            if s.any_accepts(n, p, rng) {
                served = true;
                break;
            }
        }
        if served {
            p
        } else {
            c0
        }
    })
}

/// One overlapped-traveler trial: returns whether the tagged traveler is
/// served. The `M + 1` travelers are matched to the `N_y` willing pHs in a
/// uniformly random order.
fn mul_trial<R: Rng>(s: &TypeSampler, travelers: &Option<Poisson<f64>>, p: f64, rng: &mut R) -> bool {
    let n = s.draw_count(rng);
    let m = travelers.as_ref().map_or(0, |d| d.sample(rng) as u64);
    let willing = (0..n).filter(|_| s.accept.accepts_cost(s.draw_cost(rng), p)).count() as u64;
    let rank = rng.random_range(1..=m + 1);
    rank <= willing
}

/// Realized cost of the tagged traveler when other travelers compete.
pub fn mc_expected_cost_mul(p: f64, params: &MarketParams, n_trials: u64, seed: u64) -> Result<EstimateWithCI> {
    let ty = params.single_type()?;
    check_price(p)?;
    let s = TypeSampler::new(ty, params)?;
    let travelers = poisson(params.expected_travelers())?;
    let c0 = params.roaming_fee;
    run_trials(n_trials, seed, |rng| {
        if mul_trial(&s, &travelers, p, rng) {
            p
        } else {
            c0
        }
    })
}

/// Frequency with which the tagged traveler is served.
pub fn mc_serve_prob_mul(p: f64, params: &MarketParams, n_trials: u64, seed: u64) -> Result<EstimateWithCI> {
    let ty = params.single_type()?;
    check_price(p)?;
    let s = TypeSampler::new(ty, params)?;
    let travelers = poisson(params.expected_travelers())?;
    run_trials(n_trials, seed, |rng| {
        if mul_trial(&s, &travelers, p, rng) {
            1.0
        } else {
            0.0
        }
    })
}

/// Frequency with which a single random pH accepts price `p`.
pub fn mc_accept_freq(
    p: f64,
    plan: &TariffPlan,
    usage: &UsageModel,
    demand: f64,
    eps: f64,
    n_trials: u64,
    seed: u64,
) -> Result<EstimateWithCI> {
    check_price(p)?;
    let dist = normal(usage)?;
    let accept = AcceptanceModel::new(plan, usage, demand, eps);
    run_trials(n_trials, seed, |rng| {
        let c = cost_unchecked(draw_usage(&dist, rng), plan, demand);
        if accept.accepts_cost(c, p) {
            1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::benchmark_expected_cost;
    use crate::homogeneous::expected_cost_hom;
    use crate::presets;

    const SEED: u64 = 0x5EED_2018;

    #[test]
    fn zero_trials_rejected() {
        assert!(mc_expected_cost_hom(0.5, &presets::baseline(), 0, SEED).is_err());
    }

    #[test]
    fn constant_outputs_are_exact() {
        let e = mc_expected_cost_hom(0.4, &presets::baseline(), 10_000, SEED).unwrap();
        assert_eq!((e.mean, e.std_err), (3.0, 0.0));
        let e = mc_expected_cost_hom(0.5, &presets::baseline().with_density(0.0), 10_000, SEED).unwrap();
        assert_eq!((e.mean, e.std_err), (3.0, 0.0));
        let e = mc_benchmark_cost(&presets::baseline().with_density(0.0), 10_000, SEED).unwrap();
        assert_eq!((e.mean, e.std_err), (3.0, 0.0));
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let a = mc_expected_cost_hom(0.9, &presets::baseline(), 50_000, SEED).unwrap();
        let b = mc_expected_cost_hom(0.9, &presets::baseline(), 50_000, SEED).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
        let c = mc_expected_cost_hom(0.9, &presets::baseline(), 50_000, SEED + 1).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn independent_of_thread_count() {
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_expected_cost_mul(0.7, &presets::baseline().with_traveler_density(1e-3), 40_000, SEED))
                .unwrap()
        };
        let one = run(1);
        let three = run(3);
        assert_eq!(one.mean.to_bits(), three.mean.to_bits());
        assert_eq!(one.std_err.to_bits(), three.std_err.to_bits());
    }

    #[test]
    fn chunk_merge_matches_direct_moments() {
        let xs: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 1000) as f64 / 37.0).collect();
        let mut direct = Moments::default();
        xs.iter().for_each(|&x| direct.push(x));
        let merged = xs
            .chunks(333)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x));
                m
            })
            .fold(Moments::default(), Moments::merge);
        assert_eq!(merged.n, direct.n);
        assert!((merged.mean - direct.mean).abs() < 1e-12);
        assert!((merged.m2 - direct.m2).abs() < 1e-8 * direct.m2);
    }

    #[test]
    fn single_type_het_matches_hom_exactly() {
        let p = presets::heavy_usage();
        let a = mc_expected_cost_hom(1.2, &p, 20_000, SEED).unwrap();
        let b = mc_expected_cost_het(1.2, &p, 20_000, SEED).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn zero_traveler_density_matches_hom_exactly() {
        let p = presets::baseline();
        let mul = mc_expected_cost_mul(0.8, &p, 20_000, SEED).unwrap();
        let hom = expected_cost_hom(0.8, &p).unwrap();
        assert!(mul.agrees_with(hom, 3.0), "z = {}", mul.z_score(hom));
    }

    #[test]
    fn crowded_travelers_push_cost_to_roaming() {
        let p = presets::baseline().with_traveler_density(1.0);
        let e = mc_expected_cost_mul(0.5, &p, 20_000, SEED).unwrap();
        assert!(e.mean > 2.99);
    }

    #[test]
    fn benchmark_collapses_to_eps_with_certain_zero_costs() {
        let mut p = presets::baseline().with_density(0.05);
        p.ph_types[0].usage.std = 1e-6;
        let e = mc_benchmark_cost(&p, 20_000, SEED).unwrap();
        assert!((e.mean - 0.5).abs() < 1e-9);
        assert!((benchmark_expected_cost(&p).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn z_score_conventions() {
        let exact = EstimateWithCI {
            mean: 3.0,
            std_err: 0.0,
            n_trials: 10,
            seed: 0,
        };
        assert_eq!(exact.z_score(3.0), 0.0);
        assert!(exact.z_score(2.0).is_infinite());
        let noisy = EstimateWithCI { std_err: 0.5, ..exact };
        assert_eq!(noisy.z_score(2.0), 2.0);
        assert!(noisy.agrees_with(2.0, 3.0));
    }
}
