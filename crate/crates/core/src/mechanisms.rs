//! Randomness plumbing and the differential-privacy primitives every scheme
//! builds on: seeded/forkable random sources, Laplace and two-sided geometric
//! noise, the Metropolis acceptance rule of the exponential mechanism, and
//! multi-level budget splitting.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Deterministic random source.
///
/// A `RandomSource` is seeded once and can spawn independent child sources
/// keyed by a task id. Child derivation depends only on `(seed, task)` — not
/// on how many draws the parent has made — so parallel workers get stable
/// streams no matter how work is scheduled.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

/// One round of the splitmix64 output function; used to derive child seeds.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed this source was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child source for a sub-task. Depends only on the parent's
    /// seed and `task`, never on the parent's draw position.
    pub fn subsource(&self, task: u64) -> Self {
        RandomSource::new(splitmix64(self.seed ^ splitmix64(task)))
    }

    /// Uniform draw from the open interval (0, 1); never returns 0 exactly,
    /// so it is safe under `ln`.
    pub fn open01(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Laplace noise with the given scale (mean zero), by inverse-CDF transform.
///
/// Adding `laplace(sensitivity / eps, rng)` to a statistic with the given
/// L1 sensitivity yields an `eps`-differentially-private release.
pub fn laplace(scale: f64, rng: &mut RandomSource) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "laplace scale must be positive and finite, got {scale}"
        )));
    }
    let u = rng.open01();
    Ok(if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    })
}

/// Two-sided geometric noise: Pr[X = d] = ((1-a)/(1+a)) * a^|d| for integer d.
///
/// With `a = exp(-eps)` this is the discrete analogue of Laplace noise for
/// count queries of sensitivity 1. Sampling inverts the closed-form CDF
/// directly — a single uniform draw, no rejection loop — so the cost per draw
/// is O(1) even for `a` close to 1.
pub fn geometric(alpha: f64, rng: &mut RandomSource) -> Result<i64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric alpha must lie in (0,1), got {alpha}"
        )));
    }
    let u = rng.open01();
    let ln_a = alpha.ln();
    // CDF: F(d) = a^(-d)/(1+a) for d < 0, F(d) = 1 - a^(d+1)/(1+a) for d >= 0.
    let neg_mass = alpha / (1.0 + alpha); // Pr[X <= -1]
    if u < neg_mass {
        let t = (u * (1.0 + alpha)).ln() / ln_a; // >= 1 in this branch
        Ok(-(t.floor() as i64))
    } else {
        let t = ((1.0 - u) * (1.0 + alpha)).ln() / ln_a;
        Ok((t.ceil() as i64 - 1).max(0))
    }
}

/// Metropolis acceptance for the exponential mechanism: accept a move whose
/// score changes by `delta_score` with probability
/// min(1, exp(eps * delta_score / (2 * sensitivity))).
///
/// Improving moves (`delta_score >= 0`) are always accepted and consume no
/// randomness.
pub fn mh_accept(
    delta_score: f64,
    eps: f64,
    sensitivity: f64,
    rng: &mut RandomSource,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mh_accept eps must be positive, got {eps}"
        )));
    }
    if !(sensitivity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mh_accept sensitivity must be positive, got {sensitivity}"
        )));
    }
    if delta_score >= 0.0 {
        return Ok(true);
    }
    let prob = (eps * delta_score / (2.0 * sensitivity)).exp();
    Ok(rng.open01() < prob)
}

/// Per-level privacy budget for a divisive hierarchy of depth `max_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSchedule {
    /// Budget for the partitioning chain run at each level; index 0 is the
    /// root level. Geometric with `per_level[i] = ratio * per_level[i+1]`.
    pub per_level: Vec<f64>,
    /// Budget reserved for each level's quality-score noise.
    pub eps_mod: f64,
    /// Total budget the schedule consumes: sum(per_level) + max_level*eps_mod.
    pub total: f64,
}

/// Split a total budget `eps` across `max_level` levels of partitioning
/// chains plus `max_level` rounds of quality-score noise at `eps_mod` each.
///
/// The chain budgets decay geometrically by `ratio` from the root down
/// (`ratio = 1` splits evenly); they always sum to `eps - max_level*eps_mod`.
pub fn split_budget(
    eps: f64,
    max_level: usize,
    ratio: f64,
    eps_mod: f64,
) -> Result<BudgetSchedule> {
    if max_level == 0 {
        return Err(Error::InvalidParameter(
            "split_budget requires at least one level".into(),
        ));
    }
    if !(ratio >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split_budget ratio must be >= 1, got {ratio}"
        )));
    }
    if !(eps_mod >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "split_budget eps_mod must be non-negative, got {eps_mod}"
        )));
    }
    let eps_part = eps - max_level as f64 * eps_mod;
    if !(eps_part > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget {eps} too small: {max_level} levels of quality noise at {eps_mod} leave nothing \
             for partitioning"
        )));
    }
    let levels = max_level as f64;
    let last = if ratio == 1.0 {
        eps_part / levels
    } else {
        eps_part * (ratio - 1.0) / (ratio.powf(levels) - 1.0)
    };
    let mut per_level = vec![0.0; max_level];
    per_level[max_level - 1] = last;
    for i in (0..max_level.saturating_sub(1)).rev() {
        per_level[i] = per_level[i + 1] * ratio;
    }
    Ok(BudgetSchedule {
        per_level,
        eps_mod,
        total: eps,
    })
}
