//! Monte Carlo oracle for chain rewards.
//!
//! Each replication walks one trajectory: an exponential holding time from
//! the total exit rate of the current state, then a successor drawn in
//! proportion to its rate. Replication `i` uses ChaCha8 seeded with `seed`
//! on stream `i`, so results do not depend on thread count or platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ctmc::{pairwise_sum, Ctmc, RewardVector};
use crate::{Error, Result};

/// Two-sided confidence level of [`SimEstimate::ci_half_width`].
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    /// Mean accumulated reward per replication, in reward-seconds.
    pub mean: f64,
    pub ci_half_width: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimEstimate {
    /// Rescales to reward per unit time over `horizon`.
    pub fn per_unit_time(&self, horizon: f64) -> SimEstimate {
        SimEstimate { mean: self.mean / horizon, ci_half_width: self.ci_half_width / horizon, ..*self }
    }

    pub fn covers(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.ci_half_width
    }
}

pub fn simulate_ctmc<S: Sync>(
    model: &Ctmc<S>,
    reward: &RewardVector,
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<SimEstimate> {
    if replications < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {replications}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    model.check_reward(reward)?;

    let samples: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            trajectory(model, reward.as_slice(), horizon, &mut rng)
        })
        .collect();

    let n = replications as f64;
    let mean = pairwise_sum(&samples) / n;
    let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.5 + CONFIDENCE / 2.0);
    Ok(SimEstimate { mean, ci_half_width: t * (var / n).sqrt(), replications, seed })
}

fn trajectory<S>(model: &Ctmc<S>, reward: &[f64], horizon: f64, rng: &mut ChaCha8Rng) -> f64 {
    let exit = model.exit_rates();
    let mut state = pick(model.initial().as_slice().iter().copied().enumerate(), 1.0, rng);
    let mut clock = 0.0;
    let mut acc = 0.0;
    loop {
        let left = horizon - clock;
        if exit[state] == 0.0 {
            return acc + reward[state] * left;
        }
        let hold: f64 = Exp1.sample(rng);
        let hold = hold / exit[state];
        if hold >= left {
            return acc + reward[state] * left;
        }
        acc += reward[state] * hold;
        clock += hold;
        state = pick(model.transitions_from(state), exit[state], rng);
    }
}

/// Categorical draw over `(index, weight)` pairs summing to `total`.
fn pick(items: impl Iterator<Item = (usize, f64)>, total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (j, w) in items {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = j;
        if u < cum {
            return j;
        }
    }
    // rounding left u just past the final bucket
    last
}
