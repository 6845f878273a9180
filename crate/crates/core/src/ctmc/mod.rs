//! Finite-state continuous-time Markov chains.
//!
//! A [`Ctmc`] holds an explicit state space, a sparse generator stored as
//! per-row off-diagonal rates plus exit rates (the negated diagonal), and an
//! initial distribution. Queries are pure: steady state, transient
//! distribution and expected cumulative reward over a horizon.

mod blocks;
mod poisson;
mod steady;
mod transient;

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use ndarray::Array2;

use crate::{Error, Result};

pub use poisson::{poisson_weights, PoissonWeights};
pub(crate) use poisson::pairwise_sum;
pub use steady::DEFAULT_STEADY_TOL;
pub use transient::{Method, Occupancy, TransientOptions, DEFAULT_TOL, UNIFORMIZATION_FACTOR};

/// Bound on q*t handled by a single uniformization pass.
pub const MAX_SINGLE_PASS_QT: f64 = 1e6;

/// Probability vector over the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Distribution(probs))
    }

    /// All mass on one state.
    pub fn point(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidDistribution(format!(
                "index {index} out of range for {len} states"
            )));
        }
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Ok(Distribution(v))
    }

    /// Clips tiny negative round-off and wraps without the exact-sum check.
    pub(crate) fn from_solver(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        Distribution(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn dot(&self, reward: &RewardVector) -> f64 {
        self.0.iter().zip(reward.as_slice()).map(|(p, r)| p * r).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Nonnegative state-based reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector(Vec<f64>);

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, r)) = values.iter().enumerate().find(|(_, r)| !r.is_finite() || **r < 0.0) {
            return Err(Error::InvalidReward(format!("entry {i} is {r}")));
        }
        Ok(RewardVector(values))
    }

    pub fn ones(len: usize) -> Self {
        RewardVector(vec![1.0; len])
    }

    pub fn indicator(len: usize, index: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        RewardVector(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A time-homogeneous CTMC with opaque state labels.
#[derive(Debug, Clone)]
pub struct Ctmc<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    // CSR layout of the off-diagonal generator entries.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    rates: Vec<f64>,
    exit: Vec<f64>,
    initial: Distribution,
}

impl<S> Ctmc<S>
where
    S: Clone + Eq + Hash + Debug,
{
    /// Assembles a chain from labelled transitions. Duplicate `(from, to)`
    /// pairs are summed and the diagonal is the negated row sum.
    pub fn new<I>(states: Vec<S>, transitions: I, initial: Distribution) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
    {
        if states.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::DuplicateState(format!("{s:?}")));
            }
        }
        if initial.len() != states.len() {
            return Err(Error::InvalidDistribution(format!(
                "length {} does not match {} states",
                initial.len(),
                states.len()
            )));
        }

        let n = states.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (from, to, rate) in transitions {
            let i = *index
                .get(&from)
                .ok_or_else(|| Error::UnknownState(format!("{from:?}")))?;
            let j = *index.get(&to).ok_or_else(|| Error::UnknownState(format!("{to:?}")))?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidRate {
                    from: format!("{from:?}"),
                    to: format!("{to:?}"),
                    rate,
                });
            }
            if i == j {
                return Err(Error::SelfLoop(format!("{from:?}")));
            }
            rows[i].push((j, rate));
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut exit = Vec::with_capacity(n);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut total = 0.0;
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut r = 0.0;
                while k < row.len() && row[k].0 == j {
                    r += row[k].1;
                    k += 1;
                }
                cols.push(j);
                rates.push(r);
                total += r;
            }
            exit.push(total);
            row_ptr.push(cols.len());
        }

        Ok(Ctmc { states, index, row_ptr, cols, rates, exit, initial })
    }

    /// Convenience constructor with all initial mass on `start`.
    pub fn with_initial_state<I>(states: Vec<S>, transitions: I, start: &S) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
    {
        let n = states.len();
        let i = states
            .iter()
            .position(|s| s == start)
            .ok_or_else(|| Error::UnknownState(format!("{start:?}")))?;
        Self::new(states, transitions, Distribution::point(n, i)?)
    }

    pub fn index_of(&self, state: &S) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Reward vector built from a per-state predicate.
    pub fn reward_where(&self, mut pred: impl FnMut(&S) -> f64) -> Result<RewardVector> {
        RewardVector::new(self.states.iter().map(&mut pred).collect())
    }
}

impl<S> Ctmc<S> {
    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &Distribution {
        &self.initial
    }

    /// Same generator, different starting distribution.
    pub fn with_initial(&self, initial: Distribution) -> Result<Self>
    where
        S: Clone,
    {
        if initial.len() != self.len() {
            return Err(Error::InvalidDistribution(format!(
                "length {} does not match {} states",
                initial.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        out.initial = initial;
        Ok(out)
    }

    /// Total exit rate of each state (the negated generator diagonal).
    pub fn exit_rates(&self) -> &[f64] {
        &self.exit
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    pub fn transition_count(&self) -> usize {
        self.cols.len()
    }

    /// Off-diagonal entries of row `i` as `(column, rate)`.
    pub fn transitions_from(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.rates[span].iter().copied())
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.row_ptr[i] == self.row_ptr[i + 1]
    }

    /// Generator entry `Q[i][j]`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return -self.exit[i];
        }
        self.transitions_from(i).find(|&(c, _)| c == j).map_or(0.0, |(_, r)| r)
    }

    /// Row sums of the generator, each accumulated in the same order as the
    /// diagonal.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let off: f64 = self.transitions_from(i).map(|(_, r)| r).sum();
                off - self.exit[i]
            })
            .collect()
    }

    pub fn generator_dense(&self) -> Array2<f64> {
        let n = self.len();
        let mut q = Array2::zeros((n, n));
        for i in 0..n {
            q[[i, i]] = -self.exit[i];
            for (j, r) in self.transitions_from(i) {
                q[[i, j]] = r;
            }
        }
        q
    }

    /// States reachable from the support of the initial distribution.
    pub fn reachable_from_initial(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> =
            (0..self.len()).filter(|&i| self.initial[i] > 0.0).collect();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(i) = stack.pop() {
            for (j, _) in self.transitions_from(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Incoming transitions of every state as `(source, rate)`.
    pub(crate) fn transpose(&self) -> Vec<Vec<(usize, f64)>> {
        let mut incoming = vec![Vec::new(); self.len()];
        for i in 0..self.len() {
            for (j, r) in self.transitions_from(i) {
                incoming[j].push((i, r));
            }
        }
        incoming
    }

    pub(crate) fn check_reward(&self, reward: &RewardVector) -> Result<()> {
        if reward.len() != self.len() {
            return Err(Error::InvalidReward(format!(
                "length {} does not match {} states",
                reward.len(),
                self.len()
            )));
        }
        Ok(())
    }
}
