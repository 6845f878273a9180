//! Transient distribution and cumulative reward by uniformization.
//!
//! With `q >= max exit rate` and `U = I + Q/q`,
//!
//! ```text
//! pi(t)            = sum_k Pois(k; qt) pi0 U^k
//! int_0^t pi(s) ds = (1/q) sum_k P(N > k) pi0 U^k,     N ~ Pois(qt)
//! ```
//!
//! Two routes evaluate these sums. [`Method::Uniformization`] walks the
//! series with sparse vector-matrix products and is used while `qt` stays
//! below [`MAX_SINGLE_PASS_QT`](super::MAX_SINGLE_PASS_QT). Stiff chains (fast
//! repairs against year-long horizons push `qt` towards 1e13) use
//! [`Method::Doubling`]: the horizon is cut into `2^d` equal subintervals with
//! `q * t / 2^d <= 1/8`, the dense one-step operator `e^{Q dt}` and its
//! integral are built by uniformization on the short step, and the
//! subintervals are chained by repeated squaring of the block operator
//!
//! ```text
//! [ P  J ]        P = e^{Q dt},  J = int_0^dt e^{Qs} ds R
//! [ 0  I ]
//! ```
//!
//! where the columns of `R` are the requested rewards.

use ndarray::{Array1, Array2, Axis};

use super::blocks::BlockOrder;
use super::poisson::{pairwise_sum, poisson_weights};
use super::{Ctmc, Distribution, RewardVector, MAX_SINGLE_PASS_QT};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const UNIFORMIZATION_FACTOR: f64 = 1.02;
const FLUSH: f64 = 1e-290;

const STEP_THETA: f64 = 0.125;
const STEP_TOL: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Pick the cheaper route from a rough flop estimate.
    #[default]
    Auto,
    Uniformization,
    Doubling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOptions {
    pub tol: f64,
    pub method: Method,
}

impl Default for TransientOptions {
    fn default() -> Self {
        TransientOptions { tol: DEFAULT_TOL, method: Method::Auto }
    }
}

impl TransientOptions {
    pub fn with_tol(tol: f64) -> Self {
        TransientOptions { tol, method: Method::Auto }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Result of integrating a chain over `[0, t]`.
#[derive(Debug, Clone)]
pub struct Occupancy {
    /// Distribution at the end of the horizon.
    pub distribution: Distribution,
    /// Expected accumulated reward (reward-seconds), one entry per requested
    /// reward vector.
    pub rewards: Vec<f64>,
    pub method: Method,
}

impl<S> Ctmc<S> {
    /// Uniformization rate used by both transient routes.
    pub fn uniformization_rate(&self) -> f64 {
        UNIFORMIZATION_FACTOR * self.max_exit_rate()
    }

    pub fn transient_distribution(&self, t: f64, tol: f64) -> Result<Distribution> {
        Ok(self.integrate(t, &[], TransientOptions::with_tol(tol))?.distribution)
    }

    pub fn transient_distribution_with(&self, t: f64, opts: TransientOptions) -> Result<Distribution> {
        Ok(self.integrate(t, &[], opts)?.distribution)
    }

    /// `E[ int_0^T r(X(s)) ds ]` in reward-seconds.
    pub fn cumulative_occupancy(&self, reward: &RewardVector, horizon: f64, tol: f64) -> Result<f64> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
        }
        Ok(self.integrate(horizon, &[reward], TransientOptions::with_tol(tol))?.rewards[0])
    }

    /// Expected time spent in each state over `[0, horizon]`.
    pub fn occupancy_times(&self, horizon: f64, opts: TransientOptions) -> Result<Vec<f64>> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
        }
        let n = self.len();
        let indicators: Vec<RewardVector> = (0..n).map(|i| RewardVector::indicator(n, i)).collect();
        let refs: Vec<&RewardVector> = indicators.iter().collect();
        Ok(self.integrate(horizon, &refs, opts)?.rewards)
    }

    /// Distribution at `t` together with the accumulated value of every
    /// reward in `rewards` over `[0, t]`.
    pub fn integrate(&self, t: f64, rewards: &[&RewardVector], opts: TransientOptions) -> Result<Occupancy> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        if !(opts.tol > 0.0 && opts.tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be in (0, 1), got {}", opts.tol)));
        }
        for r in rewards {
            self.check_reward(r)?;
        }

        let q = self.uniformization_rate();
        let pi0 = self.initial().as_slice();
        if t == 0.0 || q == 0.0 {
            // no movement: the chain sits in its initial distribution
            let acc = rewards
                .iter()
                .map(|r| t * pi0.iter().zip(r.as_slice()).map(|(p, x)| p * x).sum::<f64>())
                .collect();
            return Ok(Occupancy {
                distribution: self.initial().clone(),
                rewards: acc,
                method: Method::Uniformization,
            });
        }

        let qt = q * t;
        let method = match opts.method {
            Method::Auto => self.pick_method(qt, rewards.len()),
            m => m,
        };
        let (pi, acc) = match method {
            Method::Doubling => self.doubling(t, q, rewards),
            _ => {
                if qt > MAX_SINGLE_PASS_QT {
                    return Err(Error::InvalidArgument(format!(
                        "q*t = {qt:e} exceeds the single-pass limit {MAX_SINGLE_PASS_QT:e}"
                    )));
                }
                self.uniformize(t, q, rewards, opts.tol)?
            }
        };
        Ok(Occupancy { distribution: Distribution::from_solver(pi), rewards: acc, method })
    }

    fn pick_method(&self, qt: f64, reward_count: usize) -> Method {
        if qt > MAX_SINGLE_PASS_QT {
            return Method::Doubling;
        }
        let n = self.len() as f64;
        let sparse_cost = (qt + 8.0 * qt.sqrt() + 10.0) * (self.transition_count() as f64 + 2.0 * n);
        let steps = 10.0 + (qt / STEP_THETA).log2().max(0.0);
        // dense products run roughly ten times faster per flop than the
        // sparse scatter loop
        let fill = if n > 256.0 { BlockOrder::of(self).work_fraction() } else { 1.0 };
        let dense_cost = steps * (2.0 * n * n * (n * fill + reward_count as f64)) / 10.0;
        if sparse_cost <= dense_cost {
            Method::Uniformization
        } else {
            Method::Doubling
        }
    }

    fn uniformize(&self, t: f64, q: f64, rewards: &[&RewardVector], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        let qt = q * t;
        // the integral sums P(N > k) over k; its truncation error is bounded
        // by tol * t once the per-tail tolerance is scaled by min(1, qt)
        let weights = poisson_weights(qt, tol * qt.min(1.0) / 2.0)?;
        let mut tails = vec![0.0; weights.weights.len()];
        let mut acc = 0.0;
        for i in (0..weights.weights.len()).rev() {
            tails[i] = acc;
            acc += weights.weights[i];
        }

        let stay: Vec<f64> = self.exit_rates().iter().map(|e| 1.0 - e / q).collect();
        let scaled: Vec<f64> = self.rates.iter().map(|r| r / q).collect();

        let mut v = self.initial().as_slice().to_vec();
        let mut next = vec![0.0; n];
        let mut pi = vec![0.0; n];
        let mut occ = vec![0.0; n];
        for k in 0..=weights.right {
            let (w, tail) = if k >= weights.left {
                (weights.weights[k - weights.left], tails[k - weights.left])
            } else {
                (0.0, 1.0)
            };
            for i in 0..n {
                pi[i] += w * v[i];
                occ[i] += tail * v[i];
            }
            if k == weights.right {
                break;
            }
            for j in 0..n {
                next[j] = v[j] * stay[j];
            }
            for i in 0..n {
                let vi = v[i];
                if vi == 0.0 {
                    continue;
                }
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    next[self.cols[p]] += vi * scaled[p];
                }
            }
            // far tails decay into subnormals, which are very slow to
            // multiply; the mass dropped here is below n * steps * FLUSH
            for x in next.iter_mut() {
                if *x < FLUSH {
                    *x = 0.0;
                }
            }
            std::mem::swap(&mut v, &mut next);
        }
        let acc = rewards
            .iter()
            .map(|r| {
                let terms: Vec<f64> = occ.iter().zip(r.as_slice()).map(|(o, x)| o * x).collect();
                pairwise_sum(&terms) / q
            })
            .collect();
        Ok((pi, acc))
    }

    fn doubling(&self, t: f64, q: f64, rewards: &[&RewardVector]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let m = rewards.len();
        let qt = q * t;
        let halvings = (qt / STEP_THETA).log2().ceil().max(0.0) as i32;
        let theta = qt / 2f64.powi(halvings);

        // work in component order so squarings can skip structural zeros
        let order = BlockOrder::of(self);
        let mut pos = vec![0usize; n];
        for (new, &old) in order.perm.iter().enumerate() {
            pos[old] = new;
        }
        let mut u_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for old in 0..n {
            let i = pos[old];
            u_rows[i].push((i, 1.0 - self.exit_rates()[old] / q));
            for (j, r) in self.transitions_from(old) {
                u_rows[i].push((pos[j], r / q));
            }
        }
        let mut rmat = Array2::<f64>::zeros((n, m));
        for (c, r) in rewards.iter().enumerate() {
            for old in 0..n {
                rmat[[pos[old], c]] = r.as_slice()[old];
            }
        }

        // one short step by uniformization; theta <= 1/8 keeps this to a
        // handful of terms
        let weights = poisson_weights(theta, STEP_TOL).expect("theta is finite and nonnegative");
        let mut tail = 1.0;
        let mut power = Array2::<f64>::eye(n);
        let mut p = Array2::<f64>::zeros((n, n));
        let mut ur = rmat;
        let mut j = Array2::<f64>::zeros((n, m));
        for k in 0..=weights.right {
            let w = weights.weight(k);
            tail -= w;
            p.scaled_add(w, &power);
            j.scaled_add(tail.max(0.0) / q, &ur);
            if k < weights.right {
                power = right_multiply_sparse(&power, &u_rows);
                ur = left_multiply_sparse(&u_rows, &ur);
            }
        }
        normalize_rows(&mut p, 1.0);

        for _ in 0..halvings {
            if m > 0 {
                let pj = p.dot(&j);
                j += &pj;
                j.mapv_inplace(|x| if x < FLUSH { 0.0 } else { x });
            }
            p = order.product(&p, &p);
            normalize_rows(&mut p, 1.0);
        }

        let mut pi0 = Array1::<f64>::zeros(n);
        for old in 0..n {
            pi0[pos[old]] = self.initial()[old];
        }
        let pi_perm = pi0.dot(&p);
        let pi = (0..n).map(|old| pi_perm[pos[old]]).collect();
        let acc = if m == 0 { Vec::new() } else { pi0.dot(&j).to_vec() };
        (pi, acc)
    }
}

/// `a * U` with `U` given by sparse rows.
fn right_multiply_sparse(a: &Array2<f64>, u_rows: &[Vec<(usize, f64)>]) -> Array2<f64> {
    let (rows, n) = a.dim();
    let mut out = Array2::<f64>::zeros((rows, n));
    for r in 0..rows {
        for i in 0..n {
            let x = a[[r, i]];
            if x == 0.0 {
                continue;
            }
            for &(j, u) in &u_rows[i] {
                out[[r, j]] += x * u;
            }
        }
    }
    out
}

/// `U * b` with `U` given by sparse rows.
fn left_multiply_sparse(u_rows: &[Vec<(usize, f64)>], b: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(b.dim());
    for (i, row) in u_rows.iter().enumerate() {
        for &(j, u) in row {
            let src = b.row(j);
            out.row_mut(i).scaled_add(u, &src);
        }
    }
    out
}

fn normalize_rows(p: &mut Array2<f64>, target: f64) {
    for mut row in p.axis_iter_mut(Axis(0)) {
        for x in row.iter_mut() {
            // negatives are rounding noise; subnormals only slow the products
            if *x < FLUSH {
                *x = 0.0;
            }
        }
        let sum = pairwise_sum(row.as_slice().expect("rows of an owned matrix are contiguous"));
        if sum > 0.0 {
            row.mapv_inplace(|x| x * target / sum);
        }
    }
}
