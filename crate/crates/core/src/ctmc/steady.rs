//! Long-run distribution of irreducible chains.
//!
//! Chains up to [`DENSE_LIMIT`] states are solved with the
//! Grassmann-Taksar-Heyman state reduction, which uses no subtractions and
//! stays accurate when rates span many orders of magnitude. Larger chains use
//! Gauss-Seidel sweeps with a residual-based stop.

use super::{Ctmc, Distribution};
use crate::{Error, Result};

pub const DEFAULT_STEADY_TOL: f64 = 1e-12;
const DENSE_LIMIT: usize = 2500;
const MAX_SWEEPS: usize = 200_000;

impl<S> Ctmc<S> {
    /// Whether every state reaches every other state.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        if n == 1 {
            return true;
        }
        let forward = reach(n, 0, |i| self.transitions_from(i).map(|(j, _)| j).collect());
        if forward.iter().any(|&r| !r) {
            return false;
        }
        let incoming = self.transpose();
        let backward = reach(n, 0, |i| incoming[i].iter().map(|&(j, _)| j).collect());
        backward.iter().all(|&r| r)
    }

    /// Solves `pi Q = 0`, `sum pi = 1`. The residual `max_j |(pi Q)_j|`,
    /// relative to the largest exit rate, must end up at or below `tol`.
    pub fn steady_state(&self, tol: f64) -> Result<Distribution> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {tol}")));
        }
        let n = self.len();
        if n == 1 {
            return Ok(Distribution::from_solver(vec![1.0]));
        }
        if !self.is_irreducible() {
            let absorbing = (0..n).filter(|&i| self.is_absorbing(i)).count();
            let why = if absorbing > 0 {
                format!("{absorbing} absorbing state(s)")
            } else {
                "state space is reducible".to_string()
            };
            return Err(Error::NotErgodic(why));
        }
        let pi = if n <= DENSE_LIMIT { self.gth() } else { self.gauss_seidel(tol) };
        let residual = self.steady_residual(&pi);
        if residual > tol {
            return Err(Error::NoConvergence { residual, tol });
        }
        Ok(Distribution::from_solver(pi))
    }

    /// `max_j |(pi Q)_j| / max exit rate`.
    pub fn steady_residual(&self, pi: &[f64]) -> f64 {
        let n = self.len();
        let mut flow = vec![0.0; n];
        for i in 0..n {
            flow[i] -= pi[i] * self.exit_rates()[i];
            for (j, r) in self.transitions_from(i) {
                flow[j] += pi[i] * r;
            }
        }
        let scale = self.max_exit_rate();
        if scale == 0.0 {
            return 0.0;
        }
        flow.iter().fold(0.0f64, |m, f| m.max(f.abs())) / scale
    }

    fn gth(&self) -> Vec<f64> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, r) in self.transitions_from(i) {
                row[j] = r;
            }
        }
        for k in (1..n).rev() {
            let s: f64 = a[k][..k].iter().sum();
            // s > 0 because the chain is irreducible
            for i in 0..k {
                a[i][k] /= s;
            }
            for i in 0..k {
                let aik = a[i][k];
                if aik == 0.0 {
                    continue;
                }
                let (top, bottom) = a.split_at_mut(k);
                let row_i = &mut top[i];
                let row_k = &bottom[0];
                for j in 0..k {
                    if j != i {
                        row_i[j] += aik * row_k[j];
                    }
                }
            }
        }
        let mut pi = vec![0.0; n];
        pi[0] = 1.0;
        for k in 1..n {
            pi[k] = (0..k).map(|i| pi[i] * a[i][k]).sum();
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        pi
    }

    fn gauss_seidel(&self, tol: f64) -> Vec<f64> {
        let n = self.len();
        let incoming = self.transpose();
        let mut pi = vec![1.0 / n as f64; n];
        for sweep in 0..MAX_SWEEPS {
            for j in 0..n {
                let inflow: f64 = incoming[j].iter().map(|&(i, r)| pi[i] * r).sum();
                pi[j] = inflow / self.exit_rates()[j];
            }
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= total);
            if sweep % 16 == 15 && self.steady_residual(&pi) <= tol {
                break;
            }
        }
        pi
    }
}

fn reach(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(i) = stack.pop() {
        for j in next(i) {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}
