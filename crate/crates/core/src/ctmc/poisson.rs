//! Truncated Poisson probabilities for uniformization.
//!
//! The mode weight is evaluated in log space (Stirling series for the
//! factorial) and the remaining weights follow from the ratio recurrences
//! `w(k+1) = w(k) qt/(k+1)` and `w(k-1) = w(k) k/qt`, walking outward until a
//! geometric bound on each discarded tail drops below `tol / 2`.

use crate::{Error, Result};

/// Poisson(qt) probabilities for `k` in `left..=right`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub left: usize,
    pub right: usize,
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.left || k > self.right {
            0.0
        } else {
            self.weights[k - self.left]
        }
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `(k, weight)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.left + i, w))
    }
}

pub fn poisson_weights(qt: f64, tol: f64) -> Result<PoissonWeights> {
    if !qt.is_finite() || qt < 0.0 {
        return Err(Error::InvalidArgument(format!("Poisson mean must be finite and >= 0, got {qt}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("truncation tolerance must be in (0, 1), got {tol}")));
    }
    if qt == 0.0 {
        return Ok(PoissonWeights { left: 0, right: 0, weights: vec![1.0] });
    }

    let half = tol / 2.0;
    let mode = qt.floor() as usize;
    let w_mode = ln_pmf_at(mode, qt).exp();

    let mut right_part = vec![w_mode];
    let mut k = mode;
    let mut w = w_mode;
    loop {
        let r = qt / (k as f64 + 2.0);
        // sum_{j>k} w_j <= w_{k+1} / (1 - r) once the ratio is below one
        let next = w * qt / (k as f64 + 1.0);
        if r < 1.0 && next / (1.0 - r) <= half {
            break;
        }
        if next == 0.0 {
            break;
        }
        k += 1;
        w = next;
        right_part.push(w);
    }
    let right = k;

    let mut left_part = Vec::new();
    let mut k = mode;
    let mut w = w_mode;
    while k > 0 {
        let r = k as f64 / qt;
        let prev = w * r;
        let ratio = (k as f64 - 1.0) / qt;
        if ratio < 1.0 && prev / (1.0 - ratio) <= half {
            break;
        }
        if prev == 0.0 {
            break;
        }
        k -= 1;
        w = prev;
        left_part.push(w);
    }
    let left = k;

    left_part.reverse();
    left_part.extend(right_part);
    let mut weights = left_part;
    let total = pairwise_sum(&weights);
    if total > 1.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    Ok(PoissonWeights { left, right, weights })
}

/// ln P(N = k) for N ~ Poisson(qt), accurate at large `k` and `qt`.
fn ln_pmf_at(k: usize, qt: f64) -> f64 {
    if k < 16 {
        let mut ln_fact = 0.0;
        for i in 2..=k {
            ln_fact += (i as f64).ln();
        }
        return k as f64 * qt.ln() - qt - ln_fact;
    }
    let m = k as f64;
    // k ln(qt/k) - (qt - k), written with ln_1p to avoid cancellation
    let x = (qt - m) / m;
    let core = m * (x.ln_1p() - x);
    let inv = 1.0 / m;
    let inv2 = inv * inv;
    let stirling = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    core - 0.5 * (2.0 * std::f64::consts::PI * m).ln() - stirling
}

/// Pairwise summation.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of e^{-qt} qt^k / k!.
    fn direct_pmf(qt: f64, k: usize) -> f64 {
        let mut p = (-qt).exp();
        for i in 1..=k {
            p *= qt / i as f64;
        }
        p
    }

    #[test]
    fn zero_mean_is_a_point_mass() {
        let w = poisson_weights(0.0, 1e-10).unwrap();
        assert_eq!(w, PoissonWeights { left: 0, right: 0, weights: vec![1.0] });
    }

    #[test]
    fn matches_direct_pmf_at_qt_2() {
        let w = poisson_weights(2.0, 1e-10).unwrap();
        assert_eq!(w.left, 0);
        for (k, wk) in w.iter() {
            assert!((wk - direct_pmf(2.0, k)).abs() <= 1e-12, "k={k}");
        }
        assert!(w.total() >= 1.0 - 1e-10 && w.total() <= 1.0);
    }

    #[test]
    fn stirling_branch_matches_direct_pmf() {
        for &qt in &[20.0, 57.3, 300.0] {
            let w = poisson_weights(qt, 1e-14).unwrap();
            for (k, wk) in w.iter() {
                let d = direct_pmf(qt, k);
                assert!((wk - d).abs() <= 1e-12 * d.max(1e-300) + 1e-300, "qt={qt} k={k}");
            }
        }
    }

    #[test]
    fn large_means_stay_normalized() {
        for &qt in &[1e3, 1e5, 1e6, 1e7] {
            let w = poisson_weights(qt, 1e-10).unwrap();
            let t = w.total();
            assert!((1.0 - 1e-10..=1.0).contains(&t), "qt={qt} total={t}");
            assert!(w.left < qt as usize && w.right > qt as usize);
            // window is a handful of standard deviations wide
            assert!(((w.right - w.left) as f64) < 20.0 * qt.sqrt() + 50.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(poisson_weights(-1.0, 1e-10).is_err());
        assert!(poisson_weights(f64::NAN, 1e-10).is_err());
        assert!(poisson_weights(1.0, 0.0).is_err());
    }
}
