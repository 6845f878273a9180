//! Per-node integrity models.
//!
//! A node is `Correct`, `Corrupt` (silently serving wrong results),
//! `Crash`ed, or retrying a transaction after a detected fault (`Retry`,
//! ft_tx only). Transient faults leave `Correct` at the injected rate split
//! by the per-variant outcome probabilities; masked faults are dropped.

use std::fmt;

use crate::ctmc::{Ctmc, RewardVector, TransientOptions, DEFAULT_TOL};
use crate::units::{per_year, HOUR};
use crate::{Deployment, Error, NodeVariant, Result};

/// Outcome probabilities of a single transient fault.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientSplit {
    pub p_corrupt: f64,
    pub p_crash: f64,
    pub p_retry: f64,
}

impl TransientSplit {
    /// Fault-injection outcomes per node variant.
    pub fn default_for(variant: NodeVariant) -> Self {
        match variant {
            NodeVariant::Native => TransientSplit { p_corrupt: 0.2619, p_crash: 0.1249, p_retry: 0.0 },
            NodeVariant::FtIlr => TransientSplit { p_corrupt: 0.008, p_crash: 0.75, p_retry: 0.0 },
            NodeVariant::FtTx => TransientSplit { p_corrupt: 0.0117, p_crash: 0.0772, p_retry: 0.6699 },
        }
    }

    pub fn masked(&self) -> f64 {
        1.0 - self.p_corrupt - self.p_crash - self.p_retry
    }

    pub fn validate(&self, variant: NodeVariant) -> Result<()> {
        for (name, p) in [("p_corrupt", self.p_corrupt), ("p_crash", self.p_crash), ("p_retry", self.p_retry)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidRates(format!("{name} = {p} is not a probability")));
            }
        }
        if self.masked() < -1e-12 {
            return Err(Error::InvalidRates(format!(
                "outcome probabilities sum to {} > 1",
                self.p_corrupt + self.p_crash + self.p_retry
            )));
        }
        if self.p_retry > 0.0 && variant != NodeVariant::FtTx {
            return Err(Error::InvalidRates(format!("p_retry must be 0 for {variant}")));
        }
        Ok(())
    }
}

/// Recovery parameters in human units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryTimes {
    /// Replacement time of a crashed node in seconds; `None` leaves `Crash`
    /// absorbing.
    pub crash_recovery_s: Option<f64>,
    pub sdc_recovery_h: f64,
    pub retry_tx_us: f64,
    /// Rate of a retry ending in a crash, per second. Off by default.
    pub retry_crash: f64,
}

impl Default for RecoveryTimes {
    fn default() -> Self {
        RecoveryTimes { crash_recovery_s: Some(15.0), sdc_recovery_h: 6.0, retry_tx_us: 2.5, retry_crash: 0.0 }
    }
}

impl RecoveryTimes {
    /// Defaults for a deployment. On premises a crashed node only comes back
    /// when a standby pool exists.
    pub fn for_deployment(deployment: Deployment, pool: bool) -> Self {
        let mut r = RecoveryTimes::default();
        if deployment == Deployment::OnPremises && !pool {
            r.crash_recovery_s = None;
        }
        r
    }
}

/// Transition rates of the integrity model, all per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrityRates {
    pub variant: NodeVariant,
    pub sdc: f64,
    pub crash: f64,
    pub detected: f64,
    pub retry_ok: f64,
    pub retry_crash: f64,
    pub sdc_recovery: f64,
    pub crash_recovery: Option<f64>,
}

impl IntegrityRates {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sdc", self.sdc),
            ("crash", self.crash),
            ("detected", self.detected),
            ("retry_ok", self.retry_ok),
            ("retry_crash", self.retry_crash),
            ("sdc_recovery", self.sdc_recovery),
            ("crash_recovery", self.crash_recovery.unwrap_or(0.0)),
        ];
        for (name, r) in fields {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidRates(format!("{name} rate {r}")));
            }
        }
        if self.detected > 0.0 && self.variant != NodeVariant::FtTx {
            return Err(Error::InvalidRates(format!("detected faults only apply to ft_tx, not {}", self.variant)));
        }
        Ok(())
    }
}

pub fn derive_integrity_rates(
    variant: NodeVariant,
    transient_per_year: f64,
    split: &TransientSplit,
    recovery: &RecoveryTimes,
) -> Result<IntegrityRates> {
    if !(transient_per_year.is_finite() && transient_per_year >= 0.0) {
        return Err(Error::InvalidRates(format!("transient fault rate {transient_per_year} per year")));
    }
    split.validate(variant)?;
    let inv = |x: f64, what: &str| {
        if x.is_finite() && x > 0.0 {
            Ok(1.0 / x)
        } else {
            Err(Error::InvalidRates(format!("{what} time {x}")))
        }
    };
    let rate = per_year(transient_per_year);
    let rates = IntegrityRates {
        variant,
        sdc: rate * split.p_corrupt,
        crash: rate * split.p_crash,
        detected: rate * split.p_retry,
        retry_ok: inv(recovery.retry_tx_us * 1e-6, "retry transaction")?,
        retry_crash: recovery.retry_crash,
        sdc_recovery: inv(recovery.sdc_recovery_h * HOUR, "sdc recovery")?,
        crash_recovery: recovery.crash_recovery_s.map(|s| inv(s, "crash recovery")).transpose()?,
    };
    rates.validate()?;
    Ok(rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeState {
    Correct,
    Corrupt,
    Crash,
    Retry,
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeState::Correct => "Correct",
            NodeState::Corrupt => "Corrupt",
            NodeState::Crash => "Crash",
            NodeState::Retry => "Retry",
        })
    }
}

/// Zero-rate edges are left out, so a disabled retry failure or an absent
/// crash recovery simply has no arrow.
pub fn build_integrity_model(rates: &IntegrityRates, deployment: Deployment) -> Result<Ctmc<NodeState>> {
    use NodeState::*;
    rates.validate()?;
    if deployment == Deployment::Cloud && rates.crash_recovery.is_none() {
        return Err(Error::InvalidRates("cloud deployments replace crashed nodes; crash recovery is required".into()));
    }
    let mut states = vec![Correct, Corrupt, Crash];
    if rates.detected > 0.0 {
        states.push(Retry);
    }
    let mut edges = vec![
        (Correct, Corrupt, rates.sdc),
        (Correct, Crash, rates.crash),
        (Correct, Retry, rates.detected),
        (Retry, Correct, rates.retry_ok),
        (Retry, Crash, rates.retry_crash),
        (Crash, Correct, rates.crash_recovery.unwrap_or(0.0)),
        (Corrupt, Correct, rates.sdc_recovery),
    ];
    edges.retain(|&(from, to, r)| r > 0.0 && states.contains(&from) && states.contains(&to));
    Ctmc::with_initial_state(states, edges, &Correct)
}

/// Fractions of the horizon; `down` merges `Crash` and `Retry`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrityReport {
    pub correct: f64,
    pub corrupt: f64,
    pub down: f64,
}

pub fn integrity_breakdown(model: &Ctmc<NodeState>, horizon: f64) -> Result<IntegrityReport> {
    integrity_breakdown_with_tol(model, horizon, DEFAULT_TOL)
}

pub fn integrity_breakdown_with_tol(model: &Ctmc<NodeState>, horizon: f64, tol: f64) -> Result<IntegrityReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    let class = |want: &[NodeState]| -> Result<RewardVector> {
        model.reward_where(|s| if want.contains(s) { 1.0 } else { 0.0 })
    };
    let correct = class(&[NodeState::Correct])?;
    let corrupt = class(&[NodeState::Corrupt])?;
    let down = class(&[NodeState::Crash, NodeState::Retry])?;
    let occ = model.integrate(horizon, &[&correct, &corrupt, &down], TransientOptions::with_tol(tol))?;
    let frac = |x: f64| (x / horizon).clamp(0.0, 1.0);
    Ok(IntegrityReport { correct: frac(occ.rewards[0]), corrupt: frac(occ.rewards[1]), down: frac(occ.rewards[2]) })
}

/// Default-parameter breakdown for a variant at a transient fault rate.
pub fn evaluate(
    variant: NodeVariant,
    deployment: Deployment,
    transient_per_year: f64,
    horizon: f64,
) -> Result<IntegrityReport> {
    let rates = derive_integrity_rates(
        variant,
        transient_per_year,
        &TransientSplit::default_for(variant),
        &RecoveryTimes::for_deployment(deployment, false),
    )?;
    integrity_breakdown(&build_integrity_model(&rates, deployment)?, horizon)
}
