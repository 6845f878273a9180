//! Cluster availability models.
//!
//! Passive failover (PF) keeps `num` active nodes and a pool of cold standby
//! nodes that cannot fail while powered off. Active route anywhere (ARA) runs
//! `num + op` active nodes and counts the cluster as available while at least
//! `num` of them are up. Crash rates scale with the number of active nodes;
//! failover and pool repair scale with the number of pending replacements
//! and broken nodes unless [`RecoveryPolicy::SingleFacility`] is selected.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::ctmc::{Ctmc, RewardVector, DEFAULT_TOL};
use crate::units::{per_year, HOUR, YEAR};
use crate::{Deployment, Error, Result, Technique};

/// Upper bound reported by [`nines`] for a perfect availability.
pub const NINES_CAP: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterSpec {
    pub technique: Technique,
    pub deployment: Deployment,
    /// Base node count needed for throughput.
    pub num: u32,
    /// Extra active nodes (ARA only).
    pub op: u32,
    /// Cold standby pool (PF on premises only; the cloud pool is unbounded).
    pub pool: u32,
}

impl ClusterSpec {
    pub fn pf(deployment: Deployment, num: u32, pool: u32) -> Self {
        ClusterSpec { technique: Technique::PassiveFailover, deployment, num, op: 0, pool }
    }

    pub fn ara(deployment: Deployment, num: u32, op: u32) -> Self {
        ClusterSpec { technique: Technique::ActiveRouteAnywhere, deployment, num, op, pool: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num == 0 {
            return Err(Error::InvalidSpec("num must be at least 1".into()));
        }
        if self.technique == Technique::PassiveFailover && self.op != 0 {
            return Err(Error::InvalidSpec("op must be 0 for passive failover".into()));
        }
        Ok(())
    }

    /// Same spec with `extra` over-provisioning in whichever dimension the
    /// technique uses.
    pub fn with_extra(&self, extra: u32) -> Self {
        match self.technique {
            Technique::PassiveFailover => ClusterSpec { pool: extra, ..*self },
            Technique::ActiveRouteAnywhere => ClusterSpec { op: extra, ..*self },
        }
    }

    pub fn extra(&self) -> u32 {
        match self.technique {
            Technique::PassiveFailover => self.pool,
            Technique::ActiveRouteAnywhere => self.op,
        }
    }
}

/// How concurrent failovers and repairs proceed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecoveryPolicy {
    /// Every pending failover and every broken node progresses at once.
    #[default]
    Parallel,
    /// One failover and one repair at a time.
    SingleFacility,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvailRates {
    /// Crashes per node per year.
    pub hw_crash_per_year: f64,
    /// Failover / automatic replacement rate, per second.
    pub crash_recovery: f64,
    /// Repair rate of broken nodes back into the pool, per second.
    pub pool_repair: Option<f64>,
    pub policy: RecoveryPolicy,
}

impl AvailRates {
    /// Rates from a crash frequency and a mean failover time in seconds.
    pub fn new(hw_crash_per_year: f64, failover_seconds: f64) -> Self {
        AvailRates {
            hw_crash_per_year,
            crash_recovery: 1.0 / failover_seconds,
            pool_repair: None,
            policy: RecoveryPolicy::Parallel,
        }
    }

    pub fn with_pool_repair_hours(mut self, hours: f64) -> Self {
        self.pool_repair = Some(1.0 / (hours * HOUR));
        self
    }

    pub fn with_policy(mut self, policy: RecoveryPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Per-node crash rate per second.
    pub fn hw_crash(&self) -> f64 {
        per_year(self.hw_crash_per_year)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.hw_crash_per_year) {
            return Err(Error::InvalidRates(format!("hw crash rate {} per year", self.hw_crash_per_year)));
        }
        if !ok(self.crash_recovery) {
            return Err(Error::InvalidRates(format!("crash recovery rate {}", self.crash_recovery)));
        }
        if let Some(r) = self.pool_repair {
            if !ok(r) {
                return Err(Error::InvalidRates(format!("pool repair rate {r}")));
            }
        }
        Ok(())
    }
}

/// State label: active nodes up, and standby nodes available in the pool
/// (`None` when the pool is unbounded or unused).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterState {
    pub up: u32,
    pub pool: Option<u32>,
}

impl fmt::Display for ClusterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pool {
            Some(p) => write!(f, "up={} pool={}", self.up, p),
            None => write!(f, "up={}", self.up),
        }
    }
}

fn scaled(policy: RecoveryPolicy, count: u32, rate: f64) -> f64 {
    match policy {
        RecoveryPolicy::Parallel => count as f64 * rate,
        RecoveryPolicy::SingleFacility => rate,
    }
}

pub fn build_pf_model(spec: &ClusterSpec, rates: &AvailRates) -> Result<Ctmc<ClusterState>> {
    spec.validate()?;
    rates.validate()?;
    if spec.technique != Technique::PassiveFailover {
        return Err(Error::InvalidSpec("expected a passive failover spec".into()));
    }
    let num = spec.num;
    let lambda = rates.hw_crash();
    let rho = rates.crash_recovery;

    if spec.deployment == Deployment::Cloud {
        let states: Vec<ClusterState> = (0..=num).rev().map(|up| ClusterState { up, pool: None }).collect();
        let mut tr = Vec::new();
        for up in 0..=num {
            let here = ClusterState { up, pool: None };
            if up > 0 {
                tr.push((here, ClusterState { up: up - 1, pool: None }, up as f64 * lambda));
            }
            if up < num {
                tr.push((here, ClusterState { up: up + 1, pool: None }, scaled(rates.policy, num - up, rho)));
            }
        }
        return Ctmc::with_initial_state(states, tr, &ClusterState { up: num, pool: None });
    }

    // on premises: breadth-first over reachable (up, pool) pairs
    let total = num + spec.pool;
    let start = ClusterState { up: num, pool: Some(spec.pool) };
    let mut seen: HashMap<ClusterState, ()> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([start]);
    let mut tr = Vec::new();
    seen.insert(start, ());
    while let Some(st) = queue.pop_front() {
        order.push(st);
        let up = st.up;
        let pool = st.pool.expect("on-premises states track the pool");
        let broken = total - up - pool;
        let mut out = Vec::new();
        if up > 0 {
            out.push((ClusterState { up: up - 1, pool: Some(pool) }, up as f64 * lambda));
        }
        let pending = (num - up).min(pool);
        if pending > 0 {
            out.push((ClusterState { up: up + 1, pool: Some(pool - 1) }, scaled(rates.policy, pending, rho)));
        }
        if let Some(repair) = rates.pool_repair {
            if broken > 0 {
                out.push((ClusterState { up, pool: Some(pool + 1) }, scaled(rates.policy, broken, repair)));
            }
        }
        for (next, rate) in out {
            if seen.insert(next, ()).is_none() {
                queue.push_back(next);
            }
            tr.push((st, next, rate));
        }
    }
    Ctmc::with_initial_state(order, tr, &start)
}

pub fn build_ara_model(spec: &ClusterSpec, rates: &AvailRates) -> Result<Ctmc<ClusterState>> {
    spec.validate()?;
    rates.validate()?;
    if spec.technique != Technique::ActiveRouteAnywhere {
        return Err(Error::InvalidSpec("expected an active route anywhere spec".into()));
    }
    let top = spec.num + spec.op;
    let lambda = rates.hw_crash();
    let states: Vec<ClusterState> = (0..=top).rev().map(|up| ClusterState { up, pool: None }).collect();
    let mut tr = Vec::new();
    for up in 1..=top {
        tr.push((ClusterState { up, pool: None }, ClusterState { up: up - 1, pool: None }, up as f64 * lambda));
    }
    if spec.deployment == Deployment::Cloud {
        for up in 0..top {
            let rate = scaled(rates.policy, top - up, rates.crash_recovery);
            tr.push((ClusterState { up, pool: None }, ClusterState { up: up + 1, pool: None }, rate));
        }
    }
    Ctmc::with_initial_state(states, tr, &ClusterState { up: top, pool: None })
}

pub fn build_model(spec: &ClusterSpec, rates: &AvailRates) -> Result<Ctmc<ClusterState>> {
    match spec.technique {
        Technique::PassiveFailover => build_pf_model(spec, rates),
        Technique::ActiveRouteAnywhere => build_ara_model(spec, rates),
    }
}

/// Reward marking the states in which the cluster delivers full
/// throughput.
pub fn available_reward(model: &Ctmc<ClusterState>, spec: &ClusterSpec) -> RewardVector {
    let num = spec.num;
    let ok = |s: &ClusterState| match spec.technique {
        Technique::PassiveFailover => s.up == num,
        Technique::ActiveRouteAnywhere => s.up >= num,
    };
    RewardVector::new(model.states().iter().map(|s| if ok(s) { 1.0 } else { 0.0 }).collect())
        .expect("indicator rewards are valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvailabilityReport {
    /// Fraction of the horizon with full throughput.
    pub availability: f64,
    pub downtime_hours: f64,
    pub nines: f64,
}

pub fn availability(model: &Ctmc<ClusterState>, spec: &ClusterSpec, horizon: f64) -> Result<AvailabilityReport> {
    availability_with_tol(model, spec, horizon, DEFAULT_TOL)
}

pub fn availability_with_tol(
    model: &Ctmc<ClusterState>,
    spec: &ClusterSpec,
    horizon: f64,
    tol: f64,
) -> Result<AvailabilityReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    let reward = available_reward(model, spec);
    let up_time = model.cumulative_occupancy(&reward, horizon, tol)?;
    let a = (up_time / horizon).clamp(0.0, 1.0);
    let (nines, downtime_hours) = nines(a, horizon)?;
    Ok(AvailabilityReport { availability: a, downtime_hours, nines })
}

/// Builds the model for `spec` and evaluates it over `horizon`.
pub fn evaluate(spec: &ClusterSpec, rates: &AvailRates, horizon: f64) -> Result<AvailabilityReport> {
    let model = build_model(spec, rates)?;
    availability(&model, spec, horizon)
}

/// `(nines, downtime in hours)` for an availability over `horizon` seconds.
pub fn nines(availability: f64, horizon: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&availability) {
        return Err(Error::InvalidArgument(format!("availability must be in [0, 1], got {availability}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    let unavailability = 1.0 - availability;
    let n = if unavailability <= 0.0 { NINES_CAP } else { (-unavailability.log10()).min(NINES_CAP) };
    Ok((n, unavailability * horizon / HOUR))
}

/// Availability target for a nines level.
pub fn target_availability(nines: f64) -> f64 {
    1.0 - 10f64.powf(-nines)
}

/// Horizon-independent helper for reports over one year.
pub fn yearly(availability: f64) -> Result<(f64, f64)> {
    nines(availability, YEAR)
}
