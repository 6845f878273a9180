//! Capacity planning.
//!
//! The base node count covers the throughput target; over-provisioning
//! (extra active nodes for ARA, standby pool for PF) is then grown until the
//! availability target holds. Availability is monotone in the extra count,
//! so the search doubles until it passes and bisects back.

use rayon::prelude::*;

use crate::avail::{self, target_availability, AvailRates, AvailabilityReport, ClusterSpec, RecoveryPolicy};
use crate::integrity::{self, IntegrityReport};
use crate::perf::PerfProfile;
use crate::units::{MONTH, YEAR};
use crate::{Deployment, Error, NodeVariant, Result, Technique};

pub const DEFAULT_SEARCH_CAP: u32 = 1000;

/// Slack for ratios that land exactly on an integer (10 / 1.0).
const BASE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanRequest {
    /// Target throughput in multiples of native single-node throughput.
    pub sert_multiplier: f64,
    pub variant: NodeVariant,
    /// Throughput of `variant` relative to native.
    pub throughput_ratio: f64,
    pub deployment: Deployment,
    pub technique: Technique,
    pub rates: AvailRates,
    pub target_nines: f64,
    pub horizon: f64,
    pub search_cap: u32,
}

impl PlanRequest {
    /// Ten times native throughput, three nines over one year, reported
    /// throughput ratios.
    pub fn new(variant: NodeVariant, deployment: Deployment, technique: Technique, rates: AvailRates) -> Self {
        PlanRequest {
            sert_multiplier: 10.0,
            variant,
            throughput_ratio: PerfProfile::reported().ratio(variant).expect("every variant has a reported ratio"),
            deployment,
            technique,
            rates,
            target_nines: 3.0,
            horizon: YEAR,
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_nines.is_finite() && self.target_nines > 0.0) {
            return Err(Error::InvalidArgument(format!("target nines must be > 0, got {}", self.target_nines)));
        }
        if self.search_cap < 1 {
            return Err(Error::InvalidArgument("search cap must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be > 0, got {}", self.horizon)));
        }
        self.rates.validate()
    }

    fn spec(&self, base: u32, extra: u32) -> ClusterSpec {
        let spec = match self.technique {
            Technique::PassiveFailover => ClusterSpec::pf(self.deployment, base, 0),
            Technique::ActiveRouteAnywhere => ClusterSpec::ara(self.deployment, base, 0),
        };
        spec.with_extra(extra)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanResult {
    pub variant: NodeVariant,
    pub base: u32,
    /// Extra active nodes (ARA) or pool size (PF). When infeasible, the
    /// largest count tried.
    pub extra: u32,
    /// Availability at `extra`. For an on-premises pool ruled out by the
    /// unlimited-pool bound, that bound.
    pub availability: f64,
    pub nines: f64,
    /// Number of model solves.
    pub evaluations: u32,
    pub feasible: bool,
}

impl PlanResult {
    pub fn total(&self) -> u32 {
        self.base + self.extra
    }
}

pub fn required_base_nodes(sert_multiplier: f64, ratio: f64) -> Result<u32> {
    if !(sert_multiplier.is_finite() && sert_multiplier > 0.0) {
        return Err(Error::InvalidArgument(format!("throughput target must be > 0, got {sert_multiplier}")));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidArgument(format!("throughput ratio must be > 0, got {ratio}")));
    }
    let n = (sert_multiplier / ratio - BASE_EPS).ceil().max(1.0);
    if n > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!("{n} nodes is out of range")));
    }
    Ok(n as u32)
}

/// Outcome of [`minimal_extra`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Search {
    pub extra: u32,
    pub availability: f64,
    pub evaluations: u32,
    pub feasible: bool,
}

/// Smallest `x` in `0..=cap` with `eval(x) >= target`, assuming `eval` is
/// non-decreasing. Doubles an upper bracket, then bisects.
pub fn minimal_extra<F>(cap: u32, target: f64, mut eval: F) -> Result<Search>
where
    F: FnMut(u32) -> Result<f64>,
{
    let evaluations = std::cell::Cell::new(0);
    let mut probe = |x: u32| {
        evaluations.set(evaluations.get() + 1);
        eval(x)
    };
    let a0 = probe(0)?;
    if a0 >= target {
        return Ok(Search { extra: 0, availability: a0, evaluations: 1, feasible: true });
    }
    let (mut lo, mut hi) = (0u32, 1u32.min(cap));
    let mut a_hi = if hi == 0 { a0 } else { probe(hi)? };
    while a_hi < target {
        if hi >= cap {
            return Ok(Search { extra: hi, availability: a_hi, evaluations: evaluations.get(), feasible: false });
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(cap);
        a_hi = probe(hi)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let a = probe(mid)?;
        if a >= target {
            hi = mid;
            a_hi = a;
        } else {
            lo = mid;
        }
    }
    Ok(Search { extra: hi, availability: a_hi, evaluations: evaluations.get(), feasible: true })
}

fn solve(req: &PlanRequest, base: u32, extra: u32) -> Result<f64> {
    Ok(avail::evaluate(&req.spec(base, extra), &req.rates, req.horizon)?.availability)
}

fn finish(req: &PlanRequest, base: u32, s: Search) -> Result<PlanResult> {
    let (nines, _) = avail::nines(s.availability, req.horizon)?;
    Ok(PlanResult {
        variant: req.variant,
        base,
        extra: s.extra,
        availability: s.availability,
        nines,
        evaluations: s.evaluations,
        feasible: s.feasible,
    })
}

pub fn plan_capacity(req: &PlanRequest) -> Result<PlanResult> {
    req.validate()?;
    let base = required_base_nodes(req.sert_multiplier, req.throughput_ratio)?;
    let target = target_availability(req.target_nines);

    // A finite pool never beats an unlimited one with the same failover
    // time, so if the cloud chain misses the target no pool size helps.
    if req.technique == Technique::PassiveFailover && req.deployment == Deployment::OnPremises {
        let bound = avail::evaluate(&ClusterSpec::pf(Deployment::Cloud, base, 0), &req.rates, req.horizon)?;
        if bound.availability < target {
            let s = Search { extra: req.search_cap, availability: bound.availability, evaluations: 1, feasible: false };
            return finish(req, base, s);
        }
        let mut s = minimal_extra(req.search_cap, target, |x| solve(req, base, x))?;
        s.evaluations += 1;
        return finish(req, base, s);
    }
    let s = minimal_extra(req.search_cap, target, |x| solve(req, base, x))?;
    finish(req, base, s)
}

/// Reference answer by scanning `0..=cap` in order.
pub fn plan_capacity_linear(req: &PlanRequest) -> Result<PlanResult> {
    req.validate()?;
    let base = required_base_nodes(req.sert_multiplier, req.throughput_ratio)?;
    let target = target_availability(req.target_nines);
    let mut last = 0.0;
    for x in 0..=req.search_cap {
        last = solve(req, base, x)?;
        if last >= target {
            return finish(req, base, Search { extra: x, availability: last, evaluations: x + 1, feasible: true });
        }
    }
    let s = Search { extra: req.search_cap, availability: last, evaluations: req.search_cap + 1, feasible: false };
    finish(req, base, s)
}

/// One evaluated grid point. Failures are kept per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<C, R> {
    pub cell: C,
    pub outcome: Result<R>,
}

/// Evaluates every cell, possibly in parallel; rows come back in input
/// order.
pub fn sweep<C, R, F>(cells: Vec<C>, eval: F) -> Result<Vec<SweepRow<C, R>>>
where
    C: Send + Sync,
    R: Send,
    F: Fn(&C) -> Result<R> + Sync,
{
    if cells.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let outcomes: Vec<Result<R>> = cells.par_iter().map(&eval).collect();
    Ok(cells.into_iter().zip(outcomes).map(|(cell, outcome)| SweepRow { cell, outcome }).collect())
}

pub const TABLE_CRASH_RATES: [f64; 2] = [1.0, 6.0];
pub const TABLE_FAILOVER_SECONDS: [f64; 3] = [15.0, 60.0, 1800.0];

/// A capacity-planning grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanCell {
    pub variant: NodeVariant,
    pub deployment: Deployment,
    pub technique: Technique,
    pub hw_crash_per_year: f64,
    pub failover_seconds: f64,
    pub pool_repair_hours: Option<f64>,
}

impl PlanCell {
    pub fn request(&self, template: &PlanTemplate) -> PlanRequest {
        let mut rates = AvailRates::new(self.hw_crash_per_year, self.failover_seconds).with_policy(template.policy);
        if let Some(h) = self.pool_repair_hours {
            rates = rates.with_pool_repair_hours(h);
        }
        let mut req = PlanRequest::new(self.variant, self.deployment, self.technique, rates);
        req.sert_multiplier = template.sert_multiplier;
        req.target_nines = template.target_nines;
        req.horizon = template.horizon;
        req.search_cap = template.search_cap;
        if let Some(r) = template.profile.ratio(self.variant) {
            req.throughput_ratio = r;
        }
        req
    }
}

/// Settings shared by every cell of a planning sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanTemplate {
    pub sert_multiplier: f64,
    pub target_nines: f64,
    pub horizon: f64,
    pub search_cap: u32,
    pub policy: RecoveryPolicy,
    pub profile: PerfProfile,
}

impl Default for PlanTemplate {
    fn default() -> Self {
        PlanTemplate {
            sert_multiplier: 10.0,
            target_nines: 3.0,
            horizon: YEAR,
            search_cap: DEFAULT_SEARCH_CAP,
            policy: RecoveryPolicy::Parallel,
            profile: PerfProfile::reported(),
        }
    }
}

/// ARA extra-node grid: variant, then crash rate, then failover time.
pub fn ara_table_cells(deployment: Deployment) -> Vec<PlanCell> {
    let mut cells = Vec::new();
    for variant in NodeVariant::ALL {
        for hw_crash_per_year in TABLE_CRASH_RATES {
            for failover_seconds in TABLE_FAILOVER_SECONDS {
                cells.push(PlanCell {
                    variant,
                    deployment,
                    technique: Technique::ActiveRouteAnywhere,
                    hw_crash_per_year,
                    failover_seconds,
                    pool_repair_hours: None,
                });
            }
        }
    }
    cells
}

/// On-premises PF pool grid; each failover time appears without repair and
/// with one-hour repair.
pub fn pf_table_cells() -> Vec<PlanCell> {
    let mut cells = Vec::new();
    for variant in NodeVariant::ALL {
        for hw_crash_per_year in TABLE_CRASH_RATES {
            for failover_seconds in TABLE_FAILOVER_SECONDS {
                for pool_repair_hours in [None, Some(1.0)] {
                    cells.push(PlanCell {
                        variant,
                        deployment: Deployment::OnPremises,
                        technique: Technique::PassiveFailover,
                        hw_crash_per_year,
                        failover_seconds,
                        pool_repair_hours,
                    });
                }
            }
        }
    }
    cells
}

pub fn plan_sweep(cells: Vec<PlanCell>, template: &PlanTemplate) -> Result<Vec<SweepRow<PlanCell, PlanResult>>> {
    sweep(cells, |c| plan_capacity(&c.request(template)))
}

/// Availability of a cluster without over-provisioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvailCell {
    pub deployment: Deployment,
    pub num: u32,
    pub hw_crash_per_year: f64,
    /// Ignored on premises, where nothing is replaced.
    pub failover_seconds: f64,
}

/// Single node, crash rates 1..=12 per year: cloud at each table failover
/// time, then on premises.
pub fn single_node_cells() -> Vec<AvailCell> {
    let mut cells = Vec::new();
    for failover_seconds in TABLE_FAILOVER_SECONDS {
        for l in 1..=12 {
            cells.push(AvailCell { deployment: Deployment::Cloud, num: 1, hw_crash_per_year: l as f64, failover_seconds });
        }
    }
    for l in 1..=12 {
        cells.push(AvailCell {
            deployment: Deployment::OnPremises,
            num: 1,
            hw_crash_per_year: l as f64,
            failover_seconds: TABLE_FAILOVER_SECONDS[0],
        });
    }
    cells
}

/// Clusters of 1..=`max_nodes` at the table crash rates, cloud with 15 s
/// failover and on premises.
pub fn cluster_cells(max_nodes: u32) -> Vec<AvailCell> {
    let mut cells = Vec::new();
    for deployment in [Deployment::Cloud, Deployment::OnPremises] {
        for hw_crash_per_year in TABLE_CRASH_RATES {
            for num in 1..=max_nodes {
                cells.push(AvailCell { deployment, num, hw_crash_per_year, failover_seconds: TABLE_FAILOVER_SECONDS[0] });
            }
        }
    }
    cells
}

pub fn avail_sweep(cells: Vec<AvailCell>, horizon: f64) -> Result<Vec<SweepRow<AvailCell, AvailabilityReport>>> {
    sweep(cells, |c| {
        let spec = ClusterSpec::pf(c.deployment, c.num, 0);
        avail::evaluate(&spec, &AvailRates::new(c.hw_crash_per_year, c.failover_seconds), horizon)
    })
}

/// Integrity breakdown of one node type at a transient fault rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrityCell {
    pub variant: NodeVariant,
    pub deployment: Deployment,
    pub transient_per_year: f64,
}

/// Fault rates from once a month to several times a day for every node
/// type, in the cloud.
pub fn integrity_cells() -> Vec<IntegrityCell> {
    let per_month = [1.0, 2.0, 5.0, 10.0, 20.0];
    let per_day = [1.0, 2.0, 5.0, 10.0, 20.0];
    let rates: Vec<f64> = per_month
        .iter()
        .map(|m| m * 12.0)
        .chain(per_day.iter().map(|d| d * YEAR / crate::units::DAY))
        .collect();
    let mut cells = Vec::new();
    for variant in NodeVariant::ALL {
        for &transient_per_year in &rates {
            cells.push(IntegrityCell { variant, deployment: Deployment::Cloud, transient_per_year });
        }
    }
    cells
}

pub fn integrity_sweep(cells: Vec<IntegrityCell>) -> Result<Vec<SweepRow<IntegrityCell, IntegrityReport>>> {
    sweep(cells, |c| integrity::evaluate(c.variant, c.deployment, c.transient_per_year, MONTH))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_nodes() {
        assert_eq!(required_base_nodes(10.0, 1.0).unwrap(), 10);
        assert_eq!(required_base_nodes(10.0, 0.92).unwrap(), 11);
        assert_eq!(required_base_nodes(10.0, 0.71).unwrap(), 15);
        assert_eq!(required_base_nodes(1.0, 0.92).unwrap(), 2);
        assert_eq!(required_base_nodes(0.3, 1.0).unwrap(), 1);
        assert!(required_base_nodes(0.0, 1.0).is_err());
        assert!(required_base_nodes(10.0, 0.0).is_err());
        assert!(required_base_nodes(10.0, -1.0).is_err());
    }

    #[test]
    fn search_finds_threshold() {
        for cap in [1, 2, 3, 7, 64, 1000] {
            for t in 0..=cap + 2 {
                let s = minimal_extra(cap, t as f64, |x| Ok(x as f64)).unwrap();
                if t <= cap {
                    assert_eq!((s.extra, s.feasible), (t, true), "cap {cap} t {t}");
                } else {
                    assert_eq!((s.extra, s.feasible), (cap, false), "cap {cap} t {t}");
                }
            }
        }
    }

    #[test]
    fn search_is_logarithmic() {
        let s = minimal_extra(1000, 700.0, |x| Ok(x as f64)).unwrap();
        assert_eq!(s.extra, 700);
        assert!(s.evaluations <= 22, "{}", s.evaluations);
    }

    #[test]
    fn search_propagates_errors() {
        let r = minimal_extra(10, 5.0, |x| if x == 4 { Err(Error::EmptyGrid) } else { Ok(x as f64) });
        assert_eq!(r, Err(Error::EmptyGrid));
    }

    fn req(deployment: Deployment, technique: Technique, lambda: f64, failover: f64) -> PlanRequest {
        PlanRequest::new(NodeVariant::Native, deployment, technique, AvailRates::new(lambda, failover))
    }

    #[test]
    fn cloud_ara_examples() {
        let r = plan_capacity(&req(Deployment::Cloud, Technique::ActiveRouteAnywhere, 6.0, 1800.0)).unwrap();
        assert_eq!((r.base, r.extra, r.feasible), (10, 1, true));
        let r = plan_capacity(&req(Deployment::Cloud, Technique::ActiveRouteAnywhere, 1.0, 15.0)).unwrap();
        assert_eq!((r.base, r.extra, r.evaluations), (10, 0, 1));
    }

    #[test]
    fn pf_with_repair_needs_one_standby() {
        let mut q = req(Deployment::OnPremises, Technique::PassiveFailover, 1.0, 15.0);
        q.rates = q.rates.with_pool_repair_hours(1.0);
        let r = plan_capacity(&q).unwrap();
        assert_eq!((r.extra, r.feasible), (1, true));
        assert!(r.nines >= 3.0);
    }

    #[test]
    fn unreachable_pool_is_flagged() {
        let mut q = req(Deployment::OnPremises, Technique::PassiveFailover, 6.0, 1800.0);
        q.variant = NodeVariant::FtTx;
        q.throughput_ratio = 0.71;
        let r = plan_capacity(&q).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.evaluations, 1);
        assert!(r.nines < 3.0);
    }

    #[test]
    fn binary_search_matches_linear_scan() {
        for (lambda, failover, target) in [(1.0, 15.0, 3.0), (3.0, 600.0, 3.0), (6.0, 1800.0, 4.0), (12.0, 1800.0, 5.0)] {
            let mut q = req(Deployment::Cloud, Technique::ActiveRouteAnywhere, lambda, failover);
            q.target_nines = target;
            q.search_cap = 6;
            assert_eq!(plan_capacity(&q).unwrap().extra, plan_capacity_linear(&q).unwrap().extra);
        }
        let mut q = req(Deployment::OnPremises, Technique::ActiveRouteAnywhere, 1.0, 15.0);
        q.sert_multiplier = 2.0;
        q.search_cap = 40;
        let fast = plan_capacity(&q).unwrap();
        let slow = plan_capacity_linear(&q).unwrap();
        assert_eq!((fast.extra, fast.feasible), (slow.extra, slow.feasible));
        assert!(fast.evaluations < slow.evaluations);
    }

    #[test]
    fn invalid_requests() {
        let mut q = req(Deployment::Cloud, Technique::ActiveRouteAnywhere, 1.0, 15.0);
        q.target_nines = 0.0;
        assert!(plan_capacity(&q).is_err());
        q.target_nines = 3.0;
        q.search_cap = 0;
        assert!(plan_capacity(&q).is_err());
    }

    #[test]
    fn grid_sizes_and_order() {
        let cells = ara_table_cells(Deployment::Cloud);
        assert_eq!(cells.len(), 18);
        assert_eq!(pf_table_cells().len(), 36);
        assert_eq!(single_node_cells().len(), 48);
        assert_eq!(cluster_cells(30).len(), 120);
        let rows = sweep(vec![3, 1, 2], |&x| if x == 1 { Err(Error::EmptyGrid) } else { Ok(x * 10) }).unwrap();
        let got: Vec<_> = rows.iter().map(|r| (r.cell, r.outcome.clone())).collect();
        assert_eq!(got, vec![(3, Ok(30)), (1, Err(Error::EmptyGrid)), (2, Ok(20))]);
        assert_eq!(sweep(Vec::<u8>::new(), |_| Ok(())).unwrap_err(), Error::EmptyGrid);
    }
}
