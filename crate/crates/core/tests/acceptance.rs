//! Acceptance gate. Prints one PASS/FAIL line per criterion, with any
//! arbitration or diagnostic lines indented below it, and exits non-zero if
//! any criterion fails. Tolerances and time budgets are pinned here.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pcraft_core::avail::{self, AvailRates, ClusterSpec};
use pcraft_core::ctmc::{Ctmc, Distribution, RewardVector};
use pcraft_core::integrity;
use pcraft_core::planner::{
    self, ara_table_cells, pf_table_cells, plan_capacity, plan_sweep, PlanCell, PlanRequest, PlanTemplate,
};
use pcraft_core::sim::simulate_ctmc;
use pcraft_core::units::{per_year, DAY, MONTH, YEAR};
use pcraft_core::{Deployment, NodeVariant, Technique};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLOSED_FORM_TOL: f64 = 1e-9;
const SINGLE_NODE_ONPREM: (f64, f64) = (0.6321, 1e-4);
const CLUSTER_ONPREM: (f64, f64) = (0.100, 0.002);
const PF_NO_REPAIR_TOL: i64 = 3;
const ONPREM_ARA_TOL: [i64; 2] = [3, 5];
const INTEGRITY_POINT_TOL_PP: [f64; 2] = [0.05, 0.1];
const COVERAGE_MIN: f64 = 0.95;
const COVERAGE_REPLICATIONS: usize = 10_000;
const ARBITRATION_REPLICATIONS: usize = 2_000;
/// Coverage models must spend at least this fraction of time down; rarer
/// outages are out of reach for plain Monte Carlo and are checked analytically.
const COVERAGE_MIN_UNAVAILABILITY: f64 = 1e-5;
/// On-premises ARA at six crashes per node-year needs thousands of extra
/// nodes under this model; the search must be allowed to get there.
const ONPREM_ARA_SEARCH_CAP: u32 = 20_000;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    summary: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome { pass, summary: summary.into(), notes: Vec::new() }
    }
}

fn two_state(lambda: f64, rho: f64) -> Ctmc<u8> {
    Ctmc::with_initial_state(vec![1, 0], [(1, 0, lambda), (0, 1, rho)], &1).unwrap()
}

fn closed_form_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_transient = 0.0f64;
    let up = RewardVector::indicator(2, 0);
    for l in 1..=12 {
        for rho in [1.0 / 15.0, 1.0 / 60.0, 1.0 / 1800.0] {
            let lambda = per_year(l as f64);
            let exact = rho / (lambda + rho);
            let m = two_state(lambda, rho);
            let pi = m.steady_state(1e-14).unwrap();
            worst = worst.max((pi[0] - exact).abs());
            // started in equilibrium the time average equals the steady state
            let eq = m.with_initial(Distribution::new(vec![exact, 1.0 - exact]).unwrap()).unwrap();
            worst = worst.max((eq.cumulative_occupancy(&up, YEAR, 1e-12).unwrap() / YEAR - exact).abs());
            // started up, compare with the exact transient integral
            let s = lambda + rho;
            let transient = exact + lambda / (s * s * YEAR) * (1.0 - (-s * YEAR).exp());
            worst_transient =
                worst_transient.max((m.cumulative_occupancy(&up, YEAR, 1e-12).unwrap() / YEAR - transient).abs());
        }
    }
    let pass = worst <= CLOSED_FORM_TOL && worst_transient <= CLOSED_FORM_TOL;
    Outcome::new(
        pass,
        format!("max |A - rho/(lambda+rho)| = {worst:.2e}, from-up vs transient closed form {worst_transient:.2e} (tol {CLOSED_FORM_TOL:.0e})"),
    )
}

fn single_node() -> Outcome {
    let mut min5 = f64::INFINITY;
    let mut min3 = f64::INFINITY;
    for l in 1..=12 {
        let spec = ClusterSpec::pf(Deployment::Cloud, 1, 0);
        min5 = min5.min(avail::evaluate(&spec, &AvailRates::new(l as f64, 15.0), YEAR).unwrap().nines);
        min3 = min3.min(avail::evaluate(&spec, &AvailRates::new(l as f64, 1800.0), YEAR).unwrap().nines);
    }
    let onprem = avail::evaluate(&ClusterSpec::pf(Deployment::OnPremises, 1, 0), &AvailRates::new(1.0, 15.0), YEAR)
        .unwrap()
        .availability;
    let pass = min5 >= 5.0 && min3 >= 3.0 && (onprem - SINGLE_NODE_ONPREM.0).abs() <= SINGLE_NODE_ONPREM.1;
    Outcome::new(
        pass,
        format!("cloud min nines {min5:.3} at 15 s, {min3:.3} at 30 min; on-premises A = {onprem:.6} (want {} +- {:.0e})", SINGLE_NODE_ONPREM.0, SINGLE_NODE_ONPREM.1),
    )
}

fn cluster_of_ten() -> Outcome {
    let a = avail::evaluate(&ClusterSpec::ara(Deployment::OnPremises, 10, 0), &AvailRates::new(1.0, 15.0), YEAR)
        .unwrap()
        .availability;
    Outcome::new(
        (a - CLUSTER_ONPREM.0).abs() <= CLUSTER_ONPREM.1,
        format!("A = {a:.6} (want {} +- {})", CLUSTER_ONPREM.0, CLUSTER_ONPREM.1),
    )
}

fn base_nodes() -> Outcome {
    let got: Vec<u32> =
        [1.0, 0.92, 0.71].iter().map(|&r| planner::required_base_nodes(10.0, r).unwrap()).collect();
    Outcome::new(got == [10, 11, 15], format!("{got:?} (want [10, 11, 15])"))
}

fn cloud_ara_extras() -> Outcome {
    let rows = plan_sweep(ara_table_cells(Deployment::Cloud), &PlanTemplate::default()).unwrap();
    let got: Vec<u32> = rows.iter().map(|r| r.outcome.as_ref().unwrap().extra).collect();
    let want: Vec<u32> = [[0, 0, 0, 0, 0, 1]; 3].concat();
    let mut o = Outcome::new(got == want, format!("extras {got:?}"));
    if got != want {
        o.notes.push(format!("want {want:?}"));
    }
    o
}

fn label(c: &PlanCell) -> String {
    let repair = match c.pool_repair_hours {
        Some(h) => format!("{h} h repair"),
        None => "no repair".into(),
    };
    format!("{} {}/yr {} s {}", c.variant, c.hw_crash_per_year, c.failover_seconds, repair)
}

/// Simulated availability of `spec` with a 99% interval.
fn simulate(spec: &ClusterSpec, rates: &AvailRates, seed: u64) -> (f64, f64) {
    let model = avail::build_model(spec, rates).unwrap();
    let reward = avail::available_reward(&model, spec);
    let est = simulate_ctmc(&model, &reward, YEAR, ARBITRATION_REPLICATIONS, seed).unwrap().per_unit_time(YEAR);
    (est.mean, est.ci_half_width)
}

fn arbitrate(o: &mut Outcome, req: &PlanRequest, base: u32, ours: u32, theirs: u32, seed: u64) {
    let target = avail::target_availability(req.target_nines);
    let template = match req.technique {
        Technique::PassiveFailover => ClusterSpec::pf(req.deployment, base, 0),
        Technique::ActiveRouteAnywhere => ClusterSpec::ara(req.deployment, base, 0),
    };
    for extra in [theirs, ours.saturating_sub(1), ours] {
        let spec = template.with_extra(extra);
        let analytic = avail::evaluate(&spec, &req.rates, YEAR).unwrap().availability;
        let (mean, hw) = simulate(&spec, &req.rates, seed + extra as u64);
        let verdict = if mean + hw < target {
            "below target"
        } else if mean - hw >= target {
            "meets target"
        } else {
            "undecided"
        };
        o.notes.push(format!(
            "  extra {extra:>5}: analytic {analytic:.6}, simulated {mean:.6} +- {hw:.1e} ({verdict}, analytic {} the interval)",
            if (analytic - mean).abs() <= hw { "inside" } else { "outside" },
        ));
    }
}

fn pf_pool_sizes() -> Outcome {
    let cells = pf_table_cells();
    let rows = plan_sweep(cells, &PlanTemplate::default()).unwrap();
    // reported pool sizes, None for the infeasible cells
    let reported = |c: &PlanCell| -> Option<u32> {
        let v = match c.variant {
            NodeVariant::Native => 0,
            NodeVariant::FtIlr => 1,
            NodeVariant::FtTx => 2,
        };
        let slow = c.failover_seconds == 1800.0;
        if c.pool_repair_hours.is_some() {
            return if c.hw_crash_per_year == 6.0 && slow { None } else { Some(1) };
        }
        match (c.hw_crash_per_year == 6.0, slow) {
            (false, false) => Some([18, 19, 24][v]),
            (false, true) => Some([19, 20, 27][v]),
            (true, false) => Some([30, 33, 42][v]),
            (true, true) => None,
        }
    };
    let mut bad = Vec::new();
    let mut repair_ok = true;
    for (i, row) in rows.iter().enumerate() {
        let r = row.outcome.as_ref().unwrap();
        let c = &row.cell;
        match (reported(c), c.pool_repair_hours) {
            (None, _) => {
                if r.feasible && r.extra <= 1 {
                    bad.push((i, None));
                    repair_ok &= c.pool_repair_hours.is_none();
                }
            }
            (Some(p), Some(_)) => {
                if !(r.feasible && r.extra == p) {
                    repair_ok = false;
                    bad.push((i, Some(p)));
                }
            }
            (Some(p), None) => {
                if !r.feasible || (r.extra as i64 - p as i64).abs() > PF_NO_REPAIR_TOL {
                    bad.push((i, Some(p)));
                }
            }
        }
    }
    let show: Vec<String> = rows
        .iter()
        .filter(|r| r.cell.pool_repair_hours.is_none())
        .map(|r| {
            let p = r.outcome.as_ref().unwrap();
            if p.feasible { p.extra.to_string() } else { "x".into() }
        })
        .collect();
    let mut o = Outcome::new(
        bad.is_empty(),
        format!(
            "1 h repair column {}; no-repair pools {} (tol +-{PF_NO_REPAIR_TOL}), {} cell(s) out of tolerance",
            if repair_ok { "matches" } else { "differs" },
            show.join(" "),
            bad.len()
        ),
    );
    for (k, (i, want)) in bad.iter().enumerate() {
        let row = &rows[*i];
        let r = row.outcome.as_ref().unwrap();
        o.notes.push(format!(
            "{}: got {}{}, reported {}",
            label(&row.cell),
            r.extra,
            if r.feasible { "" } else { " (infeasible)" },
            want.map_or("x".into(), |w| w.to_string())
        ));
        if let (Some(w), true) = (want, r.feasible) {
            arbitrate(&mut o, &row.cell.request(&PlanTemplate::default()), r.base, r.extra, *w, 600 + 10 * k as u64);
        }
    }
    if !bad.is_empty() {
        // the reported six-per-year column lines up with two crashes per year
        let mut cell = rows[bad[0].0].cell;
        cell.hw_crash_per_year = 2.0;
        let r = plan_capacity(&cell.request(&PlanTemplate::default())).unwrap();
        o.notes.push(format!("diagnostic: {} needs pool {}", label(&cell), r.extra));
    }
    o
}

fn onprem_ara_extras() -> Outcome {
    let template = PlanTemplate { search_cap: ONPREM_ARA_SEARCH_CAP, ..PlanTemplate::default() };
    // failover time plays no role on premises; one column per crash rate
    let cells: Vec<PlanCell> =
        ara_table_cells(Deployment::OnPremises).into_iter().filter(|c| c.failover_seconds == 15.0).collect();
    let rows = plan_sweep(cells, &template).unwrap();
    let want = |c: &PlanCell| -> (u32, i64) {
        let v = NodeVariant::ALL.iter().position(|&x| x == c.variant).unwrap();
        if c.hw_crash_per_year == 1.0 {
            ([35, 37, 46][v], ONPREM_ARA_TOL[0])
        } else {
            ([113, 121, 152][v], ONPREM_ARA_TOL[1])
        }
    };
    let mut o = Outcome::new(true, String::new());
    let mut got = Vec::new();
    let mut k = 0;
    for row in &rows {
        let r = row.outcome.as_ref().unwrap();
        let (w, tol) = want(&row.cell);
        got.push(if r.feasible { r.extra.to_string() } else { "x".into() });
        if !r.feasible || (r.extra as i64 - w as i64).abs() > tol {
            o.pass = false;
            o.notes.push(format!("{} {}/yr: got {}, reported {w} (tol +-{tol})", row.cell.variant, row.cell.hw_crash_per_year, r.extra));
            if r.feasible {
                arbitrate(&mut o, &row.cell.request(&template), r.base, r.extra, w, 700 + 10 * k);
                k += 1;
            }
        }
    }
    o.summary = format!("extras [1/yr, 6/yr] per variant: {}", got.join(" "));
    if !o.pass {
        let mut cell = rows[0].cell;
        cell.hw_crash_per_year = 2.0;
        let r = plan_capacity(&cell.request(&template)).unwrap();
        o.notes.push(format!("diagnostic: native at 2/yr needs {} extra nodes", r.extra));
    }
    o
}

fn integrity_bands() -> Outcome {
    let per_day = YEAR / DAY;
    // percent bands per variant: (1/month, 1/day)
    let bands = [
        (NodeVariant::Native, (0.2, 5.5), (6.0, 58.0)),
        (NodeVariant::FtIlr, (0.007 * 0.9, 0.18), (0.2, 4.3)),
        (NodeVariant::FtTx, (0.0026, 0.07), (0.07, 1.67)),
    ];
    let mut o = Outcome::new(true, String::new());
    let mut parts = Vec::new();
    for (v, month, day) in bands {
        for (rate, (lo, hi), tag) in [(12.0, month, "1/month"), (per_day, day, "1/day")] {
            let c = integrity::evaluate(v, Deployment::Cloud, rate, MONTH).unwrap().corrupt * 100.0;
            let inside = (lo..=hi).contains(&c);
            parts.push(format!("{v}@{tag} {c:.4}%"));
            if !inside {
                o.pass = false;
                o.notes.push(format!("{v} at {tag}: corrupt {c:.5}% outside [{lo}, {hi}]%"));
            }
        }
    }
    let native = integrity::evaluate(NodeVariant::Native, Deployment::Cloud, 12.0, MONTH).unwrap().corrupt * 100.0;
    let tx = integrity::evaluate(NodeVariant::FtTx, Deployment::Cloud, per_day, MONTH).unwrap().corrupt * 100.0;
    if (native - 0.21).abs() > INTEGRITY_POINT_TOL_PP[0] || (tx - 0.29).abs() > INTEGRITY_POINT_TOL_PP[1] {
        o.pass = false;
        o.notes.push(format!("point checks: native {native:.4}% (0.21 +- 0.05), ft_tx {tx:.4}% (0.29 +- 0.1)"));
    }
    o.summary = parts.join(", ");
    o
}

/// Small random availability models: technique, deployment, sizes, rates
/// and an optional pool repair.
fn random_model(rng: &mut ChaCha8Rng) -> (ClusterSpec, AvailRates) {
    let d = if rng.random_bool(0.5) { Deployment::Cloud } else { Deployment::OnPremises };
    let num = rng.random_range(1..=4);
    let extra = rng.random_range(0..=6);
    let spec = if rng.random_bool(0.5) { ClusterSpec::pf(d, num, extra) } else { ClusterSpec::ara(d, num, extra) };
    let mut rates = AvailRates::new(rng.random_range(1.0..12.0), rng.random_range(15.0..1800.0));
    if rng.random_bool(0.5) {
        rates = rates.with_pool_repair_hours(rng.random_range(1.0..72.0));
    }
    (spec, rates)
}

fn oracle_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = 0;
    let mut covered = 0;
    let mut misses = Vec::new();
    let mut skipped = 0;
    for m in 0..20 {
        let (spec, model, analytic) = loop {
            let (spec, rates) = random_model(&mut rng);
            let model = avail::build_model(&spec, &rates).unwrap();
            let a = avail::availability(&model, &spec, YEAR).unwrap().availability;
            if 1.0 - a >= COVERAGE_MIN_UNAVAILABILITY {
                break (spec, model, a);
            }
            skipped += 1;
        };
        assert!(model.len() <= 50);
        let reward = avail::available_reward(&model, &spec);
        for seed in [1u64, 2] {
            let est = simulate_ctmc(&model, &reward, YEAR, COVERAGE_REPLICATIONS, 1000 * m + seed)
                .unwrap()
                .per_unit_time(YEAR);
            pairs += 1;
            if est.covers(analytic) {
                covered += 1;
            } else {
                misses.push(format!("{spec:?} seed {seed}: analytic {analytic:.6}, sim {:.6} +- {:.1e}", est.mean, est.ci_half_width));
            }
        }
    }
    let frac = covered as f64 / pairs as f64;
    let mut o = Outcome::new(
        frac >= COVERAGE_MIN,
        format!(
            "{covered}/{pairs} (model, seed) pairs covered (need {COVERAGE_MIN}), {skipped} rare-outage draws skipped"
        ),
    );
    o.notes = misses;
    o
}

fn property_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut checks = 0;
    for _ in 0..30 {
        let (spec, rates) = random_model(&mut rng);
        let model = avail::build_model(&spec, &rates).unwrap();
        let scale = model.max_exit_rate();
        checks += 1;
        if model.row_sums().iter().any(|s| s.abs() > 1e-12 * scale) {
            failures.push(format!("row sums {spec:?}"));
        }
        let t = rng.random_range(0.0..YEAR);
        let d = model.transient_distribution(t, 1e-10).unwrap();
        checks += 1;
        if (d.sum() - 1.0).abs() > 1e-9 {
            failures.push(format!("normalisation {spec:?} at {t}"));
        }
        let a = |s: ClusterSpec, r: AvailRates| avail::evaluate(&s, &r, YEAR).unwrap().availability;
        let base = a(spec, rates);
        let worse = AvailRates { hw_crash_per_year: rates.hw_crash_per_year * 1.5, ..rates };
        let faster = AvailRates { crash_recovery: rates.crash_recovery * 2.0, ..rates };
        checks += 3;
        if a(spec, worse) > base + 1e-9 {
            failures.push(format!("lambda monotonicity {spec:?}"));
        }
        if a(spec, faster) < base - 1e-9 {
            failures.push(format!("rho monotonicity {spec:?}"));
        }
        if a(spec.with_extra(spec.extra() + 1), rates) < base - 1e-9 {
            failures.push(format!("extra-node monotonicity {spec:?}"));
        }
    }
    for _ in 0..12 {
        let technique = if rng.random_bool(0.5) { Technique::PassiveFailover } else { Technique::ActiveRouteAnywhere };
        let mut rates = AvailRates::new(rng.random_range(1.0..12.0), rng.random_range(15.0..1800.0));
        if rng.random_bool(0.5) {
            rates = rates.with_pool_repair_hours(rng.random_range(0.5..4.0));
        }
        let mut req = PlanRequest::new(NodeVariant::Native, Deployment::OnPremises, technique, rates);
        req.sert_multiplier = rng.random_range(1.0..4.0);
        req.target_nines = rng.random_range(1.5..4.0);
        req.search_cap = 80;
        let r = plan_capacity(&req).unwrap();
        if !r.feasible {
            continue;
        }
        checks += 1;
        let target = avail::target_availability(req.target_nines);
        let spec = ClusterSpec { technique, deployment: Deployment::OnPremises, num: r.base, op: 0, pool: 0 };
        let below = r.extra == 0 || avail::evaluate(&spec.with_extra(r.extra - 1), &rates, YEAR).unwrap().availability < target;
        if !(r.availability >= target && below) {
            failures.push(format!("planner minimality {req:?}"));
        }
    }
    let mut o = Outcome::new(failures.is_empty(), format!("{checks} randomized checks, {} failure(s)", failures.len()));
    o.notes = failures;
    o
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form two-state oracle", Duration::from_secs(1), closed_form_oracle),
        ("single-node availability", Duration::from_secs(5), single_node),
        ("ten-node on-premises cluster", Duration::from_secs(60), cluster_of_ten),
        ("base node counts", Duration::from_secs(1), base_nodes),
        ("cloud ARA extra nodes", Duration::from_secs(60), cloud_ara_extras),
        ("on-premises PF pool sizes", Duration::from_secs(600), pf_pool_sizes),
        ("on-premises ARA extra nodes", Duration::from_secs(600), onprem_ara_extras),
        ("integrity bands", Duration::from_secs(60), integrity_bands),
        ("simulation oracle coverage", Duration::from_secs(300), oracle_coverage),
        ("randomized property grid", Duration::from_secs(600), property_grid),
    ];
    // ACCEPTANCE_ONLY=6,7 restricts the run to the listed criteria
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name}: {} [{:.2?} of {:?}{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.summary,
            took,
            budget,
            if in_time { "" } else { ", over budget" }
        );
        for n in &o.notes {
            println!("     {n}");
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
