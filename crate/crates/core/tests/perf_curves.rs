use std::fs::File;
use std::path::Path;

use pcraft_core::perf::{
    degradation_ratios, mean_ratios, parse_benchmark_csv, saturation_throughput, to_csv, PerfCurve, PerfRow,
};
use pcraft_core::NodeVariant;
use proptest::prelude::*;

fn fixture(name: &str) -> PerfCurve {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    parse_benchmark_csv(File::open(path).unwrap()).unwrap()
}

#[test]
fn apache_static_saturates_near_200k() {
    let nodt = saturation_throughput(&fixture("apache_static_native.csv"), 1000.0).unwrap();
    assert!((nodt - 200_000.0).abs() / 200_000.0 < 0.01, "{nodt}");
}

#[test]
fn memcached_saturates_near_886k() {
    let nodt = saturation_throughput(&fixture("memcached_native.csv"), 1000.0).unwrap();
    assert!((nodt - 886_000.0).abs() / 886_000.0 < 0.01, "{nodt}");
}

#[test]
fn fixture_ratios() {
    let t = |name| saturation_throughput(&fixture(name), 1000.0).unwrap();
    let p = degradation_ratios(&[
        (NodeVariant::Native, t("apache_static_native.csv")),
        (NodeVariant::FtIlr, t("apache_static_ft_ilr.csv")),
        (NodeVariant::FtTx, t("apache_static_ft_tx.csv")),
    ])
    .unwrap();
    assert!((p.ratio(NodeVariant::FtIlr).unwrap() - 0.92).abs() < 0.005);
    assert!((p.ratio(NodeVariant::FtTx).unwrap() - 0.71).abs() < 0.005);
    let mean = mean_ratios(&[p.clone(), p]).unwrap();
    assert!((mean[&NodeVariant::FtTx] - 0.71).abs() < 0.005);
}

#[test]
fn response_rate_falls_past_saturation() {
    let c = fixture("apache_static_native.csv");
    let last = c.rows().last().unwrap();
    assert!(last.achieved_rate < last.offered_rate);
    assert!(last.latency_ms > 1000.0);
}

fn arb_row() -> impl Strategy<Value = PerfRow> {
    (0.0f64..1e7, 0.0f64..1e7, 1e-3f64..1e5, prop::option::of(0.0f64..100.0)).prop_map(|(o, a, l, c)| PerfRow {
        offered_rate: o,
        achieved_rate: a,
        latency_ms: l,
        cpu_pct: c,
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_lossless(rows in prop::collection::vec(arb_row(), 1..30)) {
        let curve = PerfCurve::new("", NodeVariant::Native, rows).unwrap();
        let back = parse_benchmark_csv(to_csv(&curve).as_bytes()).unwrap();
        prop_assert_eq!(back, curve);
    }

    #[test]
    fn raising_the_threshold_never_lowers_throughput(
        rows in prop::collection::vec(arb_row(), 1..30), t in 1e-3f64..1e5, factor in 1.0f64..100.0,
    ) {
        let curve = PerfCurve::new("", NodeVariant::Native, rows).unwrap();
        if let Ok(lo) = saturation_throughput(&curve, t) {
            prop_assert!(saturation_throughput(&curve, t * factor).unwrap() >= lo);
        }
    }
}
