//! Benchmark curves and single-node saturation throughput.
//!
//! A curve is a sweep of fixed offered request rates with the response rate
//! and mean latency the load generator observed at each. The usable
//! throughput of a node is the best achieved rate whose latency is still
//! acceptable.

use std::collections::BTreeMap;
use std::io::Read;

use crate::{Error, NodeVariant, Result};

pub const COLUMNS: [&str; 4] = ["offered_rate", "achieved_rate", "latency_ms", "cpu_pct"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfRow {
    /// Offered request rate, req/s.
    pub offered_rate: f64,
    /// Response rate actually achieved, req/s.
    pub achieved_rate: f64,
    /// Mean latency, ms.
    pub latency_ms: f64,
    pub cpu_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfCurve {
    pub application: String,
    pub variant: NodeVariant,
    rows: Vec<PerfRow>,
}

impl PerfCurve {
    /// Validates and sorts rows by offered rate.
    pub fn new(application: impl Into<String>, variant: NodeVariant, mut rows: Vec<PerfRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoDataRows);
        }
        for (i, r) in rows.iter().enumerate() {
            check_row(r, i + 1)?;
        }
        rows.sort_by(|a, b| a.offered_rate.total_cmp(&b.offered_rate));
        Ok(PerfCurve { application: application.into(), variant, rows })
    }

    pub fn tagged(mut self, application: impl Into<String>, variant: NodeVariant) -> Self {
        self.application = application.into();
        self.variant = variant;
        self
    }

    pub fn rows(&self) -> &[PerfRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn check_row(r: &PerfRow, row: usize) -> Result<()> {
    let bad = |column: &str, message: String| Error::Csv { row, column: column.into(), message };
    if !(r.offered_rate.is_finite() && r.offered_rate >= 0.0) {
        return Err(bad("offered_rate", format!("must be finite and >= 0, got {}", r.offered_rate)));
    }
    if !(r.achieved_rate.is_finite() && r.achieved_rate >= 0.0) {
        return Err(bad("achieved_rate", format!("must be finite and >= 0, got {}", r.achieved_rate)));
    }
    if !(r.latency_ms.is_finite() && r.latency_ms > 0.0) {
        return Err(bad("latency_ms", format!("must be finite and > 0, got {}", r.latency_ms)));
    }
    if let Some(c) = r.cpu_pct {
        if !(c.is_finite() && c >= 0.0) {
            return Err(bad("cpu_pct", format!("must be finite and >= 0, got {c}")));
        }
    }
    Ok(())
}

/// Parses `offered_rate,achieved_rate,latency_ms[,cpu_pct]`. Rows are
/// reported by their line number in the input (the header is line 1). The
/// result is tagged as a native curve of an unnamed application; use
/// [`PerfCurve::tagged`] to label it.
pub fn parse_benchmark_csv<R: Read>(input: R) -> Result<PerfCurve> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { row: 1, column: String::new(), message: e.to_string() })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 3];
    for (k, name) in COLUMNS[..3].iter().enumerate() {
        idx[k] = find(name).ok_or_else(|| Error::MissingColumn((*name).to_string()))?;
    }
    let cpu = find("cpu_pct");

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Csv { row: line, column: String::new(), message: e.to_string() })?;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Csv {
                row: line,
                column: name.to_string(),
                message: format!("not a number: {raw:?}"),
            })
        };
        let row = PerfRow {
            offered_rate: cell(idx[0], COLUMNS[0])?,
            achieved_rate: cell(idx[1], COLUMNS[1])?,
            latency_ms: cell(idx[2], COLUMNS[2])?,
            cpu_pct: match cpu {
                Some(c) if !record.get(c).unwrap_or("").is_empty() => Some(cell(c, COLUMNS[3])?),
                _ => None,
            },
        };
        check_row(&row, line)?;
        rows.push(row);
    }
    PerfCurve::new("", NodeVariant::Native, rows)
}

/// Writes the curve back in the input schema. The cpu column is present
/// only when some row carries it.
pub fn to_csv(curve: &PerfCurve) -> String {
    let with_cpu = curve.rows.iter().any(|r| r.cpu_pct.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = if with_cpu { &COLUMNS[..] } else { &COLUMNS[..3] };
    w.write_record(header).expect("writing to memory");
    for r in &curve.rows {
        let mut rec = vec![r.offered_rate.to_string(), r.achieved_rate.to_string(), r.latency_ms.to_string()];
        if with_cpu {
            rec.push(r.cpu_pct.map(|c| c.to_string()).unwrap_or_default());
        }
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

/// Highest achieved rate among rows whose latency is within the threshold.
pub fn saturation_throughput(curve: &PerfCurve, latency_threshold_ms: f64) -> Result<f64> {
    if !(latency_threshold_ms.is_finite() && latency_threshold_ms > 0.0) {
        return Err(Error::InvalidArgument(format!("latency threshold must be > 0, got {latency_threshold_ms}")));
    }
    curve
        .rows
        .iter()
        .filter(|r| r.latency_ms <= latency_threshold_ms)
        .map(|r| r.achieved_rate)
        .fold(None, |best: Option<f64>, x| Some(best.map_or(x, |b| b.max(x))))
        .ok_or(Error::NoQualifyingRow { threshold_ms: latency_threshold_ms })
}

/// Saturation throughput per variant and its ratio to native.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfProfile {
    pub nodt: BTreeMap<NodeVariant, f64>,
    pub ratios: BTreeMap<NodeVariant, f64>,
}

impl PerfProfile {
    /// Averages measured across the benchmarked applications, in units of
    /// native throughput.
    pub fn reported() -> Self {
        let ratios: BTreeMap<_, _> =
            [(NodeVariant::Native, 1.0), (NodeVariant::FtIlr, 0.92), (NodeVariant::FtTx, 0.71)].into();
        PerfProfile { nodt: ratios.clone(), ratios }
    }

    pub fn ratio(&self, variant: NodeVariant) -> Option<f64> {
        self.ratios.get(&variant).copied()
    }
}

pub fn degradation_ratios(nodt: &[(NodeVariant, f64)]) -> Result<PerfProfile> {
    let map: BTreeMap<NodeVariant, f64> = nodt.iter().copied().collect();
    let native = *map
        .get(&NodeVariant::Native)
        .ok_or_else(|| Error::MissingBaseline("degradation ratios".into()))?;
    for (v, t) in &map {
        if !(t.is_finite() && *t > 0.0) {
            return Err(Error::InvalidArgument(format!("throughput of {v} must be > 0, got {t}")));
        }
    }
    let ratios: BTreeMap<_, _> = map.iter().map(|(&v, &t)| (v, t / native)).collect();
    if let Some((v, r)) = ratios.iter().find(|(_, &r)| r > 1.5) {
        return Err(Error::InvalidArgument(format!("{v} is {r:.3}x native, outside (0, 1.5]")));
    }
    Ok(PerfProfile { nodt: map, ratios })
}

/// Arithmetic mean of per-application ratios. Every profile must cover the
/// same variants.
pub fn mean_ratios(profiles: &[PerfProfile]) -> Result<BTreeMap<NodeVariant, f64>> {
    let first = profiles.first().ok_or(Error::EmptyGrid)?;
    let mut out = BTreeMap::new();
    for &v in first.ratios.keys() {
        let mut sum = 0.0;
        for p in profiles {
            sum += p.ratio(v).ok_or_else(|| Error::MissingBaseline(format!("{v} in every application")))?;
        }
        out.insert(v, sum / profiles.len() as f64);
    }
    Ok(out)
}
