//! Scenario files: `key = value` lines, `#` comments. Units are fixed by
//! the key name; unknown keys are an error.

use std::path::Path;
use std::str::FromStr;

use pcraft_core::avail::{AvailRates, RecoveryPolicy};
use pcraft_core::integrity::{RecoveryTimes, TransientSplit};
use pcraft_core::perf::PerfProfile;
use pcraft_core::units::{HOUR, MONTH, YEAR};
use pcraft_core::{Deployment, NodeVariant, Technique};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

/// Keys and what they mean. Printed by `--help`-style diagnostics and kept
/// in one place so the parser and the docs cannot drift apart.
pub const KEYS: &[(&str, &str)] = &[
    ("technique", "PF | ARA"),
    ("deployment", "cloud | on-premises"),
    ("node_variant", "native | ft_ilr | ft_tx | all, or a comma-separated list"),
    ("sert_multiplier", "target throughput in multiples of one native node"),
    ("target_nines", "availability target, e.g. 3 for 99.9%"),
    ("horizon_hours", "analysis horizon in hours"),
    ("hw_crash_per_year", "hardware crashes per node per year"),
    ("crash_recovery_seconds", "failover / replacement time in seconds"),
    ("pool_repair_per_hour", "repairs per broken node per hour (PF pool)"),
    ("transient_rate_per_month", "transient faults per node per month"),
    ("latency_threshold_ms", "acceptable mean latency for ingest"),
    ("extra_nodes", "over-provisioning for avail/simulate: ARA extra nodes or PF pool"),
    ("search_cap", "largest over-provisioning the planner tries"),
    ("recovery_policy", "parallel | single"),
    ("onprem_pool", "true if on-premises integrity models have a standby pool"),
    ("ratio_ft_ilr", "ft_ilr throughput relative to native"),
    ("ratio_ft_tx", "ft_tx throughput relative to native"),
    ("p_corrupt_native", "transient fault outcome probabilities"),
    ("p_crash_native", ""),
    ("p_corrupt_ft_ilr", ""),
    ("p_crash_ft_ilr", ""),
    ("p_corrupt_ft_tx", ""),
    ("p_crash_ft_tx", ""),
    ("p_retry_ft_tx", ""),
    ("sdc_recovery_hours", "manual recovery from corruption"),
    ("retry_tx_us", "transaction retry latency in microseconds"),
    ("retry_crash_per_second", "rate at which a retry ends in a crash"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioConfig {
    pub technique: Option<Technique>,
    pub deployment: Option<Deployment>,
    pub node_variants: Option<Vec<NodeVariant>>,
    pub sert_multiplier: Option<f64>,
    pub target_nines: Option<f64>,
    pub horizon_hours: Option<f64>,
    pub hw_crash_per_year: Option<f64>,
    pub crash_recovery_seconds: Option<f64>,
    pub pool_repair_per_hour: Option<f64>,
    pub transient_rate_per_month: Option<f64>,
    pub latency_threshold_ms: Option<f64>,
    pub extra_nodes: Option<u32>,
    pub search_cap: Option<u32>,
    pub recovery_policy: Option<RecoveryPolicy>,
    pub onprem_pool: Option<bool>,
    pub ratio_ft_ilr: Option<f64>,
    pub ratio_ft_tx: Option<f64>,
    /// `(variant, outcome, probability)` overrides.
    pub split_overrides: Vec<(NodeVariant, Outcome, f64)>,
    pub sdc_recovery_hours: Option<f64>,
    pub retry_tx_us: Option<f64>,
    pub retry_crash_per_second: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Corrupt,
    Crash,
    Retry,
}

fn parse_variants(s: &str) -> Result<Vec<NodeVariant>, String> {
    if s.trim() == "all" {
        return Ok(NodeVariant::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let v = NodeVariant::from_str(part.trim()).map_err(|e| e.to_string())?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be a number >= 0, got {s}"))
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let x = nonnegative(s)?;
    if x <= 1.0 {
        Ok(x)
    } else {
        Err(format!("must be a probability in [0, 1], got {s}"))
    }
}

fn count(s: &str) -> Result<u32, String> {
    s.parse().map_err(|_| format!("must be a non-negative integer, got {s:?}"))
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("must be true or false, got {s:?}")),
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            seen.push(key.into());
            cfg.set(key, value).map_err(|message| ConfigError::Value { line, key: key.into(), message })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let split = |variant, outcome, v: &str| probability(v).map(|p| (variant, outcome, p));
        match key {
            "technique" => self.technique = Some(v.parse().map_err(|e: pcraft_core::Error| e.to_string())?),
            "deployment" => self.deployment = Some(v.parse().map_err(|e: pcraft_core::Error| e.to_string())?),
            "node_variant" => self.node_variants = Some(parse_variants(v)?),
            "sert_multiplier" => self.sert_multiplier = Some(positive(v)?),
            "target_nines" => self.target_nines = Some(positive(v)?),
            "horizon_hours" => self.horizon_hours = Some(positive(v)?),
            "hw_crash_per_year" => self.hw_crash_per_year = Some(positive(v)?),
            "crash_recovery_seconds" => self.crash_recovery_seconds = Some(positive(v)?),
            "pool_repair_per_hour" => self.pool_repair_per_hour = Some(positive(v)?),
            "transient_rate_per_month" => self.transient_rate_per_month = Some(nonnegative(v)?),
            "latency_threshold_ms" => self.latency_threshold_ms = Some(positive(v)?),
            "extra_nodes" => self.extra_nodes = Some(count(v)?),
            "search_cap" => {
                let c = count(v)?;
                if c == 0 {
                    return Err("must be at least 1".into());
                }
                self.search_cap = Some(c)
            }
            "recovery_policy" => {
                self.recovery_policy = Some(match v {
                    "parallel" => RecoveryPolicy::Parallel,
                    "single" => RecoveryPolicy::SingleFacility,
                    _ => return Err(format!("must be parallel or single, got {v:?}")),
                })
            }
            "onprem_pool" => self.onprem_pool = Some(boolean(v)?),
            "ratio_ft_ilr" => self.ratio_ft_ilr = Some(positive(v)?),
            "ratio_ft_tx" => self.ratio_ft_tx = Some(positive(v)?),
            "p_corrupt_native" => self.split_overrides.push(split(NodeVariant::Native, Outcome::Corrupt, v)?),
            "p_crash_native" => self.split_overrides.push(split(NodeVariant::Native, Outcome::Crash, v)?),
            "p_corrupt_ft_ilr" => self.split_overrides.push(split(NodeVariant::FtIlr, Outcome::Corrupt, v)?),
            "p_crash_ft_ilr" => self.split_overrides.push(split(NodeVariant::FtIlr, Outcome::Crash, v)?),
            "p_corrupt_ft_tx" => self.split_overrides.push(split(NodeVariant::FtTx, Outcome::Corrupt, v)?),
            "p_crash_ft_tx" => self.split_overrides.push(split(NodeVariant::FtTx, Outcome::Crash, v)?),
            "p_retry_ft_tx" => self.split_overrides.push(split(NodeVariant::FtTx, Outcome::Retry, v)?),
            "sdc_recovery_hours" => self.sdc_recovery_hours = Some(positive(v)?),
            "retry_tx_us" => self.retry_tx_us = Some(positive(v)?),
            "retry_crash_per_second" => self.retry_crash_per_second = Some(nonnegative(v)?),
            _ => unreachable!("key list and parser disagree on {key}"),
        }
        Ok(())
    }

    pub fn require<T: Copy>(value: Option<T>, key: &'static str) -> Result<T, ConfigError> {
        value.ok_or(ConfigError::Missing(key))
    }

    pub fn variants(&self) -> Result<Vec<NodeVariant>, ConfigError> {
        self.node_variants.clone().ok_or(ConfigError::Missing("node_variant"))
    }

    /// Horizon in seconds; one year unless configured.
    pub fn horizon_or_year(&self) -> f64 {
        self.horizon_hours.map_or(YEAR, |h| h * HOUR)
    }

    pub fn horizon_or_month(&self) -> f64 {
        self.horizon_hours.map_or(MONTH, |h| h * HOUR)
    }

    pub fn avail_rates(&self) -> Result<AvailRates, ConfigError> {
        let mut r = AvailRates::new(
            Self::require(self.hw_crash_per_year, "hw_crash_per_year")?,
            Self::require(self.crash_recovery_seconds, "crash_recovery_seconds")?,
        );
        if let Some(per_hour) = self.pool_repair_per_hour {
            r = r.with_pool_repair_hours(1.0 / per_hour);
        }
        Ok(r.with_policy(self.recovery_policy.unwrap_or_default()))
    }

    pub fn profile(&self) -> PerfProfile {
        let mut p = PerfProfile::reported();
        if let Some(r) = self.ratio_ft_ilr {
            p.ratios.insert(NodeVariant::FtIlr, r);
            p.nodt.insert(NodeVariant::FtIlr, r);
        }
        if let Some(r) = self.ratio_ft_tx {
            p.ratios.insert(NodeVariant::FtTx, r);
            p.nodt.insert(NodeVariant::FtTx, r);
        }
        p
    }

    pub fn split(&self, variant: NodeVariant) -> TransientSplit {
        let mut s = TransientSplit::default_for(variant);
        for &(v, outcome, p) in &self.split_overrides {
            if v == variant {
                match outcome {
                    Outcome::Corrupt => s.p_corrupt = p,
                    Outcome::Crash => s.p_crash = p,
                    Outcome::Retry => s.p_retry = p,
                }
            }
        }
        s
    }

    pub fn recovery_times(&self, deployment: Deployment) -> RecoveryTimes {
        let mut r = RecoveryTimes::for_deployment(deployment, self.onprem_pool.unwrap_or(false));
        if r.crash_recovery_s.is_some() {
            if let Some(s) = self.crash_recovery_seconds {
                r.crash_recovery_s = Some(s);
            }
        }
        if let Some(h) = self.sdc_recovery_hours {
            r.sdc_recovery_h = h;
        }
        if let Some(us) = self.retry_tx_us {
            r.retry_tx_us = us;
        }
        if let Some(x) = self.retry_crash_per_second {
            r.retry_crash = x;
        }
        r
    }
}
