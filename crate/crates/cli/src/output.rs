//! Output documents. Field names here are the documented schema.

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub item: u32,
    pub noisy_freq: f64,
}

impl Entry {
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Vec<Entry> {
        pairs.iter().map(|&(item, noisy_freq)| Entry { item, noisy_freq }).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Space {
    /// Live smooth-histogram instances.
    pub instances: usize,
    pub counters: usize,
    pub counter_timestamps: usize,
    pub max_counter_timestamps: usize,
}

impl From<dphh_core::hh::SpaceStats> for Space {
    fn from(s: dphh_core::hh::SpaceStats) -> Self {
        Space {
            instances: s.instances,
            counters: s.counters,
            counter_timestamps: s.counter_timestamps,
            max_counter_timestamps: s.max_counter_timestamps,
        }
    }
}

/// Result of a one-shot run: a single JSON object.
#[derive(Clone, Debug, Serialize)]
pub struct OneshotDocument {
    pub config: RunConfig,
    pub processed: u64,
    pub window: u64,
    pub entries: Vec<Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub released_norm: Option<f64>,
    pub space: Space,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// One line of a continual run. The first line also carries the config.
#[derive(Clone, Debug, Serialize)]
pub struct ContinualLine<'a> {
    pub t: u64,
    pub entries: Vec<Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<&'a RunConfig>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactEntry {
    pub item: u32,
    pub freq: u64,
}

/// Exact heavy hitters of one norm.
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub norm: f64,
    /// Items with `f >= alpha * norm`.
    pub must_report: Vec<ExactEntry>,
    /// Items with `alpha/2 * norm < f < alpha * norm`.
    pub gray_zone: Vec<ExactEntry>,
}

/// Brute-force answer for the final window.
#[derive(Clone, Debug, Serialize)]
pub struct OracleDocument {
    pub config: RunConfig,
    pub processed: u64,
    pub window: u64,
    pub distinct: usize,
    pub l1: f64,
    pub l2: f64,
    pub l2_heavy: Classification,
    pub l1_heavy: Classification,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles. Empty input gives all zeros.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = |q: f64| {
            let r = (q * v.len() as f64).ceil() as usize;
            v[r.clamp(1, v.len()) - 1]
        };
        Quantiles { min: v[0], median: rank(0.5), p90: rank(0.9), max: v[v.len() - 1] }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialMetrics {
    pub trial: u32,
    pub seed: u64,
    pub reported: usize,
    pub must_report: usize,
    pub missed: usize,
    /// Reported items from the must-not-report set.
    pub violations: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub instances: usize,
    pub failed: bool,
}

/// Aggregate over all trials of an experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentDocument {
    pub config: RunConfig,
    pub trials: u32,
    /// Reported items not in the must-not-report set, over all reports.
    pub precision: f64,
    /// Must-report items that were reported, over all must-report items.
    pub recall: f64,
    /// `l2` or `window`: what the error fields are divided by.
    pub error_normalizer: &'static str,
    pub max_error: f64,
    pub mean_error: f64,
    pub failures: u32,
    pub failure_rate: f64,
    /// `1/m^c`.
    pub failure_target: f64,
    pub instances: Quantiles,
    pub per_trial: Vec<TrialMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}
