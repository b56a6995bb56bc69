//! Structured evaluation reports: per-metric scalars with multi-run
//! aggregation, per-iteration series, and provenance (config hash, seeds,
//! software version).

use std::collections::BTreeMap;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use debias_core::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSummary {
    pub mean: f64,
    /// Sample stdev over runs; null when runs == 1.
    pub stdev: Option<f64>,
    /// Normal-theory 95% interval: mean +/- 1.96 * stdev / sqrt(runs).
    pub ci95: Option<[f64; 2]>,
    /// Raw [2.5%, 97.5%] percentiles over runs.
    pub percentile_ci: Option<[f64; 2]>,
    pub per_run: Vec<f64>,
}

impl ScalarSummary {
    pub fn from_runs(values: &[f64]) -> Self {
        let mean = stats::mean(values);
        if values.len() < 2 {
            return ScalarSummary {
                mean,
                stdev: None,
                ci95: None,
                percentile_ci: None,
                per_run: values.to_vec(),
            };
        }
        let sd = stats::stdev(values);
        let half = 1.96 * sd / (values.len() as f64).sqrt();
        ScalarSummary {
            mean,
            stdev: Some(sd),
            ci95: Some([mean - half, mean + half]),
            percentile_ci: Some([
                stats::percentile(values, 0.025),
                stats::percentile(values, 0.975),
            ]),
            per_run: values.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSummary {
    /// Mean value per iteration (iteration 0 = untouched space).
    pub mean: Vec<f64>,
    pub ci95_lo: Option<Vec<f64>>,
    pub ci95_hi: Option<Vec<f64>>,
    /// Number of runs contributing at each iteration.
    pub support: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_run: Option<Vec<Vec<f64>>>,
}

impl SeriesSummary {
    /// Aggregate per-run trajectories. Shorter trajectories are padded with
    /// their final value: once a pipeline stops early the space no longer
    /// changes, so the metric is constant from there on.
    pub fn from_runs(trajectories: &[Vec<f64>], keep_per_run: bool) -> Self {
        let len = trajectories.iter().map(|t| t.len()).max().unwrap_or(0);
        let runs = trajectories.len();
        let mut mean = Vec::with_capacity(len);
        let mut lo = Vec::with_capacity(len);
        let mut hi = Vec::with_capacity(len);
        let mut support = Vec::with_capacity(len);
        for i in 0..len {
            let column: Vec<f64> = trajectories
                .iter()
                .filter(|t| !t.is_empty())
                .map(|t| if i < t.len() { t[i] } else { *t.last().unwrap() })
                .collect();
            let m = stats::mean(&column);
            mean.push(m);
            support.push(column.len());
            if runs > 1 {
                let sd = stats::stdev(&column);
                let half = 1.96 * sd / (column.len() as f64).sqrt();
                lo.push(m - half);
                hi.push(m + half);
            }
        }
        SeriesSummary {
            mean,
            ci95_lo: (runs > 1).then_some(lo),
            ci95_hi: (runs > 1).then_some(hi),
            support,
            per_run: keep_per_run.then(|| trajectories.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationReport {
    pub version: String,
    pub name: String,
    pub config_hash: String,
    /// Unix seconds; excluded from determinism comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub rng_seed: u64,
    pub runs: usize,
    pub scalars: BTreeMap<String, ScalarSummary>,
    pub series: BTreeMap<String, SeriesSummary>,
    /// Metric-specific payloads (dropped-token counts, neighbor diffs, ...).
    pub details: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn new(name: &str, config_hash: String, rng_seed: u64, runs: usize) -> Self {
        EvaluationReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            name: name.to_string(),
            config_hash,
            generated_at: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs()),
            rng_seed,
            runs,
            scalars: BTreeMap::new(),
            series: BTreeMap::new(),
            details: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Structural validation: the JSON must deserialize back into the typed
    /// report with no unknown fields.
    pub fn validate_json(text: &str) -> Result<EvaluationReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Serialized form with the timestamp removed, for byte-for-byte
    /// determinism comparisons.
    pub fn body_without_timestamp(&self) -> Result<String> {
        let mut clone = self.clone();
        clone.generated_at = None;
        Ok(serde_json::to_string_pretty(&clone)?)
    }
}

pub fn config_hash(canonical: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    format!("sha256:{:x}", hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_summary_single_run_has_null_stdev() {
        let s = ScalarSummary::from_runs(&[0.42]);
        assert_eq!(s.mean, 0.42);
        assert!(s.stdev.is_none());
        assert!(s.ci95.is_none());
    }

    #[test]
    fn scalar_summary_ci_formula() {
        let values: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let s = ScalarSummary::from_runs(&values);
        let sd = s.stdev.unwrap();
        let ci = s.ci95.unwrap();
        assert!((ci[1] - s.mean - 1.96 * sd / 10.0).abs() < 1e-12);
        let pci = s.percentile_ci.unwrap();
        assert!(pci[0] < pci[1]);
    }

    #[test]
    fn series_summary_pads_short_runs() {
        let runs = vec![vec![1.0, 0.5, 0.25], vec![1.0, 0.4]];
        let s = SeriesSummary::from_runs(&runs, false);
        assert_eq!(s.mean.len(), 3);
        assert!((s.mean[2] - (0.25 + 0.4) / 2.0).abs() < 1e-12);
        assert_eq!(s.support, vec![2, 2, 2]);
    }

    #[test]
    fn report_json_round_trip_validates() {
        let mut report = EvaluationReport::new("t", config_hash("{}"), 1, 1);
        report
            .scalars
            .insert("x".into(), ScalarSummary::from_runs(&[1.0]));
        let json = report.to_json_pretty().unwrap();
        let back = EvaluationReport::validate_json(&json).unwrap();
        assert_eq!(back.name, "t");

        // Unknown fields are rejected.
        let corrupted = json.replace("\"runs\"", "\"runz\"");
        assert!(EvaluationReport::validate_json(&corrupted).is_err());
    }

    #[test]
    fn timestamp_stripping_is_deterministic() {
        let a = EvaluationReport::new("t", config_hash("{}"), 1, 1);
        let mut b = EvaluationReport::new("t", config_hash("{}"), 1, 1);
        b.generated_at = a.generated_at.map(|t| t + 1000);
        assert_eq!(
            a.body_without_timestamp().unwrap(),
            b.body_without_timestamp().unwrap()
        );
    }
}
