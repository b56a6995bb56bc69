//! Experiment configuration: a TOML file describing data sources, the
//! strategy sequence, and metric selection, with flag overrides layered on
//! top by the commands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use debias_core::attribute::NeutralFilter;
use debias_core::probes::TrainerKind;

/// Environment variable holding the default data directory for relative
/// paths that do not resolve against the working directory.
pub const DATA_DIR_ENV: &str = "DEBIAS_DATA_DIR";

/// Resolve a possibly relative path against the working directory first and
/// the `DEBIAS_DATA_DIR` directory second.
pub fn resolve_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    if let Ok(root) = std::env::var(DATA_DIR_ENV) {
        let candidate = Path::new(&root).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

/// One element of a strategy sequence such as `MP+R34` or `INLP8+R27`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyElement {
    Mp,
    Tmp,
    Inlp { max_iters: Option<usize> },
    Random { count: usize },
}

/// Parse a composed strategy spec: elements joined by `+`, each one of
/// `MP`, `TMP`, `INLP[n]`, `R[n]` / `RANDOM[n]`.
pub fn parse_strategy(spec: &str) -> Result<Vec<StrategyElement>> {
    let mut elements = Vec::new();
    for raw in spec.split('+') {
        let token = raw.trim().to_ascii_uppercase();
        if token.is_empty() {
            bail!("empty strategy element in {spec:?}");
        }
        let (head, digits) = split_trailing_digits(&token);
        let parsed_count = || -> Result<Option<usize>> {
            if digits.is_empty() {
                Ok(None)
            } else {
                Ok(Some(digits.parse::<usize>()?))
            }
        };
        match head {
            "MP" => {
                if !digits.is_empty() {
                    bail!("MP takes no count (got {token:?})");
                }
                elements.push(StrategyElement::Mp);
            }
            "TMP" => {
                if !digits.is_empty() {
                    bail!("TMP takes no count (got {token:?})");
                }
                elements.push(StrategyElement::Tmp);
            }
            "INLP" => elements.push(StrategyElement::Inlp {
                max_iters: parsed_count()?,
            }),
            "R" | "RANDOM" => elements.push(StrategyElement::Random {
                count: parsed_count()?.unwrap_or(1),
            }),
            other => bail!("unknown strategy element {other:?} in {spec:?}"),
        }
    }
    if elements.is_empty() {
        bail!("strategy spec {spec:?} has no elements");
    }
    Ok(elements)
}

fn split_trailing_digits(token: &str) -> (&str, &str) {
    let split = token
        .char_indices()
        .find(|(_, c)| c.is_ascii_digit())
        .map(|(i, _)| i)
        .unwrap_or(token.len());
    (&token[..split], &token[split..])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Text embedding file.
    pub embeddings: PathBuf,
    #[serde(default)]
    pub limit: Option<usize>,
    /// Pre-built dataset JSON (tokens per class plus splits).
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    /// Build the dataset from seed tokens instead.
    #[serde(default)]
    pub build: Option<BuildConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub plus_token: String,
    pub minus_token: String,
    pub class_k: usize,
    #[serde(default)]
    pub neutral_k: usize,
    #[serde(default = "default_threshold")]
    pub neutral_threshold: f64,
    #[serde(default = "default_filter")]
    pub neutral_filter: NeutralFilter,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default)]
    pub split_seed: u64,
}

fn default_threshold() -> f64 {
    0.3
}

fn default_filter() -> NeutralFilter {
    NeutralFilter::Signed
}

fn default_split() -> [f64; 3] {
    [0.65, 0.10, 0.25]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    /// Composed sequence, e.g. "MP", "MP+R34", "INLP8+R27".
    pub spec: String,
    /// Anchor class for multiclass mean projection.
    #[serde(default)]
    pub anchor: Option<String>,
    #[serde(default = "default_trainer")]
    pub trainer: TrainerKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_stop_margin")]
    pub stop_margin: f64,
    #[serde(default)]
    pub orthogonalize: bool,
    #[serde(default = "default_inlp_iters")]
    pub inlp_max_iters: usize,
    /// "exact2d" or "approx".
    #[serde(default = "default_tmp_mode")]
    pub tmp_mode: String,
}

fn default_trainer() -> TrainerKind {
    TrainerKind::Hinge
}

fn default_lambda() -> f64 {
    1e-3
}

fn default_epochs() -> usize {
    50
}

fn default_stop_margin() -> f64 {
    0.02
}

fn default_inlp_iters() -> usize {
    35
}

fn default_tmp_mode() -> String {
    "approx".into()
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            spec: "MP".into(),
            anchor: None,
            trainer: default_trainer(),
            lambda: default_lambda(),
            epochs: default_epochs(),
            stop_margin: default_stop_margin(),
            orthogonalize: false,
            inlp_max_iters: default_inlp_iters(),
            tmp_mode: default_tmp_mode(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Similarity benchmark TSV files.
    #[serde(default)]
    pub similarity: Vec<PathBuf>,
    /// Association test JSON files.
    #[serde(default)]
    pub weat: Vec<PathBuf>,
    /// Track linear-probe dev accuracy per iteration.
    #[serde(default)]
    pub guarding: bool,
    /// Cluster the labeled test split and score V-measure at the end.
    #[serde(default)]
    pub clustering: bool,
    /// One token per line; neighborhood churn is scored over these.
    #[serde(default)]
    pub neighbor_tokens: Option<PathBuf>,
    #[serde(default = "default_neighbor_k")]
    pub neighbor_k: usize,
    /// One token per line; neighborhood bias share is scored over these.
    #[serde(default)]
    pub bias_tokens: Option<PathBuf>,
    #[serde(default = "default_bias_k")]
    pub bias_k: usize,
}

fn default_neighbor_k() -> usize {
    3
}

fn default_bias_k() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub data: DataConfig,
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_runs() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be >= 1");
        }
        parse_strategy(&self.strategy.spec)?;
        if self.strategy.tmp_mode != "approx" && self.strategy.tmp_mode != "exact2d" {
            bail!("tmp_mode must be 'approx' or 'exact2d'");
        }
        Ok(())
    }

    /// Canonical JSON used for the provenance hash.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_grammar() {
        assert_eq!(parse_strategy("MP").unwrap(), vec![StrategyElement::Mp]);
        assert_eq!(
            parse_strategy("MP+R34").unwrap(),
            vec![StrategyElement::Mp, StrategyElement::Random { count: 34 }]
        );
        assert_eq!(
            parse_strategy("INLP8+R27").unwrap(),
            vec![
                StrategyElement::Inlp { max_iters: Some(8) },
                StrategyElement::Random { count: 27 }
            ]
        );
        assert_eq!(
            parse_strategy("random35").unwrap(),
            vec![StrategyElement::Random { count: 35 }]
        );
        assert_eq!(
            parse_strategy("TMP+INLP").unwrap(),
            vec![
                StrategyElement::Tmp,
                StrategyElement::Inlp { max_iters: None }
            ]
        );
        assert!(parse_strategy("MP3").is_err());
        assert!(parse_strategy("XYZ").is_err());
        assert!(parse_strategy("").is_err());
    }

    #[test]
    fn config_round_trip_with_defaults() {
        let text = r#"
            name = "demo"
            rng_seed = 7
            runs = 3

            [data]
            embeddings = "space.txt"

            [data.build]
            plus_token = "he"
            minus_token = "she"
            class_k = 100
            neutral_k = 50

            [strategy]
            spec = "MP+R2"

            [metrics]
            similarity = ["bench.tsv"]
            guarding = true
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.strategy.epochs, 50);
        let build = cfg.data.build.as_ref().unwrap();
        assert_eq!(build.split, [0.65, 0.10, 0.25]);
        assert!((build.neutral_threshold - 0.3).abs() < 1e-12);

        // Unknown keys are rejected rather than silently ignored.
        let bad = text.replace("guarding = true", "guardinng = true");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }
}
