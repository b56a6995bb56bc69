//! Bias and space-stability metrics: association tests over cosine
//! similarities, rank correlation against human similarity judgments,
//! neighborhood churn, neighborhood bias share, and true-positive-rate gaps
//! over downstream predictions.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::embeddings::{nearest_neighbors, EmbeddingSpace, Query};
use crate::error::{Error, Result};
use crate::stats;

/// Word association test: two target groups scored against two attribute
/// groups by differential cosine similarity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatTest {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "targets_X")]
    pub targets_x: Vec<String>,
    #[serde(rename = "targets_Y")]
    pub targets_y: Vec<String>,
    #[serde(rename = "attributes_A")]
    pub attributes_a: Vec<String>,
    #[serde(rename = "attributes_B")]
    pub attributes_b: Vec<String>,
}

impl WeatTest {
    pub fn validate(&self) -> Result<()> {
        for (label, list) in [
            ("targets_X", &self.targets_x),
            ("targets_Y", &self.targets_y),
            ("attributes_A", &self.attributes_a),
            ("attributes_B", &self.attributes_b),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidArgument(format!("{label} is empty")));
            }
        }
        let x: HashSet<&String> = self.targets_x.iter().collect();
        if self.targets_y.iter().any(|t| x.contains(t)) {
            return Err(Error::InvalidArgument("token in both targets_X and targets_Y".into()));
        }
        let a: HashSet<&String> = self.attributes_a.iter().collect();
        if self.attributes_b.iter().any(|t| a.contains(t)) {
            return Err(Error::InvalidArgument(
                "token in both attributes_A and attributes_B".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::io(path.as_ref().display().to_string(), e))?;
        let test: WeatTest = serde_json::from_str(&text)?;
        test.validate()?;
        Ok(test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingTokenPolicy {
    /// Drop missing tokens and surface the counts.
    Skip,
    /// Fail on the first missing token.
    Fail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatResult {
    pub name: String,
    /// Normalized effect size: (mean_X s - mean_Y s) / pstdev_{X u Y} s.
    pub effect_size: f64,
    /// Unnormalized numerator mean_X s - mean_Y s.
    pub raw: f64,
    pub dropped_tokens: usize,
    pub used_x: usize,
    pub used_y: usize,
    pub used_a: usize,
    pub used_b: usize,
}

fn present_vectors<'a>(
    space: &'a EmbeddingSpace,
    tokens: &[String],
    policy: MissingTokenPolicy,
    dropped: &mut usize,
) -> Result<Vec<ArrayView1<'a, f64>>> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        match space.row_of(t) {
            Some(row) => out.push(space.matrix().row(row)),
            None => match policy {
                MissingTokenPolicy::Skip => *dropped += 1,
                MissingTokenPolicy::Fail => return Err(Error::UnknownToken(t.clone())),
            },
        }
    }
    Ok(out)
}

fn cosine_raw(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Differential association of the targets with the attributes.
pub fn weat_effect_size(
    space: &EmbeddingSpace,
    test: &WeatTest,
    policy: MissingTokenPolicy,
) -> Result<WeatResult> {
    test.validate()?;
    let mut dropped = 0usize;
    let xs = present_vectors(space, &test.targets_x, policy, &mut dropped)?;
    let ys = present_vectors(space, &test.targets_y, policy, &mut dropped)?;
    let avs = present_vectors(space, &test.attributes_a, policy, &mut dropped)?;
    let bvs = present_vectors(space, &test.attributes_b, policy, &mut dropped)?;
    if xs.is_empty() || ys.is_empty() || avs.is_empty() || bvs.is_empty() {
        return Err(Error::InvalidArgument(
            "a WEAT group lost all tokens to the vocabulary".into(),
        ));
    }

    let assoc = |w: &ArrayView1<f64>| -> f64 {
        let ma = avs.iter().map(|a| cosine_raw(w, a)).sum::<f64>() / avs.len() as f64;
        let mb = bvs.iter().map(|b| cosine_raw(w, b)).sum::<f64>() / bvs.len() as f64;
        ma - mb
    };

    let sx: Vec<f64> = xs.iter().map(assoc).collect();
    let sy: Vec<f64> = ys.iter().map(assoc).collect();
    let raw = stats::mean(&sx) - stats::mean(&sy);
    let pooled: Vec<f64> = sx.iter().chain(sy.iter()).cloned().collect();
    let sd = stats::pstdev(&pooled);
    if sd < 1e-15 {
        return Err(Error::InvalidArgument(
            "zero standard deviation of association scores".into(),
        ));
    }
    Ok(WeatResult {
        name: test.name.clone(),
        effect_size: raw / sd,
        raw,
        dropped_tokens: dropped,
        used_x: xs.len(),
        used_y: ys.len(),
        used_a: avs.len(),
        used_b: bvs.len(),
    })
}

/// Word-pair similarity benchmark with human scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityBenchmark {
    pub name: String,
    /// (token, token, human score) triples.
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityBenchmark {
    /// Parse tab-separated `tok1 \t tok2 \t score` lines.
    pub fn from_tsv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse("<tsv>", lineno + 1, "expected 3 tab-separated fields"));
            }
            let score: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse("<tsv>", lineno + 1, "bad score"))?;
            if !score.is_finite() {
                return Err(Error::parse("<tsv>", lineno + 1, "non-finite score"));
            }
            pairs.push((fields[0].to_string(), fields[1].to_string(), score));
        }
        Ok(SimilarityBenchmark {
            name: name.into(),
            pairs,
        })
    }

    pub fn from_tsv_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::io(path.as_ref().display().to_string(), e))?;
        let name = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "benchmark".into());
        Self::from_tsv(name, &text)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub name: String,
    pub rho: f64,
    pub used_pairs: usize,
    pub dropped_pairs: usize,
}

/// Average ranks with ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    stats::pearson(&rx, &ry)
}

/// Rank correlation between cosine similarity and the benchmark's human
/// scores. Pairs with tokens missing from the vocabulary are dropped and
/// counted, never silently ignored.
pub fn similarity_correlation(
    space: &EmbeddingSpace,
    benchmark: &SimilarityBenchmark,
) -> Result<SimilarityResult> {
    let mut cosines = Vec::new();
    let mut humans = Vec::new();
    let mut dropped = 0usize;
    for (a, b, score) in &benchmark.pairs {
        match (space.row_of(a), space.row_of(b)) {
            (Some(ra), Some(rb)) => {
                cosines.push(cosine_raw(&space.matrix().row(ra), &space.matrix().row(rb)));
                humans.push(*score);
            }
            _ => dropped += 1,
        }
    }
    if cosines.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {} usable benchmark pairs",
            cosines.len()
        )));
    }
    Ok(SimilarityResult {
        name: benchmark.name.clone(),
        rho: spearman(&cosines, &humans),
        used_pairs: cosines.len(),
        dropped_pairs: dropped,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborDiff {
    pub token: String,
    pub entering: Vec<String>,
    pub leaving: Vec<String>,
    pub before: Vec<(String, f64)>,
    pub after: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Total neighbor slots that changed, summed over tokens.
    pub changed: usize,
    /// k times the number of scored tokens.
    pub total_slots: usize,
    pub per_token: Vec<NeighborDiff>,
    pub missing_tokens: Vec<String>,
}

/// Compare the top-k neighborhoods of `tokens` before and after a
/// transformation of the space.
pub fn neighbor_stability(
    before: &EmbeddingSpace,
    after: &EmbeddingSpace,
    tokens: &[String],
    k: usize,
) -> Result<StabilityReport> {
    let mut report = StabilityReport {
        changed: 0,
        total_slots: 0,
        per_token: Vec::new(),
        missing_tokens: Vec::new(),
    };
    let empty = HashSet::new();
    for token in tokens {
        if before.row_of(token).is_none() || after.row_of(token).is_none() {
            report.missing_tokens.push(token.clone());
            continue;
        }
        if k == 0 {
            report.per_token.push(NeighborDiff {
                token: token.clone(),
                entering: vec![],
                leaving: vec![],
                before: vec![],
                after: vec![],
            });
            continue;
        }
        let nb = nearest_neighbors(before, Query::Token(token), k, &empty)?;
        let na = nearest_neighbors(after, Query::Token(token), k, &empty)?;
        let set_b: HashSet<&String> = nb.neighbors.iter().map(|(t, _)| t).collect();
        let set_a: HashSet<&String> = na.neighbors.iter().map(|(t, _)| t).collect();
        let leaving: Vec<String> = nb
            .neighbors
            .iter()
            .filter(|(t, _)| !set_a.contains(t))
            .map(|(t, _)| t.clone())
            .collect();
        let entering: Vec<String> = na
            .neighbors
            .iter()
            .filter(|(t, _)| !set_b.contains(t))
            .map(|(t, _)| t.clone())
            .collect();
        report.changed += leaving.len();
        report.total_slots += k;
        report.per_token.push(NeighborDiff {
            token: token.clone(),
            entering,
            leaving,
            before: nb.neighbors,
            after: na.neighbors,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasByNeighborReport {
    /// Mean percentage (0-100) of each probe token's k nearest neighbors in
    /// the debiased space that leaned positive in the original space. 50 is
    /// the fully-debiased target.
    pub percentage: f64,
    pub per_token: Vec<(String, f64)>,
    /// Set when the bias direction is orthogonal to the whole vocabulary.
    pub degenerate: bool,
    pub missing_tokens: Vec<String>,
}

/// Share of post-debias neighborhoods that carried positive bias originally.
///
/// A token counts as positively biased iff its original-space cosine to the
/// bias direction is strictly positive; an exactly zero cosine is not
/// biased.
pub fn bias_by_neighbor(
    original: &EmbeddingSpace,
    debiased: &EmbeddingSpace,
    probe_tokens: &[String],
    bias_direction: &ArrayView1<f64>,
    k: usize,
) -> Result<BiasByNeighborReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let norm = bias_direction.dot(bias_direction).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector("bias direction".into()));
    }
    let mut biased = vec![false; original.len()];
    let mut any_signal = false;
    for (i, row) in original.matrix().rows().into_iter().enumerate() {
        let c = cosine_raw(&row, bias_direction);
        if c.abs() > 1e-12 {
            any_signal = true;
        }
        biased[i] = c > 0.0;
    }

    let empty = HashSet::new();
    let mut per_token = Vec::new();
    let mut missing = Vec::new();
    for token in probe_tokens {
        if debiased.row_of(token).is_none() {
            missing.push(token.clone());
            continue;
        }
        let neighbors = nearest_neighbors(debiased, Query::Token(token), k, &empty)?;
        let mut hits = 0usize;
        let mut counted = 0usize;
        for (t, _) in &neighbors.neighbors {
            if let Some(row) = original.row_of(t) {
                counted += 1;
                if biased[row] {
                    hits += 1;
                }
            }
        }
        if counted > 0 {
            per_token.push((token.clone(), 100.0 * hits as f64 / counted as f64));
        }
    }
    if per_token.is_empty() {
        return Err(Error::InvalidArgument("no scorable probe tokens".into()));
    }
    let percentage =
        per_token.iter().map(|(_, p)| p).sum::<f64>() / per_token.len() as f64;
    Ok(BiasByNeighborReport {
        percentage,
        per_token,
        degenerate: !any_signal,
        missing_tokens: missing,
    })
}

/// One downstream prediction with its group tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub true_label: String,
    pub predicted_label: String,
    pub group: String,
}

impl PredictionRecord {
    /// Parse CSV with the header `true,predicted,group`.
    pub fn parse_csv(text: &str) -> Result<Vec<PredictionRecord>> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("<csv>", 0, "empty file"))?;
        if header.trim() != "true,predicted,group" {
            return Err(Error::parse(
                "<csv>",
                1,
                "expected header 'true,predicted,group'",
            ));
        }
        let mut out = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::parse("<csv>", lineno + 1, "expected 3 fields"));
            }
            out.push(PredictionRecord {
                true_label: fields[0].trim().to_string(),
                predicted_label: fields[1].trim().to_string(),
                group: fields[2].trim().to_string(),
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TprGapReport {
    pub accuracy: f64,
    pub focus_group: String,
    /// Per-label TPR gap: focus-group TPR minus other-group TPR.
    pub per_label_gap: BTreeMap<String, f64>,
    pub gap_rms: f64,
    /// Correlation between the per-label gap and the focus group's share of
    /// each label.
    pub correlation: f64,
    /// Labels excluded for lacking support in one of the groups.
    pub excluded: Vec<String>,
}

/// True-positive-rate gap suite over downstream predictions.
///
/// `group_rates` declares the label set and the focus group's share per
/// label; records with labels outside it are an error.
pub fn tpr_gap_suite(
    records: &[PredictionRecord],
    group_rates: &BTreeMap<String, f64>,
    focus_group: &str,
    correlation: CorrelationKind,
) -> Result<TprGapReport> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no prediction records".into()));
    }
    let groups: Vec<String> = {
        let mut set: Vec<String> = records.iter().map(|r| r.group.clone()).collect();
        set.sort();
        set.dedup();
        set
    };
    if groups.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected exactly 2 groups, found {groups:?}"
        )));
    }
    if !groups.iter().any(|g| g == focus_group) {
        return Err(Error::InvalidArgument(format!(
            "focus group {focus_group:?} absent from records"
        )));
    }
    let other_group = groups.iter().find(|g| *g != focus_group).unwrap().clone();

    for r in records {
        for label in [&r.true_label, &r.predicted_label] {
            if !group_rates.contains_key(label) {
                return Err(Error::InvalidArgument(format!(
                    "label {label:?} not in the declared label set"
                )));
            }
        }
    }

    let mut correct = 0usize;
    // (total, correct) keyed by (label, is_focus_group).
    let mut support: BTreeMap<(String, bool), (usize, usize)> = BTreeMap::new();
    for r in records {
        let is_focus = r.group == focus_group;
        let entry = support.entry((r.true_label.clone(), is_focus)).or_insert((0, 0));
        entry.0 += 1;
        if r.predicted_label == r.true_label {
            entry.1 += 1;
            correct += 1;
        }
    }

    let mut per_label_gap = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut gaps = Vec::new();
    let mut rates = Vec::new();
    for label in group_rates.keys() {
        let focus = support.get(&(label.clone(), true));
        let other = support.get(&(label.clone(), false));
        match (focus, other) {
            (Some(&(nf, cf)), Some(&(no, co))) if nf > 0 && no > 0 => {
                let gap = cf as f64 / nf as f64 - co as f64 / no as f64;
                per_label_gap.insert(label.clone(), gap);
                gaps.push(gap);
                rates.push(group_rates[label]);
            }
            _ => excluded.push(label.clone()),
        }
    }
    if gaps.is_empty() {
        return Err(Error::InvalidArgument(
            "no label has support in both groups".into(),
        ));
    }

    let gap_rms = (gaps.iter().map(|g| g * g).sum::<f64>() / gaps.len() as f64).sqrt();
    let corr = match correlation {
        CorrelationKind::Pearson => stats::pearson(&gaps, &rates),
        CorrelationKind::Spearman => spearman(&gaps, &rates),
    };
    let _ = other_group;
    Ok(TprGapReport {
        accuracy: correct as f64 / records.len() as f64,
        focus_group: focus_group.to_string(),
        per_label_gap,
        gap_rms,
        correlation: corr,
        excluded,
    })
}
