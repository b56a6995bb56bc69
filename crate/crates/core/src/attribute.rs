//! Labeled attribute datasets built from seed-vector geometry: top-k classes
//! along a direction, thresholded neutral sampling, and stratified splits.

use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};

/// One attribute class: a label plus the row indices that carry it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeClass {
    pub label: String,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Disjoint attribute classes over one embedding space, with an optional
/// train/dev/test assignment per labeled index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledPointSet {
    pub space_ref: String,
    pub classes: Vec<AttributeClass>,
    #[serde(default)]
    pub splits: BTreeMap<usize, Split>,
}

impl LabeledPointSet {
    pub fn new(space_ref: impl Into<String>, classes: Vec<AttributeClass>) -> Result<Self> {
        let set = LabeledPointSet {
            space_ref: space_ref.into(),
            classes,
            splits: BTreeMap::new(),
        };
        set.check_disjoint()?;
        Ok(set)
    }

    fn check_disjoint(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for class in &self.classes {
            for &i in &class.indices {
                if !seen.insert(i) {
                    return Err(Error::InvalidArgument(format!(
                        "index {i} appears in more than one class"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn class(&self, label: &str) -> Option<&AttributeClass> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// All labeled indices paired with their class position.
    pub fn labeled(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (c, class) in self.classes.iter().enumerate() {
            for &i in &class.indices {
                out.push((i, c));
            }
        }
        out
    }

    /// Indices and class positions restricted to one split.
    pub fn split_members(&self, split: Split) -> Vec<(usize, usize)> {
        self.labeled()
            .into_iter()
            .filter(|(i, _)| self.splits.get(i) == Some(&split))
            .collect()
    }

    /// Serialize with tokens instead of row indices.
    pub fn to_json(&self, space: &EmbeddingSpace) -> Result<serde_json::Value> {
        let classes: Vec<serde_json::Value> = self
            .classes
            .iter()
            .map(|c| {
                serde_json::json!({
                    "label": c.label,
                    "tokens": c.indices.iter().map(|&i| space.token(i)).collect::<Vec<_>>(),
                })
            })
            .collect();
        let splits: BTreeMap<String, &Split> = self
            .splits
            .iter()
            .map(|(&i, s)| (space.token(i).to_string(), s))
            .collect();
        Ok(serde_json::json!({
            "space": self.space_ref,
            "classes": classes,
            "splits": splits,
        }))
    }

    pub fn from_json(value: &serde_json::Value, space: &EmbeddingSpace) -> Result<Self> {
        let space_ref = value["space"]
            .as_str()
            .ok_or_else(|| Error::InvalidArgument("dataset json missing 'space'".into()))?
            .to_string();
        let mut classes = Vec::new();
        for cls in value["classes"]
            .as_array()
            .ok_or_else(|| Error::InvalidArgument("dataset json missing 'classes'".into()))?
        {
            let label = cls["label"]
                .as_str()
                .ok_or_else(|| Error::InvalidArgument("class missing 'label'".into()))?;
            let mut indices = Vec::new();
            for tok in cls["tokens"]
                .as_array()
                .ok_or_else(|| Error::InvalidArgument("class missing 'tokens'".into()))?
            {
                let tok = tok.as_str().unwrap_or_default();
                let row = space
                    .row_of(tok)
                    .ok_or_else(|| Error::UnknownToken(tok.to_string()))?;
                indices.push(row);
            }
            classes.push(AttributeClass {
                label: label.to_string(),
                indices,
            });
        }
        let mut set = LabeledPointSet::new(space_ref, classes)?;
        if let Some(splits) = value["splits"].as_object() {
            for (tok, s) in splits {
                let row = space
                    .row_of(tok)
                    .ok_or_else(|| Error::UnknownToken(tok.clone()))?;
                let split: Split = serde_json::from_value(s.clone())?;
                set.splits.insert(row, split);
            }
        }
        Ok(set)
    }
}

/// Difference of two token vectors, e.g. a "he - she" axis. Not normalized.
///
/// Identical tokens yield the zero vector; that is legal but almost always a
/// configuration mistake, so it is logged.
pub fn seed_direction(space: &EmbeddingSpace, positive: &str, negative: &str) -> Result<Array1<f64>> {
    let p = space.vector(positive)?;
    let n = space.vector(negative)?;
    if positive == negative {
        log::warn!("seed_direction called with identical tokens {positive:?}; direction is zero");
    }
    Ok(&p - &n)
}

/// How the neutral-candidate cosine filter treats the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeutralFilter {
    /// Raw signed cosine below the threshold (the literal reading of
    /// "cosine similarity of less than t").
    Signed,
    /// Absolute cosine below the threshold (the stricter variant).
    Absolute,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasDatasetParams {
    /// Points per polar class.
    pub class_k: usize,
    /// Neutral sample size (0 disables the neutral class).
    pub neutral_k: usize,
    /// Cosine threshold for neutral candidates, in (0, 1].
    pub neutral_threshold: f64,
    pub neutral_filter: NeutralFilter,
    pub rng_seed: u64,
}

impl Default for BiasDatasetParams {
    fn default() -> Self {
        BiasDatasetParams {
            class_k: 7500,
            neutral_k: 7500,
            neutral_threshold: 0.3,
            neutral_filter: NeutralFilter::Signed,
            rng_seed: 0,
        }
    }
}

pub const LABEL_PLUS: &str = "plus";
pub const LABEL_MINUS: &str = "minus";
pub const LABEL_NEUTRAL: &str = "neutral";

fn ranked_by_cosine(space: &EmbeddingSpace, dir: &ArrayView1<f64>) -> Result<Vec<(usize, f64)>> {
    let norm = dir.dot(dir).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector("class direction".into()));
    }
    let mut scored: Vec<(usize, f64)> = (0..space.len())
        .map(|i| {
            let row = space.matrix().row(i);
            let rn = row.dot(&row).sqrt();
            let sim = if rn == 0.0 { 0.0 } else { row.dot(dir) / (rn * norm) };
            (i, sim)
        })
        .collect();
    scored.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(scored)
}

/// Build a plus/minus/neutral dataset from two class directions.
///
/// Plus and minus are the top-k tokens by cosine to their direction. A token
/// landing in both preliminary top-k lists is assigned to the side where its
/// cosine is higher, and each class then refills to exactly k from its next
/// nearest candidates, so the classes are disjoint with exact sizes. Neutral
/// is a seeded uniform sample of unlabeled tokens passing the cosine filter
/// against `dir_plus`.
pub fn build_bias_dataset(
    space: &EmbeddingSpace,
    dir_plus: &ArrayView1<f64>,
    dir_minus: &ArrayView1<f64>,
    params: &BiasDatasetParams,
) -> Result<LabeledPointSet> {
    let k = params.class_k;
    if 2 * k + params.neutral_k > space.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {} labeled points from a space of {}",
            2 * k + params.neutral_k,
            space.len()
        )));
    }
    if params.neutral_k > 0 && !(params.neutral_threshold > 0.0 && params.neutral_threshold <= 1.0)
    {
        return Err(Error::InvalidArgument(
            "neutral_threshold must be in (0, 1]".into(),
        ));
    }

    let rank_plus = ranked_by_cosine(space, dir_plus)?;
    let rank_minus = ranked_by_cosine(space, dir_minus)?;
    let cos_plus: HashMap<usize, f64> = rank_plus.iter().cloned().collect();
    let cos_minus: HashMap<usize, f64> = rank_minus.iter().cloned().collect();

    let prelim_plus: HashSet<usize> = rank_plus.iter().take(k).map(|&(i, _)| i).collect();
    let prelim_minus: HashSet<usize> = rank_minus.iter().take(k).map(|&(i, _)| i).collect();

    let mut plus: Vec<usize> = Vec::with_capacity(k);
    let mut minus: Vec<usize> = Vec::with_capacity(k);
    let mut taken: HashSet<usize> = HashSet::new();

    // Contested tokens go to the side with the higher cosine (ties to plus).
    for &i in prelim_plus.union(&prelim_minus) {
        let in_p = prelim_plus.contains(&i);
        let in_m = prelim_minus.contains(&i);
        let to_plus = match (in_p, in_m) {
            (true, false) => true,
            (false, true) => false,
            _ => cos_plus[&i] >= cos_minus[&i],
        };
        if to_plus && plus.len() < k {
            plus.push(i);
            taken.insert(i);
        } else if !to_plus && minus.len() < k {
            minus.push(i);
            taken.insert(i);
        }
    }

    // Refill alternately from each ranking until both classes hold k tokens.
    let mut pp = 0;
    let mut pm = 0;
    while plus.len() < k || minus.len() < k {
        let mut advanced = false;
        if plus.len() < k {
            while pp < rank_plus.len() {
                let i = rank_plus[pp].0;
                pp += 1;
                if !taken.contains(&i) {
                    plus.push(i);
                    taken.insert(i);
                    advanced = true;
                    break;
                }
            }
        }
        if minus.len() < k {
            while pm < rank_minus.len() {
                let i = rank_minus[pm].0;
                pm += 1;
                if !taken.contains(&i) {
                    minus.push(i);
                    taken.insert(i);
                    advanced = true;
                    break;
                }
            }
        }
        if !advanced && (plus.len() < k || minus.len() < k) {
            return Err(Error::NotEnoughCandidates(
                "ran out of tokens while filling polar classes".into(),
            ));
        }
    }
    plus.sort_unstable();
    minus.sort_unstable();

    let mut classes = vec![
        AttributeClass {
            label: LABEL_MINUS.to_string(),
            indices: minus,
        },
        AttributeClass {
            label: LABEL_PLUS.to_string(),
            indices: plus,
        },
    ];

    if params.neutral_k > 0 {
        let mut candidates: Vec<usize> = (0..space.len())
            .filter(|i| !taken.contains(i))
            .filter(|i| {
                let c = cos_plus[i];
                match params.neutral_filter {
                    NeutralFilter::Signed => c < params.neutral_threshold,
                    NeutralFilter::Absolute => c.abs() < params.neutral_threshold,
                }
            })
            .collect();
        if candidates.len() < params.neutral_k {
            return Err(Error::NotEnoughCandidates(format!(
                "{} neutral candidates under threshold {}, need {}",
                candidates.len(),
                params.neutral_threshold,
                params.neutral_k
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        candidates.shuffle(&mut rng);
        let mut neutral: Vec<usize> = candidates.into_iter().take(params.neutral_k).collect();
        neutral.sort_unstable();
        classes.push(AttributeClass {
            label: LABEL_NEUTRAL.to_string(),
            indices: neutral,
        });
    }

    LabeledPointSet::new(space.name.clone(), classes)
}

/// Stratified train/dev/test assignment, deterministic under the seed.
///
/// Within each class, counts follow the fractions by largest remainder, so
/// every class deviates from exact proportionality by less than one point.
pub fn split(
    dataset: &LabeledPointSet,
    fractions: (f64, f64, f64),
    rng_seed: u64,
) -> Result<LabeledPointSet> {
    let total = fractions.0 + fractions.1 + fractions.2;
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions sum to {total}, expected 1"
        )));
    }
    if fractions.0 < 0.0 || fractions.1 < 0.0 || fractions.2 < 0.0 {
        return Err(Error::InvalidArgument("split fractions must be non-negative".into()));
    }
    let mut out = dataset.clone();
    out.splits.clear();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let fracs = [fractions.0, fractions.1, fractions.2];
    let order = [Split::Train, Split::Dev, Split::Test];

    for class in &dataset.classes {
        let mut idx = class.indices.clone();
        idx.shuffle(&mut rng);
        let n = idx.len();

        // Largest-remainder apportionment of n into the three buckets.
        let raw: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
        let mut rem: usize = n - counts.iter().sum::<usize>();
        let mut by_frac: Vec<usize> = (0..3).collect();
        by_frac.sort_by(|&a, &b| {
            let fa = raw[a] - raw[a].floor();
            let fb = raw[b] - raw[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &slot in &by_frac {
            if rem == 0 {
                break;
            }
            counts[slot] += 1;
            rem -= 1;
        }

        let mut cursor = 0;
        for (slot, &count) in counts.iter().enumerate() {
            for &i in &idx[cursor..cursor + count] {
                out.splits.insert(i, order[slot]);
            }
            cursor += count;
        }
    }
    Ok(out)
}
