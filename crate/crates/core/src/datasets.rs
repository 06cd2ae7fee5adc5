//! Dataset-variant assembly, stratified splits, K-fold partitioning, and
//! pool merging, all deterministic functions of (input ids, seed).
//!
//! The three negative-set variants share one positive set: LN keeps only
//! labeled negatives, LN+XN adds every extracted negative, and LN+XN* adds
//! only the extracted negatives that survived disambiguation filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{map_bias_label, CorpusError, Excerpt, Origin};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("xn_star id `{id}` is not present in the extracted-negative set")]
    UnknownXnStarId { id: String },
    #[error("id `{id}` appears in more than one input pool")]
    IdCollision { id: String },
    #[error("duplicate id `{id}` in split input")]
    DuplicateId { id: String },
    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    InvalidFractions((f64, f64, f64)),
    #[error("class `{label}` has {size} members, too small to appear in every split")]
    ClassTooSmall { label: String, size: usize },
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("k={k} exceeds the minority class count {minority}")]
    KTooLarge { k: usize, minority: usize },
    #[error("split input is empty")]
    Empty,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse manifest {path}: {message}")]
    Parse { path: String, message: String },
}

/// The negative-set composition of a training dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Ln,
    LnXn,
    LnXnStar,
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VariantKind::Ln => "ln",
            VariantKind::LnXn => "ln_xn",
            VariantKind::LnXnStar => "ln_xn_star",
        };
        f.write_str(s)
    }
}

/// Id-level membership of one dataset variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetVariant {
    pub kind: VariantKind,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    pub provenance: BTreeMap<String, Origin>,
}

impl DatasetVariant {
    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.positives.iter().chain(self.negatives.iter())
    }

    /// (id, is_positive) pairs in positives-then-negatives order.
    pub fn labeled_ids(&self) -> Vec<(String, bool)> {
        self.positives
            .iter()
            .map(|id| (id.clone(), true))
            .chain(self.negatives.iter().map(|id| (id.clone(), false)))
            .collect()
    }
}

/// Assemble a variant from labeled excerpts, the extracted negatives, and
/// the filtered id set. The positive set is identical for every kind.
pub fn build_variant(
    kind: VariantKind,
    labeled: &[Excerpt],
    xn: &[Excerpt],
    xn_star_ids: &BTreeSet<String>,
) -> Result<DatasetVariant, DatasetError> {
    let xn_ids: BTreeSet<&str> = xn.iter().map(|e| e.id.as_str()).collect();
    for id in xn_star_ids {
        if !xn_ids.contains(id.as_str()) {
            return Err(DatasetError::UnknownXnStarId { id: id.clone() });
        }
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for e in labeled.iter().chain(xn) {
        if !seen.insert(e.id.as_str()) {
            return Err(DatasetError::IdCollision { id: e.id.clone() });
        }
    }
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut provenance = BTreeMap::new();
    for e in labeled {
        if map_bias_label(e)?.is_positive() {
            positives.push(e.id.clone());
        } else {
            negatives.push(e.id.clone());
        }
        provenance.insert(e.id.clone(), e.origin);
    }
    match kind {
        VariantKind::Ln => {}
        VariantKind::LnXn => {
            for e in xn {
                negatives.push(e.id.clone());
                provenance.insert(e.id.clone(), e.origin);
            }
        }
        VariantKind::LnXnStar => {
            for e in xn {
                if xn_star_ids.contains(&e.id) {
                    negatives.push(e.id.clone());
                    provenance.insert(e.id.clone(), e.origin);
                }
            }
        }
    }
    Ok(DatasetVariant {
        kind,
        positives,
        negatives,
        provenance,
    })
}

/// Train/validation/test membership under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: (f64, f64, f64),
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub stratify_key: String,
}

impl SplitManifest {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.70, 0.15, 0.15);

/// Derive an independent sub-seed for a named stream of randomness.
fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update([0x1f]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Largest-remainder allocation of `n` seats to `weights`. Remainder ties
/// break toward the lower index.
fn largest_remainder(n: usize, weights: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).expect("finite remainders").then(a.cmp(&b))
    });
    for &idx in order.iter().take(n - assigned) {
        alloc[idx] += 1;
    }
    alloc
}

fn validate_fractions(fractions: (f64, f64, f64)) -> Result<(), DatasetError> {
    let (a, b, c) = fractions;
    let sum = a + b + c;
    if a <= 0.0 || b <= 0.0 || c <= 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidFractions(fractions));
    }
    Ok(())
}

fn check_unique_ids(items: &[(String, bool)]) -> Result<(), DatasetError> {
    let mut seen = BTreeSet::new();
    for (id, _) in items {
        if !seen.insert(id.as_str()) {
            return Err(DatasetError::DuplicateId { id: id.clone() });
        }
    }
    Ok(())
}

fn class_partition(items: &[(String, bool)]) -> (Vec<String>, Vec<String>) {
    let mut negatives = Vec::new();
    let mut positives = Vec::new();
    for (id, label) in items {
        if *label {
            positives.push(id.clone());
        } else {
            negatives.push(id.clone());
        }
    }
    (negatives, positives)
}

/// Stratified split with per-class shuffling under the seed and
/// largest-remainder allocation. Errors when a class would round to zero in
/// any split; that requires a class size of at least 5 under 70-15-15.
pub fn stratified_split(
    items: &[(String, bool)],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitManifest, DatasetError> {
    validate_fractions(fractions)?;
    if items.is_empty() {
        return Err(DatasetError::Empty);
    }
    check_unique_ids(items)?;
    let (negatives, positives) = class_partition(items);
    let weights = [fractions.0, fractions.1, fractions.2];
    let mut manifest = SplitManifest {
        seed,
        fractions,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        stratify_key: "label".into(),
    };
    for (class_name, mut ids) in [("negative", negatives), ("positive", positives)] {
        if ids.is_empty() {
            return Err(DatasetError::ClassTooSmall {
                label: class_name.into(),
                size: 0,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["split", class_name]));
        ids.shuffle(&mut rng);
        let alloc = largest_remainder(ids.len(), &weights);
        if alloc.iter().any(|&n| n == 0) {
            return Err(DatasetError::ClassTooSmall {
                label: class_name.into(),
                size: ids.len(),
            });
        }
        let mut cursor = 0;
        for (split, &take) in [&mut manifest.train, &mut manifest.val, &mut manifest.test]
            .into_iter()
            .zip(&alloc)
        {
            split.extend(ids[cursor..cursor + take].iter().cloned());
            cursor += take;
        }
    }
    Ok(manifest)
}

/// Stratified K-fold partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<String>>,
}

/// Stratified folds: disjoint, covering, sizes within one of each other,
/// per-fold class counts within one sample of exact proportionality.
pub fn kfold_partition(
    items: &[(String, bool)],
    k: usize,
    seed: u64,
) -> Result<FoldPlan, DatasetError> {
    if k < 2 {
        return Err(DatasetError::KTooSmall(k));
    }
    check_unique_ids(items)?;
    let (negatives, positives) = class_partition(items);
    let minority = negatives.len().min(positives.len());
    if k > minority {
        return Err(DatasetError::KTooLarge { k, minority });
    }
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    // Extras continue round-robin across classes so fold sizes stay within
    // one of each other overall.
    let mut extra_cursor = 0usize;
    for (class_name, mut ids) in [("negative", negatives), ("positive", positives)] {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["kfold", class_name]));
        ids.shuffle(&mut rng);
        let base = ids.len() / k;
        let extras = ids.len() % k;
        let mut counts = vec![base; k];
        for i in 0..extras {
            counts[(extra_cursor + i) % k] += 1;
        }
        extra_cursor = (extra_cursor + extras) % k;
        let mut cursor = 0;
        for (fold, &take) in folds.iter_mut().zip(&counts) {
            fold.extend(ids[cursor..cursor + take].iter().cloned());
            cursor += take;
        }
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Independent per-pool splits concatenated split-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedSplits {
    pub manual: SplitManifest,
    pub synthetic: Option<SplitManifest>,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Split the manual and synthetic pools independently, then concatenate the
/// corresponding splits. An empty synthetic pool yields the manual splits
/// unchanged, which expresses the manual-only ablation.
pub fn merge_pools(
    manual: &[(String, bool)],
    synthetic: &[(String, bool)],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<MergedSplits, DatasetError> {
    let manual_ids: BTreeSet<&str> = manual.iter().map(|(id, _)| id.as_str()).collect();
    for (id, _) in synthetic {
        if manual_ids.contains(id.as_str()) {
            return Err(DatasetError::IdCollision { id: id.clone() });
        }
    }
    let manual_split = stratified_split(manual, fractions, derive_seed(seed, &["pool", "manual"]))?;
    let synthetic_split = if synthetic.is_empty() {
        None
    } else {
        Some(stratified_split(
            synthetic,
            fractions,
            derive_seed(seed, &["pool", "synthetic"]),
        )?)
    };
    let mut merged = MergedSplits {
        train: manual_split.train.clone(),
        val: manual_split.val.clone(),
        test: manual_split.test.clone(),
        manual: manual_split,
        synthetic: synthetic_split,
    };
    if let Some(s) = &merged.synthetic {
        merged.train.extend(s.train.iter().cloned());
        merged.val.extend(s.val.iter().cloned());
        merged.test.extend(s.test.iter().cloned());
    }
    Ok(merged)
}

/// Content hash of one excerpt, for corpus-drift detection.
pub fn excerpt_content_hash(e: &Excerpt) -> String {
    let canonical = serde_json::to_string(e).expect("excerpt serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(digest)
}

/// Hash of the whole corpus: per-excerpt hashes folded in id order.
pub fn corpus_content_hash(excerpts: &[Excerpt]) -> String {
    let mut by_id: Vec<(&str, String)> = excerpts
        .iter()
        .map(|e| (e.id.as_str(), excerpt_content_hash(e)))
        .collect();
    by_id.sort();
    let mut hasher = Sha256::new();
    for (id, h) in by_id {
        hasher.update(id.as_bytes());
        hasher.update([0x1f]);
        hasher.update(h.as_bytes());
        hasher.update([0x0a]);
    }
    hex::encode(hasher.finalize())
}

/// Either a holdout split or a fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Partition {
    Split(SplitManifest),
    Kfold(FoldPlan),
}

const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// The persisted manifest: variant membership, partition, and the content
/// hashes that let later runs detect corpus drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub seed: u64,
    pub variant: VariantKind,
    pub partition: Partition,
    pub corpus_hash: String,
    pub excerpt_hashes: BTreeMap<String, String>,
}

impl DatasetManifest {
    pub fn new(
        seed: u64,
        variant: VariantKind,
        partition: Partition,
        excerpts: &[Excerpt],
    ) -> Self {
        let excerpt_hashes = excerpts
            .iter()
            .map(|e| (e.id.clone(), excerpt_content_hash(e)))
            .collect();
        DatasetManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            variant,
            partition,
            corpus_hash: corpus_content_hash(excerpts),
            excerpt_hashes,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n").map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let raw = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let manifest: DatasetManifest =
            serde_json::from_str(&raw).map_err(|e| DatasetError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(DatasetError::Parse {
                path: path.display().to_string(),
                message: format!("unsupported schema version {}", manifest.schema_version),
            });
        }
        Ok(manifest)
    }
}
