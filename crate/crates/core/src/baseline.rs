//! Native TF-IDF + logistic-regression binary text classifier.
//!
//! Training is full-batch gradient descent from zero initialization, so a
//! fixed input order reproduces bit-identical weights on every run. The
//! smoothed idf formula is `ln((1 + N) / (1 + df)) + 1` and document vectors
//! are L2-normalized term-count-times-idf.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::token_strings;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot fit a vocabulary on an empty text list")]
    NoTexts,
    #[error("vocabulary is empty after the min_df={min_df} filter")]
    EmptyVocabulary { min_df: usize },
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("training needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("feature and label counts differ ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("vector dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("threshold must lie strictly between 0 and 1")]
    InvalidThreshold,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse model file {path}: {message}")]
    Parse { path: String, message: String },
}

/// Token index and smoothed inverse document frequencies fitted on training
/// text only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVocabulary {
    /// Tokens in index order; indices are dense 0..V-1.
    tokens: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
    idf: Vec<f64>,
    min_df: usize,
}

impl TfidfVocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.idf[i])
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Fit a vocabulary over tokens with document frequency >= `min_df`.
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
pub fn fit_vocabulary<S: AsRef<str>>(texts: &[S], min_df: usize) -> Result<TfidfVocabulary, ModelError> {
    if texts.is_empty() {
        return Err(ModelError::NoTexts);
    }
    if min_df == 0 {
        return Err(ModelError::InvalidMinDf);
    }
    let n_docs = texts.len();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        let mut seen: Vec<String> = token_strings(text.as_ref());
        seen.sort();
        seen.dedup();
        for token in seen {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    // BTreeMap iteration gives sorted tokens, hence deterministic indices.
    let mut tokens = Vec::new();
    let mut idf = Vec::new();
    for (token, count) in df {
        if count >= min_df {
            idf.push(((1 + n_docs) as f64 / (1 + count) as f64).ln() + 1.0);
            tokens.push(token);
        }
    }
    if tokens.is_empty() {
        return Err(ModelError::EmptyVocabulary { min_df });
    }
    let mut vocab = TfidfVocabulary {
        tokens,
        index: BTreeMap::new(),
        idf,
        min_df,
    };
    vocab.rebuild_index();
    Ok(vocab)
}

/// Sparse feature vector: (index, value) entries sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }
}

/// Term-count times idf, L2-normalized. Out-of-vocabulary tokens are
/// ignored; an all-OOV text maps to the zero vector.
pub fn vectorize(text: &str, vocab: &TfidfVocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in token_strings(text) {
        if let Some(&idx) = vocab.index.get(&token) {
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(idx, count)| (idx, count * vocab.idf[idx]))
        .collect();
    let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, v) in &mut entries {
            *v /= norm;
        }
    }
    SparseVector {
        dim: vocab.len(),
        entries,
    }
}

/// Gradient-descent settings. The defaults favor determinism over speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    /// Optional (negative, positive) per-class loss weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<(f64, f64)>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            l2_lambda: 1e-4,
            max_epochs: 1000,
            tolerance: 1e-6,
            class_weights: None,
        }
    }
}

/// Fitted logistic-regression weights and decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias_term: f64,
    pub l2_lambda: f64,
    pub threshold: f64,
}

impl LogRegModel {
    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, ModelError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ModelError::InvalidThreshold);
        }
        self.threshold = threshold;
        Ok(self)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy term for logit `z`, label `y`.
fn bce_term(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln()
}

/// L2-regularized mean binary cross-entropy and its gradient.
///
/// The L2 penalty applies to the weights only, never the bias term. With
/// class weights (wn, wp), per-sample terms are scaled and the mean is
/// taken over the total weight. Exposed so tests can check the gradient
/// against finite differences.
pub fn loss_and_gradient(
    xs: &[SparseVector],
    ys: &[bool],
    weights: &[f64],
    bias: f64,
    l2_lambda: f64,
    class_weights: Option<(f64, f64)>,
) -> (f64, Vec<f64>, f64) {
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    let mut total_weight = 0.0;
    for (x, &label) in xs.iter().zip(ys) {
        let y = if label { 1.0 } else { 0.0 };
        let c = match class_weights {
            Some((wn, wp)) => {
                if label {
                    wp
                } else {
                    wn
                }
            }
            None => 1.0,
        };
        let z = x.dot(weights) + bias;
        let p = sigmoid(z);
        loss += c * bce_term(z, y);
        let residual = c * (p - y);
        for &(i, v) in &x.entries {
            grad_w[i] += residual * v;
        }
        grad_b += residual;
        total_weight += c;
    }
    loss /= total_weight;
    grad_b /= total_weight;
    let mut penalty = 0.0;
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g /= total_weight;
        *g += l2_lambda * w;
        penalty += w * w;
    }
    loss += 0.5 * l2_lambda * penalty;
    (loss, grad_w, grad_b)
}

/// Train by full-batch gradient descent from zero initialization. Stops at
/// `max_epochs` or when the loss change drops below `tolerance`. No
/// randomness: a fixed input order gives bitwise-identical models.
pub fn train_logreg(
    xs: &[SparseVector],
    ys: &[bool],
    config: &TrainConfig,
) -> Result<LogRegModel, ModelError> {
    Ok(train_logreg_traced(xs, ys, config)?.0)
}

/// Like [`train_logreg`] but also returns the per-epoch loss trajectory.
pub fn train_logreg_traced(
    xs: &[SparseVector],
    ys: &[bool],
    config: &TrainConfig,
) -> Result<(LogRegModel, Vec<f64>), ModelError> {
    if xs.len() != ys.len() {
        return Err(ModelError::LengthMismatch {
            features: xs.len(),
            labels: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(ModelError::TooFewSamples(xs.len()));
    }
    let n_pos = ys.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == ys.len() {
        return Err(ModelError::SingleClass);
    }
    let dim = xs[0].dim;
    for x in xs {
        if x.dim != dim {
            return Err(ModelError::DimensionMismatch {
                got: x.dim,
                expected: dim,
            });
        }
    }
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut losses = Vec::new();
    let mut prev_loss = f64::INFINITY;
    for epoch in 0..config.max_epochs {
        let (loss, grad_w, grad_b) =
            loss_and_gradient(xs, ys, &weights, bias, config.l2_lambda, config.class_weights);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        losses.push(loss);
        if (prev_loss - loss).abs() < config.tolerance {
            break;
        }
        prev_loss = loss;
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * g;
        }
        bias -= config.learning_rate * grad_b;
    }
    Ok((
        LogRegModel {
            weights,
            bias_term: bias,
            l2_lambda: config.l2_lambda,
            threshold: 0.5,
        },
        losses,
    ))
}

/// sigmoid(w . x + b).
pub fn predict_proba(model: &LogRegModel, x: &SparseVector) -> Result<f64, ModelError> {
    if x.dim != model.weights.len() {
        return Err(ModelError::DimensionMismatch {
            got: x.dim,
            expected: model.weights.len(),
        });
    }
    Ok(sigmoid(x.dot(&model.weights) + model.bias_term))
}

/// A fitted vocabulary plus logistic-regression head, the unit that gets
/// persisted and served.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextClassifier {
    pub vocab: TfidfVocabulary,
    pub model: LogRegModel,
    pub config: TrainConfig,
    pub min_df: usize,
}

const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    kind: String,
    classifier: TextClassifier,
}

impl TextClassifier {
    /// Fit vocabulary and weights on (text, label) pairs.
    pub fn fit<S: AsRef<str>>(
        texts: &[S],
        labels: &[bool],
        min_df: usize,
        config: &TrainConfig,
    ) -> Result<Self, ModelError> {
        let vocab = fit_vocabulary(texts, min_df)?;
        let xs: Vec<SparseVector> = texts.iter().map(|t| vectorize(t.as_ref(), &vocab)).collect();
        let model = train_logreg(&xs, labels, config)?;
        Ok(TextClassifier {
            vocab,
            model,
            config: *config,
            min_df,
        })
    }

    pub fn predict_proba(&self, text: &str) -> f64 {
        let x = vectorize(text, &self.vocab);
        predict_proba(&self.model, &x).expect("vector built against own vocabulary")
    }

    pub fn predict(&self, text: &str) -> bool {
        self.predict_proba(text) >= self.model.threshold
    }

    /// Write the versioned JSON model file.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: "tfidf-logreg".into(),
            classifier: self.clone(),
        };
        let json = serde_json::to_string_pretty(&file).expect("model serializes");
        std::fs::write(path, json + "\n").map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let parse_err = |message: String| ModelError::Parse {
            path: path.display().to_string(),
            message,
        };
        let file: ModelFile = serde_json::from_str(&raw).map_err(|e| parse_err(e.to_string()))?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(parse_err(format!(
                "unsupported schema version {}",
                file.schema_version
            )));
        }
        if file.kind != "tfidf-logreg" {
            return Err(parse_err(format!("unsupported model kind `{}`", file.kind)));
        }
        let mut classifier = file.classifier;
        classifier.vocab.rebuild_index();
        Ok(classifier)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_and_idf_hand_computation() {
        let vocab = fit_vocabulary(&["a b", "a c"], 1).unwrap();
        assert_eq!(vocab.len(), 3);
        // idf(a) = ln(3/3) + 1 = 1.0; idf(b) = ln(3/2) + 1.
        assert_eq!(vocab.idf("a"), Some(1.0));
        let idf_b = vocab.idf("b").unwrap();
        assert!((idf_b - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn min_df_filters_rare_tokens() {
        let vocab = fit_vocabulary(&["a b", "a c"], 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert!(vocab.idf("a").is_some());
        assert!(vocab.idf("b").is_none());
    }

    #[test]
    fn single_document_idf_is_one() {
        let vocab = fit_vocabulary(&["alpha beta gamma"], 1).unwrap();
        for token in ["alpha", "beta", "gamma"] {
            assert_eq!(vocab.idf(token), Some(1.0));
        }
    }

    #[test]
    fn empty_vocabulary_is_error() {
        assert!(matches!(
            fit_vocabulary(&["a", "b"], 3),
            Err(ModelError::EmptyVocabulary { min_df: 3 })
        ));
    }

    #[test]
    fn vectorize_single_token_is_unit() {
        let vocab = fit_vocabulary(&["a b", "a c"], 1).unwrap();
        let v = vectorize("b", &vocab);
        assert_eq!(v.entries.len(), 1);
        assert!((v.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vectorize_all_oov_is_zero() {
        let vocab = fit_vocabulary(&["a b", "a c"], 1).unwrap();
        let v = vectorize("zz qq", &vocab);
        assert!(v.entries.is_empty());
        assert_eq!(v.l2_norm(), 0.0);
    }

    #[test]
    fn vectorize_direction_hand_computation() {
        let vocab = fit_vocabulary(&["a b", "a c"], 1).unwrap();
        let idf_a = vocab.idf("a").unwrap();
        let idf_b = vocab.idf("b").unwrap();
        let v = vectorize("a a b", &vocab);
        let raw = [(2.0 * idf_a), idf_b];
        let norm = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt();
        let by_token: BTreeMap<usize, f64> = v.entries.iter().copied().collect();
        let a_idx = *vocab.index.get("a").unwrap();
        let b_idx = *vocab.index.get("b").unwrap();
        assert!((by_token[&a_idx] - raw[0] / norm).abs() < 1e-12);
        assert!((by_token[&b_idx] - raw[1] / norm).abs() < 1e-12);
    }

    fn separable_fixture() -> (Vec<SparseVector>, Vec<bool>) {
        let xs = vec![
            SparseVector { dim: 2, entries: vec![(0, 1.0)] },
            SparseVector { dim: 2, entries: vec![(0, 0.9), (1, 0.1)] },
            SparseVector { dim: 2, entries: vec![(1, 1.0)] },
            SparseVector { dim: 2, entries: vec![(0, 0.1), (1, 0.9)] },
        ];
        let ys = vec![true, true, false, false];
        (xs, ys)
    }

    #[test]
    fn separable_four_points_reach_perfect_training_accuracy() {
        let (xs, ys) = separable_fixture();
        let model = train_logreg(&xs, &ys, &TrainConfig::default()).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            let p = predict_proba(&model, x).unwrap();
            assert_eq!(p >= 0.5, y, "p = {p}");
        }
    }

    #[test]
    fn identical_points_opposite_labels_stay_at_half() {
        let x = SparseVector { dim: 1, entries: vec![(0, 1.0)] };
        let xs = vec![x.clone(), x.clone()];
        let model = train_logreg(&xs, &[true, false], &TrainConfig::default()).unwrap();
        let p = predict_proba(&model, &x).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (xs, ys) = separable_fixture();
        let a = train_logreg(&xs, &ys, &TrainConfig::default()).unwrap();
        let b = train_logreg(&xs, &ys, &TrainConfig::default()).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias_term.to_bits(), b.bias_term.to_bits());
    }

    #[test]
    fn loss_is_non_increasing() {
        let (xs, ys) = separable_fixture();
        let (_, losses) = train_logreg_traced(&xs, &ys, &TrainConfig::default()).unwrap();
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss increased: {pair:?}");
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences_at_zero() {
        let (xs, ys) = separable_fixture();
        let weights = vec![0.0, 0.0];
        check_gradient(&xs, &ys, &weights, 0.0, 1e-4);
    }

    fn check_gradient(xs: &[SparseVector], ys: &[bool], weights: &[f64], bias: f64, l2: f64) {
        let (_, grad_w, grad_b) = loss_and_gradient(xs, ys, weights, bias, l2, None);
        let h = 1e-6;
        let loss_at = |w: &[f64], b: f64| loss_and_gradient(xs, ys, w, b, l2, None).0;
        for i in 0..weights.len() {
            let mut wp = weights.to_vec();
            let mut wm = weights.to_vec();
            wp[i] += h;
            wm[i] -= h;
            let numeric = (loss_at(&wp, bias) - loss_at(&wm, bias)) / (2.0 * h);
            let denom = numeric.abs().max(grad_w[i].abs()).max(1e-12);
            assert!(
                (numeric - grad_w[i]).abs() / denom < 1e-6,
                "weight {i}: analytic {} vs numeric {numeric}",
                grad_w[i]
            );
        }
        let numeric_b = (loss_at(weights, bias + h) - loss_at(weights, bias - h)) / (2.0 * h);
        let denom = numeric_b.abs().max(grad_b.abs()).max(1e-12);
        assert!((numeric_b - grad_b).abs() / denom < 1e-6);
    }

    #[test]
    fn single_class_training_is_rejected() {
        let (xs, _) = separable_fixture();
        assert!(matches!(
            train_logreg(&xs, &[true, true, true, true], &TrainConfig::default()),
            Err(ModelError::SingleClass)
        ));
    }

    #[test]
    fn predict_proba_known_logit() {
        let model = LogRegModel {
            weights: vec![3f64.ln()],
            bias_term: 0.0,
            l2_lambda: 0.0,
            threshold: 0.5,
        };
        let x = SparseVector { dim: 1, entries: vec![(0, 1.0)] };
        let p = predict_proba(&model, &x).unwrap();
        assert!((p - 0.75).abs() < 1e-12);
    }

    #[test]
    fn predict_proba_zero_model_is_half() {
        let model = LogRegModel {
            weights: vec![0.0, 0.0],
            bias_term: 0.0,
            l2_lambda: 0.0,
            threshold: 0.5,
        };
        let x = SparseVector { dim: 2, entries: vec![(1, 0.3)] };
        assert_eq!(predict_proba(&model, &x).unwrap(), 0.5);
    }

    #[test]
    fn predict_proba_rejects_dimension_mismatch() {
        let model = LogRegModel {
            weights: vec![0.0, 0.0],
            bias_term: 0.0,
            l2_lambda: 0.0,
            threshold: 0.5,
        };
        let x = SparseVector { dim: 3, entries: vec![] };
        assert!(matches!(
            predict_proba(&model, &x),
            Err(ModelError::DimensionMismatch { got: 3, expected: 2 })
        ));
    }

    #[test]
    fn increasing_bias_never_decreases_probability() {
        let x = SparseVector { dim: 1, entries: vec![(0, 0.4)] };
        let mut last = 0.0;
        for step in 0..20 {
            let model = LogRegModel {
                weights: vec![1.0],
                bias_term: -2.0 + step as f64 * 0.25,
                l2_lambda: 0.0,
                threshold: 0.5,
            };
            let p = predict_proba(&model, &x).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn classifier_save_load_round_trip() {
        let texts = ["alpha beta", "alpha gamma", "delta beta", "delta gamma"];
        let labels = [true, true, false, false];
        let clf = TextClassifier::fit(&texts, &labels, 1, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        clf.save(&path).unwrap();
        let loaded = TextClassifier::load(&path).unwrap();
        assert_eq!(clf, loaded);
        for t in texts {
            assert_eq!(clf.predict_proba(t).to_bits(), loaded.predict_proba(t).to_bits());
        }
    }
}
