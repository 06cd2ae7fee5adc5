//! Pluggable bias scorers and the K-fold evaluation loop that drives them.
//!
//! A scorer maps excerpt text to a bias score. The native scorer retrains
//! per fold; prompting scorers are training-free and emit hard 0/1 scores,
//! so AUC is omitted for them.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::baseline::{ModelError, TextClassifier, TrainConfig};
use crate::datasets::FoldPlan;
use crate::evalkit::{compute_metrics, confusion_counts, roc_auc, EvalError, Metrics};
use crate::llm::{build_bias_prompt, parse_binary_output, LlmClient, LlmError, PromptMode, Shot};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("scorer is not fitted")]
    NotFitted,
    #[error("fold references unknown id `{id}`")]
    UnknownId { id: String },
    #[error("fold {fold} has a single class; cannot evaluate")]
    SingleClassFold { fold: usize },
}

/// The bias-scorer contract: higher scores mean more likely biased.
pub trait BiasScorer: Send {
    fn name(&self) -> &str;

    /// Whether scores are graded probabilities (AUC is meaningful) rather
    /// than hard 0/1 outputs.
    fn emits_probabilities(&self) -> bool;

    fn threshold(&self) -> f64 {
        0.5
    }

    /// Train on (text, label) pairs. Training-free scorers ignore this.
    fn fit(&mut self, train: &[(&str, bool)]) -> Result<(), ScoreError>;

    fn score(&self, text: &str) -> Result<f64, ScoreError>;
}

/// Native scorer: TF-IDF + logistic regression retrained per fold.
pub struct TfidfLogRegScorer {
    min_df: usize,
    config: TrainConfig,
    classifier: Option<TextClassifier>,
}

impl TfidfLogRegScorer {
    pub fn new(min_df: usize, config: TrainConfig) -> Self {
        TfidfLogRegScorer {
            min_df,
            config,
            classifier: None,
        }
    }
}

impl BiasScorer for TfidfLogRegScorer {
    fn name(&self) -> &str {
        "baseline-tfidf-logreg"
    }

    fn emits_probabilities(&self) -> bool {
        true
    }

    fn fit(&mut self, train: &[(&str, bool)]) -> Result<(), ScoreError> {
        let texts: Vec<&str> = train.iter().map(|(t, _)| *t).collect();
        let labels: Vec<bool> = train.iter().map(|(_, y)| *y).collect();
        self.classifier = Some(TextClassifier::fit(&texts, &labels, self.min_df, &self.config)?);
        Ok(())
    }

    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        let clf = self.classifier.as_ref().ok_or(ScoreError::NotFitted)?;
        Ok(clf.predict_proba(text))
    }
}

/// Prompting scorer: zero- or few-shot classification through the chat
/// client. Training-free; binary outputs only.
pub struct PromptBiasScorer {
    client: LlmClient,
    mode: PromptMode,
    shots: Vec<Shot>,
    name: String,
}

impl PromptBiasScorer {
    pub fn new(client: LlmClient, mode: PromptMode, shots: Vec<Shot>) -> Result<Self, ScoreError> {
        if mode == PromptMode::FewShot && shots.is_empty() {
            return Err(ScoreError::Llm(LlmError::EmptyShots));
        }
        let name = match mode {
            PromptMode::ZeroShot => format!("prompt-zero-shot:{}", client.model_name()),
            PromptMode::FewShot => format!("prompt-few-shot:{}", client.model_name()),
        };
        Ok(PromptBiasScorer {
            client,
            mode,
            shots,
            name,
        })
    }
}

impl BiasScorer for PromptBiasScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn emits_probabilities(&self) -> bool {
        false
    }

    fn fit(&mut self, _train: &[(&str, bool)]) -> Result<(), ScoreError> {
        Ok(())
    }

    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        let request =
            build_bias_prompt(text, self.mode, &self.shots)?.with_model(self.client.model_name());
        let completion = self.client.complete(&request)?;
        let label = parse_binary_output(&completion.text)?;
        Ok(f64::from(label))
    }
}

/// Per-fold evaluation results plus the scorer name.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub scorer: String,
    pub fold_metrics: Vec<Metrics>,
}

/// K-fold cross-validation: for each fold, fit on the remaining folds and
/// evaluate on it. AUC is computed only for probability-emitting scorers.
pub fn cross_validate(
    corpus: &BTreeMap<String, (String, bool)>,
    plan: &FoldPlan,
    make_scorer: &mut dyn FnMut() -> Box<dyn BiasScorer>,
) -> Result<CvOutcome, ScoreError> {
    let lookup = |id: &String| {
        corpus
            .get(id)
            .ok_or_else(|| ScoreError::UnknownId { id: id.clone() })
    };
    let mut fold_metrics = Vec::with_capacity(plan.k);
    let mut scorer_name = String::new();
    for (fold_idx, fold) in plan.folds.iter().enumerate() {
        let mut train: Vec<(&str, bool)> = Vec::new();
        for (other_idx, other) in plan.folds.iter().enumerate() {
            if other_idx == fold_idx {
                continue;
            }
            for id in other {
                let (text, label) = lookup(id)?;
                train.push((text.as_str(), *label));
            }
        }
        let mut scorer = make_scorer();
        scorer_name = scorer.name().to_string();
        scorer.fit(&train)?;
        let mut scores = Vec::with_capacity(fold.len());
        let mut labels = Vec::with_capacity(fold.len());
        for id in fold {
            let (text, label) = lookup(id)?;
            scores.push(scorer.score(text)?);
            labels.push(*label);
        }
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            return Err(ScoreError::SingleClassFold { fold: fold_idx });
        }
        let predictions: Vec<bool> = scores.iter().map(|&s| s >= scorer.threshold()).collect();
        let counts = confusion_counts(&predictions, &labels)?;
        let mut metrics = compute_metrics(&counts);
        if scorer.emits_probabilities() {
            metrics.auc = Some(roc_auc(&scores, &labels)?);
        }
        fold_metrics.push(metrics);
    }
    Ok(CvOutcome {
        scorer: scorer_name,
        fold_metrics,
    })
}
