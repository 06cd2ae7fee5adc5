//! The relatedness contract for keyword occurrences, the extracted-negative
//! filter built on it, and the interchangeable backends: the native TF-IDF
//! baseline and the remote chat model.
//!
//! A backend answers one question per occurrence: is this keyword, in this
//! excerpt, used in the sense of its category? Scores collapse to a boolean
//! at the backend threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{ModelError, TextClassifier, TrainConfig};
use crate::corpus::{CorpusError, Excerpt, Origin};
use crate::evalkit::{compute_metrics, confusion_counts, ConfusionCounts, EvalError, Metrics};
use crate::lexicon::{match_keywords, CategoryName, KeywordMatch, Lexicon, XnCandidate};
use crate::llm::{build_wsd_prompt, parse_binary_output, ChatRequest, LlmClient, LlmError, Message, Role};

#[derive(Debug, Error)]
pub enum WsdError {
    #[error("query `{query_id}` failed: {source}")]
    Backend {
        query_id: String,
        #[source]
        source: Box<WsdError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("match belongs to excerpt `{match_id}`, not `{excerpt_id}`")]
    MismatchedQuery { match_id: String, excerpt_id: String },
    #[error("keyword `{keyword}` does not occur in labeled query `{id}`")]
    KeywordAbsent { id: String, keyword: String },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("synthetic generation needs n >= 1")]
    ZeroRequested,
    #[error("lexicon has no keywords for WSD-enabled categories")]
    NoWsdKeywords,
    #[error("baseline backend is not trained")]
    NotTrained,
}

/// One relatedness question: keyword occurrence, excerpt context, category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisambiguationQuery {
    pub keyword: String,
    pub excerpt: Excerpt,
    pub category: CategoryName,
    pub occurrence: KeywordMatch,
}

impl DisambiguationQuery {
    /// Build a query from a matcher occurrence, checking it refers to the
    /// given excerpt. Matcher output guarantees the keyword is in the
    /// lexicon for its category.
    pub fn from_match(excerpt: &Excerpt, occurrence: KeywordMatch) -> Result<Self, WsdError> {
        if occurrence.excerpt_id != excerpt.id {
            return Err(WsdError::MismatchedQuery {
                match_id: occurrence.excerpt_id,
                excerpt_id: excerpt.id.clone(),
            });
        }
        Ok(DisambiguationQuery {
            keyword: occurrence.keyword.clone(),
            excerpt: excerpt.clone(),
            category: occurrence.category,
            occurrence,
        })
    }
}

/// A backend's answer for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationVerdict {
    pub related: bool,
    pub score: f64,
    pub backend: String,
    pub cached: bool,
}

impl DisambiguationVerdict {
    /// `related` is always `score >= threshold`.
    pub fn from_score(score: f64, threshold: f64, backend: impl Into<String>, cached: bool) -> Self {
        DisambiguationVerdict {
            related: score >= threshold,
            score,
            backend: backend.into(),
            cached,
        }
    }
}

/// The pluggable disambiguator contract. Implementations must be safe for
/// concurrent queries.
pub trait Disambiguator: Send + Sync {
    fn name(&self) -> &str;

    fn threshold(&self) -> f64 {
        0.5
    }

    fn disambiguate(&self, query: &DisambiguationQuery) -> Result<DisambiguationVerdict, WsdError>;
}

/// Evaluate a query against a backend, tagging failures with the query id.
pub fn disambiguate(
    query: &DisambiguationQuery,
    backend: &dyn Disambiguator,
) -> Result<DisambiguationVerdict, WsdError> {
    backend
        .disambiguate(query)
        .map_err(|source| WsdError::Backend {
            query_id: query.excerpt.id.clone(),
            source: Box::new(source),
        })
}

/// One labeled relatedness example, the unit of the WSD training and test
/// pools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub id: String,
    pub text: String,
    pub keyword: String,
    pub category: CategoryName,
    pub related: bool,
}

impl LabeledQuery {
    /// Turn a labeled example into a runnable query by locating the
    /// keyword's first occurrence. Errors when the keyword is absent.
    pub fn to_query(&self) -> Result<DisambiguationQuery, WsdError> {
        let excerpt = Excerpt {
            id: self.id.clone(),
            text: self.text.clone(),
            source_doc: String::new(),
            page: None,
            level2_codes: BTreeSet::new(),
            type_disease_codes: vec![],
            origin: Origin::Extracted,
        };
        let lexicon = Lexicon::from_entries([(self.category, vec![self.keyword.clone()])])
            .expect("single-keyword lexicon");
        let mut matches = match_keywords(&excerpt, &lexicon);
        if matches.is_empty() {
            return Err(WsdError::KeywordAbsent {
                id: self.id.clone(),
                keyword: self.keyword.clone(),
            });
        }
        DisambiguationQuery::from_match(&excerpt, matches.remove(0))
    }
}

/// Native backend: the TF-IDF + logistic-regression classifier scored on
/// the whole excerpt text.
pub struct BaselineDisambiguator {
    classifier: TextClassifier,
}

impl BaselineDisambiguator {
    pub fn new(classifier: TextClassifier) -> Self {
        BaselineDisambiguator { classifier }
    }

    /// Fit on labeled queries (related = positive class).
    pub fn train(
        labeled: &[LabeledQuery],
        min_df: usize,
        config: &TrainConfig,
    ) -> Result<Self, WsdError> {
        let texts: Vec<&str> = labeled.iter().map(|q| q.text.as_str()).collect();
        let labels: Vec<bool> = labeled.iter().map(|q| q.related).collect();
        Ok(BaselineDisambiguator {
            classifier: TextClassifier::fit(&texts, &labels, min_df, config)?,
        })
    }

    pub fn classifier(&self) -> &TextClassifier {
        &self.classifier
    }

    pub fn save(&self, path: &Path) -> Result<(), WsdError> {
        Ok(self.classifier.save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, WsdError> {
        Ok(BaselineDisambiguator {
            classifier: TextClassifier::load(path)?,
        })
    }
}

impl Disambiguator for BaselineDisambiguator {
    fn name(&self) -> &str {
        "baseline-tfidf-logreg"
    }

    fn threshold(&self) -> f64 {
        self.classifier.model.threshold
    }

    fn disambiguate(&self, query: &DisambiguationQuery) -> Result<DisambiguationVerdict, WsdError> {
        let score = self.classifier.predict_proba(&query.excerpt.text);
        Ok(DisambiguationVerdict::from_score(
            score,
            self.threshold(),
            self.name(),
            false,
        ))
    }
}

/// Remote backend: the zero-shot chain-of-thought prompt over the chat
/// client. Parse failures surface as errors, never as default labels.
pub struct RemoteDisambiguator {
    client: LlmClient,
    name: String,
}

impl RemoteDisambiguator {
    pub fn new(client: LlmClient) -> Self {
        let name = format!("remote:{}", client.model_name());
        RemoteDisambiguator { client, name }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }
}

impl Disambiguator for RemoteDisambiguator {
    fn name(&self) -> &str {
        &self.name
    }

    fn disambiguate(&self, query: &DisambiguationQuery) -> Result<DisambiguationVerdict, WsdError> {
        let request = build_wsd_prompt(&query.excerpt.text).with_model(self.client.model_name());
        let completion = self.client.complete(&request)?;
        let label = parse_binary_output(&completion.text)?;
        Ok(DisambiguationVerdict::from_score(
            f64::from(label),
            self.threshold(),
            self.name.clone(),
            completion.cached,
        ))
    }
}

/// Backend that answers the same verdict for every query. Useful for
/// degenerate checks of the filter policy.
pub struct ConstantDisambiguator {
    related: bool,
    name: String,
}

impl ConstantDisambiguator {
    pub fn new(related: bool) -> Self {
        ConstantDisambiguator {
            related,
            name: format!("constant-{related}"),
        }
    }
}

impl Disambiguator for ConstantDisambiguator {
    fn name(&self) -> &str {
        &self.name
    }

    fn disambiguate(&self, _query: &DisambiguationQuery) -> Result<DisambiguationVerdict, WsdError> {
        let score = if self.related { 1.0 } else { 0.0 };
        Ok(DisambiguationVerdict::from_score(
            score,
            self.threshold(),
            self.name.clone(),
            false,
        ))
    }
}

/// Backend with a fixed score per (excerpt id, keyword) pair; a
/// deterministic stand-in for a fine-tuned model in tests and dry runs.
pub struct ScriptedDisambiguator {
    scores: BTreeMap<(String, String), f64>,
    threshold: f64,
    name: String,
}

impl ScriptedDisambiguator {
    pub fn new(scores: BTreeMap<(String, String), f64>, threshold: f64) -> Self {
        ScriptedDisambiguator {
            scores,
            threshold,
            name: "scripted".into(),
        }
    }
}

impl Disambiguator for ScriptedDisambiguator {
    fn name(&self) -> &str {
        &self.name
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn disambiguate(&self, query: &DisambiguationQuery) -> Result<DisambiguationVerdict, WsdError> {
        let key = (query.excerpt.id.clone(), query.keyword.clone());
        let score = self.scores.get(&key).copied().ok_or_else(|| {
            WsdError::KeywordAbsent {
                id: query.excerpt.id.clone(),
                keyword: query.keyword.clone(),
            }
        })?;
        Ok(DisambiguationVerdict::from_score(
            score,
            self.threshold,
            self.name.clone(),
            false,
        ))
    }
}

/// Audit-log line for one judged occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub excerpt_id: String,
    pub keyword: String,
    pub category: CategoryName,
    pub score: f64,
    pub related: bool,
    pub backend: String,
    pub timestamp: u64,
}

/// Keep rules for multi-keyword excerpts. With both rules on (the default)
/// an excerpt survives when any WSD-enabled match is judged related or when
/// it has any match from a category with WSD disabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub keep_any_related: bool,
    pub keep_non_wsd_matches: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            keep_any_related: true,
            keep_non_wsd_matches: true,
        }
    }
}

/// One candidate judged: its verdicts (one per WSD-enabled match) and the
/// policy outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateJudgment {
    pub candidate: XnCandidate,
    pub verdicts: Vec<VerdictRecord>,
    pub keep: bool,
}

/// Judge one extracted-negative candidate. Every match from a WSD-enabled
/// category is queried; matches from other categories are structural.
pub fn judge_candidate(
    candidate: &XnCandidate,
    backend: &dyn Disambiguator,
    lexicon: &Lexicon,
    policy: &FilterPolicy,
) -> Result<CandidateJudgment, WsdError> {
    let mut verdicts = Vec::new();
    let mut any_related = false;
    let mut any_non_wsd = false;
    for m in &candidate.matches {
        if lexicon.wsd_enabled(m.category) {
            let query = DisambiguationQuery::from_match(&candidate.excerpt, m.clone())?;
            let verdict = disambiguate(&query, backend)?;
            any_related |= verdict.related;
            verdicts.push(VerdictRecord {
                excerpt_id: m.excerpt_id.clone(),
                keyword: m.keyword.clone(),
                category: m.category,
                score: verdict.score,
                related: verdict.related,
                backend: verdict.backend,
                timestamp: unix_now(),
            });
        } else {
            any_non_wsd = true;
        }
    }
    let keep = (policy.keep_any_related && any_related)
        || (policy.keep_non_wsd_matches && any_non_wsd);
    Ok(CandidateJudgment {
        candidate: candidate.clone(),
        verdicts,
        keep,
    })
}

/// A removed candidate together with the verdicts behind the removal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedCandidate {
    pub candidate: XnCandidate,
    pub verdicts: Vec<VerdictRecord>,
}

/// Filter outcome: kept candidates (XN*), removed candidates with their
/// verdicts, and the full audit trail.
#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<XnCandidate>,
    pub removed: Vec<RemovedCandidate>,
    pub audit: Vec<VerdictRecord>,
}

/// Backend failure mid-filter, carrying the partial progress so callers can
/// checkpoint.
#[derive(Debug, Error)]
#[error("filter stopped after {processed} candidates: {source}")]
pub struct FilterError {
    #[source]
    pub source: WsdError,
    pub processed: usize,
    pub partial: FilterOutcome,
}

/// Filter extracted-negative candidates through a disambiguation backend.
/// Kept is a subset of the input; every input lands in exactly one of kept
/// or removed.
pub fn filter_extracted_negatives(
    candidates: &[XnCandidate],
    backend: &dyn Disambiguator,
    lexicon: &Lexicon,
    policy: &FilterPolicy,
) -> Result<FilterOutcome, FilterError> {
    let mut outcome = FilterOutcome::default();
    for (processed, candidate) in candidates.iter().enumerate() {
        let judgment = match judge_candidate(candidate, backend, lexicon, policy) {
            Ok(j) => j,
            Err(source) => {
                return Err(FilterError {
                    source,
                    processed,
                    partial: outcome,
                })
            }
        };
        outcome.audit.extend(judgment.verdicts.iter().cloned());
        if judgment.keep {
            outcome.kept.push(judgment.candidate);
        } else {
            outcome.removed.push(RemovedCandidate {
                candidate: judgment.candidate,
                verdicts: judgment.verdicts,
            });
        }
    }
    Ok(outcome)
}

/// Metrics of a backend over a labeled test set (related = positive class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsdEvaluation {
    pub backend: String,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Run every labeled query through the backend and score the verdicts.
pub fn evaluate_disambiguator(
    test: &[LabeledQuery],
    backend: &dyn Disambiguator,
) -> Result<WsdEvaluation, WsdError> {
    if test.is_empty() {
        return Err(WsdError::EmptyTestSet);
    }
    let mut predictions = Vec::with_capacity(test.len());
    let mut labels = Vec::with_capacity(test.len());
    for q in test {
        let query = q.to_query()?;
        let verdict = disambiguate(&query, backend)?;
        predictions.push(verdict.related);
        labels.push(q.related);
    }
    let counts = confusion_counts(&predictions, &labels)?;
    Ok(WsdEvaluation {
        backend: backend.name().to_string(),
        counts,
        metrics: compute_metrics(&counts),
    })
}

/// Provenance stored alongside a generated batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetadata {
    pub prompt_template: String,
    pub temperature: f64,
    pub seed: u64,
    pub model_name: String,
    pub requested: usize,
}

/// One accepted synthetic example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub excerpt: Excerpt,
    pub keyword: String,
    pub category: CategoryName,
    pub related: bool,
}

/// A generation the validator rejected, with the reason. Labels are never
/// rewritten to salvage a bad generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedGeneration {
    pub index: usize,
    pub requested_related: bool,
    pub keyword: String,
    pub response: String,
    pub reason: String,
}

/// Result of one synthetic-generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBatch {
    pub accepted: Vec<SyntheticSample>,
    pub dropped: Vec<DroppedGeneration>,
    pub metadata: GenerationMetadata,
}

const GENERATION_SYSTEM_TEXT: &str =
    "You are a helpful assistant that writes single sentences for a medical education corpus";

const GENERATION_TASK_RELATED: &str = "Write one sentence that could appear in medical curriculum material and that uses the word '{keyword}' in a sense related to race or ethnicity. Output only the sentence.";

const GENERATION_TASK_UNRELATED: &str = "Write one sentence that could appear in medical curriculum material and that uses the word '{keyword}' in a sense that is not related to race or ethnicity. Output only the sentence.";

/// Generation runs warmer than classification so batches vary.
pub const GENERATION_TEMPERATURE: f64 = 0.7;

fn generation_request(keyword: &str, related: bool, model_name: &str, index: usize) -> ChatRequest {
    let task = if related {
        GENERATION_TASK_RELATED
    } else {
        GENERATION_TASK_UNRELATED
    };
    // The sample index rides along so distinct requests get distinct cache
    // keys even at the same keyword and label.
    let content = format!("{} (sample {})", task.replacen("{keyword}", keyword, 1), index);
    ChatRequest::new(
        GENERATION_SYSTEM_TEXT,
        vec![Message {
            role: Role::User,
            content,
        }],
        GENERATION_TEMPERATURE,
        model_name,
    )
    .expect("well-formed by construction")
}

/// Generate `n` labeled synthetic sentences, balanced across related and
/// unrelated (the related half gets the extra on odd n). Keywords are
/// sampled from the WSD-enabled categories under the seed. Generations that
/// fail validation are dropped and reported.
pub fn generate_synthetic_queries(
    n: usize,
    seed: u64,
    client: &LlmClient,
    lexicon: &Lexicon,
) -> Result<SyntheticBatch, WsdError> {
    use rand::seq::IndexedRandom;
    use rand::SeedableRng;

    if n == 0 {
        return Err(WsdError::ZeroRequested);
    }
    let mut pool: Vec<(CategoryName, String)> = Vec::new();
    for cat in lexicon.categories().filter(|c| c.wsd_enabled) {
        for kw in lexicon.keywords(cat.name) {
            pool.push((cat.name, kw.clone()));
        }
    }
    if pool.is_empty() {
        return Err(WsdError::NoWsdKeywords);
    }
    let n_related = n / 2 + n % 2;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = Vec::new();
    let mut dropped = Vec::new();
    for index in 0..n {
        let related = index < n_related;
        let (category, keyword) = pool.choose(&mut rng).expect("non-empty pool").clone();
        let request = generation_request(&keyword, related, client.model_name(), index);
        let completion = client.complete(&request)?;
        let mut drop = |reason: String| {
            dropped.push(DroppedGeneration {
                index,
                requested_related: related,
                keyword: keyword.clone(),
                response: completion.text.clone(),
                reason,
            });
        };
        let text = match crate::corpus::normalize_text(&completion.text) {
            Ok(t) => t,
            Err(_) => {
                drop("empty generation".into());
                continue;
            }
        };
        let excerpt = Excerpt {
            id: format!("syn-{seed}-{index}"),
            text,
            source_doc: format!("synthetic:{}", client.model_name()),
            page: None,
            level2_codes: BTreeSet::new(),
            type_disease_codes: vec![],
            origin: Origin::Synthetic,
        };
        // The keyword matcher is the validation oracle: every accepted
        // sample must actually contain a WSD-enabled lexicon keyword.
        let matches = match_keywords(&excerpt, lexicon);
        let has_wsd_keyword = matches.iter().any(|m| lexicon.wsd_enabled(m.category));
        if !has_wsd_keyword {
            drop("generation contains no WSD-enabled lexicon keyword".into());
            continue;
        }
        accepted.push(SyntheticSample {
            excerpt,
            keyword,
            category,
            related,
        });
    }
    Ok(SyntheticBatch {
        accepted,
        dropped,
        metadata: GenerationMetadata {
            prompt_template: format!("{GENERATION_TASK_RELATED} | {GENERATION_TASK_UNRELATED}"),
            temperature: GENERATION_TEMPERATURE,
            seed,
            model_name: client.model_name().to_string(),
            requested: n,
        },
    })
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::extract_xn_candidates;

    fn extracted(id: &str, text: &str) -> Excerpt {
        Excerpt {
            id: id.into(),
            text: text.into(),
            source_doc: "doc".into(),
            page: None,
            level2_codes: BTreeSet::new(),
            type_disease_codes: vec![],
            origin: Origin::Extracted,
        }
    }

    fn lexicon() -> Lexicon {
        Lexicon::from_entries([
            (CategoryName::Race, vec!["white", "american"]),
            (CategoryName::Gender, vec!["men", "women"]),
            (CategoryName::Geography, vec!["countries"]),
        ])
        .unwrap()
    }

    fn candidates(lex: &Lexicon, excerpts: &[Excerpt]) -> Vec<XnCandidate> {
        extract_xn_candidates(excerpts, lex)
    }

    #[test]
    fn verdict_follows_threshold() {
        let v = DisambiguationVerdict::from_score(0.7, 0.5, "b", false);
        assert!(v.related);
        let v = DisambiguationVerdict::from_score(0.3, 0.5, "b", false);
        assert!(!v.related);
        let v = DisambiguationVerdict::from_score(0.5, 0.5, "b", false);
        assert!(v.related);
    }

    #[test]
    fn scripted_backend_reproduces_reference_scores() {
        let lex = lexicon();
        let melanoma = extracted(
            "e1",
            "Melanoma: increasing in incidence in the white population (CDC).",
        );
        let plaques = extracted(
            "e2",
            "Calcific plaques are chalky white and arise from cardiac (aortic and mitral) valves.",
        );
        let guidelines = extracted(
            "e3",
            "2015 American Heart Association guidelines suggest treating patients presenting with systolic BP above 150-220 mmHg, but they do not offer a specific BP target.",
        );
        let mut scores = BTreeMap::new();
        scores.insert(("e1".to_string(), "white".to_string()), 0.9998);
        scores.insert(("e2".to_string(), "white".to_string()), 0.0001);
        // The reference model's known false positive on this hard case.
        scores.insert(("e3".to_string(), "american".to_string()), 0.9998);
        let backend = ScriptedDisambiguator::new(scores, 0.5);

        for (excerpt, expected_related, expected_score) in [
            (&melanoma, true, 0.9998),
            (&plaques, false, 0.0001),
            (&guidelines, true, 0.9998),
        ] {
            let m = match_keywords(excerpt, &lex)
                .into_iter()
                .find(|m| m.category == CategoryName::Race)
                .unwrap();
            let query = DisambiguationQuery::from_match(excerpt, m).unwrap();
            let verdict = disambiguate(&query, &backend).unwrap();
            assert_eq!(verdict.related, expected_related, "{}", excerpt.id);
            assert_eq!(verdict.score, expected_score);
        }
    }

    #[test]
    fn query_match_must_reference_excerpt() {
        let lex = lexicon();
        let a = extracted("a", "the white population");
        let b = extracted("b", "the white population");
        let m = match_keywords(&a, &lex).remove(0);
        assert!(matches!(
            DisambiguationQuery::from_match(&b, m),
            Err(WsdError::MismatchedQuery { .. })
        ));
    }

    #[test]
    fn filter_removes_unrelated_race_only_excerpt() {
        let lex = lexicon();
        let excerpts = vec![extracted(
            "wm",
            "White matter within the spinal cord contains the axons of neurons that are ascending and descending to transmit signals to and from the brain, respectively.",
        )];
        let cands = candidates(&lex, &excerpts);
        let backend = ConstantDisambiguator::new(false);
        let outcome =
            filter_extracted_negatives(&cands, &backend, &lex, &FilterPolicy::default()).unwrap();
        assert!(outcome.kept.is_empty());
        assert_eq!(outcome.removed.len(), 1);
        assert_eq!(outcome.removed[0].verdicts.len(), 1);
        assert!(!outcome.removed[0].verdicts[0].related);
    }

    #[test]
    fn filter_keeps_non_wsd_category_matches() {
        let lex = lexicon();
        let excerpts = vec![
            extracted("g1", "Outcomes differed for men across cohorts."),
            extracted("mixed", "Outcomes for white men differed across cohorts."),
        ];
        let cands = candidates(&lex, &excerpts);
        let backend = ConstantDisambiguator::new(false);
        let outcome =
            filter_extracted_negatives(&cands, &backend, &lex, &FilterPolicy::default()).unwrap();
        // Gender-only and mixed excerpts both survive on the structural rule.
        let kept_ids: Vec<&str> = outcome.kept.iter().map(|c| c.excerpt.id.as_str()).collect();
        assert_eq!(kept_ids, ["g1", "mixed"]);
        // The race match in the mixed excerpt was still judged and audited.
        assert!(outcome.audit.iter().any(|v| v.excerpt_id == "mixed" && v.keyword == "white"));
    }

    #[test]
    fn filter_policy_truth_table() {
        // All seven reachable combinations of (wsd-related match present,
        // wsd-unrelated match present, non-wsd match present); candidates
        // always have at least one match.
        let lex = lexicon();
        let mut scores = BTreeMap::new();
        // "white" scores related; "american" scores unrelated.
        for id in ["c1", "c2", "c3", "c4", "c5", "c6", "c7"] {
            scores.insert((id.to_string(), "white".to_string()), 1.0);
            scores.insert((id.to_string(), "american".to_string()), 0.0);
        }
        let backend = ScriptedDisambiguator::new(scores, 0.5);
        // (id, text, expected_keep): texts compose matches per combination.
        let cases = [
            ("c1", "the white population", true),                       // R
            ("c2", "the american guidelines", false),                   // U
            ("c3", "outcomes for men", true),                           // N
            ("c4", "the white population and american guidelines", true), // R+U
            ("c5", "the white population of men", true),                // R+N
            ("c6", "american guidelines for men", true),                // U+N
            ("c7", "white american men", true),                         // R+U+N
        ];
        for (id, text, expected_keep) in cases {
            let excerpts = vec![extracted(id, text)];
            let cands = candidates(&lex, &excerpts);
            assert_eq!(cands.len(), 1, "{id} must have matches");
            let outcome =
                filter_extracted_negatives(&cands, &backend, &lex, &FilterPolicy::default())
                    .unwrap();
            assert_eq!(outcome.kept.len() == 1, expected_keep, "case {id}");
            assert_eq!(outcome.kept.len() + outcome.removed.len(), 1);
        }
    }

    #[test]
    fn constant_true_backend_keeps_everything() {
        let lex = lexicon();
        let excerpts = vec![
            extracted("a", "the white population"),
            extracted("b", "chalky white plaques"),
            extracted("c", "outcomes for men"),
        ];
        let cands = candidates(&lex, &excerpts);
        let backend = ConstantDisambiguator::new(true);
        let outcome =
            filter_extracted_negatives(&cands, &backend, &lex, &FilterPolicy::default()).unwrap();
        assert_eq!(outcome.kept.len(), cands.len());
        assert!(outcome.removed.is_empty());
    }

    #[test]
    fn constant_false_backend_keeps_only_non_wsd_matches() {
        let lex = lexicon();
        let excerpts = vec![
            extracted("a", "the white population"),
            extracted("b", "outcomes for men"),
            extracted("c", "white matter tracts"),
        ];
        let cands = candidates(&lex, &excerpts);
        let backend = ConstantDisambiguator::new(false);
        let outcome =
            filter_extracted_negatives(&cands, &backend, &lex, &FilterPolicy::default()).unwrap();
        let kept_ids: Vec<&str> = outcome.kept.iter().map(|c| c.excerpt.id.as_str()).collect();
        assert_eq!(kept_ids, ["b"]);
    }

    #[test]
    fn filter_error_carries_partial_progress() {
        let lex = lexicon();
        let excerpts = vec![
            extracted("ok", "outcomes for white men"),
            extracted("boom", "the white population"),
        ];
        let cands = candidates(&lex, &excerpts);
        // Script covers only the first excerpt; the second errors.
        let mut scores = BTreeMap::new();
        scores.insert(("ok".to_string(), "white".to_string()), 1.0);
        let backend = ScriptedDisambiguator::new(scores, 0.5);
        let err = filter_extracted_negatives(&cands, &backend, &lex, &FilterPolicy::default())
            .unwrap_err();
        assert_eq!(err.processed, 1);
        assert_eq!(err.partial.kept.len(), 1);
        assert!(matches!(err.source, WsdError::Backend { ref query_id, .. } if query_id == "boom"));
    }

    #[test]
    fn evaluate_constant_backend_on_all_related() {
        let test: Vec<LabeledQuery> = (0..4)
            .map(|i| LabeledQuery {
                id: format!("q{i}"),
                text: format!("sample {i} about the white population"),
                keyword: "white".into(),
                category: CategoryName::Race,
                related: true,
            })
            .collect();
        let backend = ConstantDisambiguator::new(true);
        let eval = evaluate_disambiguator(&test, &backend).unwrap();
        assert_eq!(eval.metrics.accuracy, 1.0);
        assert_eq!(eval.counts.tpc, 4);
    }

    #[test]
    fn evaluate_rejects_empty_test_set() {
        let backend = ConstantDisambiguator::new(true);
        assert!(matches!(
            evaluate_disambiguator(&[], &backend),
            Err(WsdError::EmptyTestSet)
        ));
    }

    #[test]
    fn labeled_query_requires_keyword_presence() {
        let q = LabeledQuery {
            id: "q".into(),
            text: "no relevant terms here".into(),
            keyword: "white".into(),
            category: CategoryName::Race,
            related: true,
        };
        assert!(matches!(q.to_query(), Err(WsdError::KeywordAbsent { .. })));
    }

    #[test]
    fn baseline_backend_learns_separable_queries() {
        let mut labeled = Vec::new();
        for i in 0..8 {
            labeled.push(LabeledQuery {
                id: format!("r{i}"),
                text: format!("incidence among the white population cohort {i}"),
                keyword: "white".into(),
                category: CategoryName::Race,
                related: true,
            });
            labeled.push(LabeledQuery {
                id: format!("u{i}"),
                text: format!("chalky white plaques on the valve specimen {i}"),
                keyword: "white".into(),
                category: CategoryName::Race,
                related: false,
            });
        }
        let backend = BaselineDisambiguator::train(&labeled, 1, &TrainConfig::default()).unwrap();
        let eval = evaluate_disambiguator(&labeled, &backend).unwrap();
        assert_eq!(eval.metrics.accuracy, 1.0);
    }
}
