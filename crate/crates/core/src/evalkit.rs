//! Confusion-matrix metrics, F-beta, rank-based ROC-AUC, fold aggregation
//! with 95% confidence intervals, and CI-overlap tie detection.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

/// Two-sided 97.5% normal quantile used for 95% intervals.
const Z_975: f64 = 1.96;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions and labels have different lengths ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("cannot evaluate an empty prediction set")]
    Empty,
    #[error("AUC is undefined when only one class is present")]
    SingleClass,
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("confidence intervals need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("metric {0} missing from report for system `{1}`")]
    MissingMetric(MetricName, String),
    #[error("tie detection needs at least 2 reports")]
    TooFewReports,
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Binary confusion-matrix cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tpc: usize,
    pub fpc: usize,
    pub tnc: usize,
    pub fnc: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tpc + self.fpc + self.tnc + self.fnc
    }
}

/// Tally the standard cells from aligned prediction/label lists.
pub fn confusion_counts(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = ConfusionCounts { tpc: 0, fpc: 0, tnc: 0, fnc: 0 };
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => c.tpc += 1,
            (true, false) => c.fpc += 1,
            (false, false) => c.tnc += 1,
            (false, true) => c.fnc += 1,
        }
    }
    Ok(c)
}

/// One evaluation's metric values. AUC is absent for binary-only scorers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
}

/// F-beta from precision and recall. Zero when both are zero.
pub fn fbeta_from_pr(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Accuracy, precision, recall, F1, and F2 from confusion counts.
///
/// Zero-denominator conventions: precision and recall are 0 when their
/// denominators are 0, and F-beta is 0 when precision = recall = 0.
pub fn compute_metrics(c: &ConfusionCounts) -> Metrics {
    let total = c.total();
    debug_assert!(total > 0, "compute_metrics needs at least one sample");
    let accuracy = (c.tpc + c.tnc) as f64 / total as f64;
    let precision = ratio(c.tpc, c.tpc + c.fpc);
    let recall = ratio(c.tpc, c.tpc + c.fnc);
    Metrics {
        accuracy,
        precision,
        recall,
        f1: fbeta_from_pr(precision, recall, 1.0),
        f2: fbeta_from_pr(precision, recall, 2.0),
        auc: None,
    }
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Rank-based ROC-AUC (Mann-Whitney): the probability that a random
/// positive outscores a random negative, with ties counted one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    // Midranks over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; every member of the tie group gets the average.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// How the half-width of a 95% interval is computed from fold values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// z = 1.96 on the standard error.
    Normal,
    /// t(0.975, k-1) on the standard error; wider for small k.
    StudentT,
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CiMethod::Normal => f.write_str("normal"),
            CiMethod::StudentT => f.write_str("student_t"),
        }
    }
}

/// Mean and 95% half-width over k folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub half_width: f64,
    pub k: usize,
}

impl Summary {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    /// Intervals overlap (inclusive) — the tie criterion.
    pub fn overlaps(&self, other: &Summary) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// Mean and 95% half-width of per-fold values. Requires at least 2 folds.
pub fn aggregate_folds(fold_values: &[f64], method: CiMethod) -> Result<Summary, EvalError> {
    let k = fold_values.len();
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    let n = k as f64;
    let mean = fold_values.iter().sum::<f64>() / n;
    let var = fold_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = var.sqrt() / n.sqrt();
    let quantile = match method {
        CiMethod::Normal => Z_975,
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, n - 1.0)
            .expect("valid t distribution for k >= 2")
            .inverse_cdf(0.975),
    };
    Ok(Summary {
        mean,
        half_width: quantile * stderr,
        k,
    })
}

/// Names of the reported metrics, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Accuracy,
    Precision,
    Recall,
    F1,
    F2,
    Auc,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::Accuracy,
        MetricName::Precision,
        MetricName::Recall,
        MetricName::F1,
        MetricName::F2,
        MetricName::Auc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accuracy => "accuracy",
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::Auc => "auc",
        }
    }

    /// Label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Accuracy => "Accuracy",
            Self::Precision => "Precision",
            Self::Recall => "Recall",
            Self::F1 => "F1 Score",
            Self::F2 => "F2 Score",
            Self::Auc => "AUC",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Aggregated metrics for one system across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub system: String,
    pub method: CiMethod,
    pub metrics: BTreeMap<MetricName, Summary>,
}

impl AggregateReport {
    /// Aggregate per-fold metrics. AUC is included only when every fold
    /// reported one.
    pub fn from_folds(
        system: impl Into<String>,
        folds: &[Metrics],
        method: CiMethod,
    ) -> Result<Self, EvalError> {
        if folds.len() < 2 {
            return Err(EvalError::TooFewFolds(folds.len()));
        }
        let mut metrics = BTreeMap::new();
        let series: [(MetricName, Vec<f64>); 5] = [
            (MetricName::Accuracy, folds.iter().map(|m| m.accuracy).collect()),
            (MetricName::Precision, folds.iter().map(|m| m.precision).collect()),
            (MetricName::Recall, folds.iter().map(|m| m.recall).collect()),
            (MetricName::F1, folds.iter().map(|m| m.f1).collect()),
            (MetricName::F2, folds.iter().map(|m| m.f2).collect()),
        ];
        for (name, values) in series {
            metrics.insert(name, aggregate_folds(&values, method)?);
        }
        let aucs: Vec<f64> = folds.iter().filter_map(|m| m.auc).collect();
        if aucs.len() == folds.len() {
            metrics.insert(MetricName::Auc, aggregate_folds(&aucs, method)?);
        }
        Ok(AggregateReport {
            system: system.into(),
            method,
            metrics,
        })
    }

    /// Build a report directly from published (mean, half-width) pairs.
    pub fn from_summaries(
        system: impl Into<String>,
        method: CiMethod,
        entries: impl IntoIterator<Item = (MetricName, f64, f64)>,
        k: usize,
    ) -> Self {
        let metrics = entries
            .into_iter()
            .map(|(name, mean, half_width)| (name, Summary { mean, half_width, k }))
            .collect();
        AggregateReport {
            system: system.into(),
            method,
            metrics,
        }
    }

    pub fn summary(&self, metric: MetricName) -> Result<&Summary, EvalError> {
        self.metrics
            .get(&metric)
            .ok_or_else(|| EvalError::MissingMetric(metric, self.system.clone()))
    }
}

/// Tie verdicts for one metric across systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieAnalysis {
    pub metric: MetricName,
    /// System with the highest mean.
    pub top_system: String,
    /// Top-mean system plus everything whose interval overlaps it.
    pub best_set: Vec<String>,
    /// Every unordered pair of systems whose intervals overlap.
    pub tied_pairs: Vec<(String, String)>,
}

impl TieAnalysis {
    pub fn are_tied(&self, a: &str, b: &str) -> bool {
        self.tied_pairs
            .iter()
            .any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }
}

/// Two systems tie on a metric iff their 95% intervals overlap.
pub fn detect_ties(reports: &[AggregateReport], metric: MetricName) -> Result<TieAnalysis, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports);
    }
    let summaries: Vec<(&str, &Summary)> = reports
        .iter()
        .map(|r| Ok((r.system.as_str(), r.summary(metric)?)))
        .collect::<Result<_, EvalError>>()?;
    let mut tied_pairs = Vec::new();
    for i in 0..summaries.len() {
        for j in (i + 1)..summaries.len() {
            if summaries[i].1.overlaps(summaries[j].1) {
                tied_pairs.push((summaries[i].0.to_string(), summaries[j].0.to_string()));
            }
        }
    }
    let top = summaries
        .iter()
        .max_by(|a, b| a.1.mean.partial_cmp(&b.1.mean).expect("finite means"))
        .expect("non-empty reports");
    let best_set = summaries
        .iter()
        .filter(|(name, s)| *name == top.0 || s.overlaps(top.1))
        .map(|(name, _)| name.to_string())
        .collect();
    Ok(TieAnalysis {
        metric,
        top_system: top.0.to_string(),
        best_set,
        tied_pairs,
    })
}

/// Report output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    MarkdownTable,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportFile {
    schema_version: u32,
    reports: Vec<AggregateReport>,
}

const REPORT_SCHEMA_VERSION: u32 = 1;

/// Render aggregated reports in the requested format.
///
/// JSON is lossless; the markdown table uses "mean ± half-width" cells with
/// the per-metric best set (top mean plus CI-overlap ties) in bold.
pub fn render_report(reports: &[AggregateReport], format: ReportFormat) -> Result<String, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Empty);
    }
    match format {
        ReportFormat::Json => {
            let file = ReportFile {
                schema_version: REPORT_SCHEMA_VERSION,
                reports: reports.to_vec(),
            };
            Ok(serde_json::to_string_pretty(&file).expect("report serializes") + "\n")
        }
        ReportFormat::Csv => {
            let mut out = String::from("system,metric,mean,half_width,k,method\n");
            for r in reports {
                for (metric, s) in &r.metrics {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        r.system, metric, s.mean, s.half_width, s.k, r.method
                    ));
                }
            }
            Ok(out)
        }
        ReportFormat::MarkdownTable => render_markdown(reports),
    }
}

fn render_markdown(reports: &[AggregateReport]) -> Result<String, EvalError> {
    let mut rows: Vec<MetricName> = Vec::new();
    for name in MetricName::ALL {
        if reports.iter().any(|r| r.metrics.contains_key(&name)) {
            rows.push(name);
        }
    }
    let mut out = String::from("| Metric |");
    for r in reports {
        out.push_str(&format!(" {} |", r.system));
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(reports.len()));
    out.push('\n');
    for metric in rows {
        let best: Vec<String> = if reports.len() >= 2 && reports.iter().all(|r| r.metrics.contains_key(&metric)) {
            detect_ties(reports, metric)?.best_set
        } else {
            Vec::new()
        };
        out.push_str(&format!("| {} |", metric.display_name()));
        for r in reports {
            match r.metrics.get(&metric) {
                Some(s) => {
                    let cell = format!("{:.3} \u{b1} {:.3}", s.mean, s.half_width);
                    if best.contains(&r.system) {
                        out.push_str(&format!(" **{cell}** |"));
                    } else {
                        out.push_str(&format!(" {cell} |"));
                    }
                }
                None => out.push_str(" n/a |"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Render and write a report file.
pub fn emit_report(
    reports: &[AggregateReport],
    format: ReportFormat,
    path: &Path,
) -> Result<(), EvalError> {
    let rendered = render_report(reports, format)?;
    std::fs::write(path, rendered).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a JSON report produced by [`render_report`].
pub fn parse_report_json(raw: &str) -> Result<Vec<AggregateReport>, serde_json::Error> {
    let file: ReportFile = serde_json::from_str(raw)?;
    Ok(file.reports)
}
