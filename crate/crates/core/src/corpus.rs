//! Excerpt ingestion, text normalization, deduplication, and the mapping
//! from level-2 annotation codes to binary bias labels.
//!
//! The on-disk corpus is JSONL (one object per line with keys `id`, `text`,
//! `source_doc`, `page`, `level2_codes`, `type_disease_codes`, `origin`) or
//! a CSV mirror with the same column names where list fields are
//! `|`-separated tokens.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Second-tier annotation code assessing the presence or absence of bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level2Code {
    Biased,
    PotentiallyBiased,
    NonBiased,
    Review,
}

impl Level2Code {
    pub const ALL: [Level2Code; 4] = [
        Level2Code::Biased,
        Level2Code::PotentiallyBiased,
        Level2Code::NonBiased,
        Level2Code::Review,
    ];

    fn parse(s: &str) -> Option<Self> {
        match s {
            "biased" => Some(Self::Biased),
            "potentially_biased" => Some(Self::PotentiallyBiased),
            "non_biased" => Some(Self::NonBiased),
            "review" => Some(Self::Review),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Biased => "biased",
            Self::PotentiallyBiased => "potentially_biased",
            Self::NonBiased => "non_biased",
            Self::Review => "review",
        }
    }
}

/// How an excerpt entered the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Reviewed by annotators; carries level-2 codes.
    Annotated,
    /// Pulled from unannotated text by keyword search; no codes.
    Extracted,
    /// Generated by a language model; no codes.
    Synthetic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Origin::Annotated => "annotated",
            Origin::Extracted => "extracted",
            Origin::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

impl Origin {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "annotated" => Some(Self::Annotated),
            "extracted" => Some(Self::Extracted),
            "synthetic" => Some(Self::Synthetic),
            _ => None,
        }
    }
}

/// One text passage with provenance and its raw annotation codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excerpt {
    pub id: String,
    pub text: String,
    pub source_doc: String,
    pub page: Option<u32>,
    pub level2_codes: BTreeSet<Level2Code>,
    /// Raw "TYPE-disease" annotations as (category, disease) pairs. The
    /// category here is the annotation string, not a lexicon category.
    pub type_disease_codes: Vec<(String, String)>,
    pub origin: Origin,
}

/// Binary bias label derived from level-2 codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasLabel {
    Positive,
    Negative,
}

impl BiasLabel {
    pub fn is_positive(self) -> bool {
        matches!(self, BiasLabel::Positive)
    }
}

/// Headline counts for a corpus, broken down by label source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_excerpts: usize,
    pub n_positive: usize,
    pub n_labeled_negative: usize,
    pub n_extracted_negative: usize,
    pub n_synthetic: usize,
}

/// Supported corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record in field `{field}`: {message}")]
    MalformedRecord {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate excerpt id `{id}` at lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("text is empty after normalization")]
    EmptyNormalizedText,
    #[error("annotated excerpt `{id}` has no level-2 codes")]
    MissingCodes { id: String },
}

/// Unicode NFC, collapsed internal whitespace, trimmed ends. Idempotent.
pub fn normalize_text(raw: &str) -> Result<String, CorpusError> {
    let composed: String = raw.nfc().collect();
    let collapsed = composed.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return Err(CorpusError::EmptyNormalizedText);
    }
    Ok(collapsed)
}

/// Positive iff the codes intersect {biased, potentially_biased, review}.
/// Extracted and synthetic excerpts carry no codes and are always negative.
pub fn map_bias_label(e: &Excerpt) -> Result<BiasLabel, CorpusError> {
    if e.origin == Origin::Annotated && e.level2_codes.is_empty() {
        return Err(CorpusError::MissingCodes { id: e.id.clone() });
    }
    let positive = e.level2_codes.iter().any(|c| {
        matches!(
            c,
            Level2Code::Biased | Level2Code::PotentiallyBiased | Level2Code::Review
        )
    });
    Ok(if positive {
        BiasLabel::Positive
    } else {
        BiasLabel::Negative
    })
}

/// Count excerpts by label source. Fails on annotated excerpts without codes.
pub fn corpus_stats(excerpts: &[Excerpt]) -> Result<CorpusStats, CorpusError> {
    let mut stats = CorpusStats {
        n_excerpts: excerpts.len(),
        n_positive: 0,
        n_labeled_negative: 0,
        n_extracted_negative: 0,
        n_synthetic: 0,
    };
    for e in excerpts {
        match e.origin {
            Origin::Annotated => {
                if map_bias_label(e)?.is_positive() {
                    stats.n_positive += 1;
                } else {
                    stats.n_labeled_negative += 1;
                }
            }
            Origin::Extracted => stats.n_extracted_negative += 1,
            Origin::Synthetic => stats.n_synthetic += 1,
        }
    }
    Ok(stats)
}

/// A duplicate dropped by [`deduplicate`], pointing at the excerpt kept in
/// its place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedDuplicate {
    pub removed_id: String,
    pub kept_id: String,
}

/// Result of exact-text deduplication.
#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub kept: Vec<Excerpt>,
    pub removed: Vec<RemovedDuplicate>,
}

/// Keep the first occurrence per exact normalized-text key, preserving order.
pub fn deduplicate(excerpts: Vec<Excerpt>) -> DedupOutcome {
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut kept = Vec::with_capacity(excerpts.len());
    let mut removed = Vec::new();
    for e in excerpts {
        match seen.entry(e.text.clone()) {
            Entry::Vacant(slot) => {
                slot.insert(e.id.clone());
                kept.push(e);
            }
            Entry::Occupied(slot) => removed.push(RemovedDuplicate {
                removed_id: e.id,
                kept_id: slot.get().clone(),
            }),
        }
    }
    DedupOutcome { kept, removed }
}

/// Ingest a corpus file. Text is normalized, per-record invariants are
/// checked, and input order is preserved.
pub fn ingest_excerpts(path: &Path, format: CorpusFormat) -> Result<Vec<Excerpt>, CorpusError> {
    let raw = match format {
        CorpusFormat::Jsonl => read_jsonl(path)?,
        CorpusFormat::Csv => read_csv(path)?,
    };
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
    let mut excerpts = Vec::with_capacity(raw.len());
    for (line, mut e) in raw {
        if e.id.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line,
                field: "id".into(),
                message: "id must be non-empty".into(),
            });
        }
        e.text = normalize_text(&e.text).map_err(|_| CorpusError::MalformedRecord {
            line,
            field: "text".into(),
            message: "text is empty after normalization".into(),
        })?;
        match (e.origin, e.level2_codes.is_empty()) {
            (Origin::Annotated, true) => {
                return Err(CorpusError::MalformedRecord {
                    line,
                    field: "level2_codes".into(),
                    message: format!("annotated excerpt `{}` has no level-2 codes", e.id),
                })
            }
            (Origin::Extracted | Origin::Synthetic, false) => {
                return Err(CorpusError::MalformedRecord {
                    line,
                    field: "level2_codes".into(),
                    message: format!(
                        "{} excerpt `{}` must not carry level-2 codes",
                        e.origin, e.id
                    ),
                })
            }
            _ => {}
        }
        if let Some(&first_line) = by_id.get(&e.id) {
            return Err(CorpusError::DuplicateId {
                id: e.id,
                first_line,
                second_line: line,
            });
        }
        by_id.insert(e.id.clone(), line);
        excerpts.push(e);
    }
    Ok(excerpts)
}

/// Write excerpts in the given format; the inverse of [`ingest_excerpts`].
pub fn write_excerpts(
    path: &Path,
    excerpts: &[Excerpt],
    format: CorpusFormat,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    match format {
        CorpusFormat::Jsonl => {
            for e in excerpts {
                let line = serde_json::to_string(e).expect("excerpt serializes");
                writeln!(w, "{line}").map_err(io_err)?;
            }
        }
        CorpusFormat::Csv => {
            let mut csv_w = csv::Writer::from_writer(w);
            csv_w
                .write_record(CSV_HEADER)
                .map_err(|e| csv_to_corpus_error(path, e))?;
            for e in excerpts {
                let codes = e
                    .level2_codes
                    .iter()
                    .map(|c| c.as_str())
                    .collect::<Vec<_>>()
                    .join("|");
                let tdc = e
                    .type_disease_codes
                    .iter()
                    .map(|(t, d)| format!("{t}-{d}"))
                    .collect::<Vec<_>>()
                    .join("|");
                let page = e.page.map(|p| p.to_string()).unwrap_or_default();
                csv_w
                    .write_record([
                        e.id.as_str(),
                        e.text.as_str(),
                        e.source_doc.as_str(),
                        page.as_str(),
                        codes.as_str(),
                        tdc.as_str(),
                        &e.origin.to_string(),
                    ])
                    .map_err(|e| csv_to_corpus_error(path, e))?;
            }
            csv_w.flush().map_err(io_err)?;
            return Ok(());
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

const CSV_HEADER: [&str; 7] = [
    "id",
    "text",
    "source_doc",
    "page",
    "level2_codes",
    "type_disease_codes",
    "origin",
];

fn csv_to_corpus_error(path: &Path, e: csv::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, Excerpt)>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let e: Excerpt =
            serde_json::from_str(&line).map_err(|err| CorpusError::MalformedRecord {
                line: line_no,
                field: json_error_field(&line),
                message: err.to_string(),
            })?;
        out.push((line_no, e));
    }
    Ok(out)
}

/// Best-effort name of the offending field for a JSONL parse error: the
/// first required key missing from the raw object, if any.
fn json_error_field(line: &str) -> String {
    if let Ok(value) = serde_json::from_str::<serde_json::Value>(line) {
        if let Some(obj) = value.as_object() {
            for key in CSV_HEADER {
                if key != "page" && !obj.contains_key(key) {
                    return key.to_string();
                }
            }
        }
    }
    "record".to_string()
}

fn read_csv(path: &Path) -> Result<Vec<(usize, Excerpt)>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| csv_to_corpus_error(path, e))?
        .clone();
    for required in CSV_HEADER {
        if !headers.iter().any(|h| h == required) {
            return Err(CorpusError::MalformedRecord {
                line: 1,
                field: required.to_string(),
                message: "missing CSV column".into(),
            });
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let cols: Vec<usize> = CSV_HEADER.iter().map(|h| col(h)).collect();
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // Header occupies line 1; data records start at line 2.
        let line = idx + 2;
        let record = record.map_err(|e| csv_to_corpus_error(path, e))?;
        let field = |i: usize, name: &str| -> Result<&str, CorpusError> {
            record.get(cols[i]).ok_or_else(|| CorpusError::MalformedRecord {
                line,
                field: name.to_string(),
                message: "missing field".into(),
            })
        };
        let page_raw = field(3, "page")?;
        let page = if page_raw.is_empty() {
            None
        } else {
            Some(
                page_raw
                    .parse::<u32>()
                    .map_err(|e| CorpusError::MalformedRecord {
                        line,
                        field: "page".into(),
                        message: e.to_string(),
                    })?,
            )
        };
        let mut codes = BTreeSet::new();
        for token in split_list(field(4, "level2_codes")?) {
            let code = Level2Code::parse(token).ok_or_else(|| CorpusError::MalformedRecord {
                line,
                field: "level2_codes".into(),
                message: format!("unknown level-2 code `{token}`"),
            })?;
            codes.insert(code);
        }
        let mut tdc = Vec::new();
        for token in split_list(field(5, "type_disease_codes")?) {
            // Category names never contain '-'; split on the first one.
            let (cat, disease) =
                token
                    .split_once('-')
                    .ok_or_else(|| CorpusError::MalformedRecord {
                        line,
                        field: "type_disease_codes".into(),
                        message: format!("expected `TYPE-disease`, got `{token}`"),
                    })?;
            tdc.push((cat.to_string(), disease.to_string()));
        }
        let origin_raw = field(6, "origin")?;
        let origin = Origin::parse(origin_raw).ok_or_else(|| CorpusError::MalformedRecord {
            line,
            field: "origin".into(),
            message: format!("unknown origin `{origin_raw}`"),
        })?;
        out.push((
            line,
            Excerpt {
                id: field(0, "id")?.to_string(),
                text: field(1, "text")?.to_string(),
                source_doc: field(2, "source_doc")?.to_string(),
                page,
                level2_codes: codes,
                type_disease_codes: tdc,
                origin,
            },
        ));
    }
    Ok(out)
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split('|').map(str::trim).filter(|s| !s.is_empty())
}
