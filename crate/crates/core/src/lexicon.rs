//! Per-category social-identifier keyword lists and the occurrence matcher
//! that pulls extracted-negative candidates out of unannotated text.
//!
//! Matching is case-insensitive and token-bounded: the keyword "white"
//! matches "White matter" but not "whitewash". Multi-word keywords match
//! contiguous token runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Excerpt, Origin};
use crate::text::token_strings;

/// The social-identifier categories tracked by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryName {
    Sex,
    Gender,
    Race,
    Ethnicity,
    Age,
    Geography,
}

impl CategoryName {
    pub const ALL: [CategoryName; 6] = [
        CategoryName::Sex,
        CategoryName::Gender,
        CategoryName::Race,
        CategoryName::Ethnicity,
        CategoryName::Age,
        CategoryName::Geography,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sex" => Some(Self::Sex),
            "gender" => Some(Self::Gender),
            "race" => Some(Self::Race),
            "ethnicity" => Some(Self::Ethnicity),
            "age" => Some(Self::Age),
            "geography" => Some(Self::Geography),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sex => "sex",
            Self::Gender => "gender",
            Self::Race => "race",
            Self::Ethnicity => "ethnicity",
            Self::Age => "age",
            Self::Geography => "geography",
        }
    }

    /// Race and ethnicity terms are the ambiguous ones worth disambiguating
    /// by default; the other categories pass through the filter unchecked.
    pub fn wsd_enabled_default(self) -> bool {
        matches!(self, Self::Race | Self::Ethnicity)
    }
}

impl fmt::Display for CategoryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A category together with its disambiguation flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: CategoryName,
    pub wsd_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CategoryEntry {
    wsd_enabled: bool,
    keywords: Vec<String>,
}

/// Immutable keyword lists per category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<CategoryName, CategoryEntry>,
}

/// One keyword occurrence in an excerpt, as a half-open token span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordMatch {
    pub excerpt_id: String,
    pub category: CategoryName,
    pub keyword: String,
    pub start_token: usize,
    pub end_token: usize,
}

/// An extracted excerpt paired with every keyword occurrence found in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XnCandidate {
    pub excerpt: Excerpt,
    pub matches: Vec<KeywordMatch>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown category name `{name}`")]
    UnknownCategory { name: String },
    #[error("category `{category}` contains an empty keyword")]
    EmptyKeyword { category: CategoryName },
}

impl Lexicon {
    /// Build a lexicon from (category, keywords) pairs with default
    /// disambiguation flags. Keywords are lowercased and deduplicated.
    pub fn from_entries<I, S>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (CategoryName, Vec<S>)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, keywords) in entries {
            let entry = map.entry(name).or_insert_with(|| CategoryEntry {
                wsd_enabled: name.wsd_enabled_default(),
                keywords: Vec::new(),
            });
            for kw in keywords {
                let kw = kw.into().trim().to_lowercase();
                if kw.is_empty() {
                    return Err(LexiconError::EmptyKeyword { category: name });
                }
                entry.keywords.push(kw);
            }
        }
        for entry in map.values_mut() {
            entry.keywords.sort();
            entry.keywords.dedup();
        }
        Ok(Lexicon { entries: map })
    }

    pub fn set_wsd_enabled(&mut self, name: CategoryName, enabled: bool) {
        if let Some(entry) = self.entries.get_mut(&name) {
            entry.wsd_enabled = enabled;
        }
    }

    pub fn categories(&self) -> impl Iterator<Item = Category> + '_ {
        self.entries.iter().map(|(name, e)| Category {
            name: *name,
            wsd_enabled: e.wsd_enabled,
        })
    }

    pub fn keywords(&self, name: CategoryName) -> &[String] {
        self.entries.get(&name).map(|e| e.keywords.as_slice()).unwrap_or(&[])
    }

    pub fn wsd_enabled(&self, name: CategoryName) -> bool {
        self.entries
            .get(&name)
            .map(|e| e.wsd_enabled)
            .unwrap_or_else(|| name.wsd_enabled_default())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(|e| e.keywords.is_empty())
    }
}

/// Lexicon file shape: one top-level array of keywords per category name,
/// plus an optional `[wsd_enabled]` table of per-category overrides.
#[derive(Deserialize)]
struct LexiconFile {
    #[serde(flatten)]
    categories: BTreeMap<String, toml::Value>,
}

/// Load a lexicon from a TOML file.
pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let raw = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let parse_err = |message: String| LexiconError::Parse {
        path: path.display().to_string(),
        message,
    };
    let file: LexiconFile = toml::from_str(&raw).map_err(|e| parse_err(e.to_string()))?;
    let mut entries: Vec<(CategoryName, Vec<String>)> = Vec::new();
    let mut overrides: Vec<(CategoryName, bool)> = Vec::new();
    for (key, value) in file.categories {
        if key == "wsd_enabled" {
            let table = value
                .as_table()
                .ok_or_else(|| parse_err("`wsd_enabled` must be a table of booleans".into()))?;
            for (cat_key, flag) in table {
                let name = CategoryName::parse(cat_key)
                    .ok_or_else(|| LexiconError::UnknownCategory { name: cat_key.clone() })?;
                let flag = flag.as_bool().ok_or_else(|| {
                    parse_err(format!("`wsd_enabled.{cat_key}` must be a boolean"))
                })?;
                overrides.push((name, flag));
            }
            continue;
        }
        let name =
            CategoryName::parse(&key).ok_or_else(|| LexiconError::UnknownCategory { name: key.clone() })?;
        let array = value
            .as_array()
            .ok_or_else(|| parse_err(format!("category `{key}` must be an array of keywords")))?;
        let mut keywords = Vec::with_capacity(array.len());
        for item in array {
            let kw = item
                .as_str()
                .ok_or_else(|| parse_err(format!("category `{key}` contains a non-string keyword")))?;
            keywords.push(kw.to_string());
        }
        entries.push((name, keywords));
    }
    let mut lexicon = Lexicon::from_entries(entries)?;
    for (name, flag) in overrides {
        lexicon.set_wsd_enabled(name, flag);
    }
    Ok(lexicon)
}

/// Find every case-insensitive, token-bounded keyword occurrence in an
/// excerpt. Overlapping matches are all reported; output is ordered by
/// (start token, end token, category, keyword).
pub fn match_keywords(e: &Excerpt, lex: &Lexicon) -> Vec<KeywordMatch> {
    let tokens = token_strings(&e.text);
    let mut matches = Vec::new();
    for cat in lex.categories() {
        for keyword in lex.keywords(cat.name) {
            let kw_tokens = token_strings(keyword);
            if kw_tokens.is_empty() || kw_tokens.len() > tokens.len() {
                continue;
            }
            for start in 0..=(tokens.len() - kw_tokens.len()) {
                if tokens[start..start + kw_tokens.len()] == kw_tokens[..] {
                    matches.push(KeywordMatch {
                        excerpt_id: e.id.clone(),
                        category: cat.name,
                        keyword: keyword.clone(),
                        start_token: start,
                        end_token: start + kw_tokens.len(),
                    });
                }
            }
        }
    }
    matches.sort_by(|a, b| {
        (a.start_token, a.end_token, a.category, a.keyword.as_str())
            .cmp(&(b.start_token, b.end_token, b.category, b.keyword.as_str()))
    });
    matches
}

/// Keep only the unannotated excerpts containing at least one keyword,
/// each paired with its full match list. Callers pass extracted-origin
/// excerpts; non-extracted items are ignored.
pub fn extract_xn_candidates(unannotated: &[Excerpt], lex: &Lexicon) -> Vec<XnCandidate> {
    unannotated
        .iter()
        .filter(|e| e.origin == Origin::Extracted)
        .filter_map(|e| {
            let matches = match_keywords(e, lex);
            if matches.is_empty() {
                None
            } else {
                Some(XnCandidate {
                    excerpt: e.clone(),
                    matches,
                })
            }
        })
        .collect()
}
