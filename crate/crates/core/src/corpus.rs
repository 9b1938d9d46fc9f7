//! Corpus ingestion: boilerplate stripping, letters-only tokenization and
//! word-frequency extraction.
//!
//! Documents are expected in the Project Gutenberg plain-text layout: the
//! body sits between a `*** START OF ... PROJECT GUTENBERG ...` line and
//! the matching `*** END OF ...` line (historical `THIS`/`THE` wording
//! variants included). Documents without both delimiters are discarded
//! rather than half-cleaned. Tokens are maximal runs of Unicode letters
//! (general category L); digits, punctuation and apostrophes all split.
//! Texts that end up with too few tokens carry no statistical value and
//! are rejected as well.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::estimation::FrequencyVector;

/// Why a document was rejected during ingestion. Rejections are tallied by
/// callers, not fatal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    /// Start or end delimiter missing; the document cannot be cleaned.
    NoDelimiters,
    /// Not enough word tokens after tokenization.
    ShortText { tokens: u64 },
    /// Unreadable file or invalid encoding.
    Io { message: String },
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::NoDelimiters => "no_delimiters",
            RejectReason::ShortText { .. } => "short_text",
            RejectReason::Io { .. } => "io",
        }
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::NoDelimiters => write!(f, "no_delimiters"),
            RejectReason::ShortText { tokens } => write!(f, "short_text({tokens})"),
            RejectReason::Io { message } => write!(f, "io({message})"),
        }
    }
}

/// Hard I/O and format errors for the sidecar and manifest helpers.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: expected a positive integer, got {text:?}")]
    BadFrequencyLine { path: String, line: usize, text: String },
}

/// Ingestion switches. Every flag is recorded in downstream reports so a
/// run can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Lowercase tokens before counting (merges case variants of a type).
    pub fold_case: bool,
    /// Strip Gutenberg boilerplate; disable for pre-cleaned texts.
    pub strip: bool,
    /// Keep only texts with strictly more than this many tokens.
    pub min_tokens: u64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { fold_case: true, strip: true, min_tokens: 100 }
    }
}

/// One ingested text: identifier, token and type counts, and the
/// frequency multiset (descending, so index + 1 is the empirical rank).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRecord {
    pub id: String,
    /// Token count `L`.
    pub length_tokens: u64,
    /// Type count `V`.
    pub vocabulary: u64,
    pub frequencies: FrequencyVector,
}

fn is_start_marker(line: &str) -> bool {
    let upper = line.to_uppercase();
    upper.contains("*** START OF") && upper.contains("PROJECT GUTENBERG")
}

fn is_end_marker(line: &str) -> bool {
    let upper = line.to_uppercase();
    upper.contains("*** END OF") && upper.contains("PROJECT GUTENBERG")
}

/// Extract the body strictly between the start and end delimiter lines
/// (neither line included). The result is a contiguous slice of the
/// input. Missing delimiters reject the document.
pub fn strip_boilerplate(raw: &str) -> Result<&str, RejectReason> {
    let mut body_start = None;
    let mut pos = 0;
    for line in raw.split_inclusive('\n') {
        let end = pos + line.len();
        match body_start {
            None => {
                if is_start_marker(line) {
                    body_start = Some(end);
                }
            }
            Some(start) => {
                if is_end_marker(line) {
                    return Ok(&raw[start..pos]);
                }
            }
        }
        pos = end;
    }
    Err(RejectReason::NoDelimiters)
}

fn is_letter(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter
            | GeneralCategory::LowercaseLetter
            | GeneralCategory::TitlecaseLetter
            | GeneralCategory::ModifierLetter
            | GeneralCategory::OtherLetter
    )
}

/// Split a body into tokens: maximal runs of Unicode letters, everything
/// else is a separator. Order preserved. Case folding happens before
/// splitting (a few uppercase letters lower to sequences containing
/// combining marks, which must act as separators like any other
/// non-letter).
pub fn tokenize(body: &str, fold_case: bool) -> Vec<String> {
    let split = |text: &str| -> Vec<String> {
        text.split(|c: char| !is_letter(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    if fold_case {
        split(&body.to_lowercase())
    } else {
        split(body)
    }
}

/// Count occurrences per distinct token and return the frequency multiset.
pub fn word_frequencies<S: AsRef<str>>(tokens: &[S]) -> FrequencyVector {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for token in tokens {
        *counts.entry(token.as_ref()).or_insert(0) += 1;
    }
    FrequencyVector::new(counts.into_values().collect()).expect("counts are positive")
}

/// Full ingestion of one document given as a string.
pub fn ingest_str(id: &str, raw: &str, config: &IngestConfig) -> Result<TextRecord, RejectReason> {
    let body = if config.strip { strip_boilerplate(raw)? } else { raw };
    let tokens = tokenize(body, config.fold_case);
    let length = tokens.len() as u64;
    if length <= config.min_tokens {
        return Err(RejectReason::ShortText { tokens: length });
    }
    let frequencies = word_frequencies(&tokens);
    Ok(TextRecord {
        id: id.to_string(),
        length_tokens: length,
        vocabulary: frequencies.n_types() as u64,
        frequencies,
    })
}

/// Ingest a file; the document id is the file stem.
pub fn ingest_path(path: &Path, config: &IngestConfig) -> Result<TextRecord, RejectReason> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned());
    let raw = fs::read_to_string(path).map_err(|e| RejectReason::Io { message: e.to_string() })?;
    ingest_str(&id, &raw, config)
}

/// Write a frequency sidecar: one value per line, descending.
pub fn write_frequency_file(path: &Path, freq: &FrequencyVector) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for v in freq.values() {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a frequency sidecar (one positive integer per line; blank lines
/// ignored).
pub fn read_frequency_file(path: &Path) -> Result<FrequencyVector, CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: u64 = line.parse().map_err(|_| CorpusError::BadFrequencyLine {
            path: path.display().to_string(),
            line: i + 1,
            text: line.to_string(),
        })?;
        if value == 0 {
            return Err(CorpusError::BadFrequencyLine {
                path: path.display().to_string(),
                line: i + 1,
                text: line.to_string(),
            });
        }
        values.push(value);
    }
    Ok(FrequencyVector::new(values).expect("zeros rejected above"))
}

/// Manifest row: one per document seen during ingestion, accepted or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub length_tokens: u64,
    pub vocabulary: u64,
    /// Empty for accepted texts, otherwise the rejection code.
    pub rejection_reason: String,
}

impl ManifestEntry {
    pub fn accepted(record: &TextRecord) -> Self {
        ManifestEntry {
            id: record.id.clone(),
            length_tokens: record.length_tokens,
            vocabulary: record.vocabulary,
            rejection_reason: String::new(),
        }
    }

    pub fn rejected(id: &str, reason: &RejectReason) -> Self {
        let (l, v) = match reason {
            RejectReason::ShortText { tokens } => (*tokens, 0),
            _ => (0, 0),
        };
        ManifestEntry {
            id: id.to_string(),
            length_tokens: l,
            vocabulary: v,
            rejection_reason: reason.code().to_string(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.rejection_reason.is_empty()
    }
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_path(path)?;
    for entry in entries {
        writer.serialize(entry)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut entries = Vec::new();
    for row in reader.deserialize() {
        entries.push(row?);
    }
    Ok(entries)
}
