//! Corpus-scale orchestration: run the full fit + goodness-of-fit +
//! likelihood-ratio bundle for every text, then aggregate.
//!
//! Every text gets its own sampler seed derived from the master seed and
//! the text id, so results do not depend on worker count or completion
//! order; a run is reproduced byte for byte by the same seed, config and
//! input set. Per-text failures are quarantined with a reason and the run
//! completes.

mod aggregate;

pub use aggregate::*;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    ingest_path, read_frequency_file, read_manifest, write_frequency_file, write_manifest,
    CorpusError, IngestConfig, ManifestEntry, RejectReason, TextRecord,
};
use crate::distributions::FamilyKind;
use crate::estimation::{fit_mle, FitError, FitResult};
use crate::gof::{mc_test, GofError, GofResult};
use crate::model_selection::{lr_test, LrError, LrResult};
use crate::sampling::SamplerState;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("missing manifest at {0}")]
    MissingManifest(PathBuf),
}

/// Per-text analysis failures; quarantined, not fatal.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyzeError {
    #[error("fit: {0}")]
    Fit(#[from] FitError),
    #[error("goodness of fit: {0}")]
    Gof(String),
}

/// Knobs of a full analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Master seed; per-text seeds derive from it and the text id.
    pub seed: u64,
    /// Monte-Carlo replicates per goodness-of-fit test.
    pub n_sims: u32,
    /// Lower frequency cutoff used by every fit.
    pub a: u64,
    /// Tokenizer flags, recorded for reproducibility.
    pub fold_case: bool,
    pub strip: bool,
    pub min_tokens: u64,
    /// Keep per-replicate KS statistics in reports (large).
    pub keep_replicates: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: 0,
            n_sims: 100,
            a: 1,
            fold_case: true,
            strip: true,
            min_tokens: 100,
            keep_replicates: false,
        }
    }
}

impl AnalysisConfig {
    pub fn fingerprint(&self) -> ConfigFingerprint {
        ConfigFingerprint {
            seed: self.seed,
            n_sims: self.n_sims,
            a: self.a,
            fold_case: self.fold_case,
            strip: self.strip,
            min_tokens: self.min_tokens,
        }
    }

    pub fn ingest_config(&self) -> IngestConfig {
        IngestConfig {
            fold_case: self.fold_case,
            strip: self.strip,
            min_tokens: self.min_tokens,
        }
    }
}

/// The configuration stamp carried by every report. Aggregation refuses
/// to mix reports with different stamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigFingerprint {
    pub seed: u64,
    pub n_sims: u32,
    pub a: u64,
    pub fold_case: bool,
    pub strip: bool,
    pub min_tokens: u64,
}

/// Fit plus goodness-of-fit for one family on one text. `gof` is absent
/// exactly when the fit is degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gof: Option<GofResult>,
}

/// Likelihood-ratio outcome for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LrOutcome {
    Ok {
        #[serde(flatten)]
        result: LrResult,
    },
    /// All per-point log-ratios identical; the test statistic is undefined.
    ZeroVariance,
    Skipped {
        reason: String,
    },
}

impl LrOutcome {
    pub fn as_ok(&self) -> Option<&LrResult> {
        match self {
            LrOutcome::Ok { result } => Some(result),
            _ => None,
        }
    }
}

/// The full per-text analysis bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextReport {
    pub id: String,
    pub length_tokens: u64,
    pub vocabulary: u64,
    pub config: ConfigFingerprint,
    pub f1: FamilyReport,
    pub f2: FamilyReport,
    pub f3: FamilyReport,
    pub lr: LrOutcome,
    /// Set when every family fit is degenerate.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub all_degenerate: bool,
}

impl TextReport {
    pub fn family(&self, kind: FamilyKind) -> &FamilyReport {
        match kind {
            FamilyKind::F1 => &self.f1,
            FamilyKind::F2 => &self.f2,
            FamilyKind::F3 => &self.f3,
        }
    }

    /// Monte-Carlo p-value for one family, when the fit was testable.
    pub fn p_value(&self, kind: FamilyKind) -> Option<f64> {
        self.family(kind).gof.as_ref().map(|g| g.p_value)
    }

    pub fn beta(&self, kind: FamilyKind) -> f64 {
        self.family(kind).fit.model.beta()
    }
}

/// Stable 64-bit FNV-1a over the master seed and the text id. Gives every
/// text its own reproducible sampler seed under any scheduling.
pub fn derive_text_seed(master_seed: u64, id: &str) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut hash = OFFSET;
    for &byte in master_seed.to_le_bytes().iter().chain(id.as_bytes()) {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

fn family_stream(kind: FamilyKind) -> u64 {
    // replicate streams occupy offsets below 2^40 of the family base
    match kind {
        FamilyKind::F1 => 0,
        FamilyKind::F2 => 1 << 48,
        FamilyKind::F3 => 2 << 48,
    }
}

fn analyze_family(
    record: &TextRecord,
    kind: FamilyKind,
    config: &AnalysisConfig,
    text_seed: u64,
) -> Result<FamilyReport, AnalyzeError> {
    let state = SamplerState::new(text_seed, family_stream(kind));
    match mc_test(&record.frequencies, kind, config.a, config.n_sims, &state) {
        Ok((fit, mut gof)) => {
            if !config.keep_replicates {
                gof.replicate_ds = None;
            }
            Ok(FamilyReport { fit, gof: Some(gof) })
        }
        Err(GofError::DegenerateFit) => {
            let fit = fit_mle(kind, &record.frequencies, config.a).map_err(AnalyzeError::Fit)?;
            Ok(FamilyReport { fit, gof: None })
        }
        Err(GofError::Fit(e)) => Err(AnalyzeError::Fit(e)),
        Err(e) => Err(AnalyzeError::Gof(e.to_string())),
    }
}

/// Run the full three-family analysis bundle on one ingested text.
/// Deterministic given the config fingerprint and the text id.
pub fn analyze_text(record: &TextRecord, config: &AnalysisConfig) -> Result<TextReport, AnalyzeError> {
    let text_seed = derive_text_seed(config.seed, &record.id);
    let f1 = analyze_family(record, FamilyKind::F1, config, text_seed)?;
    let f2 = analyze_family(record, FamilyKind::F2, config, text_seed)?;
    let f3 = analyze_family(record, FamilyKind::F3, config, text_seed)?;

    let lr = if f1.fit.degenerate || f2.fit.degenerate {
        LrOutcome::Skipped { reason: "degenerate fit".into() }
    } else {
        match lr_test(
            &record.frequencies,
            f1.fit.model.beta(),
            f2.fit.model.beta(),
            config.a,
        ) {
            Ok(result) => LrOutcome::Ok { result },
            Err(LrError::ZeroVariance) => LrOutcome::ZeroVariance,
            Err(e) => LrOutcome::Skipped { reason: e.to_string() },
        }
    };

    let all_degenerate = f1.fit.degenerate && f2.fit.degenerate && f3.fit.degenerate;
    Ok(TextReport {
        id: record.id.clone(),
        length_tokens: record.length_tokens,
        vocabulary: record.vocabulary,
        config: config.fingerprint(),
        f1,
        f2,
        f3,
        lr,
        all_degenerate,
    })
}

/// Per-text `(id, reason)` failures of a batch analysis.
pub type Quarantined = Vec<(String, String)>;

/// Analyze a batch of texts with bounded parallelism (`jobs = 0` uses the
/// default pool size). Reports come back sorted by text id; per-text
/// failures are returned as `(id, reason)` pairs.
pub fn analyze_corpus(
    records: &[TextRecord],
    config: &AnalysisConfig,
    jobs: usize,
) -> Result<(Vec<TextReport>, Quarantined), PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    let outcomes: Vec<(String, Result<TextReport, AnalyzeError>)> = pool.install(|| {
        records
            .par_iter()
            .map(|record| (record.id.clone(), analyze_text(record, config)))
            .collect()
    });

    let mut reports = Vec::new();
    let mut quarantined = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(report) => reports.push(report),
            Err(e) => quarantined.push((id, e.to_string())),
        }
    }
    reports.sort_by(|x, y| x.id.cmp(&y.id));
    quarantined.sort();
    Ok((reports, quarantined))
}

pub fn write_reports_jsonl(path: &Path, reports: &[TextReport]) -> Result<(), PipelineError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for report in reports {
        serde_json::to_writer(&mut out, report)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_reports_jsonl(path: &Path) -> Result<Vec<TextReport>, PipelineError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut reports = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        reports.push(serde_json::from_str(&line)?);
    }
    Ok(reports)
}

/// Result of ingesting a directory of raw text files.
#[derive(Debug)]
pub struct IngestSummary {
    pub accepted: usize,
    pub rejected: Vec<(String, RejectReason)>,
    pub manifest_path: PathBuf,
}

/// Ingest every regular file of a directory (non-recursive, sorted by
/// name): write one frequency sidecar per accepted text under
/// `out_dir/freq/` plus a `manifest.csv` covering accepted and rejected
/// documents alike.
pub fn ingest_directory(
    in_dir: &Path,
    out_dir: &Path,
    config: &IngestConfig,
) -> Result<IngestSummary, PipelineError> {
    let freq_dir = out_dir.join("freq");
    fs::create_dir_all(&freq_dir)?;

    let mut paths: Vec<PathBuf> = fs::read_dir(in_dir)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| path.is_file())
        .collect();
    paths.sort();

    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    let mut accepted = 0usize;
    for path in &paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.to_string_lossy().into_owned());
        match ingest_path(path, config) {
            Ok(record) => {
                write_frequency_file(&freq_dir.join(format!("{}.txt", record.id)), &record.frequencies)?;
                entries.push(ManifestEntry::accepted(&record));
                accepted += 1;
            }
            Err(reason) => {
                entries.push(ManifestEntry::rejected(&id, &reason));
                rejected.push((id, reason));
            }
        }
    }
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &entries)?;
    Ok(IngestSummary { accepted, rejected, manifest_path })
}

/// Load the accepted texts of an ingested corpus directory back into
/// memory from its manifest and sidecar files.
pub fn load_corpus(corpus_dir: &Path) -> Result<Vec<TextRecord>, PipelineError> {
    let manifest_path = corpus_dir.join("manifest.csv");
    if !manifest_path.is_file() {
        return Err(PipelineError::MissingManifest(manifest_path));
    }
    let mut records = Vec::new();
    for entry in read_manifest(&manifest_path)? {
        if !entry.is_accepted() {
            continue;
        }
        let freq = read_frequency_file(&corpus_dir.join("freq").join(format!("{}.txt", entry.id)))?;
        records.push(TextRecord {
            id: entry.id,
            length_tokens: freq.total_tokens(),
            vocabulary: freq.n_types() as u64,
            frequencies: freq,
        });
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

/// Summary of a full corpus run.
#[derive(Debug)]
pub struct RunSummary {
    pub analyzed: usize,
    pub quarantined: Quarantined,
    pub reports_path: PathBuf,
    pub aggregate_dir: PathBuf,
    pub warnings: Vec<String>,
}

/// Full pipeline over an ingested corpus: analyze every accepted text,
/// write `reports.jsonl` plus one CSV per aggregate table under
/// `out_dir/aggregate/`. Per-text failures land in `quarantine.csv` and
/// do not abort the run; an empty manifest completes with a warning.
pub fn run_corpus(
    corpus_dir: &Path,
    out_dir: &Path,
    config: &AnalysisConfig,
    options: &AggregateOptions,
    jobs: usize,
) -> Result<RunSummary, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let records = load_corpus(corpus_dir)?;
    let (reports, quarantined) = analyze_corpus(&records, config, jobs)?;

    let reports_path = out_dir.join("reports.jsonl");
    write_reports_jsonl(&reports_path, &reports)?;

    if !quarantined.is_empty() {
        let mut writer = csv::Writer::from_path(out_dir.join("quarantine.csv"))?;
        writer.write_record(["id", "reason"])?;
        for (id, reason) in &quarantined {
            writer.write_record([id, reason])?;
        }
        writer.flush()?;
    }

    let aggregate_dir = out_dir.join("aggregate");
    let agg = aggregate(&reports, options)?;
    write_aggregate_csvs(&agg, &aggregate_dir)?;

    let mut warnings = agg.warnings.clone();
    if reports.is_empty() {
        warnings.push("no texts analyzed; aggregate is empty".to_string());
    }
    Ok(RunSummary {
        analyzed: reports.len(),
        quarantined,
        reports_path,
        aggregate_dir,
        warnings,
    })
}
