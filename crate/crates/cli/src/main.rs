//! `zipf` — fit Zipf-like distributions to word-frequency data, test the
//! fits, and run the whole pipeline over a corpus.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use zipf_core::corpus::{read_frequency_file, IngestConfig};
use zipf_core::distributions::FamilyKind;
use zipf_core::estimation::{fit_mle, FrequencyVector};
use zipf_core::gof::mc_pvalue;
use zipf_core::model_selection::lr_test;
use zipf_core::pipeline::{
    aggregate, ingest_directory, read_reports_jsonl, run_corpus, write_aggregate_csvs,
    AggregateOptions, AnalysisConfig,
};
use zipf_core::sampling::{sample_f1, sample_f2, sample_f3, SamplerState};

#[derive(Parser)]
#[command(name = "zipf", version, about = "Zipf-law analysis of word-frequency distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFit {
    /// Distribution family: f1, f2 or f3
    #[arg(long)]
    kind: FamilyKind,
    /// Lower frequency cutoff
    #[arg(long, default_value_t = 1)]
    a: u64,
    /// File with one frequency per line
    #[arg(long)]
    input: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random variates from one family, one integer per line
    Sample {
        #[arg(long)]
        kind: FamilyKind,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        a: u64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
    /// Maximum-likelihood exponent fit; prints a JSON fit result
    Fit {
        #[command(flatten)]
        common: CommonFit,
    },
    /// Monte-Carlo KS goodness-of-fit test; prints a JSON result
    Gof {
        #[command(flatten)]
        common: CommonFit,
        /// Monte-Carlo replicates
        #[arg(long, default_value_t = 100)]
        sims: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Include per-replicate KS statistics in the output
        #[arg(long)]
        keep_replicates: bool,
    },
    /// Fit both power-law families and run the likelihood-ratio test
    Lr {
        #[arg(long, default_value_t = 1)]
        a: u64,
        #[arg(long)]
        input: PathBuf,
    },
    /// Tokenize a directory of plain-text documents into frequency
    /// sidecars plus a manifest
    Ingest {
        /// Directory of input text files
        #[arg(long = "in")]
        input: PathBuf,
        /// Output corpus directory (manifest.csv + freq/)
        #[arg(long)]
        out: PathBuf,
        /// Keep original letter case (case variants stay distinct types)
        #[arg(long)]
        no_fold_case: bool,
        /// Do not look for Gutenberg delimiters (pre-cleaned texts)
        #[arg(long)]
        no_strip: bool,
        /// Keep only texts with strictly more tokens than this
        #[arg(long, default_value_t = 100)]
        min_tokens: u64,
    },
    /// Full pipeline: analyze every text of a corpus and aggregate
    Run {
        /// Ingested corpus directory (with manifest.csv), or a directory
        /// of raw text files (ingested into OUT/corpus first)
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory (reports.jsonl + aggregate/)
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte-Carlo replicates per test
        #[arg(long, default_value_t = 100)]
        sims: u32,
        #[arg(long, default_value_t = 1)]
        a: u64,
        /// Significance levels, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.20, 0.50])]
        levels: Vec<f64>,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Texts per equal-count length bin
        #[arg(long, default_value_t = 1000)]
        bin_size: usize,
        #[arg(long)]
        no_fold_case: bool,
        #[arg(long)]
        no_strip: bool,
        #[arg(long, default_value_t = 100)]
        min_tokens: u64,
        /// Keep per-replicate KS statistics in reports.jsonl (large)
        #[arg(long)]
        keep_replicates: bool,
    },
    /// Re-aggregate an existing reports.jsonl
    Aggregate {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.20, 0.50])]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        bin_size: usize,
    },
}

fn load_frequencies(path: &Path) -> Result<FrequencyVector> {
    read_frequency_file(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sample { kind, beta, a, count, seed, stream } => {
            let mut state = SamplerState::new(seed, stream);
            let mut out = String::new();
            for _ in 0..count {
                let n = match kind {
                    FamilyKind::F1 => sample_f1(beta, a, &mut state)?,
                    FamilyKind::F2 => sample_f2(beta, a, &mut state)?,
                    FamilyKind::F3 => sample_f3(beta, a, &mut state)?,
                };
                out.push_str(&n.to_string());
                out.push('\n');
            }
            print!("{out}");
        }
        Command::Fit { common } => {
            let data = load_frequencies(&common.input)?;
            let fit = fit_mle(common.kind, &data, common.a)?;
            print_json(&fit)?;
        }
        Command::Gof { common, sims, seed, stream, keep_replicates } => {
            let data = load_frequencies(&common.input)?;
            let state = SamplerState::new(seed, stream);
            let mut result = mc_pvalue(&data, common.kind, common.a, sims, &state)?;
            if !keep_replicates {
                result.replicate_ds = None;
            }
            print_json(&result)?;
        }
        Command::Lr { a, input } => {
            let data = load_frequencies(&input)?;
            let fit1 = fit_mle(FamilyKind::F1, &data, a)?;
            let fit2 = fit_mle(FamilyKind::F2, &data, a)?;
            if fit1.degenerate || fit2.degenerate {
                bail!("sample is degenerate (all values at the cutoff); the LR test is undefined");
            }
            let lr = lr_test(&data, fit1.model.beta(), fit2.model.beta(), a)?;
            print_json(&serde_json::json!({ "f1": fit1, "f2": fit2, "lr": lr }))?;
        }
        Command::Ingest { input, out, no_fold_case, no_strip, min_tokens } => {
            let config = IngestConfig {
                fold_case: !no_fold_case,
                strip: !no_strip,
                min_tokens,
            };
            let summary = ingest_directory(&input, &out, &config)?;
            eprintln!(
                "ingested {} texts, rejected {} (manifest: {})",
                summary.accepted,
                summary.rejected.len(),
                summary.manifest_path.display()
            );
            for (id, reason) in &summary.rejected {
                eprintln!("  rejected {id}: {reason}");
            }
        }
        Command::Run {
            input,
            out,
            seed,
            sims,
            a,
            levels,
            jobs,
            bin_size,
            no_fold_case,
            no_strip,
            min_tokens,
            keep_replicates,
        } => {
            let config = AnalysisConfig {
                seed,
                n_sims: sims,
                a,
                fold_case: !no_fold_case,
                strip: !no_strip,
                min_tokens,
                keep_replicates,
            };
            // raw text directories are ingested into the output first
            let corpus_dir = if input.join("manifest.csv").is_file() {
                input.clone()
            } else {
                let corpus_out = out.join("corpus");
                let summary = ingest_directory(&input, &corpus_out, &config.ingest_config())?;
                eprintln!(
                    "ingested {} texts ({} rejected)",
                    summary.accepted,
                    summary.rejected.len()
                );
                corpus_out
            };
            let options = AggregateOptions { levels, bin_size };
            let summary = run_corpus(&corpus_dir, &out, &config, &options, jobs)?;
            eprintln!(
                "analyzed {} texts ({} quarantined); reports: {}",
                summary.analyzed,
                summary.quarantined.len(),
                summary.reports_path.display()
            );
            for (id, reason) in &summary.quarantined {
                eprintln!("  quarantined {id}: {reason}");
            }
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
        }
        Command::Aggregate { reports, out, levels, bin_size } => {
            let loaded = read_reports_jsonl(&reports)?;
            let options = AggregateOptions { levels, bin_size };
            let agg = aggregate(&loaded, &options)?;
            write_aggregate_csvs(&agg, &out)?;
            eprintln!("aggregated {} reports into {}", loaded.len(), out.display());
            for warning in &agg.warnings {
                eprintln!("warning: {warning}");
            }
        }
    }
    Ok(())
}
