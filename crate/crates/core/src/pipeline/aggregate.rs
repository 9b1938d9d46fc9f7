//! Aggregation of per-text reports into corpus-level summary tables:
//! p-value histograms and survival curves, acceptance fractions by text
//! length, exponent densities, the text-length density and the
//! likelihood-ratio cross-tabulations. Every table serializes to one CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConfigFingerprint, LrOutcome, TextReport};
use crate::distributions::FamilyKind;
use crate::model_selection::Verdict;

/// Number of histogram bins / p-value grid steps (bin width 0.01).
pub const PVALUE_BINS: usize = 100;

/// Log-binning resolution of the text-length density.
pub const LENGTH_BINS_PER_DECADE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("reports carry different config fingerprints; refusing to mix them")]
    MixedFingerprints,
    #[error("need at least {needed} accepted texts, got {got}")]
    TooFewAccepted { needed: usize, got: usize },
}

/// Aggregation-time knobs (analysis knobs live in the fingerprint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateOptions {
    /// Significance levels for acceptance tables and cross-tabs.
    pub levels: Vec<f64>,
    /// Texts per equal-count length bin.
    pub bin_size: usize,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions { levels: vec![0.05, 0.20, 0.50], bin_size: 1000 }
    }
}

fn check_fingerprints(reports: &[TextReport]) -> Result<Option<ConfigFingerprint>, AggregateError> {
    let Some(first) = reports.first() else { return Ok(None) };
    if reports.iter().any(|r| r.config != first.config) {
        return Err(AggregateError::MixedFingerprints);
    }
    Ok(Some(first.config.clone()))
}

/// Histogram of p-values for one family: 100 left-closed bins of width
/// 0.01; p = 1 lands in the last bin. Texts whose fit for this family was
/// untestable (degenerate) do not contribute.
pub fn pvalue_histogram(reports: &[TextReport], family: FamilyKind) -> Vec<u64> {
    let mut bins = vec![0u64; PVALUE_BINS];
    for report in reports {
        if let Some(p) = report.p_value(family) {
            let idx = ((p * PVALUE_BINS as f64) as usize).min(PVALUE_BINS - 1);
            bins[idx] += 1;
        }
    }
    bins
}

/// Survival curves of the p-values over the significance grid
/// 0.01..=1.00 (the zero threshold is excluded): per family the fraction
/// of texts with `p >= threshold`, plus the joint curve where both
/// power-law fits clear the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurves {
    pub thresholds: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    pub f1_and_f2: Vec<f64>,
}

type TextPredicate<'a> = &'a dyn Fn(&TextReport, f64) -> bool;

pub fn pvalue_survival(reports: &[TextReport]) -> SurvivalCurves {
    let n = reports.len().max(1) as f64;
    let thresholds: Vec<f64> = (1..=PVALUE_BINS).map(|k| k as f64 / PVALUE_BINS as f64).collect();
    let fraction = |pred: TextPredicate| -> Vec<f64> {
        thresholds
            .iter()
            .map(|&t| reports.iter().filter(|r| pred(r, t)).count() as f64 / n)
            .collect()
    };
    let at_least = |r: &TextReport, kind: FamilyKind, t: f64| {
        r.p_value(kind).is_some_and(|p| p >= t)
    };
    SurvivalCurves {
        f1: fraction(&|r, t| at_least(r, FamilyKind::F1, t)),
        f2: fraction(&|r, t| at_least(r, FamilyKind::F2, t)),
        f3: fraction(&|r, t| at_least(r, FamilyKind::F3, t)),
        f1_and_f2: fraction(&|r, t| {
            at_least(r, FamilyKind::F1, t) && at_least(r, FamilyKind::F2, t)
        }),
        thresholds,
    }
}

/// One equal-count length bin of the acceptance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub family: FamilyKind,
    pub level: f64,
    pub bin: usize,
    pub l_min: u64,
    pub l_max: u64,
    /// Geometric mean of the bin's length range.
    pub l_geomean: f64,
    pub n_texts: usize,
    pub accepted: usize,
    pub fraction: f64,
}

/// Near-zero (p < 0.01) fraction per length bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearZeroRow {
    pub family: FamilyKind,
    pub bin: usize,
    pub l_min: u64,
    pub l_max: u64,
    pub l_geomean: f64,
    pub n_texts: usize,
    pub near_zero: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LengthTables {
    pub acceptance: Vec<AcceptanceRow>,
    pub near_zero: Vec<NearZeroRow>,
    pub warnings: Vec<String>,
}

/// Sort texts by length, partition into consecutive bins of `bin_size`
/// texts (the final bin takes the remainder) labelled by the geometric
/// mean of their length range, and tabulate per-family acceptance
/// fractions at each level plus the near-zero fraction.
pub fn acceptance_by_length(
    reports: &[TextReport],
    levels: &[f64],
    bin_size: usize,
) -> LengthTables {
    let mut tables = LengthTables::default();
    if reports.is_empty() {
        return tables;
    }
    let mut by_length: Vec<&TextReport> = reports.iter().collect();
    by_length.sort_by(|x, y| x.length_tokens.cmp(&y.length_tokens).then(x.id.cmp(&y.id)));
    let bin_size = bin_size.max(1);
    if bin_size > by_length.len() {
        tables
            .warnings
            .push(format!("bin size {bin_size} exceeds corpus size {}; using one bin", by_length.len()));
    }

    for (bin, chunk) in by_length.chunks(bin_size).enumerate() {
        let l_min = chunk.first().unwrap().length_tokens;
        let l_max = chunk.last().unwrap().length_tokens;
        let l_geomean = ((l_min as f64) * (l_max as f64)).sqrt();
        for family in FamilyKind::ALL {
            for &level in levels {
                let accepted = chunk
                    .iter()
                    .filter(|r| r.p_value(family).is_some_and(|p| p >= level))
                    .count();
                tables.acceptance.push(AcceptanceRow {
                    family,
                    level,
                    bin,
                    l_min,
                    l_max,
                    l_geomean,
                    n_texts: chunk.len(),
                    accepted,
                    fraction: accepted as f64 / chunk.len() as f64,
                });
            }
            let near_zero = chunk
                .iter()
                .filter(|r| r.p_value(family).is_some_and(|p| p < 0.01))
                .count();
            tables.near_zero.push(NearZeroRow {
                family,
                bin,
                l_min,
                l_max,
                l_geomean,
                n_texts: chunk.len(),
                near_zero,
                fraction: near_zero as f64 / chunk.len() as f64,
            });
        }
    }
    tables
}

/// Gaussian-kernel density estimate of the fitted exponents of one group
/// of accepted texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaDensityGroup {
    /// "all", or "q1".."q4" for the length quartiles.
    pub group: String,
    pub n: usize,
    pub mean_beta: f64,
    pub sd_beta: f64,
    /// Silverman normal-reference bandwidth actually used.
    pub bandwidth: f64,
    /// (beta, density) grid.
    pub grid: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaDensity {
    pub family: FamilyKind,
    pub level: f64,
    pub groups: Vec<BetaDensityGroup>,
}

fn kde_group(label: &str, betas: &[f64]) -> BetaDensityGroup {
    let n = betas.len();
    let n_f = n as f64;
    let mean = betas.iter().sum::<f64>() / n_f;
    let sd = (betas.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / n_f).sqrt();
    let mut sorted = betas.to_vec();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let quantile = |q: f64| sorted[((q * (n_f - 1.0)).round() as usize).min(n - 1)];
    let iqr = quantile(0.75) - quantile(0.25);
    // Silverman's normal reference rule, floored so that identical
    // exponents still yield a (sharply peaked) density.
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bandwidth = (0.9 * spread * n_f.powf(-0.2)).max(1e-4);

    let lo = sorted[0] - 3.0 * bandwidth;
    let hi = sorted[n - 1] + 3.0 * bandwidth;
    let points = 201usize;
    let step = (hi - lo) / (points - 1) as f64;
    let norm = 1.0 / (n_f * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let grid = (0..points)
        .map(|i| {
            let x = lo + i as f64 * step;
            let density = norm
                * betas
                    .iter()
                    .map(|b| (-0.5 * ((x - b) / bandwidth).powi(2)).exp())
                    .sum::<f64>();
            (x, density)
        })
        .collect();
    BetaDensityGroup {
        group: label.to_string(),
        n,
        mean_beta: mean,
        sd_beta: sd,
        bandwidth,
        grid,
    }
}

/// Kernel density of the fitted exponent over texts accepted at `level`,
/// optionally split into four length quartiles. Requires at least two
/// accepted texts.
pub fn beta_density(
    reports: &[TextReport],
    family: FamilyKind,
    level: f64,
    length_quartiles: bool,
) -> Result<BetaDensity, AggregateError> {
    let mut accepted: Vec<&TextReport> = reports
        .iter()
        .filter(|r| r.p_value(family).is_some_and(|p| p >= level))
        .collect();
    if accepted.len() < 2 {
        return Err(AggregateError::TooFewAccepted { needed: 2, got: accepted.len() });
    }
    let mut groups = Vec::new();
    let betas: Vec<f64> = accepted.iter().map(|r| r.beta(family)).collect();
    groups.push(kde_group("all", &betas));

    if length_quartiles && accepted.len() >= 8 {
        accepted.sort_by(|x, y| x.length_tokens.cmp(&y.length_tokens).then(x.id.cmp(&y.id)));
        let n = accepted.len();
        for q in 0..4 {
            let start = q * n / 4;
            let end = (q + 1) * n / 4;
            let betas: Vec<f64> = accepted[start..end].iter().map(|r| r.beta(family)).collect();
            groups.push(kde_group(&format!("q{}", q + 1), &betas));
        }
    }
    Ok(BetaDensity { family, level, groups })
}

/// One logarithmic bin of the text-length density (5 bins per decade;
/// edges at 10^(k/5)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthDensityRow {
    pub bin: i64,
    pub l_lo: f64,
    pub l_hi: f64,
    /// Geometric bin center 10^((k + 0.5)/5).
    pub l_center: f64,
    pub count: u64,
    /// count / (bin width * total texts)
    pub density: f64,
}

pub fn length_density(reports: &[TextReport]) -> Vec<LengthDensityRow> {
    if reports.is_empty() {
        return Vec::new();
    }
    let total = reports.len() as f64;
    let bin_of = |l: u64| (LENGTH_BINS_PER_DECADE * (l as f64).log10()).floor() as i64;
    let lo_bin = reports.iter().map(|r| bin_of(r.length_tokens)).min().unwrap();
    let hi_bin = reports.iter().map(|r| bin_of(r.length_tokens)).max().unwrap();
    let mut counts = vec![0u64; (hi_bin - lo_bin + 1) as usize];
    for report in reports {
        counts[(bin_of(report.length_tokens) - lo_bin) as usize] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &count)| count > 0)
        .map(|(i, &count)| {
            let k = lo_bin + i as i64;
            let l_lo = 10f64.powf(k as f64 / LENGTH_BINS_PER_DECADE);
            let l_hi = 10f64.powf((k + 1) as f64 / LENGTH_BINS_PER_DECADE);
            LengthDensityRow {
                bin: k,
                l_lo,
                l_hi,
                l_center: 10f64.powf((k as f64 + 0.5) / LENGTH_BINS_PER_DECADE),
                count,
                density: count as f64 / ((l_hi - l_lo) * total),
            }
        })
        .collect()
}

/// KS-acceptance category of a text at a significance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsCategory {
    F1Only,
    F2Only,
    Both,
    Neither,
}

pub fn ks_category(report: &TextReport, level: f64) -> KsCategory {
    let ok1 = report.p_value(FamilyKind::F1).is_some_and(|p| p >= level);
    let ok2 = report.p_value(FamilyKind::F2).is_some_and(|p| p >= level);
    match (ok1, ok2) {
        (true, true) => KsCategory::Both,
        (true, false) => KsCategory::F1Only,
        (false, true) => KsCategory::F2Only,
        (false, false) => KsCategory::Neither,
    }
}

/// Sign-of-ratio cross-tab row (one KS category at one level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSignRow {
    pub level: f64,
    pub category: String,
    pub r_positive: usize,
    pub r_negative: usize,
    /// LR unavailable (zero variance or skipped).
    pub r_na: usize,
    pub total: usize,
}

/// Significant-verdict cross-tab row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSigRow {
    pub level: f64,
    pub category: String,
    pub favors_f1: usize,
    pub favors_f2: usize,
    pub total_texts: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossTabs {
    pub signs: Vec<LrSignRow>,
    pub significant: Vec<LrSigRow>,
    pub warnings: Vec<String>,
}

/// Cross-tabulate the KS-acceptance category against the sign of the
/// log-likelihood ratio and against the significant LR verdicts. The
/// sign table covers texts accepted by at least one power-law family
/// (plus a total row); the verdict table adds the doubly-rejected row.
pub fn lr_crosstab(reports: &[TextReport], level: f64) -> CrossTabs {
    let mut tabs = CrossTabs::default();
    let categories = [
        (KsCategory::F1Only, "f1_only"),
        (KsCategory::F2Only, "f2_only"),
        (KsCategory::Both, "both"),
        (KsCategory::Neither, "neither"),
    ];
    let mut any_lr = false;
    let mut totals = LrSignRow {
        level,
        category: "total".into(),
        r_positive: 0,
        r_negative: 0,
        r_na: 0,
        total: 0,
    };
    let mut sig_totals = LrSigRow {
        level,
        category: "total".into(),
        favors_f1: 0,
        favors_f2: 0,
        total_texts: 0,
    };
    for (category, name) in categories {
        let members: Vec<&TextReport> =
            reports.iter().filter(|r| ks_category(r, level) == category).collect();
        let mut row = LrSignRow {
            level,
            category: name.into(),
            r_positive: 0,
            r_negative: 0,
            r_na: 0,
            total: members.len(),
        };
        let mut sig = LrSigRow {
            level,
            category: name.into(),
            favors_f1: 0,
            favors_f2: 0,
            total_texts: members.len(),
        };
        for report in &members {
            match &report.lr {
                LrOutcome::Ok { result } => {
                    any_lr = true;
                    if result.r12 > 0.0 {
                        row.r_positive += 1;
                    } else {
                        row.r_negative += 1;
                    }
                    match result.verdict {
                        Verdict::FavorsF1 => sig.favors_f1 += 1,
                        Verdict::FavorsF2 => sig.favors_f2 += 1,
                        Verdict::NotSignificant => {}
                    }
                }
                _ => row.r_na += 1,
            }
        }
        // the sign table mirrors the accepted-by-at-least-one population;
        // the verdict table also keeps the doubly-rejected row
        if category != KsCategory::Neither {
            totals.r_positive += row.r_positive;
            totals.r_negative += row.r_negative;
            totals.r_na += row.r_na;
            totals.total += row.total;
            tabs.signs.push(row);
            sig_totals.favors_f1 += sig.favors_f1;
            sig_totals.favors_f2 += sig.favors_f2;
            sig_totals.total_texts += sig.total_texts;
            tabs.significant.push(sig);
        } else {
            tabs.significant.push(sig);
        }
    }
    tabs.signs.push(totals);
    // keep the "neither" row last, after the total row
    let neither = tabs.significant.remove(3);
    tabs.significant.push(sig_totals);
    tabs.significant.push(neither);

    if !reports.is_empty() && !any_lr {
        tabs.warnings.push(format!(
            "no usable likelihood-ratio results at level {level}; cross-tabs are empty"
        ));
    }
    tabs
}

/// Everything the aggregation produces, ready for CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub fingerprint: Option<ConfigFingerprint>,
    pub options: AggregateOptions,
    pub n_texts: usize,
    pub histograms: Vec<(FamilyKind, Vec<u64>)>,
    pub survival: SurvivalCurves,
    pub length_tables: LengthTables,
    pub beta_densities: Vec<BetaDensity>,
    pub length_density: Vec<LengthDensityRow>,
    pub crosstabs: Vec<CrossTabs>,
    pub warnings: Vec<String>,
}

/// Fold a set of per-text reports into the aggregate report. All reports
/// must carry the same config fingerprint.
pub fn aggregate(
    reports: &[TextReport],
    options: &AggregateOptions,
) -> Result<AggregateReport, AggregateError> {
    let fingerprint = check_fingerprints(reports)?;
    let histograms = FamilyKind::ALL
        .iter()
        .map(|&k| (k, pvalue_histogram(reports, k)))
        .collect();
    let survival = pvalue_survival(reports);
    let length_tables = acceptance_by_length(reports, &options.levels, options.bin_size);

    let mut beta_densities = Vec::new();
    for family in FamilyKind::ALL {
        for &level in &options.levels {
            if let Ok(d) = beta_density(reports, family, level, true) {
                beta_densities.push(d);
            }
        }
    }

    let crosstabs: Vec<CrossTabs> =
        options.levels.iter().map(|&level| lr_crosstab(reports, level)).collect();

    let mut warnings = length_tables.warnings.clone();
    for tab in &crosstabs {
        warnings.extend(tab.warnings.iter().cloned());
    }
    Ok(AggregateReport {
        fingerprint,
        options: options.clone(),
        n_texts: reports.len(),
        histograms,
        survival,
        length_tables,
        beta_densities,
        length_density: length_density(reports),
        crosstabs,
        warnings,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write every aggregate table as a CSV under `dir`:
/// `pvalue_hist.csv`, `pvalue_survival.csv`, `acceptance_by_length.csv`,
/// `nearzero_by_length.csv`, `beta_summary.csv`, `beta_density.csv`,
/// `length_density.csv`, `lr_signs.csv`, `lr_significant.csv` and a
/// `config.json` echo of the fingerprint and options.
pub fn write_aggregate_csvs(report: &AggregateReport, dir: &Path) -> Result<(), csv::Error> {
    fs::create_dir_all(dir).map_err(csv::Error::from)?;

    #[derive(Serialize)]
    struct HistRow {
        family: FamilyKind,
        bin: usize,
        p_lo: f64,
        p_hi: f64,
        count: u64,
    }
    let mut hist_rows = Vec::new();
    for (family, bins) in &report.histograms {
        for (bin, &count) in bins.iter().enumerate() {
            hist_rows.push(HistRow {
                family: *family,
                bin,
                p_lo: bin as f64 / PVALUE_BINS as f64,
                p_hi: (bin + 1) as f64 / PVALUE_BINS as f64,
                count,
            });
        }
    }
    write_csv(&dir.join("pvalue_hist.csv"), &hist_rows)?;

    #[derive(Serialize)]
    struct SurvivalRow {
        threshold: f64,
        f1: f64,
        f2: f64,
        f3: f64,
        f1_and_f2: f64,
    }
    let survival_rows: Vec<SurvivalRow> = report
        .survival
        .thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| SurvivalRow {
            threshold,
            f1: report.survival.f1[i],
            f2: report.survival.f2[i],
            f3: report.survival.f3[i],
            f1_and_f2: report.survival.f1_and_f2[i],
        })
        .collect();
    write_csv(&dir.join("pvalue_survival.csv"), &survival_rows)?;

    write_csv(&dir.join("acceptance_by_length.csv"), &report.length_tables.acceptance)?;
    write_csv(&dir.join("nearzero_by_length.csv"), &report.length_tables.near_zero)?;

    #[derive(Serialize)]
    struct BetaSummaryRow<'a> {
        family: FamilyKind,
        level: f64,
        group: &'a str,
        n: usize,
        mean_beta: f64,
        sd_beta: f64,
        bandwidth: f64,
    }
    #[derive(Serialize)]
    struct BetaDensityRow<'a> {
        family: FamilyKind,
        level: f64,
        group: &'a str,
        beta: f64,
        density: f64,
    }
    let mut summary_rows = Vec::new();
    let mut density_rows = Vec::new();
    for d in &report.beta_densities {
        for g in &d.groups {
            summary_rows.push(BetaSummaryRow {
                family: d.family,
                level: d.level,
                group: &g.group,
                n: g.n,
                mean_beta: g.mean_beta,
                sd_beta: g.sd_beta,
                bandwidth: g.bandwidth,
            });
            for &(beta, density) in &g.grid {
                density_rows.push(BetaDensityRow {
                    family: d.family,
                    level: d.level,
                    group: &g.group,
                    beta,
                    density,
                });
            }
        }
    }
    write_csv(&dir.join("beta_summary.csv"), &summary_rows)?;
    write_csv(&dir.join("beta_density.csv"), &density_rows)?;

    write_csv(&dir.join("length_density.csv"), &report.length_density)?;

    let sign_rows: Vec<&LrSignRow> = report.crosstabs.iter().flat_map(|t| &t.signs).collect();
    let sig_rows: Vec<&LrSigRow> = report.crosstabs.iter().flat_map(|t| &t.significant).collect();
    write_csv(&dir.join("lr_signs.csv"), &sign_rows)?;
    write_csv(&dir.join("lr_significant.csv"), &sig_rows)?;

    #[derive(Serialize)]
    struct ConfigEcho<'a> {
        fingerprint: &'a Option<ConfigFingerprint>,
        options: &'a AggregateOptions,
        n_texts: usize,
        warnings: &'a [String],
    }
    let echo = ConfigEcho {
        fingerprint: &report.fingerprint,
        options: &report.options,
        n_texts: report.n_texts,
        warnings: &report.warnings,
    };
    let json = serde_json::to_string_pretty(&echo).expect("serializable");
    fs::write(dir.join("config.json"), json).map_err(csv::Error::from)?;
    Ok(())
}
