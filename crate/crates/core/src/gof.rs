//! Discrete Kolmogorov-Smirnov goodness of fit with Monte-Carlo p-values.
//!
//! The statistic is `D = max |S_emp(n) - S_model(n)|` over every integer
//! `n` in `[a, max(data)]`, with both survivals using the non-strict
//! convention `S(n) = Prob[freq >= n]`. Because the exponent is estimated
//! from the same data being tested, table p-values would be biased; the
//! p-value is instead computed by parametric bootstrap: simulate samples
//! from the fitted model, refit each one, and count how many replicate
//! statistics reach the empirical one. No multiple-testing correction is
//! applied anywhere downstream; acceptance decisions compare the raw
//! p-value to the significance level.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{FamilyKind, ModelError, ZipfModel};
use crate::estimation::{fit_mle, FitError, FitResult, FrequencyVector};
use crate::sampling::{sample_iid, SamplerState};

/// Retry budget for replicates whose refit degenerates.
const MAX_REPLICATE_RETRIES: u64 = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GofError {
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("sample is degenerate (all values at the cutoff); no testable fit")]
    DegenerateFit,
    #[error("replicate {replicate} still degenerate after {retries} regenerations")]
    ReplicatesExhausted { replicate: u32, retries: u64 },
    #[error("n_sims must be positive")]
    ZeroSims,
}

/// Result of one Monte-Carlo KS test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    /// Empirical KS statistic of the data against its fitted model.
    pub d_stat: f64,
    /// Fraction of replicate statistics `>= d_stat`; an integer multiple
    /// of `1/n_sims`.
    pub p_value: f64,
    /// Number of Monte-Carlo replicates.
    pub n_sims: u32,
    /// Seed of the sampler state the replicates were derived from.
    pub seed: u64,
    /// Stream of the sampler state the replicates were derived from.
    pub stream: u64,
    /// Per-replicate statistics (dropped from bulk reports to keep them
    /// small).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicate_ds: Option<Vec<f64>>,
    /// How many replicates had to be regenerated because their refit
    /// degenerated.
    pub regenerated: u32,
}

/// Discrete KS statistic of a sample against a model.
///
/// Walks the sorted distinct values updating the empirical survival
/// stepwise. On each integer range between consecutive distinct values the
/// empirical survival is constant and the model survival is monotone, so
/// the supremum over the gap is attained at one of the range endpoints;
/// checking both endpoints of every range therefore reproduces the full
/// integer scan exactly.
pub fn ks_statistic(data: &FrequencyVector, model: &ZipfModel) -> Result<f64, GofError> {
    if data.is_empty() {
        return Err(GofError::EmptySample);
    }
    let a = model.a();
    if let Some(min) = data.min_value() {
        if min < a {
            return Err(GofError::Model(ModelError::ValueBelowCutoff { n: min, a }));
        }
    }
    let groups = data.grouped();
    let n_total = data.n_types() as f64;

    let mut d = 0.0f64;
    let mut check = |n: u64, s_emp: f64| -> Result<(), GofError> {
        let s_model = model.survival(n)?;
        let diff = (s_emp - s_model).abs();
        if diff > d {
            d = diff;
        }
        Ok(())
    };

    // Range [a, v_1]: every observation is >= v_1, so S_emp = 1.
    let v1 = groups[0].0;
    check(a, 1.0)?;
    check(v1, 1.0)?;

    // Range [v_j + 1, v_{j+1}]: S_emp = (count of values >= v_{j+1}) / N.
    let mut remaining = data.n_types() as u64;
    for window in groups.windows(2) {
        let (v_lo, count_lo) = window[0];
        let (v_hi, _) = window[1];
        remaining -= count_lo;
        let s_emp = remaining as f64 / n_total;
        check(v_lo + 1, s_emp)?;
        if v_hi > v_lo + 1 {
            check(v_hi, s_emp)?;
        }
    }
    Ok(d)
}

/// Monte-Carlo p-value for the fit of one family to a sample.
///
/// Fits the exponent, computes the empirical statistic, then draws
/// `n_sims` synthetic samples of the same size from the fitted model,
/// refitting each replicate before computing its statistic (the statistic
/// must be distributed as under the null, where the exponent is also
/// estimated). Ties count toward the numerator. Replicates whose refit
/// degenerates are regenerated on a disjoint stream and tallied in
/// `regenerated`.
pub fn mc_pvalue(
    data: &FrequencyVector,
    kind: FamilyKind,
    a: u64,
    n_sims: u32,
    state: &SamplerState,
) -> Result<GofResult, GofError> {
    mc_test(data, kind, a, n_sims, state).map(|(_, gof)| gof)
}

/// As [`mc_pvalue`], also returning the primary fit so pipelines do not
/// fit twice.
pub fn mc_test(
    data: &FrequencyVector,
    kind: FamilyKind,
    a: u64,
    n_sims: u32,
    state: &SamplerState,
) -> Result<(FitResult, GofResult), GofError> {
    if n_sims == 0 {
        return Err(GofError::ZeroSims);
    }
    let fit = fit_mle(kind, data, a)?;
    if fit.degenerate {
        return Err(GofError::DegenerateFit);
    }
    let d_stat = ks_statistic(data, &fit.model)?;
    let size = data.n_types();

    let mut replicate_ds = Vec::with_capacity(n_sims as usize);
    let mut regenerated = 0u32;
    for i in 0..n_sims {
        let mut accepted = None;
        for retry in 0..=MAX_REPLICATE_RETRIES {
            // Streams: replicate i at offset 1 + i; regenerations move to
            // disjoint blocks at multiples of 2^32 so they can never
            // collide with another replicate's base stream.
            let stream = state
                .stream()
                .wrapping_add(1 + i as u64)
                .wrapping_add(retry << 32);
            let mut replicate_state = SamplerState::new(state.seed(), stream);
            let synthetic = sample_iid(&fit.model, size, &mut replicate_state)?;
            let refit = fit_mle(kind, &synthetic, a)?;
            if refit.degenerate {
                regenerated += 1;
                continue;
            }
            accepted = Some(ks_statistic(&synthetic, &refit.model)?);
            break;
        }
        match accepted {
            Some(d) => replicate_ds.push(d),
            None => {
                return Err(GofError::ReplicatesExhausted {
                    replicate: i,
                    retries: MAX_REPLICATE_RETRIES,
                })
            }
        }
    }

    let hits = replicate_ds.iter().filter(|&&d| d >= d_stat).count();
    let gof = GofResult {
        d_stat,
        p_value: hits as f64 / n_sims as f64,
        n_sims,
        seed: state.seed(),
        stream: state.stream(),
        replicate_ds: Some(replicate_ds),
        regenerated,
    };
    Ok((fit, gof))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn freq(values: &[u64]) -> FrequencyVector {
        FrequencyVector::new(values.to_vec()).unwrap()
    }

    fn model(kind: FamilyKind, beta: f64, a: u64) -> ZipfModel {
        ZipfModel::new(kind, beta, a).unwrap()
    }

    /// Reference implementation: scan every integer in [a, max(data)].
    fn ks_brute_force(data: &FrequencyVector, model: &ZipfModel) -> f64 {
        let n_total = data.n_types() as f64;
        let mut d = 0.0f64;
        for n in model.a()..=data.max_value().unwrap() {
            let s_emp = data.values().iter().filter(|&&v| v >= n).count() as f64 / n_total;
            let diff = (s_emp - model.survival(n).unwrap()).abs();
            if diff > d {
                d = diff;
            }
        }
        d
    }

    #[test]
    fn ks_reference_values() {
        // supremum falls in the gap at n = 3: |1/4 - 1/3|
        let d = ks_statistic(&freq(&[1, 1, 2, 4]), &model(FamilyKind::F2, 2.0, 1)).unwrap();
        assert_relative_eq!(d, 1.0 / 12.0, max_relative = 1e-14);

        let d = ks_statistic(&freq(&[5, 5, 5, 5]), &model(FamilyKind::F2, 2.0, 1)).unwrap();
        assert_relative_eq!(d, 0.8, max_relative = 1e-14);
    }

    #[test]
    fn ks_zero_for_exactly_realized_survival() {
        // S2(n) = 1/n at beta = 2: a 12-type sample can realize it exactly
        // at every integer of its range
        let values: Vec<u64> = [vec![1u64; 6], vec![2; 2], vec![3; 1], vec![4; 3]].concat();
        let d = ks_statistic(&freq(&values), &model(FamilyKind::F2, 2.0, 1)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ks_matches_brute_force() {
        let cases: Vec<(Vec<u64>, ZipfModel)> = vec![
            (vec![1, 1, 2, 4], model(FamilyKind::F2, 2.0, 1)),
            (vec![5, 5, 5, 5], model(FamilyKind::F2, 2.0, 1)),
            (vec![1, 3, 17, 120, 121], model(FamilyKind::F1, 1.6, 1)),
            (vec![2, 2, 2, 9, 50], model(FamilyKind::F3, 1.5, 2)),
            (vec![7, 8, 9], model(FamilyKind::F2, 1.2, 3)),
            (vec![1, 1000], model(FamilyKind::F1, 2.5, 1)),
        ];
        for (values, m) in cases {
            let data = freq(&values);
            let fast = ks_statistic(&data, &m).unwrap();
            let slow = ks_brute_force(&data, &m);
            assert_eq!(fast, slow, "{values:?}");
        }
    }

    #[test]
    fn ks_domain_checks() {
        assert!(matches!(
            ks_statistic(&freq(&[]), &model(FamilyKind::F1, 2.0, 1)),
            Err(GofError::EmptySample)
        ));
        assert!(matches!(
            ks_statistic(&freq(&[1, 2]), &model(FamilyKind::F1, 2.0, 2)),
            Err(GofError::Model(ModelError::ValueBelowCutoff { n: 1, a: 2 }))
        ));
    }

    #[test]
    fn pvalue_counts_ties_and_is_granular() {
        let mut state = SamplerState::new(404, 0);
        let m = model(FamilyKind::F2, 2.0, 1);
        let data = sample_iid(&m, 500, &mut state).unwrap();
        let result = mc_pvalue(&data, FamilyKind::F2, 1, 50, &SamplerState::new(1, 0)).unwrap();
        let ds = result.replicate_ds.as_ref().unwrap();
        assert_eq!(ds.len(), 50);
        let hits = ds.iter().filter(|&&d| d >= result.d_stat).count();
        assert_eq!(result.p_value, hits as f64 / 50.0);
        // granularity: p is k/n_sims for integer k
        let k = result.p_value * 50.0;
        assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn pvalue_is_deterministic() {
        let mut state = SamplerState::new(11, 0);
        let m = model(FamilyKind::F1, 2.0, 1);
        let data = sample_iid(&m, 300, &mut state).unwrap();
        let r1 = mc_pvalue(&data, FamilyKind::F1, 1, 30, &SamplerState::new(5, 9)).unwrap();
        let r2 = mc_pvalue(&data, FamilyKind::F1, 1, 30, &SamplerState::new(5, 9)).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.seed, 5);
        assert_eq!(r1.stream, 9);
    }

    #[test]
    fn degenerate_sample_is_an_error() {
        let data = freq(&[1; 40]);
        assert!(matches!(
            mc_pvalue(&data, FamilyKind::F1, 1, 10, &SamplerState::new(1, 0)),
            Err(GofError::DegenerateFit)
        ));
    }

    #[test]
    fn degenerate_replicates_are_regenerated() {
        // a tiny sample dominated by the cutoff refits to a huge exponent,
        // so many replicates come out all-ones and must be regenerated
        let data = freq(&[1, 1, 2]);
        let result = mc_pvalue(&data, FamilyKind::F2, 1, 40, &SamplerState::new(77, 0)).unwrap();
        assert!(result.regenerated > 0, "expected at least one regeneration");
        assert_eq!(result.replicate_ds.as_ref().unwrap().len(), 40);
    }

    #[test]
    fn pvalues_center_near_half_under_the_null() {
        // small version of the calibration experiment; the acceptance
        // suite runs the full uniformity test
        let mut meta = SamplerState::new(2024, 0);
        let m = model(FamilyKind::F2, 2.0, 1);
        let mut sum = 0.0;
        let reps = 60;
        for i in 0..reps {
            let data = sample_iid(&m, 400, &mut meta).unwrap();
            let r = mc_pvalue(&data, FamilyKind::F2, 1, 40, &SamplerState::new(900 + i, 0))
                .unwrap();
            sum += r.p_value;
        }
        let mean = sum / reps as f64;
        assert!((mean - 0.5).abs() < 0.12, "mean p = {mean}");
    }
}
