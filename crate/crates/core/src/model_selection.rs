//! Likelihood-ratio comparison between the two power-law variants.
//!
//! With both families fitted to the same sample, the summed per-point
//! log-likelihood difference `R = sum_i [ln f1(n_i) - ln f2(n_i)]` is,
//! under the hypothesis that the models describe the data equally well,
//! approximately normal with zero mean and variance `N sigma^2`, where
//! `sigma^2` is the per-point variance of the log-ratio. The two-sided
//! p-value is `erfc(|R| / sqrt(2 N sigma^2))`, and at the 0.05 level the
//! ratio is significant when `|R|` exceeds `R_c = 1.96 sqrt(N sigma^2)`.
//!
//! The test is comparative only: a significant verdict says one family
//! describes the data better than the other, not that either fits well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{FamilyKind, ModelError, ZipfModel};
use crate::estimation::FrequencyVector;
use crate::special::erfc;

/// Two-sided critical multiplier at the 0.05 level.
const Z_CRIT: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FavorsF1,
    FavorsF2,
    NotSignificant,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LrError {
    #[error("need at least two word types, got {0}")]
    TooFewTypes(usize),
    #[error("per-point log-ratios have zero variance; the test is undefined")]
    ZeroVariance,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Result of the likelihood-ratio test between F1 and F2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrResult {
    /// Summed log-likelihood ratio; positive favors F1.
    pub r12: f64,
    /// Per-point (population) variance of the log-ratio.
    pub sigma2: f64,
    /// Sample size N.
    pub n: u64,
    /// Two-sided p-value `erfc(|r12| / sqrt(2 N sigma2))`.
    pub p_lr: f64,
    /// Significance threshold `1.96 sqrt(N sigma2)`.
    pub r_crit: f64,
    pub verdict: Verdict,
}

/// Core of the test over per-point log-ratios with multiplicities.
fn lr_from_log_ratios(ratios: &[(f64, u64)]) -> Result<LrResult, LrError> {
    // all per-point ratios identical (e.g. a single distinct value) leaves
    // the statistic undefined
    if ratios.iter().all(|&(l, _)| l == ratios[0].0) {
        return Err(LrError::ZeroVariance);
    }
    let n: u64 = ratios.iter().map(|&(_, c)| c).sum();
    let n_f = n as f64;
    let r12: f64 = ratios.iter().map(|&(l, c)| c as f64 * l).sum();
    let mean = r12 / n_f;
    let sigma2: f64 = ratios
        .iter()
        .map(|&(l, c)| c as f64 * (l - mean) * (l - mean))
        .sum::<f64>()
        / n_f;
    if sigma2 <= 0.0 {
        return Err(LrError::ZeroVariance);
    }
    let scale = (n_f * sigma2).sqrt();
    let r_crit = Z_CRIT * scale;
    let p_lr = erfc(r12.abs() / (std::f64::consts::SQRT_2 * scale));
    let verdict = if r12 > r_crit {
        Verdict::FavorsF1
    } else if r12 < -r_crit {
        Verdict::FavorsF2
    } else {
        Verdict::NotSignificant
    };
    Ok(LrResult { r12, sigma2, n, p_lr, r_crit, verdict })
}

/// Likelihood-ratio test of F1 (at exponent `beta1`) against F2 (at
/// exponent `beta2`) on a sample. The exponents are expected to be the
/// ML estimates of each family on this same sample.
pub fn lr_test(
    data: &FrequencyVector,
    beta1: f64,
    beta2: f64,
    a: u64,
) -> Result<LrResult, LrError> {
    if data.n_types() < 2 {
        return Err(LrError::TooFewTypes(data.n_types()));
    }
    let m1 = ZipfModel::new(FamilyKind::F1, beta1, a)?;
    let m2 = ZipfModel::new(FamilyKind::F2, beta2, a)?;
    let ratios: Vec<(f64, u64)> = data
        .grouped()
        .into_iter()
        .map(|(value, count)| {
            let l = m1.log_pmf(value)? - m2.log_pmf(value)?;
            Ok((l, count))
        })
        .collect::<Result<_, ModelError>>()?;
    lr_from_log_ratios(&ratios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::fit_mle;
    use crate::sampling::{sample_iid, SamplerState};
    use approx::assert_relative_eq;

    fn freq(values: &[u64]) -> FrequencyVector {
        FrequencyVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn single_distinct_value_has_zero_variance() {
        assert!(matches!(
            lr_test(&freq(&[1, 1, 1]), 2.0, 2.0, 1),
            Err(LrError::ZeroVariance)
        ));
        // the {1} case from the module contract is caught even earlier
        assert!(matches!(
            lr_test(&freq(&[1]), 2.0, 2.0, 1),
            Err(LrError::TooFewTypes(1))
        ));
    }

    #[test]
    fn antisymmetry_and_null_point() {
        let ratios = vec![(0.4, 3u64), (-0.1, 5), (0.02, 2)];
        let negated: Vec<(f64, u64)> = ratios.iter().map(|&(l, c)| (-l, c)).collect();
        let fwd = lr_from_log_ratios(&ratios).unwrap();
        let rev = lr_from_log_ratios(&negated).unwrap();
        assert_eq!(fwd.r12, -rev.r12);
        assert_eq!(fwd.p_lr.to_bits(), rev.p_lr.to_bits());
        assert_eq!(fwd.sigma2.to_bits(), rev.sigma2.to_bits());

        // r12 = 0 gives p = 1
        let balanced = vec![(0.3, 1u64), (-0.3, 1)];
        let r = lr_from_log_ratios(&balanced).unwrap();
        assert_eq!(r.r12, 0.0);
        assert_eq!(r.p_lr, 1.0);
        assert_eq!(r.verdict, Verdict::NotSignificant);
    }

    #[test]
    fn verdict_is_a_function_of_r_and_r_crit() {
        for &(r_sign, expect) in &[
            (1.0, Verdict::FavorsF1),
            (-1.0, Verdict::FavorsF2),
        ] {
            // large |R| with small variance forces significance
            let ratios = vec![(r_sign * 0.5, 400u64), (r_sign * 0.48, 400)];
            let out = lr_from_log_ratios(&ratios).unwrap();
            assert!(out.r12.abs() > out.r_crit);
            assert_eq!(out.verdict, expect);
            assert!(out.p_lr < 0.05);
            assert_relative_eq!(
                out.r_crit,
                1.96 * (out.n as f64 * out.sigma2).sqrt(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn hand_computed_two_point_case() {
        // data {1, 2} with beta1 = beta2 = 2, a = 1:
        //   l(1) = ln f1(1) - ln f2(1) = ln(6/pi^2) - ln(1/2)
        //   l(2) = ln f1(2) - ln f2(2) = ln(3/(2 pi^2)) - ln(1/6)
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let l1 = (6.0 / pi2).ln() - 0.5f64.ln();
        let l2 = (6.0 / pi2 / 4.0).ln() - (1.0f64 / 6.0).ln();
        let out = lr_test(&freq(&[1, 2]), 2.0, 2.0, 1).unwrap();
        assert_relative_eq!(out.r12, l1 + l2, max_relative = 1e-12);
        let mean = (l1 + l2) / 2.0;
        let sigma2 = ((l1 - mean).powi(2) + (l2 - mean).powi(2)) / 2.0;
        assert_relative_eq!(out.sigma2, sigma2, max_relative = 1e-12);
        assert_eq!(out.n, 2);
    }

    #[test]
    fn f2_data_is_never_significantly_assigned_to_f1() {
        // texts drawn from f2 must either favor f2 or stay inconclusive
        let truth = ZipfModel::new(FamilyKind::F2, 2.0, 1).unwrap();
        let mut favors_f2 = 0;
        let texts = 100;
        for i in 0..texts {
            let mut state = SamplerState::new(1000 + i, 0);
            let data = sample_iid(&truth, 10_000, &mut state).unwrap();
            let b1 = fit_mle(FamilyKind::F1, &data, 1).unwrap().model.beta();
            let b2 = fit_mle(FamilyKind::F2, &data, 1).unwrap().model.beta();
            let out = lr_test(&data, b1, b2, 1).unwrap();
            assert_ne!(out.verdict, Verdict::FavorsF1, "replicate {i}: r12={}", out.r12);
            if out.verdict == Verdict::FavorsF2 {
                favors_f2 += 1;
            }
        }
        assert!(favors_f2 > 80, "only {favors_f2}/{texts} significantly favor f2");
    }
}
