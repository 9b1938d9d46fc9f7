//! The three Zipf-like frequency distributions.
//!
//! All three are supported on the integers `n = a, a+1, ...` for a positive
//! integer cutoff `a`, share an asymptotic power-law tail `f(n) ~ n^-beta`,
//! and differ in where the power law sits exactly:
//!
//! * `F1` — power law in the probability mass function:
//!   `f1(n) = n^-beta / zeta(beta, a)`.
//! * `F2` — power law in the survival function:
//!   `S2(n) = (a/n)^(beta-1)`, so `f2(n) = S2(n) - S2(n+1)`.
//! * `F3` — gamma-ratio distribution arising from an underlying power-law
//!   rank-frequency relation:
//!   `f3(n) = (beta-1) Gamma(a)/Gamma(a+1-beta) * Gamma(n+1-beta)/Gamma(n+1)`,
//!   with `1 < beta < 2`. (`f3` can equivalently be written with beta
//!   functions, `B(n+1-beta, beta)/B(a+1-beta, beta-1)`; that identity is
//!   not a separate code path.)
//!
//! Survival functions use the non-strict convention
//! `S(n) = Prob[frequency >= n]`, so `S(a) = 1` exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{hurwitz_zeta, log_gamma_diff};

/// Which of the three Zipf-like families a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    #[serde(rename = "f1")]
    F1,
    #[serde(rename = "f2")]
    F2,
    #[serde(rename = "f3")]
    F3,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::F1, FamilyKind::F2, FamilyKind::F3];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::F1 => "f1",
            FamilyKind::F2 => "f2",
            FamilyKind::F3 => "f3",
        }
    }

    /// Open exponent domain of the family: `beta > 1` for F1/F2,
    /// `1 < beta < 2` for F3.
    pub fn beta_valid(self, beta: f64) -> bool {
        match self {
            FamilyKind::F1 | FamilyKind::F2 => beta > 1.0 && beta.is_finite(),
            FamilyKind::F3 => beta > 1.0 && beta < 2.0,
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f1" | "F1" => Ok(FamilyKind::F1),
            "f2" | "F2" => Ok(FamilyKind::F2),
            "f3" | "F3" => Ok(FamilyKind::F3),
            other => Err(format!("unknown family kind: {other:?} (expected f1, f2 or f3)")),
        }
    }
}

/// Errors for model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("exponent {beta} outside the domain of {kind}")]
    InvalidExponent { kind: FamilyKind, beta: f64 },
    #[error("lower cutoff must be a positive integer, got {a}")]
    InvalidCutoff { a: u64 },
    #[error("value {n} below the lower cutoff {a}")]
    ValueBelowCutoff { n: u64, a: u64 },
}

/// Serialized shape of a model: `{"kind": "f1"|"f2"|"f3", "beta": .., "a": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelRepr {
    kind: FamilyKind,
    beta: f64,
    a: u64,
}

/// One fitted (or hypothesized) distribution: a family, an exponent and a
/// lower cutoff. Construction validates the parameter domain and
/// precomputes the normalization so that pmf evaluations in tight loops
/// stay cheap.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct ZipfModel {
    kind: FamilyKind,
    beta: f64,
    a: u64,
    /// F1: ln zeta(beta, a). F3: ln Gamma(a+1-beta) - ln Gamma(a).
    /// F2: unused (0).
    log_norm: f64,
}

impl PartialEq for ZipfModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.beta == other.beta && self.a == other.a
    }
}

impl From<ZipfModel> for ModelRepr {
    fn from(m: ZipfModel) -> Self {
        ModelRepr { kind: m.kind, beta: m.beta, a: m.a }
    }
}

impl TryFrom<ModelRepr> for ZipfModel {
    type Error = ModelError;

    fn try_from(r: ModelRepr) -> Result<Self, ModelError> {
        ZipfModel::new(r.kind, r.beta, r.a)
    }
}

impl ZipfModel {
    pub fn new(kind: FamilyKind, beta: f64, a: u64) -> Result<Self, ModelError> {
        if a < 1 {
            return Err(ModelError::InvalidCutoff { a });
        }
        if !kind.beta_valid(beta) {
            return Err(ModelError::InvalidExponent { kind, beta });
        }
        let log_norm = match kind {
            FamilyKind::F1 => hurwitz_zeta(beta, a).expect("domain checked").ln(),
            FamilyKind::F2 => 0.0,
            FamilyKind::F3 => log_gamma_diff(a as f64, 1.0 - beta),
        };
        Ok(ZipfModel { kind, beta, a, log_norm })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    fn check_support(&self, n: u64) -> Result<(), ModelError> {
        if n < self.a {
            return Err(ModelError::ValueBelowCutoff { n, a: self.a });
        }
        Ok(())
    }

    /// Probability mass at `n`, clamped to `[0, 1]` to absorb trailing-bit
    /// rounding of the exponentials.
    pub fn pmf(&self, n: u64) -> Result<f64, ModelError> {
        self.check_support(n)?;
        let value = match self.kind {
            FamilyKind::F1 => (-self.beta * (n as f64).ln() - self.log_norm).exp(),
            FamilyKind::F2 => {
                let s_n = self.survival_f2(n);
                s_n * self.f2_hazard(n)
            }
            // the F3 hazard is exactly (beta - 1)/n: the gamma ratios of
            // f3/S3 collapse to Gamma(n)/Gamma(n+1)
            FamilyKind::F3 => self.survival(n)? * (self.beta - 1.0) / n as f64,
        };
        Ok(value.clamp(0.0, 1.0))
    }

    /// Natural log of the pmf, evaluated in log space throughout; finite
    /// for values far beyond where the linear-space pmf underflows.
    pub fn log_pmf(&self, n: u64) -> Result<f64, ModelError> {
        self.check_support(n)?;
        Ok(match self.kind {
            FamilyKind::F1 => -self.beta * (n as f64).ln() - self.log_norm,
            FamilyKind::F2 => {
                (self.beta - 1.0) * ((self.a as f64).ln() - (n as f64).ln())
                    + self.f2_hazard(n).ln()
            }
            FamilyKind::F3 => {
                self.log_survival_f3(n) + (self.beta - 1.0).ln() - (n as f64).ln()
            }
        })
    }

    /// Survival function `S(n) = Prob[frequency >= n]`; equals 1 exactly
    /// at `n = a` and telescopes against the pmf.
    pub fn survival(&self, n: u64) -> Result<f64, ModelError> {
        self.check_support(n)?;
        let value = match self.kind {
            FamilyKind::F1 => {
                // zeta(beta, n) / zeta(beta, a); at n = a the two logs are
                // identical bits, so the ratio is exactly 1.
                (hurwitz_zeta(self.beta, n).expect("domain checked").ln() - self.log_norm).exp()
            }
            FamilyKind::F2 => self.survival_f2(n),
            FamilyKind::F3 => self.log_survival_f3(n).exp(),
        };
        Ok(value.clamp(0.0, 1.0))
    }

    fn survival_f2(&self, n: u64) -> f64 {
        (self.a as f64 / n as f64).powf(self.beta - 1.0)
    }

    /// `1 - S2(n+1)/S2(n) = 1 - (n/(n+1))^(beta-1)`, evaluated without
    /// cancellation for large `n`.
    fn f2_hazard(&self, n: u64) -> f64 {
        let ratio_log = (-1.0 / (n as f64 + 1.0)).ln_1p();
        -((self.beta - 1.0) * ratio_log).exp_m1()
    }

    /// `ln S3(n) = [ln Gamma(n+1-beta) - ln Gamma(n)] - [same at n = a]`,
    /// each bracket via the stable gamma-ratio difference. At `n = a` the
    /// two brackets are bitwise identical, so `S3(a) = 1` exactly.
    fn log_survival_f3(&self, n: u64) -> f64 {
        log_gamma_diff(n as f64, 1.0 - self.beta) - self.log_norm
    }
}

/// Rank-space exponent `alpha = 1/(beta - 1)` corresponding to a
/// frequency-space exponent `beta`. The inverse of `beta = 1 + 1/alpha`.
pub fn rank_exponent_from_beta(beta: f64) -> Result<f64, ModelError> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(ModelError::InvalidExponent { kind: FamilyKind::F2, beta });
    }
    Ok(1.0 / (beta - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn model(kind: FamilyKind, beta: f64, a: u64) -> ZipfModel {
        ZipfModel::new(kind, beta, a).unwrap()
    }

    #[test]
    fn pmf_reference_values() {
        // f1(1; 2, 1) = 1/zeta(2) = 6/pi^2
        assert_relative_eq!(
            model(FamilyKind::F1, 2.0, 1).pmf(1).unwrap(),
            6.0 / (PI * PI),
            max_relative = 1e-13
        );
        // f2(1; 2, 1) = 1 - 1/2
        assert_relative_eq!(
            model(FamilyKind::F2, 2.0, 1).pmf(1).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        // f3(1; 1.5, 1) = S3(1) - S3(2) = 0.5 with exact gammas
        assert_relative_eq!(
            model(FamilyKind::F3, 1.5, 1).pmf(1).unwrap(),
            0.5,
            max_relative = 1e-13
        );
    }

    #[test]
    fn log_pmf_reference_values() {
        assert_relative_eq!(
            model(FamilyKind::F1, 2.0, 1).log_pmf(1).unwrap(),
            (6.0 / (PI * PI)).ln(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            model(FamilyKind::F2, 2.0, 1).log_pmf(1).unwrap(),
            0.5f64.ln(),
            max_relative = 1e-13
        );
        // closed form: -2 ln(1e6) - ln zeta(2)
        assert_relative_eq!(
            model(FamilyKind::F1, 2.0, 1).log_pmf(1_000_000).unwrap(),
            -28.128721418399294,
            max_relative = 1e-13
        );
    }

    #[test]
    fn log_pmf_finite_at_huge_values() {
        for kind in [FamilyKind::F1, FamilyKind::F2] {
            let m = model(kind, 2.0, 1);
            let v = m.log_pmf(1_000_000_000).unwrap();
            assert!(v.is_finite() && v < 0.0, "{kind}: {v}");
        }
        let v = model(FamilyKind::F3, 1.5, 1).log_pmf(1_000_000_000).unwrap();
        assert!(v.is_finite() && v < 0.0);
    }

    #[test]
    fn log_pmf_consistent_with_pmf() {
        for kind in FamilyKind::ALL {
            let beta = if kind == FamilyKind::F3 { 1.7 } else { 2.3 };
            for &a in &[1u64, 2, 5] {
                let m = model(kind, beta, a);
                let mut n = a;
                while n < 2_000_000 {
                    let p = m.pmf(n).unwrap();
                    if p > 1e-300 {
                        let lp = m.log_pmf(n).unwrap();
                        assert!(
                            (lp - p.ln()).abs() < 1e-10,
                            "{kind} a={a} n={n}: log_pmf {lp} vs ln pmf {}",
                            p.ln()
                        );
                    }
                    n = n * 3 + 1;
                }
            }
        }
    }

    #[test]
    fn survival_reference_values() {
        // S(a) = 1 exactly for every family
        for kind in FamilyKind::ALL {
            let beta = if kind == FamilyKind::F3 { 1.5 } else { 2.0 };
            for &a in &[1u64, 2, 5] {
                assert_eq!(model(kind, beta, a).survival(a).unwrap(), 1.0, "{kind} a={a}");
            }
        }
        // S2(2; 2, 1) = (1/2)^(beta-1) = 0.5
        assert_eq!(model(FamilyKind::F2, 2.0, 1).survival(2).unwrap(), 0.5);
        // S1(2; 2, 1) = zeta(2,2)/zeta(2,1)
        assert_relative_eq!(
            model(FamilyKind::F1, 2.0, 1).survival(2).unwrap(),
            0.39207289814597337,
            max_relative = 1e-12
        );
    }

    #[test]
    fn survival_strictly_decreasing() {
        for kind in FamilyKind::ALL {
            let beta = if kind == FamilyKind::F3 { 1.9 } else { 1.2 };
            let m = model(kind, beta, 1);
            let mut prev = m.survival(1).unwrap();
            let mut n = 2u64;
            while n < 100_000 {
                let s = m.survival(n).unwrap();
                assert!(s < prev, "{kind} n={n}");
                prev = s;
                n = (n as f64 * 1.7) as u64 + 1;
            }
        }
    }

    // Parameter grid shared by the normalization and telescoping tests.
    fn grid() -> Vec<(FamilyKind, f64, u64)> {
        let mut combos = Vec::new();
        for &a in &[1u64, 2, 5] {
            for &beta in &[1.2, 1.5, 1.8, 2.0, 2.5] {
                combos.push((FamilyKind::F1, beta, a));
                combos.push((FamilyKind::F2, beta, a));
                if beta < 2.0 {
                    combos.push((FamilyKind::F3, beta, a));
                }
            }
        }
        combos
    }

    #[test]
    fn normalization_sums_to_one() {
        // smaller horizon here; the acceptance suite runs the full 1e6 one
        let n_star = 100_000u64;
        for (kind, beta, a) in grid() {
            let m = model(kind, beta, a);
            let mut sum = 0.0;
            for n in (a..=n_star).rev() {
                sum += m.pmf(n).unwrap();
            }
            sum += m.survival(n_star + 1).unwrap();
            assert!(
                (sum - 1.0).abs() < 1e-9,
                "{kind} beta={beta} a={a}: sum={sum}"
            );
        }
    }

    #[test]
    fn telescoping_pmf_equals_survival_difference() {
        for (kind, beta, a) in grid() {
            let m = model(kind, beta, a);
            let mut n = a;
            while n <= 1_000_000 {
                let p = m.pmf(n).unwrap();
                let s_n = m.survival(n).unwrap();
                let ds = s_n - m.survival(n + 1).unwrap();
                // The difference of two survival values cannot resolve
                // below a few ulps of the survival scale, no matter how
                // accurately each one is rounded; the floor covers exactly
                // that quantization regime (it only binds once
                // pmf/survival drops under ~1e-6).
                let tol = f64::max(1e-10 * p, 24.0 * f64::EPSILON * s_n);
                assert!(
                    (p - ds).abs() <= tol,
                    "{kind} beta={beta} a={a} n={n}: pmf={p} dS={ds} (diff {:.3e}, floor {:.3e})",
                    (p - ds).abs(),
                    tol
                );
                n = if n < a + 64 { n + 1 } else { n * 7 / 4 };
            }
        }
    }

    #[test]
    fn asymptotic_tail_limits() {
        let n = 1_000_000u64;
        let nf = n as f64;
        let beta = 1.5;
        let a = 1u64;
        let f1 = model(FamilyKind::F1, beta, a);
        let lim1 = 1.0 / hurwitz_zeta(beta, a).unwrap();
        assert_relative_eq!(nf.powf(beta) * f1.pmf(n).unwrap(), lim1, max_relative = 1e-3);

        let f2 = model(FamilyKind::F2, beta, a);
        let lim2 = (beta - 1.0) * (a as f64).powf(beta - 1.0);
        assert_relative_eq!(nf.powf(beta) * f2.pmf(n).unwrap(), lim2, max_relative = 1e-3);

        let f3 = model(FamilyKind::F3, beta, a);
        let lim3 = (beta - 1.0) * 1.0 / crate::special::log_gamma_unchecked(1.0 + 1.0 - beta).exp();
        assert_relative_eq!(nf.powf(beta) * f3.pmf(n).unwrap(), lim3, max_relative = 1e-3);
    }

    #[test]
    fn shape_ordering_at_the_cutoff() {
        // At equal beta the head values order f2(a) < f1(a) < f3(a), and in
        // log-log coordinates f2 curves downward, f3 upward, f1 is straight.
        let beta = 1.5;
        let f1 = model(FamilyKind::F1, beta, 1);
        let f2 = model(FamilyKind::F2, beta, 1);
        let f3 = model(FamilyKind::F3, beta, 1);
        let p1 = f1.pmf(1).unwrap();
        let p2 = f2.pmf(1).unwrap();
        let p3 = f3.pmf(1).unwrap();
        assert!(p2 < p1 && p1 < p3, "{p2} {p1} {p3}");

        let loglog_curvature = |m: &ZipfModel| {
            let (x1, x2, x3) = (1f64.ln(), 2f64.ln(), 3f64.ln());
            let y1 = m.log_pmf(1).unwrap();
            let y2 = m.log_pmf(2).unwrap();
            let y3 = m.log_pmf(3).unwrap();
            (y3 - y2) / (x3 - x2) - (y2 - y1) / (x2 - x1)
        };
        assert!(loglog_curvature(&f2) < 0.0);
        assert!(loglog_curvature(&f3) > 0.0);
        assert!(loglog_curvature(&f1).abs() < 1e-10);
    }

    #[test]
    fn pmf_strictly_decreasing() {
        for (kind, beta, a) in grid() {
            let m = model(kind, beta, a);
            let mut prev = m.pmf(a).unwrap();
            assert!(prev > 0.0 && prev <= 1.0);
            for n in a + 1..a + 200 {
                let p = m.pmf(n).unwrap();
                assert!(p < prev, "{kind} beta={beta} a={a} n={n}");
                prev = p;
            }
        }
    }

    #[test]
    fn rank_exponent_conversion() {
        assert_eq!(rank_exponent_from_beta(2.0).unwrap(), 1.0);
        assert_eq!(rank_exponent_from_beta(1.5).unwrap(), 2.0);
        assert_eq!(rank_exponent_from_beta(3.0).unwrap(), 0.5);
        assert!(rank_exponent_from_beta(1.0).is_err());
        assert!(rank_exponent_from_beta(f64::NAN).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(ZipfModel::new(FamilyKind::F1, 1.0, 1).is_err());
        assert!(ZipfModel::new(FamilyKind::F2, 0.9, 1).is_err());
        assert!(ZipfModel::new(FamilyKind::F3, 2.0, 1).is_err());
        assert!(ZipfModel::new(FamilyKind::F3, 2.5, 1).is_err());
        assert!(ZipfModel::new(FamilyKind::F1, 2.0, 0).is_err());
        assert!(ZipfModel::new(FamilyKind::F1, f64::INFINITY, 1).is_err());
        // evaluation below the cutoff
        let m = model(FamilyKind::F1, 2.0, 3);
        assert!(matches!(m.pmf(2), Err(ModelError::ValueBelowCutoff { n: 2, a: 3 })));
        assert!(m.log_pmf(2).is_err());
        assert!(m.survival(2).is_err());
    }

    #[test]
    fn model_serialization_shape() {
        let m = model(FamilyKind::F2, 1.75, 1);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"kind":"f2","beta":1.75,"a":1}"#);
        let back: ZipfModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        // deserialization revalidates
        assert!(serde_json::from_str::<ZipfModel>(r#"{"kind":"f3","beta":2.5,"a":1}"#).is_err());
    }
}
