//! Maximum-likelihood estimation of the exponent.
//!
//! For a sample `{n_i}` and family pmf `f(n; beta)` the log-likelihood is
//! `l(beta) = sum_i ln f(n_i; beta)`. The F1 likelihood collapses to the
//! closed form `l1(beta)/N = -ln zeta(beta, a) - beta ln G` with `G` the
//! geometric mean of the sample; the optimizer maximizes that form for F1
//! and the direct sum for F2/F3. Maximization is one-dimensional Brent
//! search over the family's exponent bracket.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{FamilyKind, ModelError, ZipfModel};
use crate::special::hurwitz_zeta;

/// Absolute convergence tolerance for the fitted exponent.
pub const BETA_TOLERANCE: f64 = 1e-6;

/// Exponent bracket for the two power-law families. The upper bound is far
/// above any plausible text exponent; samples pushed against it are
/// degenerate (nearly all values at the cutoff).
pub const POWER_LAW_BRACKET: (f64, f64) = (1.0 + 1e-6, 50.0);

/// Exponent bracket for F3; the family domain is the open interval (1, 2)
/// and the likelihood diverges at 2 for a = 1.
pub const F3_BRACKET: (f64, f64) = (1.0 + 1e-6, 2.0 - 1e-6);

/// Bracket used when fitting a given family.
pub fn bracket_for(kind: FamilyKind) -> (f64, f64) {
    match kind {
        FamilyKind::F1 | FamilyKind::F2 => POWER_LAW_BRACKET,
        FamilyKind::F3 => F3_BRACKET,
    }
}

/// Errors from likelihood evaluation and fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("empty sample")]
    EmptySample,
    #[error("need at least two word types to fit, got {0}")]
    TooFewTypes(usize),
    #[error("frequency values must be positive")]
    ZeroValue,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The multiset of word-type frequencies of one text, kept sorted in
/// descending order (so an element's index plus one is its empirical
/// rank). The fundamental sample every fit and test operates on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct FrequencyVector {
    values: Vec<u64>,
}

impl TryFrom<Vec<u64>> for FrequencyVector {
    type Error = FitError;

    fn try_from(values: Vec<u64>) -> Result<Self, FitError> {
        FrequencyVector::new(values)
    }
}

impl From<FrequencyVector> for Vec<u64> {
    fn from(v: FrequencyVector) -> Vec<u64> {
        v.values
    }
}

impl FrequencyVector {
    /// Build from raw frequency values (any order). Rejects zeros; an
    /// empty vector is allowed and later rejected by the fitting
    /// preconditions.
    pub fn new(mut values: Vec<u64>) -> Result<Self, FitError> {
        if values.contains(&0) {
            return Err(FitError::ZeroValue);
        }
        values.sort_unstable_by(|a, b| b.cmp(a));
        Ok(FrequencyVector { values })
    }

    /// Frequencies in descending order.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of word types, `N`.
    pub fn n_types(&self) -> usize {
        self.values.len()
    }

    /// Number of word tokens, `L = sum n_i`.
    pub fn total_tokens(&self) -> u64 {
        self.values.iter().sum()
    }

    pub fn max_value(&self) -> Option<u64> {
        self.values.first().copied()
    }

    pub fn min_value(&self) -> Option<u64> {
        self.values.last().copied()
    }

    /// Geometric mean `G = exp(mean ln n_i)`.
    pub fn geometric_mean(&self) -> f64 {
        self.mean_log().exp()
    }

    pub(crate) fn mean_log(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|&v| (v as f64).ln()).sum();
        sum / self.values.len() as f64
    }

    /// Distinct values with multiplicities, ascending. Likelihood and KS
    /// evaluations iterate over this instead of the raw sample.
    pub fn grouped(&self) -> Vec<(u64, u64)> {
        let mut groups: Vec<(u64, u64)> = Vec::new();
        for &v in self.values.iter().rev() {
            match groups.last_mut() {
                Some((value, count)) if *value == v => *count += 1,
                _ => groups.push((v, 1)),
            }
        }
        groups
    }
}

/// Outcome of one maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// The fitted model (the family, the ML exponent and the cutoff).
    pub model: ZipfModel,
    /// Maximized log-likelihood, recomputed through [`log_likelihood`] at
    /// the fitted exponent.
    pub loglik: f64,
    /// Brent iterations consumed.
    pub iterations: u32,
    /// Whether the search converged to an interior maximum.
    pub converged: bool,
    /// Sample was entirely at the cutoff, leaving no interior maximum;
    /// the reported exponent sits at the bracket edge.
    pub degenerate: bool,
    /// Search bracket that was used.
    pub bracket: (f64, f64),
}

fn validate(data: &FrequencyVector, a: u64) -> Result<(), FitError> {
    if a < 1 {
        return Err(ModelError::InvalidCutoff { a }.into());
    }
    if data.is_empty() {
        return Err(FitError::EmptySample);
    }
    if data.n_types() < 2 {
        return Err(FitError::TooFewTypes(data.n_types()));
    }
    if let Some(min) = data.min_value() {
        if min < a {
            return Err(ModelError::ValueBelowCutoff { n: min, a }.into());
        }
    }
    Ok(())
}

/// Log-likelihood `sum_i ln f(n_i; beta, a)` of a sample under one family.
pub fn log_likelihood(
    kind: FamilyKind,
    data: &FrequencyVector,
    beta: f64,
    a: u64,
) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptySample);
    }
    if let Some(min) = data.min_value() {
        if min < a {
            return Err(ModelError::ValueBelowCutoff { n: min, a }.into());
        }
    }
    let model = ZipfModel::new(kind, beta, a)?;
    let mut total = 0.0;
    for (value, count) in data.grouped() {
        total += count as f64 * model.log_pmf(value)?;
    }
    Ok(total)
}

/// Closed-form F1 log-likelihood `N(-ln zeta(beta, a) - beta ln G)`; the
/// independent algebraic route the direct sum is checked against, and the
/// objective the F1 optimizer maximizes.
pub fn log_likelihood_f1_closed_form(
    data: &FrequencyVector,
    beta: f64,
    a: u64,
) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptySample);
    }
    let zeta = hurwitz_zeta(beta, a).map_err(|_| ModelError::InvalidExponent {
        kind: FamilyKind::F1,
        beta,
    })?;
    Ok(data.n_types() as f64 * (-zeta.ln() - beta * data.mean_log()))
}

struct BrentOutcome {
    x: f64,
    iterations: u32,
    converged: bool,
}

/// Brent minimization (golden section with parabolic interpolation) over
/// `[lo, hi]` to absolute tolerance `tol` in `x`.
fn brent_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: u32,
) -> BrentOutcome {
    const GOLDEN: f64 = 0.3819660112501051;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d = 0.0f64;
    let mut e = 0.0f64;

    for iter in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol * 0.5 + f64::EPSILON * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return BrentOutcome { x, iterations: iter, converged: true };
        }

        let mut use_golden = true;
        if e.abs() > tol1 {
            // parabola through (v, fv), (w, fw), (x, fx)
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            e = d;
            if p.is_finite()
                && q != 0.0
                && p.abs() < (0.5 * q * e_prev).abs()
                && p > q * (a - x)
                && p < q * (b - x)
            {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else if d >= 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u >= x {
                b = u;
            } else {
                a = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    BrentOutcome { x, iterations: max_iter, converged: false }
}

/// Maximum-likelihood fit of the exponent for one family.
///
/// A sample whose values all sit at the cutoff has no interior maximum for
/// any of the families (the likelihood climbs monotonically toward the
/// exponent bound); such fits return `degenerate = true`,
/// `converged = false` and the exponent pinned at the bracket edge.
pub fn fit_mle(kind: FamilyKind, data: &FrequencyVector, a: u64) -> Result<FitResult, FitError> {
    validate(data, a)?;
    let bracket = bracket_for(kind);

    if data.max_value() == Some(a) {
        let beta = bracket.1;
        return Ok(FitResult {
            loglik: log_likelihood(kind, data, beta, a)?,
            model: ZipfModel::new(kind, beta, a)?,
            iterations: 0,
            converged: false,
            degenerate: true,
            bracket,
        });
    }

    // Non-finite likelihood values are treated as -inf so the search
    // stays well-defined if some exponent underflows.
    let objective = |beta: f64| -> f64 {
        let value = match kind {
            FamilyKind::F1 => log_likelihood_f1_closed_form(data, beta, a),
            _ => log_likelihood(kind, data, beta, a),
        };
        match value {
            Ok(l) if l.is_finite() => -l,
            _ => f64::INFINITY,
        }
    };

    let outcome = brent_minimize(objective, bracket.0, bracket.1, BETA_TOLERANCE, 200);
    let edge = 2.0 * BETA_TOLERANCE;
    let interior = outcome.x - bracket.0 > edge && bracket.1 - outcome.x > edge;
    Ok(FitResult {
        loglik: log_likelihood(kind, data, outcome.x, a)?,
        model: ZipfModel::new(kind, outcome.x, a)?,
        iterations: outcome.iterations,
        converged: outcome.converged && interior,
        degenerate: false,
        bracket,
    })
}
