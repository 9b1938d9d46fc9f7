//! Random variate generation for the three families.
//!
//! `F2` admits an exact inverse-transform sampler: draw `u` uniform on
//! `(0, a^-(beta-1)]`, set `x = u^(-1/(beta-1))` and return `int(x)`; the
//! survival of the result is exactly `(a/n)^(beta-1)`. `F1` and `F3` are
//! sampled by rejection with `F2` proposals. For `F1` the acceptance test
//! reduces to `b v n (tau - 1) <= a (b - 1) tau` with
//! `tau = (1 + 1/n)^(beta-1)` and `b = (1 + 1/a)^(beta-1)`, which avoids
//! evaluating the Hurwitz zeta in the inner loop; for `F3` the test is
//! evaluated in log space because the gamma factors overflow otherwise.
//!
//! Both rejection constants stay small (for `F1` at beta = 2, a = 1 the
//! expected proposals per acceptance is about 1.216; for `F3` it
//! approaches 2 as beta approaches 2 at a = 1).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::distributions::{FamilyKind, ModelError, ZipfModel};
use crate::estimation::FrequencyVector;
use crate::special::log_gamma_unchecked;

/// Reproducible random source identified by a `(seed, stream)` pair.
///
/// Identical pairs reproduce identical draw sequences regardless of thread
/// count; parallel work partitions by giving each worker its own stream.
/// Backed by a counter-based ChaCha generator, so streams are independent
/// and cheap to create.
#[derive(Debug, Clone)]
pub struct SamplerState {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl SamplerState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SamplerState { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on the half-open interval `(0, 1]`.
    fn u01_open_closed(&mut self) -> f64 {
        // 53 random bits; (k + 1) / 2^53 over k = 0..2^53-1 never yields 0.
        let bits = self.rng.next_u64() >> 11;
        (bits + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform on `[0, 1)`.
    fn u01(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

fn check_power_beta(beta: f64, kind: FamilyKind) -> Result<(), ModelError> {
    if !kind.beta_valid(beta) {
        return Err(ModelError::InvalidExponent { kind, beta });
    }
    Ok(())
}

fn check_cutoff(a: u64) -> Result<(), ModelError> {
    if a < 1 {
        return Err(ModelError::InvalidCutoff { a });
    }
    Ok(())
}

/// Inverse transform for the F2 sampler: maps a uniform draw
/// `u in (0, a^-(beta-1)]` to the integer part of `u^(-1/(beta-1))`.
/// `None` when the power overflows the integer guard (u astronomically
/// small); callers resample.
fn f2_from_u(u: f64, beta: f64, a: u64) -> Option<u64> {
    let x = u.powf(-1.0 / (beta - 1.0));
    // overflow guard at 2^63 (also rejects non-finite x); the hit
    // probability is below 1e-18 for beta >= 1.1
    if x.is_nan() || x >= 9.223372036854776e18 {
        return None;
    }
    Some((x as u64).max(a))
}

/// Draw one value from F2 by exact inverse transform.
pub fn sample_f2(beta: f64, a: u64, state: &mut SamplerState) -> Result<u64, ModelError> {
    check_power_beta(beta, FamilyKind::F2)?;
    check_cutoff(a)?;
    let u_max = (a as f64).powf(-(beta - 1.0));
    loop {
        let u = state.u01_open_closed() * u_max;
        if let Some(n) = f2_from_u(u, beta, a) {
            return Ok(n);
        }
    }
}

/// Acceptance test for the F1 rejection sampler. Arranged so that at the
/// proposal `n = a` the bound is exactly 1 and any `v <= 1` accepts.
fn f1_accept(n: u64, v: f64, beta: f64, a: u64) -> bool {
    let tau_m1 = ((beta - 1.0) * (1.0 / n as f64).ln_1p()).exp_m1();
    let b_m1 = ((beta - 1.0) * (1.0 / a as f64).ln_1p()).exp_m1();
    let bound = (a as f64 * b_m1) / (n as f64 * tau_m1) * ((tau_m1 + 1.0) / (b_m1 + 1.0));
    v <= bound
}

/// Draw one value from F1: rejection from F2 proposals.
pub fn sample_f1(beta: f64, a: u64, state: &mut SamplerState) -> Result<u64, ModelError> {
    sample_f1_counted(beta, a, state).map(|(n, _)| n)
}

/// As [`sample_f1`], also reporting how many proposals were consumed.
pub fn sample_f1_counted(
    beta: f64,
    a: u64,
    state: &mut SamplerState,
) -> Result<(u64, u64), ModelError> {
    check_power_beta(beta, FamilyKind::F1)?;
    check_cutoff(a)?;
    let mut proposals = 0u64;
    loop {
        let n = sample_f2(beta, a, state)?;
        proposals += 1;
        let v = state.u01();
        if f1_accept(n, v, beta, a) {
            return Ok((n, proposals));
        }
    }
}

/// Log of the F3 acceptance bound for a proposal `n`:
/// `ln[ a (1 - (a/(a+1))^(beta-1)) Gamma(n+1-beta)/Gamma(n+1)
///      * Gamma(a)/Gamma(1+a-beta) / f2(n) ]`.
fn f3_log_bound(n: u64, beta: f64, a: u64) -> f64 {
    let af = a as f64;
    let nf = n as f64;
    // 1 - (a/(a+1))^(beta-1) without cancellation
    let head = -((beta - 1.0) * (-1.0 / (af + 1.0)).ln_1p()).exp_m1();
    let log_rhs = af.ln()
        + head.ln()
        + log_gamma_unchecked(nf + 1.0 - beta)
        - log_gamma_unchecked(nf + 1.0)
        + log_gamma_unchecked(af)
        - log_gamma_unchecked(1.0 + af - beta);
    // ln f2(n)
    let tau_m1 = ((beta - 1.0) * (1.0 / nf).ln_1p()).exp_m1();
    let log_f2 = (beta - 1.0) * (af.ln() - nf.ln()) + (tau_m1 / (tau_m1 + 1.0)).ln();
    log_rhs - log_f2
}

fn f3_accept(n: u64, v: f64, beta: f64, a: u64) -> bool {
    if v == 0.0 {
        return true;
    }
    v.ln() <= f3_log_bound(n, beta, a)
}

/// Draw one value from F3: rejection from F2 proposals, acceptance
/// evaluated in log space.
pub fn sample_f3(beta: f64, a: u64, state: &mut SamplerState) -> Result<u64, ModelError> {
    sample_f3_counted(beta, a, state).map(|(n, _)| n)
}

/// As [`sample_f3`], also reporting how many proposals were consumed.
pub fn sample_f3_counted(
    beta: f64,
    a: u64,
    state: &mut SamplerState,
) -> Result<(u64, u64), ModelError> {
    check_power_beta(beta, FamilyKind::F3)?;
    check_cutoff(a)?;
    let mut proposals = 0u64;
    loop {
        let n = sample_f2(beta, a, state)?;
        proposals += 1;
        let v = state.u01();
        if f3_accept(n, v, beta, a) {
            return Ok((n, proposals));
        }
    }
}

/// Draw `count` independent values from a model and bundle them as a
/// frequency vector. Deterministic for a fixed sampler state.
pub fn sample_iid(
    model: &ZipfModel,
    count: usize,
    state: &mut SamplerState,
) -> Result<FrequencyVector, ModelError> {
    let mut values = Vec::with_capacity(count);
    let (beta, a) = (model.beta(), model.a());
    for _ in 0..count {
        let n = match model.kind() {
            FamilyKind::F1 => sample_f1(beta, a, state)?,
            FamilyKind::F2 => sample_f2(beta, a, state)?,
            FamilyKind::F3 => sample_f3(beta, a, state)?,
        };
        values.push(n);
    }
    Ok(FrequencyVector::new(values).expect("samples are >= a >= 1"))
}
