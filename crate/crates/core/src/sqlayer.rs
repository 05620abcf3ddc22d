//! Statistical-query responses built from finite noisy samples, and the
//! Hoeffding and noise-admissibility arithmetic that goes with them.

use serde::{Deserialize, Serialize};

use crate::blochsim::{self, Challenge, DeviceFingerprint};
use crate::error::{Error, Result};

/// Per-qubit empirical mean of a shot batch.
///
/// `shots == 0` marks a synthetic vector (a model prediction or an exact
/// infinite-shot expectation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub values: Vec<f64>,
    pub shots: usize,
}

impl ResponseVector {
    pub fn synthetic(values: Vec<f64>) -> Self {
        Self { values, shots: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How a response is obtained from the device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    Finite(usize),
    /// Infinite-shot limit: the exact expectation, no sampling noise.
    Exact,
}

impl Shots {
    /// Shot count recorded in artifacts; `0` for the exact limit.
    pub fn count(self) -> usize {
        match self {
            Shots::Finite(s) => s,
            Shots::Exact => 0,
        }
    }
}

/// Either a finite-shot [`sq_response`] or the exact expectation.
pub fn query(fp: &DeviceFingerprint, challenge: &Challenge, shots: Shots, stream_seed: u64) -> Result<ResponseVector> {
    match shots {
        Shots::Finite(s) => sq_response(fp, challenge, s, stream_seed),
        Shots::Exact => exact_response(fp, challenge),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqConfig {
    pub tau: f64,
    pub delta: f64,
    pub eps: f64,
}

/// `R_out`: the componentwise mean of one sample batch.
pub fn sq_response(fp: &DeviceFingerprint, challenge: &Challenge, shots: usize, stream_seed: u64) -> Result<ResponseVector> {
    let batch = blochsim::sample(fp, challenge, shots, stream_seed)?;
    Ok(ResponseVector {
        values: batch.means(),
        shots,
    })
}

/// Infinite-shot response: the exact expectation of the sampled bits.
pub fn exact_response(fp: &DeviceFingerprint, challenge: &Challenge) -> Result<ResponseVector> {
    Ok(ResponseVector::synthetic(blochsim::observed_mean(fp, challenge)?))
}

/// Hoeffding shot count estimating the debiased mean within `tau` with
/// confidence `1 - delta`, per component.
pub fn shots_for_tolerance(cfg: SqConfig) -> Result<usize> {
    if cfg.eps >= 0.5 {
        return Err(Error::NoiseTooLarge { eps: cfg.eps });
    }
    if cfg.tau.is_nan() || cfg.tau <= 0.0 || !(0.0..1.0).contains(&cfg.delta) || cfg.delta == 0.0 || cfg.eps < 0.0 {
        return Err(Error::Config(format!("invalid SQ configuration {cfg:?}")));
    }
    let margin = cfg.tau * (1.0 - 2.0 * cfg.eps);
    let n = (2.0 / cfg.delta).ln() / (2.0 * margin * margin);
    Ok(n.ceil() as usize)
}

/// Per qubit, whether `eps ≤ tau·|1 − 2q|` with `q` the pre-white-noise mean.
pub fn noise_admissible(fp: &DeviceFingerprint, challenge: &Challenge, tau: f64) -> Result<Vec<bool>> {
    Ok(blochsim::readout_mean(fp, challenge)?
        .into_iter()
        .map(|q| admissible(fp.white_noise_eps, q, tau))
        .collect())
}

pub fn admissible(eps: f64, q: f64, tau: f64) -> bool {
    eps <= tau * (1.0 - 2.0 * q).abs()
}

/// Inverts the symmetric bit-flip channel, clamping to `[0, 1]`.
pub fn debias(v: &ResponseVector, eps: f64) -> Result<ResponseVector> {
    if eps >= 0.5 {
        return Err(Error::NoiseTooLarge { eps });
    }
    Ok(ResponseVector {
        values: v
            .values
            .iter()
            .map(|&x| ((x - eps) / (1.0 - 2.0 * eps)).clamp(0.0, 1.0))
            .collect(),
        shots: v.shots,
    })
}
