//! The Hadamard CR-QPUF authentication protocol.
//!
//! A verifier enrolls a device by querying it `m` times per random challenge
//! and quantizing each response to a 5-bit-per-qubit signature. A prover is
//! later accepted when the average Hamming distance between its signature and
//! the enrolled ones stays inside the spread of the enrolled signatures.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::blochsim::{Challenge, DeviceFingerprint, GateChain};
use crate::error::{Error, Result};
use crate::rng;
use crate::sqlayer::{self, ResponseVector};

pub const BITS_PER_QUBIT: usize = 5;
const LEVELS: f64 = ((1 << BITS_PER_QUBIT) - 1) as f64;

/// Draws a challenge with i.i.d. uniform angles in `[0, 2π)`.
pub fn random_challenge(rng_seed: u64, n: usize, structure: &GateChain) -> Result<Challenge> {
    let mut rng = rng::stream(rng_seed);
    let dist = Uniform::new(0.0, TAU).expect("non-empty range");
    let angles = (0..structure.len())
        .map(|_| (0..n).map(|_| dist.sample(&mut rng)).collect())
        .collect();
    Challenge::new(structure.clone(), angles)
}

/// `S_out`: 5 bits per qubit, qubit-major, most significant bit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    bits: Vec<bool>,
}

impl Signature {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if !bits.len().is_multiple_of(BITS_PER_QUBIT) {
            return Err(Error::Contract(format!(
                "signature length {} is not a multiple of {BITS_PER_QUBIT}",
                bits.len()
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn qubits(&self) -> usize {
        self.bits.len() / BITS_PER_QUBIT
    }

    /// Quantization levels, one per qubit.
    pub fn levels(&self) -> Vec<u8> {
        self.bits
            .chunks_exact(BITS_PER_QUBIT)
            .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
            .collect()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Contract(format!("invalid signature character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Signature::from_bits(bits)
    }
}

impl Serialize for Signature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Quantization level of one mean: `round(v·31)` clamped to `[0, 31]`.
pub fn quantize(v: f64) -> u8 {
    // f64::round rounds half away from zero
    (v * LEVELS).round().clamp(0.0, LEVELS) as u8
}

pub fn encode_signature(r: &ResponseVector) -> Signature {
    let bits = r
        .values
        .iter()
        .flat_map(|&v| {
            let q = quantize(v);
            (0..BITS_PER_QUBIT).rev().map(move |i| (q >> i) & 1 == 1)
        })
        .collect();
    Signature { bits }
}

pub fn hamming(a: &Signature, b: &Signature) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "hamming distance of signatures with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// Mean and sample standard deviation (`n − 1` denominator) of all pairwise
/// Hamming distances.
pub fn intra_hd_stats(signatures: &[Signature]) -> Result<(f64, f64)> {
    if signatures.len() < 2 {
        return Err(Error::Contract("intra-HD statistics need at least two signatures".into()));
    }
    let mut hds = Vec::with_capacity(signatures.len() * (signatures.len() - 1) / 2);
    for (i, a) in signatures.iter().enumerate() {
        for b in &signatures[i + 1..] {
            hds.push(hamming(a, b)? as f64);
        }
    }
    let count = hds.len() as f64;
    let mu = hds.iter().sum::<f64>() / count;
    if hds.len() == 1 {
        return Ok((mu, 0.0));
    }
    let var = hds.iter().map(|h| (h - mu) * (h - mu)).sum::<f64>() / (count - 1.0);
    Ok((mu, var.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CrpRecordRepr", into = "CrpRecordRepr")]
pub struct CrpRecord {
    pub index: usize,
    pub challenge: Challenge,
    signatures: Vec<Signature>,
    mu: f64,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
struct CrpRecordRepr {
    index: usize,
    challenge: Challenge,
    signatures: Vec<Signature>,
    mu: f64,
    sigma: f64,
}

impl TryFrom<CrpRecordRepr> for CrpRecord {
    type Error = Error;

    fn try_from(r: CrpRecordRepr) -> Result<Self> {
        let rec = CrpRecord::new(r.index, r.challenge, r.signatures)?;
        if rec.mu != r.mu || rec.sigma != r.sigma {
            return Err(Error::Contract(format!(
                "record {}: stored mu/sigma ({}, {}) differ from recomputation ({}, {})",
                r.index, r.mu, r.sigma, rec.mu, rec.sigma
            )));
        }
        Ok(rec)
    }
}

impl From<CrpRecord> for CrpRecordRepr {
    fn from(r: CrpRecord) -> Self {
        CrpRecordRepr {
            index: r.index,
            challenge: r.challenge,
            signatures: r.signatures,
            mu: r.mu,
            sigma: r.sigma,
        }
    }
}

impl CrpRecord {
    pub fn new(index: usize, challenge: Challenge, signatures: Vec<Signature>) -> Result<Self> {
        let expected = challenge.n() * BITS_PER_QUBIT;
        if let Some(s) = signatures.iter().find(|s| s.len() != expected) {
            return Err(Error::Contract(format!(
                "record {index}: signature of {} bits, expected {expected}",
                s.len()
            )));
        }
        let (mu, sigma) = intra_hd_stats(&signatures)?;
        Ok(Self {
            index,
            challenge,
            signatures,
            mu,
            sigma,
        })
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// The verifier's secret: enrolled signatures for each challenge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CrpDatabaseRepr", into = "CrpDatabaseRepr")]
pub struct CrpDatabase {
    pub device_id: String,
    n: usize,
    m: usize,
    shots: usize,
    records: Vec<CrpRecord>,
}

#[derive(Serialize, Deserialize)]
struct CrpDatabaseRepr {
    device_id: String,
    n: usize,
    m: usize,
    shots: usize,
    records: Vec<CrpRecord>,
}

impl TryFrom<CrpDatabaseRepr> for CrpDatabase {
    type Error = Error;

    fn try_from(r: CrpDatabaseRepr) -> Result<Self> {
        CrpDatabase::new(r.device_id, r.n, r.m, r.shots, r.records)
    }
}

impl From<CrpDatabase> for CrpDatabaseRepr {
    fn from(d: CrpDatabase) -> Self {
        CrpDatabaseRepr {
            device_id: d.device_id,
            n: d.n,
            m: d.m,
            shots: d.shots,
            records: d.records,
        }
    }
}

impl CrpDatabase {
    pub fn new(device_id: String, n: usize, m: usize, shots: usize, records: Vec<CrpRecord>) -> Result<Self> {
        for r in &records {
            if r.challenge.n() != n {
                return Err(Error::Contract(format!("record {} addresses {} qubits, database has {n}", r.index, r.challenge.n())));
            }
            if r.signatures.len() != m {
                return Err(Error::Contract(format!("record {} holds {} signatures, database has m = {m}", r.index, r.signatures.len())));
            }
            if records.iter().filter(|o| o.index == r.index).count() > 1 {
                return Err(Error::Contract(format!("duplicate record index {}", r.index)));
            }
        }
        Ok(Self {
            device_id,
            n,
            m,
            shots,
            records,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn records(&self) -> &[CrpRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> Result<&CrpRecord> {
        self.records
            .iter()
            .find(|r| r.index == index)
            .ok_or(Error::UnknownRecord(index))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("database serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Queries `fp` `m` times per challenge and stores the quantized responses.
pub fn enroll(fp: &DeviceFingerprint, challenges: &[Challenge], m: usize, shots: usize, seed: u64) -> Result<CrpDatabase> {
    if m < 2 {
        return Err(Error::Contract(format!("enrollment needs m >= 2, got {m}")));
    }
    let records = challenges
        .iter()
        .enumerate()
        .map(|(k, ch)| {
            let signatures = (0..m)
                .map(|rep| {
                    let s = rng::derive_seed(seed, "enroll", (k * m + rep) as u64);
                    sqlayer::sq_response(fp, ch, shots, s).map(|r| encode_signature(&r))
                })
                .collect::<Result<Vec<_>>>()?;
            CrpRecord::new(k, ch.clone(), signatures)
        })
        .collect::<Result<Vec<_>>>()?;
    CrpDatabase::new(fp.device_id.clone(), fp.n(), m, shots, records)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthPolicy {
    pub k: f64,
    pub two_sided: bool,
}

impl Default for AuthPolicy {
    fn default() -> Self {
        Self { k: 1.0, two_sided: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthDecision {
    pub accepted: bool,
    pub avg_hd: f64,
    pub mu: f64,
    pub sigma: f64,
    pub k: f64,
}

/// Acceptance rule on an average Hamming distance.
///
/// One-sided: `avg ≤ mu + k·sigma`. Two-sided additionally requires
/// `avg ≥ mu − k·sigma`. With `sigma == 0` both reduce to `avg ≤ mu`.
pub fn accepts(avg_hd: f64, mu: f64, sigma: f64, policy: AuthPolicy) -> bool {
    if sigma == 0.0 {
        return avg_hd <= mu;
    }
    let upper = avg_hd <= mu + policy.k * sigma;
    if policy.two_sided {
        upper && avg_hd >= mu - policy.k * sigma
    } else {
        upper
    }
}

pub fn authenticate(db: &CrpDatabase, idx: usize, candidate: &Signature, policy: AuthPolicy) -> Result<AuthDecision> {
    let rec = db.record(idx)?;
    let total = rec
        .signatures
        .iter()
        .map(|s| hamming(candidate, s))
        .sum::<Result<usize>>()?;
    let avg_hd = total as f64 / rec.signatures.len() as f64;
    Ok(AuthDecision {
        accepted: accepts(avg_hd, rec.mu, rec.sigma, policy),
        avg_hd,
        mu: rec.mu,
        sigma: rec.sigma,
        k: policy.k,
    })
}

/// Line-delimited protocol messages exchanged between verifier and prover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Challenge {
        index: usize,
        challenge: Challenge,
    },
    Response {
        index: usize,
        signature: Signature,
    },
    Decision {
        index: usize,
        accepted: bool,
        avg_hd: f64,
        mu: f64,
        sigma: f64,
    },
}

impl Message {
    pub fn decision(index: usize, d: &AuthDecision) -> Self {
        Message::Decision {
            index,
            accepted: d.accepted,
            avg_hd: d.avg_hd,
            mu: d.mu,
            sigma: d.sigma,
        }
    }

    /// One JSON object, no trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}
