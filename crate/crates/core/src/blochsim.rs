//! Product-state simulation of an imperfect n-qubit device.
//!
//! Challenges never entangle qubits, so each qubit is tracked as a Bloch
//! vector. Unitary gates rotate the vector, depolarization shrinks it, and
//! readout asymmetry plus symmetric white noise act on the sampled bits.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Gate structure shared by every qubit of a challenge.
///
/// `axes[0]` is applied first to |0⟩. An operator string such as
/// `H R_Y(a) R_X(b)` therefore corresponds to `axes = [X, Y]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GateChain {
    axes: Vec<Axis>,
    final_hadamard: bool,
}

impl GateChain {
    pub fn new(axes: Vec<Axis>, final_hadamard: bool) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Contract("gate chain needs at least one rotation".into()));
        }
        Ok(Self {
            axes,
            final_hadamard,
        })
    }

    /// `H R_Y(θ)`, the original Hadamard CR-QPUF challenge.
    pub fn hadamard_y() -> Self {
        Self {
            axes: vec![Axis::Y],
            final_hadamard: true,
        }
    }

    /// `H R_Y(θ_Y) R_X(θ_X)`: R_X first, then R_Y. The 2D training structure.
    pub fn hadamard_yx() -> Self {
        Self {
            axes: vec![Axis::X, Axis::Y],
            final_hadamard: true,
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn final_hadamard(&self) -> bool {
        self.final_hadamard
    }
}

impl fmt::Display for GateChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.axes {
            f.write_str(match a {
                Axis::X => "X",
                Axis::Y => "Y",
            })?;
        }
        Ok(())
    }
}

/// Parses an application-order axis string such as `"YYXX"` or `"Y,Y,X,X"`.
/// The final Hadamard is always present.
impl FromStr for GateChain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '-'))
            .map(|c| match c.to_ascii_uppercase() {
                'X' => Ok(Axis::X),
                'Y' => Ok(Axis::Y),
                other => Err(Error::Config(format!("unknown rotation axis {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        GateChain::new(axes, true)
    }
}

/// Classical description of a product challenge circuit.
///
/// `angles[i][j]` is the angle of gate `i` on qubit `j`, in `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChallengeRepr", into = "ChallengeRepr")]
pub struct Challenge {
    structure: GateChain,
    angles: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ChallengeRepr {
    axes: Vec<Axis>,
    final_h: bool,
    angles: Vec<Vec<f64>>,
}

impl TryFrom<ChallengeRepr> for Challenge {
    type Error = Error;

    fn try_from(r: ChallengeRepr) -> Result<Self> {
        Challenge::new(GateChain::new(r.axes, r.final_h)?, r.angles)
    }
}

impl From<Challenge> for ChallengeRepr {
    fn from(c: Challenge) -> Self {
        ChallengeRepr {
            axes: c.structure.axes,
            final_h: c.structure.final_hadamard,
            angles: c.angles,
        }
    }
}

impl Challenge {
    pub fn new(structure: GateChain, angles: Vec<Vec<f64>>) -> Result<Self> {
        if angles.len() != structure.len() {
            return Err(Error::Contract(format!(
                "challenge has {} angle rows for a chain of {} gates",
                angles.len(),
                structure.len()
            )));
        }
        let n = angles[0].len();
        if n == 0 {
            return Err(Error::Contract("challenge needs at least one qubit".into()));
        }
        for row in &angles {
            if row.len() != n {
                return Err(Error::Contract("ragged angle matrix".into()));
            }
            if let Some(a) = row.iter().find(|a| !(0.0..TAU).contains(*a)) {
                return Err(Error::Contract(format!("angle {a} outside [0, 2π)")));
            }
        }
        Ok(Self { structure, angles })
    }

    /// Challenge with every qubit at the same angles, one per gate.
    pub fn uniform(structure: GateChain, n: usize, per_gate: &[f64]) -> Result<Self> {
        let angles = per_gate.iter().map(|&a| vec![a; n]).collect();
        Self::new(structure, angles)
    }

    pub fn structure(&self) -> &GateChain {
        &self.structure
    }

    pub fn angles(&self) -> &[Vec<f64>] {
        &self.angles
    }

    pub fn n(&self) -> usize {
        self.angles[0].len()
    }

    /// Angles applied to qubit `j`, in application order.
    pub fn qubit_angles(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.angles.iter().map(move |row| row[j])
    }
}

/// Systematic imperfections of one physical qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitImperfection {
    pub gain_y: f64,
    pub gain_x: f64,
    pub offset_y: f64,
    pub offset_x: f64,
    /// Extra R_Y applied immediately before the Hadamard.
    pub h_tilt: f64,
    #[serde(rename = "depol")]
    pub depol_per_gate: f64,
    /// P(read 1 | outcome 0).
    #[serde(rename = "p10")]
    pub readout_p10: f64,
    /// P(read 0 | outcome 1).
    #[serde(rename = "p01")]
    pub readout_p01: f64,
}

impl QubitImperfection {
    pub const IDEAL: Self = Self {
        gain_y: 1.0,
        gain_x: 1.0,
        offset_y: 0.0,
        offset_x: 0.0,
        h_tilt: 0.0,
        depol_per_gate: 0.0,
        readout_p10: 0.0,
        readout_p01: 0.0,
    };

    fn validate(&self) -> Result<()> {
        let ok = (self.gain_y - 1.0).abs() < 0.5
            && (self.gain_x - 1.0).abs() < 0.5
            && self.offset_y.abs() < FRAC_PI_4
            && self.offset_x.abs() < FRAC_PI_4
            && self.h_tilt.abs() < FRAC_PI_4
            && (0.0..0.5).contains(&self.depol_per_gate)
            && (0.0..1.0).contains(&self.readout_p10)
            && (0.0..1.0).contains(&self.readout_p01);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("qubit imperfection out of range: {self:?}")))
        }
    }

    fn effective_angle(&self, axis: Axis, theta: f64) -> f64 {
        match axis {
            Axis::Y => self.gain_y * theta + self.offset_y,
            Axis::X => self.gain_x * theta + self.offset_x,
        }
    }

    /// Bloch vector just before readout for one qubit.
    pub fn bloch_vector(&self, structure: &GateChain, angles: impl IntoIterator<Item = f64>) -> [f64; 3] {
        let shrink = 1.0 - self.depol_per_gate;
        let mut v = [0.0, 0.0, 1.0];
        for (&axis, theta) in structure.axes().iter().zip(angles) {
            let a = self.effective_angle(axis, theta);
            v = match axis {
                Axis::Y => rotate_y(v, a),
                Axis::X => rotate_x(v, a),
            };
            v = scale(v, shrink);
        }
        if structure.final_hadamard() {
            v = hadamard(rotate_y(v, self.h_tilt));
            v = scale(v, shrink);
        }
        v
    }

    /// Pre-readout probability of outcome 1.
    pub fn p1(&self, structure: &GateChain, angles: impl IntoIterator<Item = f64>) -> f64 {
        (1.0 - self.bloch_vector(structure, angles)[2]) / 2.0
    }

    /// Mean of the read bit before white noise.
    pub fn readout_mean(&self, p1: f64) -> f64 {
        p1 * (1.0 - self.readout_p01) + (1.0 - p1) * self.readout_p10
    }
}

fn rotate_y([x, y, z]: [f64; 3], a: f64) -> [f64; 3] {
    let (s, c) = a.sin_cos();
    [x * c + z * s, y, z * c - x * s]
}

fn rotate_x([x, y, z]: [f64; 3], a: f64) -> [f64; 3] {
    let (s, c) = a.sin_cos();
    [x, y * c - z * s, y * s + z * c]
}

fn hadamard([x, y, z]: [f64; 3]) -> [f64; 3] {
    [z, -y, x]
}

fn scale([x, y, z]: [f64; 3], k: f64) -> [f64; 3] {
    [x * k, y * k, z * k]
}

/// The secret device identity: per-qubit imperfections plus the white-noise rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FingerprintRepr", into = "FingerprintRepr")]
pub struct DeviceFingerprint {
    pub device_id: String,
    pub white_noise_eps: f64,
    qubits: Vec<QubitImperfection>,
}

#[derive(Serialize, Deserialize)]
struct FingerprintRepr {
    device_id: String,
    n: usize,
    eps: f64,
    qubits: Vec<QubitImperfection>,
}

impl TryFrom<FingerprintRepr> for DeviceFingerprint {
    type Error = Error;

    fn try_from(r: FingerprintRepr) -> Result<Self> {
        if r.n != r.qubits.len() {
            return Err(Error::Config(format!(
                "fingerprint declares n = {} but lists {} qubits",
                r.n,
                r.qubits.len()
            )));
        }
        DeviceFingerprint::new(r.device_id, r.qubits, r.eps)
    }
}

impl From<DeviceFingerprint> for FingerprintRepr {
    fn from(f: DeviceFingerprint) -> Self {
        FingerprintRepr {
            device_id: f.device_id,
            n: f.qubits.len(),
            eps: f.white_noise_eps,
            qubits: f.qubits,
        }
    }
}

impl DeviceFingerprint {
    pub fn new(device_id: String, qubits: Vec<QubitImperfection>, white_noise_eps: f64) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Config("fingerprint needs at least one qubit".into()));
        }
        if !(0.0..0.5).contains(&white_noise_eps) {
            return Err(Error::Config(format!("white-noise rate {white_noise_eps} outside [0, 0.5)")));
        }
        for q in &qubits {
            q.validate()?;
        }
        Ok(Self {
            device_id,
            white_noise_eps,
            qubits,
        })
    }

    pub fn ideal(n: usize, white_noise_eps: f64) -> Result<Self> {
        Self::new("ideal".into(), vec![QubitImperfection::IDEAL; n], white_noise_eps)
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[QubitImperfection] {
        &self.qubits
    }

    fn check(&self, challenge: &Challenge) -> Result<()> {
        if challenge.n() != self.n() {
            return Err(Error::Contract(format!(
                "challenge addresses {} qubits, device has {}",
                challenge.n(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Distribution of one imperfection parameter.
///
/// Normal draws are truncated to `mean ± 6·sd` by resampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamDist {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

const TRUNCATION_SDS: f64 = 6.0;

impl ParamDist {
    pub fn fixed(value: f64) -> Self {
        ParamDist::Uniform { lo: value, hi: value }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            ParamDist::Normal { mean, sd } => (mean - TRUNCATION_SDS * sd, mean + TRUNCATION_SDS * sd),
            ParamDist::Uniform { lo, hi } => (lo, hi),
        }
    }

    fn validate(&self, name: &str, lo_incl: f64, hi_excl: f64, lo_open: bool) -> Result<()> {
        let well_formed = match *self {
            ParamDist::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            ParamDist::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
        };
        let (a, b) = self.support();
        let lower_ok = if lo_open { a > lo_incl } else { a >= lo_incl };
        if !well_formed || !lower_ok || b >= hi_excl {
            return Err(Error::Config(format!(
                "{name}: distribution {self:?} leaves the admissible range"
            )));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ParamDist::Normal { mean, sd: 0.0 } => mean,
            ParamDist::Normal { mean, sd } => {
                let normal = Normal::new(mean, sd).expect("validated normal");
                loop {
                    let x = normal.sample(rng);
                    if (x - mean).abs() <= TRUNCATION_SDS * sd {
                        return x;
                    }
                }
            }
            ParamDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// Distributions from which [`qgen`] draws each qubit's imperfections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImperfectionConfig {
    pub gain_y: ParamDist,
    pub gain_x: ParamDist,
    pub offset_y: ParamDist,
    pub offset_x: ParamDist,
    pub h_tilt: ParamDist,
    pub depol: ParamDist,
    pub readout_p10: ParamDist,
    pub readout_p01: ParamDist,
    pub eps: f64,
}

/// Coherent gate errors (gain, offset) are kept at calibrated-hardware scale:
/// every extra gate in a rotation chain repeats them, so wider spreads make
/// chain responses drift away from the two-gate training structure.
impl Default for ImperfectionConfig {
    fn default() -> Self {
        Self {
            gain_y: ParamDist::Normal { mean: 1.0, sd: 0.003 },
            gain_x: ParamDist::Normal { mean: 1.0, sd: 0.003 },
            offset_y: ParamDist::Normal { mean: 0.0, sd: 0.01 },
            offset_x: ParamDist::Normal { mean: 0.0, sd: 0.01 },
            h_tilt: ParamDist::Normal { mean: 0.0, sd: 0.03 },
            depol: ParamDist::Uniform { lo: 0.002, hi: 0.02 },
            readout_p10: ParamDist::Uniform { lo: 0.01, hi: 0.06 },
            readout_p01: ParamDist::Uniform { lo: 0.01, hi: 0.06 },
            eps: 0.02,
        }
    }
}

impl ImperfectionConfig {
    /// Ten-fold wider gain spread and five-fold wider offsets than the default.
    /// Single-gate challenges stay learnable; grouped rotation chains do not.
    pub fn wide() -> Self {
        Self {
            gain_y: ParamDist::Normal { mean: 1.0, sd: 0.03 },
            gain_x: ParamDist::Normal { mean: 1.0, sd: 0.03 },
            offset_y: ParamDist::Normal { mean: 0.0, sd: 0.05 },
            offset_x: ParamDist::Normal { mean: 0.0, sd: 0.05 },
            ..Self::default()
        }
    }

    /// Zero-width distributions at the ideal element, no white noise.
    pub fn ideal() -> Self {
        Self {
            gain_y: ParamDist::fixed(1.0),
            gain_x: ParamDist::fixed(1.0),
            offset_y: ParamDist::fixed(0.0),
            offset_x: ParamDist::fixed(0.0),
            h_tilt: ParamDist::fixed(0.0),
            depol: ParamDist::fixed(0.0),
            readout_p10: ParamDist::fixed(0.0),
            readout_p01: ParamDist::fixed(0.0),
            eps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gain_y.validate("gain_y", 0.5, 1.5, true)?;
        self.gain_x.validate("gain_x", 0.5, 1.5, true)?;
        self.offset_y.validate("offset_y", -FRAC_PI_4, FRAC_PI_4, true)?;
        self.offset_x.validate("offset_x", -FRAC_PI_4, FRAC_PI_4, true)?;
        self.h_tilt.validate("h_tilt", -FRAC_PI_4, FRAC_PI_4, true)?;
        self.depol.validate("depol", 0.0, 0.5, false)?;
        self.readout_p10.validate("readout_p10", 0.0, 1.0, false)?;
        self.readout_p01.validate("readout_p01", 0.0, 1.0, false)?;
        if !(0.0..0.5).contains(&self.eps) {
            return Err(Error::Config(format!("eps {} outside [0, 0.5)", self.eps)));
        }
        Ok(())
    }
}

/// Draws a device fingerprint. Deterministic in `(seed, n, cfg)`.
pub fn qgen(seed: u64, n: usize, cfg: &ImperfectionConfig) -> Result<DeviceFingerprint> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    cfg.validate()?;
    let mut rng = rng::stream(rng::derive_seed(seed, "qgen", n as u64));
    let qubits = (0..n)
        .map(|_| QubitImperfection {
            gain_y: cfg.gain_y.draw(&mut rng),
            gain_x: cfg.gain_x.draw(&mut rng),
            offset_y: cfg.offset_y.draw(&mut rng),
            offset_x: cfg.offset_x.draw(&mut rng),
            h_tilt: cfg.h_tilt.draw(&mut rng),
            depol_per_gate: cfg.depol.draw(&mut rng),
            readout_p10: cfg.readout_p10.draw(&mut rng),
            readout_p01: cfg.readout_p01.draw(&mut rng),
        })
        .collect();
    DeviceFingerprint::new(format!("qpuf-{seed:016x}"), qubits, cfg.eps)
}

/// Noiseless per-qubit probability of reading 1, by 2×2 unitary algebra on |0⟩.
pub fn ideal_p1(challenge: &Challenge) -> Vec<f64> {
    (0..challenge.n())
        .map(|j| {
            // amplitudes (a, b) of a|0> + b|1>, as (re, im) pairs
            let mut a = (1.0, 0.0);
            let mut b = (0.0, 0.0);
            for (&axis, theta) in challenge.structure().axes().iter().zip(challenge.qubit_angles(j)) {
                let (s, c) = (theta / 2.0).sin_cos();
                (a, b) = match axis {
                    // [[c, -s], [s, c]]
                    Axis::Y => (
                        (c * a.0 - s * b.0, c * a.1 - s * b.1),
                        (s * a.0 + c * b.0, s * a.1 + c * b.1),
                    ),
                    // [[c, -is], [-is, c]]
                    Axis::X => (
                        (c * a.0 + s * b.1, c * a.1 - s * b.0),
                        (c * b.0 + s * a.1, c * b.1 - s * a.0),
                    ),
                };
            }
            if challenge.structure().final_hadamard() {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                // only the |1> amplitude is needed
                b = (r * (a.0 - b.0), r * (a.1 - b.1));
            }
            b.0 * b.0 + b.1 * b.1
        })
        .collect()
}

/// Per-qubit pre-readout probability of 1 on the imperfect device.
pub fn born_p1(fp: &DeviceFingerprint, challenge: &Challenge) -> Result<Vec<f64>> {
    fp.check(challenge)?;
    Ok(fp
        .qubits
        .iter()
        .enumerate()
        .map(|(j, q)| q.p1(challenge.structure(), challenge.qubit_angles(j)))
        .collect())
}

/// Per-qubit mean of the read bit before white noise (Born law plus readout asymmetry).
pub fn readout_mean(fp: &DeviceFingerprint, challenge: &Challenge) -> Result<Vec<f64>> {
    let p1 = born_p1(fp, challenge)?;
    Ok(fp.qubits.iter().zip(p1).map(|(q, p)| q.readout_mean(p)).collect())
}

/// Exact expectation of the sampled bits, including white noise.
pub fn observed_mean(fp: &DeviceFingerprint, challenge: &Challenge) -> Result<Vec<f64>> {
    let eps = fp.white_noise_eps;
    Ok(readout_mean(fp, challenge)?
        .into_iter()
        .map(|q| eps + (1.0 - 2.0 * eps) * q)
        .collect())
}

/// Finite set of noisy readouts, `shots × n`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleBatch {
    shots: usize,
    n: usize,
    bits: Vec<u8>,
}

impl SampleBatch {
    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn shot(&self, i: usize) -> &[u8] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    /// Empirical per-qubit mean.
    pub fn means(&self) -> Vec<f64> {
        let mut ones = vec![0u64; self.n];
        for row in self.bits.chunks_exact(self.n) {
            for (c, &b) in ones.iter_mut().zip(row) {
                *c += u64::from(b);
            }
        }
        ones.into_iter().map(|c| c as f64 / self.shots as f64).collect()
    }
}

/// Draws `shots` noisy readouts. Deterministic in all arguments.
pub fn sample(fp: &DeviceFingerprint, challenge: &Challenge, shots: usize, stream_seed: u64) -> Result<SampleBatch> {
    if shots == 0 {
        return Err(Error::Contract("shots must be at least 1".into()));
    }
    let means = observed_mean(fp, challenge)?;
    let n = means.len();
    let mut rng = rng::stream(stream_seed);
    let mut bits = Vec::with_capacity(shots * n);
    for _ in 0..shots {
        bits.extend(means.iter().map(|&m| u8::from(rng.random::<f64>() < m)));
    }
    Ok(SampleBatch { shots, n, bits })
}
