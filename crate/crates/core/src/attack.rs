//! Polynomial-regression modelling attack.
//!
//! Because challenges never entangle qubits and their circuit structure is
//! fixed, each qubit's mean response is a smooth function of its own rotation
//! angles. The attacker queries an equidistant grid of angles, fits one
//! bounded-degree polynomial per qubit by least squares, and afterwards
//! predicts responses to unseen challenges without touching the device.
//!
//! Rotation chains are handled by summing the angles per axis (mod 2π) and
//! evaluating a two-variable model trained on `H R_Y(θ_Y) R_X(θ_X)`. The
//! reduction is exact when same-axis gates are grouped and only an
//! approximation for alternating chains, since R_X and R_Y do not commute.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blochsim::{Axis, Challenge, DeviceFingerprint, GateChain};
use crate::error::{Error, Result};
use crate::rng;
use crate::sqlayer::{self, ResponseVector, Shots};

pub const DEFAULT_DEGREE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

impl ModelKind {
    pub fn coefficient_count(self, degree: usize) -> usize {
        match self {
            ModelKind::OneD => degree + 1,
            ModelKind::TwoD => (degree + 1) * (degree + 1),
        }
    }
}

/// Affine map from `[lo, hi)` onto `[-1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Self { lo: 0.0, hi: TAU }
    }
}

impl Scaling {
    pub fn apply(&self, theta: f64) -> f64 {
        2.0 * (theta - self.lo) / (self.hi - self.lo) - 1.0
    }
}

/// One qubit's response model over scaled angles.
///
/// 2D models span every monomial `X^i·Y^j` with `i, j ≤ degree`, ordered
/// graded-lexicographically over `(θ_X, θ_Y)`: `1, X, Y, X², XY, Y², X³, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialModel {
    pub kind: ModelKind,
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub scaling: Scaling,
}

impl PolynomialModel {
    pub fn new(kind: ModelKind, degree: usize, coefficients: Vec<f64>, scaling: Scaling) -> Result<Self> {
        let want = kind.coefficient_count(degree);
        if coefficients.len() != want {
            return Err(Error::Contract(format!(
                "{kind:?} model of degree {degree} needs {want} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(Self {
            kind,
            degree,
            coefficients,
            scaling,
        })
    }

    pub fn constant(kind: ModelKind, degree: usize, value: f64) -> Self {
        let mut coefficients = vec![0.0; kind.coefficient_count(degree)];
        coefficients[0] = value;
        Self {
            kind,
            degree,
            coefficients,
            scaling: Scaling::default(),
        }
    }

    /// Unclamped value of a 1D model.
    pub fn eval_1d(&self, theta: f64) -> f64 {
        let u = self.scaling.apply(theta);
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Unclamped value of a 2D model.
    pub fn eval_2d(&self, theta_x: f64, theta_y: f64) -> f64 {
        let row = monomials_2d(self.scaling.apply(theta_x), self.scaling.apply(theta_y), self.degree);
        row.iter().zip(&self.coefficients).map(|(m, c)| m * c).sum()
    }
}

fn powers(u: f64, degree: usize) -> Vec<f64> {
    std::iter::successors(Some(1.0), |p| Some(p * u)).take(degree + 1).collect()
}

fn monomials_2d(u: f64, v: f64, degree: usize) -> Vec<f64> {
    let pu = powers(u, degree);
    let pv = powers(v, degree);
    let mut row = Vec::with_capacity(ModelKind::TwoD.coefficient_count(degree));
    for total in 0..=2 * degree {
        for i in (total.saturating_sub(degree)..=total.min(degree)).rev() {
            row.push(pu[i] * pv[total - i]);
        }
    }
    row
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub rmse: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub model: PolynomialModel,
    pub diagnostics: FitDiagnostics,
}

/// Polynomial degree `ceil(1/ε̂)` for an estimated qubit error rate.
pub fn degree_for_noise(eps_hat: f64) -> Result<usize> {
    if !(eps_hat > 0.0 && eps_hat <= 1.0) {
        return Err(Error::Config(format!("estimated error rate {eps_hat} outside (0, 1]")));
    }
    // 1/0.1 must give 10, not 11
    Ok((1.0 / eps_hat - 1e-9).ceil() as usize)
}

/// Equidistant angles `2π·l/L`, `l = 0..L`.
pub fn grid_angles(l: usize) -> Result<Vec<f64>> {
    if l < 2 {
        return Err(Error::Contract(format!("grid needs at least 2 angles, got {l}")));
    }
    Ok((0..l).map(|i| TAU * i as f64 / l as f64).collect())
}

/// Which grid angle each qubit receives in a training query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLayout {
    /// Every qubit sits at the same grid point.
    #[default]
    Shared,
    /// Qubit `j` is shifted by `j` grid steps, so one query covers several points.
    Independent,
}

impl GridLayout {
    fn index(self, point: usize, qubit: usize, len: usize) -> usize {
        match self {
            GridLayout::Shared => point,
            GridLayout::Independent => (point + qubit) % len,
        }
    }
}

pub type Samples1d = Vec<(f64, f64)>;
pub type Samples2d = Vec<((f64, f64), f64)>;

/// Per-qubit `(θ, mean)` pairs over an `L`-point grid of `H R_Y(θ)` queries.
pub fn collect_training_1d(fp: &DeviceFingerprint, l: usize, shots: Shots, seed: u64) -> Result<Vec<Samples1d>> {
    collect_training_1d_with(fp, l, shots, seed, GridLayout::Shared)
}

pub fn collect_training_1d_with(
    fp: &DeviceFingerprint,
    l: usize,
    shots: Shots,
    seed: u64,
    layout: GridLayout,
) -> Result<Vec<Samples1d>> {
    let grid = grid_angles(l)?;
    let n = fp.n();
    let structure = GateChain::hadamard_y();
    let responses = (0..l)
        .into_par_iter()
        .map(|p| {
            let row: Vec<f64> = (0..n).map(|j| grid[layout.index(p, j, l)]).collect();
            let ch = Challenge::new(structure.clone(), vec![row.clone()])?;
            let r = sqlayer::query(fp, &ch, shots, rng::derive_seed(seed, "train-1d", p as u64))?;
            Ok((row, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_qubit = vec![Vec::with_capacity(l); n];
    for (angles, r) in &responses {
        for (j, set) in per_qubit.iter_mut().enumerate() {
            set.push((angles[j], r.values[j]));
        }
    }
    Ok(per_qubit)
}

/// Per-qubit `((θ_X, θ_Y), mean)` over a `G×G` grid of `H R_Y(θ_Y) R_X(θ_X)` queries.
pub fn collect_training_2d(fp: &DeviceFingerprint, g: usize, shots: Shots, seed: u64) -> Result<Vec<Samples2d>> {
    collect_training_2d_with(fp, g, shots, seed, GridLayout::Shared)
}

pub fn collect_training_2d_with(
    fp: &DeviceFingerprint,
    g: usize,
    shots: Shots,
    seed: u64,
    layout: GridLayout,
) -> Result<Vec<Samples2d>> {
    let grid = grid_angles(g)?;
    let n = fp.n();
    let structure = GateChain::hadamard_yx();
    let responses = (0..g * g)
        .into_par_iter()
        .map(|p| {
            let (ix, iy) = (p / g, p % g);
            let xs: Vec<f64> = (0..n).map(|j| grid[layout.index(ix, j, g)]).collect();
            let ys: Vec<f64> = (0..n).map(|j| grid[layout.index(iy, j, g)]).collect();
            let ch = Challenge::new(structure.clone(), vec![xs.clone(), ys.clone()])?;
            let r = sqlayer::query(fp, &ch, shots, rng::derive_seed(seed, "train-2d", p as u64))?;
            Ok((xs, ys, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_qubit = vec![Vec::with_capacity(g * g); n];
    for (xs, ys, r) in &responses {
        for (j, set) in per_qubit.iter_mut().enumerate() {
            set.push(((xs[j], ys[j]), r.values[j]));
        }
    }
    Ok(per_qubit)
}

/// Least squares via Householder QR of the design matrix.
fn least_squares(design: DMatrix<f64>, targets: &DVector<f64>) -> Result<DVector<f64>> {
    let cols = design.ncols();
    let qr = design.qr();
    let r = qr.r();
    let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= 1e-12 * diag_max) || diag_max == 0.0 {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let qtb = qr.q().transpose() * targets;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Fit("triangular solve failed".into()))
}

fn diagnostics(residuals: impl Iterator<Item = f64>) -> FitDiagnostics {
    let (mut sq, mut max_abs, mut count) = (0.0, 0.0f64, 0usize);
    for r in residuals {
        sq += r * r;
        max_abs = max_abs.max(r.abs());
        count += 1;
    }
    FitDiagnostics {
        rmse: (sq / count as f64).sqrt(),
        max_abs,
    }
}

pub fn fit_poly(samples: &[(f64, f64)], degree: usize) -> Result<Fit> {
    let cols = ModelKind::OneD.coefficient_count(degree);
    if samples.len() <= degree {
        return Err(Error::Fit(format!(
            "{} samples cannot determine a degree-{degree} polynomial",
            samples.len()
        )));
    }
    let scaling = Scaling::default();
    let design = DMatrix::from_fn(samples.len(), cols, |i, k| scaling.apply(samples[i].0).powi(k as i32));
    let targets = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let coefficients = least_squares(design, &targets)?.as_slice().to_vec();
    let model = PolynomialModel::new(ModelKind::OneD, degree, coefficients, scaling)?;
    let diagnostics = diagnostics(samples.iter().map(|&(t, y)| model.eval_1d(t) - y));
    Ok(Fit { model, diagnostics })
}

pub fn fit_poly2d(samples: &[((f64, f64), f64)], degree: usize) -> Result<Fit> {
    let cols = ModelKind::TwoD.coefficient_count(degree);
    if samples.len() <= cols {
        return Err(Error::Fit(format!(
            "{} samples cannot determine {cols} bivariate coefficients",
            samples.len()
        )));
    }
    let scaling = Scaling::default();
    let mut design = DMatrix::zeros(samples.len(), cols);
    for (i, &((x, y), _)) in samples.iter().enumerate() {
        let row = monomials_2d(scaling.apply(x), scaling.apply(y), degree);
        for (k, m) in row.into_iter().enumerate() {
            design[(i, k)] = m;
        }
    }
    let targets = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let coefficients = least_squares(design, &targets)?.as_slice().to_vec();
    let model = PolynomialModel::new(ModelKind::TwoD, degree, coefficients, scaling)?;
    let diagnostics = diagnostics(samples.iter().map(|&((x, y), v)| model.eval_2d(x, y) - v));
    Ok(Fit { model, diagnostics })
}

/// Per-qubit summed X and Y angles, each reduced mod 2π.
pub fn chain_reduce(challenge: &Challenge) -> (Vec<f64>, Vec<f64>) {
    let n = challenge.n();
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    for (axis, row) in challenge.structure().axes().iter().zip(challenge.angles()) {
        let acc = match axis {
            Axis::X => &mut xs,
            Axis::Y => &mut ys,
        };
        for (a, &theta) in acc.iter_mut().zip(row) {
            *a += theta;
        }
    }
    let wrap = |v: Vec<f64>| v.into_iter().map(|a| a.rem_euclid(TAU)).collect();
    (wrap(xs), wrap(ys))
}

/// Training provenance stored alongside a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingMetadata {
    /// `L` for 1D models, `G` for 2D models.
    pub grid: usize,
    /// `0` when trained on exact expectations.
    pub shots: usize,
    pub seed: u64,
}

/// One polynomial per qubit, all of the same kind and degree.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackModel {
    qubits: Vec<PolynomialModel>,
    pub metadata: TrainingMetadata,
}

impl AttackModel {
    pub fn new(qubits: Vec<PolynomialModel>, metadata: TrainingMetadata) -> Result<Self> {
        let first = qubits
            .first()
            .ok_or_else(|| Error::Contract("attack model needs at least one qubit".into()))?;
        if qubits
            .iter()
            .any(|q| q.kind != first.kind || q.degree != first.degree || q.scaling != first.scaling)
        {
            return Err(Error::Contract("per-qubit models must share kind, degree and scaling".into()));
        }
        Ok(Self { qubits, metadata })
    }

    /// Untrained model predicting `value` everywhere.
    pub fn constant(kind: ModelKind, n: usize, degree: usize, value: f64) -> Self {
        Self {
            qubits: vec![PolynomialModel::constant(kind, degree, value); n],
            metadata: TrainingMetadata { grid: 0, shots: 0, seed: 0 },
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.qubits[0].kind
    }

    pub fn degree(&self) -> usize {
        self.qubits[0].degree
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[PolynomialModel] {
        &self.qubits
    }

    fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind() != kind {
            return Err(Error::Contract(format!("expected a {kind:?} model, have {:?}", self.kind())));
        }
        Ok(())
    }

    fn expect_n(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(Error::Contract(format!("model covers {} qubits, got {n}", self.n())));
        }
        Ok(())
    }

    /// Dispatches on model kind. 1D models only accept `H R_Y(θ)` challenges.
    pub fn predict(&self, challenge: &Challenge) -> Result<ResponseVector> {
        match self.kind() {
            ModelKind::OneD => {
                if challenge.structure().axes() != [Axis::Y] {
                    return Err(Error::Contract(format!(
                        "1D model cannot answer chain {}",
                        challenge.structure()
                    )));
                }
                predict_1d(self, &challenge.angles()[0])
            }
            ModelKind::TwoD => predict_chain(self, challenge),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// `f(θ⃗)`, clamped to `[0, 1]`.
pub fn predict_1d(model: &AttackModel, thetas: &[f64]) -> Result<ResponseVector> {
    model.expect_kind(ModelKind::OneD)?;
    model.expect_n(thetas.len())?;
    Ok(ResponseVector::synthetic(
        model
            .qubits
            .iter()
            .zip(thetas)
            .map(|(q, &t)| q.eval_1d(t).clamp(0.0, 1.0))
            .collect(),
    ))
}

/// Unclamped 2D evaluation at the reduced angles.
pub fn predict_chain_raw(model: &AttackModel, challenge: &Challenge) -> Result<Vec<f64>> {
    model.expect_kind(ModelKind::TwoD)?;
    model.expect_n(challenge.n())?;
    let (xs, ys) = chain_reduce(challenge);
    Ok(model
        .qubits
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(q, (&x, &y))| q.eval_2d(x, y))
        .collect())
}

pub fn predict_chain(model: &AttackModel, challenge: &Challenge) -> Result<ResponseVector> {
    Ok(ResponseVector::synthetic(
        predict_chain_raw(model, challenge)?
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect(),
    ))
}

/// A trained model with per-qubit fit diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub model: AttackModel,
    pub diagnostics: Vec<FitDiagnostics>,
}

pub fn fit_all_1d(samples: &[Samples1d], degree: usize, metadata: TrainingMetadata) -> Result<Trained> {
    let fits = samples
        .par_iter()
        .map(|s| fit_poly(s, degree))
        .collect::<Result<Vec<_>>>()?;
    assemble(fits, metadata)
}

pub fn fit_all_2d(samples: &[Samples2d], degree: usize, metadata: TrainingMetadata) -> Result<Trained> {
    let fits = samples
        .par_iter()
        .map(|s| fit_poly2d(s, degree))
        .collect::<Result<Vec<_>>>()?;
    assemble(fits, metadata)
}

fn assemble(fits: Vec<Fit>, metadata: TrainingMetadata) -> Result<Trained> {
    let diagnostics = fits.iter().map(|f| f.diagnostics).collect();
    let model = AttackModel::new(fits.into_iter().map(|f| f.model).collect(), metadata)?;
    Ok(Trained { model, diagnostics })
}

/// Learning phase for `H R_Y(θ)`: grid queries then per-qubit fits.
pub fn learn_1d(fp: &DeviceFingerprint, l: usize, shots: Shots, seed: u64, degree: usize) -> Result<Trained> {
    let samples = collect_training_1d(fp, l, shots, seed)?;
    fit_all_1d(&samples, degree, TrainingMetadata { grid: l, shots: shots.count(), seed })
}

/// Learning phase for rotation chains: `G×G` grid over `H R_Y(θ_Y) R_X(θ_X)`.
pub fn learn_2d(fp: &DeviceFingerprint, g: usize, shots: Shots, seed: u64, degree: usize) -> Result<Trained> {
    let samples = collect_training_2d(fp, g, shots, seed)?;
    fit_all_2d(&samples, degree, TrainingMetadata { grid: g, shots: shots.count(), seed })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: ModelKind,
    degree: usize,
    scaling: Scaling,
    qubits: Vec<Vec<f64>>,
    metadata: MetadataFile,
}

#[derive(Serialize, Deserialize)]
struct MetadataFile {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    l: Option<usize>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    g: Option<usize>,
    shots: usize,
    seed: u64,
}

impl From<&AttackModel> for ModelFile {
    fn from(m: &AttackModel) -> Self {
        let grid = Some(m.metadata.grid);
        let (l, g) = match m.kind() {
            ModelKind::OneD => (grid, None),
            ModelKind::TwoD => (None, grid),
        };
        ModelFile {
            kind: m.kind(),
            degree: m.degree(),
            scaling: m.qubits[0].scaling,
            qubits: m.qubits.iter().map(|q| q.coefficients.clone()).collect(),
            metadata: MetadataFile {
                l,
                g,
                shots: m.metadata.shots,
                seed: m.metadata.seed,
            },
        }
    }
}

impl TryFrom<ModelFile> for AttackModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let grid = match (f.kind, f.metadata.l, f.metadata.g) {
            (ModelKind::OneD, Some(l), None) => l,
            (ModelKind::TwoD, None, Some(g)) => g,
            _ => return Err(Error::Contract("model metadata must carry L for 1d or G for 2d".into())),
        };
        let qubits = f
            .qubits
            .into_iter()
            .map(|c| PolynomialModel::new(f.kind, f.degree, c, f.scaling))
            .collect::<Result<Vec<_>>>()?;
        AttackModel::new(
            qubits,
            TrainingMetadata {
                grid,
                shots: f.metadata.shots,
                seed: f.metadata.seed,
            },
        )
    }
}
