//! Reproducible experiment pipelines.
//!
//! Every pipeline is a pure function of an [`ExperimentConfig`]: all
//! randomness is derived from `root_seed` with per-purpose tags, so two runs
//! with the same configuration produce byte-identical artifacts.
//!
//! Artifacts written to an output directory:
//!
//! | file              | contents                                            |
//! |-------------------|-----------------------------------------------------|
//! | `fingerprint.json`| device fingerprint                                  |
//! | `crp_db.json`     | enrolled holdout CRP database                       |
//! | `model_1d.json`   | 1D attack model (`model_2d.json` for chains)        |
//! | `report.json`     | [`ExperimentReport`]                                |
//! | `report.csv`      | `population,index,mu,sigma,avg_hd,accepted`         |
//! | `fig4.csv`        | `qubit,kind,theta,measured_mean,fitted_value`       |
//! | `transcript.jsonl`| MITM protocol messages, three lines per challenge   |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{self, AttackModel, FitDiagnostics, Trained, DEFAULT_DEGREE};
use crate::blochsim::{self, Challenge, DeviceFingerprint, GateChain, ImperfectionConfig};
use crate::error::{Error, Result, StageExt};
use crate::pufproto::{self, AuthPolicy, CrpDatabase, Message, Signature};
use crate::rng::derive_seed;
use crate::sqlayer::{self, Shots};

/// Mean acceptance a forged-response attack must reach to count as a success.
pub const FORGED_ACCEPTANCE_THRESHOLD: f64 = 0.87;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub root_seed: u64,
    pub n: usize,
    /// Grid size of the 1D learning phase.
    #[serde(rename = "L")]
    pub l: usize,
    /// Side of the 2D learning grid.
    #[serde(rename = "G")]
    pub g: usize,
    pub shots: usize,
    /// Holdout challenges `K`.
    pub holdout: usize,
    /// Enrollment repetitions `m`.
    pub reps: usize,
    pub degree: usize,
    pub k: f64,
    pub two_sided: bool,
    pub imperfections: ImperfectionConfig,
    /// Application-order axes of the 2D experiment's holdout chain.
    pub chain: String,
    pub layout: attack::GridLayout,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            root_seed: 1,
            n: 27,
            l: 30,
            g: 30,
            shots: 2000,
            holdout: 15,
            reps: 5,
            degree: DEFAULT_DEGREE,
            k: 1.0,
            two_sided: false,
            imperfections: ImperfectionConfig::default(),
            chain: "XXYY".into(),
            layout: attack::GridLayout::Shared,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n", self.n),
            ("L", self.l),
            ("G", self.g),
            ("shots", self.shots),
            ("holdout", self.holdout),
            ("reps", self.reps),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.reps < 2 {
            return Err(Error::Config("reps must be at least 2".into()));
        }
        if self.k.is_nan() || self.k < 0.0 {
            return Err(Error::Config(format!("k = {} must be non-negative", self.k)));
        }
        self.chain()?;
        self.imperfections.validate()
    }

    pub fn chain(&self) -> Result<GateChain> {
        self.chain.parse()
    }

    pub fn policy(&self) -> AuthPolicy {
        AuthPolicy {
            k: self.k,
            two_sided: self.two_sided,
        }
    }

    pub fn with_seed(&self, root_seed: u64) -> Self {
        Self {
            root_seed,
            ..self.clone()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn seed(&self, tag: &str, counter: u64) -> u64 {
        derive_seed(self.root_seed, tag, counter)
    }
}

/// The enrolled device of an experiment.
pub fn device(cfg: &ExperimentConfig) -> Result<DeviceFingerprint> {
    blochsim::qgen(cfg.seed("device", 0), cfg.n, &cfg.imperfections)
}

/// A second, independently drawn device used as impostor.
pub fn impostor_device(cfg: &ExperimentConfig) -> Result<DeviceFingerprint> {
    blochsim::qgen(cfg.seed("impostor", 0), cfg.n, &cfg.imperfections)
}

pub fn holdout_challenges(cfg: &ExperimentConfig, structure: &GateChain) -> Result<Vec<Challenge>> {
    (0..cfg.holdout)
        .map(|k| pufproto::random_challenge(cfg.seed("holdout", k as u64), cfg.n, structure))
        .collect()
}

pub fn enroll_holdout(cfg: &ExperimentConfig, fp: &DeviceFingerprint, structure: &GateChain) -> Result<CrpDatabase> {
    let challenges = holdout_challenges(cfg, structure)?;
    pufproto::enroll(fp, &challenges, cfg.reps, cfg.shots, cfg.seed("enroll", 0))
}

pub fn learn_1d(cfg: &ExperimentConfig, fp: &DeviceFingerprint) -> Result<Trained> {
    let seed = cfg.seed("train-1d", 0);
    let samples = attack::collect_training_1d_with(fp, cfg.l, Shots::Finite(cfg.shots), seed, cfg.layout)?;
    let meta = attack::TrainingMetadata { grid: cfg.l, shots: cfg.shots, seed };
    attack::fit_all_1d(&samples, cfg.degree, meta)
}

pub fn learn_2d(cfg: &ExperimentConfig, fp: &DeviceFingerprint) -> Result<Trained> {
    let seed = cfg.seed("train-2d", 0);
    let samples = attack::collect_training_2d_with(fp, cfg.g, Shots::Finite(cfg.shots), seed, cfg.layout)?;
    let meta = attack::TrainingMetadata { grid: cfg.g, shots: cfg.shots, seed };
    attack::fit_all_2d(&samples, cfg.degree, meta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChallengeRow {
    pub index: usize,
    pub mu: f64,
    pub sigma: f64,
    pub avg_hd: f64,
    pub accepted: bool,
}

/// Authentication outcomes of one population of candidate responses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rows: Vec<ChallengeRow>,
    pub accepted: usize,
    pub total: usize,
    pub rate: f64,
}

impl Evaluation {
    fn from_rows(rows: Vec<ChallengeRow>) -> Self {
        let accepted = rows.iter().filter(|r| r.accepted).count();
        let total = rows.len();
        Self {
            rows,
            accepted,
            total,
            rate: accepted as f64 / total as f64,
        }
    }
}

/// Authenticates `candidates[i]` against record `i` of `db`.
pub fn evaluate(db: &CrpDatabase, candidates: &[Signature], policy: AuthPolicy) -> Result<Evaluation> {
    let rows = db
        .records()
        .iter()
        .zip(candidates)
        .map(|(rec, sig)| {
            let d = pufproto::authenticate(db, rec.index, sig, policy)?;
            Ok(ChallengeRow {
                index: rec.index,
                mu: d.mu,
                sigma: d.sigma,
                avg_hd: d.avg_hd,
                accepted: d.accepted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation::from_rows(rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub mean_rmse: f64,
    pub max_rmse: f64,
    pub max_abs: f64,
}

impl FitSummary {
    pub fn from_diagnostics(d: &[FitDiagnostics]) -> Self {
        Self {
            mean_rmse: d.iter().map(|x| x.rmse).sum::<f64>() / d.len() as f64,
            max_rmse: d.iter().map(|x| x.rmse).fold(0.0, f64::max),
            max_abs: d.iter().map(|x| x.max_abs).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Application-order axes of the holdout challenges.
    pub chain: String,
    pub config: ExperimentConfig,
    pub acceptance_threshold: f64,
    pub device_id: String,
    /// Model-predicted responses; absent for baseline-only runs.
    pub forged: Option<Evaluation>,
    /// Fresh responses of the enrolled device.
    pub honest: Evaluation,
    /// Responses of an independently drawn device.
    pub impostor: Evaluation,
    pub fit: Option<FitSummary>,
    /// Emitted files, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn forged_rate(&self) -> Option<f64> {
        self.forged.as_ref().map(|e| e.rate)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("population,index,mu,sigma,avg_hd,accepted\n");
        let groups = [("forged", self.forged.as_ref()), ("honest", Some(&self.honest)), ("impostor", Some(&self.impostor))];
        for (name, eval) in groups {
            for r in eval.into_iter().flat_map(|e| &e.rows) {
                let _ = writeln!(out, "{name},{},{},{},{},{}", r.index, r.mu, r.sigma, r.avg_hd, r.accepted);
            }
        }
        out
    }
}

fn honest_and_impostor(cfg: &ExperimentConfig, fp: &DeviceFingerprint, db: &CrpDatabase) -> Result<(Evaluation, Evaluation)> {
    let impostor = impostor_device(cfg)?;
    let respond = |dev: &DeviceFingerprint, tag: &str| -> Result<Vec<Signature>> {
        db.records()
            .iter()
            .map(|rec| {
                let seed = cfg.seed(tag, rec.index as u64);
                sqlayer::sq_response(dev, &rec.challenge, cfg.shots, seed).map(|r| pufproto::encode_signature(&r))
            })
            .collect()
    };
    let honest = evaluate(db, &respond(fp, "honest")?, cfg.policy())?;
    let impostor = evaluate(db, &respond(&impostor, "impostor-query")?, cfg.policy())?;
    Ok((honest, impostor))
}

/// Eve's forged signatures: model predictions for every enrolled challenge.
pub fn forge(db: &CrpDatabase, model: &AttackModel) -> Result<Vec<Signature>> {
    db.records()
        .iter()
        .map(|rec| model.predict(&rec.challenge).map(|r| pufproto::encode_signature(&r)))
        .collect()
}

struct Outputs<'a> {
    dir: Option<&'a Path>,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: Option<&'a Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        if let Some(d) = self.dir {
            write_file(&d.join(name), contents)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn finish(mut report: ExperimentReport, mut out: Outputs<'_>) -> Result<ExperimentReport> {
    // the report lists itself and its CSV twin
    if out.dir.is_some() {
        report.artifacts = out.written.clone();
        report.artifacts.extend(["report.json".to_string(), "report.csv".to_string()]);
    }
    out.write("report.json", &report.to_json())?;
    out.write("report.csv", &report.to_csv())?;
    Ok(report)
}

/// qgen → enroll → learn on the `H R_Y(θ)` grid → predict → authenticate,
/// plus honest and impostor baselines on the same database.
pub fn run_attack_1d(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut out = Outputs::new(out_dir)?;
    let structure = GateChain::hadamard_y();
    let fp = device(cfg).stage("qgen")?;
    let db = enroll_holdout(cfg, &fp, &structure).stage("enroll")?;
    let trained = learn_1d(cfg, &fp).stage("learn-1d")?;
    let forged = forge(&db, &trained.model).and_then(|s| evaluate(&db, &s, cfg.policy())).stage("attack")?;
    let (honest, impostor) = honest_and_impostor(cfg, &fp, &db).stage("baselines")?;

    out.write("fingerprint.json", &pretty(&fp))?;
    out.write("crp_db.json", &db.to_json())?;
    out.write("model_1d.json", &trained.model.to_json())?;
    let report = ExperimentReport {
        experiment: "attack-1d".into(),
        chain: structure.to_string(),
        config: cfg.clone(),
        acceptance_threshold: FORGED_ACCEPTANCE_THRESHOLD,
        device_id: fp.device_id.clone(),
        forged: Some(forged),
        honest,
        impostor,
        fit: Some(FitSummary::from_diagnostics(&trained.diagnostics)),
        artifacts: Vec::new(),
    };
    finish(report, out)
}

/// Rotation-chain attack: 2D grid training, chain reduction, prediction.
pub fn run_attack_2d(cfg: &ExperimentConfig, chain: &GateChain, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut out = Outputs::new(out_dir)?;
    let fp = device(cfg).stage("qgen")?;
    let db = enroll_holdout(cfg, &fp, chain).stage("enroll")?;
    let trained = learn_2d(cfg, &fp).stage("learn-2d")?;
    let forged = forge(&db, &trained.model).and_then(|s| evaluate(&db, &s, cfg.policy())).stage("attack")?;
    let (honest, impostor) = honest_and_impostor(cfg, &fp, &db).stage("baselines")?;

    out.write("fingerprint.json", &pretty(&fp))?;
    out.write("crp_db.json", &db.to_json())?;
    out.write("model_2d.json", &trained.model.to_json())?;
    let report = ExperimentReport {
        experiment: "attack-2d".into(),
        chain: chain.to_string(),
        config: cfg.clone(),
        acceptance_threshold: FORGED_ACCEPTANCE_THRESHOLD,
        device_id: fp.device_id.clone(),
        forged: Some(forged),
        honest,
        impostor,
        fit: Some(FitSummary::from_diagnostics(&trained.diagnostics)),
        artifacts: Vec::new(),
    };
    finish(report, out)
}

/// Honest and impostor acceptance on the `H R_Y(θ)` holdout database, no attack.
pub fn run_baselines(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let out = Outputs::new(out_dir)?;
    let structure = GateChain::hadamard_y();
    let fp = device(cfg).stage("qgen")?;
    let db = enroll_holdout(cfg, &fp, &structure).stage("enroll")?;
    let (honest, impostor) = honest_and_impostor(cfg, &fp, &db).stage("baselines")?;
    let report = ExperimentReport {
        experiment: "baselines".into(),
        chain: structure.to_string(),
        config: cfg.clone(),
        acceptance_threshold: FORGED_ACCEPTANCE_THRESHOLD,
        device_id: fp.device_id.clone(),
        forged: None,
        honest,
        impostor,
        fit: None,
        artifacts: Vec::new(),
    };
    finish(report, out)
}

/// Mean rates over several root seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub experiment: String,
    pub chain: String,
    pub seeds: Vec<u64>,
    pub acceptance_threshold: f64,
    pub forged_rates: Vec<f64>,
    pub honest_rates: Vec<f64>,
    pub impostor_rates: Vec<f64>,
    pub mean_forged: f64,
    pub mean_honest: f64,
    pub mean_impostor: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs `run` for every seed (in parallel) and averages the rates.
pub fn sweep<F>(cfg: &ExperimentConfig, seeds: &[u64], run: F) -> Result<SweepSummary>
where
    F: Fn(&ExperimentConfig) -> Result<ExperimentReport> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let reports = seeds
        .par_iter()
        .map(|&s| run(&cfg.with_seed(s)))
        .collect::<Result<Vec<_>>>()?;
    let forged_rates: Vec<f64> = reports.iter().filter_map(|r| r.forged_rate()).collect();
    let honest_rates: Vec<f64> = reports.iter().map(|r| r.honest.rate).collect();
    let impostor_rates: Vec<f64> = reports.iter().map(|r| r.impostor.rate).collect();
    Ok(SweepSummary {
        experiment: reports[0].experiment.clone(),
        chain: reports[0].chain.clone(),
        seeds: seeds.to_vec(),
        acceptance_threshold: FORGED_ACCEPTANCE_THRESHOLD,
        mean_forged: if forged_rates.is_empty() { f64::NAN } else { mean(&forged_rates) },
        mean_honest: mean(&honest_rates),
        mean_impostor: mean(&impostor_rates),
        forged_rates,
        honest_rates,
        impostor_rates,
    })
}

pub const FIG4_DENSE_POINTS: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub qubit: usize,
    /// `grid` rows carry a measurement, `dense` rows only the fitted curve.
    pub kind: String,
    pub theta: f64,
    pub measured_mean: Option<f64>,
    pub fitted_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig4Report {
    pub config: ExperimentConfig,
    pub device_id: String,
    pub fit: Vec<FitDiagnostics>,
    pub rows: Vec<Fig4Row>,
}

impl Fig4Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qubit,kind,theta,measured_mean,fitted_value\n");
        for r in &self.rows {
            let measured = r.measured_mean.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", r.qubit, r.kind, r.theta, measured, r.fitted_value);
        }
        out
    }
}

/// Measured responses along the training grid and the fitted curves.
pub fn run_fig4(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Fig4Report> {
    cfg.validate()?;
    let mut out = Outputs::new(out_dir)?;
    let fp = device(cfg).stage("qgen")?;
    let seed = cfg.seed("train-1d", 0);
    let samples = attack::collect_training_1d(&fp, cfg.l, Shots::Finite(cfg.shots), seed).stage("collect")?;
    let meta = attack::TrainingMetadata { grid: cfg.l, shots: cfg.shots, seed };
    let trained = attack::fit_all_1d(&samples, cfg.degree, meta).stage("fit")?;

    let mut rows = Vec::with_capacity(fp.n() * (cfg.l + FIG4_DENSE_POINTS));
    for (j, (set, model)) in samples.iter().zip(trained.model.qubits()).enumerate() {
        rows.extend(set.iter().map(|&(theta, m)| Fig4Row {
            qubit: j,
            kind: "grid".into(),
            theta,
            measured_mean: Some(m),
            fitted_value: model.eval_1d(theta),
        }));
        rows.extend((0..FIG4_DENSE_POINTS).map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / FIG4_DENSE_POINTS as f64;
            Fig4Row {
                qubit: j,
                kind: "dense".into(),
                theta,
                measured_mean: None,
                fitted_value: model.eval_1d(theta),
            }
        }));
    }
    let report = Fig4Report {
        config: cfg.clone(),
        device_id: fp.device_id.clone(),
        fit: trained.diagnostics,
        rows,
    };
    out.write("fig4.csv", &report.to_csv())?;
    out.write("model_1d.json", &trained.model.to_json())?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitmSummary {
    pub device_id: String,
    pub accepted: usize,
    pub total: usize,
    pub rate: f64,
}

/// Replays the protocol with Eve in the middle.
///
/// For each enrolled challenge Alice emits a challenge message, Eve answers
/// with a model prediction instead of querying the device, and Alice decides.
/// Returns the transcript lines (three per challenge) and a summary.
pub fn mitm_transcript(db: &CrpDatabase, model: &AttackModel, policy: AuthPolicy) -> Result<(Vec<String>, MitmSummary)> {
    let mut lines = Vec::with_capacity(3 * db.records().len());
    let mut accepted = 0;
    for rec in db.records() {
        let alice = Message::Challenge {
            index: rec.index,
            challenge: rec.challenge.clone(),
        };
        lines.push(alice.to_line());

        // Eve only sees the wire
        let Message::Challenge { index, challenge } = Message::from_line(lines.last().unwrap())? else {
            unreachable!("alice sent a challenge");
        };
        let forged = pufproto::encode_signature(&model.predict(&challenge)?);
        lines.push(Message::Response { index, signature: forged }.to_line());

        let Message::Response { index, signature } = Message::from_line(lines.last().unwrap())? else {
            unreachable!("eve sent a response");
        };
        let decision = pufproto::authenticate(db, index, &signature, policy)?;
        accepted += usize::from(decision.accepted);
        lines.push(Message::decision(index, &decision).to_line());
    }
    let total = db.records().len();
    let summary = MitmSummary {
        device_id: db.device_id.clone(),
        accepted,
        total,
        rate: accepted as f64 / total as f64,
    };
    Ok((lines, summary))
}

/// File-based MITM demo: loads the database and model, writes `transcript.jsonl`.
pub fn run_mitm_demo(db_path: &Path, model_path: &Path, policy: AuthPolicy, out_dir: &Path) -> Result<(PathBuf, MitmSummary)> {
    let db = CrpDatabase::from_json(&read_file(db_path)?).stage("load database")?;
    let model = AttackModel::from_json(&read_file(model_path)?).stage("load model")?;
    let (lines, summary) = mitm_transcript(&db, &model, policy).stage("mitm")?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("transcript.jsonl");
    let mut text = lines.join("\n");
    text.push('\n');
    write_file(&path, &text)?;
    write_file(&out_dir.join("mitm_summary.json"), &pretty(&summary))?;
    Ok((path, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 5,
            l: 20,
            g: 16,
            shots: 500,
            holdout: 4,
            reps: 3,
            degree: 6,
            ..Default::default()
        }
    }

    #[test]
    fn defaults_match_experiment_scale() {
        let c = ExperimentConfig::default();
        assert_eq!((c.n, c.l, c.g, c.shots, c.holdout, c.reps, c.degree), (27, 30, 30, 2000, 15, 5, 10));
        assert_eq!(c.k, 1.0);
        assert!(!c.two_sided);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig { shots: 0, ..small() }.validate().is_err());
        assert!(ExperimentConfig { reps: 1, ..small() }.validate().is_err());
        assert!(ExperimentConfig { chain: "YQ".into(), ..small() }.validate().is_err());
        assert!(small().validate().is_ok());
    }

    #[test]
    fn config_json_uses_letter_keys() {
        let v: serde_json::Value = serde_json::to_value(ExperimentConfig::default()).unwrap();
        assert_eq!(v["L"], 30);
        assert_eq!(v["G"], 30);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"root_seed": 9, "n": 3}"#).unwrap();
        assert_eq!(partial.n, 3);
        assert_eq!(partial.shots, 2000);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn report_rates_match_rows() {
        let r = run_attack_1d(&small(), None).unwrap();
        for e in [r.forged.as_ref().unwrap(), &r.honest, &r.impostor] {
            let acc = e.rows.iter().filter(|x| x.accepted).count();
            assert_eq!(acc, e.accepted);
            assert_eq!(e.total, 4);
            assert_eq!(e.rate, acc as f64 / 4.0);
        }
        assert_eq!(r.to_csv().lines().count(), 1 + 3 * 4);
    }

    #[test]
    fn baselines_have_no_forged_section() {
        let r = run_baselines(&small(), None).unwrap();
        assert!(r.forged.is_none());
        assert!(r.fit.is_none());
    }

    #[test]
    fn transcript_shape() {
        let cfg = small();
        let fp = device(&cfg).unwrap();
        let db = enroll_holdout(&cfg, &fp, &GateChain::hadamard_y()).unwrap();
        let model = AttackModel::constant(attack::ModelKind::OneD, cfg.n, 3, 0.5);
        let (lines, summary) = mitm_transcript(&db, &model, cfg.policy()).unwrap();
        assert_eq!(lines.len(), 3 * cfg.holdout);
        assert_eq!(summary.total, cfg.holdout);
        for chunk in lines.chunks(3) {
            assert!(matches!(Message::from_line(&chunk[0]).unwrap(), Message::Challenge { .. }));
            assert!(matches!(Message::from_line(&chunk[1]).unwrap(), Message::Response { .. }));
            assert!(matches!(Message::from_line(&chunk[2]).unwrap(), Message::Decision { .. }));
        }
    }
}
