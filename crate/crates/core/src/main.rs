use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crqpuf::blochsim::{DeviceFingerprint, GateChain};
use crqpuf::harness::{self, ExperimentConfig, ExperimentReport};
use crqpuf::{Error, Result};

#[derive(Parser)]
#[command(name = "crqpuf", version, about = "Hadamard CR-QPUF simulator and modelling-attack harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a device fingerprint.
    Qgen(Common),
    /// Enroll holdout challenges into a CRP database.
    Enroll {
        #[command(flatten)]
        common: Common,
        /// Fingerprint file; defaults to the device derived from --seed.
        #[arg(long)]
        fingerprint: Option<PathBuf>,
        /// Application-order axes of the holdout challenges.
        #[arg(long, default_value = "Y")]
        chain: String,
    },
    /// Learn per-qubit 1D models on the H·R_Y(θ) grid.
    #[command(name = "learn-1d")]
    Learn1d {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fingerprint: Option<PathBuf>,
    },
    /// Learn per-qubit 2D models on the H·R_Y(θ_Y)·R_X(θ_X) grid.
    #[command(name = "learn-2d")]
    Learn2d {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fingerprint: Option<PathBuf>,
    },
    /// Full 1D pipeline with honest and impostor baselines.
    #[command(name = "attack-1d")]
    Attack1d {
        #[command(flatten)]
        common: Common,
        /// Also run this many consecutive root seeds and write sweep.json.
        #[arg(long)]
        sweep: Option<u64>,
    },
    /// Rotation-chain pipeline.
    #[command(name = "attack-2d")]
    Attack2d {
        #[command(flatten)]
        common: Common,
        /// Holdout chain, application order (e.g. XXYY or XYXYXYXY).
        #[arg(long)]
        chain: Option<String>,
        #[arg(long)]
        sweep: Option<u64>,
    },
    /// Measured grid responses and fitted curves as CSV.
    Fig4(Common),
    /// Eve answers Alice's challenges from a trained model.
    Mitm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Honest and impostor acceptance rates only.
    Baselines(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON file mirroring the experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    /// Learning grid size (L for 1D, G for 2D).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    two_sided: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.root_seed = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.grid {
            cfg.l = v;
            cfg.g = v;
        }
        if let Some(v) = self.holdout {
            cfg.holdout = v;
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.degree {
            cfg.degree = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if self.two_sided {
            cfg.two_sided = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_or_generate(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<DeviceFingerprint> {
    match path {
        Some(p) => Ok(serde_json::from_str(&harness::read_file(p)?)?),
        None => harness::device(cfg),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn print_report(r: &ExperimentReport, dir: &Path) {
    if let Some(f) = &r.forged {
        println!("forged   accepted {}/{} ({:.3})", f.accepted, f.total, f.rate);
    }
    println!("honest   accepted {}/{} ({:.3})", r.honest.accepted, r.honest.total, r.honest.rate);
    println!("impostor accepted {}/{} ({:.3})", r.impostor.accepted, r.impostor.total, r.impostor.rate);
    println!("report   {}", dir.join("report.json").display());
}

fn run_sweep(cfg: &ExperimentConfig, count: u64, dir: &Path, run: impl Fn(&ExperimentConfig) -> Result<ExperimentReport> + Sync) -> Result<()> {
    let seeds: Vec<u64> = (0..count).map(|i| cfg.root_seed + i).collect();
    let s = harness::sweep(cfg, &seeds, run)?;
    ensure_dir(dir)?;
    harness::write_file(&dir.join("sweep.json"), &to_json(&s))?;
    println!(
        "sweep over {} seeds: forged {:.3}, honest {:.3}, impostor {:.3} (threshold {})",
        seeds.len(),
        s.mean_forged,
        s.mean_honest,
        s.mean_impostor,
        s.acceptance_threshold
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Qgen(c) => {
            let cfg = c.config()?;
            let fp = harness::device(&cfg)?;
            ensure_dir(&c.out)?;
            let path = c.out.join("fingerprint.json");
            harness::write_file(&path, &to_json(&fp))?;
            println!("{} ({} qubits) -> {}", fp.device_id, fp.n(), path.display());
        }
        Command::Enroll { common, fingerprint, chain } => {
            let cfg = common.config()?;
            let fp = load_or_generate(&cfg, fingerprint.as_deref())?;
            let chain: GateChain = chain.parse()?;
            let db = harness::enroll_holdout(&cfg, &fp, &chain)?;
            ensure_dir(&common.out)?;
            let path = common.out.join("crp_db.json");
            harness::write_file(&path, &db.to_json())?;
            println!("enrolled {} challenges x {} reps -> {}", db.records().len(), db.m(), path.display());
        }
        Command::Learn1d { common, fingerprint } => {
            let cfg = common.config()?;
            let fp = load_or_generate(&cfg, fingerprint.as_deref())?;
            let t = harness::learn_1d(&cfg, &fp)?;
            ensure_dir(&common.out)?;
            let path = common.out.join("model_1d.json");
            harness::write_file(&path, &t.model.to_json())?;
            let s = harness::FitSummary::from_diagnostics(&t.diagnostics);
            println!("mean training rmse {:.5} -> {}", s.mean_rmse, path.display());
        }
        Command::Learn2d { common, fingerprint } => {
            let cfg = common.config()?;
            let fp = load_or_generate(&cfg, fingerprint.as_deref())?;
            let t = harness::learn_2d(&cfg, &fp)?;
            ensure_dir(&common.out)?;
            let path = common.out.join("model_2d.json");
            harness::write_file(&path, &t.model.to_json())?;
            let s = harness::FitSummary::from_diagnostics(&t.diagnostics);
            println!("mean training rmse {:.5} -> {}", s.mean_rmse, path.display());
        }
        Command::Attack1d { common, sweep } => {
            let cfg = common.config()?;
            let r = harness::run_attack_1d(&cfg, Some(&common.out))?;
            print_report(&r, &common.out);
            if let Some(count) = sweep {
                run_sweep(&cfg, count, &common.out, |c| harness::run_attack_1d(c, None))?;
            }
        }
        Command::Attack2d { common, chain, sweep } => {
            let mut cfg = common.config()?;
            if let Some(c) = chain {
                cfg.chain = c;
            }
            let chain = cfg.chain()?;
            let r = harness::run_attack_2d(&cfg, &chain, Some(&common.out))?;
            print_report(&r, &common.out);
            if let Some(count) = sweep {
                run_sweep(&cfg, count, &common.out, |c| harness::run_attack_2d(c, &chain, None))?;
            }
        }
        Command::Fig4(c) => {
            let cfg = c.config()?;
            let r = harness::run_fig4(&cfg, Some(&c.out))?;
            println!("{} rows -> {}", r.rows.len(), c.out.join("fig4.csv").display());
        }
        Command::Mitm { common, db, model } => {
            let cfg = common.config()?;
            let (path, s) = harness::run_mitm_demo(&db, &model, cfg.policy(), &common.out)?;
            println!("forged responses accepted {}/{} ({:.3}) -> {}", s.accepted, s.total, s.rate, path.display());
        }
        Command::Baselines(c) => {
            let cfg = c.config()?;
            let r = harness::run_baselines(&cfg, Some(&c.out))?;
            print_report(&r, &c.out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use crqpuf::attack::AttackModel;
    use crqpuf::pufproto::CrpDatabase;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parsers_accept_emitted_files() {
        let cfg = ExperimentConfig {
            n: 3,
            holdout: 2,
            reps: 2,
            shots: 50,
            ..Default::default()
        };
        let fp = harness::device(&cfg).unwrap();
        let db = harness::enroll_holdout(&cfg, &fp, &GateChain::hadamard_y()).unwrap();
        assert_eq!(CrpDatabase::from_json(&db.to_json()).unwrap(), db);
        let m = AttackModel::constant(crqpuf::attack::ModelKind::OneD, 3, 2, 0.5);
        assert_eq!(AttackModel::from_json(&m.to_json()).unwrap(), m);
    }
}
