use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::deeponet::{DeepOnetParams, OperatorDataset};
use crate::error::{Error, Result};
use crate::nn::Archive;
use crate::pde::ProblemKind;

use super::config::TrainConfig;
use super::data::{generate_test, generate_train, samples_from_dataset, samples_to_dataset};
use super::eval::{evaluate, predict};
use super::selftest::run_selftest;
use super::train::{train, CHECKPOINT_FILE};

pub const TRAIN_DATA_FILE: &str = "train.ds";
pub const TEST_DATA_FILE: &str = "test.ds";
pub const CONFIG_FILE: &str = "config.cfg";

#[derive(Parser, Debug)]
#[command(name = "pideeponet", about = "Physics-informed DeepONet experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Output directory (default: `runs/<benchmark>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample training inputs and solve the test set.
    Generate(Common),
    /// Train and write the checkpoint and metrics.
    Train(Common),
    /// Relative L² errors of the checkpoint on the test set.
    Eval(Common),
    /// Predict one test sample on its full query grid.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Index of the test sample.
        #[arg(long, default_value_t = 0)]
        sample: usize,
    },
    /// Gradient and solver oracle checks.
    Selftest,
}

fn load_config(c: &Common) -> Result<(TrainConfig, PathBuf)> {
    let path = c.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = TrainConfig::load(path)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(i) = c.iterations {
        cfg.iterations = i;
    }
    cfg.validate()?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(cfg.benchmark.to_string()));
    Ok((cfg, out))
}

fn test_set(cfg: &TrainConfig, out: &Path) -> Result<OperatorDataset> {
    let path = out.join(TEST_DATA_FILE);
    if path.exists() {
        OperatorDataset::load(&path)
    } else {
        Ok(generate_test(cfg)?.0)
    }
}

fn load_model(out: &Path) -> Result<DeepOnetParams> {
    DeepOnetParams::from_archive(&Archive::load(&out.join(CHECKPOINT_FILE))?)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(c) => {
            let (cfg, out) = load_config(&c)?;
            std::fs::create_dir_all(&out)?;
            cfg.save(&out.join(CONFIG_FILE))?;
            samples_to_dataset(&generate_train(&cfg)?)?.save(&out.join(TRAIN_DATA_FILE))?;
            let (test, _) = generate_test(&cfg)?;
            test.save(&out.join(TEST_DATA_FILE))?;
            println!("wrote {} training inputs and {} test samples to {}", cfg.n_train, test.n(), out.display());
        }
        Command::Train(c) => {
            let (cfg, out) = load_config(&c)?;
            let path = out.join(TRAIN_DATA_FILE);
            let samples = if path.exists() {
                samples_from_dataset(&OperatorDataset::load(&path)?)?
            } else {
                generate_train(&cfg)?
            };
            let res = train(&cfg, &samples, Some(&out))?;
            let last = res.metrics.last().expect("at least one metrics record");
            println!("iteration {}: loss {:.6e}; outputs in {}", last.iteration, last.total_loss, out.display());
        }
        Command::Eval(c) => {
            let (cfg, out) = load_config(&c)?;
            let params = load_model(&out)?;
            let summary = evaluate(&params, &test_set(&cfg, &out)?)?;
            println!("relative L2 over {} samples: mean = {:.6e}, std = {:.6e}", summary.errors.len(), summary.mean, summary.std);
        }
        Command::Predict { common, sample } => {
            let (cfg, out) = load_config(&common)?;
            let params = load_model(&out)?;
            let test = test_set(&cfg, &out)?;
            if sample >= test.n() {
                return Err(Error::invalid(format!("sample {sample} out of range (test set has {})", test.n())));
            }
            let u = samples_from_inputs(&cfg, &test, sample)?;
            let grid = predict(&params, &u, &query_axes(&cfg))?;
            let path = out.join(format!("prediction_{sample}.csv"));
            let mut buf = Vec::new();
            grid.write_csv(&mut buf)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(&path, buf)?;
            println!("wrote {}", path.display());
        }
        Command::Selftest => {
            let checks = run_selftest();
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if !ok {
                return Err(Error::Solver("selftest failed".into()));
            }
        }
    }
    Ok(())
}

/// Axes of the test query grid.
pub fn query_axes(cfg: &TrainConfig) -> Vec<Vec<f64>> {
    use crate::datagen::{linspace, periodic_grid};
    match cfg.benchmark {
        ProblemKind::Antiderivative => vec![linspace(0.0, 1.0, cfg.m)],
        ProblemKind::DiffusionReaction => vec![linspace(0.0, 1.0, cfg.solver_nx), linspace(0.0, 1.0, cfg.solver_nt)],
        ProblemKind::Burgers => vec![periodic_grid(cfg.solver_nx), linspace(0.0, 1.0, 101)],
        ProblemKind::Eikonal => {
            let h = cfg.box_half_width;
            vec![linspace(-h, h, cfg.test_grid); 2]
        }
    }
}

fn samples_from_inputs(cfg: &TrainConfig, test: &OperatorDataset, s: usize) -> Result<crate::deeponet::FieldSample> {
    use crate::datagen::{linspace, periodic_grid};
    let u = test.inputs().row_slice(s).to_vec();
    let id = test.ids()[s];
    match cfg.benchmark {
        ProblemKind::Eikonal => {
            let pts = crate::tensor::Mat::from_vec(u.len() / 2, 2, u);
            crate::deeponet::FieldSample::curve(id, &pts)
        }
        ProblemKind::Burgers => crate::deeponet::FieldSample::new(id, &periodic_grid(cfg.m), u),
        _ => crate::deeponet::FieldSample::new(id, &linspace(0.0, 1.0, cfg.m), u),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns 0 on success, 1 on a usage error and 2 on a runtime failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
