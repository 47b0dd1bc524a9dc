use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use legimpact::harness::{
    calibrate_threshold, emit_run, emit_summary, generate_dataset, load_predictor, resolve_threshold,
    run_scenario, run_seeds, split_dataset, train_model, HarnessError, ScenarioConfig,
};
use legimpact::mlp::{save_model, Dataset};

#[derive(Parser)]
#[command(name = "legimpact", version, about = "Foot impact estimation from joint torques")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the built-in reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the no-load torque dataset.
    GenData(Common),
    /// Train the torque predictor.
    Train {
        #[command(flatten)]
        common: Common,
        /// Existing dataset CSV; generated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run one swing and write trace, events and report.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Model file, overriding `model_path`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Calibrate the residual threshold from no-contact runs.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Number of runs; `impact.calibration_runs` when omitted.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Multi-seed statistics.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::reference(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn with_model(mut cfg: ScenarioConfig, model: &Option<PathBuf>) -> ScenarioConfig {
    if let Some(m) = model {
        cfg.model_path = Some(m.clone());
    }
    cfg
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_file(path: PathBuf, text: &str) -> Result<(), HarnessError> {
    std::fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::GenData(common) => {
            let cfg = load_config(&common)?;
            let data = generate_dataset(&cfg)?;
            create_dir(&common.out)?;
            let path = common.out.join("dataset.csv");
            data.save_csv(&path)?;
            println!("wrote {} samples to {}", data.len(), path.display());
        }
        Command::Train { common, data } => {
            let cfg = load_config(&common)?;
            let data = match data {
                Some(p) => {
                    let mut d = Dataset::load_csv(&p)?;
                    split_dataset(&cfg, &mut d)?;
                    d
                }
                None => generate_dataset(&cfg)?,
            };
            let (net, rep) = train_model(&cfg, &data)?;
            create_dir(&common.out)?;
            let path = common.out.join("model.txt");
            save_model(&net, &path)?;
            let e = &rep.eval;
            let text = format!(
                "epochs: {}\nbest_epoch: {}\nstop: {:?}\ntrain_mse: {}\nvalidation_mse: {}\ntest_mse: {}\nregression_r: {:?}\nmax_abs_error: {:?}\n",
                rep.epochs_run,
                rep.best_epoch,
                rep.stop_reason,
                e.train_mse.unwrap_or(f64::NAN),
                e.validation_mse.unwrap_or(f64::NAN),
                e.test_mse.unwrap_or(f64::NAN),
                e.regression_r,
                e.max_abs_error,
            );
            write_file(common.out.join("train_report.txt"), &text)?;
            print!("{text}");
            println!("wrote {}", path.display());
        }
        Command::Simulate { common, model } => {
            let cfg = with_model(load_config(&common)?, &model);
            let net = load_predictor(&cfg)?;
            let cfg = resolve_threshold(&cfg, &net)?;
            let record = run_scenario(&cfg, &net)?;
            let files = emit_run(&record, &common.out)?;
            println!(
                "{} ticks, {} events; wrote {}",
                record.rows.len(),
                record.events.len(),
                files.trace.display()
            );
        }
        Command::Calibrate { common, model, runs } => {
            let cfg = with_model(load_config(&common)?, &model);
            let net = load_predictor(&cfg)?;
            let n = runs.unwrap_or(cfg.impact.calibration_runs);
            let t = calibrate_threshold(&cfg, &net, n)?;
            create_dir(&common.out)?;
            let text = format!(
                "[impact]\nthreshold_mode = \"fixed\"\nt_threshold = [{:?}, {:?}]\n",
                t.hip, t.knee
            );
            write_file(common.out.join("threshold.toml"), &text)?;
            print!("{text}");
        }
        Command::Report { common, model, runs } => {
            let cfg = with_model(load_config(&common)?, &model);
            let net = load_predictor(&cfg)?;
            let cfg = resolve_threshold(&cfg, &net)?;
            let seeds: Vec<u64> = (0..runs as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
            let records = run_seeds(&cfg, &net, &seeds)?;
            let (_, report) = emit_summary(&records, cfg.impact.threshold(), &common.out)?;
            print!("{}", std::fs::read_to_string(&report).unwrap_or_default());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: kind={} msg={}", e.kind(), msg);
            ExitCode::FAILURE
        }
    }
}
