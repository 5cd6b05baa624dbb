use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use streamix::harness::{
    cmd_compare, cmd_floor, cmd_initcheck, cmd_run, cmd_sweep, Algorithm, InitMode, RunConfig, SweepAxis,
};
use streamix::numfmt::to_json;
use streamix::{Error, NoiseKind, Placement, Weighting};

#[derive(Parser)]
#[command(name = "streamix", version, about = "Streaming clustering experiments on synthetic Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run: writes trace.csv and summary.json
    Run(Common),
    /// Repeat runs across values of N, C or d: writes sweep.csv and sweep.json
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Hard vs. soft updates on identical streams (k = 2)
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
    },
    /// Seeding only, checked against Cσ/20
    Initcheck(Common),
    /// Population-Lloyd floor of the configured model
    Floor {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200_000)]
        trials: usize,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON file with flat keys; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "N0")]
    n0: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// initalg | true-means | perturbed:<delta>
    #[arg(long)]
    init: Option<InitMode>,
    /// simplex-scaled | random-rotated | axis-aligned
    #[arg(long)]
    placement: Option<Placement>,
    /// gaussian | uniform-ball | rademacher-scaled
    #[arg(long)]
    noise: Option<NoiseKind>,
    /// posterior | literal
    #[arg(long)]
    weighting: Option<Weighting>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    retained_count: Option<usize>,
    #[arg(long)]
    trace_stride: Option<u64>,
    #[arg(long)]
    max_init_retries: Option<usize>,
    /// Soft weight uses the seeding phase's noise estimate
    #[arg(long)]
    estimate_sigma: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        over!(algorithm, k, d, c, sigma, n, seed, init, placement, noise, weighting, max_init_retries);
        if self.n0.is_some() {
            cfg.n0 = self.n0;
        }
        if self.block_size.is_some() {
            cfg.block_size = self.block_size;
        }
        if self.retained_count.is_some() {
            cfg.retained_count = self.retained_count;
        }
        if self.trace_stride.is_some() {
            cfg.trace_stride = self.trace_stride;
        }
        if self.out_dir.is_some() {
            cfg.out_dir = self.out_dir.clone();
        }
        cfg.estimate_sigma |= self.estimate_sigma;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InitFailure(_) => 2,
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidModel(_)
        | Error::DimensionTooSmall { .. }
        | Error::NTooSmall { .. }
        | Error::InsufficientData { .. } => 3,
        _ => 1,
    }
}

fn kind(e: &Error) -> &'static str {
    match exit_code(e) {
        2 => "init_failure",
        3 => "config",
        _ => "runtime",
    }
}

fn write_artifact(dir: Option<&Path>, name: &str, body: &str) -> Result<(), Error> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let out = cmd_run(&cfg)?;
            println!("{}", to_json(&out.summary)?);
        }
        Command::Sweep {
            common,
            axis,
            values,
            repeats,
        } => {
            let cfg = common.resolve()?;
            let report = cmd_sweep(&cfg, axis, &values, repeats)?;
            if let Some(dir) = &cfg.out_dir {
                fs::create_dir_all(dir)?;
                report.write_csv(std::io::BufWriter::new(fs::File::create(dir.join("sweep.csv"))?))?;
            } else {
                report.write_csv(std::io::stdout().lock())?;
            }
            let body = serde_json::json!({
                "axis": axis.to_string(),
                "points": report.points,
                "fit": report.fit,
            });
            let json = to_json(&body)?;
            write_artifact(cfg.out_dir.as_deref(), "sweep.json", &(json.clone() + "\n"))?;
            eprintln!("{json}");
        }
        Command::Compare { common, repeats } => {
            let cfg = common.resolve()?;
            let report = cmd_compare(&cfg, repeats)?;
            let json = to_json(&report)?;
            write_artifact(cfg.out_dir.as_deref(), "compare.json", &(json.clone() + "\n"))?;
            println!("{json}");
        }
        Command::Initcheck(common) => {
            let cfg = common.resolve()?;
            let check = cmd_initcheck(&cfg)?;
            let json = to_json(&check)?;
            write_artifact(cfg.out_dir.as_deref(), "initcheck.json", &(json.clone() + "\n"))?;
            println!("{json}");
        }
        Command::Floor { common, trials } => {
            let cfg = common.resolve()?;
            let report = cmd_floor(&cfg, trials)?;
            let json = to_json(&report)?;
            write_artifact(cfg.out_dir.as_deref(), "floor.json", &(json.clone() + "\n"))?;
            println!("{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": kind(&e), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
