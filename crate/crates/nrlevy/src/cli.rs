//! Command-line entry point. Every flag overrides the config-file key of the
//! same name.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use log::info;

use crate::config::{ConfigFile, Experiment, ExperimentConfig, Family, WalkKind};
use crate::output::write_report;
use crate::runner::PoolRunner;
use crate::{experiments, CliError, EXIT_ERROR, EXIT_PASS, EXIT_VERDICT_FAIL};

#[derive(Debug, Parser)]
#[command(name = "nrlevy", version, about = "Simulate step-reinforced walks and noise-reinforced Lévy processes")]
pub struct Args {
    /// Configuration file with [run], [triplet] and [params] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// simulate-ys, simulate-walk, simulate-nrlp, cf-compare, theorem1,
    /// supercritical, prop8 or moments.
    #[arg(long)]
    pub experiment: Option<Experiment>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub tolerance_mult: Option<f64>,

    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gaussian_factor: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub drift: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub atom_locations: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub atom_masses: Option<Vec<f64>>,

    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Mesh schedule, e.g. `100,1000,10000`.
    #[arg(long, value_delimiter = ',')]
    pub mesh: Option<Vec<usize>>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub cf_replicas: Option<usize>,
    #[arg(long)]
    pub mc_replicas: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<u64>>,
    #[arg(long)]
    pub contrast_p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub walk: Option<WalkArg>,
    #[arg(long)]
    pub export_paths: Option<usize>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FamilyArg {
    None,
    Stable,
    Atomic,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum WalkArg {
    Skeleton,
    Elephant,
}

impl Args {
    /// Config file contents with the flags applied on top.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let run = &mut file.run;
        set(&mut run.experiment, self.experiment);
        set(&mut run.seed, self.seed);
        set(&mut run.replicas, self.replicas);
        set(&mut run.out, self.out.clone());
        set(&mut run.threads, self.threads);
        set(&mut run.tolerance_mult, self.tolerance_mult);

        let t = &mut file.triplet;
        if let Some(d) = self.dim {
            t.dim = d;
        }
        if let Some(f) = self.family {
            t.family = match f {
                FamilyArg::None => Family::None,
                FamilyArg::Stable => Family::Stable,
                FamilyArg::Atomic => Family::Atomic,
            };
        }
        set(&mut t.alpha, self.alpha);
        if let Some(s) = self.scale {
            t.scale = s;
        }
        if let Some(m) = &self.gaussian_factor {
            t.gaussian_factor = m.clone();
        }
        if let Some(a) = &self.drift {
            t.drift = a.clone();
        }
        if let Some(x) = &self.atom_locations {
            t.atom_locations = x.clone();
        }
        if let Some(m) = &self.atom_masses {
            t.atom_masses = m.clone();
        }

        let q = &mut file.params;
        set(&mut q.p, self.p);
        set(&mut q.rho, self.rho);
        set(&mut q.mesh, self.mesh.clone());
        set(&mut q.eps, self.eps);
        set(&mut q.theta, self.theta);
        set(&mut q.n, self.n);
        set(&mut q.grid, self.grid.clone());
        set(&mut q.cf_replicas, self.cf_replicas);
        set(&mut q.mc_replicas, self.mc_replicas);
        set(&mut q.ks, self.ks.clone());
        set(&mut q.contrast_p, self.contrast_p);
        set(&mut q.times, self.times.clone());
        set(
            &mut q.walk,
            self.walk.map(|w| match w {
                WalkArg::Skeleton => WalkKind::Skeleton,
                WalkArg::Elephant => WalkKind::Elephant,
            }),
        );
        set(&mut q.export_paths, self.export_paths);
        ExperimentConfig::from_file(file)
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// Runs a resolved configuration and writes `report.json`; returns the exit code.
pub fn execute(config: &ExperimentConfig) -> Result<i32, CliError> {
    let runner = PoolRunner::new(config.threads)?;
    info!("running {} with seed {} on {} threads", config.experiment, config.seed, runner.threads());
    let report = experiments::run(config, &runner, &config.out)?;
    write_report(&config.out.join("report.json"), &report)?;
    match &report.verdict {
        Some(v) => info!("verdict: {}", if v.pass { "pass" } else { "fail" }),
        None => info!("done"),
    }
    Ok(if report.passed() { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match args.resolve().and_then(|c| execute(&c)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nrlevy: {e}");
            EXIT_ERROR
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run_from(std::env::args_os())
}
