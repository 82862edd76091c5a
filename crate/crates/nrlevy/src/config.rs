//! Experiment configuration: a flat key-value file with `[run]`,
//! `[triplet]` and `[params]` sections, overridable from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nrlevy_core::levy::{admissibility, Admissibility, Atom, JumpMeasure, LevyTriplet};
use nrlevy_core::yule_simon::MemoryParameter;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SimulateYs,
    SimulateWalk,
    SimulateNrlp,
    CfCompare,
    Theorem1,
    Supercritical,
    Prop8,
    Moments,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::SimulateYs,
        Experiment::SimulateWalk,
        Experiment::SimulateNrlp,
        Experiment::CfCompare,
        Experiment::Theorem1,
        Experiment::Supercritical,
        Experiment::Prop8,
        Experiment::Moments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SimulateYs => "simulate-ys",
            Experiment::SimulateWalk => "simulate-walk",
            Experiment::SimulateNrlp => "simulate-nrlp",
            Experiment::CfCompare => "cf-compare",
            Experiment::Theorem1 => "theorem1",
            Experiment::Supercritical => "supercritical",
            Experiment::Prop8 => "prop8",
            Experiment::Moments => "moments",
        }
    }

    /// Whether the experiment runs a noise-reinforced process built from the
    /// `[triplet]` section and therefore needs `p·β < 1`.
    fn needs_admissible_triplet(self) -> bool {
        matches!(self, Experiment::SimulateNrlp | Experiment::CfCompare | Experiment::Theorem1)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    None,
    Stable,
    Atomic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    /// Simon's dynamics on skeleton increments of the configured triplet.
    Skeleton,
    /// The ±1 elephant random walk.
    Elephant,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tolerance_mult: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TripletSpec {
    pub dim: usize,
    /// Row-major `dim × dim` factor; empty means no Gaussian part.
    pub gaussian_factor: Vec<f64>,
    /// Empty means zero drift.
    pub drift: Vec<f64>,
    pub family: Family,
    pub alpha: Option<f64>,
    pub scale: f64,
    /// Flattened atom locations, `dim` numbers per atom.
    pub atom_locations: Vec<f64>,
    pub atom_masses: Vec<f64>,
}

impl Default for TripletSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            gaussian_factor: Vec::new(),
            drift: Vec::new(),
            family: Family::None,
            alpha: None,
            scale: 1.0,
            atom_locations: Vec::new(),
            atom_masses: Vec::new(),
        }
    }
}

impl TripletSpec {
    pub fn build(&self) -> Result<LevyTriplet, CliError> {
        let d = self.dim;
        if d == 0 {
            return Err(CliError::Config("triplet.dim must be positive".into()));
        }
        let factor = if self.gaussian_factor.is_empty() { vec![0.0; d * d] } else { self.gaussian_factor.clone() };
        let drift = if self.drift.is_empty() { vec![0.0; d] } else { self.drift.clone() };
        let jumps = match self.family {
            Family::None => JumpMeasure::Zero,
            Family::Stable => {
                let alpha = self.alpha.ok_or_else(|| CliError::Config("triplet.alpha is required for family = \"stable\"".into()))?;
                JumpMeasure::isotropic_stable(alpha, self.scale)?
            }
            Family::Atomic => {
                if self.atom_locations.len() != d * self.atom_masses.len() {
                    return Err(CliError::Config(format!(
                        "triplet.atom_locations needs {d} numbers per entry of triplet.atom_masses"
                    )));
                }
                let atoms = self
                    .atom_locations
                    .chunks(d)
                    .zip(&self.atom_masses)
                    .map(|(x, &mass)| Atom { location: x.to_vec(), mass })
                    .collect();
                JumpMeasure::finite_atomic(atoms)?
            }
        };
        Ok(LevyTriplet::new(d, factor, drift, jumps)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// Monte Carlo replicas for reference characteristic functions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cf_replicas: Option<usize>,
    /// Yule-Simon paths for the limit in `prop8`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_replicas: Option<usize>,
    /// Terminal values `k` of the `prop8` functionals `1{ω(1) = k}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<u64>>,
    /// Admissible memory parameter for the `supercritical` contrast run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast_p: Option<f64>,
    /// `(s, t)` for the `moments` experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkKind>,
    /// Number of sample paths written to CSV by the simulation experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export_paths: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub triplet: TripletSpec,
    #[serde(default)]
    pub params: Params,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPLICAS: usize = 10_000;

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub replicas: usize,
    pub out: PathBuf,
    /// Worker threads; never part of any output.
    pub threads: usize,
    pub tolerance_mult: f64,
    pub triplet: TripletSpec,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self, CliError> {
        let run = file.run;
        let experiment = run
            .experiment
            .ok_or_else(|| CliError::Usage("no experiment given (set run.experiment or --experiment)".into()))?;
        let config = Self {
            experiment,
            seed: run.seed.unwrap_or(DEFAULT_SEED),
            replicas: run.replicas.unwrap_or(DEFAULT_REPLICAS),
            out: run.out.unwrap_or_else(|| PathBuf::from("out")),
            threads: run.threads.unwrap_or(1),
            tolerance_mult: run.tolerance_mult.unwrap_or(nrlevy_core::diagnostics::DEFAULT_TOLERANCE_MULT),
            triplet: file.triplet,
            params: file.params,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn p(&self) -> Result<MemoryParameter, CliError> {
        let p = self.params.p.ok_or_else(|| CliError::Config(format!("{} needs params.p", self.experiment)))?;
        Ok(MemoryParameter::new(p)?)
    }

    /// `params.rho`, or `1/p` when only `p` is given.
    pub fn rho(&self) -> Result<f64, CliError> {
        match (self.params.rho, self.params.p) {
            (Some(rho), _) => Ok(rho),
            (None, Some(_)) => Ok(self.p()?.rho()),
            (None, None) => Err(CliError::Config(format!("{} needs params.rho or params.p", self.experiment))),
        }
    }

    pub fn mesh(&self) -> Result<Vec<usize>, CliError> {
        let mesh = self
            .params
            .mesh
            .clone()
            .ok_or_else(|| CliError::Config(format!("{} needs params.mesh", self.experiment)))?;
        if mesh.is_empty() || mesh[0] == 0 || mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("params.mesh must be positive and strictly increasing".into()));
        }
        Ok(mesh)
    }

    pub fn alpha(&self) -> Result<f64, CliError> {
        self.triplet
            .alpha
            .ok_or_else(|| CliError::Config(format!("{} needs triplet.alpha", self.experiment)))
    }

    /// Checks every precondition that can be checked without running.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.replicas < 2 {
            return Err(CliError::Config("run.replicas must be at least 2".into()));
        }
        if self.threads == 0 {
            return Err(CliError::Config("run.threads must be positive".into()));
        }
        if !(self.tolerance_mult > 0.0 && self.tolerance_mult.is_finite()) {
            return Err(CliError::Config("run.tolerance_mult must be positive".into()));
        }
        if let Some(eps) = self.params.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(CliError::Config("params.eps must be positive".into()));
            }
        }
        if let Some(grid) = &self.params.grid {
            if grid.is_empty() || grid.iter().any(|t| !(0.0..=1.0).contains(t)) || grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config("params.grid must be increasing within [0, 1]".into()));
            }
        }
        match self.experiment {
            Experiment::SimulateYs => {
                self.rho()?;
            }
            Experiment::Moments => {
                self.rho()?;
                if let Some(times) = &self.params.times {
                    if times.len() != 2 || times.iter().any(|t| !(0.0..=1.0).contains(t)) {
                        return Err(CliError::Config("params.times must be two times in [0, 1]".into()));
                    }
                }
            }
            Experiment::SimulateWalk => {
                self.p()?;
                self.params.n.filter(|&n| n > 0).ok_or_else(|| CliError::Config("simulate-walk needs params.n > 0".into()))?;
                if self.params.walk != Some(WalkKind::Elephant) {
                    self.triplet.build()?;
                }
            }
            Experiment::SimulateNrlp | Experiment::CfCompare | Experiment::Theorem1 => {}
            Experiment::Supercritical => {
                let p = self.p()?;
                let alpha = self.alpha()?;
                if !(alpha * p.p() > 1.0) {
                    return Err(CliError::Usage(format!(
                        "supercritical needs alpha·p > 1, got alpha = {alpha}, p = {}",
                        p.p()
                    )));
                }
                if self.params.theta == Some(0.0) {
                    return Err(CliError::Usage("supercritical needs theta ≠ 0".into()));
                }
                self.mesh()?;
                if let Some(q) = self.params.contrast_p {
                    let q = MemoryParameter::new(q)?;
                    if !(alpha * q.p() < 1.0) {
                        return Err(CliError::Usage(format!(
                            "params.contrast_p = {} is not admissible: the bound p·β < 1 fails for β = {alpha}",
                            q.p()
                        )));
                    }
                }
            }
            Experiment::Prop8 => {
                self.p()?;
                self.mesh()?;
            }
        }
        if self.experiment.needs_admissible_triplet() {
            let p = self.p()?;
            let triplet = self.triplet.build()?;
            if admissibility(p, &triplet) != Admissibility::Admissible {
                let beta = nrlevy_core::levy::bg_index(&triplet);
                return Err(CliError::Inadmissible(nrlevy_core::Error::Inadmissible { p: p.p(), beta }.to_string()));
            }
            if self.experiment == Experiment::Theorem1 {
                self.mesh()?;
            }
        }
        Ok(())
    }
}
