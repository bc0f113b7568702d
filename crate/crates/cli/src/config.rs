use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nvsim_core::analysis::StudySettings;
use nvsim_core::flows::FlowSettings;
use nvsim_core::randomness::RNG_ALGORITHM;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_LADDER: [usize; 7] = [8, 16, 32, 64, 128, 256, 512];
pub const DEFAULT_LIMIT_NFINE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Problems,
    FlowCheck,
    Convergence,
    LimitLaw,
    SourceTerm,
    Mlmc,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Problems => "problems",
            CommandKind::FlowCheck => "flow-check",
            CommandKind::Convergence => "convergence",
            CommandKind::LimitLaw => "limit-law",
            CommandKind::SourceTerm => "source-term",
            CommandKind::Mlmc => "mlmc",
        }
    }
}

/// One layer of optional settings. A `--config` file deserializes into this
/// and the command-line flags are collected into another; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Layer {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub paths: Option<usize>,
    pub nfine: Option<usize>,
    pub problem: Option<String>,
    pub scheme: Option<String>,
    pub nladder: Option<Vec<usize>>,
    pub p: Option<u32>,
    #[serde(rename = "N")]
    pub n_steps: Option<usize>,
    pub j: Option<usize>,
    pub m: Option<usize>,
    pub t: Option<f64>,
    pub horizon: Option<f64>,
    pub payoff: Option<String>,
    pub levels: Option<usize>,
    pub paths_per_level: Option<usize>,
    pub n0: Option<usize>,
    pub trials: Option<usize>,
    pub refine_factor: Option<usize>,
    pub batches: Option<usize>,
    pub flows: Option<FlowSettings>,
}

impl Layer {
    pub fn from_file(path: &Path) -> Result<Layer, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub seed: u64,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
    pub out: PathBuf,
    pub format: Format,
    pub paths: usize,
    pub nfine: usize,
    pub problem: String,
    pub scheme: String,
    pub nladder: Vec<usize>,
    pub p: u32,
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub j: usize,
    pub m: usize,
    pub t: f64,
    pub horizon: f64,
    pub payoff: String,
    pub levels: usize,
    pub paths_per_level: usize,
    pub n0: usize,
    pub trials: usize,
    pub study: StudySettings,
}

impl RunConfig {
    pub fn resolve(command: CommandKind, flags: Layer, file: Layer) -> RunConfig {
        macro_rules! pick {
            ($field:ident, $default:expr) => {
                flags
                    .$field
                    .clone()
                    .or(file.$field.clone())
                    .unwrap_or_else(|| $default)
            };
        }
        let defaults = StudySettings::default();
        let paths = pick!(paths, DEFAULT_PATHS);
        let horizon = pick!(horizon, 1.0);
        let default_n = match command {
            CommandKind::SourceTerm => 4,
            _ => 256,
        };
        RunConfig {
            command,
            seed: pick!(seed, DEFAULT_SEED),
            threads: pick!(threads, 0),
            out: pick!(out, PathBuf::from("results")),
            format: pick!(format, Format::Both),
            paths,
            nfine: pick!(nfine, DEFAULT_LIMIT_NFINE),
            problem: pick!(problem, "heisenberg".to_string()),
            scheme: pick!(scheme, "nv".to_string()),
            nladder: pick!(nladder, DEFAULT_LADDER.to_vec()),
            p: pick!(p, 1),
            n_steps: pick!(n_steps, default_n),
            j: pick!(j, 2),
            m: pick!(m, 1),
            t: pick!(t, horizon),
            horizon,
            payoff: pick!(payoff, "coord1".to_string()),
            levels: pick!(levels, 6),
            paths_per_level: pick!(paths_per_level, paths),
            n0: pick!(n0, 1),
            trials: pick!(trials, 1000),
            study: StudySettings {
                refine_factor: pick!(refine_factor, defaults.refine_factor),
                batches: pick!(batches, defaults.batches),
                flows: pick!(flows, defaults.flows),
            },
        }
    }

    /// The settings that can change a command's numbers. Threads, output
    /// location and format are deliberately absent.
    pub fn hashed_view(&self) -> serde_json::Value {
        let s = &self.study;
        let mut v = match self.command {
            CommandKind::Problems => json!({}),
            CommandKind::FlowCheck => json!({
                "problem": self.problem, "seed": self.seed, "trials": self.trials,
                "flows": s.flows,
            }),
            CommandKind::Convergence => json!({
                "problem": self.problem, "scheme": self.scheme, "seed": self.seed,
                "paths": self.paths, "nladder": self.nladder, "p": self.p,
                "refine_factor": s.refine_factor, "batches": s.batches, "flows": s.flows,
            }),
            CommandKind::LimitLaw => json!({
                "problem": self.problem, "seed": self.seed, "paths": self.paths,
                "N": self.n_steps, "nfine": self.nfine,
                "refine_factor": s.refine_factor, "batches": s.batches, "flows": s.flows,
            }),
            CommandKind::SourceTerm => json!({
                "seed": self.seed, "paths": self.paths, "N": self.n_steps,
                "j": self.j, "m": self.m, "t": self.t, "horizon": self.horizon,
            }),
            CommandKind::Mlmc => json!({
                "problem": self.problem, "payoff": self.payoff, "seed": self.seed,
                "levels": self.levels, "paths_per_level": self.paths_per_level,
                "n0": self.n0, "flows": s.flows,
            }),
        };
        v["command"] = json!(self.command.name());
        v["rng"] = json!(RNG_ALGORITHM);
        v
    }

    /// First 16 hex digits of the SHA-256 of the canonical hashed view.
    pub fn hash(&self) -> String {
        // serde_json maps are sorted by key, so the text is canonical
        let text = serde_json::to_string(&self.hashed_view()).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        format!("{digest:x}")[..16].to_string()
    }
}
