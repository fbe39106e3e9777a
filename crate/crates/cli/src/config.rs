//! Run configuration: a flat TOML file merged under command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qst_memory::chain::ChainSpec;
use qst_memory::kernel::{KernelBudget, MemoryKernel, Strategy};
use qst_memory::PST_TIME;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pst,
    Uniform,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    /// Symbolic up to 6 memory steps, determinants beyond.
    Auto,
    Symbolic,
    Determinant,
}

/// Every key can come from the config file or from a flag of the same name.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Chain length N.
    #[arg(long, global = true)]
    pub length: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub scheme: Option<Scheme>,
    /// Coupling of the uniform scheme.
    #[arg(long, global = true)]
    pub coupling: Option<f64>,
    /// Couplings J_1..J_{N-1} of the custom scheme.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub couplings: Option<Vec<f64>>,
    /// Number of uses n.
    #[arg(long, global = true)]
    pub uses: Option<usize>,
    /// Explicit readout intervals t_1..t_n; overrides `delta`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Relative timing error: every readout at (1 + delta) pi/2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Timing errors swept by `sweep-uses`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub t_min: Option<f64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub length_min: Option<usize>,
    #[arg(long, global = true)]
    pub length_max: Option<usize>,
    #[arg(long, global = true)]
    pub length_step: Option<usize>,
    /// Largest n in `sweep-length`.
    #[arg(long, global = true)]
    pub max_uses: Option<usize>,
    /// Largest n - 1 the memory kernel accepts.
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub kernel: Option<KernelChoice>,
    /// Instances per validation suite.
    #[arg(long, global = true)]
    pub instances: Option<usize>,
    /// Concurrence below this counts as zero.
    #[arg(long, global = true)]
    pub zero_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Params { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Params, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Flags win over the file.
    pub fn over(self, file: Params) -> Params {
        let flags = self;
        overlay!(flags, file; length, scheme, coupling, couplings, uses, times, delta, deltas,
            t_min, t_max, points, length_min, length_max, length_step, max_uses, max_steps,
            kernel, instances, zero_threshold, seed, jobs, format, out)
    }
}

/// Fully resolved settings, echoed into every output header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub length: usize,
    pub scheme: Scheme,
    pub coupling: f64,
    pub couplings: Option<Vec<f64>>,
    pub uses: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub length_min: usize,
    pub length_max: usize,
    pub length_step: usize,
    pub max_uses: usize,
    pub max_steps: usize,
    pub kernel: KernelChoice,
    pub instances: usize,
    pub zero_threshold: f64,
    pub seed: u64,
    #[serde(skip)]
    pub jobs: Option<usize>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

const DEFAULT_MAX_STEPS: usize = 12;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(bad(format!("{name} contains non-finite value {v}"))),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn resolve(p: Params) -> Result<RunConfig, CliError> {
        let scheme = p.scheme.unwrap_or(if p.couplings.is_some() { Scheme::Custom } else { Scheme::Pst });
        let length = match (&p.couplings, p.length) {
            (Some(c), Some(n)) if c.len() + 1 != n => {
                return Err(bad(format!("length {n} does not match {} couplings", c.len())))
            }
            (Some(c), _) => c.len() + 1,
            (None, n) => n.unwrap_or(6),
        };
        if scheme == Scheme::Custom && p.couplings.is_none() {
            return Err(bad("custom scheme needs couplings"));
        }
        if scheme != Scheme::Custom && p.couplings.is_some() {
            return Err(bad("couplings are only used by the custom scheme"));
        }
        let cfg = RunConfig {
            length,
            scheme,
            coupling: p.coupling.unwrap_or(1.0),
            couplings: p.couplings,
            uses: p.uses,
            times: p.times,
            delta: p.delta,
            deltas: p.deltas,
            t_min: p.t_min,
            t_max: p.t_max,
            points: p.points,
            length_min: p.length_min.unwrap_or(3),
            length_max: p.length_max.unwrap_or(7500),
            length_step: p.length_step.unwrap_or(1),
            max_uses: p.max_uses.unwrap_or(5),
            max_steps: p.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
            kernel: p.kernel.unwrap_or(KernelChoice::Auto),
            instances: p.instances.unwrap_or(200),
            zero_threshold: p.zero_threshold.unwrap_or(qst_memory::entanglement::ZERO_THRESHOLD),
            seed: p.seed.unwrap_or(0),
            jobs: p.jobs,
            format: p.format.unwrap_or(Format::Csv),
            out: p.out,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        check_finite("coupling", &[self.coupling])?;
        for (name, v) in [("couplings", &self.couplings), ("times", &self.times), ("deltas", &self.deltas)] {
            if let Some(v) = v {
                if v.is_empty() {
                    return Err(bad(format!("{name} must not be empty")));
                }
                check_finite(name, v)?;
            }
        }
        for (name, v) in [("delta", self.delta), ("t_min", self.t_min), ("t_max", self.t_max)] {
            if let Some(v) = v {
                check_finite(name, &[v])?;
            }
        }
        if let Some(t) = &self.times {
            if t.iter().any(|&x| x < 0.0) {
                return Err(bad("times must be non-negative"));
            }
        }
        if let (Some(a), Some(b)) = (self.t_min, self.t_max) {
            if a > b {
                return Err(bad(format!("t_min {a} > t_max {b}")));
            }
        }
        if self.points == Some(0) {
            return Err(bad("points must be positive"));
        }
        if self.uses == Some(0) || self.max_uses == 0 {
            return Err(bad("use counts start at 1"));
        }
        if self.length_step == 0 || self.length_min < 3 || self.length_min > self.length_max {
            return Err(bad(format!(
                "empty length range {}..={} step {}",
                self.length_min, self.length_max, self.length_step
            )));
        }
        if self.instances == 0 {
            return Err(bad("instances must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(bad("jobs must be positive"));
        }
        if !(self.zero_threshold >= 0.0 && self.zero_threshold.is_finite()) {
            return Err(bad("zero_threshold must be finite and non-negative"));
        }
        self.chain()?;
        Ok(())
    }

    pub fn chain(&self) -> Result<ChainSpec, CliError> {
        Ok(match self.scheme {
            Scheme::Pst => ChainSpec::pst(self.length)?,
            Scheme::Uniform => ChainSpec::uniform(self.length, self.coupling)?,
            Scheme::Custom => ChainSpec::custom(self.couplings.clone().unwrap_or_default())?,
        })
    }

    /// Readout intervals for `n` uses: explicit times if given, else the delta policy.
    pub fn schedule(&self, n: usize) -> Result<Vec<f64>, CliError> {
        match &self.times {
            Some(t) if t.len() == n => Ok(t.clone()),
            Some(t) => Err(bad(format!("{} times given for {n} uses", t.len()))),
            None => Ok(vec![delta_time(self.delta.unwrap_or(0.0)); n]),
        }
    }

    /// `steps` is the largest `n - 1` the command will ask for.
    pub fn kernel(&self, steps: usize) -> Result<MemoryKernel, CliError> {
        if steps > self.max_steps {
            return Err(CliError::Limit(qst_memory::Error::TermBudget(format!(
                "{steps} memory steps requested, max_steps is {}",
                self.max_steps
            ))));
        }
        let strategy = match self.kernel {
            KernelChoice::Symbolic => Strategy::Symbolic,
            KernelChoice::Determinant => Strategy::Determinant,
            KernelChoice::Auto if steps <= 6 => Strategy::Symbolic,
            KernelChoice::Auto => Strategy::Determinant,
        };
        let budget = KernelBudget {
            max_steps: self.max_steps,
            ..KernelBudget::default()
        };
        Ok(MemoryKernel::with_strategy(budget, strategy))
    }
}

pub fn delta_time(delta: f64) -> f64 {
    (1.0 + delta) * PST_TIME
}
