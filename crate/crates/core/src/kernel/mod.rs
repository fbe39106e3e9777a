//! Memory factor `A_{n-1}` and the n-th-use average fidelity
//!
//! ```text
//! F_n = 1/2 + |f_1^N(t_n)| A_{n-1}(t_{n-1}..t_1) / 3 + |f_1^N(t_n)|^2 / 6
//! ```
//!
//! `A_{n-1}` is a sum over Motzkin paths of `n-1` steps. A path factors into
//! excursions away from level 0; a single 0 -> 0 step contributes
//! `|f_1^1|^2 + |f_1^N|^2`, a longer excursion contributes the squared modulus of
//! a coherent sum over channel configurations, summed over extraction sites.
//! [`MemoryKernel`] reduces every excursion shape once to edge-site amplitudes and
//! then evaluates any chain and any readout times by substitution.

mod direct;
pub mod path;
pub mod reduce;
pub mod term;
pub mod wick;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::chain::BoundaryProvider;
use crate::{Error, Result};

pub use direct::{memory_factor_direct, DIRECT_MAX_SITES, DIRECT_MAX_STEPS};
pub use path::{enumerate_paths, ExcitationPath};
pub use reduce::{
    eliminate_channel_sums, expand_determinant, expand_slater, BoundaryMonomial,
    ContractionMonomial, EdgeAmplitude, ReducedExcursion, SpanTable, TimeSpan,
};
pub use term::{path_to_term, Excursion, Extraction, PathTerm};
pub use wick::{memory_factor_determinant, ProjectedPropagators};

/// Memory factor, in `[0, 1]` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MemoryFactor(pub f64);

impl MemoryFactor {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Limits on symbolic reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelBudget {
    /// Largest `n - 1` accepted.
    pub max_steps: usize,
    /// Largest number of boundary monomials kept across all excursion shapes.
    pub max_monomials: usize,
}

impl Default for KernelBudget {
    fn default() -> Self {
        Self {
            max_steps: 8,
            max_monomials: 1_000_000,
        }
    }
}

/// How excursion terms are turned into numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Expand to boundary monomials once, substitute amplitudes per call.
    /// Monomial counts grow by roughly 17x per step.
    #[default]
    Symbolic,
    /// Per call, one small determinant per extraction choice. No expansion,
    /// so usable well past the point where monomial counts explode.
    Determinant,
}

/// A fully reduced `A_{n-1}`: for each path, its excursions with their offsets.
#[derive(Debug, Clone)]
pub struct ReducedMemoryFactor {
    steps: usize,
    paths: Vec<Vec<(usize, Arc<ReducedExcursion>)>>,
}

impl ReducedMemoryFactor {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Distinct boundary monomials across the excursion shapes used.
    pub fn monomial_count(&self) -> usize {
        let mut seen: HashMap<*const ReducedExcursion, usize> = HashMap::new();
        for path in &self.paths {
            for (_, exc) in path {
                seen.insert(Arc::as_ptr(exc), exc.monomial_count());
            }
        }
        seen.values().sum()
    }

    /// Substitutes readout intervals `t_1..t_{n-1}` and boundary amplitudes.
    pub fn evaluate(&self, times: &[f64], provider: &dyn BoundaryProvider) -> Result<MemoryFactor> {
        if times.len() != self.steps {
            return Err(Error::LengthMismatch {
                what: "readout times",
                expected: self.steps,
                found: times.len(),
            });
        }
        let table = SpanTable::new(times, provider);
        let total = self
            .paths
            .iter()
            .map(|path| {
                path.iter()
                    .map(|(offset, exc)| exc.evaluate(&table, *offset))
                    .product::<f64>()
            })
            .sum();
        Ok(MemoryFactor(total))
    }
}

/// Caches reductions per excursion shape and per step count. Safe to share across threads.
#[derive(Debug, Default)]
pub struct MemoryKernel {
    budget: KernelBudget,
    strategy: Strategy,
    shapes: Mutex<HashMap<Vec<usize>, Arc<ReducedExcursion>>>,
    reduced: Mutex<HashMap<usize, Arc<ReducedMemoryFactor>>>,
}

impl MemoryKernel {
    pub fn new(budget: KernelBudget) -> Self {
        Self::with_strategy(budget, Strategy::Symbolic)
    }

    pub fn with_strategy(budget: KernelBudget, strategy: Strategy) -> Self {
        Self {
            budget,
            strategy,
            shapes: Mutex::default(),
            reduced: Mutex::default(),
        }
    }

    pub fn budget(&self) -> KernelBudget {
        self.budget
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    fn check_steps(&self, steps: usize) -> Result<()> {
        if steps > self.budget.max_steps {
            return Err(Error::TermBudget(format!(
                "{steps} previous uses requested, budget allows {}",
                self.budget.max_steps
            )));
        }
        Ok(())
    }

    /// Reduced form of `A_steps`.
    pub fn reduce(&self, steps: usize) -> Result<Arc<ReducedMemoryFactor>> {
        self.check_steps(steps)?;
        if let Some(r) = self.reduced.lock().unwrap().get(&steps) {
            return Ok(r.clone());
        }

        let paths = enumerate_paths(steps);
        let mut wanted: Vec<Vec<usize>> = paths
            .iter()
            .flat_map(|p| term::split_excursions(p.levels()))
            .map(|e| e.levels().to_vec())
            .collect();
        wanted.sort();
        wanted.dedup();

        let missing: Vec<Vec<usize>> = {
            let shapes = self.shapes.lock().unwrap();
            wanted.iter().filter(|l| !shapes.contains_key(*l)).cloned().collect()
        };
        let max = self.budget.max_monomials;
        let fresh = missing
            .par_iter()
            .map(|levels| reduce::reduce_excursion(levels, max).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;

        let mut shapes = self.shapes.lock().unwrap();
        for exc in fresh {
            shapes.insert(exc.levels().to_vec(), exc);
        }
        let total: usize = wanted.iter().map(|l| shapes[l].monomial_count()).sum();
        if total > max {
            return Err(Error::TermBudget(format!(
                "{steps} steps need {total} boundary monomials, budget allows {max}"
            )));
        }
        let reduced_paths = paths
            .iter()
            .map(|p| {
                term::split_excursions(p.levels())
                    .into_iter()
                    .map(|e| (e.first_interval(), shapes[e.levels()].clone()))
                    .collect()
            })
            .collect();
        drop(shapes);

        let reduced = Arc::new(ReducedMemoryFactor {
            steps,
            paths: reduced_paths,
        });
        self.reduced.lock().unwrap().insert(steps, reduced.clone());
        Ok(reduced)
    }

    pub fn memory_factor(&self, times: &[f64], provider: &dyn BoundaryProvider) -> Result<MemoryFactor> {
        match self.strategy {
            Strategy::Symbolic => self.reduce(times.len())?.evaluate(times, provider),
            Strategy::Determinant => {
                self.check_steps(times.len())?;
                memory_factor_determinant(times, provider)
            }
        }
    }

    /// Average fidelity of use `n = times.len()`.
    pub fn nth_use_fidelity(&self, times: &[f64], provider: &dyn BoundaryProvider) -> Result<f64> {
        let (&t_n, previous) = times
            .split_last()
            .ok_or_else(|| Error::InvalidParameter("at least one readout time is needed".into()))?;
        let memory = self.memory_factor(previous, provider)?;
        let transfer = provider.boundary(t_n).f1n.norm();
        Ok(fidelity_from_parts(transfer, memory.value()))
    }
}

fn default_kernel() -> &'static MemoryKernel {
    static KERNEL: OnceLock<MemoryKernel> = OnceLock::new();
    KERNEL.get_or_init(MemoryKernel::default)
}

/// `A_{n-1}` for readout intervals `t_1..t_{n-1}` with the default budget.
pub fn memory_factor(times: &[f64], provider: &dyn BoundaryProvider) -> Result<MemoryFactor> {
    default_kernel().memory_factor(times, provider)
}

/// `F_n` for readout intervals `t_1..t_n` with the default budget.
pub fn nth_use_fidelity(times: &[f64], provider: &dyn BoundaryProvider) -> Result<f64> {
    default_kernel().nth_use_fidelity(times, provider)
}

/// `1/2 + |f| A / 3 + |f|^2 / 6`.
pub fn fidelity_from_parts(transfer_modulus: f64, memory: f64) -> f64 {
    0.5 + transfer_modulus * memory / 3.0 + transfer_modulus * transfer_modulus / 6.0
}
