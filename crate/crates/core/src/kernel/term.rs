use crate::{Error, Result};

use super::path::ExcitationPath;

/// Which edge sites absorb an excitation at one readout.
///
/// Going up a level nothing is extracted; staying level extracts one excitation
/// at either edge; going down extracts two, one at each edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Extraction {
    None,
    Sender,
    Receiver,
    Both,
}

impl Extraction {
    pub fn includes_sender(self) -> bool {
        matches!(self, Extraction::Sender | Extraction::Both)
    }

    pub fn includes_receiver(self) -> bool {
        matches!(self, Extraction::Receiver | Extraction::Both)
    }

    fn choices(from: usize, to: usize) -> &'static [Extraction] {
        if to > from {
            &[Extraction::None]
        } else if to == from {
            &[Extraction::Sender, Extraction::Receiver]
        } else {
            &[Extraction::Both]
        }
    }
}

/// A maximal stretch of a path between two visits to level 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Excursion {
    first_interval: usize,
    levels: Vec<usize>,
}

impl Excursion {
    pub fn new(first_interval: usize, levels: Vec<usize>) -> Self {
        Self {
            first_interval,
            levels,
        }
    }

    /// Index (0-based) of the readout interval the excursion starts in.
    pub fn first_interval(&self) -> usize {
        self.first_interval
    }

    /// Local levels, starting and ending at 0 with no interior 0.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }

    /// A single 0 -> 0 step.
    pub fn is_trivial(&self) -> bool {
        self.steps() == 1
    }

    /// Every assignment of extraction sites, one entry per step. These are summed
    /// incoherently; channel configurations are summed inside the modulus.
    pub fn extraction_choices(&self) -> Vec<Vec<Extraction>> {
        let mut out: Vec<Vec<Extraction>> = vec![Vec::with_capacity(self.steps())];
        for w in self.levels.windows(2) {
            let opts = Extraction::choices(w[0], w[1]);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    opts.iter().map(move |&e| {
                        let mut v = prefix.clone();
                        v.push(e);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

/// The contribution of one path to the memory factor: a product over excursions of
/// `sum_E | sum_J prod_steps f_{1 J_prev}^{J_next E}(t) |^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTerm {
    path: ExcitationPath,
    times: Vec<f64>,
    excursions: Vec<Excursion>,
}

impl PathTerm {
    pub fn path(&self) -> &ExcitationPath {
        &self.path
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn excursions(&self) -> &[Excursion] {
        &self.excursions
    }
}

/// Splits a path into excursions and attaches the readout intervals.
pub fn path_to_term(path: &ExcitationPath, times: &[f64]) -> Result<PathTerm> {
    if times.len() != path.steps() {
        return Err(Error::LengthMismatch {
            what: "readout times",
            expected: path.steps(),
            found: times.len(),
        });
    }
    Ok(PathTerm {
        path: path.clone(),
        times: times.to_vec(),
        excursions: split_excursions(path.levels()),
    })
}

pub(crate) fn split_excursions(levels: &[usize]) -> Vec<Excursion> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..levels.len() {
        if levels[i] == 0 {
            out.push(Excursion::new(start, levels[start..=i].to_vec()));
            start = i;
        }
    }
    out
}
