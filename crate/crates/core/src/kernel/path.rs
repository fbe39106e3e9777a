use crate::{Error, Result};

/// Number of excitations held by the channel after each readout.
///
/// `levels[0]` is the empty channel before the first use and `levels[s]` the
/// channel after use `s`. Every step follows the generation rule: from 0 the
/// next level is 0 or 1, from `m > 0` it is `m - 1`, `m` or `m + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExcitationPath {
    levels: Vec<usize>,
}

impl ExcitationPath {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.first() != Some(&0) || levels.last() != Some(&0) {
            return Err(Error::InvalidParameter(format!(
                "path must start and end at level 0: {levels:?}"
            )));
        }
        for w in levels.windows(2) {
            if !successors(w[0]).contains(&w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "step {} -> {} violates the generation rule",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Parses a digit string such as `"0110"`.
    pub fn parse(s: &str) -> Result<Self> {
        let levels = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::InvalidParameter(format!("bad path digit {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }
}

impl std::fmt::Display for ExcitationPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for l in &self.levels {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Children of a node in the generation tree.
pub fn successors(level: usize) -> Vec<usize> {
    if level == 0 {
        vec![0, 1]
    } else {
        vec![level - 1, level, level + 1]
    }
}

/// All Motzkin paths with `steps` steps, lexicographic in their level sequence.
pub fn enumerate_paths(steps: usize) -> Vec<ExcitationPath> {
    let mut out = Vec::new();
    let mut levels = vec![0];
    extend(&mut levels, steps, &mut out);
    out
}

fn extend(levels: &mut Vec<usize>, steps: usize, out: &mut Vec<ExcitationPath>) {
    let done = levels.len() - 1;
    let current = *levels.last().unwrap();
    if done == steps {
        if current == 0 {
            out.push(ExcitationPath {
                levels: levels.clone(),
            });
        }
        return;
    }
    for next in successors(current) {
        // prune branches that can no longer come back down to 0
        if next > steps - done - 1 {
            continue;
        }
        levels.push(next);
        extend(levels, steps, out);
        levels.pop();
    }
}
