//! Path terms evaluated with explicit sums over channel configurations.
//!
//! No completeness elimination: every multi-particle amplitude is a numerically
//! evaluated Slater determinant and every channel set is enumerated. Cost grows
//! as `N^level`, so this only serves as a cross-check of the reduction.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chain::{ChainSpec, SpectralPropagator};
use crate::{Error, Result};

use super::path::enumerate_paths;
use super::term::{path_to_term, Excursion};
use super::MemoryFactor;

pub const DIRECT_MAX_SITES: usize = 64;
pub const DIRECT_MAX_STEPS: usize = 4;

/// `A_{n-1}` by brute-force channel sums; `times` are `t_1..t_{n-1}`.
pub fn memory_factor_direct(times: &[f64], spec: &ChainSpec) -> Result<MemoryFactor> {
    spec.validate()?;
    if spec.length > DIRECT_MAX_SITES {
        return Err(Error::Guard(format!(
            "direct evaluation limited to N <= {DIRECT_MAX_SITES}, got {}",
            spec.length
        )));
    }
    if times.len() > DIRECT_MAX_STEPS {
        return Err(Error::Guard(format!(
            "direct evaluation limited to {DIRECT_MAX_STEPS} steps, got {}",
            times.len()
        )));
    }
    let prop = SpectralPropagator::for_chain(spec)?;
    let unitaries: Vec<DMatrix<Complex64>> = times.iter().map(|&t| prop.unitary(t)).collect();
    let n = spec.length;
    let channel: Vec<usize> = (1..n - 1).collect();

    let mut total = 0.0;
    for path in enumerate_paths(times.len()) {
        let term = path_to_term(&path, times)?;
        let value: f64 = term
            .excursions()
            .iter()
            .map(|exc| excursion_value(exc, &unitaries, &channel, n))
            .product();
        total += value;
    }
    Ok(MemoryFactor(total))
}

fn excursion_value(
    exc: &Excursion,
    unitaries: &[DMatrix<Complex64>],
    channel: &[usize],
    n: usize,
) -> f64 {
    let levels = exc.levels();
    let sets: Vec<Vec<Vec<usize>>> = (0..=levels.iter().copied().max().unwrap_or(0))
        .map(|k| combinations(channel, k))
        .collect();
    let mut total = 0.0;
    for assignment in exc.extraction_choices() {
        let mut amps: HashMap<Vec<usize>, Complex64> = HashMap::new();
        amps.insert(Vec::new(), Complex64::new(1.0, 0.0));
        for (step, extraction) in assignment.iter().enumerate() {
            let u = &unitaries[exc.first_interval() + step];
            let mut next: HashMap<Vec<usize>, Complex64> = HashMap::new();
            for (held, &a) in &amps {
                let mut sources = vec![0];
                sources.extend_from_slice(held);
                for kept in &sets[levels[step + 1]] {
                    let mut targets = Vec::with_capacity(kept.len() + 2);
                    if extraction.includes_sender() {
                        targets.push(0);
                    }
                    targets.extend_from_slice(kept);
                    if extraction.includes_receiver() {
                        targets.push(n - 1);
                    }
                    let d = slater(u, &sources, &targets);
                    *next.entry(kept.clone()).or_insert(Complex64::new(0.0, 0.0)) += a * d;
                }
            }
            amps = next;
        }
        total += amps.get(&Vec::new()).map_or(0.0, |z| z.norm_sqr());
    }
    total
}

/// `det[f_{s_a}^{t_b}]` for 0-based sorted site lists.
fn slater(u: &DMatrix<Complex64>, sources: &[usize], targets: &[usize]) -> Complex64 {
    let k = sources.len();
    DMatrix::from_fn(k, k, |a, b| u[(targets[b], sources[a])]).determinant()
}

pub(crate) fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(pool: &[usize], k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - current.len() {
                break;
            }
            current.push(pool[i]);
            rec(pool, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(pool, k, 0, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        let pool: Vec<usize> = (0..6).collect();
        assert_eq!(combinations(&pool, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(&pool, 2).len(), 15);
        assert_eq!(combinations(&pool, 6).len(), 1);
    }

    #[test]
    fn guards() {
        let spec = ChainSpec::pst(65).unwrap();
        assert!(matches!(memory_factor_direct(&[0.1], &spec), Err(Error::Guard(_))));
        let spec = ChainSpec::pst(6).unwrap();
        assert!(matches!(
            memory_factor_direct(&[0.1; 5], &spec),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn one_step_is_a1() {
        let spec = ChainSpec::pst(6).unwrap();
        let prop = SpectralPropagator::for_chain(&spec).unwrap();
        let t = 0.77;
        let a = memory_factor_direct(&[t], &spec).unwrap().value();
        let expected = prop.amplitude(1, 1, t).unwrap().norm_sqr() + prop.amplitude(1, 6, t).unwrap().norm_sqr();
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_times_give_unity() {
        let spec = ChainSpec::pst(5).unwrap();
        for steps in 0..=4 {
            let a = memory_factor_direct(&vec![0.0; steps], &spec).unwrap().value();
            assert!((a - 1.0).abs() < 1e-12, "steps {steps}: {a}");
        }
    }
}
