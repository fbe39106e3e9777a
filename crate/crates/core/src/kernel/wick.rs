//! Excursions evaluated as determinants instead of expanded monomials.
//!
//! Within an excursion every readout creates one fermion at site 1 and removes
//! the extracted ones at the edges, and everything still inside must sit in the
//! channel. By Wick's theorem the coherent channel sum for one extraction choice
//! is `det M` with `M[(b, X), a] = <X| U_b P_C U_{b-1} ... P_C U_a |1>`, where
//! `P_C` projects onto the channel. The edge blocks of these projected
//! propagators follow from boundary amplitudes alone:
//!
//! ```text
//! G(a, b) = F(a..b) - sum_{m=a}^{b-1} G(m+1, b) F(a..m)
//! ```
//!
//! which is completeness elimination done numerically. Cost is polynomial in
//! the number of steps and independent of N.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::chain::BoundaryProvider;
use crate::Result;

use super::path::enumerate_paths;
use super::reduce::{EdgeAmplitude, SpanTable, TimeSpan};
use super::term::{split_excursions, Excursion, Extraction};
use super::MemoryFactor;

/// Edge blocks `G(a, b)` of `U_b P_C ... P_C U_a`, rows/columns ordered (1, N).
#[derive(Debug, Clone)]
pub struct ProjectedPropagators {
    steps: usize,
    blocks: Vec<Matrix2<Complex64>>,
}

impl ProjectedPropagators {
    pub fn new(table: &SpanTable) -> Self {
        let steps = table.steps();
        let edge = |a: usize, b: usize| {
            let span = TimeSpan {
                first: a as u16,
                last: b as u16,
            };
            // entry (y, x) is f_x^y
            Matrix2::new(
                table.get(EdgeAmplitude::F11, span),
                table.get(EdgeAmplitude::FN1, span),
                table.get(EdgeAmplitude::F1N, span),
                table.get(EdgeAmplitude::FNN, span),
            )
        };
        let mut blocks = vec![Matrix2::zeros(); steps * steps];
        for b in 0..steps {
            for a in (0..=b).rev() {
                let mut g = edge(a, b);
                for m in a..b {
                    g -= blocks[(m + 1) * steps + b] * edge(a, m);
                }
                blocks[a * steps + b] = g;
            }
        }
        Self { steps, blocks }
    }

    /// `G(a, b)` for `a <= b`.
    pub fn edge_block(&self, a: usize, b: usize) -> Matrix2<Complex64> {
        self.blocks[a * self.steps + b]
    }
}

/// `sum_E |det M_E|^2` for an excursion starting at interval `offset`.
pub fn excursion_determinant_value(exc: &Excursion, offset: usize, props: &ProjectedPropagators) -> f64 {
    let s = exc.steps();
    exc.extraction_choices()
        .iter()
        .map(|choice| {
            let mut m = DMatrix::from_element(s, s, Complex64::new(0.0, 0.0));
            let mut row = 0;
            for (b, e) in choice.iter().enumerate() {
                let sites: &[usize] = match e {
                    Extraction::None => &[],
                    Extraction::Sender => &[0],
                    Extraction::Receiver => &[1],
                    Extraction::Both => &[0, 1],
                };
                for &x in sites {
                    for a in 0..=b {
                        m[(row, a)] = props.edge_block(offset + a, offset + b)[(x, 0)];
                    }
                    row += 1;
                }
            }
            debug_assert_eq!(row, s);
            m.determinant().norm_sqr()
        })
        .sum()
}

/// `A_{n-1}` from the same Motzkin paths, each excursion as a determinant.
pub fn memory_factor_determinant(times: &[f64], provider: &dyn BoundaryProvider) -> Result<MemoryFactor> {
    let table = SpanTable::new(times, provider);
    let props = ProjectedPropagators::new(&table);
    let mut cache: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
    let mut total = 0.0;
    for path in enumerate_paths(times.len()) {
        let mut term = 1.0;
        for exc in split_excursions(path.levels()) {
            let key = (exc.first_interval(), exc.levels().to_vec());
            let v = *cache
                .entry(key)
                .or_insert_with(|| excursion_determinant_value(&exc, exc.first_interval(), &props));
            term *= v;
        }
        total += term;
    }
    Ok(MemoryFactor(total))
}
