//! Symbolic reduction of path terms to edge-site amplitudes.
//!
//! Multi-particle amplitudes of a free-fermion chain are Slater determinants of
//! single-particle ones. After expansion every channel index appears exactly
//! twice: as the output of one readout interval and the input of the next. Each
//! such pair is summed away with
//!
//! ```text
//! sum_{j in C} f_x^j(Ta) f_j^y(Tb) = f_x^y(Ta+Tb) - f_x^1(Ta) f_1^y(Tb) - f_x^N(Ta) f_N^y(Tb)
//! ```
//!
//! until only `f_1^1, f_1^N, f_N^1, f_N^N` at sums of consecutive intervals remain.
//! The result depends on neither the chain length nor the readout times.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::{Error, Result};

use super::term::{Extraction, PathTerm};

/// Site label inside a symbolic amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    /// Site 1.
    Sender,
    /// Site N.
    Receiver,
    /// A summed channel index. `junction` is the readout interval whose output it
    /// labels; `slot` distinguishes the excitations held across that junction.
    Channel { junction: u16, slot: u16 },
}

impl Site {
    fn channel_junction(self) -> Option<u16> {
        match self {
            Site::Channel { junction, .. } => Some(junction),
            _ => None,
        }
    }
}

/// Inclusive range of readout intervals; the composite time is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeSpan {
    pub first: u16,
    pub last: u16,
}

impl TimeSpan {
    pub fn single(interval: usize) -> Self {
        Self {
            first: interval as u16,
            last: interval as u16,
        }
    }

    pub fn shifted(self, by: usize) -> Self {
        Self {
            first: self.first + by as u16,
            last: self.last + by as u16,
        }
    }

    /// `sum(times[first..=last])`.
    pub fn duration(self, times: &[f64]) -> f64 {
        times[self.first as usize..=self.last as usize].iter().sum()
    }
}

/// `f_from^to(span)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Amplitude {
    pub from: Site,
    pub to: Site,
    pub span: TimeSpan,
}

/// Signed product of single-particle amplitudes, channel indices still symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionMonomial {
    pub coeff: f64,
    pub factors: Vec<Amplitude>,
}

/// One of the four edge-to-edge amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeAmplitude {
    F11,
    F1N,
    FN1,
    FNN,
}

impl EdgeAmplitude {
    fn from_sites(from: Site, to: Site) -> Option<Self> {
        match (from, to) {
            (Site::Sender, Site::Sender) => Some(Self::F11),
            (Site::Sender, Site::Receiver) => Some(Self::F1N),
            (Site::Receiver, Site::Sender) => Some(Self::FN1),
            (Site::Receiver, Site::Receiver) => Some(Self::FNN),
            _ => None,
        }
    }
}

/// Product of edge amplitudes at composite times.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMonomial {
    pub coeff: f64,
    pub factors: Vec<(EdgeAmplitude, TimeSpan)>,
}

/// `f_{sources}^{targets}(t_interval)`: a many-body amplitude between occupation
/// sets, rows and columns listed in site order (sender < channel < receiver).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAmplitude {
    pub sources: Vec<Site>,
    pub targets: Vec<Site>,
    pub interval: usize,
}

impl MultiAmplitude {
    pub fn particles(&self) -> usize {
        self.sources.len()
    }
}

/// Determinant expansion into `k!` signed monomials.
pub fn expand_determinant(amp: &MultiAmplitude) -> Vec<ContractionMonomial> {
    let k = amp.sources.len();
    debug_assert_eq!(k, amp.targets.len());
    let span = TimeSpan::single(amp.interval);
    permutations(k)
        .into_iter()
        .map(|(perm, sign)| ContractionMonomial {
            coeff: sign,
            factors: perm
                .iter()
                .enumerate()
                .map(|(a, &b)| Amplitude {
                    from: amp.sources[a],
                    to: amp.targets[b],
                    span,
                })
                .collect(),
        })
        .collect()
}

/// All permutations of `0..k` with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    if k == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (perm, sign) in permutations(k - 1) {
        // insert k-1 at every position; moving it left past j elements flips sign j times
        for pos in (0..=perm.len()).rev() {
            let mut p = perm.clone();
            p.insert(pos, k - 1);
            let shifts = perm.len() - pos;
            let s = if shifts % 2 == 0 { sign } else { -sign };
            out.push((p, s));
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The multi-particle amplitudes of one excursion for a fixed extraction assignment.
///
/// At each readout a fresh excitation sits on the sender, so interval `i` maps
/// `{1} + J_{i-1}` to `J_i + E_i`. Junction labels are `offset + step`.
pub fn excursion_amplitudes(
    levels: &[usize],
    assignment: &[Extraction],
    offset: usize,
) -> Vec<MultiAmplitude> {
    debug_assert_eq!(levels.len(), assignment.len() + 1);
    let mut out = Vec::with_capacity(assignment.len());
    for (step, &extraction) in assignment.iter().enumerate() {
        let interval = offset + step;
        let mut sources = vec![Site::Sender];
        sources.extend((0..levels[step]).map(|slot| Site::Channel {
            junction: (interval - 1) as u16,
            slot: slot as u16,
        }));
        let mut targets = Vec::new();
        if extraction.includes_sender() {
            targets.push(Site::Sender);
        }
        targets.extend((0..levels[step + 1]).map(|slot| Site::Channel {
            junction: interval as u16,
            slot: slot as u16,
        }));
        if extraction.includes_receiver() {
            targets.push(Site::Receiver);
        }
        out.push(MultiAmplitude {
            sources,
            targets,
            interval,
        });
    }
    out
}

/// One excursion of a path term with every amplitude expanded into single-particle monomials.
#[derive(Debug, Clone)]
pub struct ExpandedExcursion {
    pub first_interval: usize,
    /// One monomial list per extraction assignment; the excursion's value is
    /// the sum over assignments of `|sum of monomials|^2`.
    pub assignments: Vec<(Vec<Extraction>, Vec<ContractionMonomial>)>,
}

/// Expands every determinant of a path term. Summing a junction of `k` channel
/// excitations over unordered sets equals `1/k!` times the unrestricted sum over
/// `k` independent indices, which is what the monomials encode.
///
/// This is the literal product expansion and grows factorially; [`reduce_excursion`]
/// interleaves expansion and elimination instead.
pub fn expand_slater(term: &PathTerm) -> Vec<ExpandedExcursion> {
    term.excursions()
        .iter()
        .map(|exc| {
            let assignments = exc
                .extraction_choices()
                .into_iter()
                .map(|assignment| {
                    let amps =
                        excursion_amplitudes(exc.levels(), &assignment, exc.first_interval());
                    let mut monos = vec![ContractionMonomial {
                        coeff: 1.0,
                        factors: Vec::new(),
                    }];
                    for (step, amp) in amps.iter().enumerate() {
                        let weight = 1.0 / factorial(exc.levels()[step + 1]);
                        let det = expand_determinant(amp);
                        monos = monos
                            .iter()
                            .flat_map(|m| {
                                det.iter().map(move |d| {
                                    let mut factors = m.factors.clone();
                                    factors.extend_from_slice(&d.factors);
                                    ContractionMonomial {
                                        coeff: m.coeff * d.coeff * weight,
                                        factors,
                                    }
                                })
                            })
                            .collect();
                    }
                    (assignment, monos)
                })
                .collect();
            ExpandedExcursion {
                first_interval: exc.first_interval(),
                assignments,
            }
        })
        .collect()
}

/// Sums away one channel index. Fails unless it appears exactly once as an
/// output and once as an input at the immediately following interval.
fn contract(mono: &ContractionMonomial, label: Site) -> Result<[ContractionMonomial; 3]> {
    let mut out_pos = None;
    let mut in_pos = None;
    let mut count = 0;
    for (idx, f) in mono.factors.iter().enumerate() {
        if f.to == label {
            count += 1;
            out_pos = Some(idx);
        }
        if f.from == label {
            count += 1;
            in_pos = Some(idx);
        }
    }
    let (a, b) = match (out_pos, in_pos, count) {
        (Some(a), Some(b), 2) if a != b => (a, b),
        _ => {
            return Err(Error::MalformedContraction(format!(
                "channel index {label:?} appears {count} time(s) in {:?}",
                mono.factors
            )))
        }
    };
    let fa = mono.factors[a];
    let fb = mono.factors[b];
    if fa.span.last + 1 != fb.span.first {
        return Err(Error::MalformedContraction(format!(
            "channel index {label:?} joins non-consecutive spans {:?} and {:?}",
            fa.span, fb.span
        )));
    }
    let rest: Vec<Amplitude> = mono
        .factors
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != a && i != b)
        .map(|(_, f)| *f)
        .collect();
    let joined = TimeSpan {
        first: fa.span.first,
        last: fb.span.last,
    };
    let with = |extra: &[Amplitude], coeff: f64| {
        let mut factors = rest.clone();
        factors.extend_from_slice(extra);
        ContractionMonomial { coeff, factors }
    };
    let through = |edge: Site| {
        [
            Amplitude {
                from: fa.from,
                to: edge,
                span: fa.span,
            },
            Amplitude {
                from: edge,
                to: fb.to,
                span: fb.span,
            },
        ]
    };
    Ok([
        with(
            &[Amplitude {
                from: fa.from,
                to: fb.to,
                span: joined,
            }],
            mono.coeff,
        ),
        with(&through(Site::Sender), -mono.coeff),
        with(&through(Site::Receiver), -mono.coeff),
    ])
}

fn first_label(mono: &ContractionMonomial, select: &impl Fn(u16) -> bool) -> Option<Site> {
    mono.factors
        .iter()
        .flat_map(|f| [f.from, f.to])
        .find(|s| s.channel_junction().is_some_and(select))
}

/// Eliminates every channel index whose junction satisfies `select`.
fn eliminate_selected(
    mono: ContractionMonomial,
    select: &impl Fn(u16) -> bool,
    sink: &mut impl FnMut(ContractionMonomial),
) -> Result<()> {
    let mut work = vec![mono];
    while let Some(m) = work.pop() {
        match first_label(&m, select) {
            None => sink(m),
            Some(label) => work.extend(contract(&m, label)?),
        }
    }
    Ok(())
}

const COEFF_EPS: f64 = 1e-12;

/// Like-term accumulator keyed by the sorted factor list.
#[derive(Default)]
struct Accumulator {
    terms: HashMap<Vec<Amplitude>, f64>,
}

impl Accumulator {
    fn add(&mut self, mut m: ContractionMonomial) {
        m.factors.sort_unstable();
        *self.terms.entry(m.factors).or_insert(0.0) += m.coeff;
    }

    fn len(&self) -> usize {
        self.terms.len()
    }

    fn into_sorted(self) -> Vec<ContractionMonomial> {
        let mut out: Vec<ContractionMonomial> = self
            .terms
            .into_iter()
            .filter(|(_, c)| c.abs() > COEFF_EPS)
            .map(|(factors, coeff)| ContractionMonomial { coeff, factors })
            .collect();
        out.sort_by(|a, b| a.factors.cmp(&b.factors));
        out
    }
}

fn to_boundary(m: ContractionMonomial) -> Result<BoundaryMonomial> {
    let factors = m
        .factors
        .iter()
        .map(|f| {
            EdgeAmplitude::from_sites(f.from, f.to)
                .map(|kind| (kind, f.span))
                .ok_or_else(|| {
                    Error::MalformedContraction(format!("channel index left in {:?}", f))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryMonomial {
        coeff: m.coeff,
        factors,
    })
}

/// Replaces every channel sum with edge amplitudes at composite times and merges like terms.
pub fn eliminate_channel_sums(monomials: &[ContractionMonomial]) -> Result<Vec<BoundaryMonomial>> {
    let mut acc = Accumulator::default();
    for m in monomials {
        eliminate_selected(m.clone(), &|_| true, &mut |r| acc.add(r))?;
    }
    acc.into_sorted().into_iter().map(to_boundary).collect()
}

/// Boundary-monomial form of one excursion shape, spans relative to its first interval.
#[derive(Debug, Clone)]
pub struct ReducedExcursion {
    levels: Vec<usize>,
    assignments: Vec<Vec<BoundaryMonomial>>,
}

impl ReducedExcursion {
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn assignments(&self) -> &[Vec<BoundaryMonomial>] {
        &self.assignments
    }

    pub fn monomial_count(&self) -> usize {
        self.assignments.iter().map(Vec::len).sum()
    }
}

/// Reduces one excursion shape, contracting each junction as soon as both of
/// its determinants are present so intermediate sizes stay small.
pub fn reduce_excursion(levels: &[usize], max_monomials: usize) -> Result<ReducedExcursion> {
    let exc = super::term::Excursion::new(0, levels.to_vec());
    let mut assignments = Vec::new();
    let mut total = 0usize;
    for assignment in exc.extraction_choices() {
        let amps = excursion_amplitudes(levels, &assignment, 0);
        let mut partial = vec![ContractionMonomial {
            coeff: 1.0,
            factors: Vec::new(),
        }];
        for (step, amp) in amps.iter().enumerate() {
            let weight = 1.0 / factorial(levels[step + 1]);
            let det = expand_determinant(amp);
            let mut acc = Accumulator::default();
            for p in &partial {
                for d in &det {
                    let mut factors = p.factors.clone();
                    factors.extend_from_slice(&d.factors);
                    let m = ContractionMonomial {
                        coeff: p.coeff * d.coeff * weight,
                        factors,
                    };
                    // junction `step - 1` is now referenced from both sides
                    eliminate_selected(m, &|j| j as usize + 1 == step, &mut |r| acc.add(r))?;
                }
                if acc.len() > max_monomials {
                    return Err(Error::TermBudget(format!(
                        "excursion {levels:?} exceeds {max_monomials} monomials"
                    )));
                }
            }
            partial = acc.into_sorted();
        }
        let reduced = partial
            .into_iter()
            .map(to_boundary)
            .collect::<Result<Vec<_>>>()?;
        total += reduced.len();
        if total > max_monomials {
            return Err(Error::TermBudget(format!(
                "excursion {levels:?} exceeds {max_monomials} boundary monomials"
            )));
        }
        assignments.push(reduced);
    }
    Ok(ReducedExcursion {
        levels: levels.to_vec(),
        assignments,
    })
}

/// Boundary amplitudes at every composite time `t_a + ... + t_b`.
pub struct SpanTable {
    steps: usize,
    values: Vec<[Complex64; 4]>,
}

impl SpanTable {
    pub fn new(times: &[f64], provider: &dyn crate::chain::BoundaryProvider) -> Self {
        let steps = times.len();
        let mut values = Vec::with_capacity(steps * steps);
        for first in 0..steps {
            for last in 0..steps {
                if last < first {
                    values.push([Complex64::new(0.0, 0.0); 4]);
                    continue;
                }
                let t: f64 = times[first..=last].iter().sum();
                let b = provider.boundary(t);
                values.push([b.f11, b.f1n, b.fn1, b.fnn]);
            }
        }
        Self { steps, values }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, kind: EdgeAmplitude, span: TimeSpan) -> Complex64 {
        let row = &self.values[span.first as usize * self.steps + span.last as usize];
        match kind {
            EdgeAmplitude::F11 => row[0],
            EdgeAmplitude::F1N => row[1],
            EdgeAmplitude::FN1 => row[2],
            EdgeAmplitude::FNN => row[3],
        }
    }
}

impl BoundaryMonomial {
    pub fn evaluate(&self, table: &SpanTable, offset: usize) -> Complex64 {
        self.factors
            .iter()
            .fold(Complex64::new(self.coeff, 0.0), |acc, &(kind, span)| {
                acc * table.get(kind, span.shifted(offset))
            })
    }
}

impl ReducedExcursion {
    /// `sum_E |amplitude_E|^2` with the excursion starting at interval `offset`.
    pub fn evaluate(&self, table: &SpanTable, offset: usize) -> f64 {
        self.assignments
            .iter()
            .map(|monos| {
                monos
                    .iter()
                    .map(|m| m.evaluate(table, offset))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    }
}
