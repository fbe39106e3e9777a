use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::{linalg, Error, Result};

use super::basis::SectorBasis;
use super::hamiltonian::ManyBodyPropagator;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const DENSE_MAX_SITES: usize = 12;

/// Density matrix stored as blocks between excitation sectors.
///
/// Block `(k, l)` has shape `binomial(N, k) x binomial(N, l)` and holds
/// `<m|rho|m'>` for `|m| = k`, `|m'| = l`. Averaged (Haar) senders only ever
/// produce diagonal blocks; a fixed coherent sender also creates `(k, k +- 1)`
/// coherences, which is why off-diagonal blocks are representable at all.
/// Missing blocks are zero.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    basis: Arc<SectorBasis>,
    blocks: BTreeMap<(usize, usize), DMatrix<Complex64>>,
}

impl ManyBodyState {
    /// All sites in `|0>`.
    pub fn vacuum(basis: Arc<SectorBasis>) -> Self {
        let mut blocks = BTreeMap::new();
        blocks.insert((0, 0), DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
        Self { basis, blocks }
    }

    /// Checks block shapes against the basis.
    pub fn from_blocks(
        basis: Arc<SectorBasis>,
        blocks: BTreeMap<(usize, usize), DMatrix<Complex64>>,
    ) -> Result<Self> {
        for (&(k, l), b) in &blocks {
            let shape = (basis.dim(k), basis.dim(l));
            if shape.0 == 0 || shape.1 == 0 || b.shape() != shape {
                return Err(Error::InvalidParameter(format!(
                    "block ({k},{l}) has shape {:?}, expected {shape:?}",
                    b.shape()
                )));
            }
        }
        Ok(Self { basis, blocks })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn blocks(&self) -> &BTreeMap<(usize, usize), DMatrix<Complex64>> {
        &self.blocks
    }

    pub fn block(&self, k: usize, l: usize) -> Option<&DMatrix<Complex64>> {
        self.blocks.get(&(k, l))
    }

    /// True when no coherence between different excitation numbers is stored.
    pub fn is_sector_diagonal(&self) -> bool {
        self.blocks.keys().all(|&(k, l)| k == l)
    }

    /// Largest excitation number with a stored block.
    pub fn max_excitations(&self) -> usize {
        self.blocks.keys().map(|&(k, l)| k.max(l)).max().unwrap_or(0)
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .filter(|((k, l), _)| k == l)
            .map(|(_, b)| b.trace())
            .sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum over all blocks of |entries|^2 for Hermitian rho
        self.blocks.values().map(|b| b.norm_squared()).sum()
    }

    /// Largest entry of `rho - rho^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(k, l), b) in &self.blocks {
            let diff = match self.blocks.get(&(l, k)) {
                Some(partner) => b - partner.adjoint(),
                None => b.clone(),
            };
            worst = diff.iter().fold(worst, |w, z| w.max(z.norm()));
        }
        worst
    }

    /// Smallest eigenvalue of the assembled density matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        if self.is_sector_diagonal() {
            let mut min = f64::INFINITY;
            for b in self.blocks.values() {
                let h = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
                let ev = linalg::hermitian_eigenvalues(&h)?;
                min = min.min(ev.iter().copied().fold(f64::INFINITY, f64::min));
            }
            // absent sectors contribute zero eigenvalues
            return Ok(if self.covers_all_sectors() { min } else { min.min(0.0) });
        }
        if self.sites() > DENSE_MAX_SITES {
            return Err(Error::Guard(format!(
                "dense spectrum of a sector-coherent state limited to N <= {DENSE_MAX_SITES}"
            )));
        }
        let dense = self.to_dense();
        let h = (&dense + dense.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = linalg::hermitian_eigenvalues(&h)?;
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }

    fn covers_all_sectors(&self) -> bool {
        (0..=self.basis.sites()).all(|k| self.blocks.contains_key(&(k, k)))
    }

    /// Full `2^N x 2^N` matrix indexed by occupation bitmask. Test helper.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.sites();
        let mut out = DMatrix::from_element(d, d, ZERO);
        for (&(k, l), b) in &self.blocks {
            let rows = self.basis.sector(k);
            let cols = self.basis.sector(l);
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    out[(r as usize, c as usize)] = b[(i, j)];
                }
            }
        }
        out
    }

    /// `<n_site>` for a 1-based site.
    pub fn site_occupation(&self, site: usize) -> Result<f64> {
        if site == 0 || site > self.sites() {
            return Err(Error::SiteOutOfRange {
                site,
                length: self.sites(),
            });
        }
        let bit = 1u32 << (site - 1);
        let mut total = 0.0;
        for (&(k, l), b) in &self.blocks {
            if k != l {
                continue;
            }
            for (i, &m) in self.basis.sector(k).iter().enumerate() {
                if m & bit != 0 {
                    total += b[(i, i)].re;
                }
            }
        }
        Ok(total)
    }

    /// Frobenius distance between two states on the same basis.
    pub fn distance(&self, other: &ManyBodyState) -> f64 {
        let mut sum = 0.0;
        for (key, b) in &self.blocks {
            sum += match other.blocks.get(key) {
                Some(o) => (b - o).norm_squared(),
                None => b.norm_squared(),
            };
        }
        for (key, o) in &other.blocks {
            if !self.blocks.contains_key(key) {
                sum += o.norm_squared();
            }
        }
        sum.sqrt()
    }

    /// `self + w * other`, used to average over senders.
    pub fn add_scaled(&self, other: &ManyBodyState, w: f64) -> ManyBodyState {
        let mut blocks = self.blocks.clone();
        for (key, o) in &other.blocks {
            let scaled = o * Complex64::new(w, 0.0);
            blocks
                .entry(*key)
                .and_modify(|b| *b += &scaled)
                .or_insert(scaled);
        }
        ManyBodyState {
            basis: self.basis.clone(),
            blocks,
        }
    }

    pub fn scaled(&self, w: f64) -> ManyBodyState {
        ManyBodyState {
            basis: self.basis.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(k, b)| (*k, b * Complex64::new(w, 0.0)))
                .collect(),
        }
    }
}

/// Conjugates every block by the sector unitaries `exp(-i H_k t)`.
pub fn evolve(state: &ManyBodyState, t: f64, prop: &ManyBodyPropagator) -> Result<ManyBodyState> {
    if prop.basis().as_ref() != state.basis().as_ref() {
        return Err(Error::LengthMismatch {
            what: "propagator sites",
            expected: state.sites(),
            found: prop.basis().sites(),
        });
    }
    let mut unitaries: BTreeMap<usize, DMatrix<Complex64>> = BTreeMap::new();
    for &(k, l) in state.blocks.keys() {
        for s in [k, l] {
            if let std::collections::btree_map::Entry::Vacant(e) = unitaries.entry(s) {
                e.insert(prop.unitary(s, t)?);
            }
        }
    }
    let blocks = state
        .blocks
        .iter()
        .map(|(&(k, l), b)| ((k, l), &unitaries[&k] * b * unitaries[&l].adjoint()))
        .collect();
    Ok(ManyBodyState {
        basis: state.basis.clone(),
        blocks,
    })
}

/// Traces out sites 1 and N, leaving the channel on sites 2..N-1.
pub fn trace_out_edges(state: &ManyBodyState, channel: &Arc<SectorBasis>) -> Result<ManyBodyState> {
    let n = state.sites();
    if n < 3 || channel.sites() != n - 2 {
        return Err(Error::LengthMismatch {
            what: "channel sites",
            expected: n.saturating_sub(2),
            found: channel.sites(),
        });
    }
    let edge = 1u32 | (1u32 << (n - 1));
    let inner = |m: u32| (m & !edge) >> 1;
    let mut blocks: BTreeMap<(usize, usize), DMatrix<Complex64>> = BTreeMap::new();
    for (&(k, l), b) in &state.blocks {
        let rows = state.basis.sector(k);
        let cols = state.basis.sector(l);
        for (i, &r) in rows.iter().enumerate() {
            let re = r & edge;
            let rc = inner(r);
            let kc = rc.count_ones() as usize;
            for (j, &c) in cols.iter().enumerate() {
                if c & edge != re {
                    continue;
                }
                let v = b[(i, j)];
                if v == ZERO {
                    continue;
                }
                let cc = inner(c);
                let lc = cc.count_ones() as usize;
                let target = blocks
                    .entry((kc, lc))
                    .or_insert_with(|| DMatrix::from_element(channel.dim(kc), channel.dim(lc), ZERO));
                target[(channel.ordinal(rc), channel.ordinal(cc))] += v;
            }
        }
    }
    Ok(ManyBodyState {
        basis: channel.clone(),
        blocks,
    })
}

/// `sender (x) channel (x) |0><0|` on the full chain.
///
/// `sender` may be any 2x2 operator, which lets tomography push `|1><0|`
/// through the protocol by linearity.
pub fn attach_edges(
    channel: &ManyBodyState,
    sender: &Matrix2<Complex64>,
    full: &Arc<SectorBasis>,
) -> Result<ManyBodyState> {
    if full.sites() != channel.sites() + 2 {
        return Err(Error::LengthMismatch {
            what: "chain sites",
            expected: channel.sites() + 2,
            found: full.sites(),
        });
    }
    let cb = channel.basis();
    let mut blocks: BTreeMap<(usize, usize), DMatrix<Complex64>> = BTreeMap::new();
    for (&(k, l), b) in &channel.blocks {
        for a in 0..2usize {
            for c in 0..2usize {
                let s = sender[(a, c)];
                if s == ZERO {
                    continue;
                }
                let (fk, fl) = (k + a, l + c);
                let target = blocks
                    .entry((fk, fl))
                    .or_insert_with(|| DMatrix::from_element(full.dim(fk), full.dim(fl), ZERO));
                let rows: Vec<usize> = cb
                    .sector(k)
                    .iter()
                    .map(|&m| full.ordinal((m << 1) | a as u32))
                    .collect();
                let cols: Vec<usize> = cb
                    .sector(l)
                    .iter()
                    .map(|&m| full.ordinal((m << 1) | c as u32))
                    .collect();
                for (i, &r) in rows.iter().enumerate() {
                    for (j, &cc) in cols.iter().enumerate() {
                        target[(r, cc)] += s * b[(i, j)];
                    }
                }
            }
        }
    }
    Ok(ManyBodyState {
        basis: full.clone(),
        blocks,
    })
}

/// Removes the used sender and receiver and attaches a fresh pair.
pub fn swap_out_in(state: &ManyBodyState, fresh_sender: &Matrix2<Complex64>) -> Result<ManyBodyState> {
    let n = state.sites();
    if n < 3 {
        return Err(Error::InvalidChain(format!("need at least 3 sites, got {n}")));
    }
    let channel = Arc::new(SectorBasis::new(n - 2));
    let reduced = trace_out_edges(state, &channel)?;
    attach_edges(&reduced, fresh_sender, state.basis())
}

/// Reduced state of site N, in the `{|0>, |1>}` basis.
pub fn receiver_state(state: &ManyBodyState) -> Matrix2<Complex64> {
    let n = state.sites();
    let top = 1u32 << (n - 1);
    let basis = state.basis();
    let mut rho = Matrix2::from_element(ZERO);
    for (&(k, l), b) in &state.blocks {
        if k == l {
            for (i, &m) in basis.sector(k).iter().enumerate() {
                let a = usize::from(m & top != 0);
                rho[(a, a)] += b[(i, i)];
            }
        } else if k == l + 1 {
            // <1,x| rho |0,x>
            for (j, &c) in basis.sector(l).iter().enumerate() {
                if c & top == 0 {
                    rho[(1, 0)] += b[(basis.ordinal(c | top), j)];
                }
            }
        } else if l == k + 1 {
            for (i, &r) in basis.sector(k).iter().enumerate() {
                if r & top == 0 {
                    rho[(0, 1)] += b[(i, basis.ordinal(r | top))];
                }
            }
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSpec;
    use crate::oracle::hamiltonian::ManyBodyModel;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn excited() -> Matrix2<Complex64> {
        Matrix2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))
    }

    fn ground() -> Matrix2<Complex64> {
        Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
    }

    fn plus() -> Matrix2<Complex64> {
        Matrix2::from_element(c(0.5, 0.0))
    }

    fn prop(n: usize, delta: f64, k_max: usize) -> ManyBodyPropagator {
        let model = ManyBodyModel::xxz(&ChainSpec::pst(n).unwrap(), delta).unwrap();
        ManyBodyPropagator::new(&model, Arc::new(SectorBasis::new(n)), k_max).unwrap()
    }

    fn attach(ch: &ManyBodyState, s: &Matrix2<Complex64>) -> ManyBodyState {
        attach_edges(ch, s, &Arc::new(SectorBasis::new(ch.sites() + 2))).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let p = prop(5, 0.0, 2);
        let s = attach(&ManyBodyState::vacuum(Arc::new(SectorBasis::new(3))), &plus());
        assert!(evolve(&s, 0.0, &p).unwrap().distance(&s) < 1e-14);
    }

    #[test]
    fn pst_moves_excitation_to_the_end() {
        let p = prop(6, 0.0, 1);
        let s = attach(&ManyBodyState::vacuum(Arc::new(SectorBasis::new(4))), &excited());
        let out = evolve(&s, FRAC_PI_2, &p).unwrap();
        assert!((out.site_occupation(6).unwrap() - 1.0).abs() < 1e-10);
        assert!((receiver_state(&out)[(1, 1)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purity_and_trace_survive_evolution() {
        let p = prop(5, 0.5, 3);
        let mut s = attach(&ManyBodyState::vacuum(Arc::new(SectorBasis::new(3))), &plus());
        for t in [0.3, 1.1, 0.7] {
            let before = s.purity();
            s = evolve(&s, t, &p).unwrap();
            assert!((s.purity() - before).abs() < 1e-10);
            assert!((s.trace().re - 1.0).abs() < 1e-10);
            assert!(s.hermiticity_defect() < 1e-10);
            s = swap_out_in(&s, &plus()).unwrap();
        }
        assert!(s.min_eigenvalue().unwrap() > -1e-9);
        assert!(!s.is_sector_diagonal());
    }

    #[test]
    fn vacuum_swap() {
        let full = Arc::new(SectorBasis::new(5));
        let out = swap_out_in(&ManyBodyState::vacuum(full.clone()), &ground()).unwrap();
        assert!(out.distance(&ManyBodyState::vacuum(full)) < 1e-15);
    }

    #[test]
    fn swap_keeps_channel_population() {
        let p = prop(6, 0.0, 2);
        let s = attach(&ManyBodyState::vacuum(Arc::new(SectorBasis::new(4))), &excited());
        let s = evolve(&s, 0.8, &p).unwrap();
        let before: f64 = (2..=5).map(|j| s.site_occupation(j).unwrap()).sum();
        let out = swap_out_in(&s, &excited()).unwrap();
        let after: f64 = (2..=5).map(|j| out.site_occupation(j).unwrap()).sum();
        assert!((before - after).abs() < 1e-12);
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        assert!((out.site_occupation(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(out.site_occupation(6).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dense_partial_trace_agrees() {
        // independent check of trace_out_edges through the dense matrix
        let p = prop(5, 0.3, 3);
        let s = attach(&ManyBodyState::vacuum(Arc::new(SectorBasis::new(3))), &plus());
        let s = evolve(&s, 0.9, &p).unwrap();
        let s = swap_out_in(&s, &excited()).unwrap();
        let s = evolve(&s, 0.6, &p).unwrap();
        let dense = s.to_dense();
        let ch = Arc::new(SectorBasis::new(3));
        let reduced = trace_out_edges(&s, &ch).unwrap().to_dense();
        for a in 0..8usize {
            for b in 0..8usize {
                let mut v = ZERO;
                for e1 in 0..2usize {
                    for e2 in 0..2usize {
                        let r = e1 | (a << 1) | (e2 << 4);
                        let c = e1 | (b << 1) | (e2 << 4);
                        v += dense[(r, c)];
                    }
                }
                assert!((v - reduced[(a, b)]).norm() < 1e-13);
            }
        }
        let rho_r = receiver_state(&s);
        let mut expect = Matrix2::from_element(ZERO);
        for x in 0..16usize {
            for a in 0..2usize {
                for b in 0..2usize {
                    expect[(a, b)] += dense[(x | (a << 4), x | (b << 4))];
                }
            }
        }
        assert!((rho_r - expect).norm() < 1e-13);
    }
}
