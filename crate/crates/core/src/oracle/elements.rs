//! Average fidelity from the channel state and many-body amplitudes alone.
//!
//! ```text
//! F = 1/2 + |coh| / 3 + pop / 6
//! coh = sum_k sum_{p,q} rho_pq sum_{p'} U_{k+1}[p' N, 1 p] conj(U_k[p', q])
//! pop = sum_k sum_{p,q} rho_pq ( sum_{p'} U_k[p', p] conj(U_k[p', q])
//!                              - sum_{p''} U_{k+1}[p'', 1 p] conj(U_{k+1}[p'', 1 q]) )
//! ```
//!
//! `p, q` run over channel sets with `k` excitations, `p'` over sets of `k` sites
//! avoiding N and `p''` over sets of `k + 1` sites avoiding N. Nothing here assumes
//! free fermions, so it holds for any U(1)-symmetric chain.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

use super::basis::SectorBasis;
use super::hamiltonian::ManyBodyPropagator;
use super::state::{trace_out_edges, ManyBodyState};

/// Sector-diagonal channel density elements `rho_{p[k], q[k]}`.
///
/// Coherences between different excitation numbers never reach the average
/// fidelity and are dropped.
#[derive(Debug, Clone)]
pub struct ChannelElements {
    basis: Arc<SectorBasis>,
    sectors: Vec<DMatrix<Complex64>>,
}

impl ChannelElements {
    /// Empty channel on `sites` sites.
    pub fn fresh(sites: usize) -> Self {
        let basis = Arc::new(SectorBasis::new(sites));
        let one = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        Self {
            basis,
            sectors: vec![one],
        }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    /// Highest stored sector, `k` running over `0..=max_sector()`.
    pub fn max_sector(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn sector(&self, k: usize) -> Option<&DMatrix<Complex64>> {
        self.sectors.get(k)
    }

    /// `rho_{p,q}` for channel bitmasks of equal weight; zero otherwise.
    pub fn element(&self, p: u32, q: u32) -> Complex64 {
        let k = p.count_ones() as usize;
        if q.count_ones() as usize != k {
            return Complex64::new(0.0, 0.0);
        }
        self.sectors
            .get(k)
            .map_or(Complex64::new(0.0, 0.0), |b| {
                b[(self.basis.ordinal(p), self.basis.ordinal(q))]
            })
    }

    pub fn sector_traces(&self) -> Vec<f64> {
        self.sectors.iter().map(|b| b.trace().re).collect()
    }
}

/// Channel elements after the chain state `state` has been read out.
pub fn channel_sector_elements(state: &ManyBodyState) -> Result<ChannelElements> {
    let n = state.sites();
    if n < 3 {
        return Err(Error::InvalidChain(format!("need at least 3 sites, got {n}")));
    }
    let basis = Arc::new(SectorBasis::new(n - 2));
    let channel = trace_out_edges(state, &basis)?;
    let top = channel
        .blocks()
        .keys()
        .filter(|(k, l)| k == l)
        .map(|&(k, _)| k)
        .max()
        .unwrap_or(0);
    let sectors = (0..=top)
        .map(|k| {
            channel.block(k, k).cloned().unwrap_or_else(|| {
                DMatrix::from_element(basis.dim(k), basis.dim(k), Complex64::new(0.0, 0.0))
            })
        })
        .collect();
    Ok(ChannelElements { basis, sectors })
}

/// Average fidelity of the next use with readout time `t_n`.
pub fn element_fidelity(elements: &ChannelElements, t_n: f64, prop: &ManyBodyPropagator) -> Result<f64> {
    let full = prop.basis();
    let n = full.sites();
    if n != elements.basis().sites() + 2 {
        return Err(Error::LengthMismatch {
            what: "chain sites",
            expected: elements.basis().sites() + 2,
            found: n,
        });
    }
    let top = 1u32 << (n - 1);
    let ch = elements.basis();
    let mut coherence = Complex64::new(0.0, 0.0);
    let mut population = 0.0;

    for (k, rho) in elements.sectors.iter().enumerate() {
        if rho.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        if k + 1 > prop.max_sector() {
            return Err(Error::InvalidParameter(format!(
                "propagator covers sectors up to {}, channel sector {k} needs {}",
                prop.max_sector(),
                k + 1
            )));
        }
        let u_k = prop.unitary(k, t_n)?;
        let u_k1 = prop.unitary(k + 1, t_n)?;

        let avoid_n = |sector: usize| -> Vec<u32> {
            full.sector(sector).iter().copied().filter(|m| m & top == 0).collect()
        };
        let p_k = avoid_n(k);
        let p_k1 = avoid_n(k + 1);
        let channel_cols: Vec<usize> = ch.sector(k).iter().map(|&q| full.ordinal(q << 1)).collect();
        let sender_cols: Vec<usize> = ch
            .sector(k)
            .iter()
            .map(|&p| full.ordinal((p << 1) | 1))
            .collect();

        let pick = |u: &DMatrix<Complex64>, rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| u[(rows[i], cols[j])])
        };
        let rows_k: Vec<usize> = p_k.iter().map(|&m| full.ordinal(m)).collect();
        let rows_kn: Vec<usize> = p_k.iter().map(|&m| full.ordinal(m | top)).collect();
        let rows_k1: Vec<usize> = p_k1.iter().map(|&m| full.ordinal(m)).collect();

        let y = pick(&u_k, &rows_k, &channel_cols);
        let x = pick(&u_k1, &rows_kn, &sender_cols);
        let w = pick(&u_k1, &rows_k1, &sender_cols);

        coherence += (rho * y.adjoint() * x).trace();
        population += (rho * y.adjoint() * y).trace().re - (rho * w.adjoint() * w).trace().re;
    }
    Ok(0.5 + coherence.norm() / 3.0 + population / 6.0)
}
