use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::chain::ChainSpec;
use crate::{linalg, Error, Result};

use super::basis::SectorBasis;

/// Largest chain the oracle accepts unless configured otherwise.
pub const DEFAULT_MAX_SITES: usize = 14;

/// `H = sum_i J_i [ (X_i X_{i+1} + Y_i Y_{i+1}) / 2 + anisotropy * Z_i Z_{i+1} / 2 ]`.
///
/// The hopping normalization makes the one-excitation block equal to the
/// single-particle matrix of [`crate::chain`]. Any anisotropy keeps U(1)
/// symmetry but makes the model interacting.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyModel {
    couplings: Vec<f64>,
    anisotropy: f64,
}

impl ManyBodyModel {
    pub fn xx(spec: &ChainSpec) -> Result<Self> {
        Self::xxz(spec, 0.0)
    }

    pub fn xxz(spec: &ChainSpec, anisotropy: f64) -> Result<Self> {
        spec.validate()?;
        if !anisotropy.is_finite() {
            return Err(Error::InvalidParameter(format!("anisotropy {anisotropy}")));
        }
        Ok(Self {
            couplings: spec.couplings.clone(),
            anisotropy,
        })
    }

    pub fn sites(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn anisotropy(&self) -> f64 {
        self.anisotropy
    }

    fn sector_matrix(&self, basis: &SectorBasis, k: usize) -> DMatrix<f64> {
        let masks = basis.sector(k);
        let mut h = DMatrix::zeros(masks.len(), masks.len());
        for (col, &m) in masks.iter().enumerate() {
            for (i, &j) in self.couplings.iter().enumerate() {
                let a = (m >> i) & 1;
                let b = (m >> (i + 1)) & 1;
                if a != b {
                    let flipped = m ^ (0b11 << i);
                    h[(basis.ordinal(flipped), col)] += j;
                }
                if self.anisotropy != 0.0 {
                    let zz = if a == b { 1.0 } else { -1.0 };
                    h[(col, col)] += 0.5 * self.anisotropy * j * zz;
                }
            }
        }
        h
    }
}

/// Sector blocks `k = 0..=k_max` of the many-body Hamiltonian.
pub fn build_many_body_hamiltonian(model: &ManyBodyModel, k_max: usize) -> Result<Vec<DMatrix<f64>>> {
    check_sites(model.sites(), DEFAULT_MAX_SITES)?;
    if k_max > model.sites() {
        return Err(Error::InvalidParameter(format!(
            "sector {k_max} exceeds {} sites",
            model.sites()
        )));
    }
    let basis = SectorBasis::new(model.sites());
    Ok((0..=k_max).map(|k| model.sector_matrix(&basis, k)).collect())
}

pub(crate) fn check_sites(sites: usize, max_sites: usize) -> Result<()> {
    if sites > max_sites {
        return Err(Error::Guard(format!(
            "many-body oracle limited to N <= {max_sites}, got {sites}"
        )));
    }
    Ok(())
}

/// Per-sector eigendecompositions; `exp(-i H_k t)` on demand.
#[derive(Debug, Clone)]
pub struct ManyBodyPropagator {
    basis: Arc<SectorBasis>,
    sectors: Vec<(Vec<f64>, DMatrix<f64>)>,
}

impl ManyBodyPropagator {
    pub fn new(model: &ManyBodyModel, basis: Arc<SectorBasis>, k_max: usize) -> Result<Self> {
        if basis.sites() != model.sites() {
            return Err(Error::LengthMismatch {
                what: "basis sites",
                expected: model.sites(),
                found: basis.sites(),
            });
        }
        let k_max = k_max.min(model.sites());
        let sectors = (0..=k_max)
            .map(|k| linalg::symmetric_eigen(&model.sector_matrix(&basis, k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { basis, sectors })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn max_sector(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn eigenvalues(&self, k: usize) -> &[f64] {
        &self.sectors[k].0
    }

    /// `exp(-i H_k t)` in the ordinal basis of sector `k`.
    pub fn unitary(&self, k: usize, t: f64) -> Result<DMatrix<Complex64>> {
        let (values, vectors) = self.sectors.get(k).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "sector {k} not prepared (max {})",
                self.max_sector()
            ))
        })?;
        let v = vectors.map(|x| Complex64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        ));
        Ok(&v * phases * v.transpose())
    }
}
