//! Single-excitation dynamics of nearest-neighbour XX chains.
//!
//! Sites are 1-based: the sender sits on site 1, the receiver on site `N`, and
//! sites `2..N-1` form the channel. In the one-excitation sector the chain is a
//! tridiagonal hopping matrix `h`, and the transition amplitude
//! `f_i^j(t) = <j| exp(-i h t) |i>` is evaluated from one eigendecomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{linalg, Error, Result};

/// Coupling pattern of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingScheme {
    /// `J_i = sqrt(i (N - i))`, perfect transfer at `t = pi/2`.
    Pst,
    /// All couplings equal.
    Uniform,
    /// Arbitrary finite couplings.
    Custom,
}

/// Chain length and hopping strengths (dimensionless, hbar = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub length: usize,
    pub scheme: CouplingScheme,
    pub couplings: Vec<f64>,
}

impl ChainSpec {
    pub fn pst(length: usize) -> Result<Self> {
        check_length(length)?;
        let couplings = pst_couplings(length);
        Ok(Self {
            length,
            scheme: CouplingScheme::Pst,
            couplings,
        })
    }

    pub fn uniform(length: usize, coupling: f64) -> Result<Self> {
        check_length(length)?;
        let spec = Self {
            length,
            scheme: CouplingScheme::Uniform,
            couplings: vec![coupling; length - 1],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(couplings: Vec<f64>) -> Result<Self> {
        let spec = Self {
            length: couplings.len() + 1,
            scheme: CouplingScheme::Custom,
            couplings,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_length(self.length)?;
        if self.couplings.len() != self.length - 1 {
            return Err(Error::LengthMismatch {
                what: "couplings",
                expected: self.length - 1,
                found: self.couplings.len(),
            });
        }
        if let Some(bad) = self.couplings.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidChain(format!("non-finite coupling {bad}")));
        }
        match self.scheme {
            CouplingScheme::Pst => {
                for (i, (&c, expected)) in self
                    .couplings
                    .iter()
                    .zip(pst_couplings(self.length))
                    .enumerate()
                {
                    if (c - expected).abs() > 1e-12 * expected.max(1.0) {
                        return Err(Error::InvalidChain(format!(
                            "PST coupling {} is {c}, expected {expected}",
                            i + 1
                        )));
                    }
                }
            }
            CouplingScheme::Uniform => {
                if self.couplings.iter().any(|&c| c != self.couplings[0]) {
                    return Err(Error::InvalidChain("uniform couplings differ".into()));
                }
            }
            CouplingScheme::Custom => {}
        }
        Ok(())
    }

    /// True when `J_i = J_{N-i}` for all bonds.
    pub fn is_mirror_symmetric(&self) -> bool {
        let m = self.couplings.len();
        (0..m).all(|i| (self.couplings[i] - self.couplings[m - 1 - i]).abs() <= 1e-12)
    }
}

fn check_length(length: usize) -> Result<()> {
    if length < 3 {
        return Err(Error::InvalidChain(format!(
            "need at least 3 sites (sender, channel, receiver), got {length}"
        )));
    }
    Ok(())
}

fn pst_couplings(length: usize) -> Vec<f64> {
    (1..length).map(|i| ((i * (length - i)) as f64).sqrt()).collect()
}

/// Tridiagonal hopping matrix with `h[i][i+1] = h[i+1][i] = J_i` and zero diagonal.
pub fn build_single_particle_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    Ok(hopping_matrix(&spec.couplings))
}

pub(crate) fn hopping_matrix(couplings: &[f64]) -> DMatrix<f64> {
    let n = couplings.len() + 1;
    let mut h = DMatrix::zeros(n, n);
    for (i, &j) in couplings.iter().enumerate() {
        h[(i, i + 1)] = j;
        h[(i + 1, i)] = j;
    }
    h
}

/// Edge-to-edge amplitudes at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryAmplitudes {
    pub t: f64,
    pub f11: Complex64,
    pub f1n: Complex64,
    pub fn1: Complex64,
    pub fnn: Complex64,
}

/// Anything that can supply `f_1^1, f_1^N, f_N^1, f_N^N` at an arbitrary time.
pub trait BoundaryProvider: Sync {
    fn boundary(&self, t: f64) -> BoundaryAmplitudes;
}

/// Eigenpairs of a single-particle Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    pub eigenvectors: DMatrix<f64>,
}

/// Diagonalizes a real symmetric matrix.
pub fn diagonalize(h: &DMatrix<f64>) -> Result<SpectralPropagator> {
    if !h.is_square() {
        return Err(Error::InvalidParameter("Hamiltonian must be square".into()));
    }
    let scale = h.amax().max(1.0);
    if (h - h.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidParameter("Hamiltonian is not symmetric".into()));
    }
    let (eigenvalues, eigenvectors) = linalg::symmetric_eigen(h)?;
    Ok(SpectralPropagator {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralPropagator {
    pub fn for_chain(spec: &ChainSpec) -> Result<Self> {
        diagonalize(&build_single_particle_hamiltonian(spec)?)
    }

    pub fn sites(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `f_i^j(t)` with 1-based sites.
    pub fn amplitude(&self, i: usize, j: usize, t: f64) -> Result<Complex64> {
        let n = self.sites();
        for site in [i, j] {
            if site == 0 || site > n {
                return Err(Error::SiteOutOfRange { site, length: n });
            }
        }
        Ok(self.amplitude_unchecked(i - 1, j - 1, t))
    }

    /// 0-based variant without range checks.
    pub(crate) fn amplitude_unchecked(&self, i: usize, j: usize, t: f64) -> Complex64 {
        let v = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &e)| Complex64::from_polar(v[(j, k)] * v[(i, k)], -e * t))
            .sum()
    }

    /// Full propagator `u` with `u[(j, i)] = f_i^j(t)` (0-based).
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.sites();
        let v = self.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            self.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        ));
        &v * phases * v.transpose()
    }
}

impl BoundaryProvider for SpectralPropagator {
    fn boundary(&self, t: f64) -> BoundaryAmplitudes {
        let last = self.sites() - 1;
        BoundaryAmplitudes {
            t,
            f11: self.amplitude_unchecked(0, 0, t),
            f1n: self.amplitude_unchecked(0, last, t),
            fn1: self.amplitude_unchecked(last, 0, t),
            fnn: self.amplitude_unchecked(last, last, t),
        }
    }
}

/// `x^m` evaluated as magnitude `exp(m ln|x|)` times the sign, so huge `m` underflows cleanly to 0.
fn signed_power(x: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    let magnitude = (m as f64 * x.abs().ln()).exp();
    if x < 0.0 && m % 2 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// `(-i)^m`.
fn minus_i_power(m: u64) -> Complex64 {
    match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Wigner-d closed forms for the PST chain: `f_1^1 = f_N^N = cos^{N-1} t`,
/// `f_1^N = f_N^1 = (-i sin t)^{N-1}`. O(1) in `N`.
pub fn pst_boundary_closed_form(length: usize, t: f64) -> Result<BoundaryAmplitudes> {
    if length < 2 {
        return Err(Error::InvalidChain(format!("PST closed form needs N >= 2, got {length}")));
    }
    Ok(pst_boundary_unchecked(length, t))
}

fn pst_boundary_unchecked(length: usize, t: f64) -> BoundaryAmplitudes {
    let m = (length - 1) as u64;
    let diag = Complex64::new(signed_power(t.cos(), m), 0.0);
    let cross = minus_i_power(m) * signed_power(t.sin(), m);
    BoundaryAmplitudes {
        t,
        f11: diag,
        f1n: cross,
        fn1: cross,
        fnn: diag,
    }
}

/// Closed-form boundary amplitudes of a PST chain of the given length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PstClosedForm {
    length: usize,
}

impl PstClosedForm {
    pub fn new(length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidChain(format!("PST closed form needs N >= 2, got {length}")));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> usize {
        self.length
    }
}

impl BoundaryProvider for PstClosedForm {
    fn boundary(&self, t: f64) -> BoundaryAmplitudes {
        pst_boundary_unchecked(self.length, t)
    }
}

/// Closed forms for PST chains, one diagonalization otherwise.
pub fn boundary_provider(spec: &ChainSpec) -> Result<Box<dyn BoundaryProvider + Send>> {
    spec.validate()?;
    Ok(match spec.scheme {
        CouplingScheme::Pst => Box::new(PstClosedForm::new(spec.length)?),
        _ => Box::new(SpectralPropagator::for_chain(spec)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn pst_couplings_n4() {
        let h = build_single_particle_hamiltonian(&ChainSpec::pst(4).unwrap()).unwrap();
        let expected = [3f64.sqrt(), 2.0, 3f64.sqrt()];
        for (i, e) in expected.iter().enumerate() {
            assert!((h[(i, i + 1)] - e).abs() < 1e-15);
            assert_eq!(h[(i, i + 1)], h[(i + 1, i)]);
            assert_eq!(h[(i, i)], 0.0);
        }
    }

    #[test]
    fn pst_couplings_n6() {
        let h = build_single_particle_hamiltonian(&ChainSpec::pst(6).unwrap()).unwrap();
        let expected = [5f64.sqrt(), 8f64.sqrt(), 3.0, 8f64.sqrt(), 5f64.sqrt()];
        for (i, e) in expected.iter().enumerate() {
            assert!((h[(i, i + 1)] - e).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_n3() {
        let h = build_single_particle_hamiltonian(&ChainSpec::uniform(3, 1.0).unwrap()).unwrap();
        assert_eq!(h[(0, 1)], 1.0);
        assert_eq!(h[(1, 2)], 1.0);
        assert_eq!(h[(0, 2)], 0.0);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(ChainSpec::pst(2), Err(Error::InvalidChain(_))));
        let wrong = ChainSpec {
            length: 5,
            scheme: CouplingScheme::Custom,
            couplings: vec![1.0; 3],
        };
        assert!(matches!(
            build_single_particle_hamiltonian(&wrong),
            Err(Error::LengthMismatch { .. })
        ));
        let short = ChainSpec {
            length: 2,
            scheme: CouplingScheme::Custom,
            couplings: vec![1.0],
        };
        assert!(build_single_particle_hamiltonian(&short).is_err());
        assert!(ChainSpec::custom(vec![1.0, f64::NAN]).is_err());
        let fake_pst = ChainSpec {
            length: 4,
            scheme: CouplingScheme::Pst,
            couplings: vec![1.0, 1.0, 1.0],
        };
        assert!(fake_pst.validate().is_err());
    }

    #[test]
    fn pst_spectrum_is_equispaced() {
        let prop = SpectralPropagator::for_chain(&ChainSpec::pst(6).unwrap()).unwrap();
        let gaps: Vec<f64> = prop.eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
        for g in &gaps {
            assert!((g - gaps[0]).abs() < 1e-9, "gaps {gaps:?}");
        }
    }

    #[test]
    fn two_site_spectrum() {
        let h = hopping_matrix(&[1.0]);
        let prop = diagonalize(&h).unwrap();
        assert!((prop.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((prop.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvectors_orthogonal_and_reconstruct() {
        let h = build_single_particle_hamiltonian(&ChainSpec::custom(vec![0.3, 1.7, 0.9, 2.2, 0.4]).unwrap()).unwrap();
        let prop = diagonalize(&h).unwrap();
        let v = &prop.eigenvectors;
        let n = prop.sites();
        assert!((v.transpose() * v - DMatrix::<f64>::identity(n, n)).norm() <= 1e-10);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(prop.eigenvalues.clone()));
        assert!((v * d * v.transpose() - h).norm() <= 1e-10);
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(diagonalize(&m).is_err());
    }

    #[test]
    fn amplitude_at_zero_time_is_identity() {
        let prop = SpectralPropagator::for_chain(&ChainSpec::pst(5).unwrap()).unwrap();
        for i in 1..=5 {
            for j in 1..=5 {
                let f = prop.amplitude(i, j, 0.0).unwrap();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!(close(f, Complex64::new(e, 0.0), 1e-12));
            }
        }
        assert!(matches!(prop.amplitude(0, 1, 0.0), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(prop.amplitude(1, 6, 0.0), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn rows_are_normalized() {
        let prop = SpectralPropagator::for_chain(&ChainSpec::uniform(7, 1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = rng.gen_range(0.0..10.0);
            let i = rng.gen_range(1..=7);
            let total: f64 = (1..=7).map(|j| prop.amplitude(i, j, t).unwrap().norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pst_transfer_at_half_pi() {
        let prop = SpectralPropagator::for_chain(&ChainSpec::pst(6).unwrap()).unwrap();
        assert!((prop.amplitude(1, 6, PI / 2.0).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_special_times() {
        for n in [2usize, 3, 6, 11] {
            let b = pst_boundary_closed_form(n, PI / 2.0).unwrap();
            assert!(close(b.f1n, minus_i_power((n - 1) as u64), 1e-14));
            assert!((b.f1n.norm() - 1.0).abs() < 1e-14);
            let z = pst_boundary_closed_form(n, 0.0).unwrap();
            assert!(close(z.f11, Complex64::new(1.0, 0.0), 0.0));
            assert!(close(z.f1n, Complex64::new(0.0, 0.0), 0.0));
        }
        assert!(pst_boundary_closed_form(1, 0.3).is_err());
    }

    #[test]
    fn closed_form_matches_spectral_n6() {
        let prop = SpectralPropagator::for_chain(&ChainSpec::pst(6).unwrap()).unwrap();
        let t = 0.525 * PI;
        let a = pst_boundary_closed_form(6, t).unwrap();
        let b = prop.boundary(t);
        assert!(close(a.f11, b.f11, 1e-10));
        assert!(close(a.f1n, b.f1n, 1e-10));
        assert!(close(a.fn1, b.fn1, 1e-10));
        assert!(close(a.fnn, b.fnn, 1e-10));
    }

    #[test]
    fn large_n_closed_form_is_finite() {
        let b = pst_boundary_closed_form(7500, 1.01 * PI / 2.0).unwrap();
        assert!(b.f1n.norm() > 0.0 && b.f1n.norm() < 1.0);
        assert!(b.f11.norm() == 0.0 || b.f11.norm() < 1e-300);
        let b = pst_boundary_closed_form(10_001, 0.5).unwrap();
        assert!(b.f1n.re.is_finite() && b.f11.re.is_finite());
    }
}
