//! Small dense helpers shared by the oracle, channel and entanglement modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub const SOLVER_EPS: f64 = f64::EPSILON;
pub const SOLVER_MAX_ITER: usize = 10_000;

/// Eigen-decomposition of a real symmetric matrix with eigenvalues sorted ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), SOLVER_EPS, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::EigenSolver(format!("no convergence for {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues of a complex Hermitian matrix, ascending. Only the Hermitian part is used.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(herm, SOLVER_EPS, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::EigenSolver(format!("no convergence for {n}x{n} Hermitian matrix")))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigen-decomposition of a complex Hermitian matrix (values ascending, vectors as columns).
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(herm, SOLVER_EPS, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::EigenSolver(format!("no convergence for {n}x{n} Hermitian matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Shannon entropy in bits of a list of probabilities; tiny negatives from rounding count as zero.
pub fn entropy_bits(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    Ok(entropy_bits(&hermitian_eigenvalues(rho)?))
}

/// Frobenius norm of a complex matrix difference.
pub fn frobenius_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Binomial coefficient for the small sizes used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 0), 1);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(14, 7), 3432);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn eigen_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let recon = &vecs * DMatrix::from_diagonal(&vals.clone().into()) * vecs.transpose();
        assert!((recon - m).norm() < 1e-13);
    }

    #[test]
    fn entropy_of_maximally_mixed_qubit() {
        let rho = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0).abs() < 1e-14);
    }
}
