//! Sending half of a Bell pair through the chain.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::{boundary_provider, ChainSpec};
use crate::channel::{first_use_map, reconstruct_map, second_use_map, Superoperator4};
use crate::oracle::{ManyBodyModel, Oracle, ProtocolSchedule};
use crate::{linalg, Error, Result};

const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-9;

/// Default number of grid points on `(0, pi)`.
pub const DEFAULT_GRID_POINTS: usize = 600;

/// Concurrence below this counts as zero when looking for dark windows.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Density matrix of the kept qubit `s'` and a transmitted qubit, index `2 s' + x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState(Matrix4<Complex64>);

impl TwoQubitState {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let s = Self(m);
        if (s.0.trace() - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!("two-qubit trace {}", s.0.trace())));
        }
        if (m - m.adjoint()).iter().any(|z| z.norm() > TRACE_TOL) {
            return Err(Error::InvalidParameter("two-qubit state not Hermitian".into()));
        }
        if s.min_eigenvalue()? < PSD_TOL {
            return Err(Error::InvalidParameter("two-qubit state not positive".into()));
        }
        Ok(s)
    }

    /// `(|00> + |11>)/sqrt 2`.
    pub fn bell() -> Self {
        let mut m = Matrix4::from_element(Complex64::new(0.0, 0.0));
        for r in [0, 3] {
            for c in [0, 3] {
                m[(r, c)] = Complex64::new(0.5, 0.0);
            }
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&dense(&self.0))?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }
}

fn dense(m: &Matrix4<Complex64>) -> DMatrix<Complex64> {
    let d = DMatrix::from_iterator(4, 4, m.iter().copied());
    (&d + d.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `(1 (x) map)(state)`.
pub fn apply_local_map(state: &TwoQubitState, map: &Superoperator4) -> Result<TwoQubitState> {
    if map.trace_defect() > TRACE_TOL {
        return Err(Error::InvalidParameter(format!(
            "map is not trace preserving (defect {:.3e})",
            map.trace_defect()
        )));
    }
    let s = map.matrix();
    let rho = &state.0;
    let out = Matrix4::from_fn(|r, c| {
        let (a, x) = (r / 2, r % 2);
        let (b, y) = (c / 2, c % 2);
        let mut v = Complex64::new(0.0, 0.0);
        for xi in 0..2 {
            for yi in 0..2 {
                v += s[(2 * x + y, 2 * xi + yi)] * rho[(2 * a + xi, 2 * b + yi)];
            }
        }
        v
    });
    TwoQubitState::new(out)
}

/// Eigenvalues below this are treated as exact zeros of `rho`.
const RANK_CUTOFF: f64 = 1e-14;

/// Wootters concurrence. The `lambda_i` are the singular values of
/// `sqrt(rho) (Y (x) Y) sqrt(rho)*`, which avoids a second square root of
/// near-zero eigenvalues.
pub fn concurrence(state: &TwoQubitState) -> Result<f64> {
    match x_state_concurrence(&state.0) {
        Some(c) => Ok(c),
        None => generic_concurrence(&state.0),
    }
}

fn generic_concurrence(m: &Matrix4<Complex64>) -> Result<f64> {
    let rho = dense(m);
    let (vals, vecs) = linalg::hermitian_eigen(&rho)?;
    let root = &vecs
        * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            vals.iter().map(|&v| {
                let v = if v < RANK_CUTOFF { 0.0 } else { v };
                Complex64::new(v.sqrt(), 0.0)
            }),
        ))
        * vecs.adjoint();
    // sigma_y (x) sigma_y is real: antidiag(-1, 1, 1, -1)
    let mut yy = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
    for (r, sign) in [(0usize, -1.0), (1, 1.0), (2, 1.0), (3, -1.0)] {
        yy[(r, 3 - r)] = Complex64::new(sign, 0.0);
    }
    let a = &root * yy * root.map(|z| z.conj());
    let mut l: Vec<f64> = a.singular_values().iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// Closed form for states supported on the diagonal and anti-diagonal only:
/// `2 max(0, |r03| - sqrt(r11 r22), |r12| - sqrt(r00 r33))`. Keeps tiny
/// concurrences that the generic route loses to rounding.
fn x_state_concurrence(m: &Matrix4<Complex64>) -> Option<f64> {
    for r in 0..4 {
        for c in 0..4 {
            if r != c && r + c != 3 && m[(r, c)] != Complex64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    let d = |i: usize| m[(i, i)].re.max(0.0);
    let outer = m[(0, 3)].norm() - (d(1) * d(2)).sqrt();
    let inner = m[(1, 2)].norm() - (d(0) * d(3)).sqrt();
    Some((2.0 * outer.max(inner)).clamp(0.0, 1.0))
}

/// Concurrence after one use at each grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub t: f64,
    pub concurrence: f64,
}

/// `n` uses with equal readout intervals `t`; the Bell half rides on the last.
///
/// Uses 1 and 2 go through the analytic maps, later uses through oracle tomography.
pub fn distribution_profile(n: usize, spec: &ChainSpec, grid: &[f64]) -> Result<Vec<ProfilePoint>> {
    match n {
        0 => Err(Error::InvalidParameter("use index starts at 1".into())),
        1 | 2 => {
            let provider = boundary_provider(spec)?;
            grid.par_iter()
                .map(|&t| {
                    let map = if n == 1 {
                        first_use_map(t, provider.as_ref())?
                    } else {
                        second_use_map(t, t, provider.as_ref())?
                    };
                    point(t, &map)
                })
                .collect()
        }
        _ => distribution_profile_tomography(n, spec, grid),
    }
}

/// Same profile with every map reconstructed from the many-body oracle.
pub fn distribution_profile_tomography(n: usize, spec: &ChainSpec, grid: &[f64]) -> Result<Vec<ProfilePoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("use index starts at 1".into()));
    }
    let oracle = Oracle::new(&ManyBodyModel::xx(spec)?, n)?;
    grid.par_iter()
        .map(|&t| {
            let schedule = ProtocolSchedule::haar(spec, vec![t; n])?;
            point(t, &reconstruct_map(&schedule, &oracle)?)
        })
        .collect()
}

fn point(t: f64, map: &Superoperator4) -> Result<ProfilePoint> {
    let state = apply_local_map(&TwoQubitState::bell(), map)?;
    Ok(ProfilePoint {
        t,
        concurrence: concurrence(&state)?,
    })
}

/// `points` uniform interior points of `(0, pi)`.
pub fn default_grid(points: usize) -> Vec<f64> {
    let step = std::f64::consts::PI / (points + 1) as f64;
    (1..=points).map(|i| i as f64 * step).collect()
}

/// Maximal runs of consecutive grid points with concurrence below
/// [`ZERO_THRESHOLD`], as `(first t, last t)`.
pub fn zero_windows(profile: &[ProfilePoint]) -> Vec<(f64, f64)> {
    zero_windows_below(profile, ZERO_THRESHOLD)
}

pub fn zero_windows_below(profile: &[ProfilePoint], threshold: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    let mut last = 0.0;
    for p in profile {
        if p.concurrence < threshold {
            start.get_or_insert(p.t);
            last = p.t;
        } else if let Some(s) = start.take() {
            out.push((s, last));
        }
    }
    if let Some(s) = start {
        out.push((s, last));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{BoundaryProvider, PstClosedForm};
    use crate::channel::{pd_superoperator, GadParams, gad_superoperator};
    use nalgebra::Matrix2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn werner(v: f64) -> TwoQubitState {
        let bell = TwoQubitState::bell().0;
        TwoQubitState::new(bell * c(v) + Matrix4::identity() * c((1.0 - v) / 4.0)).unwrap()
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> Matrix2<Complex64> {
        let (a, b, g) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        let e = |x: f64| Complex64::from_polar(1.0, x);
        Matrix2::new(
            e(b) * a.cos(),
            e(g) * a.sin(),
            -e(-g) * a.sin(),
            e(-b) * a.cos(),
        )
    }

    #[test]
    fn x_state_form_matches_generic_route() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            let sum: f64 = d.iter().sum();
            let d: Vec<f64> = d.iter().map(|x| x / sum).collect();
            let mut m = Matrix4::from_element(Complex64::new(0.0, 0.0));
            for i in 0..4 {
                m[(i, i)] = Complex64::new(d[i], 0.0);
            }
            let outer = Complex64::from_polar(rng.gen_range(0.0..1.0) * (d[0] * d[3]).sqrt(), rng.gen_range(0.0..6.3));
            let inner = Complex64::from_polar(rng.gen_range(0.0..1.0) * (d[1] * d[2]).sqrt(), rng.gen_range(0.0..6.3));
            m[(0, 3)] = outer;
            m[(3, 0)] = outer.conj();
            m[(1, 2)] = inner;
            m[(2, 1)] = inner.conj();
            let x = x_state_concurrence(&m).unwrap();
            let g = generic_concurrence(&m).unwrap();
            assert!((x - g).abs() < 1e-9, "{x} vs {g}");
        }
    }

    #[test]
    fn known_values() {
        assert!((concurrence(&TwoQubitState::bell()).unwrap() - 1.0).abs() < 1e-12);
        let mut product = Matrix4::from_element(c(0.0));
        product[(1, 1)] = c(1.0);
        assert!(concurrence(&TwoQubitState::new(product).unwrap()).unwrap() < 1e-12);
        assert!(concurrence(&werner(1.0 / 3.0)).unwrap() < 1e-12);
        assert!(concurrence(&werner(0.2)).unwrap() < 1e-12);
        for v in [0.4, 0.5, 0.9, 1.0] {
            let expected = ((3.0 * v - 1.0) / 2.0f64).max(0.0);
            assert!((concurrence(&werner(v)).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn local_maps() {
        let id = apply_local_map(&TwoQubitState::bell(), &Superoperator4::identity()).unwrap();
        assert_eq!(id, TwoQubitState::bell());
        let dephased = apply_local_map(&TwoQubitState::bell(), &pd_superoperator(0.0).unwrap()).unwrap();
        assert!(concurrence(&dephased).unwrap() < 1e-12);
        for f in [0.0, 0.3, 0.77, 1.0] {
            let ad = gad_superoperator(&GadParams::from_amplitudes(c(f), c(0.0)).unwrap());
            let s = apply_local_map(&TwoQubitState::bell(), &ad).unwrap();
            assert!((concurrence(&s).unwrap() - f).abs() < 1e-10);
        }
        let mut broken = Superoperator4::identity();
        broken.0[(0, 0)] = c(0.5);
        assert!(apply_local_map(&TwoQubitState::bell(), &broken).is_err());
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = PstClosedForm::new(6).unwrap();
        for _ in 0..20 {
            let (t1, t2) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
            let s = apply_local_map(&TwoQubitState::bell(), &second_use_map(t1, t2, &p).unwrap()).unwrap();
            let (u, v) = (random_unitary(&mut rng), random_unitary(&mut rng));
            let uv = u.kronecker(&v);
            let rotated = TwoQubitState::new(uv * s.0 * uv.adjoint()).unwrap();
            let a = concurrence(&s).unwrap();
            assert!((0.0..=1.0).contains(&a));
            assert!((a - concurrence(&rotated).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn first_use_profile_is_transfer_modulus() {
        let spec = ChainSpec::pst(10).unwrap();
        let grid = default_grid(120);
        let p = PstClosedForm::new(10).unwrap();
        for pt in distribution_profile(1, &spec, &grid).unwrap() {
            assert!((pt.concurrence - p.boundary(pt.t).f1n.norm()).abs() < 1e-10);
        }
        let peak = distribution_profile(1, &spec, &[FRAC_PI_2]).unwrap();
        assert!((peak[0].concurrence - 1.0).abs() < 1e-10);
    }

    #[test]
    fn second_use_has_dark_windows() {
        let spec = ChainSpec::pst(10).unwrap();
        let profile = distribution_profile(2, &spec, &default_grid(DEFAULT_GRID_POINTS)).unwrap();
        let windows = zero_windows(&profile);
        assert!(windows.iter().any(|(a, b)| b - a > 0.1), "{windows:?}");
    }

    #[test]
    fn analytic_and_tomographic_profiles_agree() {
        let grid = default_grid(15);
        for n in [4usize, 6] {
            let spec = ChainSpec::pst(n).unwrap();
            let a = distribution_profile(2, &spec, &grid).unwrap();
            let b = distribution_profile_tomography(2, &spec, &grid).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x.concurrence - y.concurrence).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_window_detection() {
        let pts: Vec<ProfilePoint> = [0.5, 0.0, 0.0, 0.2, 0.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| ProfilePoint {
                t: i as f64,
                concurrence: c,
            })
            .collect();
        assert_eq!(zero_windows(&pts), vec![(1.0, 2.0), (4.0, 4.0)]);
    }
}
