//! Single-qubit maps realised by one use of the chain.
//!
//! Density matrices are vectorized as `(rho00, rho01, rho10, rho11)` and a map is
//! the 4x4 matrix acting on that vector. The first use is amplitude damping with
//! amplitude `f_1^N(t_1)`; the second factorizes into a generalized amplitude
//! damping step after a phase-damping step, `Phi_2 = Phi_GAD(gamma, p) Phi_PD(lambda)`.

use argmin::core::{CostFunction, Executor};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

use crate::chain::BoundaryProvider;
use crate::oracle::{BlochAngles, Oracle, ProtocolSchedule, SenderPolicy};
use crate::{linalg, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Linear map on vectorized single-qubit operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator4(pub Matrix4<Complex64>);

impl Superoperator4 {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    /// Builds the matrix from the map's action on `|i><j|`.
    pub fn from_action(mut action: impl FnMut(&Matrix2<Complex64>) -> Result<Matrix2<Complex64>>) -> Result<Self> {
        let mut m = Matrix4::from_element(ZERO);
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = Matrix2::from_element(ZERO);
                unit[(i, j)] = ONE;
                let out = action(&unit)?;
                for a in 0..2 {
                    for b in 0..2 {
                        m[(2 * a + b, 2 * i + j)] = out[(a, b)];
                    }
                }
            }
        }
        Ok(Self(m))
    }

    pub fn apply(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let v = nalgebra::Vector4::new(rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)]);
        let w = self.0 * v;
        Matrix2::new(w[0], w[1], w[2], w[3])
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Superoperator4) -> Superoperator4 {
        Superoperator4(self.0 * first.0)
    }

    /// Largest deviation of `Tr Phi(|i><j|)` from `delta_ij`.
    pub fn trace_defect(&self) -> f64 {
        let m = &self.0;
        [(0, ONE), (1, ZERO), (2, ZERO), (3, ONE)]
            .iter()
            .map(|&(c, want)| (m[(0, c)] + m[(3, c)] - want).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `Phi(X)^dagger = Phi(X^dagger)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let swap = |k: usize| [0, 2, 1, 3][k];
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((m[(r, c)] - m[(swap(r), swap(c))].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise difference.
    pub fn max_difference(&self, other: &Superoperator4) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Unnormalized Choi matrix `sum_ij |i><j| (x) Phi(|i><j|)`, input factor first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix(pub Matrix4<Complex64>);

impl ChoiMatrix {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let m = DMatrix::from_iterator(4, 4, self.0.iter().copied());
        let h = (&m + m.adjoint()) * real(0.5);
        linalg::hermitian_eigenvalues(&h)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Complete positivity up to `tol` (pass a small negative number).
    pub fn is_positive(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= tol)
    }

    /// Trace over the output factor; the identity for trace-preserving maps.
    pub fn output_partial_trace(&self) -> Matrix2<Complex64> {
        Matrix2::from_fn(|i, j| self.0[(2 * i, 2 * j)] + self.0[(2 * i + 1, 2 * j + 1)])
    }
}

pub fn choi(map: &Superoperator4) -> ChoiMatrix {
    let s = &map.0;
    ChoiMatrix(Matrix4::from_fn(|r, c| {
        let (i, a) = (r / 2, r % 2);
        let (j, b) = (c / 2, c % 2);
        s[(2 * a + b, 2 * i + j)]
    }))
}

/// `B_2 = f_1^N(t_1 + t_2) - f_1^1(t_1) f_1^N(t_2) - f_1^N(t_1) f_N^N(t_2)`,
/// the amplitude for an excitation left in the channel by use 1 to reach N during use 2.
pub fn b_term(t2: f64, t1: f64, provider: &dyn BoundaryProvider) -> Complex64 {
    let a = provider.boundary(t1);
    let b = provider.boundary(t2);
    let total = provider.boundary(t1 + t2);
    total.f1n - a.f11 * b.f1n - a.f1n * b.fnn
}

/// Generalized amplitude damping with a phase on the transferred coherence.
///
/// `p` is the weight of the branch damping towards `|0>`: `p = 1` is plain
/// amplitude damping, `p = 0` damping towards `|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadParams {
    pub gamma: f64,
    pub p: f64,
    /// Coherence factor `f`, `|f|^2 = 1 - gamma`. Kept as is because
    /// `sqrt(1 - gamma)` loses everything once `|f|` drops below 1e-8.
    pub transfer: Complex64,
}

const PARAM_SLACK: f64 = 1e-12;

fn unit_interval(name: &str, x: f64) -> Result<f64> {
    if !(-PARAM_SLACK..=1.0 + PARAM_SLACK).contains(&x) {
        return Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `num / den` read as a probability. Rounding in `num` is amplified by
/// `1 / den`, so the slack grows accordingly.
fn unit_ratio(name: &str, num: f64, den: f64) -> Result<f64> {
    let x = num / den;
    let slack = PARAM_SLACK + 1e-13 / den;
    if !x.is_finite() || x < -slack || x > 1.0 + slack {
        return Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

fn unit_phase(z: Complex64) -> Complex64 {
    if z.norm() > 1e-300 {
        z / z.norm()
    } else {
        ONE
    }
}

impl GadParams {
    pub fn new(gamma: f64, p: f64) -> Result<Self> {
        Ok(Self {
            gamma: unit_interval("gamma", gamma)?,
            p: unit_interval("p", p)?,
            transfer: real((1.0 - gamma).max(0.0).sqrt()),
        })
    }

    /// `gamma = 1 - |f|^2` and `p gamma = 1 - |B|^2/2 - |f|^2`. With no damping
    /// `p` is undetermined and set to 1.
    pub fn from_amplitudes(transfer: Complex64, b: Complex64) -> Result<Self> {
        let f2 = transfer.norm_sqr();
        let gamma = unit_interval("gamma", 1.0 - f2)?;
        let damp_to_ground = 1.0 - 0.5 * b.norm_sqr() - f2;
        let p = if gamma < 1e-14 {
            1.0
        } else {
            unit_ratio("p", damp_to_ground, gamma)?
        };
        Ok(Self { gamma, p, transfer })
    }
}

/// Phase damping parameter `lambda = 1 - A_1^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdParam {
    pub lambda: f64,
}

impl PdParam {
    pub fn from_memory(a1: f64) -> Result<Self> {
        let a1 = unit_interval("A1", a1)?;
        Ok(Self {
            lambda: 1.0 - a1 * a1,
        })
    }

    pub fn memory(&self) -> f64 {
        (1.0 - self.lambda).max(0.0).sqrt()
    }
}

pub fn gad_superoperator(params: &GadParams) -> Superoperator4 {
    let GadParams { gamma, p, .. } = *params;
    let f = params.transfer;
    let mut m = Matrix4::from_element(ZERO);
    m[(0, 0)] = real(1.0 - (1.0 - p) * gamma);
    m[(0, 3)] = real(p * gamma);
    m[(1, 1)] = f.conj();
    m[(2, 2)] = f;
    m[(3, 0)] = real((1.0 - p) * gamma);
    m[(3, 3)] = real(1.0 - p * gamma);
    Superoperator4(m)
}

/// `diag(1, A_1, A_1, 1)`.
pub fn pd_superoperator(a1: f64) -> Result<Superoperator4> {
    let a1 = unit_interval("A1", a1)?;
    Ok(Superoperator4(Matrix4::from_diagonal(&nalgebra::Vector4::new(
        ONE,
        real(a1),
        real(a1),
        ONE,
    ))))
}

/// Amplitude damping with amplitude `f_1^N(t)`.
pub fn first_use_map(t: f64, provider: &dyn BoundaryProvider) -> Result<Superoperator4> {
    let f = provider.boundary(t).f1n;
    Ok(gad_superoperator(&GadParams::from_amplitudes(f, ZERO)?))
}

/// Second-use parameters `(gamma_2, p_2)` and `lambda_2`.
pub fn second_use_params(t1: f64, t2: f64, provider: &dyn BoundaryProvider) -> Result<(GadParams, PdParam)> {
    let first = provider.boundary(t1);
    let a1 = first.f11.norm_sqr() + first.f1n.norm_sqr();
    let gad = GadParams::from_amplitudes(provider.boundary(t2).f1n, b_term(t2, t1, provider))?;
    Ok((gad, PdParam::from_memory(a1)?))
}

/// `Phi_GAD(gamma_2, p_2) Phi_PD(lambda_2)` with the first sender averaged.
pub fn second_use_map(t1: f64, t2: f64, provider: &dyn BoundaryProvider) -> Result<Superoperator4> {
    let (gad, pd) = second_use_params(t1, t2, provider)?;
    Ok(gad_superoperator(&gad).compose(&pd_superoperator(pd.memory())?))
}

/// Reads `(gamma, p)` and `lambda` back off a map of the second-use form.
pub fn decompose_second_use(map: &Superoperator4) -> Result<(GadParams, PdParam)> {
    let m = &map.0;
    let f2 = (m[(3, 3)] - m[(3, 0)]).re;
    let gamma = unit_interval("gamma", 1.0 - f2)?;
    let coherence = m[(2, 2)];
    let modulus = f2.max(0.0).sqrt();
    let a1 = if modulus > 1e-300 { coherence.norm() / modulus } else { 0.0 };
    let p = if gamma < 1e-14 { 1.0 } else { unit_ratio("p", m[(0, 3)].re, gamma)? };
    Ok((
        GadParams {
            gamma,
            p,
            transfer: unit_phase(coherence) * modulus,
        },
        PdParam::from_memory(a1.min(1.0))?,
    ))
}

/// Tomography of use `n = schedule.times.len()` from the four inputs
/// `|0>, |1>, |+>, |+i>`. Earlier senders follow the schedule's policy; a fixed
/// policy's last entry is ignored.
pub fn reconstruct_map(schedule: &ProtocolSchedule, oracle: &Oracle) -> Result<Superoperator4> {
    schedule.validate()?;
    let (&t_n, previous) = schedule.times.split_last().expect("validated");
    let channel = match &schedule.sender_policy {
        SenderPolicy::HaarAverage => oracle.haar_channel(previous)?,
        SenderPolicy::Fixed(angles) => {
            let senders: Vec<_> = angles[..previous.len()].iter().map(BlochAngles::density).collect();
            oracle.channel_after(previous, &senders)?
        }
    };
    let out = |s: &BlochAngles| oracle.receiver_output(&channel, &s.density(), t_n);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let zero = out(&BlochAngles::new(0.0, 0.0))?;
    let one = out(&BlochAngles::new(std::f64::consts::PI, 0.0))?;
    let plus = out(&BlochAngles::new(half_pi, 0.0))?;
    let plus_i = out(&BlochAngles::new(half_pi, half_pi))?;
    let p = plus * real(2.0) - zero - one;
    let q = plus_i * real(2.0) - zero - one;
    let i = Complex64::new(0.0, 1.0);
    // p = X + Y, q = -iX + iY with X = Phi(|0><1|), Y = Phi(|1><0|)
    let x = (p + q * i) * real(0.5);
    let y = (p - q * i) * real(0.5);
    Superoperator4::from_action(|unit| {
        Ok(match (unit[(0, 0)], unit[(0, 1)], unit[(1, 0)]) {
            (z, _, _) if z == ONE => zero,
            (_, z, _) if z == ONE => x,
            (_, _, z) if z == ONE => y,
            _ => one,
        })
    })
}

/// `S(Phi(rho)) - S((Phi (x) id)(psi))` in bits, `psi` purifying `rho`.
pub fn coherent_information(map: &Superoperator4, rho: &Matrix2<Complex64>) -> Result<f64> {
    let dm = DMatrix::from_iterator(2, 2, rho.iter().copied());
    let (vals, vecs) = linalg::hermitian_eigen(&((&dm + dm.adjoint()) * real(0.5)))?;
    let sqrt_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        2,
        vals.iter().map(|&v| real(v.max(0.0).sqrt())),
    ));
    let root = &vecs * sqrt_diag * vecs.adjoint();
    let mut joint = DMatrix::from_element(4, 4, ZERO);
    for k in 0..2 {
        for l in 0..2 {
            let input = Matrix2::from_fn(|a, b| root[(a, k)] * root[(l, b)]);
            let out = map.apply(&input);
            for a in 0..2 {
                for b in 0..2 {
                    joint[(2 * a + k, 2 * b + l)] = out[(a, b)];
                }
            }
        }
    }
    let output = map.apply(rho);
    let output = DMatrix::from_iterator(2, 2, output.iter().copied());
    Ok(linalg::von_neumann_entropy(&output)? - linalg::von_neumann_entropy(&joint)?)
}

/// Input set searched when maximizing coherent information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputSearch {
    /// Diagonal inputs `diag(1 - q, q)`, sufficient for phase-covariant maps.
    #[default]
    Diagonal,
    /// Whole Bloch ball, used to check the diagonal restriction.
    FullBloch,
}

const SCAN_POINTS: usize = 200;
const GOLDEN_TOL: f64 = 1e-9;

struct NegativeDiagonal<'a>(&'a Superoperator4);

impl CostFunction for NegativeDiagonal<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, q: &f64) -> std::result::Result<f64, argmin::core::Error> {
        let q = q.clamp(0.0, 1.0);
        let rho = Matrix2::new(real(1.0 - q), ZERO, ZERO, real(q));
        coherent_information(self.0, &rho)
            .map(|v| -v)
            .map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

struct NegativeBloch<'a>(&'a Superoperator4);

fn bloch_state(v: &[f64]) -> Matrix2<Complex64> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let s = if r > 1.0 { 1.0 / r } else { 1.0 };
    let (x, y, z) = (v[0] * s, v[1] * s, v[2] * s);
    Matrix2::new(
        real(0.5 * (1.0 + z)),
        Complex64::new(0.5 * x, -0.5 * y),
        Complex64::new(0.5 * x, 0.5 * y),
        real(0.5 * (1.0 - z)),
    )
}

impl CostFunction for NegativeBloch<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, v: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        coherent_information(self.0, &bloch_state(v))
            .map(|v| -v)
            .map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

fn optimizer_error(e: argmin::core::Error) -> Error {
    Error::Optimizer(e.to_string())
}

/// `max_rho I_c(rho, map)`, not clamped.
pub fn max_coherent_information(map: &Superoperator4, search: InputSearch) -> Result<f64> {
    match search {
        InputSearch::Diagonal => {
            let obj = NegativeDiagonal(map);
            let grid: Vec<f64> = (0..=SCAN_POINTS).map(|i| i as f64 / SCAN_POINTS as f64).collect();
            let mut best = (0usize, f64::INFINITY);
            for (i, q) in grid.iter().enumerate() {
                let c = obj.cost(q).map_err(optimizer_error)?;
                if c < best.1 {
                    best = (i, c);
                }
            }
            let lo = grid[best.0.saturating_sub(1)];
            let hi = grid[(best.0 + 1).min(SCAN_POINTS)];
            let solver = GoldenSectionSearch::new(lo, hi)
                .and_then(|s| s.with_tolerance(GOLDEN_TOL))
                .map_err(optimizer_error)?;
            let res = Executor::new(obj, solver)
                .configure(|s| s.param(grid[best.0]).max_iters(500))
                .run()
                .map_err(optimizer_error)?;
            Ok(-res.state.best_cost.min(best.1))
        }
        InputSearch::FullBloch => {
            let starts = [
                [0.0, 0.0, 0.0],
                [0.3, -0.2, 0.5],
                [-0.4, 0.1, -0.5],
                [0.1, 0.6, 0.2],
            ];
            let mut best = f64::INFINITY;
            for start in starts {
                let mut simplex = vec![start.to_vec()];
                for k in 0..3 {
                    let mut v = start.to_vec();
                    v[k] += 0.25;
                    simplex.push(v);
                }
                let solver = NelderMead::new(simplex)
                    .with_sd_tolerance(1e-13)
                    .map_err(optimizer_error)?;
                let res = Executor::new(NegativeBloch(map), solver)
                    .configure(|s| s.max_iters(4000))
                    .run()
                    .map_err(optimizer_error)?;
                best = best.min(res.state.best_cost);
            }
            Ok(-best)
        }
    }
}

/// Coherent information of `Phi_GAD(gamma, p)`, clamped at 0.
pub fn coherent_information_gad(gamma: f64, p: f64) -> Result<f64> {
    coherent_information_gad_with(gamma, p, InputSearch::Diagonal)
}

pub fn coherent_information_gad_with(gamma: f64, p: f64, search: InputSearch) -> Result<f64> {
    let map = gad_superoperator(&GadParams::new(gamma, p)?);
    Ok(max_coherent_information(&map, search)?.max(0.0))
}

/// `p I_c[AD(gamma, 0)] + (1 - p) I_c[AD(gamma, 1)]`, and 0 once `gamma >= 1/2`
/// where amplitude damping is antidegradable.
pub fn capacity_upper_bound(gamma: f64, p: f64) -> Result<f64> {
    let gamma = unit_interval("gamma", gamma)?;
    let p = unit_interval("p", p)?;
    if gamma >= 0.5 {
        return Ok(0.0);
    }
    Ok(p * coherent_information_gad(gamma, 0.0)? + (1.0 - p) * coherent_information_gad(gamma, 1.0)?)
}
