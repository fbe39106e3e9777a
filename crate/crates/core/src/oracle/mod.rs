//! Brute-force simulation of the repeated-use protocol in the many-body space.
//!
//! Each use attaches a sender qubit at site 1 and a blank receiver at site N,
//! evolves the whole chain, and hands the middle sites on to the next use. The
//! Hilbert space is stored sector by sector, so cost follows
//! `sum_k binomial(N, k)^2` for the sectors actually reached rather than `4^N`.
//!
//! Earlier senders are averaged by inserting the maximally mixed state, which
//! is exact because the fidelity is linear in each earlier sender. The last
//! sender is averaged over the six Pauli eigenstates, an exact quadrature for
//! a quantity quadratic in the Bloch vector.

mod elements;
mod basis;
mod hamiltonian;
mod state;

use std::sync::Arc;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::chain::ChainSpec;
use crate::{Error, Result};

pub use elements::{element_fidelity, channel_sector_elements, ChannelElements};
pub use basis::SectorBasis;
pub use hamiltonian::{build_many_body_hamiltonian, ManyBodyModel, ManyBodyPropagator, DEFAULT_MAX_SITES};
pub use state::{attach_edges, evolve, receiver_state, swap_out_in, trace_out_edges, ManyBodyState};

/// Default limit on the number of uses simulated.
pub const DEFAULT_MAX_USES: usize = 6;

/// Single-qubit pure state `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// From a unit Bloch vector.
    pub fn from_vector(x: f64, y: f64, z: f64) -> Self {
        Self {
            theta: z.clamp(-1.0, 1.0).acos(),
            phi: y.atan2(x),
        }
    }

    pub fn ket(&self) -> [Complex64; 2] {
        let h = 0.5 * self.theta;
        [
            Complex64::new(h.cos(), 0.0),
            Complex64::from_polar(h.sin(), self.phi),
        ]
    }

    pub fn density(&self) -> Matrix2<Complex64> {
        let k = self.ket();
        Matrix2::from_fn(|a, b| k[a] * k[b].conj())
    }
}

/// How the senders of the simulated uses are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SenderPolicy {
    /// Every sender Haar-averaged independently.
    HaarAverage,
    /// One fixed pure state per use.
    Fixed(Vec<BlochAngles>),
}

/// Quadrature used for the Haar average of the last sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    PauliSix,
    Sic,
}

impl Design {
    pub fn states(self) -> Vec<BlochAngles> {
        match self {
            Design::PauliSix => [
                (0.0, 0.0, 1.0),
                (0.0, 0.0, -1.0),
                (1.0, 0.0, 0.0),
                (-1.0, 0.0, 0.0),
                (0.0, 1.0, 0.0),
                (0.0, -1.0, 0.0),
            ]
            .iter()
            .map(|&(x, y, z)| BlochAngles::from_vector(x, y, z))
            .collect(),
            Design::Sic => {
                let a = 2.0 * 2f64.sqrt() / 3.0;
                let b = 2f64.sqrt() / 3.0;
                let c = (2.0f64 / 3.0).sqrt();
                [
                    (0.0, 0.0, 1.0),
                    (a, 0.0, -1.0 / 3.0),
                    (-b, c, -1.0 / 3.0),
                    (-b, -c, -1.0 / 3.0),
                ]
                .iter()
                .map(|&(x, y, z)| BlochAngles::from_vector(x, y, z))
                .collect()
            }
        }
    }
}

/// Readout intervals, sender choice and Hamiltonian of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule {
    pub times: Vec<f64>,
    pub sender_policy: SenderPolicy,
    pub model: ManyBodyModel,
}

impl ProtocolSchedule {
    pub fn haar(spec: &ChainSpec, times: Vec<f64>) -> Result<Self> {
        Ok(Self {
            times,
            sender_policy: SenderPolicy::HaarAverage,
            model: ManyBodyModel::xx(spec)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one use".into()));
        }
        if let Some(t) = self.times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::InvalidParameter(format!("readout time {t}")));
        }
        if let SenderPolicy::Fixed(angles) = &self.sender_policy {
            if angles.len() != self.times.len() {
                return Err(Error::LengthMismatch {
                    what: "sender angles",
                    expected: self.times.len(),
                    found: angles.len(),
                });
            }
        }
        if self.model.sites() < 3 {
            return Err(Error::InvalidChain("the oracle needs a channel between sender and receiver".into()));
        }
        Ok(())
    }
}

/// Size limits. Block storage grows as `sum_k binomial(N, k)^2` over reached sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleGuards {
    pub max_sites: usize,
    pub max_uses: usize,
}

impl Default for OracleGuards {
    fn default() -> Self {
        Self {
            max_sites: DEFAULT_MAX_SITES,
            max_uses: DEFAULT_MAX_USES,
        }
    }
}

/// Prepared propagator and bases for up to `uses` uses of one chain.
#[derive(Debug, Clone)]
pub struct Oracle {
    full: Arc<SectorBasis>,
    channel: Arc<SectorBasis>,
    prop: ManyBodyPropagator,
    uses: usize,
}

impl Oracle {
    pub fn new(model: &ManyBodyModel, uses: usize) -> Result<Self> {
        Self::with_guards(model, uses, OracleGuards::default())
    }

    pub fn with_guards(model: &ManyBodyModel, uses: usize, guards: OracleGuards) -> Result<Self> {
        hamiltonian::check_sites(model.sites(), guards.max_sites)?;
        if uses > guards.max_uses {
            return Err(Error::Guard(format!(
                "many-body oracle limited to n <= {}, got {uses}",
                guards.max_uses
            )));
        }
        let n = model.sites();
        if n < 3 {
            return Err(Error::InvalidChain("the oracle needs a channel between sender and receiver".into()));
        }
        let full = Arc::new(SectorBasis::new(n));
        let channel = Arc::new(SectorBasis::new(n - 2));
        // n uses put at most n excitations on the chain
        let prop = ManyBodyPropagator::new(model, full.clone(), uses.max(1))?;
        Ok(Self {
            full,
            channel,
            prop,
            uses: uses.max(1),
        })
    }

    pub fn propagator(&self) -> &ManyBodyPropagator {
        &self.prop
    }

    pub fn uses(&self) -> usize {
        self.uses
    }

    pub fn sites(&self) -> usize {
        self.full.sites()
    }

    pub fn fresh_channel(&self) -> ManyBodyState {
        ManyBodyState::vacuum(self.channel.clone())
    }

    /// Attaches `sender` and a blank receiver, then evolves for `t`.
    pub fn run_use(&self, channel: &ManyBodyState, sender: &Matrix2<Complex64>, t: f64) -> Result<ManyBodyState> {
        let full = attach_edges(channel, sender, &self.full)?;
        evolve(&full, t, &self.prop)
    }

    /// Channel handed to the next use.
    pub fn next_channel(&self, channel: &ManyBodyState, sender: &Matrix2<Complex64>, t: f64) -> Result<ManyBodyState> {
        trace_out_edges(&self.run_use(channel, sender, t)?, &self.channel)
    }

    /// Channel after uses with the given senders and readout intervals.
    pub fn channel_after(&self, times: &[f64], senders: &[Matrix2<Complex64>]) -> Result<ManyBodyState> {
        if times.len() != senders.len() {
            return Err(Error::LengthMismatch {
                what: "senders",
                expected: times.len(),
                found: senders.len(),
            });
        }
        if times.len() >= self.uses {
            return Err(Error::InvalidParameter(format!(
                "oracle prepared for {} uses, {} previous uses requested",
                self.uses,
                times.len()
            )));
        }
        let mut ch = self.fresh_channel();
        for (t, s) in times.iter().zip(senders) {
            ch = self.next_channel(&ch, s, *t)?;
        }
        Ok(ch)
    }

    /// Channel after Haar-averaged uses.
    pub fn haar_channel(&self, times: &[f64]) -> Result<ManyBodyState> {
        let mixed = Matrix2::from_diagonal(&nalgebra::Vector2::new(
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
        ));
        self.channel_after(times, &vec![mixed; times.len()])
    }

    /// Receiver state for an arbitrary (possibly non-Hermitian) sender operator.
    pub fn receiver_output(&self, channel: &ManyBodyState, sender: &Matrix2<Complex64>, t: f64) -> Result<Matrix2<Complex64>> {
        Ok(receiver_state(&self.run_use(channel, sender, t)?))
    }

    /// Receiver coherence `<1|rho_R|0>` produced by the sender operator `|1><0|`.
    pub fn coherence_factor(&self, channel: &ManyBodyState, t: f64) -> Result<Complex64> {
        let mut op = Matrix2::from_element(Complex64::new(0.0, 0.0));
        op[(1, 0)] = Complex64::new(1.0, 0.0);
        Ok(self.receiver_output(channel, &op, t)?[(1, 0)])
    }

    /// Fidelity of `state` after the use, with the receiver's phase rotation
    /// chosen to align the transferred coherence.
    pub fn state_fidelity(&self, channel: &ManyBodyState, state: &BlochAngles, t: f64) -> Result<f64> {
        let phase = phase_correction(self.coherence_factor(channel, t)?);
        let rho = self.receiver_output(channel, &state.density(), t)?;
        Ok(fidelity_with_correction(&rho, state, phase))
    }

    /// Average over a 2-design of the last sender.
    pub fn average_fidelity(&self, channel: &ManyBodyState, t: f64, design: Design) -> Result<f64> {
        let phase = phase_correction(self.coherence_factor(channel, t)?);
        let states = design.states();
        let mut total = 0.0;
        for s in &states {
            let rho = self.receiver_output(channel, &s.density(), t)?;
            total += fidelity_with_correction(&rho, s, phase);
        }
        Ok(total / states.len() as f64)
    }

    /// Runs a schedule whose model matches this oracle.
    pub fn fidelity(&self, schedule: &ProtocolSchedule) -> Result<f64> {
        schedule.validate()?;
        let (&t_n, previous) = schedule.times.split_last().expect("validated");
        match &schedule.sender_policy {
            SenderPolicy::HaarAverage => {
                let ch = self.haar_channel(previous)?;
                self.average_fidelity(&ch, t_n, Design::PauliSix)
            }
            SenderPolicy::Fixed(angles) => {
                let senders: Vec<_> = angles[..previous.len()].iter().map(BlochAngles::density).collect();
                let ch = self.channel_after(previous, &senders)?;
                self.state_fidelity(&ch, &angles[previous.len()], t_n)
            }
        }
    }
}

/// `F_n` of a schedule by direct simulation, with the default guards.
///
/// Under the Haar policy this is the average fidelity; under a fixed policy it
/// is the fidelity of the last fixed state.
pub fn oracle_fidelity(schedule: &ProtocolSchedule) -> Result<f64> {
    schedule.validate()?;
    Oracle::new(&schedule.model, schedule.times.len())?.fidelity(schedule)
}

fn phase_correction(c: Complex64) -> Complex64 {
    if c.norm() > 1e-300 {
        (c / c.norm()).conj()
    } else {
        Complex64::new(1.0, 0.0)
    }
}

fn fidelity_with_correction(rho: &Matrix2<Complex64>, state: &BlochAngles, phase: Complex64) -> f64 {
    let mut r = *rho;
    r[(1, 0)] *= phase;
    r[(0, 1)] *= phase.conj();
    let k = state.ket();
    let mut f = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            f += k[a].conj() * r[(a, b)] * k[b];
        }
    }
    f.re
}
