//! Repeated charge, transport and drain cycles on two qubits.
//!
//! Both qubits have level splitting 1. Each cycle charges B with a local
//! unitary, moves ergotropy to C with an energy-conserving unitary and drains
//! C with another local unitary. Every recorded quantity is measured on the
//! evolving state; the closed forms live alongside for comparison.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::ergotropy::{ergotropy, total_hamiltonian, transport, Hamiltonian};
use crate::error::{Error, Result};
use crate::qmat::{self, tensor, CMatrix, Subsystem, C64};
use crate::sampling::EnergyConservingUnitary;
use crate::states::{BipartiteState, DensityMatrix};

/// Gains at or above `-GAIN_FLOOR` count as lossless.
pub const GAIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    /// Mixing angle of the initial state, in `(0, pi/4]`.
    pub kappa: f64,
    /// Rotation error of the transport unitary.
    pub eps: f64,
    pub iterations: u64,
}

impl CycleConfig {
    pub fn new(kappa: f64, eps: f64, iterations: u64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "eps",
                value: eps,
                domain: "[0, inf)",
            });
        }
        if iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be positive".into()));
        }
        Ok(CycleConfig {
            kappa,
            eps,
            iterations,
        })
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= FRAC_PI_4 + 1e-15) {
        return Err(Error::OutOfDomain {
            what: "kappa",
            value: kappa,
            domain: "(0, pi/4]",
        });
    }
    Ok(())
}

fn qubit_hamiltonian() -> Hamiltonian {
    Hamiltonian::diagonal(&[0.0, 1.0]).expect("valid energies")
}

/// SWAP with a rotation error `eps` inside the `{|01>, |10>}` block.
pub fn swap_with_error(eps: f64) -> Result<EnergyConservingUnitary> {
    let (s, c) = eps.sin_cos();
    let u = CMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, s, c, 0.0, //
            0.0, c, -s, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )?;
    let h = qubit_hamiltonian();
    EnergyConservingUnitary::new(u, &total_hamiltonian(&h, &h))
}

/// `cos(kappa)|00> + sin(kappa)|11>`.
pub fn initial_correlated_state(kappa: f64) -> Result<BipartiteState> {
    check_kappa(kappa)?;
    let (s, c) = kappa.sin_cos();
    let zero = C64::new(0.0, 0.0);
    let psi = [C64::new(c, 0.0), zero, zero, C64::new(s, 0.0)];
    BipartiteState::new(2, 2, DensityMatrix::pure(&psi)?)
}

/// Measured quantities of one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// 1-based cycle index.
    pub iteration: u64,
    /// Increase of B's ergotropy from charging.
    pub injected: f64,
    /// Increase of C's ergotropy during transport.
    pub received: f64,
    /// Ergotropy removed from C by draining.
    pub extracted: f64,
    /// Ergotropy gain of the transport step.
    pub gain: f64,
    pub gap_before: f64,
    pub gap_after: f64,
    /// Whether the closed forms for injection and extraction apply.
    pub in_regime: bool,
    /// State at the end of the cycle.
    pub state_after: BipartiteState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTrace {
    pub records: Vec<CycleRecord>,
}

impl CycleTrace {
    /// Lossless throughput: ergotropy received by C summed over cycles with
    /// nonnegative gain.
    pub fn e_plus_total(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.gain >= -GAIN_FLOOR)
            .map(|r| r.received)
            .sum()
    }

    /// Number of leading cycles with strictly positive gain.
    pub fn leading_gainful(&self) -> usize {
        self.records.iter().take_while(|r| r.gain > GAIN_FLOOR).count()
    }

    pub fn total_injected(&self, first_n: usize) -> f64 {
        self.records.iter().take(first_n).map(|r| r.injected).sum()
    }
}

fn local_ergotropies(s: &BipartiteState, h_b: &Hamiltonian, h_c: &Hamiltonian) -> Result<(f64, f64)> {
    Ok((
        ergotropy(&s.marginal(Subsystem::B), h_b)?,
        ergotropy(&s.marginal(Subsystem::C), h_c)?,
    ))
}

/// Runs `iterations` cycles from an arbitrary initial state.
///
/// All records are marked in regime; [`run_cycles`] sets the flags from the
/// closed-form windows.
pub fn run_protocol(
    initial: &BipartiteState,
    h_b: &Hamiltonian,
    h_c: &Hamiltonian,
    charge: &CMatrix,
    transport_u: &EnergyConservingUnitary,
    drain: &CMatrix,
    iterations: u64,
) -> Result<CycleTrace> {
    let charge_full = tensor(charge, &CMatrix::identity(initial.d_c()));
    let drain_full = tensor(&CMatrix::identity(initial.d_b()), drain);
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(iterations as usize);
    for iteration in 1..=iterations {
        let (erg_b_in, _) = local_ergotropies(&state, h_b, h_c)?;
        let charged = state.evolve(&charge_full)?;
        let (erg_b_charged, erg_c_charged) = local_ergotropies(&charged, h_b, h_c)?;
        let (outcome, moved) = transport(&charged, h_b, h_c, transport_u)?;
        let drained = moved.evolve(&drain_full)?;
        let (_, erg_c_drained) = local_ergotropies(&drained, h_b, h_c)?;
        let erg_c_moved = outcome.local_erg_after.1;
        records.push(CycleRecord {
            iteration,
            injected: erg_b_charged - erg_b_in,
            received: erg_c_moved - erg_c_charged,
            extracted: erg_c_moved - erg_c_drained,
            gain: outcome.gain,
            gap_before: outcome.gap_before,
            gap_after: outcome.gap_after,
            in_regime: true,
            state_after: drained.clone(),
        });
        state = drained;
    }
    Ok(CycleTrace { records })
}

/// The qubit protocol with `sigma_X` charging and draining.
pub fn run_cycles(cfg: &CycleConfig) -> Result<CycleTrace> {
    let cfg = CycleConfig::new(cfg.kappa, cfg.eps, cfg.iterations)?;
    let h = qubit_hamiltonian();
    let x = qmat::pauli_x();
    let mut trace = run_protocol(
        &initial_correlated_state(cfg.kappa)?,
        &h,
        &h,
        &x,
        &swap_with_error(cfg.eps)?,
        &x,
        cfg.iterations,
    )?;
    for r in &mut trace.records {
        r.in_regime = within_window(r.iteration, cfg.kappa, cfg.eps);
    }
    Ok(trace)
}

// iota <= kappa/eps + pi/(4 eps), written without dividing by eps.
fn within_window(iota: u64, kappa: f64, eps: f64) -> bool {
    iota as f64 * eps <= kappa + FRAC_PI_4
}

/// `2 sin(2 kappa + eps - 2 iota eps) sin(eps)`.
pub fn closed_form_gain(iota: u64, kappa: f64, eps: f64) -> Result<f64> {
    if iota == 0 {
        return Err(Error::InvalidArgument("iterations are counted from 1".into()));
    }
    let i = iota as f64;
    Ok(2.0 * (2.0 * kappa + eps - 2.0 * i * eps).sin() * eps.sin())
}

/// `floor(kappa/eps + 1/2)`; `None` for an error-free channel, which never
/// becomes lossy.
pub fn gainful_iterations(kappa: f64, eps: f64) -> Result<Option<u64>> {
    if !(eps >= 0.0) {
        return Err(Error::OutOfDomain {
            what: "eps",
            value: eps,
            domain: "[0, inf)",
        });
    }
    if eps == 0.0 {
        return Ok(None);
    }
    Ok(Some((kappa / eps + 0.5).floor().max(0.0) as u64))
}

/// Closed-form lossless throughput `sum_{iota=1}^{n} cos(2 kappa - 2 iota eps)`
/// with `n` from [`gainful_iterations`].
pub fn total_lossless(kappa: f64, eps: f64) -> Result<f64> {
    let n = gainful_iterations(kappa, eps)?.ok_or(Error::OutOfDomain {
        what: "eps",
        value: eps,
        domain: "(0, inf)",
    })?;
    Ok((1..=n).map(|i| (2.0 * kappa - 2.0 * i as f64 * eps).cos()).sum())
}

/// Ergotropy injected into B in cycle `iota`, `cos(2 kappa - 2 (iota - 1) eps)`.
pub fn injected_ergotropy(iota: u64, kappa: f64, eps: f64) -> Result<f64> {
    if iota == 0 {
        return Err(Error::InvalidArgument("iterations are counted from 1".into()));
    }
    if !within_window(iota - 1, kappa, eps) {
        return Err(Error::OutOfRegime { iteration: iota });
    }
    Ok((2.0 * kappa - 2.0 * (iota - 1) as f64 * eps).cos())
}

/// Ergotropy drained from C in cycle `iota`, `cos(2 kappa - 2 iota eps)`.
pub fn extracted_ergotropy(iota: u64, kappa: f64, eps: f64) -> Result<f64> {
    if iota == 0 {
        return Err(Error::InvalidArgument("iterations are counted from 1".into()));
    }
    if !within_window(iota, kappa, eps) {
        return Err(Error::OutOfRegime { iteration: iota });
    }
    Ok((2.0 * kappa - 2.0 * iota as f64 * eps).cos())
}
