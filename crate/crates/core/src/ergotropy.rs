//! Passive states, ergotropy and the ergotropic gap.
//!
//! The ergotropy of `rho` under `H` is `tr(rho H) - sum_k lambda_k E_k`, with
//! the eigenvalues of `rho` in descending order paired against the energies in
//! ascending order. No optimization is involved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{self, commutator, hermitian_eig, CMatrix, HermitianEig};
use crate::sampling::EnergyConservingUnitary;
use crate::states::{local_entropy_change, BipartiteState, DensityMatrix};

/// Largest tolerated `max |[U, H_BC]|` in [`ergotropy_gain`].
pub const ENERGY_CONSERVATION_TOL: f64 = 1e-8;

const NORMALIZATION_TOL: f64 = 1e-9;

/// A Hermitian operator together with its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: CMatrix,
    eig: HermitianEig,
}

impl Hamiltonian {
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let eig = hermitian_eig(m)?;
        Ok(Hamiltonian {
            matrix: m.hermitian_part(),
            eig,
        })
    }

    /// `diag(energies)` in the computational basis.
    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::EmptyInput("Hamiltonian::diagonal"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("energies must be finite".into()));
        }
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
        Ok(Hamiltonian {
            matrix: CMatrix::from_real_diag(energies),
            eig: HermitianEig {
                values: order.iter().map(|&k| energies[k]).collect(),
                vectors: qmat::permutation_matrix(&order),
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Energies in ascending order.
    pub fn energies(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn eig(&self) -> &HermitianEig {
        &self.eig
    }

    /// Operator norm, the largest `|E_k|`.
    pub fn operator_norm(&self) -> f64 {
        self.energies().iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
    }

    fn check_dim(&self, d: usize, op: &'static str) -> Result<()> {
        if self.dim() != d {
            return Err(Error::shape(op, d, self.dim()));
        }
        Ok(())
    }
}

/// `H_B ⊗ 1 + 1 ⊗ H_C`, built from the factor eigenbases.
pub fn total_hamiltonian(h_b: &Hamiltonian, h_c: &Hamiltonian) -> Hamiltonian {
    let (d_b, d_c) = (h_b.dim(), h_c.dim());
    let (eb, ec) = (h_b.energies(), h_c.energies());
    let mut pairs: Vec<(usize, usize)> = (0..d_b).flat_map(|i| (0..d_c).map(move |k| (i, k))).collect();
    pairs.sort_by(|&(i, k), &(j, l)| (eb[i] + ec[k]).total_cmp(&(eb[j] + ec[l])));
    let vb = &h_b.eig.vectors;
    let vc = &h_c.eig.vectors;
    let vectors = CMatrix::from_fn(d_b * d_c, d_b * d_c, |row, col| {
        let (i, k) = pairs[col];
        vb[(row / d_c, i)] * vc[(row % d_c, k)]
    });
    Hamiltonian {
        matrix: qmat::tensor_sum(h_b.matrix(), h_c.matrix()),
        eig: HermitianEig {
            values: pairs.iter().map(|&(i, k)| eb[i] + ec[k]).collect(),
            vectors,
        },
    }
}

/// Gibbs state `exp(-beta H) / Z`.
pub fn gibbs_state(h: &Hamiltonian, beta: f64) -> Result<DensityMatrix> {
    let e0 = h.energies()[0];
    let weights: Vec<f64> = h.energies().iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    DensityMatrix::validate(&h.eig.reconstruct_with(&probs))
}

/// `sum_k lambda_k E_k` with `lambda` sorted descending and `E` ascending.
pub fn passive_energy(spectrum: &[f64], energies: &[f64]) -> f64 {
    let mut lam = spectrum.to_vec();
    lam.sort_by(|a, b| b.total_cmp(a));
    let mut en = energies.to_vec();
    en.sort_by(f64::total_cmp);
    lam.iter().zip(&en).map(|(l, e)| l * e).sum()
}

/// The passive state of `rho` for `h`.
///
/// For degenerate spectra the passive state is not unique; this returns the
/// one aligned with the deterministic eigenbasis of `h`.
pub fn passive_state(rho: &DensityMatrix, h: &Hamiltonian) -> Result<DensityMatrix> {
    h.check_dim(rho.dim(), "passive_state")?;
    DensityMatrix::validate(&h.eig.reconstruct_with(rho.spectrum()))
}

pub fn ergotropy(rho: &DensityMatrix, h: &Hamiltonian) -> Result<f64> {
    h.check_dim(rho.dim(), "ergotropy")?;
    Ok(rho.expectation(h.matrix())? - passive_energy(rho.spectrum(), h.energies()))
}

/// Closed-form ergotropy of a qubit with level splitting `energy_gap`.
pub fn ergotropy_qubit(rho00: f64, rho01: qmat::C64, energy_gap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho00) {
        return Err(Error::OutOfDomain {
            what: "rho00",
            value: rho00,
            domain: "[0, 1]",
        });
    }
    let rho11 = 1.0 - rho00;
    if rho01.norm_sqr() > rho00 * rho11 + 1e-12 {
        return Err(Error::NegativeEigenvalue {
            value: rho00 * rho11 - rho01.norm_sqr(),
        });
    }
    if !energy_gap.is_finite() {
        return Err(Error::InvalidArgument("energy gap must be finite".into()));
    }
    let root = (0.25 - rho00 * rho11 + rho01.norm_sqr()).max(0.0).sqrt();
    Ok(energy_gap * (0.5 - rho00 + root))
}

/// `E(rho_BC) - E(rho_B) - E(rho_C)` with `H_BC = H_B + H_C`.
pub fn ergotropic_gap(s: &BipartiteState, h_b: &Hamiltonian, h_c: &Hamiltonian) -> Result<f64> {
    h_b.check_dim(s.d_b(), "ergotropic_gap")?;
    h_c.check_dim(s.d_c(), "ergotropic_gap")?;
    let h_bc = total_hamiltonian(h_b, h_c);
    let (rb, rc) = s.marginals();
    Ok(ergotropy(s.state(), &h_bc)? - ergotropy(&rb, h_b)? - ergotropy(&rc, h_c)?)
}

/// The ergotropic gap from spectra alone.
///
/// Inputs are sorted internally, so any order is accepted.
pub fn gap_spectral(
    local_b: &[f64],
    local_c: &[f64],
    e_b: &[f64],
    e_c: &[f64],
    global: &[f64],
) -> Result<f64> {
    if local_b.len() != e_b.len() {
        return Err(Error::shape("gap_spectral", local_b.len(), e_b.len()));
    }
    if local_c.len() != e_c.len() {
        return Err(Error::shape("gap_spectral", local_c.len(), e_c.len()));
    }
    if global.len() != local_b.len() * local_c.len() {
        return Err(Error::shape(
            "gap_spectral",
            local_b.len() * local_c.len(),
            global.len(),
        ));
    }
    for (name, spec) in [("local_b", local_b), ("local_c", local_c), ("global", global)] {
        let total: f64 = spec.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization(format!("{name} sums to {total}")));
        }
    }
    let combined: Vec<f64> = e_b.iter().flat_map(|b| e_c.iter().map(move |c| b + c)).collect();
    Ok(passive_energy(local_b, e_b) + passive_energy(local_c, e_c) - passive_energy(global, &combined))
}

/// What one energy-conserving transport step did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportOutcome {
    /// Increase of the summed local ergotropies.
    pub gain: f64,
    pub gap_before: f64,
    pub gap_after: f64,
    /// Change of mutual information, in nats.
    pub delta_mi: f64,
    pub local_erg_before: (f64, f64),
    pub local_erg_after: (f64, f64),
}

/// Applies `u` to `s` and reports the change of local ergotropies.
pub fn ergotropy_gain(
    s: &BipartiteState,
    h_b: &Hamiltonian,
    h_c: &Hamiltonian,
    u: &EnergyConservingUnitary,
) -> Result<TransportOutcome> {
    Ok(transport(s, h_b, h_c, u)?.0)
}

pub(crate) fn transport(
    s: &BipartiteState,
    h_b: &Hamiltonian,
    h_c: &Hamiltonian,
    u: &EnergyConservingUnitary,
) -> Result<(TransportOutcome, BipartiteState)> {
    h_b.check_dim(s.d_b(), "ergotropy_gain")?;
    h_c.check_dim(s.d_c(), "ergotropy_gain")?;
    let h_bc = total_hamiltonian(h_b, h_c);
    h_bc.check_dim(u.dim(), "ergotropy_gain")?;
    let comm = commutator(u.matrix(), h_bc.matrix()).max_abs();
    if comm > ENERGY_CONSERVATION_TOL {
        return Err(Error::NotEnergyConserving { commutator: comm });
    }
    let after = s.evolve(u.matrix())?;

    let local = |state: &BipartiteState| -> Result<(f64, f64)> {
        let (rb, rc) = state.marginals();
        Ok((ergotropy(&rb, h_b)?, ergotropy(&rc, h_c)?))
    };
    let before_local = local(s)?;
    let after_local = local(&after)?;
    let global_before = ergotropy(s.state(), &h_bc)?;
    let global_after = ergotropy(after.state(), &h_bc)?;

    let outcome = TransportOutcome {
        gain: (after_local.0 + after_local.1) - (before_local.0 + before_local.1),
        gap_before: global_before - before_local.0 - before_local.1,
        gap_after: global_after - after_local.0 - after_local.1,
        delta_mi: local_entropy_change(s, &after),
        local_erg_before: before_local,
        local_erg_after: after_local,
    };
    Ok((outcome, after))
}
