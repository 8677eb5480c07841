//! Density matrices, entropies and the partial-transpose test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{self, hermitian_eig, partial_trace, CMatrix, Subsystem, HERMITIAN_TOL};
use crate::sampling::EnergyConservingUnitary;

/// Largest accepted `|tr(rho) - 1|` before renormalization.
pub const TRACE_TOL: f64 = 1e-8;
/// Eigenvalues in `[-NEGATIVITY_TOL, 0)` are clipped to zero.
pub const NEGATIVITY_TOL: f64 = 1e-10;
/// Default tolerance for [`is_ppt`].
pub const PPT_TOL: f64 = 1e-9;

const ENTROPY_CUTOFF: f64 = 1e-14;

/// A validated quantum state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct DensityMatrix {
    mat: CMatrix,
    spectrum: Vec<f64>,
}

impl DensityMatrix {
    /// Validates `m` as a density matrix.
    ///
    /// Eigenvalues slightly below zero (down to `-1e-10`) are clipped and the
    /// trace is renormalized to one.
    pub fn validate(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::shape(
                "DensityMatrix::validate",
                "square matrix",
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
        let deviation = m.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = m.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceDeviation { trace });
        }
        let eig = hermitian_eig(m)?;
        let min = eig.values[0];
        if min < -NEGATIVITY_TOL {
            return Err(Error::NegativeEigenvalue { value: min });
        }
        let clipped: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let mat = if min < 0.0 {
            eig.reconstruct_with(&clipped).scale(1.0 / total)
        } else {
            m.hermitian_part().scale(1.0 / trace)
        };
        let spectrum = clipped.iter().rev().map(|x| x / total).collect();
        Ok(DensityMatrix { mat, spectrum })
    }

    /// The pure state `|psi><psi|` for a normalized ket.
    pub fn pure(psi: &[qmat::C64]) -> Result<Self> {
        DensityMatrix::validate(&CMatrix::outer(psi))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: CMatrix::identity(d).scale(1.0 / d as f64),
            spectrum: vec![1.0 / d as f64; d],
        }
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        DensityMatrix::validate(&CMatrix::from_real_diag(populations))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `tr(rho h)`.
    pub fn expectation(&self, h: &CMatrix) -> Result<f64> {
        if h.rows() != self.dim() || h.cols() != self.dim() {
            return Err(Error::shape(
                "expectation",
                format!("{0}x{0}", self.dim()),
                format!("{}x{}", h.rows(), h.cols()),
            ));
        }
        let d = self.dim();
        let mut sum = 0.0;
        for i in 0..d {
            for j in 0..d {
                sum += (self.mat[(i, j)] * h[(j, i)]).re;
            }
        }
        Ok(sum)
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }
}

impl TryFrom<CMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        DensityMatrix::validate(&m)
    }
}

impl From<DensityMatrix> for CMatrix {
    fn from(rho: DensityMatrix) -> Self {
        rho.mat
    }
}

/// `-sum lambda ln lambda` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(rho.spectrum())
}

pub fn entropy_of_spectrum(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .filter(|&&p| p >= ENTROPY_CUTOFF)
        .map(|&p| -p * p.ln())
        .sum()
}

/// A state on `C^{d_b} ⊗ C^{d_c}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBipartite")]
pub struct BipartiteState {
    d_b: usize,
    d_c: usize,
    state: DensityMatrix,
}

#[derive(Deserialize)]
struct RawBipartite {
    d_b: usize,
    d_c: usize,
    state: DensityMatrix,
}

impl TryFrom<RawBipartite> for BipartiteState {
    type Error = Error;

    fn try_from(raw: RawBipartite) -> Result<Self> {
        BipartiteState::new(raw.d_b, raw.d_c, raw.state)
    }
}

impl BipartiteState {
    pub fn new(d_b: usize, d_c: usize, state: DensityMatrix) -> Result<Self> {
        if d_b == 0 || d_c == 0 || state.dim() != d_b * d_c {
            return Err(Error::shape(
                "BipartiteState::new",
                format!("dimension {d_b}*{d_c}"),
                state.dim(),
            ));
        }
        Ok(BipartiteState { d_b, d_c, state })
    }

    pub fn from_matrix(d_b: usize, d_c: usize, m: &CMatrix) -> Result<Self> {
        BipartiteState::new(d_b, d_c, DensityMatrix::validate(m)?)
    }

    pub fn product(rho_b: &DensityMatrix, rho_c: &DensityMatrix) -> Result<Self> {
        let m = qmat::tensor(rho_b.matrix(), rho_c.matrix());
        BipartiteState::from_matrix(rho_b.dim(), rho_c.dim(), &m)
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn matrix(&self) -> &CMatrix {
        self.state.matrix()
    }

    /// Reduced state of one factor.
    pub fn marginal(&self, keep: Subsystem) -> DensityMatrix {
        let m = partial_trace(self.matrix(), self.d_b, self.d_c, keep)
            .expect("dimensions checked at construction");
        DensityMatrix::validate(&m).expect("marginal of a valid state is valid")
    }

    /// `(rho_B, rho_C)`.
    pub fn marginals(&self) -> (DensityMatrix, DensityMatrix) {
        (self.marginal(Subsystem::B), self.marginal(Subsystem::C))
    }

    /// The state `u rho u^dagger`.
    pub fn evolve(&self, u: &CMatrix) -> Result<Self> {
        let m = qmat::conjugate_by(u, self.matrix())?;
        BipartiteState::from_matrix(self.d_b, self.d_c, &m)
    }

    pub(crate) fn evolve_unchecked(&self, u: &CMatrix) -> Result<Self> {
        let m = qmat::conjugate_unchecked(u, self.matrix());
        BipartiteState::from_matrix(self.d_b, self.d_c, &m)
    }
}

/// `I = S(rho_B) + S(rho_C) - S(rho_BC)`.
pub fn mutual_information(s: &BipartiteState) -> f64 {
    let (rb, rc) = s.marginals();
    von_neumann_entropy(&rb) + von_neumann_entropy(&rc) - von_neumann_entropy(s.state())
}

/// Change of mutual information under `u`, from the marginal entropies alone.
pub fn mutual_information_change(s: &BipartiteState, u: &EnergyConservingUnitary) -> Result<f64> {
    let dim = s.d_b() * s.d_c();
    if u.dim() != dim {
        return Err(Error::shape("mutual_information_change", dim, u.dim()));
    }
    let after = s.evolve_unchecked(u.matrix())?;
    Ok(local_entropy_change(s, &after))
}

pub(crate) fn local_entropy_change(before: &BipartiteState, after: &BipartiteState) -> f64 {
    let (rb, rc) = before.marginals();
    let (tb, tc) = after.marginals();
    von_neumann_entropy(&tb) + von_neumann_entropy(&tc)
        - von_neumann_entropy(&rb)
        - von_neumann_entropy(&rc)
}

/// Transpose on the C factor.
pub fn partial_transpose(s: &BipartiteState) -> CMatrix {
    let (d_b, d_c) = (s.d_b, s.d_c);
    let m = s.matrix();
    CMatrix::from_fn(d_b * d_c, d_b * d_c, |row, col| {
        let (i, k) = (row / d_c, row % d_c);
        let (j, l) = (col / d_c, col % d_c);
        m[(i * d_c + l, j * d_c + k)]
    })
}

/// Smallest eigenvalue of the partial transpose.
pub fn min_partial_transpose_eigenvalue(s: &BipartiteState) -> f64 {
    hermitian_eig(&partial_transpose(s))
        .expect("partial transpose of a Hermitian matrix is Hermitian")
        .values[0]
}

/// Peres test: whether the partial transpose is positive within `tol`.
pub fn is_ppt(s: &BipartiteState, tol: f64) -> bool {
    min_partial_transpose_eigenvalue(s) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::C64;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn bell() -> BipartiteState {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        BipartiteState::new(2, 2, DensityMatrix::pure(&[s, z, z, s]).unwrap()).unwrap()
    }

    // (1/2)|00><00| + (1/2)|Psi+><Psi+|
    fn half_psi_plus() -> BipartiteState {
        let h = 0.5;
        let q = 0.25;
        let m = CMatrix::from_real(
            4,
            4,
            &[h, 0.0, 0.0, 0.0, 0.0, q, q, 0.0, 0.0, q, q, 0.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        BipartiteState::from_matrix(2, 2, &m).unwrap()
    }

    #[test]
    fn validate_examples() {
        let mixed = DensityMatrix::validate(&CMatrix::identity(2).scale(0.5)).unwrap();
        assert_eq!(mixed.spectrum(), &[0.5, 0.5]);
        let ground = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(ground.spectrum(), &[1.0, 0.0]);
        assert!(matches!(
            DensityMatrix::diagonal(&[1.5, -0.5]),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn validate_distinguishes_errors() {
        assert!(matches!(
            DensityMatrix::diagonal(&[0.7, 0.4]),
            Err(Error::TraceDeviation { .. })
        ));
        let skew = CMatrix::from_real(2, 2, &[0.5, 0.1, 0.0, 0.5]).unwrap();
        assert!(matches!(
            DensityMatrix::validate(&skew),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn validate_clips_tiny_negative_eigenvalues() {
        let rho = DensityMatrix::diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        assert_eq!(rho.spectrum()[1], 0.0);
        assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(von_neumann_entropy(&DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap()), 0.0);
        assert_abs_diff_eq!(
            von_neumann_entropy(&DensityMatrix::maximally_mixed(5)),
            5f64.ln(),
            epsilon = 1e-14
        );
        let h34 = 0.75 * (4.0f64 / 3.0).ln() + 0.25 * 4f64.ln();
        assert_abs_diff_eq!(
            von_neumann_entropy(&DensityMatrix::diagonal(&[0.75, 0.25]).unwrap()),
            h34,
            epsilon = 1e-14
        );
    }

    #[test]
    fn mutual_information_examples() {
        let rb = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let rc = DensityMatrix::diagonal(&[0.2, 0.5, 0.3]).unwrap();
        let prod = BipartiteState::product(&rb, &rc).unwrap();
        assert_abs_diff_eq!(mutual_information(&prod), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_information(&bell()), 2.0 * LN_2, epsilon = 1e-12);

        // Marginals diag(3/4, 1/4); global spectrum (1/2, 1/2, 0, 0).
        let mix = half_psi_plus();
        let h34 = 0.75 * (4.0f64 / 3.0).ln() + 0.25 * 4f64.ln();
        assert_abs_diff_eq!(mutual_information(&mix), 2.0 * h34 - LN_2, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_examples() {
        let mixed = BipartiteState::from_matrix(2, 2, &CMatrix::identity(4).scale(0.25)).unwrap();
        assert_eq!(partial_transpose(&mixed), CMatrix::identity(4).scale(0.25));
        assert_abs_diff_eq!(min_partial_transpose_eigenvalue(&bell()), -0.5, epsilon = 1e-12);

        let rb = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let rc = DensityMatrix::validate(
            &CMatrix::new(
                2,
                2,
                vec![C64::new(0.6, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.4, 0.0)],
            )
            .unwrap(),
        )
        .unwrap();
        let prod = BipartiteState::product(&rb, &rc).unwrap();
        let expected = qmat::tensor(rb.matrix(), &rc.matrix().transpose());
        assert!((&partial_transpose(&prod) - &expected).max_abs() < 1e-15);
        assert!(is_ppt(&prod, PPT_TOL));
    }

    #[test]
    fn ppt_detects_entanglement() {
        assert!(!is_ppt(&bell(), PPT_TOL));
        // Eigenvalues of the partial transpose are (1 ± sqrt 2)/4 and 1/4 twice.
        let mix = half_psi_plus();
        assert_abs_diff_eq!(
            min_partial_transpose_eigenvalue(&mix),
            (1.0 - 2f64.sqrt()) / 4.0,
            epsilon = 1e-12
        );
        assert!(!is_ppt(&mix, PPT_TOL));
    }

    #[test]
    fn bipartite_rejects_wrong_dimension() {
        assert!(BipartiteState::new(2, 2, DensityMatrix::maximally_mixed(3)).is_err());
    }
}
