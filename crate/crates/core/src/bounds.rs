//! Analytic bounds: the two-qubit propeller, Levy concentration widths and
//! marginal-spectrum inequalities.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::ergotropy::gap_spectral;
use crate::error::{Error, Result};
use crate::states::BipartiteState;

const LN_4: f64 = 2.0 * LN_2;
const DOMAIN_SLACK: f64 = 1e-12;
const QMP_TOL: f64 = 1e-9;
const SPECTRUM_TOL: f64 = 1e-10;

/// Coefficient of `ln d / d` in the mutual-information concentration width.
pub const LEVY_MI_COEFF: f64 = 65.951;
/// Coefficient of `max(d_b, d_c) / (d_b d_c)` in the gain concentration
/// width for rescaled coarse-grained Hamiltonians.
pub const LEVY_GAIN_COEFF: f64 = 50.133;
/// Numerical factor in the Lipschitz constant of the von Neumann entropy.
pub const ENTROPY_LIPSCHITZ_COEFF: f64 = 2.322;
/// Universal constant in Levy's lemma.
pub const LEVY_ALPHA: f64 = 1.0 / (25.0 * PI);

/// `h(1/5)/ln 2 - 2/5`, the offset of the linear propeller bounds.
pub fn linear_bound_offset() -> f64 {
    binary_entropy(0.2).expect("in range") / LN_2 - 0.4
}

/// The mutual-information change below which the two-qubit gain is
/// guaranteed nonnegative, `-2 ln(5/4)`.
pub fn turning_point() -> f64 {
    -2.0 * (5.0f64 / 4.0).ln()
}

fn check_range(what: &'static str, x: f64, lo: f64, hi: f64, domain: &'static str) -> Result<f64> {
    if !(x >= lo - DOMAIN_SLACK && x <= hi + DOMAIN_SLACK) {
        return Err(Error::OutOfDomain { what, value: x, domain });
    }
    Ok(x.clamp(lo, hi))
}

/// Binary entropy in nats.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let x = check_range("binary_entropy argument", x, 0.0, 1.0, "[0, 1]")?;
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Inverse of the binary entropy on its decreasing branch `[1/2, 1]`.
pub fn inv_binary_entropy_upper(y: f64) -> Result<f64> {
    let y = check_range("inverse binary entropy argument", y, 0.0, LN_2, "[0, ln 2]")?;
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    for _ in 0..100 {
        if hi - lo <= 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)? > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The boundary curves of the two-qubit propeller, each on its own domain.
pub fn gamma(i: u8, x: f64) -> Result<f64> {
    let hinv = inv_binary_entropy_upper;
    match i {
        1 => {
            let x = check_range("gamma_1 argument", x, -LN_4, 0.0, "[-ln 4, 0]")?;
            Ok(2.0 * hinv((LN_4 + x) / 2.0)? - 1.0)
        }
        2 => {
            let x = check_range("gamma_2 argument", x, -LN_2, LN_2, "[-ln 2, ln 2]")?;
            Ok(2.0 * hinv((LN_2 + x) / 2.0)? - 1.5)
        }
        3 => {
            let x = check_range("gamma_3 argument", x, 0.0, LN_4, "[0, ln 4]")?;
            Ok(2.0 * hinv(x / 2.0)? - 2.0)
        }
        4 => {
            let x = check_range("gamma_4 argument", x, -LN_4, 0.0, "[-ln 4, 0]")?;
            Ok(2.0 - 2.0 * hinv(-x / 2.0)?)
        }
        5 => {
            let x = check_range("gamma_5 argument", x, -LN_2, LN_2, "[-ln 2, ln 2]")?;
            Ok(1.5 - 2.0 * hinv((LN_2 - x) / 2.0)?)
        }
        6 => {
            let x = check_range("gamma_6 argument", x, 0.0, LN_4, "[0, ln 4]")?;
            Ok(1.0 - 2.0 * hinv((LN_4 - x) / 2.0)?)
        }
        _ => Err(Error::InvalidArgument(format!("gamma index must be 1..=6, got {i}"))),
    }
}

/// Upper and lower bounds on the two-qubit gain at one mutual-information
/// change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropellerEnvelope {
    pub delta_i: f64,
    pub gamma_upper: f64,
    pub gamma_lower: f64,
    pub linear_upper: f64,
    pub linear_lower: f64,
}

impl PropellerEnvelope {
    /// Whether `gain` lies between the curved bounds within `tol`.
    pub fn contains(&self, gain: f64, tol: f64) -> bool {
        gain >= self.gamma_lower - tol && gain <= self.gamma_upper + tol
    }
}

pub fn envelope(delta_i: f64) -> Result<PropellerEnvelope> {
    let x = check_range("mutual information change", delta_i, -LN_4, LN_4, "[-ln 4, ln 4]")?;
    let (upper, lower) = if x < -LN_2 {
        (gamma(1, x)?, gamma(4, x)?)
    } else if x < 0.0 {
        (gamma(1, x)?.max(gamma(2, x)?), gamma(4, x)?.min(gamma(5, x)?))
    } else if x < LN_2 {
        (gamma(2, x)?.max(gamma(3, x)?), gamma(5, x)?.min(gamma(6, x)?))
    } else {
        (gamma(3, x)?, gamma(6, x)?)
    };
    let c = linear_bound_offset();
    Ok(PropellerEnvelope {
        delta_i: x,
        gamma_upper: upper,
        gamma_lower: lower,
        linear_upper: -x / LN_4 + c,
        linear_lower: -x / LN_4 - c,
    })
}

fn require_dims(d_b: usize, d_c: usize) -> Result<()> {
    if d_b < 2 || d_c < 2 {
        return Err(Error::InvalidArgument(format!(
            "concentration bounds need d_b, d_c >= 2, got {d_b}x{d_c}"
        )));
    }
    Ok(())
}

/// Lipschitz constant of the von Neumann entropy on states of dimension `d`.
pub fn lipschitz_entropy(d: usize) -> f64 {
    ENTROPY_LIPSCHITZ_COEFF * PI / (2.0 * LN_2) * (d as f64).ln()
}

/// Lipschitz constant of the mutual-information change, `2 [L_S(d_b) + L_S(d_c)]`.
pub fn lipschitz_mi(d_b: usize, d_c: usize) -> f64 {
    ENTROPY_LIPSCHITZ_COEFF * PI / LN_2 * ((d_b * d_c) as f64).ln()
}

/// Levy width `L / sqrt(alpha N)` on the sphere of real dimension `N = 2 d^2`.
pub fn levy_width_from_lipschitz(lipschitz: f64, d_bc: usize) -> f64 {
    let n = 2.0 * (d_bc as f64).powi(2);
    lipschitz / (LEVY_ALPHA * n).sqrt()
}

/// Concentration width of the mutual-information change, `65.951 ln d / d`.
pub fn levy_width_mi(d_b: usize, d_c: usize) -> Result<f64> {
    require_dims(d_b, d_c)?;
    let d = (d_b * d_c) as f64;
    Ok(LEVY_MI_COEFF * d.ln() / d)
}

/// Concentration width of the rescaled gain, `50.133 max(d_b, d_c) / (d_b d_c)`.
pub fn levy_width_gain(d_b: usize, d_c: usize) -> Result<f64> {
    require_dims(d_b, d_c)?;
    Ok(LEVY_GAIN_COEFF * d_b.max(d_c) as f64 / (d_b * d_c) as f64)
}

/// Gain width for arbitrary Hamiltonians, `sqrt(200 pi) (|H_B| + |H_C|) / d`.
pub fn levy_width_gain_general(norm_b: f64, norm_c: f64, d_bc: usize) -> Result<f64> {
    if d_bc == 0 || !(norm_b >= 0.0 && norm_c >= 0.0) {
        return Err(Error::InvalidArgument(
            "norms must be nonnegative and the dimension positive".into(),
        ));
    }
    Ok((200.0 * PI).sqrt() * (norm_b + norm_c) / d_bc as f64)
}

/// Levy bound on `P[|f - <f>| > ell]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTail {
    /// `3 exp(-ell^2 / width^2)`, possibly above 1.
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub clamped: f64,
}

pub fn levy_tail(ell: f64, width: f64) -> Result<LevyTail> {
    if !(ell >= 0.0) {
        return Err(Error::OutOfDomain {
            what: "ell",
            value: ell,
            domain: "[0, inf)",
        });
    }
    if !(width > 0.0) {
        return Err(Error::OutOfDomain {
            what: "width",
            value: width,
            domain: "(0, inf)",
        });
    }
    let raw = 3.0 * (-(ell / width).powi(2)).exp();
    Ok(LevyTail {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// Local and global spectra, each descending and normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmpSpectra {
    local_b: Vec<f64>,
    local_c: Vec<f64>,
    global: Vec<f64>,
}

impl QmpSpectra {
    pub fn new(local_b: Vec<f64>, local_c: Vec<f64>, global: Vec<f64>) -> Result<Self> {
        for (name, spec) in [("local_b", &local_b), ("local_c", &local_c), ("global", &global)] {
            if spec.is_empty() {
                return Err(Error::EmptyInput("QmpSpectra"));
            }
            let total: f64 = spec.iter().sum();
            if (total - 1.0).abs() > SPECTRUM_TOL {
                return Err(Error::Normalization(format!("{name} sums to {total}")));
            }
            if spec.windows(2).any(|w| w[1] > w[0] + SPECTRUM_TOL) {
                return Err(Error::InvalidArgument(format!("{name} is not nonincreasing")));
            }
        }
        if global.len() != local_b.len() * local_c.len() {
            return Err(Error::shape(
                "QmpSpectra",
                local_b.len() * local_c.len(),
                global.len(),
            ));
        }
        Ok(QmpSpectra {
            local_b,
            local_c,
            global,
        })
    }

    pub fn from_state(s: &BipartiteState) -> Result<Self> {
        let (rb, rc) = s.marginals();
        QmpSpectra::new(
            rb.spectrum().to_vec(),
            rc.spectrum().to_vec(),
            s.state().spectrum().to_vec(),
        )
    }

    pub fn local_b(&self) -> &[f64] {
        &self.local_b
    }

    pub fn local_c(&self) -> &[f64] {
        &self.local_c
    }

    pub fn global(&self) -> &[f64] {
        &self.global
    }
}

/// One inequality `lhs >= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmpCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl QmpCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        QmpCheck {
            lhs,
            rhs,
            holds: lhs >= rhs - QMP_TOL,
        }
    }

    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// The four two-qubit marginal inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmpReport {
    pub checks: [QmpCheck; 4],
}

impl QmpReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Checks the complete set of compatibility conditions for two qubits.
pub fn qmp_two_qubit(s: &QmpSpectra) -> Result<QmpReport> {
    if s.local_b.len() != 2 || s.local_c.len() != 2 {
        return Err(Error::shape(
            "qmp_two_qubit",
            "local spectra of length 2",
            format!("{} and {}", s.local_b.len(), s.local_c.len()),
        ));
    }
    let b1 = s.local_b[1];
    let c1 = s.local_c[1];
    let g = &s.global;
    Ok(QmpReport {
        checks: [
            QmpCheck::new(b1, g[2] + g[3]),
            QmpCheck::new(c1, g[2] + g[3]),
            QmpCheck::new(b1 + c1, g[1] + g[2] + 2.0 * g[3]),
            QmpCheck::new((g[0] - g[2]).min(g[1] - g[3]), (b1 - c1).abs()),
        ],
    })
}

/// The inequality family obtained from nonnegativity of the ergotropic gap
/// with zero-sum energies.
pub fn qmp_general(s: &QmpSpectra, e_b: &[f64], e_c: &[f64]) -> Result<QmpCheck> {
    for (name, e) in [("e_b", e_b), ("e_c", e_c)] {
        let total: f64 = e.iter().sum();
        if total.abs() > SPECTRUM_TOL {
            return Err(Error::Normalization(format!("{name} sums to {total}, expected 0")));
        }
    }
    let slack = gap_spectral(&s.local_b, &s.local_c, e_b, e_c, &s.global)?;
    Ok(QmpCheck::new(slack, 0.0))
}
