//! Random states, Hamiltonians and energy-conserving unitaries.
//!
//! Every sampler takes a caller-supplied [`Rng`]. Ensembles derive one
//! generator per sample and per purpose from an [`RngStream`], so results do
//! not depend on thread scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ergotropy::{total_hamiltonian, Hamiltonian};
use crate::error::{Error, Result};
use crate::qmat::{self, commutator, CMatrix, C64, UNITARY_TOL, ZERO};
use crate::states::{is_ppt, BipartiteState, DensityMatrix, PPT_TOL};

/// Bumped whenever the sequence of random draws for a sample changes.
pub const DRAW_ORDER_VERSION: u32 = 1;

pub const PFHS_MAX_DIM: usize = 6;
pub const DEFAULT_PFHS_ATTEMPTS: u64 = 100_000;
pub const DEFAULT_GAP_MATCH_ATTEMPTS: u64 = 10_000;
pub const DEFAULT_GRAIN: f64 = 0.2;

/// Largest tolerated `max |[U, H]|` for an [`EnergyConservingUnitary`].
pub const COMMUTATOR_TOL: f64 = 1e-10;

/// What a derived generator is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DrawKind {
    Hamiltonian,
    State,
    Unitary,
}

impl DrawKind {
    fn tag(self) -> u64 {
        match self {
            DrawKind::Hamiltonian => 1,
            DrawKind::State => 2,
            DrawKind::Unitary => 3,
        }
    }
}

/// Names one reproducible random stream: a master seed and a sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// A fresh generator for one purpose within this stream.
    pub fn rng(&self, kind: DrawKind) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&kind.tag().to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn require_dim(what: &'static str, d: usize, min: usize) -> Result<()> {
    if d < min {
        return Err(Error::InvalidArgument(format!("{what}: dimension {d} is below {min}")));
    }
    Ok(())
}

/// `d x d` matrix of independent complex Gaussians with `E|g|^2 = 1`.
pub fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    require_dim("ginibre", d, 1)?;
    Ok(CMatrix::from_fn(d, d, |_, _| gaussian(rng)))
}

/// Haar-random unitary: orthonormalized Ginibre columns.
///
/// Each diagonal entry of the implied triangular factor is a positive real,
/// which is what makes the result Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    let g = ginibre(d, rng)?;
    let mut cols: Vec<Vec<C64>> = (0..d).map(|j| g.column(j)).collect();
    for j in 0..d {
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[k];
                let v = &mut rest[0];
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate {
                op: "haar_unitary",
                reason: "rank-deficient Gaussian sample".into(),
            });
        }
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    Ok(CMatrix::from_fn(d, d, |i, j| cols[j][i]))
}

/// Haar-random unit vector in `C^d`.
pub fn haar_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<C64>> {
    require_dim("haar_ket", d, 1)?;
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(v.into_iter().map(|z| z / norm).collect())
}

/// Hilbert-Schmidt random state `G G^dagger / tr(G G^dagger)`.
pub fn hs_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    let g = ginibre(d, rng)?;
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::validate(&w.scale(1.0 / tr))
}

/// `rho_B ⊗ rho_C` with independent Hilbert-Schmidt factors.
pub fn product_state<R: Rng + ?Sized>(d_b: usize, d_c: usize, rng: &mut R) -> Result<BipartiteState> {
    let rb = hs_state(d_b, rng)?;
    let rc = hs_state(d_c, rng)?;
    BipartiteState::product(&rb, &rc)
}

/// Uniform point on the `(n-1)`-simplex from spacings of sorted uniforms.
pub fn uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    require_dim("uniform_simplex", n, 1)?;
    let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    Ok(out)
}

/// `sum_a p_a |psi_a><psi_a| ⊗ |chi_a><chi_a|` from explicit terms.
pub fn separable_mixture(
    d_b: usize,
    d_c: usize,
    terms: &[(f64, Vec<C64>, Vec<C64>)],
) -> Result<BipartiteState> {
    if terms.is_empty() {
        return Err(Error::EmptyInput("separable_mixture"));
    }
    let d = d_b * d_c;
    let mut m = CMatrix::zeros(d, d);
    let mut ket = vec![ZERO; d];
    for (p, psi, chi) in terms {
        if psi.len() != d_b || chi.len() != d_c {
            return Err(Error::shape(
                "separable_mixture",
                format!("{d_b} and {d_c}"),
                format!("{} and {}", psi.len(), chi.len()),
            ));
        }
        for i in 0..d_b {
            for k in 0..d_c {
                ket[i * d_c + k] = psi[i] * chi[k];
            }
        }
        for r in 0..d {
            let a = ket[r] * *p;
            for c in 0..d {
                m[(r, c)] += a * ket[c].conj();
            }
        }
    }
    BipartiteState::from_matrix(d_b, d_c, &m)
}

/// Separable state as a uniform-simplex mixture of `(d_b d_c)^2` Haar-random
/// pure product states.
pub fn hdu_separable<R: Rng + ?Sized>(d_b: usize, d_c: usize, rng: &mut R) -> Result<BipartiteState> {
    require_dim("hdu_separable", d_b, 2)?;
    require_dim("hdu_separable", d_c, 2)?;
    let n = (d_b * d_c).pow(2);
    let weights = uniform_simplex(n, rng)?;
    let mut terms = Vec::with_capacity(n);
    for p in weights {
        let psi = haar_ket(d_b, rng)?;
        let chi = haar_ket(d_c, rng)?;
        terms.push((p, psi, chi));
    }
    separable_mixture(d_b, d_c, &terms)
}

/// Hilbert-Schmidt states conditioned on a positive partial transpose.
///
/// Returns the accepted state and the number of draws it took. Only defined
/// where the Peres test decides separability, `d_b * d_c <= 6`.
pub fn pfhs_separable<R: Rng + ?Sized>(
    d_b: usize,
    d_c: usize,
    rng: &mut R,
    max_attempts: u64,
) -> Result<(BipartiteState, u64)> {
    require_dim("pfhs_separable", d_b, 1)?;
    require_dim("pfhs_separable", d_c, 1)?;
    if d_b * d_c > PFHS_MAX_DIM {
        return Err(Error::UnsupportedDimension {
            what: "pfhs_separable",
            dim: d_b * d_c,
            max: PFHS_MAX_DIM,
        });
    }
    for attempt in 1..=max_attempts {
        let s = BipartiteState::new(d_b, d_c, hs_state(d_b * d_c, rng)?)?;
        if is_ppt(&s, PPT_TOL) {
            return Ok((s, attempt));
        }
    }
    Err(Error::RetryLimit {
        what: "pfhs_separable",
        attempts: max_attempts,
    })
}

/// `(G + G^dagger) / 2` with `G` Ginibre.
pub fn gue_hamiltonian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Hamiltonian> {
    let g = ginibre(d, rng)?;
    Hamiltonian::from_matrix(&g.hermitian_part())
}

/// Rounds energies to integer multiples of `grain` and shifts the lowest to 0.
pub fn coarse_grain(energies: &[f64], grain: f64) -> Result<Vec<i64>> {
    if !(grain > 0.0 && grain.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "grain",
            value: grain,
            domain: "(0, inf)",
        });
    }
    if energies.is_empty() {
        return Err(Error::EmptyInput("coarse_grain"));
    }
    let raw: Vec<i64> = energies
        .iter()
        .map(|e| (e / grain + 0.5).ceil() as i64 - 1)
        .collect();
    let min = *raw.iter().min().expect("nonempty");
    Ok(raw.into_iter().map(|m| m - min).collect())
}

/// All positive differences between levels.
pub fn integer_gaps(levels: &[i64]) -> BTreeSet<i64> {
    let mut gaps = BTreeSet::new();
    for &a in levels {
        for &b in levels {
            if a > b {
                gaps.insert(a - b);
            }
        }
    }
    gaps
}

/// Whether some nonzero gap of B equals some gap of C.
pub fn gaps_match(levels_b: &[i64], levels_c: &[i64]) -> bool {
    let gb = integer_gaps(levels_b);
    integer_gaps(levels_c).iter().any(|g| gb.contains(g))
}

/// Two diagonal Hamiltonians on a common integer level grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GrainedHamiltonianPair {
    pub h_b: Hamiltonian,
    pub h_c: Hamiltonian,
    /// Coarse-graining step used when sampling.
    pub grain: f64,
    pub levels_b: Vec<i64>,
    pub levels_c: Vec<i64>,
    /// Energy of one integer level; equals `grain` until rescaled.
    pub unit: f64,
}

impl GrainedHamiltonianPair {
    /// Builds the pair `unit * diag(levels)`.
    ///
    /// Levels are sorted; each system's lowest level must be 0 and the two
    /// systems must share a nonzero gap.
    pub fn from_levels(levels_b: &[i64], levels_c: &[i64], grain: f64, unit: f64) -> Result<Self> {
        let prep = |levels: &[i64]| -> Result<Vec<i64>> {
            let mut v = levels.to_vec();
            v.sort();
            match v.first() {
                None => Err(Error::EmptyInput("GrainedHamiltonianPair")),
                Some(&0) => Ok(v),
                Some(&m) => Err(Error::InvalidArgument(format!("lowest level must be 0, got {m}"))),
            }
        };
        let levels_b = prep(levels_b)?;
        let levels_c = prep(levels_c)?;
        if !gaps_match(&levels_b, &levels_c) {
            return Err(Error::InvalidArgument("level sets share no nonzero gap".into()));
        }
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "unit",
                value: unit,
                domain: "(0, inf)",
            });
        }
        let energies = |levels: &[i64]| -> Vec<f64> { levels.iter().map(|&m| unit * m as f64).collect() };
        Ok(GrainedHamiltonianPair {
            h_b: Hamiltonian::diagonal(&energies(&levels_b))?,
            h_c: Hamiltonian::diagonal(&energies(&levels_c))?,
            grain,
            levels_b,
            levels_c,
            unit,
        })
    }
}

fn distinct_count(levels: &[i64]) -> usize {
    levels.iter().collect::<BTreeSet<_>>().len()
}

/// Rescales so the reference system's top energy is `M - 1`.
///
/// The reference is the system with the higher top level, then the one with
/// more distinct levels, then B.
pub fn rescale_dimensionless(pair: &GrainedHamiltonianPair) -> Result<GrainedHamiltonianPair> {
    let top_b = *pair.levels_b.last().expect("nonempty");
    let top_c = *pair.levels_c.last().expect("nonempty");
    let (mb, mc) = (distinct_count(&pair.levels_b), distinct_count(&pair.levels_c));
    let (top, m) = if top_c > top_b || (top_c == top_b && mc > mb) {
        (top_c, mc)
    } else {
        (top_b, mb)
    };
    let unit = (m as f64 - 1.0) / top as f64;
    GrainedHamiltonianPair::from_levels(&pair.levels_b, &pair.levels_c, pair.grain, unit)
}

/// Samples coarse-grained GUE Hamiltonians until they share a gap, then
/// rescales them.
pub fn gap_matched_pair<R: Rng + ?Sized>(
    d_b: usize,
    d_c: usize,
    grain: f64,
    rng: &mut R,
    max_attempts: u64,
) -> Result<GrainedHamiltonianPair> {
    require_dim("gap_matched_pair", d_b, 2)?;
    require_dim("gap_matched_pair", d_c, 2)?;
    if !(grain > 0.0 && grain.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "grain",
            value: grain,
            domain: "(0, inf)",
        });
    }
    for _ in 0..max_attempts {
        let lb = coarse_grain(gue_hamiltonian(d_b, rng)?.energies(), grain)?;
        let lc = coarse_grain(gue_hamiltonian(d_c, rng)?.energies(), grain)?;
        if gaps_match(&lb, &lc) {
            let pair = GrainedHamiltonianPair::from_levels(&lb, &lc, grain, grain)?;
            return rescale_dimensionless(&pair);
        }
    }
    Err(Error::RetryLimit {
        what: "gap_matched_pair",
        attempts: max_attempts,
    })
}

/// One eigenspace of `H_BC`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBlock {
    pub energy: f64,
    pub dim: usize,
    /// Basis indices spanning the block.
    pub indices: Vec<usize>,
}

/// A unitary commuting with a total Hamiltonian, with its block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConservingUnitary {
    u: CMatrix,
    blocks: Vec<EnergyBlock>,
}

impl EnergyConservingUnitary {
    /// Checks `u` against `h_total` and records the eigenspaces of `h_total`.
    ///
    /// For diagonal `h_total` block indices are computational basis indices;
    /// otherwise they are positions in the eigenbasis of `h_total`.
    pub fn new(u: CMatrix, h_total: &Hamiltonian) -> Result<Self> {
        if u.rows() != h_total.dim() || !u.is_square() {
            return Err(Error::shape(
                "EnergyConservingUnitary::new",
                h_total.dim(),
                format!("{}x{}", u.rows(), u.cols()),
            ));
        }
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let comm = commutator(&u, h_total.matrix()).max_abs();
        if comm > COMMUTATOR_TOL {
            return Err(Error::NotEnergyConserving { commutator: comm });
        }
        let energies = if h_total.matrix().is_diagonal(0.0) {
            h_total.matrix().real_diagonal()
        } else {
            h_total.energies().to_vec()
        };
        Ok(EnergyConservingUnitary {
            u,
            blocks: group_by_energy(&energies, 1e-9),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    pub fn blocks(&self) -> &[EnergyBlock] {
        &self.blocks
    }

    pub fn into_matrix(self) -> CMatrix {
        self.u
    }
}

fn group_by_energy(energies: &[f64], tol: f64) -> Vec<EnergyBlock> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut blocks: Vec<EnergyBlock> = Vec::new();
    for k in order {
        match blocks.last_mut() {
            Some(b) if (energies[k] - b.energy).abs() <= tol => {
                b.indices.push(k);
                b.dim += 1;
            }
            _ => blocks.push(EnergyBlock {
                energy: energies[k],
                dim: 1,
                indices: vec![k],
            }),
        }
    }
    for b in &mut blocks {
        b.indices.sort();
    }
    blocks
}

fn embed_blocks<R: Rng + ?Sized>(d: usize, blocks: &[EnergyBlock], rng: &mut R) -> Result<CMatrix> {
    let mut u = CMatrix::zeros(d, d);
    for b in blocks {
        let v = haar_unitary(b.dim, rng)?;
        for (a, &i) in b.indices.iter().enumerate() {
            for (c, &j) in b.indices.iter().enumerate() {
                u[(i, j)] = v[(a, c)];
            }
        }
    }
    Ok(u)
}

/// Independent Haar unitary on every eigenspace of `H_B + H_C`.
///
/// Eigenspaces are the sets of basis states with equal integer total level.
/// One-dimensional eigenspaces receive a random phase.
pub fn energy_conserving_unitary<R: Rng + ?Sized>(
    pair: &GrainedHamiltonianPair,
    rng: &mut R,
) -> Result<EnergyConservingUnitary> {
    let (d_b, d_c) = (pair.levels_b.len(), pair.levels_c.len());
    let mut by_level: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &mb) in pair.levels_b.iter().enumerate() {
        for (k, &mc) in pair.levels_c.iter().enumerate() {
            by_level.entry(mb + mc).or_default().push(i * d_c + k);
        }
    }
    let blocks: Vec<EnergyBlock> = by_level
        .into_iter()
        .map(|(level, indices)| EnergyBlock {
            energy: pair.unit * level as f64,
            dim: indices.len(),
            indices,
        })
        .collect();
    let u = embed_blocks(d_b * d_c, &blocks, rng)?;
    Ok(EnergyConservingUnitary { u, blocks })
}

/// Block-Haar energy-conserving unitary for arbitrary Hamiltonians.
///
/// Total energies closer than `tol` are treated as degenerate.
pub fn energy_conserving_unitary_for<R: Rng + ?Sized>(
    h_b: &Hamiltonian,
    h_c: &Hamiltonian,
    tol: f64,
    rng: &mut R,
) -> Result<EnergyConservingUnitary> {
    let h = total_hamiltonian(h_b, h_c);
    let blocks = group_by_energy(h.energies(), tol);
    let inner = embed_blocks(h.dim(), &blocks, rng)?;
    let v = &h.eig().vectors;
    let u = qmat::conjugate_unchecked(v, &inner);
    EnergyConservingUnitary::new(u, &h)
}
