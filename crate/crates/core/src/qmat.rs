//! Dense complex matrices.
//!
//! Everything in this crate lives in Hilbert spaces of dimension at most 81,
//! so a plain row-major `Vec<Complex64>` is all the storage we need. Bipartite
//! indices follow the Kronecker convention `index_BC = index_B * d_C + index_C`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on `max |m - m^dagger|` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `max |u^dagger u - 1|` for a matrix to count as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<RawMatrix> for CMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        if raw.re.len() != raw.im.len() {
            return Err(Error::shape("CMatrix", raw.re.len(), raw.im.len()));
        }
        let data = raw
            .re
            .into_iter()
            .zip(raw.im)
            .map(|(re, im)| C64::new(re, im))
            .collect();
        CMatrix::new(raw.rows, raw.cols, data)
    }
}

impl From<CMatrix> for RawMatrix {
    fn from(m: CMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape("CMatrix::new", rows * cols, data.len()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        CMatrix::new(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = CMatrix::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = CMatrix::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// The projector `|v><v|` (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        CMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    /// Standard basis ket `|k>` as a `d x 1` column.
    pub fn basis_ket(d: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(d, 1);
        m[(k, 0)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        self.diagonal().into_iter().map(|z| z.re).collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    /// Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `max |u^dagger u - 1|`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self - CMatrix::identity(self.rows)).max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].norm() <= tol))
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        CMatrix::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + adj[(i, j)]) * 0.5)
    }

    fn check_same_shape(&self, other: &CMatrix, op: &'static str) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "{op}: shape mismatch {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_shape(rhs, "matrix sum");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_shape(rhs, "matrix difference");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Which factor of a bipartite space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    B,
    C,
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `h_b ⊗ 1 + 1 ⊗ h_c`.
pub fn tensor_sum(h_b: &CMatrix, h_c: &CMatrix) -> CMatrix {
    tensor(h_b, &CMatrix::identity(h_c.rows)) + tensor(&CMatrix::identity(h_b.rows), h_c)
}

/// Traces out one factor of a `(d_b d_c) x (d_b d_c)` operator.
pub fn partial_trace(m: &CMatrix, d_b: usize, d_c: usize, keep: Subsystem) -> Result<CMatrix> {
    let d = d_b * d_c;
    if d == 0 || m.rows != d || m.cols != d {
        return Err(Error::shape(
            "partial_trace",
            format!("{d}x{d}"),
            format!("{}x{}", m.rows, m.cols),
        ));
    }
    let out = match keep {
        Subsystem::B => CMatrix::from_fn(d_b, d_b, |i, j| {
            (0..d_c).map(|k| m[(i * d_c + k, j * d_c + k)]).sum()
        }),
        Subsystem::C => CMatrix::from_fn(d_c, d_c, |k, l| {
            (0..d_b).map(|i| m[(i * d_c + k, i * d_c + l)]).sum()
        }),
    };
    Ok(out)
}

/// `a b - b a`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &(a * b) - &(b * a)
}

/// Returns `u m u^dagger`.
pub fn conjugate_by(u: &CMatrix, m: &CMatrix) -> Result<CMatrix> {
    if !u.is_square() || !m.is_square() || u.rows != m.rows {
        return Err(Error::shape(
            "conjugate_by",
            format!("{}x{}", u.rows, u.rows),
            format!("{}x{}", m.rows, m.cols),
        ));
    }
    let deviation = u.unitarity_deviation();
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(conjugate_unchecked(u, m))
}

pub(crate) fn conjugate_unchecked(u: &CMatrix, m: &CMatrix) -> CMatrix {
    &(u * m) * &u.adjoint()
}

/// The swap operator on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// Permutation matrix sending basis vector `k` to `perm[k]`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(perm.len(), perm.len());
    for (k, &target) in perm.iter().enumerate() {
        p[(target, k)] = ONE;
    }
    p
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real_diag(&[1.0, -1.0])
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEig {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(&self.values)
    }

    /// `V diag(weights) V^dagger`, reusing the eigenbasis with other weights.
    pub fn reconstruct_with(&self, weights: &[f64]) -> CMatrix {
        assert_eq!(weights.len(), self.dim());
        let d = self.dim();
        let v = &self.vectors;
        CMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * weights[k])
                .sum()
        })
    }
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
///
/// Output is deterministic: eigenvalues ascend, each eigenvector's largest
/// component is made real and positive, and numerically tied eigenvalues are
/// ordered by the index of that largest component.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::shape(
            "hermitian_eig",
            "square matrix",
            format!("{}x{}", m.rows, m.cols),
        ));
    }
    let deviation = m.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let threshold = JACOBI_REL_TOL * a.hs_norm();

    for sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q, sweep);
            }
        }
    }

    let mut values: Vec<f64> = a.real_diagonal();
    for k in 0..n {
        normalize_phase(&mut v, k);
    }
    let dominant: Vec<usize> = (0..n).map(|k| dominant_index(&v, k)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let scale = values.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let tie_tol = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] - values[order[end - 1]] <= tie_tol {
            end += 1;
        }
        order[start..end].sort_by_key(|&k| (dominant[k], k));
        start = end;
    }

    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    values = order.iter().map(|&k| values[k]).collect();
    Ok(HermitianEig { values, vectors })
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

// One two-sided rotation zeroing a[p][q]. The rotation is V = D R with
// D = diag(1, e^{-i phi}) making the pivot real and R the real Jacobi
// rotation [[c, s], [-s, c]].
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, sweep: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if sweep > 3 && app.abs() + 100.0 * mag == app.abs() && aqq.abs() + 100.0 * mag == aqq.abs() {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / mag;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta.abs() > 1e150 {
        0.5 / zeta
    } else {
        let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
        sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let conj_phase = phase.conj();
    let v_pp = C64::new(c, 0.0);
    let v_pq = C64::new(s, 0.0);
    let v_qp = conj_phase * (-s);
    let v_qq = conj_phase * c;

    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * v_pp + akq * v_qp;
        a[(k, q)] = akp * v_pq + akq * v_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = v_pp.conj() * apk + v_qp.conj() * aqk;
        a[(q, k)] = v_pq.conj() * apk + v_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(app - t * mag, 0.0);
    a[(q, q)] = C64::new(aqq + t * mag, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * v_pp + vkq * v_qp;
        v[(k, q)] = vkp * v_pq + vkq * v_qq;
    }
}

fn dominant_index(v: &CMatrix, col: usize) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0;
    for i in 0..v.rows {
        let mag = v[(i, col)].norm();
        if mag > best_mag + 1e-12 {
            best = i;
            best_mag = mag;
        }
    }
    best
}

fn normalize_phase(v: &mut CMatrix, col: usize) {
    let k = dominant_index(v, col);
    let z = v[(k, col)];
    let mag = z.norm();
    if mag == 0.0 {
        return;
    }
    let rot = z.conj() / mag;
    for i in 0..v.rows {
        v[(i, col)] *= rot;
    }
}
