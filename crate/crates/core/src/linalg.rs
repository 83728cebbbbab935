//! Dense complex linear algebra for small quantum systems.
//!
//! Composite systems use row-major Kronecker ordering: for subsystems with
//! dimensions `[d_0, d_1, ..]` the composite index is `i_0 * (d_1 * ..) + i_1 * .. + ..`,
//! so the first listed subsystem is the most significant one.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance for density matrices.
pub const TOL_HERM: f64 = 1e-10;
/// Tolerance for PSD checks, POVM completeness and trace preservation.
pub const TOL_PSD: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A dense complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { C64::new(diag[r], 0.0) } else { ZERO })
    }

    /// Builds a matrix from real row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows[0].len();
        Self::from_fn(rows.len(), cols, |r, c| C64::new(rows[r][c], 0.0))
    }

    /// `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    /// `|v><v|`.
    pub fn ket_bra(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    /// Row vector `<v|` as a `1 x n` matrix.
    pub fn bra(v: &[C64]) -> Self {
        Self::from_fn(1, v.len(), |_, c| v[c].conj())
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self += s * other`, in place.
    pub fn add_scaled(&mut self, other: &ComplexMatrix, s: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut err: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                err = err.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        err
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    /// Real part of `Tr(self * other)`, computed without forming the product.
    pub fn trace_product_re(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc.re
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let row_other = &other.data[k * other.cols..(k + 1) * other.cols];
                let row_out = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in row_out.iter_mut().zip(row_other) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * m * self^dagger`.
    pub fn conjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(m).matmul(&self.adjoint())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for ComplexMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Parse("ragged matrix rows".into()));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::new(n_rows, n_cols, data)
    }
}

impl From<ComplexMatrix> for Vec<Vec<[f64; 2]>> {
    fn from(m: ComplexMatrix) -> Self {
        m.data.chunks(m.cols).map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
    }
}

/// Kronecker product `a ⊗ b`; composite row index is `i * b.rows + j`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    ComplexMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn check_dims(n: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || prod != n {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not multiply to {n}"
        )));
    }
    Ok(())
}

/// Traces out subsystem `traced` of a square matrix over subsystems `dims`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], traced: usize) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("partial trace of a non-square matrix".into()));
    }
    check_dims(m.rows, dims)?;
    if traced >= dims.len() {
        return Err(Error::IndexOutOfRange { index: traced, bound: dims.len() });
    }
    let dt = dims[traced];
    // composite index = (outer * dt + k) * inner + rest
    let inner: usize = dims[traced + 1..].iter().product();
    let outer: usize = dims[..traced].iter().product();
    let n_out = outer * inner;
    let full = |reduced: usize, k: usize| {
        let (o, i) = (reduced / inner, reduced % inner);
        (o * dt + k) * inner + i
    };
    Ok(ComplexMatrix::from_fn(n_out, n_out, |r, c| {
        (0..dt).map(|k| m[(full(r, k), full(c, k))]).sum()
    }))
}

/// `Tr_A[rho (effect ⊗ 1)]` for a bipartite `rho` over `(dim_a, dim_b)`.
pub fn reduce_with_effect_a(rho: &ComplexMatrix, dim_a: usize, effect: &ComplexMatrix) -> ComplexMatrix {
    let dim_b = rho.rows / dim_a;
    assert_eq!(effect.rows, dim_a);
    let mut out = ComplexMatrix::zeros(dim_b, dim_b);
    for i in 0..dim_a {
        for j in 0..dim_a {
            let e = effect[(j, i)];
            if e == ZERO {
                continue;
            }
            for k in 0..dim_b {
                for l in 0..dim_b {
                    out[(k, l)] += rho[(i * dim_b + k, j * dim_b + l)] * e;
                }
            }
        }
    }
    out
}

/// `Tr_B[rho (1 ⊗ effect)]` for a bipartite `rho` over `(dim_a, dim_b)`.
pub fn reduce_with_effect_b(rho: &ComplexMatrix, dim_a: usize, effect: &ComplexMatrix) -> ComplexMatrix {
    let dim_b = rho.rows / dim_a;
    assert_eq!(effect.rows, dim_b);
    let mut out = ComplexMatrix::zeros(dim_a, dim_a);
    for k in 0..dim_b {
        for l in 0..dim_b {
            let e = effect[(l, k)];
            if e == ZERO {
                continue;
            }
            for i in 0..dim_a {
                for j in 0..dim_a {
                    out[(i, j)] += rho[(i * dim_b + k, j * dim_b + l)] * e;
                }
            }
        }
    }
    out
}

fn subsystem_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let k = dims.len();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::DimensionMismatch(format!("{perm:?} is not a permutation of 0..{k}")));
    }
    let n: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut digits = vec![0usize; k];
    let mut map = Vec::with_capacity(n);
    for idx in 0..n {
        let mut rest = idx;
        for s in (0..k).rev() {
            digits[s] = rest % dims[s];
            rest /= dims[s];
        }
        let mut new_idx = 0;
        for (j, &p) in perm.iter().enumerate() {
            new_idx = new_idx * new_dims[j] + digits[p];
        }
        map.push(new_idx);
    }
    Ok(map)
}

/// Reorders the tensor factors of a square operator. Position `j` of the
/// result holds original subsystem `perm[j]`.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    check_dims(m.rows, dims)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch("permuting a non-square operator".into()));
    }
    let map = subsystem_index_map(dims, perm)?;
    let mut out = ComplexMatrix::zeros(m.rows, m.cols);
    for r in 0..m.rows {
        for c in 0..m.cols {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.vectors.rows;
        (0..n).map(|r| self.vectors[(r, k)]).collect()
    }

    /// `V f(Λ) V^dagger`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.rows;
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| self.vectors[(r, k)] * self.vectors[(c, k)].conj() * fv[k]).sum()
        })
    }
}

/// Hermitian eigensolver using cyclic complex Jacobi rotations.
///
/// The input is symmetrized first; inputs farther than `1e-9` (relative to
/// their largest entry) from Hermitian are rejected.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition of a non-square matrix".into()));
    }
    let herm_err = m.hermiticity_error();
    if herm_err > TOL_PSD * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(herm_err));
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = 1e-12 * a.frobenius_norm().max(1.0);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs < 1e-300 {
                    continue;
                }
                let phase = apq / abs;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * abs);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on coordinates (p, q)
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(*eig_hermitian(m)?.values.last().expect("non-empty"))
}

/// Clips negative eigenvalues to zero.
pub fn project_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.map_values(|l| l.max(0.0)))
}

pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.map_values(|l| l.max(0.0).sqrt()))
}

/// Pseudo-inverse square root; eigenvalues below `floor` map to zero.
pub fn inv_sqrt_psd(m: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.map_values(|l| if l > floor { 1.0 / l.sqrt() } else { 0.0 }))
}

fn check_qudit_index(d: usize, n: usize, m: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidScenario("dimension must be at least 1".into()));
    }
    for i in [n, m] {
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, bound: d });
        }
    }
    Ok(())
}

fn root_of_unity(k: usize, d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k % d) as f64 / d as f64)
}

/// Generalized Bell state `|phi_nm> = d^{-1/2} Σ_j e^{2πijn/d} |j>|j ⊕ m>`.
pub fn bell_state(d: usize, n: usize, m: usize) -> Result<Vec<C64>> {
    check_qudit_index(d, n, m)?;
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = vec![ZERO; d * d];
    for j in 0..d {
        v[j * d + (j + m) % d] = root_of_unity(j * n, d) * norm;
    }
    Ok(v)
}

/// Phase-shift unitary `U_nm = Σ_k e^{2πikn/d} |k><k ⊕ m|`.
pub fn shift_phase_unitary(d: usize, n: usize, m: usize) -> Result<ComplexMatrix> {
    check_qudit_index(d, n, m)?;
    let mut u = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        u[(k, (k + m) % d)] = root_of_unity(k * n, d);
    }
    Ok(u)
}

/// Single-qubit Pauli matrices `(X, Y, Z)`.
pub fn paulis() -> [ComplexMatrix; 3] {
    let i = C64::new(0.0, 1.0);
    [
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => ZERO,
        }),
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
    ]
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        let herm = matrix.hermiticity_error();
        if herm > TOL_HERM {
            return Err(Error::NotHermitian(herm));
        }
        let matrix = matrix.hermitian_part();
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TOL_HERM {
            return Err(Error::InvalidTrace(tr));
        }
        let min = min_eigenvalue(&matrix)?;
        if min < -TOL_PSD {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix })
    }

    /// Normalizes `v` and returns `|v><v|`.
    pub fn from_pure(v: &[C64]) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidTrace(0.0));
        }
        let u: Vec<C64> = v.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::ket_bra(&u))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// Clips a Hermitian matrix to the PSD cone and renormalizes its trace.
    pub fn nearest(m: &ComplexMatrix) -> Result<Self> {
        let p = project_psd(m)?;
        let tr = p.trace().re;
        if tr <= 0.0 {
            return Ok(Self::maximally_mixed(m.rows));
        }
        Self::new(p.scale_real(1.0 / tr))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { matrix: tensor_product(&self.matrix, &other.matrix) }
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.matrix
    }
}

/// A validated positive operator-valued measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::DimensionMismatch("POVM without effects".into()))?;
        let dim = first.rows;
        let mut total = ComplexMatrix::zeros(dim, dim);
        let mut out = Vec::with_capacity(effects.len());
        for e in effects {
            if e.rows != dim || e.cols != dim {
                return Err(Error::DimensionMismatch("POVM effects of unequal shape".into()));
            }
            let herm = e.hermiticity_error();
            if herm > TOL_PSD {
                return Err(Error::NotHermitian(herm));
            }
            let e = e.hermitian_part();
            let min = min_eigenvalue(&e)?;
            if min < -TOL_PSD {
                return Err(Error::NotPsd(min));
            }
            total = &total + &e;
            out.push(e);
        }
        let dev = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > TOL_PSD {
            return Err(Error::IncompletePovm(dev));
        }
        Ok(Self { effects: out })
    }

    /// Effects `p_a * 1`, i.e. a measurement that ignores the state.
    pub fn trivial(dim: usize, probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| ComplexMatrix::identity(dim).scale_real(p)).collect())
    }

    /// Rank-one projectors onto the given orthonormal vectors.
    pub fn projective(basis: &[Vec<C64>]) -> Result<Self> {
        Self::new(basis.iter().map(|v| ComplexMatrix::ket_bra(v)).collect())
    }

    /// Effects `δ(a, outcome) * 1`.
    pub fn deterministic(dim: usize, outcomes: usize, outcome: usize) -> Result<Self> {
        let probs: Vec<f64> = (0..outcomes).map(|a| if a == outcome { 1.0 } else { 0.0 }).collect();
        Self::trivial(dim, &probs)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, a: usize) -> &ComplexMatrix {
        &self.effects[a]
    }

    pub fn completeness_error(&self) -> f64 {
        let dim = self.dim();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for e in &self.effects {
            total = &total + e;
        }
        total.max_abs_diff(&ComplexMatrix::identity(dim))
    }
}

impl TryFrom<Vec<ComplexMatrix>> for Povm {
    type Error = Error;
    fn try_from(v: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Povm> for Vec<ComplexMatrix> {
    fn from(p: Povm) -> Self {
        p.effects
    }
}

/// A CPTP map given by Kraus operators of shape `out_dim x in_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct KrausChannel {
    kraus_ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus_ops
            .first()
            .ok_or_else(|| Error::DimensionMismatch("channel without Kraus operators".into()))?;
        let (out_dim, in_dim) = (first.rows, first.cols);
        let mut total = ComplexMatrix::zeros(in_dim, in_dim);
        for k in &kraus_ops {
            if k.rows != out_dim || k.cols != in_dim {
                return Err(Error::DimensionMismatch("Kraus operators of unequal shape".into()));
            }
            total = &total + &k.adjoint().matmul(k);
        }
        let dev = total.max_abs_diff(&ComplexMatrix::identity(in_dim));
        if dev > TOL_PSD {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self { kraus_ops })
    }

    pub fn identity(dim: usize) -> Self {
        Self { kraus_ops: vec![ComplexMatrix::identity(dim)] }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Replaces every input by `1/out_dim`.
    pub fn fully_depolarizing(in_dim: usize, out_dim: usize) -> Self {
        let s = 1.0 / (out_dim as f64).sqrt();
        let mut ops = Vec::with_capacity(in_dim * out_dim);
        for i in 0..out_dim {
            for j in 0..in_dim {
                let mut k = ComplexMatrix::zeros(out_dim, in_dim);
                k[(i, j)] = C64::new(s, 0.0);
                ops.push(k);
            }
        }
        Self { kraus_ops: ops }
    }

    pub fn in_dim(&self) -> usize {
        self.kraus_ops[0].cols
    }

    pub fn out_dim(&self) -> usize {
        self.kraus_ops[0].rows
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.out_dim(), self.out_dim());
        for k in &self.kraus_ops {
            out = &out + &k.conjugate(rho);
        }
        out
    }

    /// `(C ⊗ id)(rho)` for `rho` over `(in_dim, dim_b)`.
    pub fn apply_to_first(&self, rho: &ComplexMatrix, dim_b: usize) -> ComplexMatrix {
        let id = ComplexMatrix::identity(dim_b);
        let n = self.out_dim() * dim_b;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in &self.kraus_ops {
            out = &out + &tensor_product(k, &id).conjugate(rho);
        }
        out
    }

    /// Heisenberg picture `Σ_k K_k^dagger y K_k`.
    pub fn adjoint_apply(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.in_dim(), self.in_dim());
        for k in &self.kraus_ops {
            out = &out + &k.adjoint().matmul(y).matmul(k);
        }
        out
    }

    pub fn trace_preservation_error(&self) -> f64 {
        let mut total = ComplexMatrix::zeros(self.in_dim(), self.in_dim());
        for k in &self.kraus_ops {
            total = &total + &k.adjoint().matmul(k);
        }
        total.max_abs_diff(&ComplexMatrix::identity(self.in_dim()))
    }
}

impl TryFrom<Vec<ComplexMatrix>> for KrausChannel {
    type Error = Error;
    fn try_from(v: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<KrausChannel> for Vec<ComplexMatrix> {
    fn from(k: KrausChannel) -> Self {
        k.kraus_ops
    }
}
