//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is the carrier for every finite-dimensional operator in the
//! crate. Storage is row-major. The Hermitian eigensolver is a cyclic two-sided
//! Jacobi method; numerical rank goes through a singular value decomposition.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Numerical thresholds shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Structural checks: unitarity, projection, orthonormality.
    pub structural: f64,
    /// Residuals of assembled identities.
    pub residual: f64,
    /// Relative singular-value cutoff and eigenvalue merge gap.
    pub rank_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: 1e-12,
            residual: 1e-10,
            rank_gap: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn new(structural: f64, residual: f64, rank_gap: f64) -> Result<Self> {
        let tol = Self {
            structural,
            residual,
            rank_gap,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.structural > 0.0
            && self.structural <= self.residual
            && self.residual < 1.0
            && self.rank_gap > 0.0
            && self.rank_gap < 1.0;
        if ok {
            Ok(())
        } else {
            Err(BclError::InvalidTolerances)
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(BclError::MalformedMatrix(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(BclError::MalformedMatrix("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
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
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| re(rows[i][j]))
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| re(x)).collect();
        Self::diag(&v)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(n_rows: usize, columns: &[Vec<C64>]) -> Self {
        Self::from_fn(n_rows, columns.len(), |i, j| columns[j][i])
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

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(BclError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, z) in v.iter().enumerate() {
            self[(i, j)] = *z;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `self * other - other * self`
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[&Self]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    /// Column-stacked vectorization.
    pub fn vec_columns(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    pub fn from_vec_columns(rows: usize, cols: usize, v: &[C64]) -> Self {
        Self::from_fn(rows, cols, |i, j| v[j * rows + i])
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
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
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Wire form: `{"rows": n, "cols": m, "entries": [[re, im], ...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        let data = raw.entries.iter().map(|[a, b]| C64::new(*a, *b)).collect();
        ComplexMatrix::new(raw.rows, raw.cols, data).map_err(serde::de::Error::custom)
    }
}

/// One group of (numerically) equal eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenGroup {
    pub value: f64,
    pub multiplicity: usize,
    /// Orthonormal eigenvectors as columns.
    pub vectors: ComplexMatrix,
}

/// Full eigendecomposition `M = V diag(values) V*`, values descending.
#[derive(Debug, Clone)]
pub struct RawEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies a
/// real plane rotation. Eigenvalues come back sorted descending (stable in the
/// diagonal position), each eigenvector normalized so its first
/// largest-modulus component is real and positive.
pub fn hermitian_eigen_raw(m: &ComplexMatrix, tol: &Tolerances) -> Result<RawEigen> {
    let n = m.require_square()?;
    let violation = m.hermitian_defect();
    if violation > tol.structural {
        return Err(BclError::NotHermitian { violation });
    }
    // symmetrize so the rotations act on an exactly Hermitian matrix
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);

    let total = a.frobenius();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let z = a[(p, q)];
                let mag = z.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let phase = z / mag; // e^{i phi}
                let zeta = (aqq - app) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on coordinates (p, q)
                let g_pp = re(c);
                let g_pq = re(s);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;
                // A <- A G
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * g_pp + aiq * g_qp;
                    a[(i, q)] = aip * g_pq + aiq * g_qq;
                }
                // A <- G* A
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = g_pp.conj() * apj + g_qp.conj() * aqj;
                    a[(q, j)] = g_pq.conj() * apj + g_qq.conj() * aqj;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = re(a[(p, p)].re);
                a[(q, q)] = re(a[(q, q)].re);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * g_pp + viq * g_qp;
                    v[(i, q)] = vip * g_pq + viq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut x = v.column(src);
        normalize_phase(&mut x);
        vectors.set_column(col, &x);
    }
    Ok(RawEigen { values, vectors })
}

fn normalize_phase(x: &mut [C64]) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, z) in x.iter().enumerate() {
        // first occurrence wins ties up to rounding
        if z.norm() > best_norm * (1.0 + 1e-12) {
            best = i;
            best_norm = z.norm();
        }
    }
    if best_norm > 0.0 {
        let phase = x[best].conj() / best_norm;
        for z in x.iter_mut() {
            *z *= phase;
        }
        x[best] = re(x[best].re);
    }
}

/// Hermitian eigendecomposition with eigenvalues closer than `tol.rank_gap`
/// merged into multiplicity groups.
pub fn hermitian_eigen(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<EigenGroup>> {
    let raw = hermitian_eigen_raw(m, tol)?;
    let n = raw.values.len();
    let mut groups = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && raw.values[end - 1] - raw.values[end] <= tol.rank_gap {
            end += 1;
        }
        let mult = end - start;
        let value = raw.values[start..end].iter().sum::<f64>() / mult as f64;
        groups.push(EigenGroup {
            value,
            multiplicity: mult,
            vectors: raw.vectors.submatrix(0, start, n, mult),
        });
        start = end;
    }
    Ok(groups)
}

/// `f(M)` for Hermitian `M` through its eigendecomposition.
pub fn hermitian_function(
    m: &ComplexMatrix,
    tol: &Tolerances,
    f: impl Fn(f64) -> C64,
) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen_raw(m, tol)?;
    let fv: Vec<C64> = eig.values.iter().map(|&x| f(x)).collect();
    let scaled = ComplexMatrix::from_fn(eig.vectors.rows(), eig.vectors.cols(), |i, j| {
        eig.vectors[(i, j)] * fv[j]
    });
    Ok(scaled.matmul(&eig.vectors.adjoint()))
}

/// Singular values (descending) and right singular vectors (columns of V).
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub right_vectors: ComplexMatrix,
}

/// Singular value decomposition, padded so that all `cols` right singular
/// vectors are available.
pub fn svd_right(m: &ComplexMatrix) -> Svd {
    let cols = m.cols();
    if cols == 0 {
        return Svd {
            singular_values: Vec::new(),
            right_vectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let mut a = m.to_nalgebra();
    if a.nrows() < cols {
        a = a.resize_vertically(cols, ZERO);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    let sv = &svd.singular_values;
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let singular_values = order.iter().map(|&i| sv[i]).collect();
    let v_t = ComplexMatrix::from_nalgebra(&v_t);
    let right_vectors = ComplexMatrix::from_fn(cols, cols, |i, j| v_t[(order[j], i)].conj());
    Svd {
        singular_values,
        right_vectors,
    }
}

/// Null space from the singular values: those `<= rank_gap * sigma_max`
/// (or `<= rank_gap` when `M = 0`).
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub dim: usize,
    /// Orthonormal basis as columns.
    pub basis: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub cutoff: f64,
}

pub fn null_space(m: &ComplexMatrix, tol: &Tolerances) -> NullSpace {
    let svd = svd_right(m);
    let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let scale = if sigma_max > 0.0 { sigma_max } else { 1.0 };
    let cutoff = tol.rank_gap * scale;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let cols = m.cols();
    let dim = cols - rank;
    let basis = svd.right_vectors.submatrix(0, rank, cols, dim);
    NullSpace {
        dim,
        basis,
        singular_values: svd.singular_values,
        cutoff,
    }
}

pub fn nullspace_dim(m: &ComplexMatrix, tol: &Tolerances) -> usize {
    null_space(m, tol).dim
}

pub fn rank(m: &ComplexMatrix, tol: &Tolerances) -> usize {
    m.cols() - nullspace_dim(m, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    Unitary,
    Projection,
    SelfAdjointContraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureCheck {
    pub pass: bool,
    pub violation: f64,
}

pub fn validate_structure(
    m: &ComplexMatrix,
    kind: StructureKind,
    tol: &Tolerances,
) -> Result<StructureCheck> {
    let n = m.require_square()?;
    let violation = match kind {
        StructureKind::Unitary => {
            let id = ComplexMatrix::identity(n);
            let mh = m.adjoint();
            let a = (&mh.matmul(m) - &id).max_abs();
            let b = (&m.matmul(&mh) - &id).max_abs();
            a.max(b)
        }
        StructureKind::Projection => {
            let idem = (&m.matmul(m) - m).max_abs();
            idem.max(m.hermitian_defect())
        }
        StructureKind::SelfAdjointContraction => {
            let herm = m.hermitian_defect();
            if herm > tol.structural {
                herm
            } else {
                let eig = hermitian_eigen_raw(m, tol)?;
                let radius = eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
                herm.max((radius - 1.0).max(0.0))
            }
        }
    };
    Ok(StructureCheck {
        pass: violation <= tol.structural,
        violation,
    })
}

/// Orthonormal columns spanning the columns of `m`, by modified Gram-Schmidt
/// run twice. Columns whose residual norm falls below `drop * |original|`
/// are discarded.
pub fn orthonormalize(columns: &[Vec<C64>], drop: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for col in columns {
        let norm0 = norm(col);
        if norm0 == 0.0 {
            continue;
        }
        let mut x = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &x);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= c * bi;
                }
            }
        }
        let nx = norm(&x);
        if nx > drop * norm0 {
            for xi in x.iter_mut() {
                *xi /= nx;
            }
            basis.push(x);
        }
    }
    basis
}

/// `<a, b>`, conjugate-linear in the first slot.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
