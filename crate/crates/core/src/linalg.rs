//! Dense complex linear algebra for small operators.
//!
//! Every operator in the library (states, projectors, Kraus operators) is a
//! [`ComplexMatrix`]: a square, row-major block of `Complex64` entries. The
//! systems handled here stay below a few hundred dimensions, so nothing is
//! sparse and nothing is delegated to BLAS.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for checks that are exact equalities in exact arithmetic.
pub const TOL: f64 = 1e-9;

/// Off-diagonal Frobenius norm at which a Jacobi sweep is considered converged.
pub const JACOBI_THRESHOLD: f64 = 1e-12;

/// Maximum number of cyclic Jacobi sweeps before reporting non-convergence.
pub const JACOBI_MAX_SWEEPS: usize = 100;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("entries must be finite".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidMatrix("matrix must be square".into()));
        }
        Self::from_vec(dim, rows.concat())
    }

    /// Convenience constructor for real matrices, mostly used in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<Complex64> = values.iter().map(|&x| c(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                left: u.len(),
                right: v.len(),
            });
        }
        let dim = u.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in u {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self::from_vec(dim, data)
    }

    /// `|u⟩⟨u|`.
    pub fn projector_onto(u: &[Complex64]) -> Result<Self> {
        Self::outer(u, u)
    }

    /// `|i⟩⟨j|` in dimension `dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        matmul(self, other)
    }

    pub fn adjoint(&self) -> Self {
        adjoint(self)
    }

    pub fn trace(&self) -> Complex64 {
        trace(self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(c(factor, 0.0))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other).is_ok_and(|d| d <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|i| (i..n).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        Ok(self
            .rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>8.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// The operator impls panic on dimension mismatch; use `matmul`/`try_add` when
// the shapes come from untrusted input.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        matmul(self, rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum dimension mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference dimension mismatch")
    }
}

fn check_dims(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(())
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dims(a, b)?;
    let n = a.dim;
    let mut out = vec![ZERO; n * n];
    // i-k-j order keeps the inner loop contiguous in both `b` and `out`.
    for i in 0..n {
        let out_row = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a.data[i * n + k];
            if aik == ZERO {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(ComplexMatrix { dim: n, data: out })
}

/// Product of a chain of equally sized matrices.
pub fn matmul_chain(factors: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidMatrix("empty product".into()))?;
    rest.iter().try_fold((*first).clone(), |acc, m| matmul(&acc, m))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (n, m) = (a.dim, b.dim);
    let dim = n * m;
    let mut data = vec![ZERO; dim * dim];
    for i in 0..n {
        for j in 0..n {
            let aij = a.data[i * n + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..m {
                for l in 0..m {
                    data[(i * m + k) * dim + (j * m + l)] = aij * b.data[k * m + l];
                }
            }
        }
    }
    ComplexMatrix { dim, data }
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    (0..a.dim).map(|i| a.data[i * a.dim + i]).sum()
}

/// `Tr(AB)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    check_dims(a, b)?;
    let n = a.dim;
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.data[i * n + j] * b.data[j * n + i];
        }
    }
    Ok(acc)
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim;
    let mut data = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            data[j * n + i] = a.data[i * n + j].conj();
        }
    }
    ComplexMatrix { dim: n, data }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// returned in ascending order. Only the Hermitian part of `a` is used.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = a.dim;
    let mut m = a.clone();
    // Symmetrize so that rounding noise in the input cannot stall the sweep.
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let h = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            m[(i, j)] = h;
            m[(j, i)] = h.conj();
        }
    }
    let scale = m.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);

    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&m) > JACOBI_THRESHOLD * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence {
                sweeps,
                off_diagonal: off_norm(&m),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Unitary phase on index q makes the pivot real: D = diag(.., e^{-iφ}, ..)
                // with A <- D† A D.
                let phase = apq / r;
                for k in 0..n {
                    m[(k, q)] *= phase.conj();
                }
                for k in 0..n {
                    m[(q, k)] *= phase;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // A <- Gᵀ A G with G = [[c, s], [-s, c]] in the (p, q) plane.
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * cs - akq * sn;
                    m[(k, q)] = akp * sn + akq * cs;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * cs - aqk * sn;
                    m[(q, k)] = apk * sn + aqk * cs;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Sum of singular values, computed from the eigenvalues of `a†a`.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    let gram = matmul(&adjoint(a), a)?;
    let eig = hermitian_eigenvalues(&gram)?;
    Ok(eig.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

/// `A² = A` and `A = A†`, both entrywise within `tol`.
pub fn is_projector(a: &ComplexMatrix, tol: f64) -> bool {
    if !a.is_hermitian(tol) {
        return false;
    }
    let sq = a * a;
    sq.max_abs_diff(a).is_ok_and(|d| d <= tol)
}

/// Hermitian, unit trace and positive semidefinite, all within `tol`.
pub fn is_density(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    if !a.is_hermitian(tol) {
        return Ok(false);
    }
    let tr = trace(a);
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Ok(false);
    }
    let eig = hermitian_eigenvalues(a)?;
    Ok(eig.first().is_none_or(|&l| l >= -tol))
}

/// Largest entry magnitude of `pq - qp`.
pub fn commutator_norm(p: &ComplexMatrix, q: &ComplexMatrix) -> Result<f64> {
    let pq = matmul(p, q)?;
    let qp = matmul(q, p)?;
    pq.max_abs_diff(&qp)
}

/// Normalizes a vector in place and returns its original norm.
pub fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = vector_norm(v);
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩`, conjugate-linear in the first argument.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Kronecker product of state vectors.
pub fn kron_vec(u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect()
}
