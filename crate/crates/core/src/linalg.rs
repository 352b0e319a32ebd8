//! Dense complex linear algebra for the small matrices used throughout the crate.
//!
//! Everything here is sized for dimensions of a few dozen at most: the largest
//! objects are 9x9 interferometer transfers and the real embeddings of the SDP
//! blocks. Storage is row-major and dense.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Numerical tolerances shared by the whole crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Default absolute tolerance for equality checks.
    pub atol: f64,
    /// Largest anti-Hermitian part accepted (and removed) when building a [`HermitianView`].
    pub sym_tol: f64,
    /// Largest negative eigenvalue tolerated by [`sqrt_psd`].
    pub psd_tol: f64,
}

pub const TOL: Tolerances = Tolerances {
    atol: 1e-10,
    sym_tol: 1e-12,
    psd_tol: 1e-8,
};

/// Inputs whose anti-Hermitian part exceeds this are rejected outright.
const HERMITIAN_REJECT: f64 = 1e-6;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `e^{2 pi i / 3}`.
pub fn omega() -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
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

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cc = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == cc), "ragged rows");
        Self {
            rows: r,
            cols: cc,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| cr(x)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// Sub-matrix picking the given rows and columns, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "apply {}x{} to length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `tr(A^dagger B)`.
    pub fn frob_inner(&self, other: &CMatrix) -> Result<C64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch("frob_inner".into()));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Result<C64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::DimensionMismatch("trace_product".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .adjoint()
                .matmul(self)
                .map(|p| p.max_abs_diff(&CMatrix::identity(self.rows)) <= tol)
                .unwrap_or(false)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
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

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

/// Panicking product for internal use where shapes are known to agree.
impl Mul<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        let data = rows.iter().flatten().map(|&[re, im]| c(re, im)).collect();
        Ok(CMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }
}

/// A square matrix known to be Hermitian. Construction removes any residual
/// anti-Hermitian part.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermitianView {
    matrix: CMatrix,
}

impl HermitianView {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_REJECT * (1.0 + m.max_abs()) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self::symmetrized(&m))
    }

    /// `(M + M^dagger)/2` with no checks beyond squareness.
    pub fn symmetrized(m: &CMatrix) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let n = m.rows;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = cr(m[(i, i)].re);
            for j in (i + 1)..n {
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        Self { matrix: out }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CMatrix::identity(n),
        }
    }

    pub fn projector(v: &[C64]) -> Self {
        Self::symmetrized(&CMatrix::outer(v))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale_re(s),
        }
    }

    pub fn add(&self, other: &HermitianView) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    /// `tr(self * other)`, real for Hermitian pairs.
    pub fn inner(&self, other: &HermitianView) -> f64 {
        self.matrix
            .frob_inner(&other.matrix)
            .expect("inner product dimension mismatch")
            .re
    }

    /// `<v|H|v>`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let hv = self.matrix.apply(v).expect("expectation dimension mismatch");
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(self)?.values[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*eig_hermitian(self)?.values.last().expect("empty matrix"))
    }
}

impl<'de> Deserialize<'de> for HermitianView {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        HermitianView::new(m).map_err(D::Error::custom)
    }
}

/// Spectral decomposition with eigenvalues in ascending order. Column `k` of
/// `vectors` is the eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// Rebuilds `V f(Lambda) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianView {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            if fv[k] == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fv[k];
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianView::symmetrized(&out)
    }
}

/// Hermitian eigendecomposition (Householder tridiagonalisation followed by
/// implicit symmetric QR with Wilkinson shifts).
pub fn eig_hermitian(h: &HermitianView) -> Result<Eigen> {
    let n = h.dim();
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(h.matrix.to_nalgebra(), f64::EPSILON, 30 * n.max(4))
        .ok_or(Error::NoConvergence("hermitian eigensolver"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

/// Nearest positive semidefinite matrix in Frobenius norm (negative eigenvalues clipped).
pub fn psd_project(h: &HermitianView) -> Result<HermitianView> {
    let e = eig_hermitian(h)?;
    if e.values.first().is_some_and(|&l| l >= 0.0) {
        return Ok(h.clone());
    }
    Ok(e.reconstruct_with(|l| l.max(0.0)))
}

/// Principal square root of a PSD matrix; small negative eigenvalues from
/// round-off are clipped.
pub fn sqrt_psd(h: &HermitianView) -> Result<HermitianView> {
    let e = eig_hermitian(h)?;
    if let Some(&min) = e.values.first() {
        if min < -TOL.psd_tol {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(e.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Inverse square root restricted to the support (pseudo-inverse on the kernel).
pub fn inv_sqrt_psd(h: &HermitianView, cutoff: f64) -> Result<HermitianView> {
    let e = eig_hermitian(h)?;
    Ok(e.reconstruct_with(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 }))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn trace(a: &CMatrix) -> C64 {
    a.trace()
}

pub fn frob_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    a.frob_inner(b)
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.matmul(b)
}

/// Partial trace of an operator on a tensor product of subsystems with the
/// given dimensions, keeping the subsystems listed in `keep` (in their
/// original order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.shape() != (total, total) {
        return Err(Error::DimensionMismatch(format!(
            "partial trace: operator {}x{} vs subsystem product {total}",
            m.rows, m.cols
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) || !keep.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "partial trace: keep must be strictly increasing subsystem indices".into(),
        ));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // Mixed-radix digits -> flat index in the full space.
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        let mut r = kept_idx;
        for (pos, &k) in keep.iter().enumerate().rev() {
            digits[k] = r % kept_dims[pos];
            r /= kept_dims[pos];
        }
        let mut r = traced_idx;
        for (pos, &k) in traced.iter().enumerate().rev() {
            digits[k] = r % traced_dims[pos];
            r /= traced_dims[pos];
        }
        digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
    };

    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                acc += m[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Inner product `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianView {
        HermitianView::symmetrized(&random_matrix(n, rng))
    }

    #[test]
    fn identity_product() {
        let i3 = CMatrix::identity(3);
        assert_eq!(i3.matmul(&i3).unwrap(), i3);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = CMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn diagonal_spectrum() {
        let h = HermitianView::new(CMatrix::diag(&[cr(3.0), cr(1.0), cr(2.0)])).unwrap();
        let e = eig_hermitian(&h).unwrap();
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let h = random_hermitian(2, &mut rng);
            let m = h.matrix();
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)].norm();
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let e = eig_hermitian(&h).unwrap();
            assert!((e.values[0] - (mean - rad)).abs() < 1e-9);
            assert!((e.values[1] - (mean + rad)).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenpairs_and_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 5, 9, 18, 27, 36] {
            let h = random_hermitian(n, &mut rng);
            let e = eig_hermitian(&h).unwrap();
            for k in 0..n {
                let v = e.vectors.col(k);
                let hv = h.matrix().apply(&v).unwrap();
                for i in 0..n {
                    assert!((hv[i] - v[i] * e.values[k]).norm() < 1e-10);
                }
            }
            let vv = e.vectors.adjoint().matmul(&e.vectors).unwrap();
            assert!(vv.max_abs_diff(&CMatrix::identity(n)) < 1e-10);
            let rebuilt = e.reconstruct_with(|l| l);
            assert!((&rebuilt.into_matrix() - h.matrix()).frobenius_norm() < 1e-9);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let h = HermitianView::new(CMatrix::diag(&[cr(1.0), cr(-1.0)])).unwrap();
        let p = psd_project(&h).unwrap();
        assert!(p.matrix().max_abs_diff(&CMatrix::diag(&[cr(1.0), cr(0.0)])) < 1e-12);

        let psd = HermitianView::new(CMatrix::diag(&[cr(0.5), cr(2.0)])).unwrap();
        assert!(psd_project(&psd).unwrap().matrix().max_abs_diff(psd.matrix()) < 1e-12);
    }

    #[test]
    fn psd_projection_matches_eigen_clip_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = random_hermitian(3, &mut rng);
            // Oracle: clip through an independent nalgebra decomposition.
            let eig = SymmetricEigen::new(h.matrix().to_nalgebra());
            let mut oracle = DMatrix::<C64>::zeros(3, 3);
            for k in 0..3 {
                let lam = eig.eigenvalues[k].max(0.0);
                let v = eig.eigenvectors.column(k);
                oracle += v * v.adjoint() * cr(lam);
            }
            let got = psd_project(&h).unwrap();
            assert!(got.matrix().max_abs_diff(&CMatrix::from_nalgebra(&oracle)) < 1e-10);
            assert!(got.min_eigenvalue().unwrap() >= -1e-12);
        }
    }

    #[test]
    fn sqrt_of_identity_and_random_psd() {
        let i = HermitianView::identity(4);
        assert!(sqrt_psd(&i).unwrap().matrix().max_abs_diff(i.matrix()) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 6] {
            let a = random_matrix(n, &mut rng);
            let h = HermitianView::symmetrized(&(&a * &a.adjoint()));
            let s = sqrt_psd(&h).unwrap();
            let ss = s.matrix() * s.matrix();
            assert!(ss.max_abs_diff(h.matrix()) < 1e-9);
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let h = HermitianView::new(CMatrix::diag(&[cr(1.0), cr(-1e-3)])).unwrap();
        assert!(matches!(sqrt_psd(&h), Err(Error::NotPsd(_))));
    }

    #[test]
    fn kron_and_partial_trace() {
        assert_eq!(kron(&CMatrix::identity(3), &CMatrix::identity(3)), CMatrix::identity(9));

        let psi = [c(0.6, 0.0), c(0.0, 0.8), cr(0.0)];
        let zero = [cr(1.0), cr(0.0), cr(0.0)];
        let joint = kron(&CMatrix::outer(&psi), &CMatrix::outer(&zero));
        let reduced = partial_trace(&joint, &[3, 3], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&CMatrix::outer(&psi)) < 1e-15);
        let anc = partial_trace(&joint, &[3, 3], &[1]).unwrap();
        assert!(anc.max_abs_diff(&CMatrix::outer(&zero)) < 1e-15);
    }

    #[test]
    fn hermitian_view_rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(HermitianView::new(m), Err(Error::NotHermitian(_))));
        assert!(HermitianView::new(CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 2.0), c(-0.5, 0.0)], vec![cr(0.0), c(0.0, -1.0)]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,2.0],[-0.5,0.0]],[[0.0,0.0],[0.0,-1.0]]]");
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn seeded(seed: u64) -> ChaCha8Rng {
            ChaCha8Rng::seed_from_u64(seed)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn qr_unitaries_are_unitary(seed in any::<u64>(), n in 2usize..10) {
                let mut rng = seeded(seed);
                let g = random_matrix(n, &mut rng).to_nalgebra();
                let q = CMatrix::from_nalgebra(&g.qr().q());
                let qq = q.adjoint().matmul(&q).unwrap();
                prop_assert!(qq.max_abs_diff(&CMatrix::identity(n)) <= 1e-10);
            }

            #[test]
            fn trace_is_cyclic(seed in any::<u64>(), n in 1usize..12) {
                let mut rng = seeded(seed);
                let a = random_matrix(n, &mut rng);
                let b = random_matrix(n, &mut rng);
                let ab = (&a * &b).trace();
                let ba = (&b * &a).trace();
                prop_assert!((ab - ba).norm() <= 1e-11);
            }

            #[test]
            fn matmul_is_associative(seed in any::<u64>(), n in 1usize..8) {
                let mut rng = seeded(seed);
                let a = random_matrix(n, &mut rng);
                let b = random_matrix(n, &mut rng);
                let m = random_matrix(n, &mut rng);
                let left = &(&a * &b) * &m;
                let right = &a * &(&b * &m);
                prop_assert!((&left - &right).frobenius_norm() <= 1e-12);
            }

            #[test]
            fn reconstruction_holds(seed in any::<u64>(), n in 2usize..37) {
                let mut rng = seeded(seed);
                let h = random_hermitian(n, &mut rng);
                let e = eig_hermitian(&h).unwrap();
                let r = e.reconstruct_with(|l| l);
                prop_assert!((&r.into_matrix() - h.matrix()).frobenius_norm() <= 1e-9);
            }

            #[test]
            fn sqrt_squares_back(seed in any::<u64>(), n in 1usize..9) {
                let mut rng = seeded(seed);
                let a = random_matrix(n, &mut rng);
                let h = HermitianView::symmetrized(&(&a * &a.adjoint()));
                let s = sqrt_psd(&h).unwrap();
                prop_assert!((s.matrix() * s.matrix()).max_abs_diff(h.matrix()) <= 1e-9);
            }
        }
    }
}
