//! Dense complex linear algebra and the quantum-information primitives the
//! rest of the crate is built on.
//!
//! Eigendecompositions are delegated to `nalgebra`'s Hermitian solver; every
//! matrix is symmetrized as `(A + A†)/2` before it is handed over.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance.
pub const TOL_HERM: f64 = 1e-9;
/// Unit-trace tolerance.
pub const TOL_TRACE: f64 = 1e-9;
/// Negative eigenvalues in `[-TOL_PSD, 0)` are treated as zero.
pub const TOL_PSD: f64 = 1e-8;
/// Eigendecomposition reconstruction tolerance (relative to the Frobenius norm).
pub const TOL_EIG: f64 = 1e-10;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Largest matrix dimension any operation will materialize. Overridden by the
/// `MQCHAN_DIM_CAP` environment variable.
pub fn dim_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("MQCHAN_DIM_CAP")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&v: &usize| v > 0)
            .unwrap_or(DEFAULT_DIM_CAP)
    })
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        return Err(Error::DimensionLimit { dim, cap });
    }
    Ok(())
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or(Error::DimensionLimit { dim: usize::MAX, cap: dim_cap() })?;
    }
    check_dim(acc)?;
    Ok(acc)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 64 {
            write!(f, "{}", self.inner)?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: DMatrix::identity(dim, dim) }
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { inner: DMatrix::from_row_slice(rows, cols, &entries) })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Shape("ragged rows".into()));
            }
            entries.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::from_row_major(r, c, entries)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        Self { inner: m }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: DMatrix::from_fn(rows, cols, f) }
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn from_dmatrix(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.inner[(i, j)] = v;
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { inner: &self.inner * C64::new(s, 0.0) }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self { inner: &self.inner * s }
    }

    pub fn hermitian_part(&self) -> Self {
        Self { inner: (&self.inner + self.inner.adjoint()) * C64::new(0.5, 0.0) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.inner.shape(), other.inner.shape(), "shape mismatch");
        self.inner.iter().zip(other.inner.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `Re Tr(self · other)` for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.cols(), other.rows());
        assert_eq!(self.rows(), other.cols());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows() {
            for k in 0..self.cols() {
                acc += self.inner[(i, k)] * other.inner[(k, i)];
            }
        }
        acc.re
    }

    /// Kronecker product, subject to the dimension cap.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let rows = self.rows().checked_mul(other.rows());
        let cols = self.cols().checked_mul(other.cols());
        match (rows, cols) {
            (Some(r), Some(c)) => {
                check_dim(r.max(c))?;
                Ok(Self { inner: self.inner.kronecker(&other.inner) })
            }
            _ => Err(Error::DimensionLimit { dim: usize::MAX, cap: dim_cap() }),
        }
    }

    pub fn kron_power(&self, m: usize) -> Result<Self> {
        let mut acc = ComplexMatrix::identity(1);
        for _ in 0..m {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }

    /// Hermitian eigendecomposition of `(A + A†)/2`, eigenvalues descending.
    pub fn eigh(&self) -> EigenDecomposition {
        assert!(self.is_square(), "eigh needs a square matrix");
        let n = self.rows();
        if n == 0 {
            return EigenDecomposition { eigenvalues: Vec::new(), eigenvectors: ComplexMatrix::zeros(0, 0) };
        }
        let sym = self.hermitian_part().inner;
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        EigenDecomposition { eigenvalues, eigenvectors: ComplexMatrix { inner: vectors } }
    }

    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        assert!(self.is_square());
        if self.rows() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.hermitian_part().inner.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        self.inner.as_mut_slice()
    }

    pub(crate) fn data(&self) -> &[C64] {
        self.inner.as_slice()
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner * &rhs.inner }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.inner += &rhs.inner;
    }
}

impl ComplexMatrix {
    /// `self += s * rhs`
    pub fn add_scaled(&mut self, s: f64, rhs: &ComplexMatrix) {
        for (a, b) in self.inner.iter_mut().zip(rhs.inner.iter()) {
            *a += b * s;
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V f(Λ) V†`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors.inner;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = C64::new(f(lam), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        ComplexMatrix { inner: scaled * v.adjoint() }
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| x)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.inner.column(k).iter().copied().collect()
    }

    /// Projector onto the span of the eigenvectors whose eigenvalue satisfies `pred`.
    pub fn projector(&self, pred: impl Fn(f64) -> bool) -> ComplexMatrix {
        self.map(|x| if pred(x) { 1.0 } else { 0.0 })
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.kron(b)
}

/// Traces out every tensor factor not listed in `keep`. `dims` lists the
/// factor dimensions, most significant first.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Shape(format!(
            "factor dims {dims:?} (product {total}) do not match a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Shape(format!("keep index out of range for {} factors", dims.len())));
    }
    // Place value of each factor in the flattened index.
    let mut stride = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * dims[f]);
            for &o in &offs {
                for v in 0..dims[f] {
                    next.push(o + v * stride[f]);
                }
            }
            offs = next;
        }
        offs
    };
    let keep_off = offsets(&keep_sorted);
    let trace_off = offsets(&traced);
    let dk = keep_off.len();
    let src = m.as_dmatrix();
    let out = DMatrix::from_fn(dk, dk, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for &t in &trace_off {
            acc += src[(keep_off[a] + t, keep_off[b] + t)];
        }
        acc
    });
    Ok(ComplexMatrix::from_dmatrix(out))
}

/// A validated density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Validation("density matrix must be square".into()));
        }
        let herm_dev = matrix.max_abs_diff(&matrix.adjoint());
        if herm_dev > TOL_HERM {
            return Err(Error::Validation(format!("not Hermitian (deviation {herm_dev:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(Error::Validation(format!("trace {tr} is not 1")));
        }
        let min_ev = matrix.eigenvalues_hermitian().last().copied().unwrap_or(0.0);
        if min_ev < -TOL_PSD {
            return Err(Error::Validation(format!("negative eigenvalue {min_ev:.3e}")));
        }
        Ok(Self { matrix: matrix.hermitian_part() })
    }

    /// Wraps a matrix produced by trace-preserving completely positive maps
    /// applied to valid states. Only symmetrizes.
    pub fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix: matrix.hermitian_part() }
    }

    /// `|ψ⟩⟨ψ|` for the normalized `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Validation("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self { matrix: ComplexMatrix::outer(&v, &v) })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[k] = 1.0;
        Self { matrix: ComplexMatrix::from_diagonal(&d) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::from_diagonal(&vec![1.0 / dim as f64; dim]) }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(probs))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(Self { matrix: self.matrix.kron(&other.matrix)? })
    }

    pub fn tensor_power(&self, m: usize) -> Result<DensityMatrix> {
        Ok(Self { matrix: self.matrix.kron_power(m)? })
    }

    /// Convex combination `Σ wᵢ ρᵢ`. Weights must be nonnegative and sum to one.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<DensityMatrix> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Shape("mixture needs one weight per state".into()));
        }
        let dim = states[0].dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != dim {
                return Err(Error::Shape("mixture of states with different dims".into()));
            }
            acc.add_scaled(*w, &s.matrix);
        }
        Ok(Self::from_trusted(acc))
    }

    /// Eigenvalues clipped to `[0, 1]`, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        self.matrix.eigenvalues_hermitian().into_iter().map(|x| x.clamp(0.0, 1.0)).collect()
    }

    pub fn eigh(&self) -> EigenDecomposition {
        self.matrix.eigh()
    }

    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
        Ok(Self::from_trusted(partial_trace(&self.matrix, dims, keep)?))
    }
}

/// Shannon entropy in bits of a probability vector, `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let p = p.min(1.0);
            -p * p.log2()
        })
        .sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.spectrum())
}

/// `S(σ‖ω)` in bits; `f64::INFINITY` when the support of `σ` is not
/// contained in the support of `ω`.
pub fn relative_entropy(sigma: &DensityMatrix, omega: &DensityMatrix) -> f64 {
    assert_eq!(sigma.dim(), omega.dim(), "relative entropy of different dims");
    let eo = omega.eigh();
    let kernel = eo.projector(|x| x <= TOL_PSD);
    if sigma.matrix.trace_product(&kernel) > TOL_PSD {
        return f64::INFINITY;
    }
    let log_omega = eo.map(|x| if x > TOL_PSD { x.log2() } else { 0.0 });
    let cross = sigma.matrix.trace_product(&log_omega);
    let d = -von_neumann_entropy(sigma) - cross;
    d.max(0.0)
}

/// Square root of a positive semidefinite matrix (negative round-off clipped).
pub fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    m.eigh().map(|x| x.max(0.0).sqrt())
}

/// `F(A, B) = Tr √(√A B √A)` for positive semidefinite operators, not
/// necessarily normalized.
pub fn fidelity_psd(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let sa = sqrt_psd(a);
    let inner = &(&sa * b) * &sa;
    inner.eigenvalues_hermitian().iter().map(|&x| x.max(0.0).sqrt()).sum()
}

pub fn fidelity(sigma: &DensityMatrix, omega: &DensityMatrix) -> f64 {
    assert_eq!(sigma.dim(), omega.dim(), "fidelity of different dims");
    fidelity_psd(&sigma.matrix, &omega.matrix).clamp(0.0, 1.0)
}

/// Sum of absolute eigenvalues of the Hermitian part.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    m.eigenvalues_hermitian().iter().map(|x| x.abs()).sum()
}

/// A POVM given by its explicit elements; the completion `E₀ = I − Σ Eᵢ` is
/// implied.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::Validation("empty POVM".into()));
        };
        let dim = first.rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &elements {
            if !e.is_square() || e.rows() != dim {
                return Err(Error::Shape("POVM elements of different dims".into()));
            }
            let min_ev = e.eigenvalues_hermitian().last().copied().unwrap_or(0.0);
            if min_ev < -TOL_PSD {
                return Err(Error::Validation(format!("POVM element has eigenvalue {min_ev:.3e}")));
            }
            sum += e;
        }
        let top = sum.eigenvalues_hermitian().first().copied().unwrap_or(0.0);
        if top > 1.0 + TOL_PSD {
            return Err(Error::Validation(format!("POVM elements sum above identity ({top:.6})")));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PovmOutcome {
    /// `Tr(ρ Eᵢ)` for each listed element.
    pub probs: Vec<f64>,
    /// Probability of the implied completion element (no inference).
    pub inconclusive: f64,
}

pub fn povm_measure(rho: &DensityMatrix, povm: &Povm) -> Result<PovmOutcome> {
    if rho.dim() != povm.dim() {
        return Err(Error::Shape(format!("state of dim {} measured with a POVM of dim {}", rho.dim(), povm.dim())));
    }
    let probs: Vec<f64> = povm.elements.iter().map(|e| rho.matrix.trace_product(e).clamp(0.0, 1.0)).collect();
    let total: f64 = probs.iter().sum();
    Ok(PovmOutcome { probs, inconclusive: (1.0 - total).max(0.0) })
}

/// Applies `ρ ↦ Σ K ρ K†` on one tensor slot of `x`. `x` acts on
/// `pre ⊗ d_in ⊗ post`; the result acts on `pre ⊗ d_out ⊗ post`.
pub(crate) fn apply_kraus_on_slot(
    x: &ComplexMatrix,
    pre: usize,
    post: usize,
    kraus: &[ComplexMatrix],
) -> ComplexMatrix {
    let d_in = kraus[0].cols();
    let d_out = kraus[0].rows();
    debug_assert_eq!(x.rows(), pre * d_in * post);
    let rows = pre * d_out * post;
    let mut acc = ComplexMatrix::zeros(rows, rows);
    for k in kraus {
        let left = left_apply_on_slot(x, pre, post, k);
        // right multiplication by I ⊗ K† ⊗ I mixes whole (contiguous) columns
        let kd = k.as_dmatrix();
        let src = left.data();
        let dst = acc.data_mut();
        for a in 0..pre {
            for c in 0..post {
                for bo in 0..d_out {
                    let col_out = (a * d_out + bo) * post + c;
                    let dc = &mut dst[col_out * rows..(col_out + 1) * rows];
                    for bi in 0..d_in {
                        let kv = kd[(bo, bi)].conj();
                        if kv.re == 0.0 && kv.im == 0.0 {
                            continue;
                        }
                        let col_in = (a * d_in + bi) * post + c;
                        for (y, s) in dc.iter_mut().zip(&src[col_in * rows..(col_in + 1) * rows]) {
                            *y += kv * s;
                        }
                    }
                }
            }
        }
    }
    acc
}

/// `(I_pre ⊗ K ⊗ I_post) · x`
fn left_apply_on_slot(x: &ComplexMatrix, pre: usize, post: usize, k: &ComplexMatrix) -> ComplexMatrix {
    let d_in = k.cols();
    let d_out = k.rows();
    let cols = x.cols();
    let rows_in = pre * d_in * post;
    let rows_out = pre * d_out * post;
    let mut out = ComplexMatrix::zeros(rows_out, cols);
    let kd = k.as_dmatrix();
    let src = x.data();
    let dst = out.data_mut();
    // Column-major storage: column j occupies [j*rows, (j+1)*rows).
    for j in 0..cols {
        let sc = &src[j * rows_in..(j + 1) * rows_in];
        let dc = &mut dst[j * rows_out..(j + 1) * rows_out];
        for a in 0..pre {
            for c in 0..post {
                for bo in 0..d_out {
                    let mut acc = C64::new(0.0, 0.0);
                    for bi in 0..d_in {
                        let kv = kd[(bo, bi)];
                        if kv.re != 0.0 || kv.im != 0.0 {
                            acc += kv * sc[(a * d_in + bi) * post + c];
                        }
                    }
                    dc[(a * d_out + bo) * post + c] = acc;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn ket_plus() -> Vec<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(s, 0.0), c(s, 0.0)]
    }

    #[test]
    fn tensor_product_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2).unwrap(), ComplexMatrix::identity(4));

        let p0 = ComplexMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_diagonal(&[0.0, 1.0]);
        assert_eq!(tensor_product(&p0, &p1).unwrap(), ComplexMatrix::from_diagonal(&[0.0, 1.0, 0.0, 0.0]));

        // (σx ⊗ σx)² by explicit 4x4 multiplication against the anti-diagonal.
        let xx = tensor_product(&sigma_x(), &sigma_x()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx.get(i, j), c(expect, 0.0));
            }
        }
        assert_eq!(&xx * &xx, ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_product_respects_cap() {
        let big = ComplexMatrix::identity(dim_cap());
        let err = tensor_product(&big, &ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionLimit { .. }));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let sigma = DensityMatrix::pure(&ket_plus()).unwrap();
        let joint = rho.tensor(&sigma).unwrap();
        let first = partial_trace(joint.matrix(), &[2, 2], &[0]).unwrap();
        assert!(first.max_abs_diff(rho.matrix()) < 1e-14);
        let second = partial_trace(joint.matrix(), &[2, 2], &[1]).unwrap();
        assert!(second.max_abs_diff(sigma.matrix()) < 1e-14);

        // Bell state: contract indices by hand.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        let reduced = partial_trace(bell.matrix(), &[2, 2], &[0]).unwrap();
        let mut manual = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = c(0.0, 0.0);
                for t in 0..2 {
                    acc += bell.matrix().get(2 * a + t, 2 * b + t);
                }
                manual.set(a, b, acc);
            }
        }
        assert!(reduced.max_abs_diff(&manual) < 1e-15);
        assert!(reduced.max_abs_diff(&ComplexMatrix::from_diagonal(&[0.5, 0.5])) < 1e-15);

        let all = partial_trace(joint.matrix(), &[2, 2], &[0, 1]).unwrap();
        assert_eq!(&all, joint.matrix());
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&m, &[2, 3], &[0]), Err(Error::Shape(_))));
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(von_neumann_entropy(&DensityMatrix::basis(2, 0)), 0.0);
        assert_abs_diff_eq!(von_neumann_entropy(&DensityMatrix::maximally_mixed(2)), 1.0, epsilon = 1e-12);
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        assert_abs_diff_eq!(von_neumann_entropy(&rho), h, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 0.468_995_593_589_281_2, epsilon = 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = DensityMatrix::pure(&ket_plus()).unwrap();
        assert_abs_diff_eq!(relative_entropy(&rho, &rho), 0.0, epsilon = 1e-9);
        let zero = DensityMatrix::basis(2, 0);
        let one = DensityMatrix::basis(2, 1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(relative_entropy(&zero, &mixed), 1.0, epsilon = 1e-12);
        assert_eq!(relative_entropy(&zero, &one), f64::INFINITY);
    }

    #[test]
    fn fidelity_examples() {
        let rho = DensityMatrix::from_diagonal(&[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &rho), 1.0, epsilon = 1e-12);
        let zero = DensityMatrix::basis(2, 0);
        let one = DensityMatrix::basis(2, 1);
        assert_abs_diff_eq!(fidelity(&zero, &one), 0.0, epsilon = 1e-12);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(fidelity(&zero, &mixed), 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        let rho = DensityMatrix::pure(&ket_plus()).unwrap();
        assert_abs_diff_eq!(trace_norm(rho.matrix()), 1.0, epsilon = 1e-12);
        let diff = &rho.matrix().scale(0.7) - &rho.matrix().scale(0.2);
        assert_abs_diff_eq!(trace_norm(&diff), 0.5, epsilon = 1e-12);
        let a = ComplexMatrix::from_diagonal(&[0.5, -0.5]);
        assert_abs_diff_eq!(trace_norm(&a), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn povm_examples() {
        let basis =
            Povm::new(vec![ComplexMatrix::from_diagonal(&[1.0, 0.0]), ComplexMatrix::from_diagonal(&[0.0, 1.0])])
                .unwrap();
        let out = povm_measure(&DensityMatrix::basis(2, 0), &basis).unwrap();
        assert_eq!(out.probs, vec![1.0, 0.0]);
        assert_abs_diff_eq!(out.inconclusive, 0.0);

        let trivial = Povm::new(vec![ComplexMatrix::identity(2)]).unwrap();
        let out = povm_measure(&DensityMatrix::pure(&ket_plus()).unwrap(), &trivial).unwrap();
        assert_abs_diff_eq!(out.probs[0], 1.0, epsilon = 1e-12);

        let half = ComplexMatrix::identity(2).scale(0.5);
        let coin = Povm::new(vec![half.clone(), half]).unwrap();
        let out = povm_measure(&DensityMatrix::pure(&ket_plus()).unwrap(), &coin).unwrap();
        assert_abs_diff_eq!(out.probs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.probs[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn povm_rejects_overcomplete() {
        let err = Povm::new(vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)]);
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = povm_measure(&DensityMatrix::basis(4, 0), &Povm::new(vec![ComplexMatrix::identity(2)]).unwrap());
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[1.2, -0.2])).is_err());
        let non_herm =
            ComplexMatrix::from_row_major(2, 2, vec![c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(DensityMatrix::new(non_herm).is_err());
    }

    #[test]
    fn slot_application_matches_kron() {
        // K on the middle factor of a 2⊗2⊗2 operator equals (I⊗K⊗I) X (I⊗K†⊗I).
        let k =
            ComplexMatrix::from_row_major(2, 2, vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.1, -0.4)]).unwrap();
        let x = ComplexMatrix::from_fn(8, 8, |i, j| c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
        let full = ComplexMatrix::identity(2).kron(&k).unwrap().kron(&ComplexMatrix::identity(2)).unwrap();
        let expect = &(&full * &x) * &full.adjoint();
        let got = apply_kraus_on_slot(&x, 2, 2, std::slice::from_ref(&k));
        assert!(got.max_abs_diff(&expect) < 1e-12);
    }
}
