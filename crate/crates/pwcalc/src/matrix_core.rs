//! Hermitian linear algebra: eigendecomposition, square roots, pseudo-inverses,
//! subspaces and the JSON matrix file format.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Iteration cap handed to the eigensolver.
pub const EIGH_MAX_ITERATIONS: usize = 10_000;

/// Orthonormality tolerance for subspace bases.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Cosine threshold used by [`subspace_meet`].
pub const MEET_COSINE_TOL: f64 = 1e-10;

/// Hermitian deviation accepted when reading matrix files.
pub const FILE_HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("eigensolver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} is below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis is not orthonormal: Gram entry ({row}, {col}) is off by {deviation:e}")]
    NotOrthonormal { row: usize, col: usize, deviation: f64 },
    #[error("state must have positive trace, got {trace:e}")]
    NonPositiveTrace { trace: f64 },
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { C64::default() })
}

/// Builds a complex matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j]))
}

/// Largest |M_ij - conj(M_ji)| together with its position.
pub fn hermitian_deviation(m: &CMatrix) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

pub fn check_square(m: &CMatrix) -> Result<usize, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn check_hermitian(m: &CMatrix, tol: f64) -> Result<(), LinalgError> {
    check_square(m)?;
    let scale = 1.0 + max_abs_entry(m);
    let (deviation, row, col) = hermitian_deviation(m);
    if deviation > tol * scale {
        return Err(LinalgError::NotHermitian { row, col, deviation });
    }
    Ok(())
}

/// (M + M*) / 2. Bit-preserving on exactly Hermitian input.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigendecomposition of [[0, M], [M*, 0]], whose eigenvalues are ±σ_k(M)
/// padded with zeros. Used instead of nalgebra's complex SVD, which loses
/// accuracy on some complex inputs.
fn hermitian_embedding(m: &CMatrix) -> Eigh {
    let (n, k) = m.shape();
    let mut h = zeros(n + k, n + k);
    h.view_mut((0, n), (n, k)).copy_from(m);
    h.view_mut((n, 0), (k, n)).copy_from(&m.adjoint());
    eigh(&h).expect("embedding eigendecomposition")
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_embedding(m).max_abs()
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// n · eps · max |λ|.
    pub fn psd_tolerance(&self) -> f64 {
        self.dim() as f64 * f64::EPSILON * self.max_abs()
    }

    /// n · eps · λ_max, floored at zero.
    pub fn default_rank_tol(&self) -> f64 {
        let top = self.values.last().copied().unwrap_or(0.0).max(0.0);
        self.dim() as f64 * f64::EPSILON * top
    }

    pub fn column(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// V diag(f(λ)) V*.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let w = f(self.values[k]);
            scaled.column_mut(k).scale_mut(w);
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    fn check_psd(&self) -> Result<(), LinalgError> {
        let tol = self.psd_tolerance();
        if let Some(&low) = self.values.first() {
            if low < -tol {
                return Err(LinalgError::NotPsd { eigenvalue: low, tolerance: tol });
            }
        }
        Ok(())
    }
}

pub fn eigh(m: &CMatrix) -> Result<Eigh, LinalgError> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(Eigh { values: Vec::new(), vectors: zeros(0, 0) });
    }
    let sym = hermitian_part(m);
    let decomposition = SymmetricEigen::try_new(sym, f64::EPSILON, EIGH_MAX_ITERATIONS)
        .ok_or(LinalgError::NoConvergence { iterations: EIGH_MAX_ITERATIONS })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b]));
    let values = order.iter().map(|&k| decomposition.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| decomposition.eigenvectors[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

pub fn check_psd(m: &CMatrix) -> Result<Eigh, LinalgError> {
    let e = eigh(m)?;
    e.check_psd()?;
    Ok(e)
}

pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    psd_power(m, 0.5)
}

/// M^p for PSD M and p > 0. Eigenvalues within τ_psd of zero (either sign)
/// are round-off and are set to 0 before the power.
pub fn psd_power(m: &CMatrix, p: f64) -> Result<CMatrix, LinalgError> {
    let e = check_psd(m)?;
    let tol = e.psd_tolerance();
    Ok(e.map(|x| if x <= tol { 0.0 } else { x.powf(p) }))
}

/// Eigenpairs of a PSD matrix above a rank tolerance.
#[derive(Debug, Clone)]
pub struct PositiveSpectrum {
    pub range: Subspace,
    pub values: Vec<f64>,
    pub rank_tol: f64,
}

pub fn positive_spectrum(m: &CMatrix, rank_tol: Option<f64>) -> Result<PositiveSpectrum, LinalgError> {
    let e = check_psd(m)?;
    let tol = rank_tol.unwrap_or_else(|| e.default_rank_tol());
    let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > tol).collect();
    let n = e.dim();
    let basis = CMatrix::from_fn(n, keep.len(), |i, j| e.vectors[(i, keep[j])]);
    Ok(PositiveSpectrum {
        range: Subspace::from_orthonormal(basis),
        values: keep.iter().map(|&k| e.values[k]).collect(),
        rank_tol: tol,
    })
}

impl PositiveSpectrum {
    /// Σ g(λ_k) v_k v_k* over the retained eigenpairs.
    pub fn map(&self, mut g: impl FnMut(f64) -> f64) -> CMatrix {
        let mut scaled = self.range.basis.clone();
        for (k, &v) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(g(v));
        }
        hermitian_part(&(scaled * self.range.basis.adjoint()))
    }
}

#[derive(Debug, Clone)]
pub struct PinvSqrt {
    pub matrix: CMatrix,
    pub range: Subspace,
}

/// Moore–Penrose pseudo-inverse of M^{1/2} and the range of M.
pub fn pinv_sqrt(m: &CMatrix, rank_tol: Option<f64>) -> Result<PinvSqrt, LinalgError> {
    let spec = positive_spectrum(m, rank_tol)?;
    Ok(PinvSqrt { matrix: spec.map(|x| 1.0 / x.sqrt()), range: spec.range })
}

/// Moore–Penrose pseudo-inverse of a PSD matrix.
pub fn pinv_psd(m: &CMatrix, rank_tol: Option<f64>) -> Result<CMatrix, LinalgError> {
    Ok(positive_spectrum(m, rank_tol)?.map(|x| 1.0 / x))
}

/// A subspace of C^n stored through an orthonormal basis (n × k isometry).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    pub fn new(basis: CMatrix) -> Result<Self, LinalgError> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                let deviation = (gram[(i, j)] - c(target)).norm();
                if deviation > ORTHONORMAL_TOL {
                    return Err(LinalgError::NotOrthonormal { row: i, col: j, deviation });
                }
            }
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_orthonormal(basis: CMatrix) -> Self {
        Self { basis }
    }

    pub fn zero(n: usize) -> Self {
        Self { basis: zeros(n, 0) }
    }

    pub fn full(n: usize) -> Self {
        Self { basis: identity(n) }
    }

    /// span of the given standard basis vectors
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        Self {
            basis: CMatrix::from_fn(n, indices.len(), |i, j| if i == indices[j] { c(1.0) } else { C64::default() }),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn project(&self, v: &CVector) -> CVector {
        &self.basis * (self.basis.adjoint() * v)
    }

    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Subspace::full(n);
        }
        if self.dim() == n {
            return Subspace::zero(n);
        }
        let residual = identity(n) - self.projector();
        let e = eigh(&residual).expect("projector eigendecomposition");
        let keep: Vec<usize> = (0..n).filter(|&k| e.values[k] > 0.5).collect();
        Subspace::from_orthonormal(CMatrix::from_fn(n, keep.len(), |i, j| e.vectors[(i, keep[j])]))
    }

    /// Squared sines of the principal angles from `other` into `self`,
    /// ascending, with the matching directions of `other` as columns.
    pub fn sines_squared_of(&self, other: &Subspace) -> Eigh {
        let q = &other.basis;
        let gram = q.adjoint() * q - (q.adjoint() * &self.basis) * (self.basis.adjoint() * q);
        let mut e = eigh(&gram).expect("gram eigendecomposition");
        for v in e.values.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        e.vectors = q * &e.vectors;
        e
    }

    /// Cosines of the principal angles between the two subspaces, descending.
    pub fn principal_cosines(&self, other: &Subspace) -> Vec<f64> {
        let (small, large) = if self.dim() <= other.dim() { (self, other) } else { (other, self) };
        large.sines_squared_of(small).values.iter().map(|s| (1.0 - s).sqrt()).collect()
    }

    /// Whether `other` ⊆ `self`, judged by principal-angle cosines ≥ 1 - tol.
    /// On failure returns the direction of `other` farthest from `self`.
    pub fn contains(&self, other: &Subspace, tol: f64) -> Result<(), CVector> {
        if other.dim() == 0 {
            return Ok(());
        }
        let e = self.sines_squared_of(other);
        let k = e.dim() - 1;
        let sin2_max = sin2_from_cos_tol(tol);
        if e.values[k] > sin2_max {
            return Err(e.column(k));
        }
        Ok(())
    }

    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.contains(other, tol).is_ok() && other.contains(self, tol).is_ok()
    }

    /// Direct sum basis for block-diagonal embeddings.
    pub fn direct_sum(&self, other: &Subspace) -> Subspace {
        let (n1, n2) = (self.ambient_dim(), other.ambient_dim());
        let (k1, k2) = (self.dim(), other.dim());
        let mut b = zeros(n1 + n2, k1 + k2);
        b.view_mut((0, 0), (n1, k1)).copy_from(&self.basis);
        b.view_mut((n1, k1), (n2, k2)).copy_from(&other.basis);
        Subspace::from_orthonormal(b)
    }
}

fn sin2_from_cos_tol(tol: f64) -> f64 {
    let cos = 1.0 - tol;
    1.0 - cos * cos
}

/// range(P) ∩ range(Q) through principal angles with cosine ≥ 1 - 1e-10.
pub fn subspace_meet(p: &Subspace, q: &Subspace) -> Subspace {
    assert_eq!(p.ambient_dim(), q.ambient_dim(), "subspace_meet: ambient dimensions differ");
    let n = p.ambient_dim();
    if p.dim() == 0 || q.dim() == 0 {
        return Subspace::zero(n);
    }
    let e = p.sines_squared_of(q);
    let threshold = sin2_from_cos_tol(MEET_COSINE_TOL);
    let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] <= threshold).collect();
    Subspace::from_orthonormal(CMatrix::from_fn(n, keep.len(), |i, j| e.vectors[(i, keep[j])]))
}

/// Orthonormal basis of the column space, via SVD with a relative cut.
pub fn orthonormalize(m: CMatrix) -> Subspace {
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * op_norm(&m).max(1.0) * 16.0;
    range_of(&m, tol)
}

/// Orthonormal basis of the column space of `m`, dropping singular values ≤ tol.
pub fn range_of(m: &CMatrix, tol: f64) -> Subspace {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Subspace::zero(n);
    }
    let e = hermitian_embedding(m);
    let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > tol).collect();
    if keep.is_empty() {
        return Subspace::zero(n);
    }
    // top blocks of the +σ eigenvectors are the left singular vectors scaled by 1/√2
    let u = CMatrix::from_fn(n, keep.len(), |i, j| e.vectors[(i, keep[j])] * std::f64::consts::SQRT_2);
    let p = eigh(&hermitian_part(&(&u * u.adjoint()))).expect("projector eigendecomposition");
    let cols: Vec<usize> = (0..n).filter(|&k| p.values[k] > 0.5).collect();
    Subspace::from_orthonormal(CMatrix::from_fn(n, cols.len(), |i, j| p.vectors[(i, cols[j])]))
}

/// Kernel of `m` (as a subspace of its domain), singular values ≤ tol treated as zero.
pub fn kernel_of(m: &CMatrix, tol: f64) -> Subspace {
    if m.nrows() == 0 {
        return Subspace::full(m.ncols());
    }
    range_of(&m.adjoint(), tol).complement()
}

/// A positive trace-class functional on B(H): a PSD matrix of positive trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    density: CMatrix,
    trace: f64,
}

impl State {
    pub fn new(density: CMatrix) -> Result<Self, LinalgError> {
        check_hermitian(&density, 1e-12)?;
        let density = hermitian_part(&density);
        check_psd(&density)?;
        let trace = density.trace().re;
        if trace <= 0.0 {
            return Err(LinalgError::NonPositiveTrace { trace });
        }
        Ok(Self { density, trace })
    }

    /// The vector functional ω_ξ(X) = ⟨Xξ, ξ⟩.
    pub fn vector(xi: &CVector) -> Result<Self, LinalgError> {
        Self::new(xi * xi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Re Tr(ρX).
    pub fn expect(&self, x: &CMatrix) -> f64 {
        (&self.density * x).trace().re
    }

    /// The pulled-back state Σ K_i* ρ K_i of a Kraus family.
    pub fn pull_back(&self, kraus: &[CMatrix]) -> Result<Self, LinalgError> {
        let n = kraus.first().map_or(self.dim(), |k| k.ncols());
        let mut acc = zeros(n, n);
        for k in kraus {
            acc += k.adjoint() * &self.density * k;
        }
        Self::new(hermitian_part(&acc))
    }
}

/// Complex grid as stored on disk: separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexGrid {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ComplexGrid {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self { re: rows(|z| z.re), im: Some(rows(|z| z.im)) }
    }

    /// Parses a rows × cols grid; `field` names the grid in errors.
    pub fn to_matrix(&self, rows: usize, cols: usize, field: &str) -> Result<CMatrix, MatrixFileError> {
        check_grid(&self.re, rows, cols, &field_path(field, "re"))?;
        if let Some(im) = &self.im {
            check_grid(im, rows, cols, &field_path(field, "im"))?;
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }
}

fn field_path(parent: &str, child: &str) -> String {
    if parent.is_empty() {
        child.to_string()
    } else {
        format!("{parent}.{child}")
    }
}

fn check_grid(grid: &[Vec<f64>], rows: usize, cols: usize, field: &str) -> Result<(), MatrixFileError> {
    if grid.len() != rows {
        return Err(MatrixFileError::DimensionMismatch { field: field.to_string(), expected: rows, found: grid.len() });
    }
    for (i, row) in grid.iter().enumerate() {
        if row.len() != cols {
            return Err(MatrixFileError::DimensionMismatch {
                field: format!("{field}[{i}]"),
                expected: cols,
                found: row.len(),
            });
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(MatrixFileError::NonFinite { field: format!("{field}[{i}]"), value: *bad });
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum MatrixFileError {
    #[error("cannot access matrix file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed matrix file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: expected length {expected}, found {found}")]
    DimensionMismatch { field: String, expected: usize, found: usize },
    #[error("field `{field}`: non-finite entry {value}")]
    NonFinite { field: String, value: f64 },
    #[error("field `{field}`: not Hermitian at ({row}, {col}), deviation {deviation:e}")]
    NotHermitian { field: String, row: usize, col: usize, deviation: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    #[serde(flatten)]
    grid: ComplexGrid,
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix, MatrixFileError> {
    let file: MatrixFile = serde_json::from_str(text)?;
    let m = file.grid.to_matrix(file.n, file.n, "")?;
    for i in 0..file.n {
        for j in i..file.n {
            let (a, b) = (m[(i, j)], m[(j, i)].conj());
            let (dre, dim) = ((a.re - b.re).abs(), (a.im - b.im).abs());
            if dre.max(dim) > FILE_HERMITIAN_TOL {
                let field = if dre >= dim { "re" } else { "im" };
                return Err(MatrixFileError::NotHermitian { field: field.into(), row: i, col: j, deviation: dre.max(dim) });
            }
        }
    }
    Ok(hermitian_part(&m))
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    let file = MatrixFile { n: m.nrows(), grid: ComplexGrid::from_matrix(m) };
    serde_json::to_string(&file).expect("matrix serialization")
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMatrix, MatrixFileError> {
    matrix_from_json(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &CMatrix) -> Result<(), MatrixFileError> {
    fs::write(path, matrix_to_json(m))?;
    Ok(())
}
