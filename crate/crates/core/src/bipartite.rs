//! Dense complex linear algebra with bipartite structure.
//!
//! Index convention used throughout the crate: the basis vector
//! `e_i ⊗ e_j` of `C^dA ⊗ C^dB` sits at position `i * dB + j` (first factor
//! slow). Matrices on the composite space use the same ordering for rows and
//! columns.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Max-entry tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative threshold for numerical and Schmidt rank.
pub const RANK_TOL: f64 = 1e-8;
const ZERO_NORM: f64 = 1e-14;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A dense square complex matrix, optionally tagged with a bipartite split.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOp {
    mat: CMatrix,
    dims: Option<(usize, usize)>,
}

impl MatrixOp {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        Ok(Self { mat, dims: None })
    }

    pub fn bipartite(mat: CMatrix, da: usize, db: usize) -> Result<Self> {
        Self::new(mat)?.with_dims(da, db)
    }

    pub fn with_dims(mut self, da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 || da * db != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: da * db,
            });
        }
        self.dims = Some((da, db));
        Ok(self)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: CMatrix::identity(n, n),
            dims: None,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: CMatrix::zeros(n, n),
            dims: None,
        }
    }

    /// Real matrix from row-major entries.
    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            C64::new(entries[i * n + j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        max_abs_diff(&self.mat, &self.mat.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn max_abs_diff(&self, other: &MatrixOp) -> f64 {
        max_abs_diff(&self.mat, &other.mat)
    }

    pub fn scale(&self, s: f64) -> MatrixOp {
        MatrixOp {
            mat: self.mat.scale(s),
            dims: self.dims,
        }
    }

    pub(crate) fn from_parts(mat: CMatrix, dims: Option<(usize, usize)>) -> Self {
        debug_assert!(dims.is_none_or(|(a, b)| a * b == mat.nrows()));
        Self { mat, dims }
    }

    fn require_dims(&self) -> Result<(usize, usize)> {
        self.dims.ok_or(Error::MissingDims)
    }

    fn require_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Vector in `C^dA ⊗ C^dB`, `amps[i * dB + j]` is the `e_i ⊗ e_j` component.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteVector {
    da: usize,
    db: usize,
    amps: CVector,
}

impl BipartiteVector {
    pub fn new(da: usize, db: usize, amps: CVector) -> Result<Self> {
        if amps.len() != da * db {
            return Err(Error::DimMismatch {
                expected: da * db,
                got: amps.len(),
            });
        }
        Ok(Self { da, db, amps })
    }

    pub fn product(u: &CVector, v: &CVector) -> Self {
        let amps = CVector::from_fn(u.len() * v.len(), |idx, _| {
            u[idx / v.len()] * v[idx % v.len()]
        });
        Self {
            da: u.len(),
            db: v.len(),
            amps,
        }
    }

    /// Unnormalized `Σ_i e_i ⊗ e_i`.
    pub fn max_entangled(d: usize) -> Self {
        let mut amps = CVector::zeros(d * d);
        for i in 0..d {
            amps[i * d + i] = ONE;
        }
        Self { da: d, db: d, amps }
    }

    /// Reshape a `dA × dB` coefficient matrix into a vector.
    pub fn from_coefficients(m: &CMatrix) -> Self {
        let (da, db) = m.shape();
        let amps = CVector::from_fn(da * db, |idx, _| m[(idx / db, idx % db)]);
        Self { da, db, amps }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Self {
        Self {
            da: self.da,
            db: self.db,
            amps: self.amps.unscale(self.norm()),
        }
    }

    /// Coefficient matrix `M[i][j] = amps[i * dB + j]`.
    pub fn coefficients(&self) -> CMatrix {
        CMatrix::from_fn(self.da, self.db, |i, j| self.amps[i * self.db + j])
    }

    /// `|v⟩⟨v|` with bipartite dims attached.
    pub fn projector(&self) -> MatrixOp {
        MatrixOp::from_parts(&self.amps * self.amps.adjoint(), Some((self.da, self.db)))
    }

    /// `⟨v|X|v⟩`.
    pub fn quadratic_form(&self, x: &MatrixOp) -> Result<C64> {
        if x.dim() != self.amps.len() {
            return Err(Error::DimMismatch {
                expected: self.amps.len(),
                got: x.dim(),
            });
        }
        Ok(self.amps.dotc(&(x.matrix() * &self.amps)))
    }

    pub fn schmidt_rank(&self, tol: f64) -> Result<usize> {
        schmidt_decompose(self, tol).map(|s| s.rank)
    }
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    dims: [usize; 2],
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for BipartiteVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson {
            dims: [self.da, self.db],
            re: self.amps.iter().map(|z| z.re).collect(),
            im: self.amps.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = VectorJson::deserialize(d)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom("re/im length mismatch"));
        }
        let amps = CVector::from_iterator(
            raw.re.len(),
            raw.re.iter().zip(&raw.im).map(|(&r, &i)| C64::new(r, i)),
        );
        BipartiteVector::new(raw.dims[0], raw.dims[1], amps).map_err(serde::de::Error::custom)
    }
}

/// Wire form shared by operators and maps:
/// `{"dim": n, "dims": [dA, dB] | null, "re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    #[serde(default)]
    pub dims: Option<[usize; 2]>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repr: Option<String>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix, dims: Option<(usize, usize)>, repr: Option<&str>) -> Self {
        let n = m.nrows();
        MatrixJson {
            dim: n,
            dims: dims.map(|(a, b)| [a, b]),
            re: (0..n)
                .map(|i| (0..n).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..n)
                .map(|i| (0..n).map(|j| m[(i, j)].im).collect())
                .collect(),
            repr: repr.map(str::to_owned),
        }
    }

    pub fn to_op(&self) -> Result<MatrixOp> {
        let n = self.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::Parse(format!("expected {n}x{n} re/im arrays")));
        }
        let mat = CMatrix::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        let op = MatrixOp::new(mat)?;
        match self.dims {
            Some([a, b]) => op.with_dims(a, b),
            None => Ok(op),
        }
    }
}

impl Serialize for MatrixOp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.mat, self.dims, None).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixOp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MatrixJson::deserialize(d)?
            .to_op()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Descending, length `min(dA, dB)`.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<CVector>,
    pub right_vectors: Vec<CVector>,
    pub rank: usize,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> BipartiteVector {
        let da = self.left_vectors[0].len();
        let db = self.right_vectors[0].len();
        let mut amps = CVector::zeros(da * db);
        for ((c, u), v) in self
            .coefficients
            .iter()
            .zip(&self.left_vectors)
            .zip(&self.right_vectors)
        {
            amps += BipartiteVector::product(u, v).amps.scale(*c);
        }
        BipartiteVector { da, db, amps }
    }
}

/// Singular values and vectors sorted by descending singular value.
pub(crate) struct SortedSvd {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v_t: CMatrix,
}

pub(crate) fn svd_sorted(m: &CMatrix) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    SortedSvd {
        u: CMatrix::from_fn(u.nrows(), order.len(), |i, l| u[(i, order[l])]),
        values: order.iter().map(|&l| svd.singular_values[l]).collect(),
        v_t: CMatrix::from_fn(order.len(), v_t.ncols(), |l, j| v_t[(order[l], j)]),
    }
}

fn count_above(values: &[f64], tol: f64) -> usize {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > tol * max).count()
}

/// Number of singular values above `tol * σ_max`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    count_above(svd.singular_values.as_slice(), tol)
}

pub fn schmidt_decompose(v: &BipartiteVector, tol: f64) -> Result<SchmidtDecomposition> {
    let norm = v.norm();
    if norm < ZERO_NORM {
        return Err(Error::ZeroVector { norm });
    }
    if tol <= 0.0 {
        return Err(Error::BadParam(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let SortedSvd { u, values, v_t } = svd_sorted(&v.coefficients());
    // M = Σ s_l u_l v_l^†, so the right Schmidt vectors are the rows of V^†.
    let left_vectors = (0..values.len())
        .map(|l| u.column(l).into_owned())
        .collect();
    let right_vectors = (0..values.len()).map(|l| v_t.row(l).transpose()).collect();
    let rank = count_above(&values, tol);
    Ok(SchmidtDecomposition {
        coefficients: values,
        left_vectors,
        right_vectors,
        rank,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Transpose one tensor factor. For `B`: `out[ij,kl] = X[il,kj]`.
pub fn partial_transpose(x: &MatrixOp, subsystem: Subsystem) -> Result<MatrixOp> {
    let (da, db) = x.require_dims()?;
    let m = x.matrix();
    let out = CMatrix::from_fn(da * db, da * db, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        match subsystem {
            Subsystem::B => m[(i * db + l, k * db + j)],
            Subsystem::A => m[(k * db + j, i * db + l)],
        }
    });
    Ok(MatrixOp::from_parts(out, Some((da, db))))
}

fn side_of(m: &MatrixOp, d: usize) -> Result<()> {
    if d == 0 || m.dim() != d * d {
        return Err(Error::DimMismatch {
            expected: d * d,
            got: m.dim(),
        });
    }
    Ok(())
}

/// `out[ij,kl] = in[jl,ik]`: superoperator to Choi matrix.
pub fn reshuffle(m: &MatrixOp, d: usize) -> Result<MatrixOp> {
    side_of(m, d)?;
    let src = m.matrix();
    let out = CMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (c / d, c % d);
        src[(j * d + l, i * d + k)]
    });
    Ok(MatrixOp::from_parts(out, Some((d, d))))
}

/// Inverse of [`reshuffle`]: `out[jl,ik] = in[ij,kl]`.
pub fn unreshuffle(m: &MatrixOp, d: usize) -> Result<MatrixOp> {
    side_of(m, d)?;
    let src = m.matrix();
    let out = CMatrix::from_fn(d * d, d * d, |r, c| {
        let (j, l) = (r / d, r % d);
        let (i, k) = (c / d, c % d);
        src[(i * d + j, k * d + l)]
    });
    Ok(MatrixOp::from_parts(out, Some((d, d))))
}

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }
}

/// Eigendecomposition of a matrix assumed Hermitian; only the Hermitian part
/// is used. Ties keep the solver's index order.
pub(crate) fn eigh(m: &CMatrix) -> HermitianEigen {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    HermitianEigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: CMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]),
    }
}

pub fn hermitian_eig(x: &MatrixOp, tol: f64) -> Result<HermitianEigen> {
    let deviation = x.hermitian_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(eigh(x.matrix()))
}

/// `Tr(a b)` for Hermitian `a`, `b`.
pub fn hs_inner(a: &MatrixOp, b: &MatrixOp) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    a.require_hermitian()?;
    b.require_hermitian()?;
    Ok(trace_product(a.matrix(), b.matrix()).re)
}

/// `Tr(a b)` without checks.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
