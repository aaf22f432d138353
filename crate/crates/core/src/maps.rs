//! Linear maps on `d × d` matrices, stored as `d² × d²` superoperators.
//!
//! Entry `(i*d + j, k*d + l)` of the superoperator is the coefficient of
//! `e_ij` in `Φ(e_kl)`, so the superoperator acts on row-major vectorized
//! matrices.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bipartite::{
    eigh, max_abs_diff, numerical_rank, reshuffle, svd_sorted, unreshuffle, CMatrix, CVector,
    MatrixJson, MatrixOp, C64, HERMITIAN_TOL, ONE, RANK_TOL, ZERO,
};
use crate::error::{Error, Result};
use crate::random::{gaussian_vector, hermitian_matrix, seeded};

#[derive(Clone, Debug, PartialEq)]
pub struct MapRep {
    d: usize,
    sup: CMatrix,
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimMismatch { expected, got });
    }
    Ok(())
}

fn vec_row_major(x: &CMatrix) -> CVector {
    let n = x.ncols();
    CVector::from_fn(x.nrows() * n, |idx, _| x[(idx / n, idx % n)])
}

fn unvec_row_major(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

impl MapRep {
    /// Wrap a superoperator, checking that it preserves Hermiticity.
    pub fn from_superoperator(sup: CMatrix) -> Result<Self> {
        let n = sup.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d == 0 || d * d != n || sup.ncols() != n {
            return Err(Error::DimMismatch {
                expected: d * d,
                got: n,
            });
        }
        let map = Self { d, sup };
        let deviation = map.hp_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermiticityPreserving { deviation });
        }
        Ok(map)
    }

    pub(crate) fn from_parts(d: usize, sup: CMatrix) -> Self {
        debug_assert_eq!(sup.nrows(), d * d);
        Self { d, sup }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn superoperator(&self) -> &CMatrix {
        &self.sup
    }

    /// Max-entry deviation of the Choi matrix from Hermiticity.
    pub fn hp_deviation(&self) -> f64 {
        self.choi().hermitian_deviation()
    }

    pub fn max_abs_diff(&self, other: &MapRep) -> f64 {
        max_abs_diff(&self.sup, &other.sup)
    }

    pub fn apply(&self, x: &MatrixOp) -> Result<MatrixOp> {
        check_dim(self.d, x.dim())?;
        Ok(MatrixOp::from_parts(self.apply_matrix(x.matrix()), None))
    }

    pub(crate) fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        unvec_row_major(&(&self.sup * vec_row_major(x)), self.d)
    }

    /// `C_Φ = Σ e_ij ⊗ Φ(e_ij)`, with dims `(d, d)`.
    pub fn choi(&self) -> MatrixOp {
        reshuffle(&MatrixOp::from_parts(self.sup.clone(), None), self.d)
            .expect("superoperator is d² × d²")
    }

    pub fn from_choi(c: &MatrixOp) -> Result<Self> {
        let n = c.dim();
        let d = (n as f64).sqrt().round() as usize;
        check_dim(d * d, n)?;
        let deviation = c.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            d,
            sup: unreshuffle(c, d)?.into_matrix(),
        })
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &MapRep) -> Result<MapRep> {
        check_dim(self.d, inner.d)?;
        Ok(Self {
            d: self.d,
            sup: &self.sup * &inner.sup,
        })
    }

    /// Adjoint with respect to `⟨a, b⟩ = Tr(a† b)`.
    pub fn adjoint(&self) -> MapRep {
        Self {
            d: self.d,
            sup: self.sup.adjoint(),
        }
    }

    /// `t ∘ Φ`.
    pub fn co(&self) -> MapRep {
        transpose_map(self.d).compose(self).expect("same dimension")
    }

    pub fn scale(&self, s: f64) -> MapRep {
        Self {
            d: self.d,
            sup: self.sup.scale(s),
        }
    }

    pub fn add(&self, other: &MapRep) -> Result<MapRep> {
        check_dim(self.d, other.d)?;
        Ok(Self {
            d: self.d,
            sup: &self.sup + &other.sup,
        })
    }

    /// `(𝟙 ⊗ Φ)(ρ)`: apply the map to every `d × d` block of `ρ`.
    pub fn apply_local(&self, rho: &MatrixOp) -> Result<MatrixOp> {
        let d = self.d;
        let (da, db) = match rho.dims() {
            Some(dims) => dims,
            None if rho.dim().is_multiple_of(d) => (rho.dim() / d, d),
            None => {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: rho.dim(),
                })
            }
        };
        check_dim(d, db)?;
        let m = rho.matrix();
        let mut out = CMatrix::zeros(da * d, da * d);
        for i in 0..da {
            for j in 0..da {
                let block = m.view((i * d, j * d), (d, d)).into_owned();
                out.view_mut((i * d, j * d), (d, d))
                    .copy_from(&self.apply_matrix(&block));
            }
        }
        Ok(MatrixOp::from_parts(out, Some((da, d))))
    }
}

impl Serialize for MapRep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.sup, Some((self.d, self.d)), Some("super")).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MapRep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MatrixJson::deserialize(d)?;
        if raw.repr.as_deref() != Some("super") {
            return Err(D::Error::custom("expected \"repr\": \"super\""));
        }
        let op = raw.to_op().map_err(D::Error::custom)?;
        MapRep::from_superoperator(op.into_matrix()).map_err(D::Error::custom)
    }
}

/// Kraus operators `a_i` of a map `x ↦ Σ a_i† x a_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
    /// Largest numerical rank among the operators.
    pub rank_bound: usize,
}

impl KrausSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let d = operators.first().ok_or(Error::EmptyList)?.nrows();
        for a in &operators {
            check_dim(d, a.nrows())?;
            check_dim(d, a.ncols())?;
        }
        let rank_bound = operators
            .iter()
            .map(|a| numerical_rank(a, RANK_TOL))
            .max()
            .unwrap_or(0);
        Ok(Self {
            operators,
            rank_bound,
        })
    }

    pub fn d(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn to_map(&self) -> MapRep {
        from_kraus(&self.operators).expect("validated on construction")
    }
}

#[derive(Serialize, Deserialize)]
struct KrausJson {
    kraus: Vec<MatrixJson>,
}

impl Serialize for KrausSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KrausJson {
            kraus: self
                .operators
                .iter()
                .map(|a| MatrixJson::from_matrix(a, None, None))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = KrausJson::deserialize(d)?;
        let ops = raw
            .kraus
            .iter()
            .map(|m| m.to_op().map(MatrixOp::into_matrix))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        KrausSet::new(ops).map_err(D::Error::custom)
    }
}

/// `Ad_a: x ↦ a† x a`.
pub fn ad(a: &CMatrix) -> Result<MapRep> {
    check_dim(a.nrows(), a.ncols())?;
    // vec(A X B) = (A ⊗ Bᵀ) vec(X) for row-major vectorization.
    Ok(MapRep::from_parts(
        a.nrows(),
        a.adjoint().kronecker(&a.transpose()),
    ))
}

pub fn from_kraus(ops: &[CMatrix]) -> Result<MapRep> {
    let d = ops.first().ok_or(Error::EmptyList)?.nrows();
    let mut sup = CMatrix::zeros(d * d, d * d);
    for a in ops {
        check_dim(d, a.nrows())?;
        check_dim(d, a.ncols())?;
        sup += a.adjoint().kronecker(&a.transpose());
    }
    Ok(MapRep::from_parts(d, sup))
}

/// Canonical Kraus form from the Choi spectrum. Eigenvalues at or below
/// `tol * λ_max` are dropped.
pub fn kraus_decompose(map: &MapRep, tol: f64) -> Result<KrausSet> {
    let d = map.d;
    let eig = eigh(map.choi().matrix());
    if eig.min() < -tol {
        return Err(Error::NotCompletelyPositive { min_eig: eig.min() });
    }
    let cutoff = tol * eig.max();
    let mut ops = Vec::new();
    for (i, &lambda) in eig.values.iter().enumerate().rev() {
        if lambda <= cutoff || lambda <= 0.0 {
            continue;
        }
        // C_{Ad_a} = |α⟩⟨α| with α = vec(conj(a)).
        let v = eig.vector(i);
        ops.push(
            unvec_row_major(&v, d)
                .map(|z| z.conj())
                .scale(lambda.sqrt()),
        );
    }
    if ops.is_empty() {
        ops.push(CMatrix::zeros(d, d));
    }
    KrausSet::new(ops)
}

pub fn identity_map(d: usize) -> MapRep {
    MapRep::from_parts(d, CMatrix::identity(d * d, d * d))
}

pub fn transpose_map(d: usize) -> MapRep {
    let mut sup = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            sup[(j * d + i, i * d + j)] = ONE;
        }
    }
    MapRep::from_parts(d, sup)
}

/// `a ↦ Tr(a) 𝟙 − c a`; Choi matrix `𝟙 − c |Ψ₊⟩⟨Ψ₊|`. k-positive iff `c ≤ 1/k`.
pub fn reduction_family(d: usize, c: f64) -> MapRep {
    let mut sup = CMatrix::identity(d * d, d * d).scale(-c);
    for i in 0..d {
        for k in 0..d {
            sup[(i * d + i, k * d + k)] += ONE;
        }
    }
    MapRep::from_parts(d, sup)
}

/// `a ↦ (1 − p) a + p Tr(a) 𝟙 / d`.
pub fn depolarizing(d: usize, p: f64) -> MapRep {
    let trace_part = reduction_family(d, 0.0).scale(p / d as f64);
    identity_map(d)
        .scale(1.0 - p)
        .add(&trace_part)
        .expect("same dimension")
}

/// `n_ops` Kraus operators, each a normalized sum of `k` random dyads, scaled
/// so that `Σ ‖a_i‖²_F = 1`.
pub fn random_cp_kraus(d: usize, k: usize, n_ops: usize, seed: u64) -> Result<KrausSet> {
    if k < 1 || k > d {
        return Err(Error::BadRank { k, d });
    }
    if n_ops == 0 {
        return Err(Error::EmptyList);
    }
    let mut rng = seeded(seed);
    let weight = (n_ops as f64).sqrt();
    let ops = (0..n_ops)
        .map(|_| {
            let mut a = CMatrix::zeros(d, d);
            for _ in 0..k {
                a += gaussian_vector(&mut rng, d) * gaussian_vector(&mut rng, d).adjoint();
            }
            let norm = a.norm();
            a.unscale(norm * weight)
        })
        .collect();
    KrausSet::new(ops)
}

pub fn random_cp_map(d: usize, k: usize, n_ops: usize, seed: u64) -> Result<MapRep> {
    random_cp_kraus(d, k, n_ops, seed).map(|ks| ks.to_map())
}

/// Map with a random Hermitian Choi matrix (generally not positive).
pub fn random_hp_map(d: usize, seed: u64) -> MapRep {
    let mut rng = seeded(seed);
    let choi = MatrixOp::from_parts(hermitian_matrix(&mut rng, d * d), Some((d, d)));
    MapRep::from_choi(&choi).expect("Hermitian by construction")
}

/// `[Ψ(|ψ_i⟩⟨ψ_j|)]_{i,j}` as an operator on `C^k ⊗ C^d`.
pub fn block_action(map: &MapRep, psis: &[CVector]) -> Result<MatrixOp> {
    let d = map.d;
    let k = psis.len();
    if k == 0 {
        return Err(Error::EmptyList);
    }
    if k > d {
        return Err(Error::DimMismatch {
            expected: d,
            got: k,
        });
    }
    for v in psis {
        check_dim(d, v.len())?;
    }
    let mut out = CMatrix::zeros(k * d, k * d);
    for i in 0..k {
        for j in 0..k {
            let dyad = &psis[i] * psis[j].adjoint();
            out.view_mut((i * d, j * d), (d, d))
                .copy_from(&map.apply_matrix(&dyad));
        }
    }
    Ok(MatrixOp::from_parts(out, Some((k, d))))
}

/// Which composition [`compose_certified`] decomposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `Ψ ∘ Ad_a`
    MapAfterAd,
    /// `Ad_a ∘ Ψ`, via `(Ad_a ∘ Ψ)† = Ψ† ∘ Ad_{a†}`.
    AdAfterMap,
}

/// Kraus operators of rank `≤ k` for the composition of `Ad_a` (rank `a ≤ k`)
/// with a k-positive map `Ψ`.
///
/// Writes `a = Σ_j |φ_j⟩⟨ψ_j|`, factors the positive block operator
/// `[Ψ(|ψ_i⟩⟨ψ_j|)]` as `Σ_l |ξ^(l)⟩⟨ξ^(l)|` and returns
/// `a_l = Σ_j |φ_j⟩⟨ξ^(l)_j|`. A negative block eigenvalue below `-tol`
/// yields [`Error::BlockNotPsd`], which refutes k-positivity of `Ψ`.
pub fn compose_certified(
    a: &CMatrix,
    map: &MapRep,
    k: usize,
    tol: f64,
    direction: Direction,
) -> Result<KrausSet> {
    check_dim(map.d, a.nrows())?;
    check_dim(map.d, a.ncols())?;
    match direction {
        Direction::MapAfterAd => certify_map_after_ad(a, map, k, tol),
        Direction::AdAfterMap => {
            let inner = certify_map_after_ad(&a.adjoint(), &map.adjoint(), k, tol)?;
            KrausSet::new(inner.operators.iter().map(|b| b.adjoint()).collect())
        }
    }
}

fn certify_map_after_ad(a: &CMatrix, map: &MapRep, k: usize, tol: f64) -> Result<KrausSet> {
    let d = map.d;
    let svd = svd_sorted(a);
    let max = svd.values.first().copied().unwrap_or(0.0);
    let rank = svd.values.iter().filter(|&&s| s > RANK_TOL * max).count();
    if rank > k {
        return Err(Error::RankTooHigh { rank, k });
    }
    if rank == 0 {
        return KrausSet::new(vec![CMatrix::zeros(d, d)]);
    }
    // a = Σ σ_j u_j v_j†: φ_j = σ_j u_j, ψ_j = v_j.
    let phis: Vec<CVector> = (0..rank)
        .map(|j| svd.u.column(j).scale(svd.values[j]))
        .collect();
    let psis: Vec<CVector> = (0..rank).map(|j| svd.v_t.row(j).adjoint()).collect();
    let block = block_action(map, &psis)?;
    let eig = eigh(block.matrix());
    if eig.min() < -tol {
        return Err(Error::BlockNotPsd { min_eig: eig.min() });
    }
    // Roundoff-level eigenvalues only add numerically-zero operators.
    let cutoff = 64.0 * f64::EPSILON * eig.max().max(0.0);
    let mut ops = Vec::new();
    for (l, &lambda) in eig.values.iter().enumerate().rev() {
        if lambda <= cutoff {
            continue;
        }
        let xi = eig.vector(l).scale(lambda.sqrt());
        let mut op = CMatrix::from_element(d, d, ZERO);
        for (j, phi) in phis.iter().enumerate() {
            let xi_j = xi.rows(j * d, d);
            op += phi * xi_j.adjoint();
        }
        ops.push(op);
    }
    if ops.is_empty() {
        ops.push(CMatrix::zeros(d, d));
    }
    KrausSet::new(ops)
}

/// `Tr Φ(e_kl) = δ_kl` for every matrix unit.
pub fn is_trace_preserving(map: &MapRep, tol: f64) -> bool {
    let d = map.d;
    (0..d * d).all(|col| {
        let (k, l) = (col / d, col % d);
        let tr: C64 = (0..d).map(|i| map.sup[(i * d + i, col)]).sum();
        let expected = if k == l { ONE } else { ZERO };
        (tr - expected).norm() <= tol
    })
}
