//! One-sided membership certificates for the cone hierarchy.
//!
//! A violation is always a proof: the witness vector is stored and can be
//! re-checked without this crate. Membership is only claimed when a
//! constructive argument exists (a positive semidefinite Choi matrix, an
//! explicit Kraus family, an explicit decomposition). Everything else is
//! reported as inconclusive together with the best value found.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{
    eigh, partial_transpose, schmidt_decompose, svd_sorted, BipartiteVector, CMatrix, MatrixOp,
    Subsystem, HERMITIAN_TOL, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::maps::{from_kraus, kraus_decompose, reduction_family, KrausSet, MapRep};
use crate::random::{gaussian_matrix, seeded};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeesawOpts {
    pub restarts: usize,
    pub max_iters: usize,
    pub eps_conv: f64,
    pub eps_neg: f64,
    pub seed: u64,
    /// Re-derive every k-positivity violation through a k-dimensional
    /// projection of the maximally entangled vector.
    pub crosscheck: bool,
}

impl Default for SeesawOpts {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 500,
            eps_conv: 1e-10,
            eps_neg: 1e-9,
            seed: 42,
            crosscheck: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ViolationFound,
    MembershipProven,
    Inconclusive,
}

/// Independent re-derivation of a k-positivity violation: with `q` the
/// projection onto the first `rank` left Schmidt vectors of the witness,
/// `value = ⟨ψ| (𝟙⊗Φ)((q⊗𝟙)|Ψ₊⟩⟨Ψ₊|(q⊗𝟙)) |ψ⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCheck {
    pub rank: usize,
    pub value: f64,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub witness_vector: Option<BipartiteVector>,
    pub value: f64,
    pub detail: String,
    pub restarts_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosscheck: Option<ProjectionCheck>,
}

impl Certificate {
    fn proven(value: f64, detail: &str) -> Self {
        Self {
            verdict: Verdict::MembershipProven,
            witness_vector: None,
            value,
            detail: detail.to_owned(),
            restarts_used: 0,
            crosscheck: None,
        }
    }

    fn inconclusive(value: f64, detail: &str, restarts_used: usize) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            witness_vector: None,
            value,
            detail: detail.to_owned(),
            restarts_used,
            crosscheck: None,
        }
    }

    fn violation(
        c: &MatrixOp,
        witness: BipartiteVector,
        detail: &str,
        restarts_used: usize,
    ) -> Self {
        let witness = witness.normalized();
        let value = witness.quadratic_form(c).expect("dims checked").re;
        Self {
            verdict: Verdict::ViolationFound,
            witness_vector: Some(witness),
            value,
            detail: detail.to_owned(),
            restarts_used,
            crosscheck: None,
        }
    }

    pub fn is_violation(&self) -> bool {
        self.verdict == Verdict::ViolationFound
    }

    pub fn is_proven(&self) -> bool {
        self.verdict == Verdict::MembershipProven
    }

    /// Re-check a violation against `c`: the witness has Schmidt rank at most
    /// `k`, its quadratic form matches `value` and is below `-tol`.
    pub fn verify_violation(&self, c: &MatrixOp, k: usize, tol: f64) -> bool {
        let Some(w) = &self.witness_vector else {
            return false;
        };
        let Ok(q) = w.quadratic_form(c) else {
            return false;
        };
        let Ok(rank) = w.schmidt_rank(RANK_TOL) else {
            return false;
        };
        let value = q.re / w.norm().powi(2);
        rank <= k && (value - self.value).abs() <= 1e-10 * (1.0 + value.abs()) && value < -tol
    }
}

fn require_bipartite(c: &MatrixOp) -> Result<(usize, usize)> {
    let dims = c.dims().ok_or(Error::MissingDims)?;
    let deviation = c.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(dims)
}

/// PSD decision by full eigendecomposition.
fn psd_certificate(c: &MatrixOp, tol: f64, proof: &str, refutation: &str) -> Certificate {
    let (da, db) = c.dims().expect("bipartite operator");
    let eig = eigh(c.matrix());
    if eig.min() >= -tol {
        Certificate::proven(eig.min(), proof)
    } else {
        let w = BipartiteVector::new(da, db, eig.vector(0)).expect("length da * db");
        Certificate::violation(c, w, refutation, 0)
    }
}

/// Completely positive iff the Choi matrix is positive semidefinite.
pub fn is_cp(map: &MapRep, tol: f64) -> Certificate {
    psd_certificate(&map.choi(), tol, "choi-psd", "choi-negative-eigenvector")
}

/// Completely copositive iff the partially transposed Choi matrix is PSD.
pub fn is_ccp(map: &MapRep, tol: f64) -> Certificate {
    let pt = partial_transpose(&map.choi(), Subsystem::B).expect("choi has dims");
    psd_certificate(&pt, tol, "choi-pt-psd", "choi-pt-negative-eigenvector")
}

struct SeesawRun {
    value: f64,
    coefficients: CMatrix,
}

/// Orthonormal basis (columns) for a random k-dimensional subspace.
fn random_subspace(rng: &mut crate::random::SeededRng, n: usize, k: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, k);
    let q = g.qr().q();
    q.columns(0, k).into_owned()
}

/// Minimize `⟨ψ|C|ψ⟩` over unit `ψ ∈ range(L)` for an isometry `L`.
fn restricted_min(c: &CMatrix, l: &CMatrix) -> (f64, crate::bipartite::CVector) {
    let h = l.adjoint() * c * l;
    let eig = eigh(&h);
    let v = l * eig.vector(0);
    (eig.min(), v)
}

fn seesaw_run(
    c: &CMatrix,
    da: usize,
    db: usize,
    k: usize,
    opts: &SeesawOpts,
    seed: u64,
) -> SeesawRun {
    let mut rng = seeded(seed);
    let id_a = CMatrix::identity(da, da);
    let id_b = CMatrix::identity(db, db);
    // ψ = Σ_i f_i ⊗ w_i with {w_i} an orthonormal basis of a k-dim subspace of C^dB.
    let mut right = random_subspace(&mut rng, db, k);
    let mut best = f64::INFINITY;
    let mut psi = crate::bipartite::CVector::zeros(da * db);
    for _ in 0..opts.max_iters.max(1) {
        let (_, v) = restricted_min(c, &id_a.kronecker(&right));
        psi = v;
        let coeffs = BipartiteVector::new(da, db, psi.clone())
            .expect("length")
            .coefficients();
        let svd = svd_sorted(&coeffs);
        let left = svd.u.columns(0, k).into_owned();

        let (q, v) = restricted_min(c, &left.kronecker(&id_b));
        psi = v;
        let coeffs = BipartiteVector::new(da, db, psi.clone())
            .expect("length")
            .coefficients();
        let svd = svd_sorted(&coeffs);
        right = svd.v_t.rows(0, k).transpose();

        let converged = (best - q).abs() < opts.eps_conv;
        best = best.min(q);
        if converged {
            break;
        }
    }
    SeesawRun {
        value: best,
        coefficients: BipartiteVector::new(da, db, psi)
            .expect("length")
            .coefficients(),
    }
}

/// Search for a vector of Schmidt rank at most `k` with `⟨ψ|C|ψ⟩ < 0`.
///
/// For `k < min(dA, dB)` this alternates exact minimizations over
/// `C^dA ⊗ W` and `U ⊗ C^dB`, where `W` and `U` are the current k-dimensional
/// Schmidt subspaces, from `opts.restarts` seeded starts (restart `r` uses
/// seed `opts.seed + r`). Without a violation the result is inconclusive.
/// For `k ≥ min(dA, dB)` the full spectrum decides.
pub fn k_block_positive_certify(c: &MatrixOp, k: usize, opts: &SeesawOpts) -> Result<Certificate> {
    let (da, db) = require_bipartite(c)?;
    let max = da.min(db);
    if k < 1 || k > max {
        return Err(Error::BadK { k, max });
    }
    if k == max {
        return Ok(psd_certificate(
            c,
            opts.eps_neg,
            "full-space-psd",
            "full-space-eigenvector",
        ));
    }
    let restarts = opts.restarts.max(1);
    let runs: Vec<SeesawRun> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            seesaw_run(
                c.matrix(),
                da,
                db,
                k,
                opts,
                opts.seed.wrapping_add(r as u64),
            )
        })
        .collect();
    // First minimum wins so results do not depend on scheduling.
    let best = runs
        .iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");
    if best.value < -opts.eps_neg {
        let cert = Certificate::violation(
            c,
            BipartiteVector::from_coefficients(&best.coefficients),
            "seesaw",
            restarts,
        );
        if cert.verify_violation(c, k, opts.eps_neg) {
            return Ok(cert);
        }
    }
    Ok(Certificate::inconclusive(best.value, "seesaw", restarts))
}

/// k-positivity through the Choi matrix.
pub fn is_k_positive_certify(map: &MapRep, k: usize, opts: &SeesawOpts) -> Result<Certificate> {
    let choi = map.choi();
    let mut cert = k_block_positive_certify(&choi, k, opts)?;
    if opts.crosscheck && cert.is_violation() {
        cert.crosscheck = Some(projection_check(map, &cert, k)?);
    }
    Ok(cert)
}

fn projection_check(map: &MapRep, cert: &Certificate, k: usize) -> Result<ProjectionCheck> {
    let d = map.d();
    let witness = cert
        .witness_vector
        .as_ref()
        .expect("violation has a witness");
    let schmidt = schmidt_decompose(witness, RANK_TOL)?;
    let mut q = CMatrix::zeros(d, d);
    for u in schmidt.left_vectors.iter().take(k) {
        q += u * u.adjoint();
    }
    let lift = q.kronecker(&CMatrix::identity(d, d));
    let omega = BipartiteVector::max_entangled(d).projector();
    let projected = MatrixOp::bipartite(&lift * omega.matrix() * &lift, d, d)?;
    let image = map.apply_local(&projected)?;
    let value = witness.quadratic_form(&image)?.re;
    Ok(ProjectionCheck {
        rank: k.min(schmidt.left_vectors.len()),
        value,
        consistent: (value - cert.value).abs() <= 1e-9 * (1.0 + value.abs()),
    })
}

/// `Tr(C_Φ C_Ψ)`.
pub fn dual_pairing(phi: &MapRep, psi: &MapRep) -> Result<f64> {
    if phi.d() != psi.d() {
        return Err(Error::DimMismatch {
            expected: phi.d(),
            got: psi.d(),
        });
    }
    crate::bipartite::hs_inner(&phi.choi(), &psi.choi())
}

/// A map with established k-positivity, used through `(𝟙 ⊗ Ψ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Detector {
    pub map: MapRep,
    pub k: usize,
    pub id: String,
}

impl Detector {
    /// `reduction_family(d, 1/k)`, exactly on the k-positive boundary.
    pub fn reduction(d: usize, k: usize) -> Self {
        Self {
            map: reduction_family(d, 1.0 / k as f64),
            k,
            id: format!("reduction(d={d},c=1/{k})"),
        }
    }

    /// Minimum eigenvalue of `(𝟙 ⊗ Ψ)(x)`.
    pub fn min_eigenvalue(&self, x: &MatrixOp) -> Result<f64> {
        Ok(eigh(self.map.apply_local(x)?.matrix()).min())
    }
}

/// Reduction family at `c = 1/k` for `k = 1..d-1`, plus their co-maps.
/// The co-maps have Choi matrix `𝟙 − c·SWAP`, which is PSD for `c ≤ 1`, so
/// they are tagged completely positive.
pub fn default_detector_bank(d: usize) -> Vec<Detector> {
    let mut bank: Vec<Detector> = (1..d).map(|k| Detector::reduction(d, k)).collect();
    for k in 1..d {
        let base = Detector::reduction(d, k);
        bank.push(Detector {
            map: base.map.co(),
            k: d,
            id: format!("co-{}", base.id),
        });
    }
    bank
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtBounds {
    pub lower: usize,
    pub upper: usize,
    /// Detectors that fired.
    pub fired: Vec<String>,
    /// Where the upper bound comes from.
    pub upper_source: String,
}

/// Bounds on the Schmidt number of a PSD operator on `C^d ⊗ C^d`.
///
/// The lower bound is `1 + max k` over k-positive detectors whose local
/// action produces an eigenvalue below `-tol`. The upper bound is the Kraus
/// rank bound of `construction` when supplied (it must reproduce `c`), the
/// Schmidt rank of the range vector when `c` has rank one, and `d` otherwise.
pub fn schmidt_number_bounds(
    c: &MatrixOp,
    detectors: &[Detector],
    construction: Option<&KrausSet>,
    tol: f64,
) -> Result<SchmidtBounds> {
    let (da, db) = require_bipartite(c)?;
    let d = da.min(db);
    let eig = eigh(c.matrix());
    if eig.min() < -tol {
        return Err(Error::NotPsd { min_eig: eig.min() });
    }

    let mut lower = 1;
    let mut fired = Vec::new();
    for det in detectors {
        if det.map.d() != db {
            return Err(Error::DimMismatch {
                expected: db,
                got: det.map.d(),
            });
        }
        if det.min_eigenvalue(c)? < -tol {
            lower = lower.max((det.k + 1).min(d));
            fired.push(det.id.clone());
        }
    }

    let (upper, upper_source) = if let Some(ks) = construction {
        let rebuilt = from_kraus(&ks.operators)?.choi();
        if rebuilt.dim() != c.dim() {
            return Err(Error::DimMismatch {
                expected: c.dim(),
                got: rebuilt.dim(),
            });
        }
        let scale = c.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
        let deviation = rebuilt.max_abs_diff(c);
        if deviation > 1e-9 * scale {
            return Err(Error::ConstructionMismatch { deviation });
        }
        (ks.rank_bound.max(1), "kraus-construction".to_owned())
    } else if eig.max() > 0.0
        && eig.values[..eig.values.len() - 1]
            .iter()
            .all(|&v| v.abs() <= 1e-10 * eig.max())
    {
        let top = BipartiteVector::new(da, db, eig.vector(eig.values.len() - 1))?;
        (
            top.schmidt_rank(RANK_TOL)?,
            "rank-one-schmidt-rank".to_owned(),
        )
    } else {
        (d, "dimension".to_owned())
    };

    Ok(SchmidtBounds {
        lower,
        upper,
        fired,
        upper_source,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecompositionOpts {
    pub max_sweeps: usize,
    /// Required residual `‖C − A − Bᵀᴮ‖_F`.
    pub eps: f64,
    /// PSD tolerance for the final re-verification.
    pub tol: f64,
}

impl Default for DecompositionOpts {
    fn default() -> Self {
        Self {
            max_sweeps: 2000,
            eps: 1e-8,
            tol: 1e-9,
        }
    }
}

/// Result of the search for `C = A + PT(B)` with `A, B ⪰ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub certificate: Certificate,
    /// `A`, Choi matrix of the completely positive part.
    pub cp_part: Option<MatrixOp>,
    /// `B`, whose partial transpose is the completely copositive part.
    pub ccp_part: Option<MatrixOp>,
    pub residual: f64,
    pub sweeps: usize,
}

fn psd_part(m: &CMatrix) -> CMatrix {
    let eig = eigh(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.vector(i);
            out += (&v * v.adjoint()).scale(lambda);
        }
    }
    out
}

fn pt(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    partial_transpose(
        &MatrixOp::bipartite(m.clone(), da, db).expect("dims"),
        Subsystem::B,
    )
    .expect("dims")
    .into_matrix()
}

/// Search for a decomposition `C = A + PT(B)` with `A, B ⪰ 0` by Dykstra's
/// alternating projections between `{A ⪰ 0}` and `{A : PT(C − A) ⪰ 0}`.
/// Never refutes decomposability.
pub fn decomposable_certify(c: &MatrixOp, opts: &DecompositionOpts) -> Result<Decomposition> {
    let (da, db) = require_bipartite(c)?;
    let n = c.dim();
    let cm = c.matrix();

    let finish = |a: CMatrix, sweeps: usize, detail: &str| -> Result<Option<Decomposition>> {
        let b = psd_part(&pt(&(cm - &a), da, db));
        let residual = (cm - &a - pt(&b, da, db)).norm();
        if residual >= opts.eps {
            return Ok(None);
        }
        let a_min = eigh(&a).min();
        let b_min = eigh(&b).min();
        if a_min < -opts.tol || b_min < -opts.tol {
            return Ok(None);
        }
        Ok(Some(Decomposition {
            certificate: Certificate::proven(residual, detail),
            cp_part: Some(MatrixOp::bipartite(a, da, db)?),
            ccp_part: Some(MatrixOp::bipartite(b, da, db)?),
            residual,
            sweeps,
        }))
    };

    if eigh(cm).min() >= -opts.tol {
        if let Some(dec) = finish(psd_part(cm), 0, "choi-psd")? {
            return Ok(dec);
        }
    }
    if eigh(&pt(cm, da, db)).min() >= -opts.tol {
        if let Some(dec) = finish(CMatrix::zeros(n, n), 0, "choi-pt-psd")? {
            return Ok(dec);
        }
    }

    let project_second =
        |x: &CMatrix| -> CMatrix { cm - pt(&psd_part(&pt(&(cm - x), da, db)), da, db) };
    let mut x = psd_part(cm);
    let mut p = CMatrix::zeros(n, n);
    let mut q = CMatrix::zeros(n, n);
    let mut residual = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let y = psd_part(&(&x + &p));
        p = &x + &p - &y;
        x = project_second(&(&y + &q));
        q = &y + &q - &x;

        let a = psd_part(&x);
        let b_raw = pt(&(cm - &a), da, db);
        residual = (&b_raw - psd_part(&b_raw)).norm();
        if residual < opts.eps {
            if let Some(dec) = finish(a, sweep, "alternating-projections")? {
                return Ok(dec);
            }
        }
    }
    Ok(Decomposition {
        certificate: Certificate::inconclusive(residual, "alternating-projections", 0),
        cp_part: None,
        ccp_part: None,
        residual,
        sweeps: opts.max_sweeps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    Member,
    NotMember,
    Unknown,
}

impl Flag {
    fn from_certificate(c: &Certificate) -> Self {
        match c.verdict {
            Verdict::MembershipProven => Flag::Member,
            Verdict::ViolationFound => Flag::NotMember,
            Verdict::Inconclusive => Flag::Unknown,
        }
    }

    fn and(self, other: Flag) -> Flag {
        match (self, other) {
            (Flag::NotMember, _) | (_, Flag::NotMember) => Flag::NotMember,
            (Flag::Member, Flag::Member) => Flag::Member,
            _ => Flag::Unknown,
        }
    }
}

/// Flags for the intersections `P_k ∩ co-P_m` and `S_k ∩ co-S_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmFlags {
    pub k: usize,
    pub m: usize,
    pub positive: Flag,
    pub superpositive: Flag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOpts {
    pub seesaw: SeesawOpts,
    /// PSD tolerance for the Choi-level decisions and detectors.
    pub tol: f64,
    /// `(k, m)` pairs to flag; all pairs in `1..=d` when absent.
    pub km_pairs: Option<Vec<(usize, usize)>>,
    pub decomposition: DecompositionOpts,
}

impl Default for ClassifyOpts {
    fn default() -> Self {
        Self {
            seesaw: SeesawOpts::default(),
            tol: 1e-9,
            km_pairs: None,
            decomposition: DecompositionOpts::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub d: usize,
    /// `p_k[k-1]` certifies k-positivity.
    pub p_k: Vec<Certificate>,
    pub cp: Certificate,
    /// k-copositivity, i.e. k-positivity of `t ∘ Φ`.
    pub co_p_k: Vec<Certificate>,
    pub ccp: Certificate,
    /// Schmidt-number bounds of `C_Φ` (present when `Φ` is CP).
    pub s_k: Option<SchmidtBounds>,
    /// Schmidt-number bounds of `PT(C_Φ)` (present when `Φ` is completely copositive).
    pub co_s_k: Option<SchmidtBounds>,
    pub km_flags: Vec<KmFlags>,
    pub dec_certificate: Decomposition,
}

impl ConeReport {
    pub fn p_flag(&self, k: usize) -> Flag {
        Flag::from_certificate(&self.p_k[k - 1])
    }

    pub fn co_p_flag(&self, k: usize) -> Flag {
        Flag::from_certificate(&self.co_p_k[k - 1])
    }

    pub fn s_flag(&self, k: usize) -> Flag {
        superpositive_flag(&self.cp, self.s_k.as_ref(), k)
    }

    pub fn co_s_flag(&self, k: usize) -> Flag {
        superpositive_flag(&self.ccp, self.co_s_k.as_ref(), k)
    }
}

fn superpositive_flag(cp: &Certificate, bounds: Option<&SchmidtBounds>, k: usize) -> Flag {
    if cp.is_violation() {
        return Flag::NotMember;
    }
    match bounds {
        Some(b) if b.upper <= k => Flag::Member,
        Some(b) if b.lower > k => Flag::NotMember,
        _ => Flag::Unknown,
    }
}

/// k-positivity certificates for `k = 1..d`, made consistent with the chain
/// `CP ⊂ P_d ⊂ … ⊂ P_1`: complete positivity upgrades inconclusive levels,
/// and a violation at level `k` is inherited by every inconclusive `k' > k`.
fn chain_certificates(
    map: &MapRep,
    cp: &Certificate,
    opts: &SeesawOpts,
) -> Result<Vec<Certificate>> {
    let d = map.d();
    let mut certs = (1..=d)
        .map(|k| is_k_positive_certify(map, k, opts))
        .collect::<Result<Vec<_>>>()?;
    if cp.is_proven() {
        for cert in certs
            .iter_mut()
            .filter(|c| c.verdict == Verdict::Inconclusive)
        {
            cert.verdict = Verdict::MembershipProven;
            cert.detail = "implied-by-cp".to_owned();
        }
    }
    for k in 0..d {
        if !certs[k].is_violation() {
            continue;
        }
        let source = certs[k].clone();
        for cert in certs.iter_mut().skip(k + 1) {
            if cert.verdict == Verdict::Inconclusive {
                *cert = Certificate {
                    detail: format!("inherited-from-k={}", k + 1),
                    ..source.clone()
                };
            }
        }
    }
    Ok(certs)
}

/// Place a Hermiticity-preserving map in the cone hierarchy.
pub fn classify(map: &MapRep, opts: &ClassifyOpts) -> Result<ConeReport> {
    let deviation = map.hp_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermiticityPreserving { deviation });
    }
    let d = map.d();
    let co_map = map.co();
    let cp = is_cp(map, opts.tol);
    let ccp = is_ccp(map, opts.tol);
    let p_k = chain_certificates(map, &cp, &opts.seesaw)?;
    let co_p_k = chain_certificates(&co_map, &ccp, &opts.seesaw)?;

    let bank = default_detector_bank(d);
    let superpositive_bounds = |m: &MapRep, proven: bool| -> Result<Option<SchmidtBounds>> {
        if !proven {
            return Ok(None);
        }
        // The eigen-Kraus family of a PSD Choi matrix is itself a construction.
        let kraus = kraus_decompose(m, 1e-13).ok();
        let bounds = schmidt_number_bounds(&m.choi(), &bank, kraus.as_ref(), opts.tol)
            .or_else(|_| schmidt_number_bounds(&m.choi(), &bank, None, opts.tol))?;
        Ok(Some(bounds))
    };
    let s_k = superpositive_bounds(map, cp.is_proven())?;
    let co_s_k = superpositive_bounds(&co_map, ccp.is_proven())?;
    let dec_certificate = decomposable_certify(&map.choi(), &opts.decomposition)?;

    let mut report = ConeReport {
        d,
        p_k,
        cp,
        co_p_k,
        ccp,
        s_k,
        co_s_k,
        km_flags: Vec::new(),
        dec_certificate,
    };
    let pairs = opts
        .km_pairs
        .clone()
        .unwrap_or_else(|| (1..=d).flat_map(|k| (1..=d).map(move |m| (k, m))).collect());
    for (k, m) in pairs {
        if k < 1 || k > d || m < 1 || m > d {
            return Err(Error::BadK {
                k: k.max(m),
                max: d,
            });
        }
        let flags = KmFlags {
            k,
            m,
            positive: report.p_flag(k).and(report.co_p_flag(m)),
            superpositive: report.s_flag(k).and(report.co_s_flag(m)),
        };
        report.km_flags.push(flags);
    }
    Ok(report)
}
