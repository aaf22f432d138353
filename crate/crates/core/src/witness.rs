//! Entanglement witnesses and Schmidt-number detection on states.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{
    eigh, partial_transpose, trace_product, BipartiteVector, CMatrix, MatrixOp, Subsystem,
    HERMITIAN_TOL,
};
use crate::certify::{k_block_positive_certify, Detector, SeesawOpts};
use crate::error::{Error, Result};
use crate::maps::{reduction_family, MapRep};
use crate::random::{low_rank_matrix, seeded};

/// Trace and eigenvalue tolerance for accepting an operator as a state.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub operator: MatrixOp,
    pub k_level: usize,
    pub provenance: String,
}

impl Witness {
    pub fn new(operator: MatrixOp, k_level: usize, provenance: impl Into<String>) -> Result<Self> {
        if operator.dims().is_none() {
            return Err(Error::MissingDims);
        }
        let deviation = operator.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        if k_level < 1 {
            return Err(Error::BadK {
                k: k_level,
                max: operator.dim(),
            });
        }
        Ok(Self {
            operator,
            k_level,
            provenance: provenance.into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub min_eigenvalue: f64,
    pub fired: bool,
    pub detector_id: String,
    /// Schmidt-number lower bound implied by this detector (1 if it did not fire).
    pub implied_lower_bound: usize,
}

fn check_state(rho: &MatrixOp) -> Result<()> {
    let deviation = rho.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotAState {
            reason: format!("not Hermitian (deviation {deviation:e})"),
        });
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::NotAState {
            reason: format!("trace {tr} differs from 1"),
        });
    }
    let min = eigh(rho.matrix()).min();
    if min < -STATE_TOL {
        return Err(Error::NotAState {
            reason: format!("min eigenvalue {min:e}"),
        });
    }
    Ok(())
}

/// `Tr(W ρ)` for a density matrix `ρ`.
pub fn expectation(w: &Witness, rho: &MatrixOp) -> Result<f64> {
    if w.operator.dim() != rho.dim() {
        return Err(Error::DimMismatch {
            expected: w.operator.dim(),
            got: rho.dim(),
        });
    }
    check_state(rho)?;
    Ok(trace_product(w.operator.matrix(), rho.matrix()).re)
}

/// Remove eigenvalues below zero that are within the state tolerance.
fn clip_to_psd(rho: &MatrixOp) -> MatrixOp {
    let eig = eigh(rho.matrix());
    if eig.min() >= 0.0 {
        return rho.clone();
    }
    let n = rho.dim();
    let mut out = CMatrix::zeros(n, n);
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.vector(i);
            out += (&v * v.adjoint()).scale(lambda);
        }
    }
    MatrixOp::from_parts(out, rho.dims())
}

/// Minimum eigenvalue of `(𝟙 ⊗ Ψ)(ρ)` for a k-positive detector `Ψ`. A
/// negative value below `-tol` proves Schmidt number at least `k + 1`.
pub fn detect_schmidt_number(
    rho: &MatrixOp,
    detector: &Detector,
    tol: f64,
) -> Result<DetectionResult> {
    check_state(rho)?;
    let min = detector.min_eigenvalue(&clip_to_psd(rho))?;
    let fired = min < -tol;
    Ok(DetectionResult {
        min_eigenvalue: min,
        fired,
        detector_id: detector.id.clone(),
        implied_lower_bound: if fired { detector.k + 1 } else { 1 },
    })
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::BadParam(format!("{name} = {x} outside [0, 1]")))
    }
}

/// `F·P + (1−F)(𝟙 − P)/(d²−1)` with `P` the normalized maximally entangled
/// projector; `F` is the fidelity `Tr(Pρ)`.
pub fn isotropic_state(d: usize, f: f64) -> Result<MatrixOp> {
    check_unit_interval("F", f)?;
    if d < 2 {
        return Err(Error::BadParam(format!(
            "isotropic state needs d >= 2, got {d}"
        )));
    }
    let n = d * d;
    let p = BipartiteVector::max_entangled(d)
        .projector()
        .into_matrix()
        .unscale(d as f64);
    let rest = (CMatrix::identity(n, n) - &p).scale((1.0 - f) / (n as f64 - 1.0));
    MatrixOp::bipartite(p.scale(f) + rest, d, d)
}

/// Two-qubit Werner state `p|Ψ−⟩⟨Ψ−| + (1−p)𝟙/4`.
pub fn werner_state(p: f64) -> Result<MatrixOp> {
    check_unit_interval("p", p)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = BipartiteVector::new(
        2,
        2,
        crate::bipartite::CVector::from_vec(vec![0.0.into(), s.into(), (-s).into(), 0.0.into()]),
    )?;
    let m =
        singlet.projector().into_matrix().scale(p) + CMatrix::identity(4, 4).scale((1.0 - p) / 4.0);
    MatrixOp::bipartite(m, 2, 2)
}

/// The Choi matrix of a k-positive map, used as a witness for Schmidt number
/// above `k_level`.
pub fn witness_from_map(map: &MapRep, k_level: usize, provenance: impl Into<String>) -> Witness {
    Witness {
        operator: map.choi(),
        k_level: k_level.max(1),
        provenance: provenance.into(),
    }
}

/// Convex mixture of `n_terms` pure states of Schmidt rank at most `k`.
pub fn random_k_separable_state(d: usize, k: usize, n_terms: usize, seed: u64) -> Result<MatrixOp> {
    if k < 1 || k > d {
        return Err(Error::BadRank { k, d });
    }
    if n_terms == 0 {
        return Err(Error::EmptyList);
    }
    let mut rng = seeded(seed);
    let n = d * d;
    let mut rho = CMatrix::zeros(n, n);
    let mut total = 0.0;
    for _ in 0..n_terms {
        let w: f64 = rand::Rng::random_range(&mut rng, 0.05..1.0);
        let psi = BipartiteVector::from_coefficients(&low_rank_matrix(&mut rng, d, k)).normalized();
        rho += psi.projector().into_matrix().scale(w);
        total += w;
    }
    MatrixOp::bipartite(rho.unscale(total), d, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Isotropic states of local dimension `d`, parameter `F`.
    Isotropic(usize),
    /// Two-qubit Werner states, parameter `p`.
    Werner,
    /// Choi matrices `𝟙 − c|Ψ₊⟩⟨Ψ₊|` of local dimension `d`, parameter `c`.
    Reduction(usize),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Isotropic(d) => write!(f, "isotropic:{d}"),
            Family::Werner => write!(f, "werner"),
            Family::Reduction(d) => write!(f, "reduction:{d}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadFamily(s.to_owned());
        let (name, dim) = match s.split_once(':') {
            Some((name, dim)) => (name, Some(dim.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        match (name, dim) {
            ("werner", None) => Ok(Family::Werner),
            ("isotropic", Some(d)) if d >= 2 => Ok(Family::Isotropic(d)),
            ("reduction", Some(d)) if d >= 2 => Ok(Family::Reduction(d)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub param: f64,
    pub min_eig: f64,
    pub fired: bool,
}

/// Scanned quantity at a single parameter value.
///
/// * isotropic: min eigenvalue of `(𝟙 ⊗ Ψ)(ρ_F)` with `Ψ` the reduction map
///   at `c = 1/k`;
/// * Werner: min eigenvalue of the partial transpose (`k` is ignored);
/// * reduction: see-saw best value of `𝟙 − c|Ψ₊⟩⟨Ψ₊|` at Schmidt rank `k`.
pub fn scan_point(
    family: Family,
    k: usize,
    param: f64,
    tol: f64,
    opts: &SeesawOpts,
) -> Result<ScanRow> {
    let min_eig = match family {
        Family::Isotropic(d) => {
            check_k(k, d)?;
            detect_schmidt_number(&isotropic_state(d, param)?, &Detector::reduction(d, k), tol)?
                .min_eigenvalue
        }
        Family::Werner => {
            let pt = partial_transpose(&werner_state(param)?, Subsystem::B)?;
            eigh(pt.matrix()).min()
        }
        Family::Reduction(d) => {
            check_k(k, d)?;
            k_block_positive_certify(&reduction_family(d, param).choi(), k, opts)?.value
        }
    };
    Ok(ScanRow {
        param,
        min_eig,
        fired: min_eig < -tol,
    })
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k < 1 || k > d {
        Err(Error::BadK { k, max: d })
    } else {
        Ok(())
    }
}

/// One row per grid point, in grid order.
pub fn threshold_scan(
    family: Family,
    k: usize,
    grid: &[f64],
    tol: f64,
    opts: &SeesawOpts,
) -> Result<Vec<ScanRow>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::BadParam("grid is not sorted".into()));
    }
    grid.par_iter()
        .map(|&param| scan_point(family, k, param, tol, opts))
        .collect()
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo || steps == 0 || (steps == 1 && hi != lo) {
        return Err(Error::BadParam(format!("grid {lo}:{hi}:{steps}")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect())
}

/// Parameters where `fired` changes between consecutive rows, as brackets.
pub fn flips(rows: &[ScanRow]) -> Vec<(f64, f64)> {
    rows.windows(2)
        .filter(|w| w[0].fired != w[1].fired)
        .map(|w| (w[0].param, w[1].param))
        .collect()
}

/// Bisect the sign change of `min_eig` inside `[lo, hi]` down to width `width`.
pub fn locate_flip(
    family: Family,
    k: usize,
    mut lo: f64,
    mut hi: f64,
    width: f64,
    opts: &SeesawOpts,
) -> Result<f64> {
    let sign = |p: f64| scan_point(family, k, p, 0.0, opts).map(|r| r.min_eig < 0.0);
    let lo_sign = sign(lo)?;
    if lo_sign == sign(hi)? {
        return Err(Error::BadParam(format!("no sign change in [{lo}, {hi}]")));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if sign(mid)? == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub const CSV_HEADER: &str = "param,min_eig,fired";

/// CSV with 17 significant digits per number.
pub fn to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{}\n",
            r.param, r.min_eig, r.fired
        ));
    }
    out
}
