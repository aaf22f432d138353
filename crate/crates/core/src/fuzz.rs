//! Seeded property batteries. Instance `i` of a run with base seed `s` uses
//! seed `s + i`, so every failure can be replayed on its own.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{
    hs_inner, numerical_rank, trace_product, BipartiteVector, CMatrix, MatrixOp, RANK_TOL,
};
use crate::certify::{is_cp, k_block_positive_certify, Detector, SeesawOpts};
use crate::error::{Error, Result};
use crate::maps::{
    compose_certified, from_kraus, random_cp_kraus, random_cp_map, random_hp_map, reduction_family,
    Direction, MapRep,
};
use crate::random::{hermitian_matrix, low_rank_matrix, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// `Tr(C_Φ C_Ψ) ≥ 0` for `Φ ∈ S_k`, `Ψ ∈ P_k`.
    Duality,
    /// Rank-`k` Kraus certificates for `Ψ ∘ Ad_a` and `Ad_a ∘ Ψ`.
    Composition,
    /// Superoperator → Choi → superoperator round trip, cycling d = 2, 3, 4.
    Bijection,
    /// `Tr(Φ(x) y) = Tr(x Φ†(y))`.
    Adjoint,
    /// `Ψ ∘ Φ` and `Φ ∘ Ψ` are CP for `Φ ∈ S_k`, `Ψ ∈ P_k`.
    Characterization,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Duality,
        Suite::Composition,
        Suite::Bijection,
        Suite::Adjoint,
        Suite::Characterization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Duality => "duality",
            Suite::Composition => "composition",
            Suite::Bijection => "bijection",
            Suite::Adjoint => "adjoint",
            Suite::Characterization => "characterization",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown fuzz suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzOpts {
    pub d: usize,
    pub k: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for FuzzOpts {
    fn default() -> Self {
        Self {
            d: 3,
            k: 2,
            seed: 42,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzFailure {
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub suite: Suite,
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub passed: usize,
    pub failed: usize,
    pub failures: Vec<FuzzFailure>,
    /// Largest error (or violation magnitude) observed over passing and failing instances.
    pub max_error: f64,
}

/// A member of `P_k`: `t·Φ_cp + (1−t)·reduction_family(d, 1/k)` with random `t`.
pub fn k_positive_sample(d: usize, k: usize, seed: u64) -> Result<MapRep> {
    let mut rng = seeded(seed);
    let t: f64 = rng.random();
    let cp = random_cp_map(d, d, 2, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    cp.scale(t)
        .add(&reduction_family(d, 1.0 / k as f64).scale(1.0 - t))
}

/// A random map that is positive but usually neither CP nor completely
/// copositive: a random Hermitian Choi matrix shifted by the identity so that
/// its minimum over product vectors (see-saw estimate) is `margin`.
pub fn positive_candidate(d: usize, seed: u64, margin: f64) -> Result<MapRep> {
    let base = random_hp_map(d, seed);
    let choi = base.choi();
    let scale = choi.matrix().norm();
    let choi = choi.scale(1.0 / scale);
    let opts = SeesawOpts {
        seed,
        ..SeesawOpts::default()
    };
    let product_min = k_block_positive_certify(&choi, 1, &opts)?.value;
    let shift = margin - product_min;
    let n = choi.dim();
    let shifted = choi.matrix() + CMatrix::identity(n, n).scale(shift);
    MapRep::from_choi(&MatrixOp::bipartite(shifted, d, d)?)
}

type Outcome = std::result::Result<f64, (f64, String)>;

fn lift(r: Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| Err((f64::INFINITY, e.to_string())))
}

fn duality(opts: &FuzzOpts, seed: u64) -> Result<Outcome> {
    let phi = random_cp_map(opts.d, opts.k, 1 + (seed % 4) as usize, seed)?;
    let psi = k_positive_sample(opts.d, opts.k, seed.wrapping_add(1 << 32))?;
    let pairing = hs_inner(&phi.choi(), &psi.choi())?;
    let err = (-pairing).max(0.0);
    Ok(if pairing >= -opts.tol {
        Ok(err)
    } else {
        Err((err, format!("pairing {pairing:e} < -{:e}", opts.tol)))
    })
}

fn composition(opts: &FuzzOpts, seed: u64) -> Result<Outcome> {
    let (d, k) = (opts.d, opts.k);
    let mut rng = seeded(seed);
    let rank = rng.random_range(1..=k);
    let a = low_rank_matrix(&mut rng, d, rank).scale(d as f64);
    let psi = k_positive_sample(d, k, seed.wrapping_add(1 << 32))?;
    let detector = Detector::reduction(d, k);
    let mut worst = 0.0f64;
    for direction in [Direction::MapAfterAd, Direction::AdAfterMap] {
        let target = match direction {
            Direction::MapAfterAd => psi.compose(&crate::maps::ad(&a)?)?,
            Direction::AdAfterMap => crate::maps::ad(&a)?.compose(&psi)?,
        };
        let kraus = compose_certified(&a, &psi, k, opts.tol, direction)?;
        let scale = target.superoperator().norm().max(1.0);
        let err = from_kraus(&kraus.operators)?.max_abs_diff(&target) / scale;
        worst = worst.max(err);
        if err > 1e-9 {
            return Ok(Err((
                worst,
                format!("{direction:?}: reconstruction error {err:e}"),
            )));
        }
        for op in &kraus.operators {
            let r = numerical_rank(op, RANK_TOL);
            if r > k {
                return Ok(Err((
                    worst,
                    format!("{direction:?}: Kraus operator of rank {r} > {k}"),
                )));
            }
        }
        let choi = target.choi();
        let tr = choi.trace().re;
        if tr > 0.0 {
            let min = detector.min_eigenvalue(&choi.scale(1.0 / tr))?;
            if min < -opts.tol {
                return Ok(Err((
                    worst,
                    format!("{direction:?}: detector {} fired ({min:e})", detector.id),
                )));
            }
        }
    }
    Ok(Ok(worst))
}

fn bijection(_opts: &FuzzOpts, seed: u64) -> Result<Outcome> {
    let d = 2 + (seed % 3) as usize;
    let phi = random_hp_map(d, seed);
    let back = MapRep::from_choi(&phi.choi())?;
    let err = back.max_abs_diff(&phi);
    Ok(if err <= 1e-13 {
        Ok(err)
    } else {
        Err((err, format!("round trip error {err:e} at d={d}")))
    })
}

fn adjoint(opts: &FuzzOpts, seed: u64) -> Result<Outcome> {
    let d = opts.d;
    let phi = random_hp_map(d, seed);
    let mut rng = seeded(seed.wrapping_add(1 << 32));
    let x = MatrixOp::new(hermitian_matrix(&mut rng, d))?;
    let y = MatrixOp::new(hermitian_matrix(&mut rng, d))?;
    let lhs = hs_inner(&phi.apply(&x)?, &y)?;
    let rhs = hs_inner(&x, &phi.adjoint().apply(&y)?)?;
    let err = (lhs - rhs).abs() / (1.0 + lhs.abs());
    Ok(if err <= 1e-10 {
        Ok(err)
    } else {
        Err((err, format!("pairing mismatch {lhs} vs {rhs}")))
    })
}

fn characterization(opts: &FuzzOpts, seed: u64) -> Result<Outcome> {
    let (d, k) = (opts.d, opts.k);
    let phi = random_cp_kraus(d, k, 1 + (seed % 4) as usize, seed)?.to_map();
    let psi = k_positive_sample(d, k, seed.wrapping_add(1 << 32))?;
    let mut worst = 0.0f64;
    for (name, map) in [
        ("psi∘phi", psi.compose(&phi)?),
        ("phi∘psi", phi.compose(&psi)?),
    ] {
        let cert = is_cp(&map, opts.tol);
        worst = worst.max((-cert.value).max(0.0));
        if !cert.is_proven() {
            return Ok(Err((
                worst,
                format!("{name} not CP (min eig {:e})", cert.value),
            )));
        }
    }
    let p = BipartiteVector::max_entangled(d).projector();
    let inner = psi.compose(&phi)?.apply_local(&p)?;
    let pairing = trace_product(p.matrix(), inner.matrix()).re;
    worst = worst.max((-pairing).max(0.0));
    if pairing < -opts.tol {
        return Ok(Err((
            worst,
            format!("⟨Ψ₊|C_(Ψ∘Φ)|Ψ₊⟩ = {pairing:e} negative"),
        )));
    }
    Ok(Ok(worst))
}

fn run_one(suite: Suite, opts: &FuzzOpts, seed: u64) -> Outcome {
    lift(match suite {
        Suite::Duality => duality(opts, seed),
        Suite::Composition => composition(opts, seed),
        Suite::Bijection => bijection(opts, seed),
        Suite::Adjoint => adjoint(opts, seed),
        Suite::Characterization => characterization(opts, seed),
    })
}

/// Run `n` seeded instances of `suite`.
pub fn run_suite(suite: Suite, n: usize, opts: &FuzzOpts) -> Result<FuzzSummary> {
    if n == 0 {
        return Err(Error::BadParam("fuzz needs n >= 1".into()));
    }
    if opts.d < 2 || opts.k < 1 || opts.k > opts.d {
        return Err(Error::BadK {
            k: opts.k,
            max: opts.d,
        });
    }
    let outcomes: Vec<(u64, Outcome)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i);
            (seed, run_one(suite, opts, seed))
        })
        .collect();
    let mut failures = Vec::new();
    let mut max_error = 0.0f64;
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(err) => max_error = max_error.max(err),
            Err((err, message)) => {
                max_error = max_error.max(err);
                failures.push(FuzzFailure { seed, message });
            }
        }
    }
    Ok(FuzzSummary {
        suite,
        d: opts.d,
        k: opts.k,
        n,
        passed: n - failures.len(),
        failed: failures.len(),
        failures,
        max_error,
    })
}
