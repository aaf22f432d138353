//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use mapcones::bipartite::{max_abs_diff, partial_transpose, CMatrix, Subsystem, C64};
use mapcones::certify::{
    decomposable_certify, k_block_positive_certify, DecompositionOpts, Detector, SeesawOpts,
};
use mapcones::fuzz::{positive_candidate, run_suite, FuzzOpts, FuzzSummary, Suite};
use mapcones::maps::{ad, identity_map, random_hp_map, reduction_family, transpose_map};
use mapcones::random::{low_rank_matrix, seeded};
use mapcones::witness::{
    detect_schmidt_number, flips, linspace, locate_flip, random_k_separable_state, threshold_scan,
    Family,
};
use mapcones::{hermitian_eig, BipartiteVector, MapRep, MatrixOp};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn reduction_thresholds() -> Outcome {
    let start = Instant::now();
    let opts = SeesawOpts::default();
    let mut worst_gap = 0.0f64;
    for d in 2..=4 {
        for k in 1..=d {
            let star = 1.0 / k as f64;
            let above = reduction_family(d, star + 0.02).choi();
            let cert = k_block_positive_certify(&above, k, &opts).map_err(|e| e.to_string())?;
            if !cert.is_violation() {
                return Err(format!(
                    "d={d} k={k}: no violation at c = 1/k + 0.02 (best {})",
                    cert.value
                ));
            }
            let c = star - 0.02;
            let below = reduction_family(d, c).choi();
            let cert = k_block_positive_certify(&below, k, &opts).map_err(|e| e.to_string())?;
            let gap = (cert.value - (1.0 - c * k as f64)).abs();
            worst_gap = worst_gap.max(gap);
            if cert.is_violation() || gap > 2e-3 {
                return Err(format!(
                    "d={d} k={k}: best value {} vs 1 - ck = {}",
                    cert.value,
                    1.0 - c * k as f64
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!("all (d,k) thresholds, worst gap {worst_gap:.1e}, {elapsed:.2?}"),
        format!("too slow: {elapsed:.2?}"),
    )
}

fn swap(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
        }
    }
    m
}

fn omega(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = C64::new(1.0, 0.0);
        }
    }
    m
}

fn choi_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..1000u64 {
        let d = 2 + (seed % 3) as usize;
        let phi = random_hp_map(d, seed);
        let back = MapRep::from_choi(&phi.choi()).map_err(|e| e.to_string())?;
        worst = worst.max(back.max_abs_diff(&phi));
    }
    let mut fixed = 0.0f64;
    for d in 2..=4 {
        fixed = fixed.max(max_abs_diff(transpose_map(d).choi().matrix(), &swap(d)));
        fixed = fixed.max(max_abs_diff(identity_map(d).choi().matrix(), &omega(d)));
    }
    check(
        worst <= 1e-13 && fixed <= 1e-14,
        format!("1000 round trips max error {worst:.1e}; SWAP/Ψ₊ error {fixed:.1e}"),
        format!("round trip {worst:e}, fixed Choi matrices {fixed:e}"),
    )
}

fn ad_rank_one() -> Outcome {
    let mut cases = 0;
    for d in 2..=4 {
        for r in 1..=d {
            for i in 0..100u64 {
                let seed = 10_000 * d as u64 + 1000 * r as u64 + i;
                let a = low_rank_matrix(&mut seeded(seed), d, r);
                let choi = ad(&a).map_err(|e| e.to_string())?.choi();
                let eig = hermitian_eig(&choi, 1e-10).map_err(|e| e.to_string())?;
                let n = eig.values.len();
                let (first, second) = (eig.values[n - 1], eig.values[n - 2]);
                if second.abs() >= 1e-10 * first {
                    return Err(format!(
                        "d={d} r={r} seed={seed}: second eigenvalue {second:e}"
                    ));
                }
                let v = BipartiteVector::new(d, d, eig.vector(n - 1)).map_err(|e| e.to_string())?;
                let rank = v.schmidt_rank(1e-8).map_err(|e| e.to_string())?;
                if rank != r {
                    return Err(format!("d={d} r={r} seed={seed}: Schmidt rank {rank}"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} cases rank one with Schmidt rank = rank(a)"
    ))
}

fn co_partial_transpose() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..500u64 {
        let d = 2 + (seed % 3) as usize;
        let phi = random_hp_map(d, 50_000 + seed);
        let pt = partial_transpose(&phi.choi(), Subsystem::B).map_err(|e| e.to_string())?;
        worst = worst.max(phi.co().choi().max_abs_diff(&pt));
    }
    check(
        worst <= 1e-12,
        format!("500 maps, max deviation {worst:.1e}"),
        format!("max deviation {worst:e}"),
    )
}

fn fuzz(suite: Suite, n: usize, d: usize, k: usize) -> Result<FuzzSummary, String> {
    let opts = FuzzOpts {
        d,
        k,
        ..FuzzOpts::default()
    };
    let summary = run_suite(suite, n, &opts).map_err(|e| e.to_string())?;
    if summary.failed > 0 {
        return Err(format!(
            "{suite} d={d} k={k}: {} failures, first {:?}",
            summary.failed, summary.failures[0]
        ));
    }
    Ok(summary)
}

fn duality() -> Outcome {
    let s1 = fuzz(Suite::Duality, 500, 3, 1)?;
    let s2 = fuzz(Suite::Duality, 500, 3, 2)?;
    Ok(format!("k=1 {}/500, k=2 {}/500", s1.passed, s2.passed))
}

fn composition() -> Outcome {
    let s = fuzz(Suite::Composition, 100, 3, 2)?;
    Ok(format!(
        "{}/100, max reconstruction error {:.1e}",
        s.passed, s.max_error
    ))
}

fn characterization() -> Outcome {
    let s1 = fuzz(Suite::Characterization, 100, 3, 1)?;
    let s2 = fuzz(Suite::Characterization, 100, 3, 2)?;
    Ok(format!("k=1 {}/100, k=2 {}/100", s1.passed, s2.passed))
}

fn detection_thresholds() -> Outcome {
    let opts = SeesawOpts::default();
    let grid = linspace(0.0, 1.0, 101).map_err(|e| e.to_string())?;
    let step = 0.01 + 1e-12;
    for d in 2..=3 {
        for k in 1..d {
            let rows = threshold_scan(Family::Isotropic(d), k, &grid, 1e-9, &opts)
                .map_err(|e| e.to_string())?;
            let star = k as f64 / d as f64;
            match flips(&rows)[..] {
                [(lo, hi)] if lo <= star + 1e-12 && star <= hi + step && hi - lo <= step => {}
                ref other => {
                    return Err(format!(
                        "isotropic d={d} k={k}: flips {other:?}, expected near {star}"
                    ))
                }
            }
        }
    }
    let p = locate_flip(Family::Werner, 1, 0.0, 1.0, 1e-12, &opts).map_err(|e| e.to_string())?;
    let gap = (p - 1.0 / 3.0).abs();
    check(
        gap <= 1e-9,
        format!("isotropic flips at k/d within 0.01; Werner PPT flip |p - 1/3| = {gap:.1e}"),
        format!("Werner flip at {p}"),
    )
}

fn soundness() -> Outcome {
    let bank = mapcones::certify::default_detector_bank(3);
    let mut checks = 0;
    for k in 1..=2 {
        let detectors: Vec<&Detector> = bank.iter().filter(|det| det.k >= k).collect();
        for i in 0..200u64 {
            let seed = 1000 * k as u64 + i;
            let rho = random_k_separable_state(3, k, 1 + (i % 5) as usize, seed)
                .map_err(|e| e.to_string())?;
            for det in &detectors {
                let r = detect_schmidt_number(&rho, det, 1e-9).map_err(|e| e.to_string())?;
                if r.fired {
                    return Err(format!(
                        "k={k} seed={seed}: {} fired ({:e})",
                        det.id, r.min_eigenvalue
                    ));
                }
                checks += 1;
            }
        }
    }
    Ok(format!(
        "400 states, {checks} detector applications, 0 firings"
    ))
}

fn decomposability() -> Outcome {
    let start = Instant::now();
    let opts = DecompositionOpts::default();
    let mut worst = 0.0f64;
    let mut max_sweeps = 0;
    let mut iterative = 0;
    for seed in 0..100u64 {
        let map = positive_candidate(2, seed, 0.05).map_err(|e| e.to_string())?;
        let choi: MatrixOp = map.choi();
        let dec = decomposable_certify(&choi, &opts).map_err(|e| e.to_string())?;
        if !dec.certificate.is_proven() || dec.residual >= 1e-8 {
            return Err(format!(
                "seed {seed}: residual {:e} after {} sweeps",
                dec.residual, dec.sweeps
            ));
        }
        worst = worst.max(dec.residual);
        iterative += usize::from(dec.sweeps > 0);
        max_sweeps = max_sweeps.max(dec.sweeps);
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(30),
        format!("100/100 decomposed ({iterative} neither CP nor co-CP), max residual {worst:.1e}, max sweeps {max_sweeps}"),
        format!("too slow: {elapsed:.2?}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reduction-family thresholds", reduction_thresholds),
        ("Choi/reshuffling correctness", choi_round_trip),
        ("Ad_a Choi rank and Schmidt rank", ad_rank_one),
        ("partial-transpose correspondence", co_partial_transpose),
        ("duality", duality),
        ("composition", composition),
        ("characterization", characterization),
        ("detection thresholds", detection_thresholds),
        ("soundness of one-sided detection", soundness),
        ("decomposability heuristic", decomposability),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        match outcome {
            Ok(msg) => println!("PASS  criterion {:>2} {name}: {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {:>2} {name}: {msg} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
