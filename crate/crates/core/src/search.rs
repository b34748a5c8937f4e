//! Steepest-ascent hill climbing on `|det|` over single-entry flips.
//!
//! Flipping `R[i][j]` changes the determinant to `det − 2·R[i][j]·C[i][j]`
//! with `C` the cofactor matrix, so one exact adjugate per step prices every
//! flip. Ties go to the lowest `(row, column)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constructions::{kronecker, paley_hadamard};
use crate::det::{determinant, determinant_i128};
use crate::error::{Error, Result};
use crate::forms::{verify_design, DesignReport};
use crate::matrix::SignMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeedStrategy {
    Random,
    /// A Hadamard matrix of order `n − 2` plus two random rows and columns.
    AugmentHadamardPlus2,
    /// A design of order `n − 1` plus one random row and column.
    AugmentDesignPlus1,
}

impl std::str::FromStr for SeedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SeedStrategy::Random),
            "augment_hadamard_plus2" | "augment-hadamard-plus2" => {
                Ok(SeedStrategy::AugmentHadamardPlus2)
            }
            "augment_design_plus1" | "augment-design-plus1" => Ok(SeedStrategy::AugmentDesignPlus1),
            _ => Err(Error::InvalidParameter(format!("unknown seed strategy {s:?}"))),
        }
    }
}

impl std::fmt::Display for SeedStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeedStrategy::Random => "random",
            SeedStrategy::AugmentHadamardPlus2 => "augment_hadamard_plus2",
            SeedStrategy::AugmentDesignPlus1 => "augment_design_plus1",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ClimbConfig {
    pub n: usize,
    pub restarts: usize,
    pub seed_strategy: SeedStrategy,
    pub rng_seed: u64,
    /// Base matrix for the augmenting strategies.
    pub base: Option<SignMatrix>,
}

impl ClimbConfig {
    pub fn random(n: usize, restarts: usize, rng_seed: u64) -> Self {
        ClimbConfig {
            n,
            restarts,
            seed_strategy: SeedStrategy::Random,
            rng_seed,
            base: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClimbResult {
    pub best: SignMatrix,
    pub det_abs: BigInt,
    pub report: DesignReport,
    /// Restart index that produced `best`.
    pub best_restart: usize,
    /// Number of restarts ending at each local-maximum value.
    pub local_maxima: BTreeMap<BigInt, usize>,
    /// Strategy actually used (augmenting falls back to random without a base).
    pub strategy_used: SeedStrategy,
    pub steps: u64,
}

/// Appends uniformly random rows and columns.
pub fn augment_seed(
    base: &SignMatrix,
    extra_rows: usize,
    extra_cols: usize,
    rng: &mut impl Rng,
) -> Result<SignMatrix> {
    base.order()?;
    let (r, c) = (base.n_rows(), base.n_cols());
    let mut fresh = vec![0i8; (r + extra_rows) * (c + extra_cols)];
    for (k, x) in fresh.iter_mut().enumerate() {
        let (i, j) = (k / (c + extra_cols), k % (c + extra_cols));
        *x = if i < r && j < c {
            base.get(i, j)
        } else if rng.gen() {
            1
        } else {
            -1
        };
    }
    SignMatrix::new(r + extra_rows, c + extra_cols, fresh)
}

/// A Hadamard matrix of order `m`, when one of the built-in constructions
/// reaches it.
fn builtin_hadamard(m: usize) -> Option<SignMatrix> {
    if m == 1 {
        return Some(SignMatrix::ones(1, 1));
    }
    if m == 2 {
        return SignMatrix::from_pattern(&["++", "+-"]).ok();
    }
    if let Ok(h) = paley_hadamard(m as u64 - 1) {
        return Some(h);
    }
    if m % 2 == 0 {
        let half = builtin_hadamard(m / 2)?;
        let h2 = builtin_hadamard(2)?;
        return kronecker(&h2, &half).ok();
    }
    None
}

fn seed_matrix(cfg: &ClimbConfig, strategy: SeedStrategy, base: Option<&SignMatrix>, rng: &mut ChaCha8Rng) -> Result<SignMatrix> {
    let n = cfg.n;
    match (strategy, base) {
        (SeedStrategy::AugmentHadamardPlus2, Some(b)) => augment_seed(b, 2, 2, rng),
        (SeedStrategy::AugmentDesignPlus1, Some(b)) => augment_seed(b, 1, 1, rng),
        _ => Ok(SignMatrix::from_fn(n, n, |_, _| if rng.gen() { 1 } else { -1 })),
    }
}

pub fn hill_climb(cfg: &ClimbConfig) -> Result<ClimbResult> {
    if cfg.n == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and restarts ≥ 1".into()));
    }
    let (strategy, base) = match cfg.seed_strategy {
        SeedStrategy::Random => (SeedStrategy::Random, None),
        SeedStrategy::AugmentHadamardPlus2 => {
            let b = cfg.base.clone().or_else(|| cfg.n.checked_sub(2).and_then(builtin_hadamard));
            match b {
                Some(b) if b.n_rows() + 2 == cfg.n && b.is_square() => (cfg.seed_strategy, Some(b)),
                Some(_) => {
                    return Err(Error::InvalidParameter(format!(
                        "base must have order {}",
                        cfg.n - 2
                    )))
                }
                None => (SeedStrategy::Random, None),
            }
        }
        SeedStrategy::AugmentDesignPlus1 => match &cfg.base {
            Some(b) if b.n_rows() + 1 == cfg.n && b.is_square() => (cfg.seed_strategy, Some(b.clone())),
            Some(_) => {
                return Err(Error::InvalidParameter(format!(
                    "base must have order {}",
                    cfg.n - 1
                )))
            }
            None => (SeedStrategy::Random, None),
        },
    };
    let runs: Vec<Result<(SignMatrix, BigInt, u64)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(r as u64);
            let start = seed_matrix(cfg, strategy, base.as_ref(), &mut rng)?;
            Ok(climb(start))
        })
        .collect();
    let mut best: Option<(usize, SignMatrix, BigInt)> = None;
    let mut local_maxima = BTreeMap::new();
    let mut steps = 0;
    for (r, run) in runs.into_iter().enumerate() {
        let (m, d, s) = run?;
        steps += s;
        *local_maxima.entry(d.clone()).or_insert(0) += 1;
        if best.as_ref().is_none_or(|(_, _, bd)| d > *bd) {
            best = Some((r, m, d));
        }
    }
    let (best_restart, best, det_abs) = best.expect("restarts ≥ 1");
    Ok(ClimbResult {
        report: verify_design(&best)?,
        best,
        det_abs,
        best_restart,
        local_maxima,
        strategy_used: strategy,
        steps,
    })
}

/// Maximum `|det|` over all `n×n` sign matrices for `n ≤ 6`, by exhaustion.
///
/// Negating rows and columns makes the first row and column all `+`, and
/// since permuting rows preserves `|det|` and a repeated row gives zero, the
/// other rows may be taken distinct and increasing among the `2^(n−1)`
/// patterns with a leading `+`.
pub fn exhaustive_max_det(n: usize) -> Result<BigInt> {
    if !(1..=6).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "exhaustive search supports 1 ≤ n ≤ 6, got {n}"
        )));
    }
    let patterns: Vec<Vec<i8>> = (0..1u32 << (n - 1))
        .map(|w| {
            std::iter::once(1)
                .chain((0..n - 1).map(|b| if w >> b & 1 == 1 { -1 } else { 1 }))
                .collect()
        })
        .collect();
    fn rec(pick: &mut Vec<usize>, from: usize, patterns: &[Vec<i8>], n: usize, best: &mut i128) {
        if pick.len() == n {
            let rows: Vec<&[i8]> = pick.iter().map(|&p| patterns[p].as_slice()).collect();
            let m = SignMatrix::from_rows(&rows).expect("rectangular");
            *best = (*best).max(determinant_i128(&m).expect("small order").abs());
            return;
        }
        for p in from..patterns.len() {
            pick.push(p);
            rec(pick, p + 1, patterns, n, best);
            pick.pop();
        }
    }
    let mut best = 0;
    rec(&mut vec![0], 1, &patterns, n, &mut best);
    Ok(BigInt::from(best))
}

/// Climbs from `start` to a local maximum; returns it, its `|det|` and the
/// number of flips made.
pub fn climb(start: SignMatrix) -> (SignMatrix, BigInt, u64) {
    let n = start.n_rows();
    let mut m = start;
    let mut steps = 0;
    loop {
        let det = determinant(&m).expect("square");
        let cur = det.abs();
        let mut best: Option<(BigInt, usize)> = None;
        let price = |k: usize, new_det: BigInt, best: &mut Option<(BigInt, usize)>| {
            let v = new_det.abs();
            if v > cur && best.as_ref().is_none_or(|(b, _)| v > *b) {
                *best = Some((v, k));
            }
        };
        match adjugate_i128(&m) {
            Some((d, adj)) => {
                debug_assert_eq!(BigInt::from(d), det);
                for k in 0..n * n {
                    let (i, j) = (k / n, k % n);
                    // cofactor C[i][j] = adj[j][i]
                    let c = adj[j * n + i];
                    let new_det = BigInt::from(d) - BigInt::from(2 * i128::from(m.get(i, j))) * BigInt::from(c);
                    price(k, new_det, &mut best);
                }
            }
            None => {
                for k in 0..n * n {
                    let flipped = flip(&m, k);
                    price(k, determinant(&flipped).expect("square"), &mut best);
                }
            }
        }
        match best {
            Some((_, k)) => {
                m = flip(&m, k);
                steps += 1;
            }
            None => return (m, cur, steps),
        }
    }
}

fn flip(m: &SignMatrix, k: usize) -> SignMatrix {
    let n = m.n_cols();
    SignMatrix::from_fn(m.n_rows(), n, |i, j| if i * n + j == k { -m.get(i, j) } else { m.get(i, j) })
}

/// `(det, adj)` by fraction-free Gauss-Jordan elimination on `[A | I]`, with
/// `adj` row-major. `None` for singular input or `i128` overflow.
fn adjugate_i128(a: &SignMatrix) -> Option<(i128, Vec<i128>)> {
    let n = a.n_rows();
    let w = 2 * n;
    let mut m = vec![0i128; n * w];
    for i in 0..n {
        for j in 0..n {
            m[i * w + j] = i128::from(a.get(i, j));
        }
        m[i * w + n + i] = 1;
    }
    let mut prev: i128 = 1;
    let mut sign: i128 = 1;
    for k in 0..n {
        let p = (k..n).find(|&i| m[i * w + k] != 0)?;
        if p != k {
            for j in 0..w {
                m.swap(p * w + j, k * w + j);
            }
            sign = -sign;
        }
        let pivot = m[k * w + k];
        for i in (0..n).filter(|&i| i != k) {
            let lead = m[i * w + k];
            for j in (0..w).filter(|&j| j != k) {
                let t = pivot
                    .checked_mul(m[i * w + j])?
                    .checked_sub(lead.checked_mul(m[k * w + j])?)?;
                m[i * w + j] = t / prev;
            }
            m[i * w + k] = 0;
        }
        prev = pivot;
    }
    // the swaps turned [A | I] into [PA | P], so the right half ends as
    // det(PA)·(PA)⁻¹·P = det(PA)·A⁻¹, and det(A) = sign·det(PA)
    let det = sign * prev;
    let mut adj = vec![0i128; n * n];
    for i in 0..n {
        for j in 0..n {
            adj[i * n + j] = sign * m[i * w + n + j];
        }
    }
    Some((det, adj))
}
