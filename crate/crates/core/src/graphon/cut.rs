//! Cut norm and cut distance of block kernels.
//!
//! Kernels are turned into a dense matrix of weighted block masses
//! `μ_i μ_j K_ij`. When the common denominator of those masses is small the
//! matrix is scaled to integers and every norm evaluation is exact; otherwise
//! `f64` is used.
//!
//! For a fixed row set `S` the best column set is read off the column sums
//! (all positive ones, or all negative ones), so the exact norm costs
//! `2^k · k` rather than `4^k`.

use num::{BigInt, Integer, One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::BlockKernel;
use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum CutMode {
    Exact,
    Heuristic { seed: u64 },
}

pub const EXACT_CUT_NORM_LIMIT: usize = 20;
pub const EXACT_DISTANCE_LIMIT: usize = 8;
/// Largest common equal-block refinement accepted in heuristic mode.
pub const HEURISTIC_REFINEMENT_LIMIT: usize = 2048;
const RESTARTS: usize = 32;
const SEARCH_RESTARTS: usize = 8;
const TRIALS: u64 = 8;
const LARGE_KERNEL: usize = 256;
const LARGE_RESTARTS: usize = 4;
const SWAP_PASSES: usize = 2;
/// Pairwise-swap polishing is skipped above this many blocks.
const SWAP_LIMIT: usize = 32;

trait Entry: Copy + PartialOrd + Send + Sync + std::fmt::Debug {
    const ZERO: Self;
    fn plus(self, o: Self) -> Self;
    fn minus(self, o: Self) -> Self;
}

impl Entry for i128 {
    const ZERO: Self = 0;
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
}

impl Entry for i64 {
    const ZERO: Self = 0;
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
}

impl Entry for f64 {
    const ZERO: Self = 0.0;
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
}

fn max<T: Entry>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

/// `max_{S,T} |Σ_{i∈S, j∈T} w_ij|` by Gray-code enumeration of `S`.
fn exact_norm<T: Entry>(k: usize, w: &[T]) -> T {
    let mut col = vec![T::ZERO; k];
    let mut best = T::ZERO;
    let mut gray = 0u64;
    for step in 1..(1u64 << k) {
        let bit = step.trailing_zeros() as usize;
        gray ^= 1 << bit;
        let row = &w[bit * k..(bit + 1) * k];
        if gray & (1 << bit) != 0 {
            col.iter_mut().zip(row).for_each(|(c, &x)| *c = c.plus(x));
        } else {
            col.iter_mut().zip(row).for_each(|(c, &x)| *c = c.minus(x));
        }
        let (mut pos, mut neg) = (T::ZERO, T::ZERO);
        for &c in &col {
            if c > T::ZERO {
                pos = pos.plus(c);
            } else {
                neg = neg.minus(c);
            }
        }
        best = max(best, max(pos, neg));
    }
    best
}

/// Alternating maximization from a start set; returns the value of the
/// final `(S, T)` pair, a lower bound on the norm.
fn alternate<T: Entry>(k: usize, w: &[T], mut rows: Vec<bool>, sign: bool) -> T {
    let better = |x: T| if sign { x > T::ZERO } else { x < T::ZERO };
    let gain = |x: T| if sign { x } else { T::ZERO.minus(x) };
    let mut best = T::ZERO;
    let mut col = vec![T::ZERO; k];
    let mut cols = vec![false; k];
    for _ in 0..64 {
        col.iter_mut().for_each(|c| *c = T::ZERO);
        for (r, _) in w.chunks_exact(k).zip(&rows).filter(|(_, &s)| s) {
            col.iter_mut().zip(r).for_each(|(c, &x)| *c = c.plus(x));
        }
        cols.iter_mut().zip(&col).for_each(|(t, &c)| *t = better(c));
        let mut value = T::ZERO;
        for (r, s) in w.chunks_exact(k).zip(rows.iter_mut()) {
            let sum = r
                .iter()
                .zip(&cols)
                .fold(T::ZERO, |acc, (&x, &t)| if t { acc.plus(x) } else { acc });
            *s = better(sum);
            if *s {
                value = value.plus(gain(sum));
            }
        }
        if value <= best {
            break;
        }
        best = value;
    }
    best
}

fn heuristic_norm<T: Entry>(k: usize, w: &[T], seed: u64, restarts: usize) -> T {
    // large kernels: each restart costs O(k²) per sweep and random starts
    // land in near-identical optima
    let restarts = if k > LARGE_KERNEL { restarts.min(LARGE_RESTARTS) } else { restarts };
    (0..=restarts)
        .into_par_iter()
        .map(|r| {
            let rows: Vec<bool> = if r == 0 {
                vec![true; k]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                (0..k).map(|_| rng.random_bool(0.5)).collect()
            };
            max(alternate(k, w, rows.clone(), true), alternate(k, w, rows, false))
        })
        .reduce(|| T::ZERO, max)
}

/// Dense weighted masses: integers over a common denominator when possible.
enum Dense {
    Int { w: Vec<i128>, denom: BigInt },
    Float(Vec<f64>),
}

impl Dense {
    fn from_masses(masses: &[Q]) -> Dense {
        if let Some(d) = Dense::small(masses) {
            return d;
        }
        let denom = masses
            .iter()
            .fold(BigInt::one(), |acc, m| acc.lcm(m.denom()));
        if denom.bits() <= 64 {
            let ints: Option<Vec<i128>> = masses
                .iter()
                .map(|m| (m.numer() * (&denom / m.denom())).to_i128())
                .collect();
            // row sums stay far from overflow: k ≤ 2048 entries of < 2^96
            if let Some(w) = ints.filter(|w| w.iter().all(|x| x.unsigned_abs() < 1 << 96)) {
                return Dense::Int { w, denom };
            }
        }
        Dense::Float(masses.iter().map(to_f64).collect())
    }

    /// Machine-integer path for masses whose parts fit in `i64`.
    fn small(masses: &[Q]) -> Option<Dense> {
        let parts: Vec<(i64, i64)> = masses
            .iter()
            .map(|m| Some((m.numer().to_i64()?, m.denom().to_i64()?)))
            .collect::<Option<_>>()?;
        let mut denom: i128 = 1;
        for &(_, d) in &parts {
            if denom % d as i128 != 0 {
                denom = denom.lcm(&(d as i128));
                if denom >= 1 << 62 {
                    return None;
                }
            }
        }
        let w = parts
            .iter()
            .map(|&(n, d)| n as i128 * (denom / d as i128))
            .collect();
        Some(Dense::Int {
            w,
            denom: denom.into(),
        })
    }

    fn scale_denominator(self, factor: usize) -> Dense {
        match self {
            Dense::Int { w, denom } => Dense::Int {
                w,
                denom: denom * BigInt::from(factor),
            },
            Dense::Float(w) => Dense::Float(w.into_iter().map(|x| x / factor as f64).collect()),
        }
    }

    fn norm(&self, k: usize, mode: Search) -> Value {
        match self {
            Dense::Int { w, denom } => Value::Rational(
                Q::new(mode.run_int(k, w).into(), denom.clone()),
            ),
            Dense::Float(w) => Value::Approx(mode.run(k, w)),
        }
    }
}

#[derive(Clone, Copy)]
enum Search {
    Exact,
    Heuristic { seed: u64, restarts: usize },
}

impl Search {
    fn run<T: Entry>(self, k: usize, w: &[T]) -> T {
        match self {
            Search::Exact => exact_norm(k, w),
            Search::Heuristic { seed, restarts } => heuristic_norm(k, w, seed, restarts),
        }
    }

    /// Integer search, narrowed to `i64` when no partial sum can overflow.
    fn run_int(self, k: usize, w: &[i128]) -> i128 {
        let total = w.iter().try_fold(0u128, |acc, x| acc.checked_add(x.unsigned_abs()));
        match total {
            Some(t) if t < i64::MAX as u128 => {
                let narrow: Vec<i64> = w.iter().map(|&x| x as i64).collect();
                self.run(k, &narrow) as i128
            }
            _ => self.run(k, w),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Rational(Q),
    Approx(f64),
}

impl Value {
    fn as_f64(&self) -> f64 {
        match self {
            Value::Rational(q) => to_f64(q),
            Value::Approx(x) => *x,
        }
    }
}

/// Weighted block masses `μ_i μ_j K_ij` as a dense matrix.
fn dense_kernel(k: &BlockKernel) -> Dense {
    let mu = k.measures();
    let n = mu.len();
    if mu.iter().all(|m| m == &mu[0]) {
        // equal blocks: masses are the values over n²
        let flat: Vec<Q> = k.values().iter().flatten().cloned().collect();
        return Dense::from_masses(&flat).scale_denominator(n * n);
    }
    let mut out = Vec::with_capacity(n * n);
    for (i, mi) in mu.iter().enumerate() {
        for (j, mj) in mu.iter().enumerate() {
            out.push(mi * mj * k.value(i, j));
        }
    }
    Dense::from_masses(&out)
}

fn search_for(mode: CutMode, k: usize, restarts: usize) -> Result<Search> {
    match mode {
        CutMode::Exact if k > EXACT_CUT_NORM_LIMIT => Err(Error::TooLarge {
            what: "exact cut norm blocks (use heuristic mode)",
            size: k,
            limit: EXACT_CUT_NORM_LIMIT,
        }),
        CutMode::Exact => Ok(Search::Exact),
        CutMode::Heuristic { seed } => Ok(Search::Heuristic { seed, restarts }),
    }
}

/// `‖K‖_□ = max_{S,T} |∫_{S×T} K|` over unions of blocks. Exact mode is
/// exact (up to the final conversion to `f64`); heuristic mode returns a
/// lower bound attained by an explicit pair of block sets.
pub fn cut_norm(k: impl AsRef<BlockKernel>, mode: CutMode) -> Result<f64> {
    let k = k.as_ref();
    let search = search_for(mode, k.blocks(), RESTARTS)?;
    Ok(dense_kernel(k).norm(k.blocks(), search).as_f64())
}

/// Exact cut norm as a rational, when the masses fit the integer path.
pub fn cut_norm_rational(k: impl AsRef<BlockKernel>) -> Result<Option<Q>> {
    let k = k.as_ref();
    let search = search_for(CutMode::Exact, k.blocks(), RESTARTS)?;
    Ok(match dense_kernel(k).norm(k.blocks(), search) {
        Value::Rational(q) => Some(q),
        Value::Approx(_) => None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutDistance {
    pub value: f64,
    /// Size of the common equal-block refinement.
    pub blocks: usize,
    /// Best relabeling found: refined block `permutation[i]` of the first
    /// argument is matched with refined block `i` of the second.
    pub permutation: Vec<usize>,
    /// `|∫W − ∫U|`, a lower bound for every relabeling.
    pub lower_bound: f64,
    /// True when every block permutation was examined.
    pub exhaustive: bool,
}

/// Two refined kernels over a shared denominator (or as floats).
enum Pair {
    Int { k: usize, a: Vec<i128>, b: Vec<i128>, denom: BigInt },
    Float { k: usize, a: Vec<f64>, b: Vec<f64> },
}

impl Pair {
    fn new(k: usize, a: &[Q], b: &[Q]) -> Pair {
        let both: Vec<Q> = a.iter().chain(b).cloned().collect();
        match Dense::from_masses(&both) {
            Dense::Int { w, denom } => {
                let b = w[k * k..].to_vec();
                let mut a = w;
                a.truncate(k * k);
                let denom = denom * BigInt::from(k * k);
                Pair::Int { k, a, b, denom }
            }
            Dense::Float(w) => Pair::Float {
                k,
                a: w[..k * k].to_vec(),
                b: w[k * k..].to_vec(),
            },
        }
    }

    /// `|Σa − Σb| / k²`, the integral gap.
    fn mass_gap(&self) -> f64 {
        match self {
            Pair::Int { a, b, denom, .. } => {
                let gap: i128 = a.iter().sum::<i128>() - b.iter().sum::<i128>();
                to_f64(&Q::new(gap.abs().into(), denom.clone()))
            }
            Pair::Float { k, a, b } => {
                (a.iter().sum::<f64>() - b.iter().sum::<f64>()).abs() / (k * k) as f64
            }
        }
    }

    /// `‖a^σ − b‖_□`; every equal block pair carries weight `1/k²`.
    fn norm(&self, perm: &[usize], search: Search) -> f64 {
        fn diff<T: Entry>(k: usize, a: &[T], b: &[T], perm: &[usize]) -> Vec<T> {
            let mut d = Vec::with_capacity(k * k);
            for i in 0..k {
                for j in 0..k {
                    d.push(a[perm[i] * k + perm[j]].minus(b[i * k + j]));
                }
            }
            d
        }
        match self {
            Pair::Int { k, a, b, denom } => {
                let v = search.run_int(*k, &diff(*k, a, b, perm));
                to_f64(&Q::new(v.into(), denom.clone()))
            }
            Pair::Float { k, a, b } => search.run(*k, &diff(*k, a, b, perm)) / (k * k) as f64,
        }
    }
}

fn better(x: &(f64, Vec<usize>), y: &(f64, Vec<usize>)) -> bool {
    x.0 < y.0 || (x.0 == y.0 && x.1 < y.1)
}

fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(k, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Cut distance `min_σ ‖W^σ − U‖_□` over block permutations of the common
/// equal-block refinement. This is an upper bound on the distance over all
/// measure-preserving maps.
///
/// Exact mode examines all `K!` permutations (`K ≤ 8`). Heuristic mode
/// tries the identity, then seeded random permutations improved by pairwise
/// swaps, and stops early once the mass lower bound is reached.
pub fn cut_distance(
    w: impl AsRef<BlockKernel>,
    u: impl AsRef<BlockKernel>,
    mode: CutMode,
) -> Result<CutDistance> {
    let (w, u) = (w.as_ref(), u.as_ref());
    let lcm = BigInt::from(w.equal_block_count()).lcm(&BigInt::from(u.equal_block_count()));
    let limit = match mode {
        CutMode::Exact => EXACT_DISTANCE_LIMIT,
        CutMode::Heuristic { .. } => HEURISTIC_REFINEMENT_LIMIT,
    };
    let k = lcm.to_usize().filter(|&k| k <= limit).ok_or_else(|| match mode {
        CutMode::Exact => Error::TooLarge {
            what: "exact cut distance refinement blocks (use heuristic mode)",
            size: lcm.to_usize().unwrap_or(usize::MAX),
            limit,
        },
        CutMode::Heuristic { .. } => Error::Refinement(format!(
            "common equal-block refinement needs {lcm} blocks, limit {limit}"
        )),
    })?;
    let ra = w.equal_refinement(k).expect("k is a multiple of every denominator");
    let rb = u.equal_refinement(k).expect("k is a multiple of every denominator");
    let flat = |x: &BlockKernel| x.values().iter().flatten().cloned().collect::<Vec<_>>();
    let pair = Pair::new(k, &flat(&ra), &flat(&rb));
    let lower = pair.mass_gap();
    let identity: Vec<usize> = (0..k).collect();

    if mode == CutMode::Exact {
        let best = all_permutations(k)
            .into_par_iter()
            .map(|p| (pair.norm(&p, Search::Exact), p))
            .reduce_with(|x, y| if better(&y, &x) { y } else { x })
            .expect("at least one permutation");
        return Ok(CutDistance {
            value: best.0,
            blocks: k,
            permutation: best.1,
            lower_bound: lower,
            exhaustive: true,
        });
    }

    let CutMode::Heuristic { seed } = mode else { unreachable!() };
    let final_search = if k <= EXACT_CUT_NORM_LIMIT {
        Search::Exact
    } else {
        Search::Heuristic { seed, restarts: RESTARTS }
    };
    let inner = if k <= 12 {
        Search::Exact
    } else {
        Search::Heuristic { seed, restarts: SEARCH_RESTARTS }
    };
    let reached = |v: f64| v <= lower + 1e-12;
    let finish = |perm: Vec<usize>, exhaustive: bool| {
        CutDistance {
            value: pair.norm(&perm, final_search),
            blocks: k,
            permutation: perm,
            lower_bound: lower,
            exhaustive,
        }
    };

    // a constant side makes every relabeling equivalent
    let constant = |x: &BlockKernel| x.values().iter().flatten().all(|v| v == x.value(0, 0));
    if k == 1 || constant(&ra) || constant(&rb) {
        return Ok(finish(identity, true));
    }
    let id_value = pair.norm(&identity, inner);
    if reached(id_value) {
        return Ok(finish(identity, false));
    }
    let passes = if k <= SWAP_LIMIT { SWAP_PASSES } else { 0 };
    let trials: Vec<(f64, Vec<usize>)> = (0..TRIALS)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t + 1);
            let mut perm = identity.clone();
            if t > 0 {
                // trial 0 polishes the identity
                for i in (1..k).rev() {
                    perm.swap(i, rng.random_range(0..=i));
                }
            }
            let mut value = pair.norm(&perm, inner);
            'passes: for _ in 0..passes {
                let mut improved = false;
                for i in 0..k {
                    for j in i + 1..k {
                        perm.swap(i, j);
                        let v = pair.norm(&perm, inner);
                        if v < value {
                            value = v;
                            improved = true;
                            if reached(value) {
                                break 'passes;
                            }
                        } else {
                            perm.swap(i, j);
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            (value, perm)
        })
        .collect();
    let mut best = (id_value, identity);
    for cand in trials {
        if better(&cand, &best) {
            best = cand;
        }
    }
    Ok(finish(best.1, false))
}
