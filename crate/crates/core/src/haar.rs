//! A ranked countable universe truncated at depth `m`, its subsets as a
//! group under symmetric difference, the metric `Σ_{e∈X△Y} b^{−α(e)}` with
//! base `b = g + ε`, and Monte-Carlo checks of the Bernoulli(1/2) Haar
//! measure.
//!
//! Every sample draws from its own ChaCha8 stream (stream = sample index),
//! so estimates depend only on the master seed.

use std::fmt;

use bitvec::prelude::*;
use num::{BigUint, One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{fmt_q, to_f64, Q};

/// Largest depth handled by the Monte-Carlo routines, which pack a point
/// into one machine word.
pub const MC_MAX_DEPTH: usize = 64;

/// Membership of ranks `1..=m`; bit `r − 1` is rank `r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SolutionPoint {
    bits: BitVec<u64, Lsb0>,
}

impl SolutionPoint {
    pub fn empty(depth: usize) -> Result<Self> {
        check_depth(depth)?;
        Ok(SolutionPoint { bits: bitvec![u64, Lsb0; 0; depth] })
    }

    pub fn full(depth: usize) -> Result<Self> {
        check_depth(depth)?;
        Ok(SolutionPoint { bits: bitvec![u64, Lsb0; 1; depth] })
    }

    /// The subset with the given ranks (each in `1..=depth`).
    pub fn from_ranks(depth: usize, ranks: &[usize]) -> Result<Self> {
        let mut p = Self::empty(depth)?;
        for &r in ranks {
            if r == 0 || r > depth {
                return Err(Error::Invalid(format!("rank {r} outside 1..={depth}")));
            }
            p.bits.set(r - 1, true);
        }
        Ok(p)
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, rank: usize) -> bool {
        rank >= 1 && self.bits.get(rank - 1).is_some_and(|b| *b)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.bits.iter_ones().map(|i| i + 1).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    /// `Σ_{r∈X} 2^{m−r}`: the base-2 norm scaled by `2^m`.
    fn binary_numerator(&self) -> BigUint {
        let mut k = BigUint::zero();
        for b in self.bits.iter() {
            k <<= 1;
            if *b {
                k += 1u32;
            }
        }
        k
    }
}

impl fmt::Display for SolutionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ranks: Vec<String> = self.ranks().iter().map(|r| r.to_string()).collect();
        write!(f, "{{{}}}", ranks.join(","))
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    Ok(())
}

fn same_universe(x: &SolutionPoint, y: &SolutionPoint) -> Result<()> {
    if x.depth() != y.depth() {
        return Err(Error::UniverseMismatch(x.depth(), y.depth()));
    }
    Ok(())
}

/// `b = g + ε` with `g ≥ 1`, `ε > 0`.
pub fn metric_base(g: &Q, eps: &Q) -> Result<Q> {
    if g < &Q::one() {
        return Err(Error::Domain(fmt_q(g), "g ≥ 1"));
    }
    if !eps.is_positive() {
        return Err(Error::Domain(fmt_q(eps), "ε > 0"));
    }
    Ok(g + eps)
}

/// `X △ Y`.
pub fn group_op(x: &SolutionPoint, y: &SolutionPoint) -> Result<SolutionPoint> {
    same_universe(x, y)?;
    let mut bits = x.bits.clone();
    bits ^= y.bits.as_bitslice();
    Ok(SolutionPoint { bits })
}

/// `‖X‖ = Σ_{r∈X} b^{−r}`. Base 2 is read off the bit string directly.
pub fn norm_in_base(x: &SolutionPoint, base: &Q) -> Q {
    if base == &Q::from_integer(2.into()) {
        let denom = BigUint::one() << x.depth();
        return Q::new(x.binary_numerator().into(), denom.into());
    }
    // Horner from the deepest rank
    let mut acc = Q::zero();
    for b in x.bits.iter().rev() {
        if *b {
            acc += Q::one();
        }
        acc /= base;
    }
    acc
}

pub fn norm(x: &SolutionPoint, g: &Q, eps: &Q) -> Result<Q> {
    Ok(norm_in_base(x, &metric_base(g, eps)?))
}

/// `d(X, Y) = ‖X △ Y‖`.
pub fn distance(x: &SolutionPoint, y: &SolutionPoint, g: &Q, eps: &Q) -> Result<Q> {
    let base = metric_base(g, eps)?;
    Ok(norm_in_base(&group_op(x, y)?, &base))
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Independent fair coin per rank, from the seed's stream 0.
pub fn sample_haar(depth: usize, seed: u64) -> Result<SolutionPoint> {
    check_depth(depth)?;
    Ok(draw(depth, &mut stream(seed, 0)))
}

fn draw(depth: usize, rng: &mut ChaCha8Rng) -> SolutionPoint {
    let words = depth.div_ceil(64);
    let raw: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
    let mut bits = BitVec::<u64, Lsb0>::from_vec(raw);
    bits.truncate(depth);
    SolutionPoint { bits }
}

/// Sample `i` of a Monte-Carlo run as the integer `2^m·‖X‖` (base 2).
fn mc_sample(depth: usize, seed: u64, index: u64) -> u64 {
    let raw = stream(seed, index).next_u64();
    // bit r−1 is rank r, worth 2^{m−r}
    let masked = if depth == 64 { raw } else { raw & ((1u64 << depth) - 1) };
    masked.reverse_bits() >> (64 - depth)
}

fn check_mc(depth: usize, samples: usize) -> Result<()> {
    check_depth(depth)?;
    if depth > MC_MAX_DEPTH {
        return Err(Error::TooLarge { what: "Monte-Carlo depth", size: depth, limit: MC_MAX_DEPTH });
    }
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    Ok(())
}

/// One row of a ball-measure sweep; also the CSV record layout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallEstimate {
    pub r: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl BallEstimate {
    /// `3σ + 2^{−m}`, with σ the binomial standard deviation at `p = r`.
    pub fn tolerance(&self) -> f64 {
        let sigma = (self.r * (1.0 - self.r) / self.n as f64).sqrt();
        3.0 * sigma + (-(self.m as f64)).exp2()
    }

    pub fn within_tolerance(&self) -> bool {
        (self.estimate - self.r).abs() <= self.tolerance()
    }
}

/// Fraction of Haar samples with `‖X‖ ≤ r` at base 2, counted exactly.
pub fn ball_measure_mc(r: &Q, depth: usize, samples: usize, seed: u64) -> Result<BallEstimate> {
    check_mc(depth, samples)?;
    if r.is_negative() || r > &Q::one() {
        return Err(Error::Domain(fmt_q(r), "[0, 1]"));
    }
    // ‖X‖ = k / 2^m ≤ r  ⇔  k ≤ ⌊r·2^m⌋
    let scaled = (r * Q::from_integer((BigUint::one() << depth).into())).floor();
    let threshold: u128 = scaled.to_integer().try_into().expect("r ≤ 1");
    let hits: usize = (0..samples as u64)
        .into_par_iter()
        .filter(|&i| (mc_sample(depth, seed, i) as u128) <= threshold)
        .count();
    let p = hits as f64 / samples as f64;
    Ok(BallEstimate {
        r: to_f64(r),
        estimate: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        m: depth,
        n: samples,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    /// Asymptotic 1% critical value `1.628/√N`.
    pub critical: f64,
    pub samples: usize,
    pub m: usize,
    pub seed: u64,
}

impl KsReport {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of the base-2
/// norm of Haar samples and the uniform law on `[0, 1]`.
pub fn ks_uniformity(depth: usize, samples: usize, seed: u64) -> Result<KsReport> {
    check_mc(depth, samples)?;
    let scale = (depth as f64).exp2();
    let mut xs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| mc_sample(depth, seed, i) as f64 / scale)
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = samples as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    Ok(KsReport { statistic, critical: 1.628 / n.sqrt(), samples, m: depth, seed })
}

/// Per-rank inclusion frequencies over `samples` Haar draws.
pub fn inclusion_frequencies(depth: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    check_mc(depth, samples)?;
    let counts = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let k = mc_sample(depth, seed, i);
            // rank r sits at bit m − r of k
            (1..=depth).map(|r| (k >> (depth - r) & 1) as usize).collect::<Vec<_>>()
        })
        .reduce(|| vec![0; depth], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(counts.into_iter().map(|c| c as f64 / samples as f64).collect())
}

/// Pearson correlation of the inclusion indicators of two ranks.
pub fn rank_correlation(depth: usize, a: usize, b: usize, samples: usize, seed: u64) -> Result<f64> {
    check_mc(depth, samples)?;
    if a == 0 || b == 0 || a > depth || b > depth {
        return Err(Error::Invalid(format!("ranks must lie in 1..={depth}")));
    }
    let (sa, sb, sab) = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let k = mc_sample(depth, seed, i);
            let (x, y) = (k >> (depth - a) & 1, k >> (depth - b) & 1);
            (x, y, x & y)
        })
        .reduce(|| (0, 0, 0), |p, q| (p.0 + q.0, p.1 + q.1, p.2 + q.2));
    let n = samples as f64;
    let (pa, pb) = (sa as f64 / n, sb as f64 / n);
    let cov = sab as f64 / n - pa * pb;
    Ok(cov / (pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt())
}

/// The Monte-Carlo sample `index` of a run as a point, matching the
/// values used by [`ball_measure_mc`].
pub fn mc_point(depth: usize, seed: u64, index: u64) -> Result<SolutionPoint> {
    check_mc(depth, 1)?;
    Ok(draw(depth, &mut stream(seed, index)))
}
