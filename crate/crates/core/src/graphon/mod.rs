//! Step-function graphons: construction, cut norm and cut distance,
//! homomorphism densities, sampling, fingerprints and Feynman graphons of
//! Dyson–Schwinger partial sums.

mod cut;
mod density;
mod feynman;
mod graph;
mod sample;

use num::{Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{serde_q_matrix, serde_q_vec, Q};

pub use cut::{cut_distance, cut_norm, cut_norm_rational, CutDistance, CutMode, EXACT_CUT_NORM_LIMIT, EXACT_DISTANCE_LIMIT};
pub use density::{
    density_fingerprint, gateaux_density_derivative, hom_density, hom_density_graph,
    hom_density_kernel, DensityFingerprint, MAX_FINGERPRINT_EDGES,
};
pub use feynman::{convergence_trace, feynman_graphon, rescaling_trace, FeynmanBlock, FeynmanGraphon};
pub use graph::{connected_graphs_up_to, graphs_on, SimpleGraph};
pub use sample::sample_random_graph;

/// Symmetric block kernel with positive rational block measures summing to
/// one. Values may be any rationals: differences of graphons and
/// derivative directions live here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KernelJson", into = "KernelJson")]
pub struct BlockKernel {
    measures: Vec<Q>,
    values: Vec<Vec<Q>>,
}

#[derive(Serialize, Deserialize)]
struct KernelJson {
    #[serde(with = "serde_q_vec")]
    measures: Vec<Q>,
    #[serde(with = "serde_q_matrix")]
    values: Vec<Vec<Q>>,
}

impl TryFrom<KernelJson> for BlockKernel {
    type Error = Error;
    fn try_from(k: KernelJson) -> Result<Self> {
        BlockKernel::new(k.measures, k.values)
    }
}

impl From<BlockKernel> for KernelJson {
    fn from(k: BlockKernel) -> Self {
        KernelJson {
            measures: k.measures,
            values: k.values,
        }
    }
}

impl BlockKernel {
    pub fn new(measures: Vec<Q>, values: Vec<Vec<Q>>) -> Result<Self> {
        let k = measures.len();
        if k == 0 {
            return Err(Error::Invalid("a kernel needs at least one block".into()));
        }
        if measures.iter().any(|m| !m.is_positive()) {
            return Err(Error::Invalid("block measures must be positive".into()));
        }
        let total: Q = measures.iter().sum();
        if !total.is_one() {
            return Err(Error::Invalid(format!("block measures sum to {total}, not 1")));
        }
        if values.len() != k || values.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid(format!("values must be a {k}x{k} matrix")));
        }
        for i in 0..k {
            for j in 0..i {
                if values[i][j] != values[j][i] {
                    return Err(Error::Invalid(format!("values not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(BlockKernel { measures, values })
    }

    /// `k` blocks of measure `1/k`.
    pub fn equal_blocks(values: Vec<Vec<Q>>) -> Result<Self> {
        let k = values.len();
        BlockKernel::new(vec![Q::new(1.into(), (k as i64).into()); k], values)
    }

    pub fn constant(c: Q) -> Self {
        BlockKernel {
            measures: vec![Q::one()],
            values: vec![vec![c]],
        }
    }

    pub fn blocks(&self) -> usize {
        self.measures.len()
    }

    pub fn measures(&self) -> &[Q] {
        &self.measures
    }

    pub fn values(&self) -> &[Vec<Q>] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> &Q {
        &self.values[i][j]
    }

    /// `∫∫ K`.
    pub fn integral(&self) -> Q {
        let mut acc = Q::zero();
        for (i, mi) in self.measures.iter().enumerate() {
            for (j, mj) in self.measures.iter().enumerate() {
                acc += mi * mj * &self.values[i][j];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> Q {
        self.values
            .iter()
            .flatten()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Q::zero)
    }

    fn zip_with(&self, other: &BlockKernel, f: impl Fn(&Q, &Q) -> Q) -> BlockKernel {
        let (a, b) = common_refinement(self, other);
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| f(x, y)).collect())
            .collect();
        BlockKernel {
            measures: a.measures,
            values,
        }
    }

    /// Difference on the common refinement.
    pub fn sub(&self, other: &BlockKernel) -> BlockKernel {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn add(&self, other: &BlockKernel) -> BlockKernel {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn scale(&self, c: &Q) -> BlockKernel {
        BlockKernel {
            measures: self.measures.clone(),
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
        }
    }

    /// Block `i` of the result is block `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> BlockKernel {
        BlockKernel {
            measures: perm.iter().map(|&p| self.measures[p].clone()).collect(),
            values: perm
                .iter()
                .map(|&p| perm.iter().map(|&q| self.values[p][q].clone()).collect())
                .collect(),
        }
    }

    /// Splits block `i` into `parts[i]` equal pieces.
    pub fn split(&self, parts: &[usize]) -> BlockKernel {
        let index: Vec<usize> = parts
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| std::iter::repeat_n(i, p))
            .collect();
        BlockKernel {
            measures: index
                .iter()
                .map(|&i| &self.measures[i] / Q::from_integer((parts[i] as i64).into()))
                .collect(),
            values: index
                .iter()
                .map(|&i| index.iter().map(|&j| self.values[i][j].clone()).collect())
                .collect(),
        }
    }

    /// Refinement into `total` equal blocks; `None` unless every measure is
    /// a multiple of `1/total`.
    pub fn equal_refinement(&self, total: usize) -> Option<BlockKernel> {
        let t = Q::from_integer((total as i64).into());
        let parts: Option<Vec<usize>> = self
            .measures
            .iter()
            .map(|m| {
                let p = m * &t;
                p.is_integer().then(|| p.to_integer().try_into().ok()).flatten()
            })
            .collect();
        Some(self.split(&parts?))
    }

    /// Least `K` such that every measure is a multiple of `1/K`.
    pub fn equal_block_count(&self) -> usize {
        self.measures
            .iter()
            .fold(num::BigInt::one(), |acc, m| acc.lcm(m.denom()))
            .try_into()
            .unwrap_or(usize::MAX)
    }
}

/// Refines two kernels to the common interval partition of `[0, 1]`
/// (blocks are consecutive intervals in index order).
pub fn common_refinement(a: &BlockKernel, b: &BlockKernel) -> (BlockKernel, BlockKernel) {
    if a.measures == b.measures {
        return (a.clone(), b.clone());
    }
    let cuts = |k: &BlockKernel| {
        let mut acc = Q::zero();
        k.measures
            .iter()
            .map(|m| {
                acc += m;
                acc.clone()
            })
            .collect::<Vec<_>>()
    };
    let (ca, cb) = (cuts(a), cuts(b));
    let mut merged: Vec<Q> = ca.iter().chain(&cb).cloned().collect();
    merged.sort();
    merged.dedup();
    let mut measures = Vec::with_capacity(merged.len());
    let mut prev = Q::zero();
    let (mut ia, mut ib) = (Vec::new(), Vec::new());
    let (mut pa, mut pb) = (0, 0);
    for c in merged {
        measures.push(&c - &prev);
        ia.push(pa);
        ib.push(pb);
        if c == ca[pa] {
            pa += 1;
        }
        if c == cb[pb] {
            pb += 1;
        }
        prev = c;
    }
    let lift = |k: &BlockKernel, idx: &[usize]| BlockKernel {
        measures: measures.clone(),
        values: idx
            .iter()
            .map(|&i| idx.iter().map(|&j| k.values[i][j].clone()).collect())
            .collect(),
    };
    (lift(a, &ia), lift(b, &ib))
}

/// Step graphon: a block kernel with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BlockKernel", into = "BlockKernel")]
pub struct StepGraphon(BlockKernel);

impl TryFrom<BlockKernel> for StepGraphon {
    type Error = Error;
    fn try_from(k: BlockKernel) -> Result<Self> {
        StepGraphon::from_kernel(k)
    }
}

impl From<StepGraphon> for BlockKernel {
    fn from(w: StepGraphon) -> Self {
        w.0
    }
}

impl AsRef<BlockKernel> for StepGraphon {
    fn as_ref(&self) -> &BlockKernel {
        &self.0
    }
}

impl AsRef<BlockKernel> for BlockKernel {
    fn as_ref(&self) -> &BlockKernel {
        self
    }
}

impl StepGraphon {
    pub fn new(measures: Vec<Q>, values: Vec<Vec<Q>>) -> Result<Self> {
        StepGraphon::from_kernel(BlockKernel::new(measures, values)?)
    }

    pub fn from_kernel(k: BlockKernel) -> Result<Self> {
        if k
            .values
            .iter()
            .flatten()
            .any(|v| v.is_negative() || *v > Q::one())
        {
            return Err(Error::Invalid("graphon values must lie in [0, 1]".into()));
        }
        Ok(StepGraphon(k))
    }

    pub fn equal_blocks(values: Vec<Vec<Q>>) -> Result<Self> {
        StepGraphon::from_kernel(BlockKernel::equal_blocks(values)?)
    }

    pub fn zero() -> Self {
        StepGraphon(BlockKernel::constant(Q::zero()))
    }

    pub fn constant(c: Q) -> Result<Self> {
        StepGraphon::from_kernel(BlockKernel::constant(c))
    }

    pub fn kernel(&self) -> &BlockKernel {
        &self.0
    }

    pub fn blocks(&self) -> usize {
        self.0.blocks()
    }

    pub fn measures(&self) -> &[Q] {
        self.0.measures()
    }

    pub fn values(&self) -> &[Vec<Q>] {
        self.0.values()
    }

    pub fn permuted(&self, perm: &[usize]) -> StepGraphon {
        StepGraphon(self.0.permuted(perm))
    }
}

/// The graphon of a graph: `n` equal blocks with the adjacency matrix.
pub fn graphon_from_graph(g: &SimpleGraph) -> Result<StepGraphon> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::Invalid(
            "empty graph has no graphon; use StepGraphon::zero".into(),
        ));
    }
    let mut values = vec![vec![Q::zero(); n]; n];
    for (a, b) in g.edges() {
        values[a][b] = Q::one();
        values[b][a] = Q::one();
    }
    StepGraphon::equal_blocks(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    #[test]
    fn from_graph_examples() {
        let k2 = graphon_from_graph(&SimpleGraph::complete(2)).unwrap();
        assert_eq!(k2.measures(), &[q(1, 2), q(1, 2)]);
        assert_eq!(k2.values(), m(&[&[0, 1], &[1, 0]]).as_slice());
        let e2 = graphon_from_graph(&SimpleGraph::empty(2)).unwrap();
        assert_eq!(e2.values(), m(&[&[0, 0], &[0, 0]]).as_slice());
        let p3 = graphon_from_graph(&SimpleGraph::path(3)).unwrap();
        assert_eq!(p3.values(), m(&[&[0, 1, 0], &[1, 0, 1], &[0, 1, 0]]).as_slice());
        assert!(graphon_from_graph(&SimpleGraph::empty(0)).is_err());
    }

    #[test]
    fn validation() {
        assert!(StepGraphon::new(vec![q(1, 2), q(1, 3)], m(&[&[0, 0], &[0, 0]])).is_err());
        assert!(StepGraphon::new(vec![q(1, 2), q(1, 2)], m(&[&[0, 1], &[0, 0]])).is_err());
        assert!(StepGraphon::new(vec![qi(1)], m(&[&[2]])).is_err());
        assert!(BlockKernel::new(vec![qi(1)], m(&[&[-2]])).is_ok());
    }

    #[test]
    fn refinements() {
        let a = BlockKernel::new(vec![q(1, 2), q(1, 2)], m(&[&[1, 0], &[0, 0]])).unwrap();
        let b = BlockKernel::new(vec![q(1, 3), q(2, 3)], m(&[&[0, 1], &[1, 0]])).unwrap();
        let (ra, rb) = common_refinement(&a, &b);
        assert_eq!(ra.measures(), &[q(1, 3), q(1, 6), q(1, 2)]);
        assert_eq!(ra.integral(), a.integral());
        assert_eq!(rb.integral(), b.integral());
        assert_eq!(b.equal_block_count(), 3);
        let eq = b.equal_refinement(6).unwrap();
        assert_eq!(eq.blocks(), 6);
        assert_eq!(eq.integral(), b.integral());
        assert!(b.equal_refinement(4).is_none());
    }

    #[test]
    fn json_round_trip() {
        let w = graphon_from_graph(&SimpleGraph::path(3)).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.starts_with(r#"{"measures":["1/3","1/3","1/3"],"values":[["0","1","0"]"#));
        assert_eq!(serde_json::from_str::<StepGraphon>(&s).unwrap(), w);
        assert!(serde_json::from_str::<StepGraphon>(r#"{"measures":["1"],"values":[["2"]]}"#).is_err());
    }
}
