//! Feynman graphons of forest sums and distance traces along partial sums.
//!
//! A forest sum `Σ c_f f` with nonnegative integer coefficients becomes a
//! graphon with one block per vertex of the disjoint union of `c_f` copies
//! of every forest. Vertex blocks have equal measure, so each monomial copy
//! occupies measure proportional to its vertex count. Tree edges of a
//! grade-`n` monomial carry the value `(λg)ⁿ`, clipped to `[0, 1]`.

use num::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::cut::{cut_distance, CutMode};
use super::StepGraphon;
use crate::dse::DseSolution;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, is_nonneg_integer, serde_q, Q};
use crate::trees::{Forest, ForestSum};

/// One diagonal block: a copy of a monomial of the forest sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeynmanBlock {
    #[serde(serialize_with = "forest_string")]
    pub forest: Forest,
    pub copy: usize,
    pub grade: usize,
    pub vertices: usize,
    #[serde(with = "serde_q")]
    pub measure: Q,
    #[serde(with = "serde_q")]
    pub edge_value: Q,
}

fn forest_string<S: serde::Serializer>(f: &Forest, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeynmanGraphon {
    pub graphon: StepGraphon,
    pub blocks: Vec<FeynmanBlock>,
    #[serde(with = "serde_q")]
    pub coupling: Q,
}

pub fn feynman_graphon(y: &ForestSum, coupling: &Q) -> Result<FeynmanGraphon> {
    if coupling.is_negative() {
        return Err(Error::Domain(fmt_q(coupling), "coupling must be nonnegative"));
    }
    let mut layout = Vec::new();
    let mut total = 0usize;
    for (f, c) in y.iter() {
        if !is_nonneg_integer(c) {
            return Err(Error::UnsupportedCoefficient(format!(
                "coefficient {} of {f} is not a nonnegative integer",
                fmt_q(c)
            )));
        }
        let copies = c.to_integer().to_usize().ok_or_else(|| {
            Error::UnsupportedCoefficient(format!("coefficient {} too large", fmt_q(c)))
        })?;
        if f.grade() == 0 {
            continue;
        }
        for copy in 0..copies {
            layout.push((f, copy, total));
            total += f.grade();
        }
    }
    if total == 0 {
        return Ok(FeynmanGraphon {
            graphon: StepGraphon::zero(),
            blocks: Vec::new(),
            coupling: coupling.clone(),
        });
    }
    let per_vertex = Q::new(1.into(), (total as i64).into());
    let mut values = vec![vec![Q::zero(); total]; total];
    let mut blocks = Vec::with_capacity(layout.len());
    for (f, copy, offset) in layout {
        let grade = f.grade();
        let edge_value = num::pow(coupling.clone(), grade).min(Q::one());
        let mut base = offset;
        for t in f.trees() {
            let (n, edges) = t.edges();
            for (a, b) in edges {
                values[base + a][base + b] = edge_value.clone();
                values[base + b][base + a] = edge_value.clone();
            }
            base += n;
        }
        blocks.push(FeynmanBlock {
            forest: f.clone(),
            copy,
            grade,
            vertices: grade,
            measure: &per_vertex * Q::from_integer((grade as i64).into()),
            edge_value,
        });
    }
    Ok(FeynmanGraphon {
        graphon: StepGraphon::equal_blocks(values)?,
        blocks,
        coupling: coupling.clone(),
    })
}

/// `d_□(W(Y_i), W(Y_{i+1}))` for `i = 1 … m−1`, where `Y_i = Σ_{n≤i} X_n`
/// and the coupling is the solution's.
pub fn convergence_trace(sol: &DseSolution, m: usize, mode: CutMode) -> Result<Vec<f64>> {
    sol.unweighted_partial_sum(m)?;
    let graphons = (1..=m)
        .map(|i| feynman_graphon(&sol.unweighted_partial_sum(i)?, sol.coupling()))
        .collect::<Result<Vec<_>>>()?;
    graphons
        .windows(2)
        .map(|w| Ok(cut_distance(&w[0].graphon, &w[1].graphon, mode)?.value))
        .collect()
}

/// `d_□(W(Y_m; λ g), W(Y_m; g))` for each rescaling factor `λ`.
pub fn rescaling_trace(sol: &DseSolution, m: usize, lambdas: &[Q], mode: CutMode) -> Result<Vec<f64>> {
    let y = sol.unweighted_partial_sum(m)?;
    let base = feynman_graphon(&y, sol.coupling())?;
    lambdas
        .iter()
        .map(|l| {
            let w = feynman_graphon(&y, &(l * sol.coupling()))?;
            Ok(cut_distance(&w.graphon, &base.graphon, mode)?.value)
        })
        .collect()
}
