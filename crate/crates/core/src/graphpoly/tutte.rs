//! Tutte polynomials: deletion/contraction with a certificate-keyed memo,
//! the rank–nullity expansion, and products over DSE partial sums.

use std::collections::HashMap;
use std::sync::Mutex;

use num::{One, ToPrimitive};
use serde::Serialize;

use super::multigraph::{Certificate, Dsu, MultiGraph};
use super::poly::{MultiPoly, Var};
use crate::dse::DseSolution;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, is_nonneg_integer, Q};
use crate::trees::{Forest, RootedTree};

pub const TUTTE_EDGE_LIMIT: usize = 24;
pub const RANK_NULLITY_EDGE_LIMIT: usize = 20;
/// Below this many edges the two recursive branches run sequentially.
const FORK_EDGES: usize = 10;

type Memo = Mutex<HashMap<Certificate, MultiPoly>>;

pub fn tutte(g: &MultiGraph) -> Result<MultiPoly> {
    tutte_with_limit(g, TUTTE_EDGE_LIMIT)
}

/// Deletion/contraction on the highest-index edge: `x·T(G/e)` for a bridge,
/// `y·T(G∖e)` for a loop, `T(G∖e) + T(G/e)` otherwise.
pub fn tutte_with_limit(g: &MultiGraph, limit: usize) -> Result<MultiPoly> {
    if g.edge_count() > limit {
        return Err(Error::TooLarge {
            what: "Tutte deletion/contraction edges (estimate by sampling rank–nullity terms instead)",
            size: g.edge_count(),
            limit,
        });
    }
    let memo = Memo::default();
    Ok(recurse(g.clone(), &memo))
}

fn recurse(g: MultiGraph, memo: &Memo) -> MultiPoly {
    let m = g.edge_count();
    if m == 0 {
        return MultiPoly::one();
    }
    let key = g.without_isolated_vertices().certificate();
    if let Some(p) = memo.lock().expect("memo lock").get(&key) {
        return p.clone();
    }
    let e = m - 1;
    let result = if g.is_loop(e) {
        &MultiPoly::var(Var::Y) * &recurse(g.delete_edge(e).expect("edge"), memo)
    } else if g.is_bridge(e) {
        &MultiPoly::var(Var::X) * &recurse(g.contract_edge(e).expect("edge"), memo)
    } else {
        let (del, con) = (g.delete_edge(e).expect("edge"), g.contract_edge(e).expect("edge"));
        let (a, b) = if m >= FORK_EDGES {
            rayon::join(|| recurse(del, memo), || recurse(con, memo))
        } else {
            (recurse(del, memo), recurse(con, memo))
        };
        &a + &b
    };
    memo.lock().expect("memo lock").insert(key, result.clone());
    result
}

/// `Σ_{A⊆E} (x−1)^{r(E)−r(A)} (y−1)^{n(A)}` by enumerating all subsets.
pub fn tutte_rank_nullity(g: &MultiGraph) -> Result<MultiPoly> {
    let m = g.edge_count();
    if m > RANK_NULLITY_EDGE_LIMIT {
        return Err(Error::TooLarge {
            what: "rank–nullity subset enumeration edges",
            size: m,
            limit: RANK_NULLITY_EDGE_LIMIT,
        });
    }
    let full_rank = g.rank_of(|_| true);
    // counts[(r(E) − r(A), n(A))]
    let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
    for mask in 0u32..(1 << m) {
        let mut d = Dsu::new(g.vertex_count());
        let mut rank = 0;
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            if mask >> e & 1 == 1 && d.union(a, b) {
                rank += 1;
            }
        }
        let size = mask.count_ones() as usize;
        *counts.entry((full_rank - rank, size - rank)).or_insert(0) += 1;
    }
    let xm1 = &MultiPoly::var(Var::X) - &MultiPoly::one();
    let ym1 = &MultiPoly::var(Var::Y) - &MultiPoly::one();
    let mut total = MultiPoly::zero();
    let mut keys: Vec<_> = counts.into_iter().collect();
    keys.sort_unstable();
    for ((i, j), c) in keys {
        let term = &xm1.pow(i) * &ym1.pow(j);
        total = &total + &term.scale(&Q::from_integer(c.into()));
    }
    Ok(total)
}

/// `T(G; a, b)` at rational points.
pub fn evaluate_xy(p: &MultiPoly, x: &Q, y: &Q) -> Q {
    let vals = [(Var::X, x.clone()), (Var::Y, y.clone())].into_iter().collect();
    p.eval(&vals).expect("Tutte polynomials only use x and y")
}

/// `Π T(f)^{c_f}` over the monomials of `Y_m = 𝕀 + X_1 + … + X_m` with
/// unit coupling. For forests every edge is a bridge, so the product is
/// `x^{total edges}`.
pub fn tutte_of_partial_sum(sol: &DseSolution, m: usize) -> Result<MultiPoly> {
    let y = sol.unweighted_partial_sum(m)?;
    let mut total = MultiPoly::one();
    for (f, c) in y.iter() {
        if !is_nonneg_integer(c) {
            return Err(Error::UnsupportedCoefficient(format!(
                "coefficient {} of {f} is not a nonnegative integer",
                fmt_q(c)
            )));
        }
        let copies = c
            .to_integer()
            .to_usize()
            .ok_or_else(|| Error::UnsupportedCoefficient(format!("coefficient {} too large", fmt_q(c))))?;
        total = &total * &tutte(&MultiGraph::from_forest(f))?.pow(copies);
    }
    Ok(total)
}

/// Subtrees containing the root, with their edge and leaf counts. A leaf
/// is a non-root vertex without children in the subtree.
fn rooted_subtrees(t: &RootedTree) -> Vec<(usize, usize)> {
    // (edges, leaves) for subtrees of `t` that contain its root
    let mut acc = vec![(0usize, 0usize)];
    for c in t.children() {
        let below: Vec<(usize, usize)> = rooted_subtrees(c)
            .into_iter()
            .map(|(e, l)| (e + 1, if e == 0 { 1 } else { l }))
            .collect();
        let mut next = Vec::with_capacity(acc.len() * (below.len() + 1));
        for &(e, l) in &acc {
            next.push((e, l));
            for &(be, bl) in &below {
                next.push((e + be, l + bl));
            }
        }
        acc = next;
    }
    acc
}

/// `Σ_{s} x^{|E(s)|} (y+1)^{|E(s)|−|L(s)|}` over subtrees `s` containing the
/// root. Kept as a diagnostic only: it disagrees with the recursion, which
/// gives `x^{|E|}` for every tree.
pub fn subtree_formula(t: &RootedTree) -> MultiPoly {
    let y1 = &MultiPoly::var(Var::Y) + &MultiPoly::one();
    let mut total = MultiPoly::zero();
    for (e, l) in rooted_subtrees(t) {
        total = &total + &(&MultiPoly::xy(e as u32, 0) * &y1.pow(e - l));
    }
    total
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubtreeFormulaCheck {
    pub tree: String,
    pub subtree_formula: MultiPoly,
    pub recursion: MultiPoly,
    pub agrees: bool,
}

pub fn check_subtree_formula(t: &RootedTree) -> SubtreeFormulaCheck {
    let formula = subtree_formula(t);
    let recursion = tutte(&MultiGraph::from_tree(t)).expect("trees are small");
    SubtreeFormulaCheck {
        tree: t.to_string(),
        agrees: formula == recursion,
        subtree_formula: formula,
        recursion,
    }
}

/// Subtree-formula diagnostics for every tree of a partial sum.
pub fn subtree_formula_report(sol: &DseSolution, m: usize) -> Result<Vec<SubtreeFormulaCheck>> {
    let y = sol.unweighted_partial_sum(m)?;
    let mut trees: Vec<&RootedTree> = y.iter().flat_map(|(f, _): (&Forest, _)| f.trees()).collect();
    trees.sort();
    trees.dedup();
    Ok(trees.into_iter().map(check_subtree_formula).collect())
}

/// `T(G; 1, 1)` as an integer.
pub fn tutte_at_one(p: &MultiPoly) -> Q {
    evaluate_xy(p, &Q::one(), &Q::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dse::{solve_with_coupling, DseSpec};
    use crate::rational::qi;
    use crate::trees::Decoration;

    fn x() -> MultiPoly {
        MultiPoly::var(Var::X)
    }

    fn y() -> MultiPoly {
        MultiPoly::var(Var::Y)
    }

    #[test]
    fn small_examples() {
        assert_eq!(tutte(&MultiGraph::path(2)).unwrap(), x());
        let looped = MultiGraph::new(1, vec![(0, 0)]).unwrap();
        assert_eq!(tutte(&looped).unwrap(), y());
        let c3 = &(&MultiPoly::xy(2, 0) + &x()) + &y();
        assert_eq!(tutte(&MultiGraph::cycle(3)).unwrap(), c3);
        assert_eq!(tutte(&MultiGraph::banana(2)).unwrap(), &x() + &y());
        assert_eq!(tutte(&MultiGraph::empty(3)).unwrap(), MultiPoly::one());
        // two bridges and three loops
        let g = MultiGraph::new(3, vec![(0, 1), (1, 2), (0, 0), (2, 2), (2, 2)]).unwrap();
        assert_eq!(tutte(&g).unwrap(), MultiPoly::xy(2, 3));
    }

    #[test]
    fn rank_nullity_examples() {
        assert_eq!(tutte_rank_nullity(&MultiGraph::empty(2)).unwrap(), MultiPoly::one());
        assert_eq!(tutte_rank_nullity(&MultiGraph::path(2)).unwrap(), x());
        assert_eq!(
            tutte_rank_nullity(&MultiGraph::cycle(3)).unwrap(),
            tutte(&MultiGraph::cycle(3)).unwrap()
        );
    }

    #[test]
    fn k4_known_polynomial() {
        // x³ + 3x² + 2x + 4xy + 2y + 3y² + y³
        let k4 = tutte(&MultiGraph::complete(4)).unwrap();
        let mut want = MultiPoly::zero();
        for (c, a, b) in [(1, 3, 0), (3, 2, 0), (2, 1, 0), (4, 1, 1), (2, 0, 1), (3, 0, 2), (1, 0, 3)] {
            want = &want + &MultiPoly::xy(a, b).scale(&qi(c));
        }
        assert_eq!(k4, want);
        assert_eq!(tutte_at_one(&k4), qi(16));
    }

    #[test]
    fn size_guards() {
        let big = MultiGraph::banana(25);
        assert!(matches!(tutte(&big), Err(Error::TooLarge { .. })));
        assert!(tutte_with_limit(&big, 30).is_ok());
        assert!(tutte_rank_nullity(&MultiGraph::banana(21)).is_err());
    }

    #[test]
    fn partial_sum_products() {
        let g = Decoration::new("g").unwrap();
        let sol = solve_with_coupling(&DseSpec::single(g, 4), qi(1)).unwrap();
        assert_eq!(tutte_of_partial_sum(&sol, 1).unwrap(), MultiPoly::one());
        assert_eq!(tutte_of_partial_sum(&sol, 2).unwrap(), MultiPoly::xy(2, 0));
        assert_eq!(tutte_of_partial_sum(&sol, 3).unwrap(), MultiPoly::xy(12, 0));
    }

    #[test]
    fn subtree_formula_disagrees_beyond_a_point() {
        let g = Decoration::new("g").unwrap();
        let dot = check_subtree_formula(&RootedTree::leaf(g.clone()));
        assert!(dot.agrees);
        let l2 = check_subtree_formula(&RootedTree::ladder(&g, 2));
        assert_eq!(l2.subtree_formula, &MultiPoly::one() + &x());
        assert_eq!(l2.recursion, x());
        assert!(!l2.agrees);
        // cherry: {root}, two single edges, both edges
        let cherry = RootedTree::parse("g(g,g)").unwrap();
        let want = &(&MultiPoly::one() + &x().scale(&qi(2))) + &MultiPoly::xy(2, 0);
        assert_eq!(subtree_formula(&cherry), want);
    }
}
