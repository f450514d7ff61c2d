//! First Kirchhoff–Symanzik polynomial `Ψ(w) = Σ_T Π_{e∉T} w_e`, its
//! circuit-matrix determinant form, and spanning-tree counts.

use std::collections::{BTreeMap, VecDeque};

use num::{BigUint, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::multigraph::{Dsu, MultiGraph};
use super::poly::{Monomial, MultiPoly, Var};
use crate::error::{Error, Result};
use crate::linalg::determinant;
use crate::rational::{fmt_q, Q};

pub const SYMANZIK_EDGE_LIMIT: usize = 24;

fn guard(g: &MultiGraph) -> Result<()> {
    if g.edge_count() > SYMANZIK_EDGE_LIMIT {
        return Err(Error::TooLarge {
            what: "spanning-tree enumeration edges",
            size: g.edge_count(),
            limit: SYMANZIK_EDGE_LIMIT,
        });
    }
    Ok(())
}

/// Edge subsets forming a spanning forest (a spanning tree of every
/// component), as membership vectors.
fn spanning_forests(g: &MultiGraph) -> Vec<Vec<bool>> {
    let need = g.vertex_count() - g.component_count();
    let m = g.edge_count();
    let mut out = Vec::new();
    let mut chosen = vec![false; m];
    fn rec(
        g: &MultiGraph,
        e: usize,
        taken: usize,
        need: usize,
        chosen: &mut Vec<bool>,
        out: &mut Vec<Vec<bool>>,
    ) {
        if taken == need {
            out.push(chosen.clone());
            return;
        }
        if g.edge_count() - e < need - taken {
            return;
        }
        // include e when it closes no cycle with the chosen edges
        let mut d = Dsu::new(g.vertex_count());
        for (i, &(a, b)) in g.edges()[..e].iter().enumerate() {
            if chosen[i] {
                d.union(a, b);
            }
        }
        let (a, b) = g.edges()[e];
        if d.union(a, b) {
            chosen[e] = true;
            rec(g, e + 1, taken + 1, need, chosen, out);
            chosen[e] = false;
        }
        rec(g, e + 1, taken, need, chosen, out);
    }
    rec(g, 0, 0, need, &mut chosen, &mut out);
    out
}

/// `Ψ_G` by spanning-tree enumeration. A disconnected graph is treated
/// through its spanning forests, which is the product over components.
pub fn symanzik_psi(g: &MultiGraph) -> Result<MultiPoly> {
    guard(g)?;
    if !g.is_connected() {
        log::warn!("graph has {} components; Ψ is the product over them", g.component_count());
    }
    let mut psi = MultiPoly::zero();
    for forest in spanning_forests(g) {
        let mut mono = Monomial::new();
        for (e, inside) in forest.iter().enumerate() {
            if !inside {
                *mono.entry(Var::W(g.vars()[e])).or_insert(0) += 1;
            }
        }
        psi.add_term(mono, Q::one());
    }
    Ok(psi)
}

/// Which spanning forest defines the fundamental cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleBasis {
    /// Breadth-first forest scanning edges in index order.
    Forward,
    /// Breadth-first forest scanning edges in reverse index order, from the
    /// highest vertex of each component.
    Reverse,
}

/// Signed incidence `η[e][k]` of edge `e` in fundamental cycle `k`, with
/// every edge oriented from its first to its second endpoint.
pub fn fundamental_cycles(g: &MultiGraph, basis: CycleBasis) -> Vec<Vec<i8>> {
    let n = g.vertex_count();
    let m = g.edge_count();
    let mut order: Vec<usize> = (0..m).collect();
    let mut roots: Vec<usize> = (0..n).collect();
    if basis == CycleBasis::Reverse {
        order.reverse();
        roots.reverse();
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &e in &order {
        let (a, b) = g.edges()[e];
        adj[a].push(e);
        if a != b {
            adj[b].push(e);
        }
    }
    // parent edge of every vertex in the BFS forest
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut in_tree = vec![false; m];
    for &r in &roots {
        if depth[r] != usize::MAX {
            continue;
        }
        depth[r] = 0;
        let mut queue = VecDeque::from([r]);
        while let Some(v) = queue.pop_front() {
            for &e in &adj[v] {
                let (a, b) = g.edges()[e];
                let w = if a == v { b } else { a };
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent[w] = Some(e);
                    in_tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let other = |e: usize, v: usize| {
        let (a, b) = g.edges()[e];
        if a == v {
            b
        } else {
            a
        }
    };
    let mut cycles = Vec::new();
    for e in (0..m).filter(|&e| !in_tree[e]) {
        let mut eta = vec![0i8; m];
        eta[e] = 1;
        // walk from the head of e back to its tail through the tree:
        // tail → head along e, then head → … → tail along tree edges
        let (tail, head) = g.edges()[e];
        let (mut u, mut v) = (head, tail);
        let mut up_u = Vec::new();
        let mut up_v = Vec::new();
        while u != v {
            if depth[u] >= depth[v] {
                let pe = parent[u].expect("non-root");
                up_u.push((pe, u));
                u = other(pe, u);
            } else {
                let pe = parent[v].expect("non-root");
                up_v.push((pe, v));
                v = other(pe, v);
            }
        }
        // traversed away from `from` on the head side, towards it on the tail side
        for (pe, from) in up_u {
            eta[pe] = if g.edges()[pe].0 == from { 1 } else { -1 };
        }
        for (pe, to) in up_v {
            eta[pe] = if g.edges()[pe].1 == to { 1 } else { -1 };
        }
        cycles.push(eta);
    }
    (0..m).map(|e| cycles.iter().map(|c| c[e]).collect()).collect()
}

/// `det M(w)` with `M_{kr} = Σ_e w_e η_{ek} η_{er}`; `weights[e]` is the
/// value of edge `e`.
pub fn symanzik_det(g: &MultiGraph, weights: &[Q]) -> Result<Q> {
    symanzik_det_in_basis(g, weights, CycleBasis::Forward)
}

pub fn symanzik_det_in_basis(g: &MultiGraph, weights: &[Q], basis: CycleBasis) -> Result<Q> {
    if weights.len() != g.edge_count() {
        return Err(Error::Invalid(format!(
            "{} weights for {} edges",
            weights.len(),
            g.edge_count()
        )));
    }
    if !g.is_connected() {
        log::warn!("graph has {} components; using a spanning forest", g.component_count());
    }
    let eta = fundamental_cycles(g, basis);
    let l = g.loop_number();
    let mut mat = vec![vec![Q::zero(); l]; l];
    for (e, row) in eta.iter().enumerate() {
        for k in 0..l {
            if row[k] == 0 {
                continue;
            }
            for r in 0..l {
                if row[r] != 0 {
                    let sign = Q::from_integer(((row[k] * row[r]) as i64).into());
                    mat[k][r] += &weights[e] * sign;
                }
            }
        }
    }
    Ok(determinant(&mat))
}

/// Variable assignment `w_{vars[e]} = weights[e]`; edges sharing a
/// variable must share a value.
pub fn edge_assignment(g: &MultiGraph, weights: &[Q]) -> Result<BTreeMap<Var, Q>> {
    let mut out = BTreeMap::new();
    for (&v, w) in g.vars().iter().zip(weights) {
        if let Some(old) = out.insert(Var::W(v), w.clone()) {
            if &old != w {
                return Err(Error::Invalid(format!(
                    "variable w{v} assigned both {} and {}",
                    fmt_q(&old),
                    fmt_q(w)
                )));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Degenerate {
    Bridge,
    Loop,
}

/// `Ψ = w_e F + G` with `F = ∂Ψ/∂w_e` and `G = Ψ|_{w_e = 0}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeletionContraction {
    pub edge: usize,
    pub f: MultiPoly,
    pub gpart: MultiPoly,
    /// Set for bridges (`F = 0`) and loops (`G = 0`), where the minors
    /// `G∖e`, `G/e` do not give the parts.
    pub degenerate: Option<Degenerate>,
}

/// Splits `Ψ_G` along edge `e`. For an ordinary edge the parts are
/// computed from the minors (`F = Ψ_{G∖e}`, `G = Ψ_{G/e}`) and checked
/// against the derivative and the substitution; the identity
/// `Ψ = w_e F + G` is checked in every case.
pub fn psi_deletion_contraction(g: &MultiGraph, e: usize) -> Result<DeletionContraction> {
    if e >= g.edge_count() {
        return Err(Error::EdgeIndex { index: e, edges: g.edge_count() });
    }
    let var = Var::W(g.vars()[e]);
    if g.vars().iter().filter(|&&v| v == g.vars()[e]).count() > 1 {
        return Err(Error::Invalid(format!("variable {var} is shared by several edges")));
    }
    let psi = symanzik_psi(g)?;
    let derivative = psi.derivative(var);
    let at_zero = psi.substitute(var, &Q::zero());
    let degenerate = if g.is_loop(e) {
        Some(Degenerate::Loop)
    } else if g.is_bridge(e) {
        Some(Degenerate::Bridge)
    } else {
        None
    };
    let (f, gpart) = match degenerate {
        Some(_) => (derivative, at_zero),
        None => {
            let f = symanzik_psi(&g.delete_edge(e)?)?;
            let gpart = symanzik_psi(&g.contract_edge(e)?)?;
            if f != derivative || gpart != at_zero {
                return Err(Error::Inconsistent(format!(
                    "minors of edge {e} disagree with ∂Ψ/∂{var} and Ψ|{var}=0"
                )));
            }
            (f, gpart)
        }
    };
    if &(&MultiPoly::var(var) * &f) + &gpart != psi {
        return Err(Error::Inconsistent(format!("Ψ ≠ {var}·F + G for edge {e}")));
    }
    Ok(DeletionContraction { edge: e, f, gpart, degenerate })
}

/// Matrix-tree count: any cofactor of the Laplacian (loops ignored).
/// Disconnected graphs have no spanning tree.
pub fn spanning_tree_count(g: &MultiGraph) -> BigUint {
    let n = g.vertex_count();
    if !g.is_connected() {
        log::warn!("graph is disconnected; it has no spanning tree");
        return BigUint::zero();
    }
    if n <= 1 {
        return BigUint::one();
    }
    let mut lap = vec![vec![Q::zero(); n]; n];
    for &(a, b) in g.edges() {
        if a != b {
            lap[a][a] += Q::one();
            lap[b][b] += Q::one();
            lap[a][b] -= Q::one();
            lap[b][a] -= Q::one();
        }
    }
    let minor: Vec<Vec<Q>> = lap[1..].iter().map(|r| r[1..].to_vec()).collect();
    let det = determinant(&minor);
    debug_assert!(det.is_integer() && !det.is_negative());
    det.to_integer().to_biguint().expect("matrix-tree determinant is nonnegative")
}

/// Number of monomials of `Ψ` counted with multiplicity; equals the
/// spanning-tree count.
pub fn psi_term_count(psi: &MultiPoly) -> u64 {
    psi.terms()
        .map(|(_, c)| c.to_integer().to_u64().expect("Ψ has positive integer coefficients"))
        .sum()
}
