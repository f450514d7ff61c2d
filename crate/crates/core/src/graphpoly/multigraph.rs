//! Finite multigraphs with loops, edge variables and canonical certificates.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trees::{Forest, RootedTree};

/// Vertex relabelings tried when computing a certificate; above this the
/// labeled edge list is used instead.
pub const CERTIFICATE_PERMUTATION_LIMIT: usize = 5040;

/// A multigraph on vertices `0..n`. Edge `e` carries the weight variable
/// `w_{vars[e]}`; by default `vars[e] = e + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MultiGraphJson", into = "MultiGraphJson")]
pub struct MultiGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    vars: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MultiGraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vars: Option<Vec<usize>>,
}

impl TryFrom<MultiGraphJson> for MultiGraph {
    type Error = Error;
    fn try_from(j: MultiGraphJson) -> Result<Self> {
        match j.vars {
            Some(vars) => MultiGraph::with_vars(j.n, j.edges, vars),
            None => MultiGraph::new(j.n, j.edges),
        }
    }
}

impl From<MultiGraph> for MultiGraphJson {
    fn from(g: MultiGraph) -> Self {
        let default = g.has_default_vars();
        MultiGraphJson {
            n: g.n,
            edges: g.edges,
            vars: (!default).then_some(g.vars),
        }
    }
}

/// Union-find over `0..n` with path halving.
pub(crate) struct Dsu(Vec<usize>);

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    pub(crate) fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl MultiGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let vars = (1..=edges.len()).collect();
        Self::with_vars(n, edges, vars)
    }

    pub fn with_vars(n: usize, edges: Vec<(usize, usize)>, vars: Vec<usize>) -> Result<Self> {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n) {
            return Err(Error::Invalid(format!("edge ({u}, {v}) outside {n} vertices")));
        }
        if vars.len() != edges.len() {
            return Err(Error::Invalid(format!(
                "{} edge variables for {} edges",
                vars.len(),
                edges.len()
            )));
        }
        if vars.contains(&0) {
            return Err(Error::Invalid("edge variables are numbered from 1".into()));
        }
        Ok(MultiGraph { n, edges, vars })
    }

    pub fn empty(n: usize) -> Self {
        MultiGraph { n, edges: Vec::new(), vars: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::new(n, edges).expect("valid")
    }

    pub fn cycle(n: usize) -> Self {
        let edges = match n {
            0 => Vec::new(),
            1 => vec![(0, 0)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        Self::new(n, edges).expect("valid")
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("valid")
    }

    /// `k` parallel edges between two vertices.
    pub fn banana(k: usize) -> Self {
        Self::new(2, vec![(0, 1); k]).expect("valid")
    }

    pub fn from_tree(t: &RootedTree) -> Self {
        let (n, edges) = t.edges();
        Self::new(n, edges).expect("tree edges are valid")
    }

    /// Disjoint union of the forest's trees.
    pub fn from_forest(f: &Forest) -> Self {
        f.trees()
            .iter()
            .fold(Self::empty(0), |acc, t| acc.disjoint_union(&Self::from_tree(t)))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    fn has_default_vars(&self) -> bool {
        self.vars.iter().enumerate().all(|(e, &v)| v == e + 1)
    }

    fn check_edge(&self, e: usize) -> Result<()> {
        if e >= self.edges.len() {
            return Err(Error::EdgeIndex { index: e, edges: self.edges.len() });
        }
        Ok(())
    }

    pub fn is_loop(&self, e: usize) -> bool {
        let (u, v) = self.edges[e];
        u == v
    }

    /// An edge whose removal increases the number of components.
    pub fn is_bridge(&self, e: usize) -> bool {
        let (u, v) = self.edges[e];
        if u == v {
            return false;
        }
        let mut d = Dsu::new(self.n);
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if i != e {
                d.union(a, b);
            }
        }
        d.find(u) != d.find(v)
    }

    /// κ(A) for the spanning subgraph with edge set `subset` (bit `e` set
    /// means edge `e` is present).
    pub fn components_of(&self, subset: impl Fn(usize) -> bool) -> usize {
        let mut d = Dsu::new(self.n);
        let mut k = self.n;
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if subset(e) && d.union(a, b) {
                k -= 1;
            }
        }
        k
    }

    pub fn component_count(&self) -> usize {
        self.components_of(|_| true)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// r(A) = |V| − κ(A).
    pub fn rank_of(&self, subset: impl Fn(usize) -> bool) -> usize {
        self.n - self.components_of(subset)
    }

    /// Loop number |E| − |V| + κ.
    pub fn loop_number(&self) -> usize {
        self.edges.len() + self.component_count() - self.n
    }

    /// Vertex sets of the components, each sorted, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut d = Dsu::new(self.n);
        for &(a, b) in &self.edges {
            d.union(a, b);
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = d.find(v);
            if index[r] == usize::MAX {
                index[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[index[r]].push(v);
        }
        groups
    }

    /// The subgraph induced on `vertices`, relabeled in the given order.
    pub fn induced(&self, vertices: &[usize]) -> MultiGraph {
        let mut map = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            map[v] = i;
        }
        let (mut edges, mut vars) = (Vec::new(), Vec::new());
        for (&(a, b), &w) in self.edges.iter().zip(&self.vars) {
            if map[a] != usize::MAX && map[b] != usize::MAX {
                edges.push((map[a], map[b]));
                vars.push(w);
            }
        }
        MultiGraph { n: vertices.len(), edges, vars }
    }

    pub fn delete_edge(&self, e: usize) -> Result<MultiGraph> {
        self.check_edge(e)?;
        let mut g = self.clone();
        g.edges.remove(e);
        g.vars.remove(e);
        Ok(g)
    }

    /// Identifies the endpoints of `e` and removes it; other edges between
    /// them become loops. Contracting a loop deletes it.
    pub fn contract_edge(&self, e: usize) -> Result<MultiGraph> {
        self.check_edge(e)?;
        let (u, v) = self.edges[e];
        let mut g = self.delete_edge(e)?;
        if u == v {
            return Ok(g);
        }
        let (keep, gone) = (u.min(v), u.max(v));
        let relabel = |x: usize| match x.cmp(&gone) {
            std::cmp::Ordering::Less => x,
            std::cmp::Ordering::Equal => keep,
            std::cmp::Ordering::Greater => x - 1,
        };
        for edge in &mut g.edges {
            *edge = (relabel(edge.0), relabel(edge.1));
        }
        g.n -= 1;
        Ok(g)
    }

    /// Vertices of `other` follow those of `self`; edge variables of
    /// `other` are shifted past those of `self`.
    pub fn disjoint_union(&self, other: &MultiGraph) -> MultiGraph {
        let shift = self.vars.iter().copied().max().unwrap_or(0);
        let mut g = self.clone();
        g.edges
            .extend(other.edges.iter().map(|&(a, b)| (a + self.n, b + self.n)));
        g.vars.extend(other.vars.iter().map(|v| v + shift));
        g.n += other.n;
        g
    }

    pub fn without_isolated_vertices(&self) -> MultiGraph {
        let mut used = vec![false; self.n];
        for &(a, b) in &self.edges {
            used[a] = true;
            used[b] = true;
        }
        let keep: Vec<usize> = (0..self.n).filter(|&v| used[v]).collect();
        self.induced(&keep)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| usize::from(a == v) + usize::from(b == v))
            .sum()
    }

    /// Isomorphism certificate ignoring edge variables: the least sorted
    /// edge list over relabelings that respect the (degree, loops) vertex
    /// classes. Falls back to the labeled edge list (tagged `false`) when
    /// more than [`CERTIFICATE_PERMUTATION_LIMIT`] relabelings would be
    /// needed; such keys are sound but not canonical.
    pub fn certificate(&self) -> Certificate {
        let mut class: Vec<(usize, usize, usize)> = (0..self.n)
            .map(|v| {
                let loops = self.edges.iter().filter(|&&(a, b)| a == v && b == v).count();
                (self.degree(v), loops, v)
            })
            .collect();
        class.sort_unstable();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for w in 0..class.len() {
            if w == 0 || class[w].0 != class[w - 1].0 || class[w].1 != class[w - 1].1 {
                groups.push(Vec::new());
            }
            groups.last_mut().expect("pushed").push(class[w].2);
        }
        let mut count: usize = 1;
        for g in &groups {
            for i in 2..=g.len() {
                count = count.saturating_mul(i);
            }
        }
        if count > CERTIFICATE_PERMUTATION_LIMIT {
            let mut edges: Vec<(usize, usize)> =
                self.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            edges.sort_unstable();
            return Certificate { n: self.n, edges, canonical: false };
        }
        let mut best: Option<Vec<(usize, usize)>> = None;
        let mut label = vec![0; self.n];
        let mut order: Vec<usize> = groups.iter().flatten().copied().collect();
        let mut offsets = Vec::with_capacity(groups.len());
        let mut start = 0;
        for g in &groups {
            offsets.push((start, g.len()));
            start += g.len();
        }
        permute_groups(&mut order, &offsets, 0, &mut |order| {
            for (i, &v) in order.iter().enumerate() {
                label[v] = i;
            }
            let mut edges: Vec<(usize, usize)> = self
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (label[a], label[b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            edges.sort_unstable();
            if best.as_ref().is_none_or(|b| edges < *b) {
                best = Some(edges);
            }
        });
        Certificate { n: self.n, edges: best.unwrap_or_default(), canonical: true }
    }

    pub fn is_isomorphic(&self, other: &MultiGraph) -> bool {
        let (a, b) = (self.certificate(), other.certificate());
        a.canonical && b.canonical && a == b
    }
}

/// Every arrangement of `order` that permutes only within each group.
fn permute_groups(
    order: &mut [usize],
    groups: &[(usize, usize)],
    g: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    if g == groups.len() {
        visit(order);
        return;
    }
    let (start, len) = groups[g];
    heap_permutations(order, start, len, &mut |o| permute_groups(o, groups, g + 1, visit));
}

/// Heap's algorithm on `order[start..start + len]`.
fn heap_permutations(
    order: &mut [usize],
    start: usize,
    len: usize,
    visit: &mut dyn FnMut(&mut [usize]),
) {
    fn rec(order: &mut [usize], start: usize, k: usize, visit: &mut dyn FnMut(&mut [usize])) {
        if k <= 1 {
            visit(order);
            return;
        }
        for i in 0..k - 1 {
            rec(order, start, k - 1, visit);
            let j = if k % 2 == 0 { i } else { 0 };
            order.swap(start + j, start + k - 1);
        }
        rec(order, start, k - 1, visit);
    }
    rec(order, start, len, visit);
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Certificate {
    n: usize,
    edges: Vec<(usize, usize)>,
    canonical: bool,
}

impl fmt::Display for MultiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} [", self.n)?;
        for (i, (a, b)) in self.edges.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}-{b}")?;
        }
        f.write_str("]")
    }
}

/// Connected multigraphs (loops and multi-edges allowed) with at most
/// `max_edges` edges, one per isomorphism class, including the single
/// vertex. Grown edge by edge: every connected multigraph has an edge
/// whose removal (with a leaf, for a pendant edge) keeps it connected.
pub fn connected_multigraphs_up_to(max_edges: usize) -> Vec<MultiGraph> {
    let mut level = vec![MultiGraph::empty(1)];
    let mut all = level.clone();
    for _ in 0..max_edges {
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for g in &level {
            let n = g.vertex_count();
            let mut grown = Vec::new();
            for a in 0..n {
                for b in a..n {
                    let mut edges = g.edges.clone();
                    edges.push((a, b));
                    grown.push(MultiGraph::new(n, edges).expect("valid"));
                }
                let mut edges = g.edges.clone();
                edges.push((a, n));
                grown.push(MultiGraph::new(n + 1, edges).expect("valid"));
            }
            for h in grown {
                if seen.insert(h.certificate()) {
                    next.push(h);
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_nullity_basics() {
        let c3 = MultiGraph::cycle(3);
        assert_eq!(c3.loop_number(), 1);
        assert_eq!(c3.rank_of(|_| true), 2);
        assert_eq!(c3.rank_of(|e| e == 0), 1);
        assert!(!c3.is_bridge(0));
        let p = MultiGraph::path(3);
        assert!(p.is_bridge(1));
        let looped = MultiGraph::new(1, vec![(0, 0)]).unwrap();
        assert!(looped.is_loop(0) && !looped.is_bridge(0));
        assert_eq!(looped.loop_number(), 1);
    }

    #[test]
    fn deletion_and_contraction() {
        let c3 = MultiGraph::cycle(3);
        let d = c3.contract_edge(0).unwrap();
        assert_eq!(d.vertex_count(), 2);
        assert_eq!(d.vars(), &[2, 3]);
        assert!(d.is_isomorphic(&MultiGraph::banana(2)));
        let twice = d.contract_edge(0).unwrap();
        assert_eq!(twice.edges(), &[(0, 0)]);
        assert!(c3.delete_edge(3).is_err());
    }

    #[test]
    fn certificates_ignore_labels() {
        let a = MultiGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 3)]).unwrap();
        let b = MultiGraph::new(4, vec![(3, 2), (2, 1), (1, 0), (0, 0)]).unwrap();
        assert!(a.is_isomorphic(&b));
        let c = MultiGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (1, 1)]).unwrap();
        assert!(!a.is_isomorphic(&c));
    }

    /// Least edge list over all `n!` relabelings.
    fn brute_form(g: &MultiGraph) -> (usize, Vec<(usize, usize)>) {
        let n = g.vertex_count();
        let mut order: Vec<usize> = (0..n).collect();
        let mut best = None;
        heap_permutations(&mut order, 0, n, &mut |p| {
            let mut e: Vec<(usize, usize)> =
                g.edges().iter().map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b]))).collect();
            e.sort_unstable();
            if best.as_ref().is_none_or(|b| e < *b) {
                best = Some(e);
            }
        });
        (n, best.unwrap_or_default())
    }

    #[test]
    fn corpus_matches_brute_force() {
        let corpus = connected_multigraphs_up_to(4);
        let forms: BTreeSet<_> = corpus.iter().map(brute_form).collect();
        assert_eq!(forms.len(), corpus.len(), "duplicate isomorphism classes");
        for m in 0..=4usize {
            // every multiset of m edges on up to m + 1 vertices
            let mut brute = BTreeSet::new();
            for n in 1..=m + 1 {
                let pairs: Vec<(usize, usize)> =
                    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
                let mut pick = vec![0; m];
                loop {
                    let edges: Vec<_> = pick.iter().map(|&i| pairs[i]).collect();
                    let g = MultiGraph::new(n, edges).unwrap();
                    if g.is_connected() {
                        brute.insert(brute_form(&g));
                    }
                    // next nondecreasing index tuple
                    let Some(i) = (0..m).rev().find(|&i| pick[i] + 1 < pairs.len()) else { break };
                    let v = pick[i] + 1;
                    pick[i..].iter_mut().for_each(|p| *p = v);
                }
            }
            let ours: BTreeSet<_> =
                corpus.iter().filter(|g| g.edge_count() == m).map(brute_form).collect();
            assert_eq!(ours, brute, "{m} edges");
        }
    }

    #[test]
    fn json_shape() {
        let g = MultiGraph::cycle(3);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":3,"edges":[[0,1],[1,2],[2,0]]}"#);
        assert_eq!(serde_json::from_str::<MultiGraph>(&s).unwrap(), g);
        assert!(serde_json::from_str::<MultiGraph>(r#"{"n":2,"edges":[[0,2]]}"#).is_err());
    }
}
