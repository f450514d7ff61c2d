//! Simple undirected graphs, canonical forms and graph6 strings.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple graph on vertices `0..n`. Edges are stored as sorted `(i, j)`
/// pairs with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct SimpleGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphJson> for SimpleGraph {
    type Error = Error;
    fn try_from(g: GraphJson) -> Result<Self> {
        SimpleGraph::new(g.n, g.edges)
    }
}

impl From<SimpleGraph> for GraphJson {
    fn from(g: SimpleGraph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges.into_iter().collect(),
        }
    }
}

impl SimpleGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Invalid(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            if a == b {
                return Err(Error::Invalid(format!("self-loop at vertex {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::Invalid(format!("repeated edge ({a}, {b})")));
            }
        }
        Ok(SimpleGraph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        SimpleGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        SimpleGraph { n, edges }
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        SimpleGraph { n, edges }
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = SimpleGraph::path(n);
        if n >= 3 {
            g.edges.insert((0, n - 1));
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn disjoint_union(&self, other: &SimpleGraph) -> SimpleGraph {
        let shift = self.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(a, b)| (a + shift, b + shift)))
            .collect();
        SimpleGraph {
            n: self.n + other.n,
            edges,
        }
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> SimpleGraph {
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (perm[a], perm[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        SimpleGraph { n: self.n, edges }
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Upper-triangle bits in graph6 column order.
    fn bits(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for j in 1..self.n {
            for i in 0..j {
                bits.push(self.edges.contains(&(i, j)));
            }
        }
        bits
    }

    /// Canonical representative: the relabeling whose graph6 bit string is
    /// lexicographically largest. Brute force over all `n!` labelings with
    /// degree-sequence pruning, meant for the small pattern graphs used in
    /// fingerprints.
    pub fn canonical(&self) -> SimpleGraph {
        let adj = self.adjacency();
        // vertices sorted by degree, so only degree-respecting orders are tried
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(adj[v].len()));
        let degrees: Vec<usize> = order.iter().map(|&v| adj[v].len()).collect();
        let mut best: Option<(Vec<bool>, SimpleGraph)> = None;
        let mut slots: Vec<usize> = vec![usize::MAX; self.n];
        let mut used = vec![false; self.n];
        self.canon_search(0, &degrees, &adj, &mut slots, &mut used, &mut best);
        best.map(|(_, g)| g).unwrap_or_else(|| self.clone())
    }

    fn canon_search(
        &self,
        pos: usize,
        degrees: &[usize],
        adj: &[Vec<usize>],
        slots: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(Vec<bool>, SimpleGraph)>,
    ) {
        if pos == self.n {
            // slots[pos] = original vertex placed at new label pos
            let mut perm = vec![0; self.n];
            for (new, &old) in slots.iter().enumerate() {
                perm[old] = new;
            }
            let g = self.permuted(&perm);
            let bits = g.bits();
            if best.as_ref().is_none_or(|(b, _)| bits > *b) {
                *best = Some((bits, g));
            }
            return;
        }
        for v in 0..self.n {
            if !used[v] && adj[v].len() == degrees[pos] {
                used[v] = true;
                slots[pos] = v;
                self.canon_search(pos + 1, degrees, adj, slots, used, best);
                used[v] = false;
            }
        }
    }

    pub fn is_isomorphic(&self, other: &SimpleGraph) -> bool {
        self.n == other.n
            && self.edge_count() == other.edge_count()
            && self.canonical() == other.canonical()
    }

    /// graph6 encoding (for `n ≤ 62`; larger orders use the 4-byte header).
    pub fn graph6(&self) -> String {
        let mut out = Vec::new();
        if self.n <= 62 {
            out.push(self.n as u8 + 63);
        } else {
            out.push(126);
            for shift in [12, 6, 0] {
                out.push(((self.n >> shift) & 63) as u8 + 63);
            }
        }
        for chunk in self.bits().chunks(6) {
            let mut byte = 0u8;
            for (k, &b) in chunk.iter().enumerate() {
                if b {
                    byte |= 1 << (5 - k);
                }
            }
            out.push(byte + 63);
        }
        String::from_utf8(out).expect("graph6 is printable ASCII")
    }

    pub fn from_graph6(s: &str) -> Result<SimpleGraph> {
        let bytes = s.trim().as_bytes();
        let bad = || Error::Parse {
            pos: 0,
            msg: format!("invalid graph6 string {s:?}"),
        };
        let (&first, rest) = bytes.split_first().ok_or_else(bad)?;
        if !(63..=126).contains(&first) {
            return Err(bad());
        }
        let (n, body) = if first < 126 {
            ((first - 63) as usize, rest)
        } else {
            if rest.len() < 3 {
                return Err(bad());
            }
            let n = rest[..3]
                .iter()
                .fold(0usize, |acc, &b| (acc << 6) | (b.wrapping_sub(63) & 63) as usize);
            (n, &rest[3..])
        };
        let needed = n * n.saturating_sub(1) / 2;
        if body.len() != needed.div_ceil(6) {
            return Err(bad());
        }
        let mut bits = Vec::with_capacity(body.len() * 6);
        for &b in body {
            if !(63..=126).contains(&b) {
                return Err(bad());
            }
            let v = b - 63;
            bits.extend((0..6).map(|k| v & (1 << (5 - k)) != 0));
        }
        let mut edges = Vec::new();
        let mut idx = 0;
        for j in 1..n {
            for i in 0..j {
                if bits[idx] {
                    edges.push((i, j));
                }
                idx += 1;
            }
        }
        SimpleGraph::new(n, edges)
    }
}

impl fmt::Display for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}[", self.n)?;
        for (k, (a, b)) in self.edges.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}-{b}")?;
        }
        write!(f, "]")
    }
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// All simple graphs on exactly `n` vertices with at most `max_edges`
/// edges, up to isomorphism, in canonical form.
pub fn graphs_on(n: usize, max_edges: usize) -> Vec<SimpleGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut seen = BTreeSet::new();
    for k in 0..=max_edges.min(pairs.len()) {
        for_each_subset(pairs.len(), k, &mut |idx| {
            let g = SimpleGraph {
                n,
                edges: idx.iter().map(|&i| pairs[i]).collect(),
            };
            seen.insert(g.canonical());
        });
    }
    seen.into_iter().collect()
}

/// Connected simple graphs with at most `max_edges` edges up to
/// isomorphism, including `K1`.
pub fn connected_graphs_up_to(max_edges: usize) -> Vec<SimpleGraph> {
    let mut out = Vec::new();
    for n in 1..=max_edges + 1 {
        // a connected graph on n vertices needs n - 1 edges
        let mut found: BTreeSet<SimpleGraph> = BTreeSet::new();
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        for k in n - 1..=max_edges.min(pairs.len()) {
            for_each_subset(pairs.len(), k, &mut |idx| {
                let g = SimpleGraph {
                    n,
                    edges: idx.iter().map(|&i| pairs[i]).collect(),
                };
                if g.is_connected() {
                    found.insert(g.canonical());
                }
            });
        }
        out.extend(found);
    }
    out
}
