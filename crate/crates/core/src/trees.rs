//! Decorated non-planar rooted trees, forests and their formal rational
//! linear combinations.
//!
//! Trees are always stored in canonical form: children are kept sorted by
//! the total order on canonical trees, so structural equality coincides
//! with isomorphism of decorated rooted trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, serde_q, Q};

/// Label of a primitive cocycle.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Decoration(String);

impl Decoration {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::Invalid("empty decoration label".into()));
        }
        if label.chars().any(|c| matches!(c, '(' | ')' | ',') || c.is_whitespace()) {
            return Err(Error::Invalid(format!(
                "decoration {label:?} contains a reserved character"
            )));
        }
        Ok(Decoration(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Decoration {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Decoration::new(s)
    }
}

impl From<Decoration> for String {
    fn from(d: Decoration) -> String {
        d.0
    }
}

impl fmt::Display for Decoration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A decorated rooted tree in canonical form.
///
/// Field order matters: the derived `Ord` compares vertex count first, then
/// the root label, then the (sorted) child lists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootedTree {
    size: usize,
    root: Decoration,
    children: Vec<RootedTree>,
}

impl RootedTree {
    /// Builds a tree and canonicalizes the child multiset.
    pub fn new(root: Decoration, mut children: Vec<RootedTree>) -> Self {
        children.sort();
        let size = 1 + children.iter().map(|c| c.size).sum::<usize>();
        RootedTree {
            size,
            root,
            children,
        }
    }

    pub fn leaf(root: Decoration) -> Self {
        RootedTree::new(root, Vec::new())
    }

    /// Ladder (path rooted at one end) with `n >= 1` vertices.
    pub fn ladder(d: &Decoration, n: usize) -> Self {
        assert!(n >= 1, "ladder needs at least one vertex");
        let mut t = RootedTree::leaf(d.clone());
        for _ in 1..n {
            t = RootedTree::new(d.clone(), vec![t]);
        }
        t
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn edge_count(&self) -> usize {
        self.size - 1
    }

    pub fn root(&self) -> &Decoration {
        &self.root
    }

    pub fn children(&self) -> &[RootedTree] {
        &self.children
    }

    /// Re-sorts every child list. Trees built through [`RootedTree::new`]
    /// are already canonical, so this is the identity on them.
    pub fn canonicalize(&self) -> RootedTree {
        RootedTree::new(
            self.root.clone(),
            self.children.iter().map(RootedTree::canonicalize).collect(),
        )
    }

    /// Canonical encoding `label(child,child,...)`.
    pub fn encoding(&self) -> String {
        let mut out = String::new();
        self.write_encoding(&mut out);
        out
    }

    fn write_encoding(&self, out: &mut String) {
        out.push_str(self.root.as_str());
        if !self.children.is_empty() {
            out.push('(');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.write_encoding(out);
            }
            out.push(')');
        }
    }

    /// Parses the encoding produced by [`RootedTree::encoding`]; child order
    /// in the input is irrelevant.
    pub fn parse(s: &str) -> Result<RootedTree> {
        let bytes: Vec<char> = s.chars().collect();
        let mut pos = 0;
        let t = parse_tree(&bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(Error::Parse {
                pos,
                msg: "trailing input after tree".into(),
            });
        }
        Ok(t)
    }

    /// Undirected adjacency: vertex 0 is the root, vertices numbered in
    /// pre-order. Returns `(vertex_count, edges)`.
    pub fn edges(&self) -> (usize, Vec<(usize, usize)>) {
        fn walk(t: &RootedTree, next: &mut usize, edges: &mut Vec<(usize, usize)>) -> usize {
            let me = *next;
            *next += 1;
            for c in &t.children {
                let child = walk(c, next, edges);
                edges.push((me, child));
            }
            me
        }
        let mut next = 0;
        let mut edges = Vec::with_capacity(self.size - 1);
        walk(self, &mut next, &mut edges);
        (self.size, edges)
    }

    /// Product over vertices of the size of the subtree rooted there.
    pub fn tree_factorial(&self) -> num::BigUint {
        self.children
            .iter()
            .fold(num::BigUint::from(self.size), |acc, c| acc * c.tree_factorial())
    }

    /// Visits every vertex decoration in pre-order.
    pub fn decorations(&self) -> Vec<&Decoration> {
        let mut out = vec![&self.root];
        for c in &self.children {
            out.extend(c.decorations());
        }
        out
    }
}

fn parse_tree(s: &[char], pos: &mut usize) -> Result<RootedTree> {
    let start = *pos;
    while *pos < s.len() && !matches!(s[*pos], '(' | ')' | ',') && !s[*pos].is_whitespace() {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::Parse {
            pos: *pos,
            msg: "expected a decoration label".into(),
        });
    }
    let label: String = s[start..*pos].iter().collect();
    let root = Decoration::new(label)?;
    let mut children = Vec::new();
    if *pos < s.len() && s[*pos] == '(' {
        *pos += 1;
        loop {
            children.push(parse_tree(s, pos)?);
            match s.get(*pos) {
                Some(',') => *pos += 1,
                Some(')') => {
                    *pos += 1;
                    break;
                }
                _ => {
                    return Err(Error::Parse {
                        pos: *pos,
                        msg: "expected ',' or ')'".into(),
                    })
                }
            }
        }
    }
    Ok(RootedTree::new(root, children))
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    d: Decoration,
    #[serde(default)]
    c: Vec<TreeJson>,
}

impl From<&RootedTree> for TreeJson {
    fn from(t: &RootedTree) -> Self {
        TreeJson {
            d: t.root.clone(),
            c: t.children.iter().map(TreeJson::from).collect(),
        }
    }
}

impl From<TreeJson> for RootedTree {
    fn from(j: TreeJson) -> Self {
        RootedTree::new(j.d, j.c.into_iter().map(RootedTree::from).collect())
    }
}

impl Serialize for RootedTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RootedTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        TreeJson::deserialize(d).map(RootedTree::from)
    }
}

/// A multiset of rooted trees, i.e. a monomial of the polynomial algebra.
/// The empty forest is the unit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Forest {
    grade: usize,
    trees: Vec<RootedTree>,
}

impl Forest {
    pub fn empty() -> Self {
        Forest::default()
    }

    pub fn new(mut trees: Vec<RootedTree>) -> Self {
        trees.sort();
        let grade = trees.iter().map(RootedTree::size).sum();
        Forest { grade, trees }
    }

    pub fn single(t: RootedTree) -> Self {
        Forest::new(vec![t])
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn trees(&self) -> &[RootedTree] {
        &self.trees
    }

    pub fn into_trees(self) -> Vec<RootedTree> {
        self.trees
    }

    pub fn concat(&self, other: &Forest) -> Forest {
        let mut trees = Vec::with_capacity(self.trees.len() + other.trees.len());
        trees.extend_from_slice(&self.trees);
        trees.extend_from_slice(&other.trees);
        Forest::new(trees)
    }

    pub fn edge_count(&self) -> usize {
        self.trees.iter().map(RootedTree::edge_count).sum()
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trees.is_empty() {
            return f.write_str("1");
        }
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl Serialize for Forest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.trees.iter())
    }
}

impl<'de> Deserialize<'de> for Forest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<RootedTree>::deserialize(d).map(Forest::new)
    }
}

/// Formal rational linear combination of forests.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ForestSum {
    terms: BTreeMap<Forest, Q>,
}

impl ForestSum {
    pub fn zero() -> Self {
        ForestSum::default()
    }

    /// The unit element (empty forest with coefficient one).
    pub fn one() -> Self {
        ForestSum::from_forest(Forest::empty())
    }

    pub fn from_forest(f: Forest) -> Self {
        ForestSum::term(Q::one(), f)
    }

    pub fn from_tree(t: RootedTree) -> Self {
        ForestSum::from_forest(Forest::single(t))
    }

    pub fn term(c: Q, f: Forest) -> Self {
        let mut s = ForestSum::zero();
        s.add_term(f, c);
        s
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Forest, Q)>) -> Self {
        let mut s = ForestSum::zero();
        for (f, c) in terms {
            s.add_term(f, c);
        }
        s
    }

    pub fn add_term(&mut self, f: Forest, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(f) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Forest, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, f: &Forest) -> Q {
        self.terms.get(f).cloned().unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, c: &Q) -> ForestSum {
        if c.is_zero() {
            return ForestSum::zero();
        }
        ForestSum {
            terms: self.terms.iter().map(|(f, x)| (f.clone(), x * c)).collect(),
        }
    }

    /// Bilinear concatenation product.
    pub fn product(&self, other: &ForestSum) -> ForestSum {
        let mut out = ForestSum::zero();
        for (f, a) in &self.terms {
            for (g, b) in &other.terms {
                out.add_term(f.concat(g), a * b);
            }
        }
        out
    }

    pub fn pow(&self, n: usize) -> ForestSum {
        (0..n).fold(ForestSum::one(), |acc, _| acc.product(self))
    }

    /// Homogeneous components keyed by vertex count.
    pub fn grade_components(&self) -> BTreeMap<usize, ForestSum> {
        let mut out: BTreeMap<usize, ForestSum> = BTreeMap::new();
        for (f, c) in &self.terms {
            out.entry(f.grade()).or_default().add_term(f.clone(), c.clone());
        }
        out
    }

    pub fn component(&self, grade: usize) -> ForestSum {
        ForestSum {
            terms: self
                .terms
                .iter()
                .filter(|(f, _)| f.grade() == grade)
                .map(|(f, c)| (f.clone(), c.clone()))
                .collect(),
        }
    }

    /// `Some(n)` when every monomial has grade `n`; `None` for zero or mixed
    /// sums.
    pub fn homogeneous_grade(&self) -> Option<usize> {
        let grades: BTreeSet<usize> = self.terms.keys().map(Forest::grade).collect();
        if grades.len() == 1 {
            grades.into_iter().next()
        } else {
            None
        }
    }

    pub fn max_grade(&self) -> usize {
        self.terms.keys().map(Forest::grade).max().unwrap_or(0)
    }

    /// Sum of all coefficients.
    pub fn coefficient_sum(&self) -> Q {
        self.terms.values().fold(Q::zero(), |a, c| a + c)
    }

    /// Linear extension of a map on forests.
    pub fn map_linear(&self, mut f: impl FnMut(&Forest) -> ForestSum) -> ForestSum {
        let mut out = ForestSum::zero();
        for (forest, c) in &self.terms {
            for (g, d) in f(forest).terms {
                out.add_term(g, c * d);
            }
        }
        out
    }
}

impl fmt::Display for ForestSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (forest, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c.is_one() {
                write!(f, "[{forest}]")?;
            } else {
                write!(f, "{}*[{forest}]", fmt_q(c))?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    #[serde(with = "serde_q")]
    coef: Q,
    forest: Forest,
}

impl Serialize for ForestSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.terms.iter().map(|(f, c)| TermJson {
            coef: c.clone(),
            forest: f.clone(),
        }))
    }
}

impl<'de> Deserialize<'de> for ForestSum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<TermJson>::deserialize(d)?;
        Ok(ForestSum::from_terms(raw.into_iter().map(|t| (t.forest, t.coef))))
    }
}

impl Add for &ForestSum {
    type Output = ForestSum;
    fn add(self, rhs: &ForestSum) -> ForestSum {
        let mut out = self.clone();
        for (f, c) in &rhs.terms {
            out.add_term(f.clone(), c.clone());
        }
        out
    }
}

impl Add for ForestSum {
    type Output = ForestSum;
    fn add(mut self, rhs: ForestSum) -> ForestSum {
        for (f, c) in rhs.terms {
            self.add_term(f, c);
        }
        self
    }
}

impl Sub for &ForestSum {
    type Output = ForestSum;
    fn sub(self, rhs: &ForestSum) -> ForestSum {
        let mut out = self.clone();
        for (f, c) in &rhs.terms {
            out.add_term(f.clone(), -c);
        }
        out
    }
}

impl Sub for ForestSum {
    type Output = ForestSum;
    fn sub(self, rhs: ForestSum) -> ForestSum {
        &self - &rhs
    }
}

impl Neg for &ForestSum {
    type Output = ForestSum;
    fn neg(self) -> ForestSum {
        ForestSum {
            terms: self.terms.iter().map(|(f, c)| (f.clone(), -c)).collect(),
        }
    }
}

impl Neg for ForestSum {
    type Output = ForestSum;
    fn neg(self) -> ForestSum {
        -&self
    }
}

impl Mul for &ForestSum {
    type Output = ForestSum;
    fn mul(self, rhs: &ForestSum) -> ForestSum {
        self.product(rhs)
    }
}

impl Mul for ForestSum {
    type Output = ForestSum;
    fn mul(self, rhs: ForestSum) -> ForestSum {
        self.product(&rhs)
    }
}

/// All canonical trees with exactly `n` vertices whose decorations are
/// drawn from `labels`. Sorted by the canonical order.
pub fn trees_with_vertices(n: usize, labels: &[Decoration]) -> Vec<RootedTree> {
    trees_up_to(n, labels).pop().unwrap_or_default()
}

/// `out[k]` = all canonical trees with `k` vertices, for `k` in `0..=n`
/// (`out[0]` is empty).
pub fn trees_up_to(n: usize, labels: &[Decoration]) -> Vec<Vec<RootedTree>> {
    let mut by_size: Vec<Vec<RootedTree>> = vec![Vec::new(); n + 1];
    for k in 1..=n {
        // children of the root: multisets of smaller trees with total size k-1
        let pool: Vec<&RootedTree> = by_size[1..k].iter().flatten().collect();
        let mut child_sets = Vec::new();
        multisets(&pool, 0, k - 1, &mut Vec::new(), &mut child_sets);
        let mut out = Vec::new();
        for d in labels {
            for cs in &child_sets {
                out.push(RootedTree::new(d.clone(), cs.clone()));
            }
        }
        out.sort();
        out.dedup();
        by_size[k] = out;
    }
    by_size
}

fn multisets(
    pool: &[&RootedTree],
    from: usize,
    remaining: usize,
    current: &mut Vec<RootedTree>,
    out: &mut Vec<Vec<RootedTree>>,
) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for i in from..pool.len() {
        let t = pool[i];
        if t.size() <= remaining {
            current.push(t.clone());
            multisets(pool, i, remaining - t.size(), current, out);
            current.pop();
        }
    }
}

/// All forests (including the empty forest at grade 0) with total grade
/// exactly `n`.
pub fn forests_with_grade(n: usize, labels: &[Decoration]) -> Vec<Forest> {
    let by_size = trees_up_to(n, labels);
    let pool: Vec<&RootedTree> = by_size.iter().flatten().collect();
    let mut sets = Vec::new();
    multisets(&pool, 0, n, &mut Vec::new(), &mut sets);
    let mut out: Vec<Forest> = sets.into_iter().map(Forest::new).collect();
    out.sort();
    out.dedup();
    out
}

pub fn forests_up_to(n: usize, labels: &[Decoration]) -> Vec<Forest> {
    (0..=n).flat_map(|k| forests_with_grade(k, labels)).collect()
}
