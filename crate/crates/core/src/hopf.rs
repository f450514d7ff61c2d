//! Connes–Kreimer Hopf algebra structure on [`ForestSum`].
//!
//! Tensor factors are ordered root part first: for an admissible cut `c`
//! of a tree `t`, the term is `R_c(t) ⊗ P_c(t)` where `R_c` keeps the
//! original root and `P_c` is the forest of pruned branches. In this order
//! the grafting operator satisfies
//!
//! ```text
//! Δ ∘ B⁺ = (B⁺ ⊗ id) ∘ Δ + 𝕀 ⊗ B⁺
//! ```
//!
//! which is the mirror image of the usual pruned-part-first statement.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Sub};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rational::{fmt_q, serde_q, Q};
use crate::trees::{Decoration, Forest, ForestSum, RootedTree};

/// Element of `H ⊗ H`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TensorSum {
    terms: BTreeMap<(Forest, Forest), Q>,
}

impl TensorSum {
    pub fn zero() -> Self {
        TensorSum::default()
    }

    pub fn one() -> Self {
        TensorSum::pure(Forest::empty(), Forest::empty())
    }

    pub fn pure(left: Forest, right: Forest) -> Self {
        let mut t = TensorSum::zero();
        t.add_term(left, right, Q::one());
        t
    }

    pub fn add_term(&mut self, left: Forest, right: Forest, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((left, right)) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// `x ⊗ y` for forest sums.
    pub fn tensor(x: &ForestSum, y: &ForestSum) -> Self {
        let mut t = TensorSum::zero();
        for (f, a) in x.iter() {
            for (g, b) in y.iter() {
                t.add_term(f.clone(), g.clone(), a * b);
            }
        }
        t
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Forest, &Forest, &Q)> {
        self.terms.iter().map(|((l, r), c)| (l, r, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, left: &Forest, right: &Forest) -> Q {
        self.terms
            .get(&(left.clone(), right.clone()))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, c: &Q) -> TensorSum {
        let mut out = TensorSum::zero();
        for ((l, r), x) in &self.terms {
            out.add_term(l.clone(), r.clone(), x * c);
        }
        out
    }

    /// Componentwise product in `H ⊗ H`.
    pub fn product(&self, other: &TensorSum) -> TensorSum {
        let mut out = TensorSum::zero();
        for ((l1, r1), a) in &self.terms {
            for ((l2, r2), b) in &other.terms {
                out.add_term(l1.concat(l2), r1.concat(r2), a * b);
            }
        }
        out
    }

    /// `(f ⊗ g)` applied termwise, with `f`, `g` linear maps given on forests.
    pub fn map(
        &self,
        mut f: impl FnMut(&Forest) -> ForestSum,
        mut g: impl FnMut(&Forest) -> ForestSum,
    ) -> TensorSum {
        let mut out = TensorSum::zero();
        for ((l, r), c) in &self.terms {
            let fl = f(l);
            let gr = g(r);
            for (a, x) in fl.iter() {
                for (b, y) in gr.iter() {
                    out.add_term(a.clone(), b.clone(), c * x * y);
                }
            }
        }
        out
    }

    /// Multiplication `m : H ⊗ H → H`.
    pub fn multiply_out(&self) -> ForestSum {
        ForestSum::from_terms(self.terms.iter().map(|((l, r), c)| (l.concat(r), c.clone())))
    }

    /// The flip `a ⊗ b ↦ b ⊗ a`.
    pub fn swap(&self) -> TensorSum {
        let mut out = TensorSum::zero();
        for ((l, r), c) in &self.terms {
            out.add_term(r.clone(), l.clone(), c.clone());
        }
        out
    }
}

impl Add for &TensorSum {
    type Output = TensorSum;
    fn add(self, rhs: &TensorSum) -> TensorSum {
        let mut out = self.clone();
        for ((l, r), c) in &rhs.terms {
            out.add_term(l.clone(), r.clone(), c.clone());
        }
        out
    }
}

impl Sub for &TensorSum {
    type Output = TensorSum;
    fn sub(self, rhs: &TensorSum) -> TensorSum {
        let mut out = self.clone();
        for ((l, r), c) in &rhs.terms {
            out.add_term(l.clone(), r.clone(), -c);
        }
        out
    }
}

impl fmt::Display for TensorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((l, r), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if !c.is_one() {
                write!(f, "{}*", fmt_q(c))?;
            }
            write!(f, "[{l}]⊗[{r}]")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TensorTermJson {
    #[serde(with = "serde_q")]
    coef: Q,
    left: Forest,
    right: Forest,
}

impl Serialize for TensorSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.terms.iter().map(|((l, r), c)| TensorTermJson {
            coef: c.clone(),
            left: l.clone(),
            right: r.clone(),
        }))
    }
}

impl<'de> Deserialize<'de> for TensorSum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<TensorTermJson>::deserialize(d)?;
        let mut t = TensorSum::zero();
        for r in raw {
            t.add_term(r.left, r.right, r.coef);
        }
        Ok(t)
    }
}

/// Coproduct of a single tree, by recursion on the root:
/// `Δ(B⁺_d(w)) = 𝕀 ⊗ B⁺_d(w) + (B⁺_d ⊗ id) Δ(w)`.
///
/// Each term of `(B⁺_d ⊗ id) Δ(w)` corresponds to one admissible cut that
/// keeps the root: every child branch is either cut off entirely (lands on
/// the right) or cut admissibly further down.
pub fn coproduct_tree(t: &RootedTree) -> TensorSum {
    let children_cop = t
        .children()
        .iter()
        .fold(TensorSum::one(), |acc, c| acc.product(&coproduct_tree(c)));
    let mut out = TensorSum::pure(Forest::empty(), Forest::single(t.clone()));
    for ((l, r), c) in children_cop.terms {
        let grafted = RootedTree::new(t.root().clone(), l.into_trees());
        out.add_term(Forest::single(grafted), r, c);
    }
    out
}

pub fn coproduct_forest(f: &Forest) -> TensorSum {
    f.trees()
        .iter()
        .fold(TensorSum::one(), |acc, t| acc.product(&coproduct_tree(t)))
}

/// Linear extension of the admissible-cut coproduct.
pub fn coproduct(x: &ForestSum) -> TensorSum {
    let mut out = TensorSum::zero();
    for (f, c) in x.iter() {
        for ((l, r), d) in coproduct_forest(f).terms {
            out.add_term(l, r, c * d);
        }
    }
    out
}

/// `Δ'(f) = Δ(f) − f ⊗ 𝕀 − 𝕀 ⊗ f` on nonempty forests; zero on `𝕀`.
pub fn reduced_coproduct_forest(f: &Forest) -> TensorSum {
    if f.is_empty() {
        return TensorSum::zero();
    }
    let mut t = coproduct_forest(f);
    t.add_term(f.clone(), Forest::empty(), -Q::one());
    t.add_term(Forest::empty(), f.clone(), -Q::one());
    t
}

pub fn reduced_coproduct(x: &ForestSum) -> TensorSum {
    let mut out = TensorSum::zero();
    for (f, c) in x.iter() {
        for ((l, r), d) in reduced_coproduct_forest(f).terms {
            out.add_term(l, r, c * d);
        }
    }
    out
}

pub fn counit(x: &ForestSum) -> Q {
    x.coefficient(&Forest::empty())
}

/// Antipode with a memo table over trees.
#[derive(Default)]
pub struct Antipode {
    memo: HashMap<RootedTree, ForestSum>,
}

impl Antipode {
    pub fn new() -> Self {
        Antipode::default()
    }

    /// `S(t) = −t − Σ S(t'_root) · t'_pruned` over the reduced coproduct.
    pub fn tree(&mut self, t: &RootedTree) -> ForestSum {
        if let Some(s) = self.memo.get(t) {
            return s.clone();
        }
        let mut s = -ForestSum::from_tree(t.clone());
        for ((l, r), c) in reduced_coproduct_forest(&Forest::single(t.clone())).terms {
            let sl = self.forest(&l);
            s = s - sl.product(&ForestSum::from_forest(r)).scale(&c);
        }
        self.memo.insert(t.clone(), s.clone());
        s
    }

    pub fn forest(&mut self, f: &Forest) -> ForestSum {
        f.trees()
            .iter()
            .fold(ForestSum::one(), |acc, t| acc.product(&self.tree(t)))
    }

    pub fn apply(&mut self, x: &ForestSum) -> ForestSum {
        x.map_linear(|f| self.forest(f))
    }
}

pub fn antipode(x: &ForestSum) -> ForestSum {
    Antipode::new().apply(x)
}

/// Grafting operator `B⁺_d`: a new `d`-decorated root above each forest.
pub fn graft(d: &Decoration, x: &ForestSum) -> ForestSum {
    ForestSum::from_terms(x.iter().map(|(f, c)| {
        let t = RootedTree::new(d.clone(), f.trees().to_vec());
        (Forest::single(t), c.clone())
    }))
}

/// Commutative unital target algebra of a character.
pub trait Algebra: Clone + fmt::Debug {
    fn unit() -> Self;
    fn null() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Q) -> Self;
}

impl Algebra for Q {
    fn unit() -> Self {
        <Q as One>::one()
    }
    fn null() -> Self {
        <Q as Zero>::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: &Q) -> Self {
        self * c
    }
}

/// Multiplicative linear map from the Hopf algebra into an [`Algebra`],
/// given by its rule on single trees.
///
/// Two characters can only be convolved when their `Value` types agree;
/// the compiler rejects mismatched targets.
pub trait Character {
    type Value: Algebra;

    fn on_tree(&self, t: &RootedTree) -> Result<Self::Value>;

    fn on_forest(&self, f: &Forest) -> Result<Self::Value> {
        f.trees().iter().try_fold(Self::Value::unit(), |acc, t| {
            Ok(acc.mul(&self.on_tree(t)?))
        })
    }

    fn on_sum(&self, x: &ForestSum) -> Result<Self::Value> {
        x.iter().try_fold(Self::Value::null(), |acc, (f, c)| {
            Ok(acc.add(&self.on_forest(f)?.scale(c)))
        })
    }
}

/// Character defined by a closure on trees.
pub struct TreeRule<V, F> {
    rule: F,
    _v: std::marker::PhantomData<V>,
}

impl<V: Algebra, F: Fn(&RootedTree) -> Result<V>> TreeRule<V, F> {
    pub fn new(rule: F) -> Self {
        TreeRule {
            rule,
            _v: std::marker::PhantomData,
        }
    }
}

impl<V: Algebra, F: Fn(&RootedTree) -> Result<V>> Character for TreeRule<V, F> {
    type Value = V;
    fn on_tree(&self, t: &RootedTree) -> Result<V> {
        (self.rule)(t)
    }
}

/// The convolution unit `𝕀 ∘ ε` into any target algebra.
pub struct CounitCharacter<V>(std::marker::PhantomData<V>);

impl<V> Default for CounitCharacter<V> {
    fn default() -> Self {
        CounitCharacter(std::marker::PhantomData)
    }
}

impl<V: Algebra> Character for CounitCharacter<V> {
    type Value = V;
    fn on_tree(&self, _t: &RootedTree) -> Result<V> {
        Ok(V::null())
    }
}

/// `φ ∘ S`, again a character because `S` is an algebra morphism of the
/// commutative Hopf algebra.
pub struct AfterAntipode<'a, C> {
    inner: &'a C,
    antipode: std::cell::RefCell<Antipode>,
}

impl<'a, C: Character> AfterAntipode<'a, C> {
    pub fn new(inner: &'a C) -> Self {
        AfterAntipode {
            inner,
            antipode: std::cell::RefCell::new(Antipode::new()),
        }
    }
}

impl<C: Character> Character for AfterAntipode<'_, C> {
    type Value = C::Value;
    fn on_tree(&self, t: &RootedTree) -> Result<C::Value> {
        let s = self.antipode.borrow_mut().tree(t);
        self.inner.on_sum(&s)
    }
}

/// `(f ⋆ g)(x) = Σ f(x_root) g(x_pruned)` over the coproduct terms of `x`,
/// with `f` on the root-part factor and `g` on the pruned factor.
pub fn convolve<F, G>(f: &F, g: &G, x: &ForestSum) -> Result<F::Value>
where
    F: Character,
    G: Character<Value = F::Value>,
{
    let cop = coproduct(x);
    let mut acc = F::Value::null();
    for (l, r, c) in cop.iter() {
        let term = f.on_forest(l)?.mul(&g.on_forest(r)?);
        acc = acc.add(&term.scale(c));
    }
    Ok(acc)
}
