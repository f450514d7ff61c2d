//! Regularized toy Feynman rules, minimal subtraction and BPHZ / Birkhoff
//! factorization on the tree Hopf algebra.
//!
//! The regularized character is
//!
//! ```text
//! φ(𝕀) = 1,   φ(B⁺_d(w)) = r_d · e^{−εL} / ((|w|+1) ε) · φ(w)
//! ```
//!
//! so that on a forest `f` with `n` vertices
//! `φ(f) = (Π_v r_v / f!) · ε^{−n} e^{−nεL}` where `f!` is the tree
//! factorial. The counterterm `S_R` is the negative Birkhoff part, the
//! renormalized value `R̄ + S_R` the positive part.

pub mod laurent;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};

use crate::dse::DseSolution;
use crate::error::{Error, Result};
use crate::hopf::{self, AfterAntipode, Character};
use crate::rational::{fmt_q, parse_q, Q};
use crate::trees::{Decoration, Forest, ForestSum, RootedTree};

pub use laurent::{LPoly, LaurentSeries};

/// External scale `L`: kept symbolic, or fixed to a rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scale {
    Symbolic,
    Value(Q),
}

impl Serialize for Scale {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scale::Symbolic => s.serialize_str("symbolic"),
            Scale::Value(q) => s.serialize_str(&fmt_q(q)),
        }
    }
}

impl<'de> Deserialize<'de> for Scale {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        if raw == "symbolic" || raw == "L" {
            return Ok(Scale::Symbolic);
        }
        parse_q(&raw).map(Scale::Value).map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_WINDOW: (i32, i32) = (-8, 2);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRules {
    pub scale: Scale,
    /// Residue per decoration; missing decorations use 1.
    #[serde(default, with = "residue_map")]
    pub residues: BTreeMap<Decoration, Q>,
    #[serde(default = "default_window")]
    pub window: (i32, i32),
}

fn default_window() -> (i32, i32) {
    DEFAULT_WINDOW
}

mod residue_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<Decoration, Q>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k.as_str().to_string(), fmt_q(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<Decoration, Q>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let k = Decoration::new(k).map_err(serde::de::Error::custom)?;
                let v = parse_q(&v).map_err(serde::de::Error::custom)?;
                Ok((k, v))
            })
            .collect()
    }
}

impl ToyRules {
    pub fn symbolic() -> Self {
        ToyRules {
            scale: Scale::Symbolic,
            residues: BTreeMap::new(),
            window: DEFAULT_WINDOW,
        }
    }

    pub fn at_scale(l: Q) -> Self {
        ToyRules {
            scale: Scale::Value(l),
            ..ToyRules::symbolic()
        }
    }

    pub fn with_window(mut self, lo: i32, hi: i32) -> Self {
        self.window = (lo, hi);
        self
    }

    pub fn residue(&self, d: &Decoration) -> Q {
        self.residues.get(d).cloned().unwrap_or_else(Q::one)
    }

    fn check_window(&self, grade: usize) -> Result<()> {
        let (lo, hi) = self.window;
        if hi < 0 {
            return Err(Error::Invalid(format!(
                "window upper bound {hi} must be at least 0"
            )));
        }
        let required = -(grade as i32);
        if lo > required {
            return Err(Error::WindowTooNarrow {
                lo,
                required_lo: required,
            });
        }
        Ok(())
    }

    /// `φ(f)` through `ε^hi`, from the closed form.
    pub fn eval_forest(&self, f: &Forest, hi: i32) -> LaurentSeries {
        let n = f.grade() as i32;
        let mut prefactor = Q::one();
        for t in f.trees() {
            for d in t.decorations() {
                prefactor *= self.residue(d);
            }
            prefactor /= Q::from_integer(BigInt::from(t.tree_factorial()));
        }
        // ε^{-n} e^{-nεL} = Σ_j (−nL)^j / j! ε^{j−n}
        let mut terms = Vec::new();
        let mut factorial = Q::one();
        for j in 0..=(hi + n).max(0) {
            if j > 0 {
                factorial *= Q::from_integer(j.into());
            }
            let base = &prefactor / &factorial * num::pow(Q::from_integer((-n).into()), j as usize);
            let coef = match &self.scale {
                Scale::Symbolic => LPoly::monomial(base, j as u32),
                Scale::Value(l) => LPoly::constant(base * num::pow(l.clone(), j as usize)),
            };
            terms.push((j - n, coef));
        }
        if n == 0 {
            return LaurentSeries::one();
        }
        LaurentSeries::truncated(-n, hi, terms).expect("powers start at -n")
    }
}

/// The regularized rules as a [`Character`] with fixed precision.
pub struct ToyCharacter<'a> {
    rules: &'a ToyRules,
    hi: i32,
}

impl<'a> ToyCharacter<'a> {
    pub fn new(rules: &'a ToyRules, hi: i32) -> Self {
        ToyCharacter { rules, hi }
    }
}

impl Character for ToyCharacter<'_> {
    type Value = LaurentSeries;

    fn on_tree(&self, t: &RootedTree) -> Result<LaurentSeries> {
        Ok(self.rules.eval_forest(&Forest::single(t.clone()), self.hi))
    }

    // the closed form is evaluated on the whole forest so that the
    // precision does not degrade through products of poles
    fn on_forest(&self, f: &Forest) -> Result<LaurentSeries> {
        Ok(self.rules.eval_forest(f, self.hi))
    }
}

/// `φ(x)` inside the rules' window.
pub fn toy_feynman_rules(rules: &ToyRules, x: &ForestSum) -> Result<LaurentSeries> {
    rules.check_window(x.max_grade())?;
    ToyCharacter::new(rules, rules.window.1).on_sum(x)
}

pub fn pole_part(s: &LaurentSeries) -> Result<LaurentSeries> {
    s.pole_part()
}

/// BPHZ engine with memoized counterterms. Output precision is the rules'
/// window upper bound; intermediate values are evaluated at a widened
/// precision so that no subtraction loses accuracy.
pub struct Bphz<'a> {
    rules: &'a ToyRules,
    hi: i32,
    counterterms: Mutex<HashMap<RootedTree, LaurentSeries>>,
    unfactored: Mutex<HashMap<Forest, LaurentSeries>>,
}

impl<'a> Bphz<'a> {
    pub fn new(rules: &'a ToyRules) -> Self {
        Bphz::with_precision(rules, rules.window.1)
    }

    pub fn with_precision(rules: &'a ToyRules, hi: i32) -> Self {
        Bphz {
            rules,
            hi,
            counterterms: Mutex::new(HashMap::new()),
            unfactored: Mutex::new(HashMap::new()),
        }
    }

    pub fn rules(&self) -> &ToyRules {
        self.rules
    }

    pub fn precision(&self) -> i32 {
        self.hi
    }

    fn phi(&self, f: &Forest, hi: i32) -> LaurentSeries {
        self.rules.eval_forest(f, hi)
    }

    /// Bogoliubov preparation `R̄(f) = φ(f) + Σ S_R(P) φ(R)` over the reduced
    /// coproduct, with `counter` supplying counterterms of pruned parts.
    fn prepare_with(
        &self,
        f: &Forest,
        mut counter: impl FnMut(&Forest) -> Result<LaurentSeries>,
    ) -> Result<LaurentSeries> {
        let mut acc = self.phi(f, self.hi);
        for (root_part, pruned, c) in hopf::reduced_coproduct_forest(f).iter() {
            let s = counter(pruned)?;
            // φ(R) needs |P| extra orders to survive the pole of S_R(P)
            let phi_r = self.phi(root_part, self.hi + pruned.grade() as i32);
            acc = acc.add(&s.mul(&phi_r).scale(c));
        }
        Ok(acc)
    }

    pub fn bogoliubov(&self, f: &Forest) -> Result<LaurentSeries> {
        self.rules.check_window(f.grade())?;
        self.prepare_with(f, |p| self.counterterm(p))
    }

    fn tree_counterterm(&self, t: &RootedTree) -> Result<LaurentSeries> {
        if let Some(s) = self.counterterms.lock().unwrap().get(t) {
            return Ok(s.clone());
        }
        let prepared = self.prepare_with(&Forest::single(t.clone()), |p| self.counterterm(p))?;
        let s = prepared.pole_part()?.scale(&-Q::one());
        self.counterterms
            .lock()
            .unwrap()
            .insert(t.clone(), s.clone());
        Ok(s)
    }

    /// `S_R(f) = Π_t S_R(t)` with `S_R(t) = −R(R̄(t))`.
    pub fn counterterm(&self, f: &Forest) -> Result<LaurentSeries> {
        self.rules.check_window(f.grade())?;
        f.trees()
            .iter()
            .try_fold(LaurentSeries::one(), |acc, t| Ok(acc.mul(&self.tree_counterterm(t)?)))
    }

    /// Counterterm computed by the recursion on the forest's own reduced
    /// coproduct, without using multiplicativity.
    pub fn counterterm_unfactored(&self, f: &Forest) -> Result<LaurentSeries> {
        if f.is_empty() {
            return Ok(LaurentSeries::one());
        }
        if let Some(s) = self.unfactored.lock().unwrap().get(f) {
            return Ok(s.clone());
        }
        let prepared = self.prepare_with(f, |p| self.counterterm_unfactored(p))?;
        let s = prepared.pole_part()?.scale(&-Q::one());
        self.unfactored.lock().unwrap().insert(f.clone(), s.clone());
        Ok(s)
    }

    /// `φ₊(f) = R̄(f) + S_R(f)`; fails if a pole survives.
    pub fn renormalized(&self, f: &Forest) -> Result<LaurentSeries> {
        if f.is_empty() {
            return Ok(LaurentSeries::one());
        }
        let value = self.bogoliubov(f)?.add(&self.counterterm(f)?);
        if value.has_poles() {
            return Err(Error::Inconsistent(format!(
                "renormalized value of [{f}] keeps a pole part: {value}"
            )));
        }
        Ok(value)
    }

    pub fn counterterm_sum(&self, x: &ForestSum) -> Result<LaurentSeries> {
        x.iter().try_fold(LaurentSeries::zero(), |acc, (f, c)| {
            Ok(acc.add(&self.counterterm(f)?.scale(c)))
        })
    }

    pub fn renormalized_sum(&self, x: &ForestSum) -> Result<LaurentSeries> {
        x.iter().try_fold(LaurentSeries::zero(), |acc, (f, c)| {
            Ok(acc.add(&self.renormalized(f)?.scale(c)))
        })
    }

    pub fn negative_part(&self) -> NegativePart<'_, 'a> {
        NegativePart(self)
    }

    pub fn positive_part(&self) -> PositivePart<'_, 'a> {
        PositivePart(self)
    }

    /// Checks `φ = φ₊ ⋆ (φ₋ ∘ S)` on `x` through the engine precision, where
    /// `⋆` puts its left argument on the root-part factor. In pruned-part
    /// first notation this is `φ = (φ₋ ∘ S) ⋆ φ₊`.
    pub fn reconstruction_holds(&self, x: &ForestSum) -> Result<bool> {
        let widened = Bphz::with_precision(self.rules, self.hi + x.max_grade() as i32);
        let neg = widened.negative_part();
        let neg_s = AfterAntipode::new(&neg);
        let rebuilt = hopf::convolve(&widened.positive_part(), &neg_s, x)?;
        let direct = ToyCharacter::new(self.rules, self.hi).on_sum(x)?;
        rebuilt.agrees_through(&direct, self.hi)
    }
}

/// `φ₋`, the counterterm character.
pub struct NegativePart<'b, 'a>(&'b Bphz<'a>);

impl Character for NegativePart<'_, '_> {
    type Value = LaurentSeries;
    fn on_tree(&self, t: &RootedTree) -> Result<LaurentSeries> {
        self.0.counterterm(&Forest::single(t.clone()))
    }
}

/// `φ₊`, the renormalized character.
pub struct PositivePart<'b, 'a>(&'b Bphz<'a>);

impl Character for PositivePart<'_, '_> {
    type Value = LaurentSeries;
    fn on_tree(&self, t: &RootedTree) -> Result<LaurentSeries> {
        self.0.renormalized(&Forest::single(t.clone()))
    }
}

pub fn counterterm(rules: &ToyRules, f: &Forest) -> Result<LaurentSeries> {
    Bphz::new(rules).counterterm(f)
}

pub fn renormalized_value(rules: &ToyRules, f: &Forest) -> Result<LaurentSeries> {
    Bphz::new(rules).renormalized(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffParts {
    pub negative: LaurentSeries,
    pub positive: LaurentSeries,
}

/// `(φ₋(x), φ₊(x))` with `φ₋ = S_R` and `φ₊` the renormalized character.
pub fn birkhoff(rules: &ToyRules, x: &ForestSum) -> Result<BirkhoffParts> {
    let engine = Bphz::new(rules);
    Ok(BirkhoffParts {
        negative: engine.counterterm_sum(x)?,
        positive: engine.renormalized_sum(x)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenormReport {
    pub requested_window: (i32, i32),
    /// Highest precision used for intermediate evaluations.
    pub working_hi: i32,
    pub counterterms: Vec<LaurentSeries>,
    pub renormalized: Vec<LaurentSeries>,
    /// `ε⁰` coefficients of the renormalized values.
    pub finite_parts: Vec<String>,
    /// Successive differences of the finite parts of the partial sums,
    /// `F(Y_{k+1}) − F(Y_k)`, as a stand-in for the limit.
    pub partial_sum_steps: Vec<String>,
    pub pole_free: bool,
}

/// Termwise BPHZ on `X_1 … X_m`, weighted by the solution's coupling in the
/// partial-sum differences.
pub fn renormalize_solution(rules: &ToyRules, sol: &DseSolution, m: usize) -> Result<RenormReport> {
    sol.partial_sum(m)?;
    rules.check_window(m)?;
    let engine = Bphz::new(rules);
    let mut counterterms = Vec::with_capacity(m);
    let mut renormalized = Vec::with_capacity(m);
    let mut finite_parts = Vec::with_capacity(m);
    let mut steps = Vec::with_capacity(m);
    let mut coupling_power = Q::one();
    for n in 1..=m {
        let x = sol.coefficient(n);
        let value = engine.renormalized_sum(x)?;
        let finite = value.coeff(0)?;
        coupling_power *= sol.coupling();
        steps.push(finite.scale(&coupling_power).to_string());
        finite_parts.push(finite.to_string());
        counterterms.push(engine.counterterm_sum(x)?);
        renormalized.push(value);
    }
    let pole_free = renormalized.iter().all(|v| !v.has_poles());
    Ok(RenormReport {
        requested_window: rules.window,
        working_hi: rules.window.1 + m as i32,
        counterterms,
        renormalized,
        finite_parts,
        partial_sum_steps: steps,
        pole_free,
    })
}

impl RenormReport {
    pub fn finite_part(&self, n: usize) -> Result<LPoly> {
        self.renormalized[n - 1].coeff(0)
    }
}

/// Ladder value `φ(l_n)` at `L = 0` is `1/(n! εⁿ)`; helper for checks.
pub fn ladder_leading(n: usize) -> Q {
    let f: BigInt = (1..=n as i64).map(BigInt::from).product();
    Q::new(BigInt::one(), f)
}

pub fn is_zero_poly(p: &LPoly) -> bool {
    p.is_zero() || p.iter().all(|(_, c)| c.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dse::{solve, DseSpec};
    use crate::rational::{q, qi};

    fn g() -> Decoration {
        Decoration::new("g").unwrap()
    }
    fn forest(s: &str) -> Forest {
        Forest::new(s.split_whitespace().map(|t| RootedTree::parse(t).unwrap()).collect())
    }
    fn lp(terms: &[(Q, u32)]) -> LPoly {
        terms
            .iter()
            .fold(LPoly::zero(), |acc, (c, p)| &acc + &LPoly::monomial(c.clone(), *p))
    }

    #[test]
    fn toy_rules_examples() {
        let rules = ToyRules::at_scale(qi(0));
        assert_eq!(toy_feynman_rules(&rules, &ForestSum::one()).unwrap().coeff(0).unwrap(), lp(&[(qi(1), 0)]));
        let dot = toy_feynman_rules(&rules, &ForestSum::from_forest(forest("g"))).unwrap();
        assert_eq!(dot.coeff(-1).unwrap(), lp(&[(qi(1), 0)]));
        assert!(dot.coeff(0).unwrap().is_zero());

        let sym = ToyRules::symbolic();
        let l2 = toy_feynman_rules(&sym, &ForestSum::from_forest(forest("g(g)"))).unwrap();
        assert_eq!(l2.coeff(-2).unwrap(), lp(&[(q(1, 2), 0)]));
        assert_eq!(l2.coeff(-1).unwrap(), lp(&[(qi(-1), 1)]));
        assert_eq!(l2.coeff(0).unwrap(), lp(&[(qi(1), 2)]));
    }

    #[test]
    fn window_too_narrow_names_required_lo() {
        let rules = ToyRules::symbolic().with_window(-1, 2);
        let err = toy_feynman_rules(&rules, &ForestSum::from_forest(forest("g(g)"))).unwrap_err();
        assert_eq!(err, Error::WindowTooNarrow { lo: -1, required_lo: -2 });
    }

    #[test]
    fn counterterm_examples() {
        let rules = ToyRules::symbolic();
        let s1 = counterterm(&rules, &forest("g")).unwrap();
        assert_eq!(s1, LaurentSeries::exact([(-1, lp(&[(qi(-1), 0)]))]));
        let s2 = counterterm(&rules, &forest("g(g)")).unwrap();
        assert_eq!(s2, LaurentSeries::exact([(-2, lp(&[(q(1, 2), 0)]))]));
        assert_eq!(counterterm(&rules, &Forest::empty()).unwrap(), LaurentSeries::one());
    }

    #[test]
    fn renormalized_examples() {
        let rules = ToyRules::symbolic();
        let r1 = renormalized_value(&rules, &forest("g")).unwrap();
        assert_eq!(r1.coeff(0).unwrap(), lp(&[(qi(-1), 1)]));
        let r2 = renormalized_value(&rules, &forest("g(g)")).unwrap();
        assert_eq!(r2.coeff(0).unwrap(), lp(&[(q(1, 2), 2)]));
        assert_eq!(renormalized_value(&rules, &Forest::empty()).unwrap(), LaurentSeries::one());
    }

    #[test]
    fn birkhoff_examples() {
        let rules = ToyRules::symbolic();
        let p = birkhoff(&rules, &ForestSum::from_forest(forest("g"))).unwrap();
        assert_eq!(p.negative.coeff(-1).unwrap(), lp(&[(qi(-1), 0)]));
        assert_eq!(p.positive, renormalized_value(&rules, &forest("g")).unwrap());
        let p0 = birkhoff(&rules, &ForestSum::one()).unwrap();
        assert_eq!(p0.negative, LaurentSeries::one());
        assert_eq!(p0.positive, LaurentSeries::one());
        let p2 = birkhoff(&rules, &ForestSum::from_forest(forest("g(g)"))).unwrap();
        assert!(!p2.positive.has_poles());
        let engine = Bphz::new(&rules);
        assert!(engine.reconstruction_holds(&ForestSum::from_forest(forest("g(g,g)"))).unwrap());
    }

    #[test]
    fn renormalize_single_cocycle_solution() {
        let sol = solve(&DseSpec::single(g(), 3)).unwrap();
        let rep = renormalize_solution(&ToyRules::symbolic(), &sol, 2).unwrap();
        assert_eq!(rep.finite_part(1).unwrap(), lp(&[(qi(-1), 1)]));
        assert_eq!(rep.finite_part(2).unwrap(), lp(&[(qi(1), 2)]));
        assert!(rep.pole_free);
        let zero = renormalize_solution(&ToyRules::at_scale(qi(0)), &sol, 2).unwrap();
        assert!(zero.finite_part(1).unwrap().is_zero());
        assert!(zero.finite_part(2).unwrap().is_zero());
        assert!(renormalize_solution(&ToyRules::symbolic(), &sol, 4).is_err());
    }

    #[test]
    fn residues_scale_values() {
        let mut rules = ToyRules::at_scale(qi(0));
        rules.residues.insert(g(), qi(3));
        let v = toy_feynman_rules(&rules, &ForestSum::from_forest(forest("g(g)"))).unwrap();
        assert_eq!(v.coeff(-2).unwrap(), lp(&[(q(9, 2), 0)]));
    }

    #[test]
    fn rules_json() {
        let rules: ToyRules =
            serde_json::from_str(r#"{"scale": "symbolic", "residues": {"g": "2"}, "window": [-6, 1]}"#).unwrap();
        assert_eq!(rules.scale, Scale::Symbolic);
        assert_eq!(rules.residue(&g()), qi(2));
        let fixed: ToyRules = serde_json::from_str(r#"{"scale": "1/2"}"#).unwrap();
        assert_eq!(fixed.scale, Scale::Value(q(1, 2)));
        assert_eq!(fixed.window, DEFAULT_WINDOW);
    }
}
