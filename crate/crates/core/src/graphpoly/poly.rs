//! Sparse multivariate polynomials with rational coefficients over the
//! variables `x`, `y` and edge weights `w_i`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    /// Edge weight `w_i`, `i ≥ 1`.
    W(usize),
}

impl Var {
    pub fn name(&self) -> String {
        match self {
            Var::X => "x".into(),
            Var::Y => "y".into(),
            Var::W(i) => format!("w{i}"),
        }
    }

    pub fn parse(s: &str) -> Result<Var> {
        match s {
            "x" => Ok(Var::X),
            "y" => Ok(Var::Y),
            _ => s
                .strip_prefix('w')
                .and_then(|i| i.parse().ok())
                .filter(|&i| i >= 1)
                .map(Var::W)
                .ok_or_else(|| Error::Invalid(format!("unknown variable {s:?}"))),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Exponent vector; variables with exponent zero are absent.
pub type Monomial = BTreeMap<Var, u32>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Q>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::term(c, Monomial::new())
    }

    pub fn var(v: Var) -> Self {
        Self::term(Q::one(), Monomial::from([(v, 1)]))
    }

    pub fn term(c: Q, mono: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(mono, c);
        p
    }

    /// `x^a y^b`.
    pub fn xy(a: u32, b: u32) -> Self {
        let mono = [(Var::X, a), (Var::Y, b)]
            .into_iter()
            .filter(|&(_, e)| e > 0)
            .collect();
        Self::term(Q::one(), mono)
    }

    pub fn add_term(&mut self, mono: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let mono: Monomial = mono.into_iter().filter(|&(_, e)| e > 0).collect();
        let slot = self.terms.entry(mono).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
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

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Q {
        self.terms.get(mono).cloned().unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
        }
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Total degrees of the monomials that occur.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.terms.keys().map(|m| m.values().sum()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn is_homogeneous_of(&self, degree: u32) -> bool {
        self.degrees().iter().all(|&d| d == degree)
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.keys().flat_map(|m| m.keys().copied()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Full evaluation; every occurring variable must be assigned.
    pub fn eval(&self, values: &BTreeMap<Var, Q>) -> Result<Q> {
        let mut total = Q::zero();
        for (mono, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in mono {
                let x = values
                    .get(v)
                    .ok_or_else(|| Error::Invalid(format!("no value for variable {v}")))?;
                t *= num::pow(x.clone(), e as usize);
            }
            total += t;
        }
        Ok(total)
    }

    /// Replaces one variable by a rational value.
    pub fn substitute(&self, v: Var, value: &Q) -> Self {
        let mut out = Self::zero();
        for (mono, c) in &self.terms {
            let mut m = mono.clone();
            let e = m.remove(&v).unwrap_or(0);
            out.add_term(m, c * num::pow(value.clone(), e as usize));
        }
        out
    }

    pub fn derivative(&self, v: Var) -> Self {
        let mut out = Self::zero();
        for (mono, c) in &self.terms {
            let Some(&e) = mono.get(&v) else { continue };
            let mut m = mono.clone();
            m.insert(v, e - 1);
            out.add_term(m, c * Q::from_integer(e.into()));
        }
        out
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, o: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Add for MultiPoly {
    type Output = MultiPoly;
    fn add(self, o: MultiPoly) -> MultiPoly {
        &self + &o
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Q::one())
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, o: &MultiPoly) -> MultiPoly {
        self + &(-o)
    }
}

impl Sub for MultiPoly {
    type Output = MultiPoly;
    fn sub(self, o: MultiPoly) -> MultiPoly {
        &self - &o
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, o: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let mut m = ma.clone();
                for (v, e) in mb {
                    *m.entry(*v).or_insert(0) += e;
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl Mul for MultiPoly {
    type Output = MultiPoly;
    fn mul(self, o: MultiPoly) -> MultiPoly {
        &self * &o
    }
}

/// Graded lexicographic order, highest first.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let vars = self.variables();
        let key = |m: &Monomial| -> (u32, Vec<u32>) {
            let exps = vars.iter().map(|v| m.get(v).copied().unwrap_or(0)).collect();
            (m.values().sum(), exps)
        };
        let mut terms: Vec<(&Monomial, &Q)> = self.terms.iter().collect();
        terms.sort_by_cached_key(|(m, _)| std::cmp::Reverse(key(m)));
        for (i, (mono, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            let vars: Vec<String> = mono
                .iter()
                .map(|(v, &e)| if e == 1 { v.name() } else { format!("{v}^{e}") })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_q(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_q(&mag), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coef: String,
    exps: BTreeMap<String, u32>,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(m, c)| TermJson {
                coef: fmt_q(c),
                exps: m.iter().map(|(v, &e)| (v.name(), e)).collect(),
            })
            .collect();
        terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let terms = Vec::<TermJson>::deserialize(d)?;
        let mut p = MultiPoly::zero();
        for t in terms {
            let c = parse_q(&t.coef).map_err(D::Error::custom)?;
            let mut m = Monomial::new();
            for (name, e) in t.exps {
                m.insert(Var::parse(&name).map_err(D::Error::custom)?, e);
            }
            p.add_term(m, c);
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn x() -> MultiPoly {
        MultiPoly::var(Var::X)
    }

    fn y() -> MultiPoly {
        MultiPoly::var(Var::Y)
    }

    #[test]
    fn ring_arithmetic() {
        let p = &x() + &y();
        let sq = &p * &p;
        assert_eq!(sq.to_string(), "x^2 + 2*x*y + y^2");
        assert_eq!(&sq - &sq, MultiPoly::zero());
        assert_eq!(p.pow(0), MultiPoly::one());
        assert_eq!((&x() - &MultiPoly::one()).to_string(), "x - 1");
        assert!(sq.is_homogeneous_of(2));
    }

    #[test]
    fn evaluation_and_calculus() {
        let w1 = MultiPoly::var(Var::W(1));
        let w2 = MultiPoly::var(Var::W(2));
        let p = &(&w1 * &w2) + &w1.scale(&qi(3));
        assert_eq!(p.derivative(Var::W(1)), &w2 + &MultiPoly::constant(qi(3)));
        assert_eq!(p.substitute(Var::W(1), &qi(0)), MultiPoly::zero());
        let vals = BTreeMap::from([(Var::W(1), q(1, 2)), (Var::W(2), qi(4))]);
        assert_eq!(p.eval(&vals).unwrap(), q(7, 2));
        assert!(p.eval(&BTreeMap::new()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = &MultiPoly::xy(2, 0) + &MultiPoly::constant(q(-1, 3));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"[{"coef":"-1/3","exps":{}},{"coef":"1","exps":{"x":2}}]"#);
        assert_eq!(serde_json::from_str::<MultiPoly>(&s).unwrap(), p);
        assert!(serde_json::from_str::<MultiPoly>(r#"[{"coef":"1","exps":{"z":1}}]"#).is_err());
    }
}
