//! Truncated Laurent series in the regulator `ε` whose coefficients are
//! rational polynomials in the external scale `L`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf::Algebra;
use crate::rational::{fmt_q, parse_q, Q};

/// Polynomial in `L` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct LPoly {
    terms: BTreeMap<u32, Q>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly::default()
    }

    pub fn constant(c: Q) -> Self {
        LPoly::monomial(c, 0)
    }

    pub fn monomial(c: Q, power: u32) -> Self {
        let mut p = LPoly::zero();
        p.add_term(power, c);
        p
    }

    fn add_term(&mut self, power: u32, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(power).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&power);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, power: u32) -> Q {
        self.terms.get(&power).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Q)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    pub fn scale(&self, c: &Q) -> LPoly {
        let mut out = LPoly::zero();
        for (p, x) in &self.terms {
            out.add_term(*p, x * c);
        }
        out
    }

    pub fn eval(&self, l: &Q) -> Q {
        self.terms
            .iter()
            .fold(Q::zero(), |acc, (p, c)| acc + c * num::pow(l.clone(), *p as usize))
    }

    pub fn derivative(&self) -> LPoly {
        let mut out = LPoly::zero();
        for (p, c) in &self.terms {
            if *p > 0 {
                out.add_term(p - 1, c * Q::from_integer((*p).into()));
            }
        }
        out
    }
}

impl Add for &LPoly {
    type Output = LPoly;
    fn add(self, rhs: &LPoly) -> LPoly {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(*p, c.clone());
        }
        out
    }
}

impl Neg for &LPoly {
    type Output = LPoly;
    fn neg(self) -> LPoly {
        self.scale(&-Q::one())
    }
}

impl Mul for &LPoly {
    type Output = LPoly;
    fn mul(self, rhs: &LPoly) -> LPoly {
        let mut out = LPoly::zero();
        for (p, a) in &self.terms {
            for (r, b) in &rhs.terms {
                out.add_term(p + r, a * b);
            }
        }
        out
    }
}

impl fmt::Display for LPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(p, c)| match p {
                0 => fmt_q(c),
                1 => format!("{}*L", fmt_q(c)),
                _ => format!("{}*L^{p}", fmt_q(c)),
            })
            .collect();
        write!(f, "({})", parts.join(" + "))
    }
}

/// Laurent series `Σ_k c_k(L) ε^k` over the window `[lo, hi]`.
///
/// When `truncated` is set, coefficients above `hi` are unknown and reading
/// them is an error. Otherwise every coefficient above `hi` is exactly zero.
/// Every stored power lies in `[lo, hi]`.
///
/// Equality compares the known coefficients and the precision; the window
/// of an exact series is bookkeeping and does not take part.
#[derive(Clone, Debug)]
pub struct LaurentSeries {
    terms: BTreeMap<i32, LPoly>,
    lo: i32,
    hi: i32,
    truncated: bool,
}

impl PartialEq for LaurentSeries {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.truncated == other.truncated
            && (!self.truncated || self.hi == other.hi)
    }
}

impl Eq for LaurentSeries {}

impl LaurentSeries {
    pub fn zero() -> Self {
        LaurentSeries {
            terms: BTreeMap::new(),
            lo: 0,
            hi: 0,
            truncated: false,
        }
    }

    pub fn one() -> Self {
        LaurentSeries::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        LaurentSeries::exact([(0, LPoly::constant(c))])
    }

    /// Exact series (no truncation) from `(power, coefficient)` pairs.
    pub fn exact(terms: impl IntoIterator<Item = (i32, LPoly)>) -> Self {
        let mut s = LaurentSeries::zero();
        for (p, c) in terms {
            s.add_at(p, &c);
        }
        s.lo = s.terms.keys().next().copied().unwrap_or(0).min(0);
        s.hi = s.terms.keys().next_back().copied().unwrap_or(0).max(0);
        s
    }

    /// Series known only through `ε^hi`.
    pub fn truncated(lo: i32, hi: i32, terms: impl IntoIterator<Item = (i32, LPoly)>) -> Result<Self> {
        let mut s = LaurentSeries {
            terms: BTreeMap::new(),
            lo,
            hi,
            truncated: true,
        };
        for (p, c) in terms {
            if p < lo {
                return Err(Error::WindowTooNarrow { lo, required_lo: p });
            }
            if p <= hi {
                s.add_at(p, &c);
            }
        }
        Ok(s)
    }

    fn add_at(&mut self, p: i32, c: &LPoly) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(p).or_default();
        *e = &*e + c;
        if e.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn window(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Highest power whose coefficient is known, `None` if all are known.
    pub fn precision(&self) -> Option<i32> {
        self.truncated.then_some(self.hi)
    }

    pub fn coeff(&self, power: i32) -> Result<LPoly> {
        if self.truncated && power > self.hi {
            return Err(Error::Truncated {
                power,
                hi: self.hi,
            });
        }
        Ok(self.terms.get(&power).cloned().unwrap_or_default())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &LPoly)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && !self.truncated
    }

    /// Lowest power that may carry a nonzero coefficient.
    fn low_bound(&self) -> Option<i32> {
        let first = self.terms.keys().next().copied();
        let unknown = self.truncated.then_some(self.hi + 1);
        match (first, unknown) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Lowers the precision to `hi`, dropping higher terms.
    pub fn truncate_to(&self, hi: i32) -> LaurentSeries {
        if self.truncated && hi >= self.hi {
            return self.clone();
        }
        LaurentSeries {
            terms: self
                .terms
                .iter()
                .filter(|(p, _)| **p <= hi)
                .map(|(p, c)| (*p, c.clone()))
                .collect(),
            lo: self.lo.min(hi),
            hi,
            truncated: true,
        }
    }

    pub fn scale(&self, c: &Q) -> LaurentSeries {
        if c.is_zero() {
            let mut z = self.clone();
            z.terms.clear();
            return z;
        }
        LaurentSeries {
            terms: self.terms.iter().map(|(p, x)| (*p, x.scale(c))).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &LaurentSeries) -> LaurentSeries {
        let (hi, truncated) = match (self.truncated, other.truncated) {
            (false, false) => (self.hi.max(other.hi), false),
            (true, false) => (self.hi, true),
            (false, true) => (other.hi, true),
            (true, true) => (self.hi.min(other.hi), true),
        };
        let mut out = LaurentSeries {
            terms: BTreeMap::new(),
            lo: self.lo.min(other.lo),
            hi,
            truncated,
        };
        for (p, c) in self.terms.iter().chain(other.terms.iter()) {
            if !truncated || *p <= hi {
                out.add_at(*p, c);
            }
        }
        out
    }

    /// Product with precision tracking: the window of the raw product is
    /// `[lo_a + lo_b, hi_a + hi_b]`; a truncated factor limits the result to
    /// its precision plus the lowest possibly-nonzero power of the other.
    pub fn mul(&self, other: &LaurentSeries) -> LaurentSeries {
        if self.is_zero() || other.is_zero() {
            return LaurentSeries::zero();
        }
        let mut raw = BTreeMap::<i32, LPoly>::new();
        for (p, a) in &self.terms {
            for (r, b) in &other.terms {
                let e = raw.entry(p + r).or_default();
                *e = &*e + &(a * b);
            }
        }
        let mut hi = self.hi + other.hi;
        let mut truncated = false;
        let limit = |t: &LaurentSeries, o: &LaurentSeries| -> Option<i32> {
            // low_bound is Some: `o` is not exactly zero
            t.truncated.then(|| t.hi + o.low_bound().unwrap_or(0))
        };
        for bound in [limit(self, other), limit(other, self)].into_iter().flatten() {
            hi = if truncated { hi.min(bound) } else { bound };
            truncated = true;
        }
        let mut out = LaurentSeries {
            terms: BTreeMap::new(),
            lo: self.lo + other.lo,
            hi,
            truncated,
        };
        for (p, c) in raw {
            if !truncated || p <= hi {
                out.add_at(p, &c);
            }
        }
        out.lo = out.lo.min(out.hi);
        out
    }

    /// Minimal subtraction: the strictly negative powers. Requires the
    /// coefficient of `ε^{-1}` to be known.
    pub fn pole_part(&self) -> Result<LaurentSeries> {
        if self.truncated && self.hi < -1 {
            return Err(Error::Truncated {
                power: -1,
                hi: self.hi,
            });
        }
        Ok(LaurentSeries::exact(
            self.terms
                .iter()
                .filter(|(p, _)| **p < 0)
                .map(|(p, c)| (*p, c.clone())),
        ))
    }

    /// `(id − R)`: the part regular at `ε = 0`.
    pub fn regular_part(&self) -> Result<LaurentSeries> {
        Ok(self.sub(&self.pole_part()?))
    }

    pub fn sub(&self, other: &LaurentSeries) -> LaurentSeries {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn has_poles(&self) -> bool {
        self.terms.keys().any(|p| *p < 0)
    }

    /// Substitutes a numeric scale.
    pub fn at_scale(&self, l: &Q) -> LaurentSeries {
        LaurentSeries {
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (*p, LPoly::constant(c.eval(l))))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
            ..self.clone()
        }
    }

    /// Equality of all coefficients through `ε^through`.
    pub fn agrees_through(&self, other: &LaurentSeries, through: i32) -> Result<bool> {
        let lo = self.lo.min(other.lo);
        for p in lo..=through {
            if self.coeff(p)? != other.coeff(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Algebra for LaurentSeries {
    fn unit() -> Self {
        LaurentSeries::one()
    }
    fn null() -> Self {
        LaurentSeries::zero()
    }
    fn add(&self, other: &Self) -> Self {
        LaurentSeries::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        LaurentSeries::mul(self, other)
    }
    fn scale(&self, c: &Q) -> Self {
        LaurentSeries::scale(self, c)
    }
}

impl Add for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        LaurentSeries::add(self, rhs)
    }
}

impl Sub for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        LaurentSeries::sub(self, rhs)
    }
}

impl Mul for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        LaurentSeries::mul(self, rhs)
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(p, c)| match p {
                0 => c.to_string(),
                _ => format!("{c}*eps^{p}"),
            })
            .collect();
        if parts.is_empty() {
            f.write_str("0")?;
        } else {
            f.write_str(&parts.join(" + "))?;
        }
        if self.truncated {
            write!(f, " + O(eps^{})", self.hi + 1)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    pow: i32,
    coef: Vec<(String, u32)>,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    window: (i32, i32),
    #[serde(default)]
    truncated: bool,
    terms: Vec<TermJson>,
}

impl Serialize for LaurentSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            window: (self.lo, self.hi),
            truncated: self.truncated,
            terms: self
                .terms
                .iter()
                .map(|(p, c)| TermJson {
                    pow: *p,
                    coef: c.iter().map(|(e, x)| (fmt_q(x), e)).collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SeriesJson::deserialize(d)?;
        let (lo, hi) = raw.window;
        if lo > hi {
            return Err(serde::de::Error::custom("window lo exceeds hi"));
        }
        let mut s = LaurentSeries {
            terms: BTreeMap::new(),
            lo,
            hi,
            truncated: raw.truncated,
        };
        for t in raw.terms {
            if t.pow < lo || t.pow > hi {
                return Err(serde::de::Error::custom(format!(
                    "power {} outside window [{lo}, {hi}]",
                    t.pow
                )));
            }
            let mut poly = LPoly::zero();
            for (c, e) in t.coef {
                let c = parse_q(&c).map_err(serde::de::Error::custom)?;
                poly.add_term(e, c);
            }
            s.add_at(t.pow, &poly);
        }
        Ok(s)
    }
}
