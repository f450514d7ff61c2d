//! Truncated solver for combinatorial Dyson–Schwinger equations
//!
//! ```text
//! X = 𝕀 + Σ_j (λg)^j ω_j B⁺_{γ_j}(X^{j+1})
//! ```
//!
//! The coefficients obey `X_n = Σ_{j=1}^{n} ω_j B⁺_{γ_j}([X^{j+1}]_{n−j})`,
//! where `[·]_k` is the grade-`k` part. Cocycles beyond the configured
//! list contribute nothing.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf::{coproduct, TensorSum};
use crate::linalg;
use crate::rational::{fmt_q, serde_q, Q};
use crate::trees::{Decoration, Forest, ForestSum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cocycle {
    pub decoration: Decoration,
    #[serde(with = "serde_q")]
    pub omega: Q,
}

impl Cocycle {
    pub fn new(decoration: Decoration, omega: Q) -> Self {
        Cocycle { decoration, omega }
    }
}

/// The `j`-th cocycle (1-based) inserts into `X^{j+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DseSpec {
    pub cocycles: Vec<Cocycle>,
    pub order: usize,
}

impl DseSpec {
    pub fn new(cocycles: Vec<Cocycle>, order: usize) -> Result<Self> {
        let spec = DseSpec { cocycles, order };
        spec.validate()?;
        Ok(spec)
    }

    /// `X = 𝕀 + g B⁺_d(X²)`.
    pub fn single(d: Decoration, order: usize) -> Self {
        DseSpec {
            cocycles: vec![Cocycle::new(d, Q::one())],
            order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cocycles.is_empty() {
            return Err(Error::Invalid("a DSE needs at least one cocycle".into()));
        }
        if self.order < 1 {
            return Err(Error::Invalid("truncation order must be at least 1".into()));
        }
        if let Some(c) = self.cocycles.iter().find(|c| c.omega.is_zero()) {
            return Err(Error::Invalid(format!(
                "cocycle {} has zero weight",
                c.decoration
            )));
        }
        Ok(())
    }

    /// Insertion exponent of the `j`-th cocycle (1-based).
    pub fn exponent(j: usize) -> usize {
        j + 1
    }
}

/// JSON document accepted by the CLI: the DSE spec plus an optional coupling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DseDocument {
    pub cocycles: Vec<Cocycle>,
    pub order: usize,
    #[serde(with = "serde_q", default = "one_q")]
    pub coupling: Q,
}

fn one_q() -> Q {
    Q::one()
}

impl DseDocument {
    pub fn into_parts(self) -> Result<(DseSpec, Q)> {
        let spec = DseSpec::new(self.cocycles, self.order)?;
        check_coupling(&self.coupling)?;
        Ok((spec, self.coupling))
    }
}

fn check_coupling(c: &Q) -> Result<()> {
    if !c.is_positive() || *c > Q::one() {
        return Err(Error::Domain(fmt_q(c), "(0, 1]"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DseSolution {
    coefficients: Vec<ForestSum>,
    coupling: Q,
    spec: DseSpec,
}

impl DseSolution {
    pub fn coefficients(&self) -> &[ForestSum] {
        &self.coefficients
    }

    pub fn coefficient(&self, n: usize) -> &ForestSum {
        &self.coefficients[n]
    }

    pub fn coupling(&self) -> &Q {
        &self.coupling
    }

    pub fn spec(&self) -> &DseSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.spec.order
    }

    pub fn with_coupling(&self, coupling: Q) -> Result<DseSolution> {
        check_coupling(&coupling)?;
        Ok(DseSolution {
            coupling,
            ..self.clone()
        })
    }

    fn check_order(&self, m: usize) -> Result<()> {
        if m > self.spec.order {
            return Err(Error::TruncationExceeded {
                order: self.spec.order,
                requested: m,
            });
        }
        Ok(())
    }

    /// `Y_m = Σ_{n=1}^{m} (λg)^n X_n`.
    pub fn partial_sum(&self, m: usize) -> Result<ForestSum> {
        self.check_order(m)?;
        let mut out = ForestSum::zero();
        let mut power = Q::one();
        for n in 1..=m {
            power *= &self.coupling;
            out = out + self.coefficients[n].scale(&power);
        }
        Ok(out)
    }

    /// `Σ_{n=1}^{m} X_n`: the partial sum with the coupling stripped, whose
    /// coefficients stay integral.
    pub fn unweighted_partial_sum(&self, m: usize) -> Result<ForestSum> {
        self.check_order(m)?;
        Ok(self.coefficients[1..=m]
            .iter()
            .fold(ForestSum::zero(), |acc, x| &acc + x))
    }

    /// Multi-scale rescaling: the same coefficients at coupling `λ·(λg)`.
    pub fn rescale(&self, lambda: &Q) -> Result<DseSolution> {
        check_coupling(lambda)?;
        Ok(DseSolution {
            coupling: &self.coupling * lambda,
            ..self.clone()
        })
    }

    /// JSON: `{"spec": ..., "coupling": "p/q", "coefficients": [ForestSum, ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "coupling": fmt_q(&self.coupling),
            "coefficients": self.coefficients,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<DseSolution> {
        #[derive(Deserialize)]
        struct Raw {
            spec: DseSpec,
            #[serde(with = "serde_q")]
            coupling: Q,
            coefficients: Vec<ForestSum>,
        }
        let raw: Raw =
            serde_json::from_value(v.clone()).map_err(|e| Error::Invalid(e.to_string()))?;
        raw.spec.validate()?;
        check_coupling(&raw.coupling)?;
        if raw.coefficients.len() != raw.spec.order + 1 {
            return Err(Error::Invalid("coefficient count does not match order".into()));
        }
        Ok(DseSolution {
            coefficients: raw.coefficients,
            coupling: raw.coupling,
            spec: raw.spec,
        })
    }
}

/// Grade-`total` part of `(Σ_k xs[k])^parts`, i.e. the sum over all
/// compositions `k_1 + … + k_parts = total` of `xs[k_1]⋯xs[k_parts]`.
pub fn composition_sum(xs: &[ForestSum], parts: usize, total: usize) -> ForestSum {
    if parts == 0 {
        return if total == 0 {
            ForestSum::one()
        } else {
            ForestSum::zero()
        };
    }
    // acc[k] = grade-k part of the running power
    let mut acc: Vec<ForestSum> = (0..=total).map(|k| xs[k].clone()).collect();
    for _ in 1..parts {
        let mut next = vec![ForestSum::zero(); total + 1];
        for (a, pa) in acc.iter().enumerate() {
            if pa.is_zero() {
                continue;
            }
            for b in 0..=total - a {
                next[a + b] = &next[a + b] + &pa.product(&xs[b]);
            }
        }
        acc = next;
    }
    acc.swap_remove(total)
}

pub fn solve(spec: &DseSpec) -> Result<DseSolution> {
    solve_with_coupling(spec, Q::one())
}

pub fn solve_with_coupling(spec: &DseSpec, coupling: Q) -> Result<DseSolution> {
    spec.validate()?;
    check_coupling(&coupling)?;
    let mut xs = vec![ForestSum::one()];
    for n in 1..=spec.order {
        let mut xn = ForestSum::zero();
        for (idx, cocycle) in spec.cocycles.iter().enumerate().take(n) {
            let j = idx + 1;
            let inner = composition_sum(&xs, DseSpec::exponent(j), n - j);
            xn = xn + crate::hopf::graft(&cocycle.decoration, &inner).scale(&cocycle.omega);
        }
        xs.push(xn);
    }
    Ok(DseSolution {
        coefficients: xs,
        coupling,
        spec: spec.clone(),
    })
}

/// Monomial `X_{p_1} X_{p_2} ⋯` given by a partition (parts sorted
/// descending; the empty partition is `𝕀`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct XMonomial(pub Vec<usize>);

impl XMonomial {
    pub fn grade(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn evaluate(&self, xs: &[ForestSum]) -> ForestSum {
        self.0
            .iter()
            .fold(ForestSum::one(), |acc, &k| acc.product(&xs[k]))
    }
}

impl fmt::Display for XMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut counts: BTreeMap<std::cmp::Reverse<usize>, usize> = BTreeMap::new();
        for &p in &self.0 {
            *counts.entry(std::cmp::Reverse(p)).or_default() += 1;
        }
        let parts: Vec<String> = counts
            .into_iter()
            .map(|(std::cmp::Reverse(k), e)| {
                if e == 1 {
                    format!("X{k}")
                } else {
                    format!("X{k}^{e}")
                }
            })
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// Partitions of `n` into positive parts, each sorted descending.
pub fn partitions(n: usize) -> Vec<XMonomial> {
    fn go(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<XMonomial>) {
        if n == 0 {
            out.push(XMonomial(cur.clone()));
            return;
        }
        for p in (1..=max.min(n)).rev() {
            cur.push(p);
            go(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTerm {
    pub left: XMonomial,
    pub right: XMonomial,
    #[serde(with = "serde_q")]
    pub coef: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: usize,
    pub terms: Vec<WitnessTerm>,
    /// Whether the monomial tensors involved are linearly independent, so
    /// that the coefficients are forced.
    pub unique: bool,
}

impl Decomposition {
    /// Re-expands the decomposition into `H ⊗ H`.
    pub fn expand(&self, xs: &[ForestSum]) -> TensorSum {
        let mut out = TensorSum::zero();
        for t in &self.terms {
            let piece = TensorSum::tensor(&t.left.evaluate(xs), &t.right.evaluate(xs));
            out = &out + &piece.scale(&t.coef);
        }
        out
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Δ(X{}) = ", self.n)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if !t.coef.is_one() {
                write!(f, "{}*", fmt_q(&t.coef))?;
            }
            write!(f, "{}⊗{}", t.left, t.right)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubalgebraWitness {
    Decomposed(Decomposition),
    /// `Δ(X_n)` is not in `A ⊗ A`; carries the dimension of the spanning
    /// set that was tried.
    NotInSubalgebra { n: usize, basis_size: usize },
}

/// Expresses `Δ(X_n)` in the basis of monomial tensors `X_λ ⊗ X_μ` with
/// `|λ| + |μ| = n`, by an exact linear solve over the forest basis.
pub fn subalgebra_witness(sol: &DseSolution, n: usize) -> Result<SubalgebraWitness> {
    sol.check_order(n)?;
    let xs = sol.coefficients();
    let target = coproduct(&xs[n]);

    let mut basis: Vec<(XMonomial, XMonomial, TensorSum)> = Vec::new();
    for p in 0..=n {
        for left in partitions(p) {
            let lv = left.evaluate(xs);
            for right in partitions(n - p) {
                let t = TensorSum::tensor(&lv, &right.evaluate(xs));
                basis.push((left.clone(), right, t));
            }
        }
    }

    let mut rows: BTreeMap<(Forest, Forest), usize> = BTreeMap::new();
    let keys = basis
        .iter()
        .flat_map(|(_, _, t)| t.iter())
        .chain(target.iter())
        .map(|(l, r, _)| (l.clone(), r.clone()));
    for k in keys {
        let next = rows.len();
        rows.entry(k).or_insert(next);
    }
    let mut a = vec![vec![Q::zero(); basis.len()]; rows.len()];
    for (col, (_, _, t)) in basis.iter().enumerate() {
        for (l, r, c) in t.iter() {
            a[rows[&(l.clone(), r.clone())]][col] = c.clone();
        }
    }
    let mut b = vec![Q::zero(); rows.len()];
    for (l, r, c) in target.iter() {
        b[rows[&(l.clone(), r.clone())]] = c.clone();
    }

    let Some(x) = linalg::solve(&a, &b) else {
        return Ok(SubalgebraWitness::NotInSubalgebra {
            n,
            basis_size: basis.len(),
        });
    };
    let unique = linalg::rank(&a) == basis.len();
    let terms = basis
        .into_iter()
        .zip(x)
        .filter(|(_, c)| !c.is_zero())
        .map(|((left, right, _), coef)| WitnessTerm { left, right, coef })
        .collect();
    let dec = Decomposition { n, terms, unique };
    if dec.expand(xs) != target {
        return Err(Error::Inconsistent(format!(
            "decomposition of Δ(X{n}) does not re-expand to the coproduct"
        )));
    }
    Ok(SubalgebraWitness::Decomposed(dec))
}

/// One row of the solution summary table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradeSummary {
    pub grade: usize,
    pub monomials: usize,
    #[serde(with = "serde_q")]
    pub coefficient_sum: Q,
}

pub fn summary(sol: &DseSolution) -> Vec<GradeSummary> {
    sol.coefficients
        .iter()
        .enumerate()
        .map(|(grade, x)| GradeSummary {
            grade,
            monomials: x.len(),
            coefficient_sum: x.coefficient_sum(),
        })
        .collect()
}
