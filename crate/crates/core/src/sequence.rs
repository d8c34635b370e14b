//! Rule-based infinite sequences of rationals.
//!
//! A [`Sequence`] is a shared, immutable rule `k -> Rational` with a
//! per-sequence memo table. Terms with a negative subscript are zero.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, RwLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Builtin, SeqExpr};
use crate::rational::Rational;

type Rule = dyn Fn(usize) -> Result<Rational> + Send + Sync;

struct Inner {
    rule: Box<Rule>,
    descriptor: Option<SeqExpr>,
    label: String,
    memo: RwLock<HashMap<usize, Rational>>,
    cap: Option<usize>,
}

#[derive(Clone)]
pub struct Sequence {
    inner: Arc<Inner>,
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sequence").field("label", &self.inner.label).finish()
    }
}

impl Sequence {
    pub fn from_fn<F>(label: impl Into<String>, rule: F) -> Self
    where
        F: Fn(usize) -> Result<Rational> + Send + Sync + 'static,
    {
        Self::build(label.into(), None, None, Box::new(rule))
    }

    /// Like [`Sequence::from_fn`] but memoizes at most `cap` terms.
    pub fn from_fn_capped<F>(label: impl Into<String>, cap: usize, rule: F) -> Self
    where
        F: Fn(usize) -> Result<Rational> + Send + Sync + 'static,
    {
        Self::build(label.into(), None, Some(cap), Box::new(rule))
    }

    fn build(label: String, descriptor: Option<SeqExpr>, cap: Option<usize>, rule: Box<Rule>) -> Self {
        Sequence {
            inner: Arc::new(Inner {
                rule,
                descriptor,
                label,
                memo: RwLock::new(HashMap::new()),
                cap,
            }),
        }
    }

    pub fn from_expr(expr: SeqExpr) -> Self {
        let label = expr.to_string();
        let rule_expr = expr.clone();
        Self::build(label, Some(expr), None, Box::new(move |k| rule_expr.eval(k)))
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_expr(text).map(Self::from_expr)
    }

    /// Finitely many given terms followed by `fill` forever.
    pub fn from_prefix(label: impl Into<String>, terms: Vec<Rational>, fill: Rational) -> Self {
        Self::from_fn(label, move |k| Ok(terms.get(k).cloned().unwrap_or_else(|| fill.clone())))
    }

    /// Finitely supported sequence with the given leading terms.
    pub fn finite(terms: Vec<Rational>) -> Self {
        Self::from_prefix("finite", terms, Rational::zero())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_fn(format!("const({})", c), move |_| Ok(c.clone()))
    }

    pub fn zero() -> Self {
        Self::from_expr(SeqExpr::Num(Rational::zero()))
    }

    /// `e = (1, 1, 1, ...)`
    pub fn ones() -> Self {
        Self::from_expr(SeqExpr::Builtin(Builtin::E))
    }

    pub fn harmonic() -> Self {
        Self::from_expr(SeqExpr::Builtin(Builtin::Harmonic))
    }

    /// `(1, 2, 3, ...)`
    pub fn enumerate() -> Self {
        Self::from_expr(SeqExpr::Builtin(Builtin::Enumerate))
    }

    pub fn geometric(r: Rational) -> Self {
        Self::from_expr(SeqExpr::Builtin(Builtin::Geometric(r)))
    }

    /// The unit sequence `e^(j)`.
    pub fn unit(j: usize) -> Self {
        Self::from_expr(SeqExpr::Builtin(Builtin::Unit(j as u64)))
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn descriptor(&self) -> Option<&SeqExpr> {
        self.inner.descriptor.as_ref()
    }

    /// Term `k`; zero for `k < 0`.
    pub fn eval(&self, k: i64) -> Result<Rational> {
        if k < 0 {
            return Ok(Rational::zero());
        }
        self.at(k as usize)
    }

    pub fn at(&self, k: usize) -> Result<Rational> {
        if let Some(v) = self.inner.memo.read().expect("memo poisoned").get(&k) {
            return Ok(v.clone());
        }
        let v = (self.inner.rule)(k)?;
        let mut memo = self.inner.memo.write().expect("memo poisoned");
        if self.inner.cap.is_none_or(|cap| memo.len() < cap) {
            memo.insert(k, v.clone());
        }
        Ok(v)
    }

    /// Terms `0..len`.
    pub fn prefix(&self, len: usize) -> Result<Vec<Rational>> {
        (0..len).map(|k| self.at(k)).collect()
    }

    pub fn memo_len(&self) -> usize {
        self.inner.memo.read().expect("memo poisoned").len()
    }

    /// `(Δs)_k = s_k - s_{k-1}`, so `(Δs)_0 = s_0`.
    pub fn delta(&self) -> Sequence {
        let s = self.clone();
        Self::from_fn(format!("delta({})", self.label()), move |k| {
            Ok(s.at(k)? - s.eval(k as i64 - 1)?)
        })
    }

    /// `(∇s)_i = s_i - s_{i+1}`.
    pub fn nabla(&self) -> Sequence {
        let s = self.clone();
        Self::from_fn(format!("nabla({})", self.label()), move |i| Ok(s.at(i)? - s.at(i + 1)?))
    }

    /// `shift(s, d)_k = s_{k-d}` (with the negative-subscript convention).
    pub fn shift(&self, d: usize) -> Sequence {
        let s = self.clone();
        Self::from_fn(format!("shift({}, {})", self.label(), d), move |k| s.eval(k as i64 - d as i64))
    }

    pub fn scale(&self, c: &Rational) -> Sequence {
        let s = self.clone();
        let c = c.clone();
        Self::from_fn(format!("{}*{}", c, self.label()), move |k| Ok(&c * s.at(k)?))
    }

    pub fn add(&self, other: &Sequence) -> Sequence {
        let (a, b) = (self.clone(), other.clone());
        Self::from_fn(format!("({} + {})", a.label(), b.label()), move |k| Ok(a.at(k)? + b.at(k)?))
    }

    pub fn sub(&self, other: &Sequence) -> Sequence {
        let (a, b) = (self.clone(), other.clone());
        Self::from_fn(format!("({} - {})", a.label(), b.label()), move |k| Ok(a.at(k)? - b.at(k)?))
    }

    /// Termwise product.
    pub fn mul(&self, other: &Sequence) -> Sequence {
        let (a, b) = (self.clone(), other.clone());
        Self::from_fn(format!("({} * {})", a.label(), b.label()), move |k| Ok(a.at(k)? * b.at(k)?))
    }

    /// Termwise reciprocal; a zero term is a division-by-zero error.
    pub fn recip(&self) -> Sequence {
        let s = self.clone();
        Self::from_fn(format!("1/{}", self.label()), move |k| {
            let v = s.at(k)?;
            if v.is_zero() {
                Err(Error::DivisionByZero { index: k })
            } else {
                Ok(v.recip())
            }
        })
    }

    /// `P_m = Σ_{i≤m} s_i`, computed incrementally so deep terms cost
    /// amortized O(1) each.
    pub fn partial_sums(&self) -> Sequence {
        let s = self.clone();
        let table: Mutex<Vec<Rational>> = Mutex::new(Vec::new());
        Self::from_fn_capped(format!("partial_sums({})", self.label()), 0, move |m| {
            let mut t = table.lock().expect("partial sums poisoned");
            while t.len() <= m {
                let next = t.last().cloned().unwrap_or_else(Rational::zero) + s.at(t.len())?;
                t.push(next);
            }
            Ok(t[m].clone())
        })
    }

    /// `Σ_j c_j s^(j)` over finitely many sequences.
    pub fn linear_combination(terms: Vec<(Rational, Sequence)>) -> Sequence {
        Self::from_fn("linear_combination", move |k| {
            let mut acc = Rational::zero();
            for (c, s) in &terms {
                if !c.is_zero() {
                    acc += c * s.at(k)?;
                }
            }
            Ok(acc)
        })
    }

    /// True when `self` is the constant-one sequence by construction.
    pub fn is_ones(&self) -> bool {
        matches!(self.descriptor(), Some(SeqExpr::Builtin(Builtin::E)))
            || matches!(self.descriptor(), Some(SeqExpr::Num(r)) if r.is_one())
    }
}
