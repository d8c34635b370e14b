//! Infinite lower-triangular matrices given by entry rules.
//!
//! Entries above the diagonal are zero by construction, whatever the rule
//! says. Entries are memoized per triangle; triangles are cheap to clone and
//! safe to probe from several threads.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, RwLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{parse_matrix_expr, SeqExpr};
use crate::rational::Rational;
use crate::sequence::Sequence;
use crate::weights::Weights;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperatorKind {
    Factorable,
    Difference,
    GwmDelta,
    GwmDeltaInverse,
    Composed,
    Inverted,
    Custom,
}

/// How a triangle was built, for reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorDescriptor {
    pub kind: OperatorKind,
    pub label: String,
}

type EntryRule = dyn Fn(usize, usize) -> Result<Rational> + Send + Sync;

struct Inner {
    rule: Box<EntryRule>,
    diagonal_nonzero: bool,
    descriptor: OperatorDescriptor,
    memo: RwLock<HashMap<(usize, usize), Rational>>,
}

#[derive(Clone)]
pub struct Triangle {
    inner: Arc<Inner>,
}

impl fmt::Debug for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Triangle")
            .field("descriptor", &self.inner.descriptor)
            .field("diagonal_nonzero", &self.inner.diagonal_nonzero)
            .finish()
    }
}

impl Triangle {
    /// Wraps an entry rule; the rule is only ever called with `k <= n`.
    pub fn new<F>(kind: OperatorKind, label: impl Into<String>, diagonal_nonzero: bool, rule: F) -> Self
    where
        F: Fn(usize, usize) -> Result<Rational> + Send + Sync + 'static,
    {
        Triangle {
            inner: Arc::new(Inner {
                rule: Box::new(rule),
                diagonal_nonzero,
                descriptor: OperatorDescriptor {
                    kind,
                    label: label.into(),
                },
                memo: RwLock::new(HashMap::new()),
            }),
        }
    }

    pub fn descriptor(&self) -> &OperatorDescriptor {
        &self.inner.descriptor
    }

    pub fn diagonal_nonzero(&self) -> bool {
        self.inner.diagonal_nonzero
    }

    pub fn entry(&self, n: usize, k: usize) -> Result<Rational> {
        if k > n {
            return Ok(Rational::zero());
        }
        if let Some(v) = self.inner.memo.read().expect("memo poisoned").get(&(n, k)) {
            return Ok(v.clone());
        }
        let v = (self.inner.rule)(n, k)?;
        if n == k && self.inner.diagonal_nonzero && v.is_zero() {
            return Err(Error::ZeroDiagonal { row: n });
        }
        self.inner.memo.write().expect("memo poisoned").insert((n, k), v.clone());
        Ok(v)
    }

    /// Row `n`, entries `0..=n`.
    pub fn row(&self, n: usize) -> Result<Vec<Rational>> {
        (0..=n).map(|k| self.entry(n, k)).collect()
    }

    /// Column `k`, rows `0..=upto` (zeros above the diagonal included).
    pub fn column(&self, k: usize, upto: usize) -> Result<Sequence> {
        let col: Vec<Rational> = (0..=upto).map(|n| self.entry(n, k)).collect::<Result<_>>()?;
        Ok(Sequence::finite(col))
    }

    /// `(Ax)_n = Σ_{k≤n} a_nk x_k`
    pub fn apply(&self, x: &Sequence, n: usize) -> Result<Rational> {
        let mut acc = Rational::zero();
        for k in 0..=n {
            let a = self.entry(n, k)?;
            if !a.is_zero() {
                acc += a * x.at(k)?;
            }
        }
        Ok(acc)
    }

    /// The sequence `Ax`, evaluated lazily.
    pub fn apply_seq(&self, x: &Sequence) -> Sequence {
        let (a, x) = (self.clone(), x.clone());
        Sequence::from_fn(format!("{}·{}", self.descriptor().label, x.label()), move |n| a.apply(&x, n))
    }

    pub fn identity() -> Self {
        Triangle::new(OperatorKind::Custom, "identity", true, |n, k| {
            Ok(if n == k { Rational::one() } else { Rational::zero() })
        })
    }

    /// The factorable matrix `G(u,v)`: `g_nk = u_n v_k` for `k <= n`.
    pub fn factorable(w: &Weights) -> Self {
        let w2 = w.clone();
        Triangle::new(
            OperatorKind::Factorable,
            format!("G({})", w.describe()),
            true,
            move |n, k| Ok(w2.u(n)? * w2.v(k)?),
        )
    }

    /// Cumulative sum, `G(e,e)`.
    pub fn summation() -> Self {
        Triangle::factorable(&Weights::trivial())
    }

    /// `Δ`: 1 on the diagonal, -1 just below it.
    pub fn difference() -> Self {
        Triangle::new(OperatorKind::Difference, "Delta", true, |n, k| {
            Ok(if n == k {
                Rational::one()
            } else if n == k + 1 {
                -Rational::one()
            } else {
                Rational::zero()
            })
        })
    }

    /// `(AB)(n,k) = Σ_{j=k}^{n} A(n,j) B(j,k)`
    pub fn compose(a: &Triangle, b: &Triangle) -> Self {
        let label = format!("({})·({})", a.descriptor().label, b.descriptor().label);
        let diag = a.diagonal_nonzero() && b.diagonal_nonzero();
        let (a, b) = (a.clone(), b.clone());
        Triangle::new(OperatorKind::Composed, label, diag, move |n, k| {
            let mut acc = Rational::zero();
            for j in k..=n {
                let x = a.entry(n, j)?;
                if !x.is_zero() {
                    acc += x * b.entry(j, k)?;
                }
            }
            Ok(acc)
        })
    }

    /// Two-sided inverse by forward substitution:
    /// `T(n,n) = 1/A(n,n)` and `T(n,k) = -(1/A(n,n)) Σ_{j=k}^{n-1} A(n,j) T(j,k)`.
    ///
    /// Columns are memoized whole, so probing rows up to `H` costs `O(H²)`
    /// entry products per column.
    pub fn invert(a: &Triangle) -> Result<Self> {
        if !a.diagonal_nonzero() {
            return Err(Error::InvalidArgument(format!(
                "`{}` is not declared to have a nonzero diagonal",
                a.descriptor().label
            )));
        }
        let label = format!("inv({})", a.descriptor().label);
        let a = a.clone();
        let columns: Mutex<HashMap<usize, Vec<Rational>>> = Mutex::new(HashMap::new());
        Ok(Triangle::new(OperatorKind::Inverted, label, true, move |n, k| {
            let mut cols = columns.lock().expect("inverse columns poisoned");
            let col = cols.entry(k).or_default();
            while k + col.len() <= n {
                let m = k + col.len();
                let diag = a.entry(m, m)?;
                if diag.is_zero() {
                    return Err(Error::ZeroDiagonal { row: m });
                }
                let next = if m == k {
                    diag.recip()
                } else {
                    let mut acc = Rational::zero();
                    for j in k..m {
                        let x = a.entry(m, j)?;
                        if !x.is_zero() {
                            acc += x * &col[j - k];
                        }
                    }
                    -acc / diag
                };
                col.push(next);
            }
            Ok(col[n - k].clone())
        }))
    }

    /// The operator `G(u,v)·Δ` in closed form: `u_n (v_i - v_{i+1})` below
    /// the diagonal and `u_n v_n` on it.
    pub fn gwm_delta(w: &Weights) -> Self {
        let w2 = w.clone();
        Triangle::new(
            OperatorKind::GwmDelta,
            format!("G({})·Delta", w.describe()),
            true,
            move |n, i| {
                if i == n {
                    Ok(w2.u(n)? * w2.v(n)?)
                } else {
                    Ok(w2.u(n)? * w2.nabla_v(i)?)
                }
            },
        )
    }

    /// Closed-form inverse of [`Triangle::gwm_delta`]:
    /// `(1/u_i)(1/v_i - 1/v_{i+1})` below the diagonal and `1/(u_k v_k)` on it.
/// The `u` factor follows the column index; with a row-indexed `u` the
/// product with the forward operator is not the identity unless `u` is constant.
    pub fn gwm_delta_inverse(w: &Weights) -> Self {
        let w2 = w.clone();
        Triangle::new(
            OperatorKind::GwmDeltaInverse,
            format!("inv(G({})·Delta)", w.describe()),
            true,
            move |k, i| {
                if i == k {
                    Ok(w2.inv_u(k)? * w2.inv_v(k)?)
                } else {
                    Ok(w2.inv_u(i)? * w2.nabla_inv_v(i)?)
                }
            },
        )
    }

    /// A custom triangle from a matrix expression in `n` and `k`; entries
    /// with `k > n` are zero regardless of the expression.
    pub fn from_expr(expr: SeqExpr, diagonal_nonzero: bool) -> Self {
        let label = expr.to_string();
        Triangle::new(OperatorKind::Custom, label, diagonal_nonzero, move |n, k| expr.eval_at(n, k))
    }

    pub fn parse(text: &str, diagonal_nonzero: bool) -> Result<Self> {
        Ok(Triangle::from_expr(parse_matrix_expr(text)?, diagonal_nonzero))
    }
}

/// Solves `A z = rhs` on the leading `(m+1)×(m+1)` block by forward substitution.
pub fn solve_leading_block(a: &Triangle, rhs: &[Rational]) -> Result<Vec<Rational>> {
    let mut z: Vec<Rational> = Vec::with_capacity(rhs.len());
    for (n, r) in rhs.iter().enumerate() {
        let diag = a.entry(n, n)?;
        if diag.is_zero() {
            return Err(Error::ZeroDiagonal { row: n });
        }
        let mut acc = r.clone();
        for (k, zk) in z.iter().enumerate() {
            let x = a.entry(n, k)?;
            if !x.is_zero() {
                acc -= x * zk;
            }
        }
        z.push(acc / diag);
    }
    Ok(z)
}
