//! Matrix classes `(c(u,v,Δ) : ℓ∞)` and `(c(u,v,Δ) : c)`.
//!
//! For `x = inverse_transform(w, y)` the row sums of `A x` become
//! `Σ_k D(n,k) y_k` with `D = A · inv`, that is
//!
//! `D(n,k) = (1/u_k) [a_nk / v_k + (1/v_k - 1/v_{k+1}) Σ_{j=k+1}^{J} a_nj]`,
//!
//! where `J` is the declared support of row `n`, or a caller-chosen tail
//! horizon when the matrix is not row-finite. The class conditions are
//! classical conditions on `D`:
//!
//! | key   | condition                                  |
//! |-------|--------------------------------------------|
//! | `4.1` | `sup_n Σ_k |D(n,k)| < ∞`                   |
//! | `4.2` | `lim_n D(n,k)` exists for every column `k` |
//! | `4.3` | `Σ_k |D(n,k)| < ∞` for every row `n`       |
//! | `4.4` | `lim_n Σ_k D(n,k)` exists                  |
//! | `4.6` | that limit, reported as `α`                |
//! | `4.7` | the column limits, reported as `α_k`       |

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{ToPrimitive, Zero};

use crate::conditions::{
    bounded_rows, column_limits, limit_equals, mul0, probe_columns, row_sum_limit, subset_levels,
    subset_sup, CompensatedSum, Escalated, RowSource, RowTable, WeightTable,
};
use crate::error::{Error, Result};
use crate::expr::{parse_matrix_expr, SeqExpr};
use crate::rational::{render_f64, to_f64, Rational};
use crate::triangle::Triangle;
use crate::verdict::{limit_probe_samples, Evidence, ProbeConfig, Verdict};
use crate::weights::Weights;

type EntryRule = dyn Fn(usize, usize) -> Result<Rational> + Send + Sync;
type SupportRule = dyn Fn(usize) -> Result<usize> + Send + Sync;

struct Inner {
    label: String,
    rule: Box<EntryRule>,
    support: Option<Box<SupportRule>>,
    /// Only `(n, n)` can be nonzero.
    diagonal: bool,
    /// Set when rows were cut off at this column instead of a declared support.
    truncated_at: Option<usize>,
}

/// An infinite matrix given by an exact entry rule, optionally row-finite.
#[derive(Clone)]
pub struct InfiniteMatrix {
    inner: Arc<Inner>,
}

impl fmt::Debug for InfiniteMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InfiniteMatrix")
            .field("label", &self.inner.label)
            .field("row_finite", &self.is_row_finite())
            .finish()
    }
}

impl InfiniteMatrix {
    /// A matrix with no declared row support.
    pub fn from_fn<F>(label: impl Into<String>, rule: F) -> Self
    where
        F: Fn(usize, usize) -> Result<Rational> + Send + Sync + 'static,
    {
        Self::build(label.into(), Box::new(rule), None, false, None)
    }

    /// A row-finite matrix: `entry(n,k) = 0` for `k > support(n)`.
    pub fn row_finite<F, S>(label: impl Into<String>, rule: F, support: S) -> Self
    where
        F: Fn(usize, usize) -> Result<Rational> + Send + Sync + 'static,
        S: Fn(usize) -> Result<usize> + Send + Sync + 'static,
    {
        Self::build(label.into(), Box::new(rule), Some(Box::new(support)), false, None)
    }

    fn build(
        label: String,
        rule: Box<EntryRule>,
        support: Option<Box<SupportRule>>,
        diagonal: bool,
        truncated_at: Option<usize>,
    ) -> Self {
        InfiniteMatrix {
            inner: Arc::new(Inner {
                label,
                rule,
                support,
                diagonal,
                truncated_at,
            }),
        }
    }

    pub fn identity() -> Self {
        Self::diagonal_from("identity", |_| Ok(Rational::from_integer(1.into())))
    }

    /// The Cesàro means `C₁`: `1/(n+1)` for `k ≤ n`.
    pub fn cesaro() -> Self {
        Self::row_finite(
            "cesaro",
            |n, k| {
                Ok(if k <= n {
                    Rational::new(1.into(), (n as u64 + 1).into())
                } else {
                    Rational::zero()
                })
            },
            Ok,
        )
    }

    pub fn zero() -> Self {
        Self::row_finite("zero", |_, _| Ok(Rational::zero()), |_| Ok(0))
    }

    /// `diag(d(n))`, where `d` may use `n` or `k` (both equal on the diagonal).
    pub fn diagonal(d: SeqExpr) -> Self {
        let label = format!("diagonal({})", d);
        Self::diagonal_from(label, move |n| d.eval_at(n, n))
    }

    fn diagonal_from<F>(label: impl Into<String>, d: F) -> Self
    where
        F: Fn(usize) -> Result<Rational> + Send + Sync + 'static,
    {
        Self::build(
            label.into(),
            Box::new(move |n, k| if n == k { d(n) } else { Ok(Rational::zero()) }),
            Some(Box::new(Ok)),
            true,
            None,
        )
    }

    /// A matrix from the two-variable DSL; entries above the diagonal are
    /// taken as zero.
    pub fn lower_triangular(expr: SeqExpr) -> Self {
        let label = expr.to_string();
        Self::row_finite(
            label,
            move |n, k| if k <= n { expr.eval_at(n, k) } else { Ok(Rational::zero()) },
            Ok,
        )
    }

    /// A builtin name (`identity`, `cesaro`, `zero`, `diagonal(expr)`) or a
    /// two-variable expression. `support` is an optional expression in `n`
    /// giving the last nonzero column of row `n`; without it an expression
    /// matrix is treated as dense.
    pub fn parse(text: &str, support: Option<&str>) -> Result<Self> {
        let t = text.trim();
        match t {
            "identity" => return Ok(Self::identity()),
            "cesaro" => return Ok(Self::cesaro()),
            "zero" => return Ok(Self::zero()),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix("diagonal(").and_then(|r| r.strip_suffix(')')) {
            let offset = t.len() - inner.len() - 1;
            let d = parse_matrix_expr(inner).map_err(|e| shift_position(e, offset))?;
            return Ok(Self::diagonal(d));
        }
        let expr = parse_matrix_expr(t)?;
        let label = expr.to_string();
        let rule = move |n: usize, k: usize| expr.eval_at(n, k);
        match support {
            None => Ok(Self::from_fn(label, rule)),
            Some(s) => {
                let sexpr =
                    parse_matrix_expr(s).map_err(|e| Error::InvalidArgument(format!("row support: {}", e)))?;
                let support = move |n: usize| support_value(&sexpr, n);
                Ok(Self::row_finite(label, rule, support))
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn is_row_finite(&self) -> bool {
        self.inner.support.is_some() && self.inner.truncated_at.is_none()
    }

    /// The column at which rows were cut off, for matrices that are only
    /// approximately row-finite.
    pub fn truncated_at(&self) -> Option<usize> {
        self.inner.truncated_at
    }

    pub fn entry(&self, n: usize, k: usize) -> Result<Rational> {
        (self.inner.rule)(n, k)
    }

    /// The last column of row `n` that is scanned: the declared support, or
    /// `tail_horizon` when there is none.
    pub fn row_end(&self, n: usize, tail_horizon: usize) -> Result<usize> {
        match &self.inner.support {
            Some(s) => s(n),
            None => Ok(tail_horizon),
        }
    }

    /// Entries `0..=row_end(n)` of row `n`.
    pub fn row(&self, n: usize, tail_horizon: usize) -> Result<Vec<Rational>> {
        let end = self.row_end(n, tail_horizon)?;
        if self.inner.diagonal {
            let mut r = vec![Rational::zero(); end + 1];
            if n <= end {
                r[n] = self.entry(n, n)?;
            }
            return Ok(r);
        }
        (0..=end).map(|k| self.entry(n, k)).collect()
    }

    fn row_f64(&self, n: usize, tail_horizon: usize) -> Result<Vec<f64>> {
        let end = self.row_end(n, tail_horizon)?;
        if self.inner.diagonal {
            let mut r = vec![0.0; end + 1];
            if n <= end {
                r[n] = to_f64(&self.entry(n, n)?);
            }
            return Ok(r);
        }
        (0..=end).map(|k| Ok(to_f64(&self.entry(n, k)?))).collect()
    }

    /// Checks that the entries just past the declared support of the given
    /// rows vanish.
    pub fn check_support(&self, rows: impl IntoIterator<Item = usize>) -> Result<()> {
        if self.inner.support.is_none() || self.inner.truncated_at.is_some() {
            return Ok(());
        }
        for n in rows {
            let end = self.row_end(n, 0)?;
            for k in end + 1..=end + 8 {
                if !self.entry(n, k)?.is_zero() {
                    return Err(Error::InvalidArgument(format!(
                        "{}: entry ({}, {}) is nonzero beyond the declared support {}",
                        self.label(),
                        n,
                        k,
                        end
                    )));
                }
            }
        }
        Ok(())
    }
}

fn shift_position(e: Error, offset: usize) -> Error {
    match e {
        Error::Syntax { pos, msg } => Error::Syntax { pos: pos + offset, msg },
        Error::UnknownName { pos, name } => Error::UnknownName { pos: pos + offset, name },
        other => other,
    }
}

fn support_value(expr: &SeqExpr, n: usize) -> Result<usize> {
    let v = expr.eval_at(n, 0)?;
    if !v.is_integer() {
        return Err(Error::InvalidArgument(format!("row support at n = {} is {}, not an integer", n, v)));
    }
    v.to_integer()
        .to_usize()
        .ok_or_else(|| Error::InvalidArgument(format!("row support at n = {} is {}, not a column index", n, v)))
}

/// `D = A · inv`, exact. Rows are computed whole and cached. Without a
/// declared support the rows of `A` are cut at `tail_horizon` and the
/// result reports [`InfiniteMatrix::truncated_at`].
pub fn dual_transform(a: &InfiniteMatrix, w: &Weights, tail_horizon: usize) -> InfiniteMatrix {
    let cache: Arc<RwLock<HashMap<usize, Arc<Vec<Rational>>>>> = Arc::default();
    let (a2, w2) = (a.clone(), w.clone());
    let row = move |n: usize| -> Result<Arc<Vec<Rational>>> {
        if let Some(r) = cache.read().expect("row cache poisoned").get(&n) {
            return Ok(r.clone());
        }
        let an = a2.row(n, tail_horizon)?;
        let mut d = vec![Rational::zero(); an.len()];
        let mut tail = Rational::zero();
        for k in (0..an.len()).rev() {
            let mut inner = &an[k] * w2.inv_v(k)?;
            if !tail.is_zero() {
                inner += w2.nabla_inv_v(k)? * &tail;
            }
            if !inner.is_zero() {
                d[k] = w2.inv_u(k)? * inner;
            }
            tail += &an[k];
        }
        let d = Arc::new(d);
        cache.write().expect("row cache poisoned").insert(n, d.clone());
        Ok(d)
    };
    let label = format!("D[{}]({})", a.label(), w.describe());
    let truncated_at = if a.is_row_finite() { None } else { Some(tail_horizon) };
    let a3 = a.clone();
    let support = move |n: usize| a3.row_end(n, tail_horizon);
    InfiniteMatrix::build(
        label,
        Box::new(move |n, k| Ok(row(n)?.get(k).cloned().unwrap_or_else(Rational::zero))),
        Some(Box::new(support)),
        false,
        truncated_at,
    )
}

/// Row `n` of the truncated product `A · inv`, summing over `j ≤ row_end(n)`.
pub fn truncated_product_row(a: &InfiniteMatrix, w: &Weights, n: usize, tail_horizon: usize) -> Result<Vec<Rational>> {
    let inv = Triangle::gwm_delta_inverse(w);
    let an = a.row(n, tail_horizon)?;
    (0..an.len())
        .map(|k| {
            let mut acc = Rational::zero();
            for (j, x) in an.iter().enumerate().skip(k) {
                if !x.is_zero() {
                    acc += x * inv.entry(j, k)?;
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Rows of `D` in `f64`.
struct DualRows {
    a: InfiniteMatrix,
    t: WeightTable,
    tail_horizon: usize,
}

impl RowSource for DualRows {
    fn row(&self, n: usize) -> Result<Vec<f64>> {
        let an = self.a.row_f64(n, self.tail_horizon)?;
        let mut d = vec![0.0; an.len()];
        let mut tail = CompensatedSum::default();
        for k in (0..an.len()).rev() {
            let inner = mul0(an[k], self.t.inv_v[k]) + mul0(self.t.nabla_inv_v[k], tail.value());
            d[k] = mul0(self.t.inv_u[k], inner);
            tail.add(an[k]);
        }
        Ok(d)
    }
}

/// Rows of `A` itself in `f64`.
struct PlainRows {
    a: InfiniteMatrix,
    tail_horizon: usize,
}

impl RowSource for PlainRows {
    fn row(&self, n: usize) -> Result<Vec<f64>> {
        self.a.row_f64(n, self.tail_horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    IntoEllInfinity,
    IntoC,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::IntoEllInfinity => "into_ell_infinity",
            Target::IntoC => "into_c",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub target: Target,
    /// Keyed `4.1`..`4.4`, plus `4.6` and `4.7` for [`Target::IntoC`].
    pub conditions: BTreeMap<String, Verdict>,
    /// `lim_n Σ_k D(n,k)`, extrapolated from the probes.
    pub alpha: Option<f64>,
    /// `lim_n D(n,k)` for each probed column.
    pub alpha_k: Vec<(usize, Option<f64>)>,
    /// Column at which rows of a non-row-finite matrix were cut off.
    pub truncated_tail: Option<usize>,
    pub overall: Verdict,
    /// For a `Holds` into `c`: does `(A x)_n` settle for a sample convergent
    /// `y`? Evidence only; never changes `overall`.
    pub consistency: Option<Verdict>,
}

impl ClassificationReport {
    pub fn to_json(&self) -> serde_json::Value {
        let conditions: serde_json::Map<String, serde_json::Value> =
            self.conditions.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        let alpha_k: Vec<serde_json::Value> = self
            .alpha_k
            .iter()
            .map(|(k, l)| serde_json::json!({ "column": k, "alpha_k_approx": l.map(render_f64) }))
            .collect();
        let mut m = serde_json::Map::new();
        m.insert("target".into(), self.target.name().into());
        m.insert("conditions".into(), conditions.into());
        m.insert("alpha_approx".into(), self.alpha.map(render_f64).into());
        m.insert("alpha_k".into(), alpha_k.into());
        m.insert("approximate_tail".into(), self.truncated_tail.into());
        m.insert("overall".into(), self.overall.to_json());
        if let Some(c) = &self.consistency {
            m.insert("consistency".into(), c.to_json());
        }
        serde_json::Value::Object(m)
    }
}

fn dual_table(a: &InfiniteMatrix, w: &Weights, cfg: &ProbeConfig, tail_horizon: usize) -> Result<RowTable> {
    let deep = cfg.doubled();
    a.check_support([0, 1, 2, cfg.horizon, deep.horizon])?;
    let mut idx = cfg.sample_indices();
    idx.extend(deep.sample_indices());
    let mut width = 0;
    for &n in &idx {
        width = width.max(a.row_end(n, tail_horizon)?);
    }
    let src = DualRows {
        a: a.clone(),
        t: WeightTable::build(w, width + 1)?,
        tail_horizon,
    };
    RowTable::for_levels(&src, cfg)
}

/// `4.3`: every row of `D` has a finite absolute sum.
fn rows_finite(a: &InfiniteMatrix, table: &RowTable, cfg: &ProbeConfig) -> Verdict {
    if a.is_row_finite() {
        return Verdict::holds(Evidence {
            horizon: cfg.horizon,
            note: "rows are finitely supported".into(),
            ..Evidence::default()
        });
    }
    let rows = [0, 1, 2, cfg.horizon];
    let verdicts: Vec<Verdict> = rows
        .iter()
        .filter_map(|&n| table.row(n).map(|r| (n, r)))
        .map(|(n, r)| {
            let mut acc = CompensatedSum::default();
            let partial: Vec<(usize, f64)> = r
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    acc.add(x.abs());
                    (k, acc.value())
                })
                .collect();
            let rc = ProbeConfig {
                horizon: partial.len().saturating_sub(1),
                ..*cfg
            };
            if rc.validate().is_err() {
                return Verdict::inconclusive(Evidence {
                    horizon: rc.horizon,
                    note: format!("row {} too short to judge its tail", n),
                    ..Evidence::default()
                });
            }
            let mut v = limit_probe_samples(&partial, &rc);
            v.evidence.note = format!("row {}: {}", n, v.evidence.note);
            v
        })
        .collect();
    Verdict::all(&verdicts)
}

fn classify(a: &InfiniteMatrix, w: &Weights, cfg: &ProbeConfig, tail_horizon: usize, target: Target) -> Result<ClassificationReport> {
    cfg.validate()?;
    let table = dual_table(a, w, cfg, tail_horizon)?;
    let mut conditions = BTreeMap::new();
    conditions.insert("4.1".to_string(), bounded_rows(&table, cfg).verdict());
    let (cols, per) = column_limits(&table, &probe_columns(cfg.horizon), cfg);
    conditions.insert("4.2".to_string(), cols.clone());
    conditions.insert("4.3".to_string(), rows_finite(a, &table, cfg));
    let sums = row_sum_limit(&table, cfg);
    conditions.insert("4.4".to_string(), sums.verdict_with_limit());
    if target == Target::IntoC {
        let mut alpha = sums.verdict_with_limit();
        alpha.evidence.note = format!("α: {}", alpha.evidence.note);
        conditions.insert("4.6".to_string(), alpha);
        let mut ak = cols;
        ak.evidence.note = format!("α_k: {}", ak.evidence.note);
        conditions.insert("4.7".to_string(), ak);
    }
    let overall = Verdict::all(conditions.values());
    let consistency = if target == Target::IntoC && overall.is_holds() {
        let deep = cfg.doubled().horizon;
        let width = table.row(deep).map_or(0, |r| r.len());
        let y: Vec<f64> = (0..width).map(|k| 1.0 + 1.0 / (k as f64 + 1.0)).collect();
        let mut v = Escalated::run(cfg, |c| limit_probe_samples(&table.apply(&y, &c.sample_indices()), c)).verdict();
        let tag = if v.is_fails() { "flagged: " } else { "" };
        v.evidence.note = format!("{}(Ax)_n for a sample x with convergent transform: {}", tag, v.evidence.note);
        Some(v)
    } else {
        None
    };
    Ok(ClassificationReport {
        target,
        conditions,
        alpha: sums.limit(),
        alpha_k: per.into_iter().map(|c| (c.column, c.estimate)).collect(),
        truncated_tail: if a.is_row_finite() { None } else { Some(tail_horizon) },
        overall,
        consistency,
    })
}

/// `A ∈ (c(u,v,Δ) : ℓ∞)`: conditions `4.1`–`4.4` on `D`.
pub fn classify_into_linf(a: &InfiniteMatrix, w: &Weights, cfg: &ProbeConfig, tail_horizon: usize) -> Result<ClassificationReport> {
    classify(a, w, cfg, tail_horizon, Target::IntoEllInfinity)
}

/// `A ∈ (c(u,v,Δ) : c)`: `4.1`–`4.4`, `4.6` and `4.7`, with `α` and `α_k` extracted.
pub fn classify_into_c(a: &InfiniteMatrix, w: &Weights, cfg: &ProbeConfig, tail_horizon: usize) -> Result<ClassificationReport> {
    classify(a, w, cfg, tail_horizon, Target::IntoC)
}

/// Classical conditions evaluated on `A` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToeplitzCondition {
    /// `sup_K Σ_n |Σ_{k∈K} a_nk| < ∞`
    C0ToL1,
    /// bounded row absolute sums and columnwise limits
    C0ToC,
    /// bounded row absolute sums
    C0ToLinf,
    /// `C0ToC` with every column limit and the row-sum limit equal to zero
    C0ToCNull,
}

impl ToeplitzCondition {
    pub fn name(self) -> &'static str {
        match self {
            ToeplitzCondition::C0ToL1 => "c0_to_l1",
            ToeplitzCondition::C0ToC => "c0_to_c",
            ToeplitzCondition::C0ToLinf => "c0_to_linf",
            ToeplitzCondition::C0ToCNull => "c0_to_c_null",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            ToeplitzCondition::C0ToL1,
            ToeplitzCondition::C0ToC,
            ToeplitzCondition::C0ToLinf,
            ToeplitzCondition::C0ToCNull,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

pub fn toeplitz_condition(
    a: &InfiniteMatrix,
    which: ToeplitzCondition,
    cfg: &ProbeConfig,
    tail_horizon: usize,
    max_cols: usize,
) -> Result<Verdict> {
    cfg.validate()?;
    a.check_support([0, 1, 2, cfg.horizon])?;
    if which == ToeplitzCondition::C0ToL1 {
        let levels = subset_levels(max_cols, cfg.horizon)?;
        let rows: Vec<(f64, Vec<f64>)> = (0..=cfg.horizon)
            .map(|n| {
                let end = a.row_end(n, tail_horizon)?.min(max_cols - 1);
                let r = (0..=end).map(|k| Ok(to_f64(&a.entry(n, k)?))).collect::<Result<Vec<f64>>>()?;
                Ok((1.0, r))
            })
            .collect::<Result<_>>()?;
        let sup_at = |(cols, h): (usize, usize)| subset_sup(&rows[..=h], cols);
        let sups = [sup_at(levels[0])?, sup_at(levels[1])?, sup_at(levels[2])?];
        let mut v = crate::conditions::subset_verdict(&levels, sups, cfg);
        v.evidence.note = format!("{}: {}", which.name(), v.evidence.note);
        return Ok(v);
    }
    let src = PlainRows {
        a: a.clone(),
        tail_horizon,
    };
    let table = RowTable::for_levels(&src, cfg)?;
    let bounded = bounded_rows(&table, cfg).verdict();
    let cols = probe_columns(cfg.horizon);
    let mut v = match which {
        ToeplitzCondition::C0ToLinf => bounded,
        ToeplitzCondition::C0ToC => {
            let (c, _) = column_limits(&table, &cols, cfg);
            Verdict::all([&bounded, &c])
        }
        ToeplitzCondition::C0ToCNull => {
            let mut parts = vec![bounded];
            for &k in &cols {
                let e = Escalated::run(cfg, |c| limit_probe_samples(&table.column(k, &c.sample_indices()), c));
                parts.push(limit_equals(&e, 0.0, cfg.tol, &format!("column {}", k)));
            }
            parts.push(limit_equals(&row_sum_limit(&table, cfg), 0.0, cfg.tol, "row sums"));
            Verdict::all(&parts)
        }
        ToeplitzCondition::C0ToL1 => unreachable!("handled above"),
    };
    v.evidence.note = format!("{}: {}", which.name(), v.evidence.note);
    Ok(v)
}
