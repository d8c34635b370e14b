//! Building blocks for Toeplitz-type conditions on infinite matrices.
//!
//! Matrix entries are computed exactly and projected to `f64` once; row
//! sums, column samples and subset suprema are then aggregated in `f64`
//! with compensated summation. Every sup/limit condition runs at `H` and
//! `2H` and the two verdicts are combined with [`Verdict::escalate`].

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::sequence::Sequence;
use crate::verdict::{bounded_probe_samples, limit_probe_samples, Evidence, ProbeConfig, Samples, Verdict};
use crate::weights::Weights;

/// Largest column window for exhaustive subset enumeration.
pub const MAX_SUBSET_COLS: usize = 20;

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.c
        } else {
            self.sum
        }
    }
}

/// `a * b` with `0 * ±inf = 0`, so an exactly vanishing factor always wins.
pub(crate) fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// `f64` projections of `1/u_k`, `1/v_k` and `1/v_k - 1/v_{k+1}` for `k < len`.
/// Each value is exact until the final projection.
pub(crate) struct WeightTable {
    pub inv_u: Vec<f64>,
    pub inv_v: Vec<f64>,
    pub nabla_inv_v: Vec<f64>,
}

impl WeightTable {
    pub fn build(w: &Weights, len: usize) -> Result<Self> {
        let triples: Vec<(f64, f64, f64)> = (0..len)
            .into_par_iter()
            .map(|k| Ok((to_f64(&w.inv_u(k)?), to_f64(&w.inv_v(k)?), to_f64(&w.nabla_inv_v(k)?))))
            .collect::<Result<_>>()?;
        let mut t = WeightTable {
            inv_u: Vec::with_capacity(len),
            inv_v: Vec::with_capacity(len),
            nabla_inv_v: Vec::with_capacity(len),
        };
        for (a, b, c) in triples {
            t.inv_u.push(a);
            t.inv_v.push(b);
            t.nabla_inv_v.push(c);
        }
        Ok(t)
    }
}

pub(crate) fn project(s: &Sequence, len: usize) -> Result<Vec<f64>> {
    (0..len).into_par_iter().map(|k| Ok(to_f64(&s.at(k)?))).collect()
}

/// Anything that can produce rows of a matrix as doubles.
pub trait RowSource: Sync {
    /// Row `n`; entries past the end of the returned vector are zero.
    fn row(&self, n: usize) -> Result<Vec<f64>>;
}

/// Rows evaluated at a fixed set of indices.
#[derive(Debug, Clone, Default)]
pub struct RowTable {
    rows: BTreeMap<usize, Vec<f64>>,
}

impl RowTable {
    pub fn build(src: &dyn RowSource, indices: &[usize]) -> Result<Self> {
        let rows: Vec<(usize, Vec<f64>)> = indices
            .par_iter()
            .map(|&n| Ok((n, src.row(n)?)))
            .collect::<Result<_>>()?;
        Ok(RowTable {
            rows: rows.into_iter().collect(),
        })
    }

    /// The rows needed to evaluate sampled conditions at `H` and `2H`.
    pub fn for_levels(src: &dyn RowSource, cfg: &ProbeConfig) -> Result<Self> {
        let mut idx = cfg.sample_indices();
        idx.extend(cfg.doubled().sample_indices());
        idx.sort_unstable();
        idx.dedup();
        Self::build(src, &idx)
    }

    pub fn row(&self, n: usize) -> Option<&[f64]> {
        self.rows.get(&n).map(|r| r.as_slice())
    }

    fn rows_at<'a>(&'a self, idx: &'a [usize]) -> impl Iterator<Item = (usize, &'a [f64])> + 'a {
        idx.iter().map(move |&n| (n, self.rows.get(&n).map(|r| r.as_slice()).unwrap_or(&[])))
    }

    /// `Σ_k |a_nk|` at each index.
    pub fn abs_sums(&self, idx: &[usize]) -> Samples {
        self.rows_at(idx)
            .map(|(n, r)| {
                let mut s = CompensatedSum::default();
                r.iter().for_each(|x| s.add(x.abs()));
                (n, s.value())
            })
            .collect()
    }

    /// `Σ_k a_nk` at each index.
    pub fn sums(&self, idx: &[usize]) -> Samples {
        self.rows_at(idx)
            .map(|(n, r)| {
                let mut s = CompensatedSum::default();
                r.iter().for_each(|&x| s.add(x));
                (n, s.value())
            })
            .collect()
    }

    /// `a_nk` down column `k`.
    pub fn column(&self, k: usize, idx: &[usize]) -> Samples {
        self.rows_at(idx).map(|(n, r)| (n, r.get(k).copied().unwrap_or(0.0))).collect()
    }

    /// `Σ_k a_nk y_k` at each index.
    pub fn apply(&self, y: &[f64], idx: &[usize]) -> Samples {
        self.rows_at(idx)
            .map(|(n, r)| {
                let mut s = CompensatedSum::default();
                r.iter().zip(y).for_each(|(&a, &b)| s.add(mul0(a, b)));
                (n, s.value())
            })
            .collect()
    }
}

/// One condition evaluated at `H` and at `2H`.
#[derive(Debug, Clone)]
pub struct Escalated {
    pub shallow: Verdict,
    pub deep: Verdict,
    window: usize,
}

impl Escalated {
    pub fn run(cfg: &ProbeConfig, check: impl Fn(&ProbeConfig) -> Verdict) -> Self {
        Escalated {
            shallow: check(cfg),
            deep: check(&cfg.doubled()),
            window: cfg.window,
        }
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::escalate(self.shallow.clone(), self.deep.clone())
    }

    /// Limit estimate from the two window means, extrapolated under an
    /// `O(1/n)` error model. Present only when both levels hold.
    pub fn limit(&self) -> Option<f64> {
        if !(self.shallow.is_holds() && self.deep.is_holds()) {
            return None;
        }
        let (l1, l2) = (self.shallow.limit()?, self.deep.limit()?);
        if l1 == l2 {
            return Some(l2);
        }
        let centre = |h: usize| (h as f64) - (self.window as f64 - 1.0) / 2.0 + 1.0;
        let (n1, n2) = (centre(self.shallow.evidence.horizon), centre(self.deep.evidence.horizon));
        Some((n2 * l2 - n1 * l1) / (n2 - n1))
    }

    /// The combined verdict with the extrapolated limit written into it.
    pub fn verdict_with_limit(&self) -> Verdict {
        let mut v = self.verdict();
        if let Some(l) = self.limit() {
            v.evidence.limit = Some(l);
        }
        v
    }
}

/// Columns probed for columnwise limits: a dense head and a doubling grid up to `H/8`.
pub fn probe_columns(horizon: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..=15.min(horizon / 8)).collect();
    let mut k = 32;
    while k <= horizon / 8 {
        cols.push(k);
        k *= 2;
    }
    cols
}

/// `sup_n Σ_k |a_nk| < ∞`
pub fn bounded_rows(table: &RowTable, cfg: &ProbeConfig) -> Escalated {
    Escalated::run(cfg, |c| bounded_probe_samples(&table.abs_sums(&c.sample_indices()), c))
}

/// `lim_n Σ_k a_nk` exists.
pub fn row_sum_limit(table: &RowTable, cfg: &ProbeConfig) -> Escalated {
    Escalated::run(cfg, |c| limit_probe_samples(&table.sums(&c.sample_indices()), c))
}

/// `lim_n Σ_k |a_nk|` exists.
pub fn row_abs_sum_limit(table: &RowTable, cfg: &ProbeConfig) -> Escalated {
    Escalated::run(cfg, |c| limit_probe_samples(&table.abs_sums(&c.sample_indices()), c))
}

#[derive(Debug, Clone)]
pub struct ColumnLimit {
    pub column: usize,
    pub verdict: Verdict,
    pub estimate: Option<f64>,
}

/// `lim_n a_nk` exists for each probed `k`.
pub fn column_limits(table: &RowTable, columns: &[usize], cfg: &ProbeConfig) -> (Verdict, Vec<ColumnLimit>) {
    let per: Vec<ColumnLimit> = columns
        .iter()
        .map(|&k| {
            let e = Escalated::run(cfg, |c| {
                let mut v = limit_probe_samples(&table.column(k, &c.sample_indices()), c);
                v.evidence.note = format!("column {}: {}", k, v.evidence.note);
                v
            });
            ColumnLimit {
                column: k,
                verdict: e.verdict(),
                estimate: e.limit(),
            }
        })
        .collect();
    let mut all = Verdict::all(per.iter().map(|c| &c.verdict));
    if all.is_holds() {
        all.evidence.note = format!("columns {:?} converge", columns);
    }
    (all, per)
}

/// Sharpens a limit verdict to "the limit is `target`".
pub fn limit_equals(limit: &Escalated, target: f64, tol: f64, what: &str) -> Verdict {
    let v = limit.verdict();
    if !v.is_holds() {
        return v;
    }
    let l = limit.limit().unwrap_or(f64::NAN);
    let mut evidence = Evidence {
        limit: Some(l),
        ..v.evidence.clone()
    };
    if (l - target).abs() <= tol * target.abs().max(1.0) {
        evidence.note = format!("{} converges to {}", what, target);
        Verdict::holds(evidence)
    } else {
        evidence.witness = vec![evidence.horizon];
        evidence.note = format!("{} converges to {:.6e}, not {}", what, l, target);
        Verdict::fails(evidence)
    }
}

/// `max_K Σ_r weight_r |Σ_{k∈K} row_r[k]|` over all subsets `K` of the first
/// `cols` columns, with the maximizing set as a bit mask.
pub fn subset_sup(rows: &[(f64, Vec<f64>)], cols: usize) -> Result<(f64, u32)> {
    if cols > MAX_SUBSET_COLS {
        return Err(Error::TooManyColumns {
            requested: cols,
            limit: MAX_SUBSET_COLS,
        });
    }
    let rows: Vec<(f64, Vec<f64>)> = rows
        .iter()
        .filter(|(w, r)| *w != 0.0 && r.iter().take(cols).any(|&x| x != 0.0))
        .map(|(w, r)| {
            let mut r: Vec<f64> = r.iter().take(cols).copied().collect();
            r.resize(cols, 0.0);
            (*w, r)
        })
        .collect();
    let mut acc = vec![0.0f64; rows.len()];
    let (mut best, mut best_mask) = (0.0f64, 0u32);
    let mut mask = 0u32;
    // Gray code: step i flips the column given by the lowest set bit of i.
    for i in 1u64..(1u64 << cols) {
        let k = i.trailing_zeros() as usize;
        let adding = mask & (1 << k) == 0;
        mask ^= 1 << k;
        let mut total = CompensatedSum::default();
        for ((w, r), s) in rows.iter().zip(acc.iter_mut()) {
            if adding {
                *s += r[k];
            } else {
                *s -= r[k];
            }
            total.add(mul0(*w, s.abs()));
        }
        let t = total.value();
        if t > best || t.is_nan() {
            best = t;
            best_mask = mask;
        }
    }
    Ok((best, best_mask))
}

pub(crate) fn mask_columns(mask: u32) -> Vec<usize> {
    (0..32).filter(|k| mask & (1 << k) != 0).collect()
}

/// Column windows and horizons at which subset suprema are compared.
pub(crate) fn subset_levels(max_cols: usize, horizon: usize) -> Result<[(usize, usize); 3]> {
    if max_cols > MAX_SUBSET_COLS {
        return Err(Error::TooManyColumns {
            requested: max_cols,
            limit: MAX_SUBSET_COLS,
        });
    }
    if max_cols < 5 {
        return Err(Error::InvalidArgument(format!("max_cols must be at least 5, got {}", max_cols)));
    }
    Ok([(max_cols - 4, horizon / 4), (max_cols - 2, horizon / 2), (max_cols, horizon)])
}

/// Verdict on three subset suprema taken at growing windows: the same
/// settle/growth rule as the boundedness probe, with the horizons as indices.
pub(crate) fn subset_verdict(levels: &[(usize, usize); 3], sups: [(f64, u32); 3], cfg: &ProbeConfig) -> Verdict {
    let samples: Samples = levels.iter().zip(sups.iter()).map(|(&(_, h), &(s, _))| (h, s)).collect();
    let mut v = bounded_probe_samples(&samples, cfg);
    let (s, mask) = sups[2];
    v.evidence.value = Some(s);
    v.evidence.note = format!(
        "sup over subsets of {} columns: {} / {} / {} at horizons {} / {} / {}; maximizing set {:?}; {}",
        levels[2].0,
        sups[0].0,
        sups[1].0,
        s,
        levels[0].1,
        levels[1].1,
        levels[2].1,
        mask_columns(mask),
        v.evidence.note
    );
    v
}
