//! Membership of a multiplier sequence `a` in the α-, β- and γ-duals of
//! `λ(u,v,Δ)`.
//!
//! With `x = inverse_transform(w, y)` the products `a_k x_k` and the partial
//! sums `Σ_{k≤n} a_k x_k` are linear in `y`:
//!
//! * `a_k x_k = (B y)_k` where `B(n,i) = a_n · inv(n,i)`;
//! * `Σ_{k≤n} a_k x_k = (C y)_n` where
//!   `C(n,j) = (1/u_j) [a_j / v_j + (1/v_j - 1/v_{j+1}) Σ_{k=j+1}^{n} a_k]`.
//!
//! Dual membership then reduces to classical conditions on `B` and `C`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::conditions::{
    bounded_rows, column_limits, mul0, probe_columns, project, row_abs_sum_limit, row_sum_limit, subset_levels,
    subset_sup, subset_verdict, CompensatedSum, Escalated, RowSource, RowTable, WeightTable,
};
use crate::error::Result;
use crate::rational::Rational;
use crate::sequence::Sequence;
use crate::spaces::BaseSpace;
use crate::triangle::{OperatorKind, Triangle};
use crate::verdict::{limit_probe_samples, Evidence, ProbeConfig, Verdict};
use crate::weights::Weights;

/// Default column window for the subset supremum (`2^15` subsets).
pub const DEFAULT_MAX_COLS: usize = 15;

/// Tolerance for comparing the two limits in condition `c3`.
pub const C3_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    Alpha,
    Beta,
    Gamma,
}

impl DualKind {
    pub fn name(self) -> &'static str {
        match self {
            DualKind::Alpha => "alpha",
            DualKind::Beta => "beta",
            DualKind::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualCheckReport {
    pub kind: DualKind,
    /// `None` for the α- and γ-duals, which coincide over all three bases.
    pub base: Option<BaseSpace>,
    pub conditions: BTreeMap<String, Verdict>,
    pub overall: Verdict,
    /// Extracted columnwise limits of `C`, when `c2` was evaluated.
    pub column_limits: Vec<(usize, Option<f64>)>,
    /// For a `Holds` β-verdict: do the partial sums of `a·x` settle for a
    /// sample `x` from the space? Evidence only; never changes `overall`.
    pub consistency: Option<Verdict>,
}

impl DualCheckReport {
    pub fn to_json(&self) -> serde_json::Value {
        let conditions: serde_json::Map<String, serde_json::Value> =
            self.conditions.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        let mut m = serde_json::Map::new();
        m.insert("kind".into(), self.kind.name().into());
        m.insert(
            "base".into(),
            self.base.map(|b| b.name().into()).unwrap_or(serde_json::Value::Null),
        );
        m.insert("conditions".into(), conditions.into());
        m.insert("overall".into(), self.overall.to_json());
        if !self.column_limits.is_empty() {
            let cols: Vec<serde_json::Value> = self
                .column_limits
                .iter()
                .map(|(k, l)| {
                    serde_json::json!({
                        "column": k,
                        "limit_approx": l.map(crate::rational::render_f64),
                    })
                })
                .collect();
            m.insert("column_limits".into(), cols.into());
        }
        if let Some(c) = &self.consistency {
            m.insert("consistency".into(), c.to_json());
        }
        serde_json::Value::Object(m)
    }
}

/// `B(n,i) = a_n · inv(n,i)`, so that `(B y)_n = a_n x_n`.
pub fn alpha_matrix(w: &Weights, a: &Sequence) -> Triangle {
    let inv = Triangle::gwm_delta_inverse(w);
    let a = a.clone();
    Triangle::new(
        OperatorKind::Custom,
        format!("B[{}]({})", a.label(), w.describe()),
        false,
        move |n, i| {
            let an = a.at(n)?;
            if an.is_zero() {
                return Ok(Rational::zero());
            }
            Ok(an * inv.entry(n, i)?)
        },
    )
}

/// `C(n,j) = (1/u_j) [a_j/v_j + (1/v_j - 1/v_{j+1}) Σ_{k=j+1}^{n} a_k]`,
/// so that `(C y)_n = Σ_{k≤n} a_k x_k`.
pub fn beta_matrix(w: &Weights, a: &Sequence) -> Triangle {
    let sums = a.partial_sums();
    let (w2, a) = (w.clone(), a.clone());
    Triangle::new(
        OperatorKind::Custom,
        format!("C[{}]({})", a.label(), w.describe()),
        false,
        move |n, j| {
            let mut inner = a.at(j)? * w2.inv_v(j)?;
            let d = w2.nabla_inv_v(j)?;
            if !d.is_zero() && n > j {
                inner += d * (sums.at(n)? - sums.at(j)?);
            }
            Ok(w2.inv_u(j)? * inner)
        },
    )
}

/// Rows of `C` in `f64`, built by one backward pass per row.
struct BetaRows {
    a: Vec<f64>,
    t: WeightTable,
}

impl BetaRows {
    fn new(w: &Weights, a: &Sequence, len: usize) -> Result<Self> {
        Ok(BetaRows {
            a: project(a, len)?,
            t: WeightTable::build(w, len)?,
        })
    }
}

impl RowSource for BetaRows {
    fn row(&self, n: usize) -> Result<Vec<f64>> {
        let mut row = vec![0.0; n + 1];
        let mut tail = CompensatedSum::default();
        for j in (0..=n).rev() {
            let inner = mul0(self.a[j], self.t.inv_v[j]) + mul0(self.t.nabla_inv_v[j], tail.value());
            row[j] = mul0(self.t.inv_u[j], inner);
            tail.add(self.a[j]);
        }
        Ok(row)
    }
}

/// α-dual: `sup_K Σ_{n≤H} |Σ_{k∈K} B(n,k)|` over subsets `K` of the first
/// `max_cols` columns, compared across three growing windows.
pub fn check_alpha(w: &Weights, a: &Sequence, cfg: &ProbeConfig, max_cols: usize) -> Result<DualCheckReport> {
    cfg.validate()?;
    let levels = subset_levels(max_cols, cfg.horizon)?;
    let len = cfg.horizon.max(max_cols) + 1;
    let af = project(a, len)?;
    let t = WeightTable::build(w, len)?;
    // Below the column window every row of B is a_n times the fixed vector
    // (1/u_k)(1/v_k - 1/v_{k+1}), so those rows collapse into one weighted row.
    let sup_at = |(cols, h): (usize, usize)| -> Result<(f64, u32)> {
        let mut rows: Vec<(f64, Vec<f64>)> = (0..cols.min(h + 1))
            .map(|n| {
                let mut r = vec![0.0; cols];
                for (k, e) in r.iter_mut().enumerate().take(n) {
                    *e = mul0(af[n], mul0(t.inv_u[k], t.nabla_inv_v[k]));
                }
                r[n] = mul0(af[n], mul0(t.inv_u[n], t.inv_v[n]));
                (1.0, r)
            })
            .collect();
        if h >= cols {
            let mut weight = CompensatedSum::default();
            af[cols..=h].iter().for_each(|x| weight.add(x.abs()));
            let r = (0..cols).map(|k| mul0(t.inv_u[k], t.nabla_inv_v[k])).collect();
            rows.push((weight.value(), r));
        }
        subset_sup(&rows, cols)
    };
    let sups = [sup_at(levels[0])?, sup_at(levels[1])?, sup_at(levels[2])?];
    let v = subset_verdict(&levels, sups, cfg);
    let mut conditions = BTreeMap::new();
    conditions.insert("subset_sup".to_string(), v.clone());
    Ok(DualCheckReport {
        kind: DualKind::Alpha,
        base: None,
        conditions,
        overall: v,
        column_limits: Vec::new(),
        consistency: None,
    })
}

/// β-dual: `c₀ → c1 ∧ c2`, `c → c1 ∧ c2 ∧ c4`, `ℓ∞ → c2 ∧ c3`, on `C`.
pub fn check_beta(w: &Weights, a: &Sequence, base: BaseSpace, cfg: &ProbeConfig) -> Result<DualCheckReport> {
    cfg.validate()?;
    let deep = cfg.doubled().horizon;
    let src = BetaRows::new(w, a, deep + 1)?;
    let table = RowTable::for_levels(&src, cfg)?;
    let mut conditions = BTreeMap::new();
    let needs_c1 = base != BaseSpace::EllInfinity;
    if needs_c1 {
        conditions.insert("c1".to_string(), bounded_rows(&table, cfg).verdict());
    }
    let (c2, per) = column_limits(&table, &probe_columns(cfg.horizon), cfg);
    conditions.insert("c2".to_string(), c2);
    match base {
        BaseSpace::C => {
            conditions.insert("c4".to_string(), row_sum_limit(&table, cfg).verdict_with_limit());
        }
        BaseSpace::EllInfinity => {
            conditions.insert("c3".to_string(), c3(&table, cfg, deep));
        }
        BaseSpace::CZero => {}
    }
    let overall = Verdict::all(conditions.values());
    let consistency = if overall.is_holds() {
        Some(partial_sum_consistency(&table, base, cfg, deep))
    } else {
        None
    };
    Ok(DualCheckReport {
        kind: DualKind::Beta,
        base: Some(base),
        conditions,
        overall,
        column_limits: per.into_iter().map(|c| (c.column, c.estimate)).collect(),
        consistency,
    })
}

/// `lim_n Σ_k |C(n,k)| = Σ_k |lim_n C(n,k)|`. The right side reads the
/// column limits off the deepest row and must settle as a series in `k`.
fn c3(table: &RowTable, cfg: &ProbeConfig, deep: usize) -> Verdict {
    let left = row_abs_sum_limit(table, cfg);
    let last = table.row(deep).unwrap_or(&[]);
    let mut acc = CompensatedSum::default();
    let partial: Vec<f64> = last
        .iter()
        .map(|x| {
            acc.add(x.abs());
            acc.value()
        })
        .collect();
    let series = |idx: Vec<usize>| -> Vec<(usize, f64)> {
        idx.into_iter()
            .map(|k| (k, partial.get(k).or(partial.last()).copied().unwrap_or(0.0)))
            .collect()
    };
    let right = Escalated::run(cfg, |c| limit_probe_samples(&series(c.sample_indices()), c));
    let (lv, rv) = (left.verdict(), right.verdict());
    if !(lv.is_holds() && rv.is_holds()) {
        let mut v = Verdict::all([&lv, &rv]);
        v.evidence.note = format!("c3 needs both sides to settle: {}", v.evidence.note);
        return v;
    }
    let (l, r) = (lv.limit().unwrap_or(f64::NAN), rv.limit().unwrap_or(f64::NAN));
    let evidence = Evidence {
        horizon: deep,
        limit: Some(l),
        value: Some(r),
        ..Evidence::default()
    };
    if (l - r).abs() <= C3_TOL * l.abs().max(1.0) {
        Verdict::holds(Evidence {
            note: format!("lim Σ|c_nk| = {:.6e} matches Σ|lim c_nk| = {:.6e}", l, r),
            ..evidence
        })
    } else {
        Verdict::fails(Evidence {
            witness: vec![deep],
            note: format!("lim Σ|c_nk| = {:.6e} differs from Σ|lim c_nk| = {:.6e}", l, r),
            ..evidence
        })
    }
}

/// `(C y)_n` for a fixed sample `y` from the base space should settle.
fn partial_sum_consistency(table: &RowTable, base: BaseSpace, cfg: &ProbeConfig, deep: usize) -> Verdict {
    let y: Vec<f64> = (0..=deep)
        .map(|k| {
            let d = 1.0 / (k as f64 + 1.0);
            match base {
                BaseSpace::CZero => d,
                BaseSpace::C => 1.0 + d,
                BaseSpace::EllInfinity => {
                    if k % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        })
        .collect();
    let mut v = Escalated::run(cfg, |c| limit_probe_samples(&table.apply(&y, &c.sample_indices()), c)).verdict();
    let tag = if v.is_fails() { "flagged: " } else { "" };
    v.evidence.note = format!("{}partial sums of a·x for a sample x: {}", tag, v.evidence.note);
    v
}

/// γ-dual: `c1` only.
pub fn check_gamma(w: &Weights, a: &Sequence, cfg: &ProbeConfig) -> Result<DualCheckReport> {
    cfg.validate()?;
    let src = BetaRows::new(w, a, cfg.doubled().horizon + 1)?;
    let table = RowTable::for_levels(&src, cfg)?;
    let c1 = bounded_rows(&table, cfg).verdict();
    let mut conditions = BTreeMap::new();
    conditions.insert("c1".to_string(), c1.clone());
    Ok(DualCheckReport {
        kind: DualKind::Gamma,
        base: None,
        conditions,
        overall: c1,
        column_limits: Vec::new(),
        consistency: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rational::{int, ratio};
    use crate::spaces::inverse_transform;
    use crate::verdict::{bounded_probe, Outcome};

    fn cfg() -> ProbeConfig {
        ProbeConfig::default().with_horizon(1000)
    }

    fn family() -> Vec<(&'static str, Sequence, bool)> {
        vec![
            ("geometric(1/2)", Sequence::geometric(ratio(1, 2)), true),
            ("unit(3)", Sequence::unit(3), true),
            ("zero", Sequence::zero(), true),
            ("e", Sequence::ones(), false),
            ("harmonic", Sequence::harmonic(), false),
        ]
    }

    #[test]
    fn matrices_at_trivial_weights() {
        let a = Sequence::parse("(k^2 + 1)/(k + 3)").unwrap();
        let b = alpha_matrix(&Weights::trivial(), &a);
        let c = beta_matrix(&Weights::trivial(), &a);
        for n in 0..12 {
            for k in 0..12 {
                let diag = if n == k { a.at(n).unwrap() } else { Rational::zero() };
                assert_eq!(b.entry(n, k).unwrap(), diag);
                let lower = if k <= n { a.at(k).unwrap() } else { Rational::zero() };
                assert_eq!(c.entry(n, k).unwrap(), lower);
            }
        }
    }

    #[test]
    fn alpha_matrix_with_ones_is_the_inverse() {
        let w = Weights::parse("k + 2", "harmonic").unwrap();
        let b = alpha_matrix(&w, &Sequence::ones());
        let inv = Triangle::gwm_delta_inverse(&w);
        for n in 0..15 {
            assert_eq!(b.row(n).unwrap(), inv.row(n).unwrap());
        }
    }

    #[test]
    fn beta_matrix_of_first_unit() {
        let w = Weights::parse("(k + 2)/(k + 1)", "geometric(3/2)").unwrap();
        let c = beta_matrix(&w, &Sequence::unit(0));
        for n in 0..10 {
            assert_eq!(c.entry(n, 0).unwrap(), w.inv_u(0).unwrap() * w.inv_v(0).unwrap());
            for j in 1..=n {
                assert_eq!(c.entry(n, j).unwrap(), int(0));
            }
        }
    }

    #[test]
    fn product_identities_against_inverse_transform() {
        let w = Weights::parse("(k + 2)/(k + 1)", "geometric(-3/2)").unwrap();
        let a = Sequence::parse("(-1)^k * (k + 1)/(k^2 + 2)").unwrap();
        let y = Sequence::parse("(k^3 - 4)/(2*k + 1)").unwrap();
        let x = inverse_transform(&w, &y);
        let b = alpha_matrix(&w, &a);
        let c = beta_matrix(&w, &a);
        let mut running = Rational::zero();
        for n in 0..60 {
            let ax = a.at(n).unwrap() * x.at(n).unwrap();
            running += &ax;
            assert_eq!(b.apply(&y, n).unwrap(), ax);
            assert_eq!(c.apply(&y, n).unwrap(), running);
        }
    }

    #[test]
    fn float_rows_match_exact_rows() {
        let w = Weights::parse("k + 1", "harmonic").unwrap();
        let a = Sequence::geometric(ratio(2, 3));
        let exact = beta_matrix(&w, &a);
        let src = BetaRows::new(&w, &a, 40).unwrap();
        for n in [0, 1, 7, 30] {
            let fl = src.row(n).unwrap();
            for (j, x) in fl.iter().enumerate() {
                let e = crate::rational::to_f64(&exact.entry(n, j).unwrap());
                assert!((x - e).abs() <= 1e-12 * e.abs().max(1.0), "n={} j={}", n, j);
            }
        }
    }

    #[test]
    fn classical_family() {
        let w = Weights::trivial();
        for (name, a, in_l1) in family() {
            let abs_sums = Sequence::from_fn("Σ|a|", {
                let a = a.clone();
                move |n| {
                    let mut s = Rational::zero();
                    for k in 0..=n {
                        s += num_traits::Signed::abs(&a.at(k)?);
                    }
                    Ok(s)
                }
            });
            let l1 = bounded_probe(&abs_sums, &cfg().with_horizon(400)).unwrap();
            assert_eq!(l1.is_holds(), in_l1, "{} direct", name);
            let want = if in_l1 { Outcome::Holds } else { Outcome::Fails };
            let alpha = check_alpha(&w, &a, &cfg(), DEFAULT_MAX_COLS).unwrap();
            assert_eq!(alpha.overall.outcome, want, "{} alpha: {:?}", name, alpha.overall);
            let beta = check_beta(&w, &a, BaseSpace::CZero, &cfg()).unwrap();
            assert_eq!(beta.overall.outcome, want, "{} beta: {:?}", name, beta.overall);
            let gamma = check_gamma(&w, &a, &cfg()).unwrap();
            assert_eq!(gamma.overall.outcome, want, "{} gamma: {:?}", name, gamma.overall);
        }
    }

    #[test]
    fn alpha_sup_value_for_geometric() {
        let r = check_alpha(&Weights::trivial(), &Sequence::geometric(ratio(1, 2)), &cfg(), 15).unwrap();
        let s = r.overall.evidence.value.unwrap();
        assert!((s - (2.0 - 2f64.powi(-14))).abs() < 1e-12, "{}", s);
    }

    #[test]
    fn zero_holds_for_every_base() {
        let w = Weights::parse("harmonic", "k + 1").unwrap();
        for base in [BaseSpace::CZero, BaseSpace::C, BaseSpace::EllInfinity] {
            let r = check_beta(&w, &Sequence::zero(), base, &cfg()).unwrap();
            assert!(r.overall.is_holds(), "{:?}: {:?}", base, r.overall);
        }
    }

    #[test]
    fn beta_bases_pick_conditions() {
        let a = Sequence::geometric(ratio(1, 2));
        let w = Weights::trivial();
        let keys = |b| {
            check_beta(&w, &a, b, &cfg())
                .unwrap()
                .conditions
                .keys()
                .cloned()
                .collect::<Vec<_>>()
        };
        assert_eq!(keys(BaseSpace::CZero), vec!["c1", "c2"]);
        assert_eq!(keys(BaseSpace::C), vec!["c1", "c2", "c4"]);
        assert_eq!(keys(BaseSpace::EllInfinity), vec!["c2", "c3"]);
        let r = check_beta(&w, &a, BaseSpace::EllInfinity, &cfg()).unwrap();
        assert!(r.overall.is_holds(), "{:?}", r.conditions);
        assert!(r.consistency.unwrap().is_holds());
    }

    #[test]
    fn ones_fail_c3_for_ell_infinity() {
        let r = check_beta(&Weights::trivial(), &Sequence::ones(), BaseSpace::EllInfinity, &cfg()).unwrap();
        assert!(r.conditions["c2"].is_holds());
        assert!(r.conditions["c3"].is_fails());
    }

    #[test]
    fn too_many_columns() {
        let e = check_alpha(&Weights::trivial(), &Sequence::ones(), &cfg(), 21).unwrap_err();
        assert_eq!(e, Error::TooManyColumns { requested: 21, limit: 20 });
    }
}
