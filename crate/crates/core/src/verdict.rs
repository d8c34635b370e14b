//! Finite-horizon evidence for conditions that involve a limit or a supremum.
//!
//! No finite prefix decides convergence, so every such check returns a
//! three-valued [`Verdict`] carrying the numbers it was based on. Values are
//! exact up to the moment of comparison, where they are projected to `f64`.
//!
//! Two probes are provided:
//!
//! * [`limit_probe`] asks whether a sequence converges. It holds when the
//!   last `window` terms sit within `tol` of their mean, fails on runaway
//!   growth or on an oscillation that does not shrink between the windows
//!   ending at `H/2` and `H`, and is inconclusive otherwise.
//! * [`bounded_probe`] asks whether a sequence is bounded. It tracks the
//!   running maximum of `|s|` at `H/4`, `H/2` and `H`; with `d1`, `d2` the
//!   two increments it holds when `d2` is negligible or clearly shrinking
//!   and fails when `d2` does not shrink relative to `d1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{render_f64, to_f64};
use crate::sequence::Sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evidence {
    pub horizon: usize,
    /// Indices the verdict rests on. Non-empty for every `Fails`.
    pub witness: Vec<usize>,
    /// Spread of the last window.
    pub oscillation: Option<f64>,
    /// Extracted limit, when one was found.
    pub limit: Option<f64>,
    /// Probed supremum or other headline number.
    pub value: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn holds(evidence: Evidence) -> Self {
        Verdict {
            outcome: Outcome::Holds,
            evidence,
        }
    }

    pub fn fails(evidence: Evidence) -> Self {
        debug_assert!(!evidence.witness.is_empty(), "Fails needs a witness");
        Verdict {
            outcome: Outcome::Fails,
            evidence,
        }
    }

    pub fn inconclusive(evidence: Evidence) -> Self {
        Verdict {
            outcome: Outcome::Inconclusive,
            evidence,
        }
    }

    pub fn is_holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.outcome == Outcome::Fails
    }

    pub fn limit(&self) -> Option<f64> {
        self.evidence.limit
    }

    /// Conjunction: any `Fails` wins (keeping its witness), then any
    /// `Inconclusive`, otherwise `Holds`.
    pub fn all<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
        let verdicts: Vec<&Verdict> = verdicts.into_iter().collect();
        let horizon = verdicts.iter().map(|v| v.evidence.horizon).max().unwrap_or(0);
        if let Some(f) = verdicts.iter().find(|v| v.is_fails()) {
            return (*f).clone();
        }
        if let Some(i) = verdicts.iter().find(|v| v.outcome == Outcome::Inconclusive) {
            return (*i).clone();
        }
        Verdict::holds(Evidence {
            horizon,
            note: format!("all {} conditions hold", verdicts.len()),
            ..Evidence::default()
        })
    }

    /// Combines the same check run at `H` and `2H`: agreement keeps the
    /// deeper verdict, disagreement is inconclusive.
    pub fn escalate(shallow: Verdict, deep: Verdict) -> Verdict {
        if shallow.outcome == deep.outcome {
            deep
        } else {
            let mut evidence = deep.evidence;
            evidence.note = format!(
                "horizon {} gave {:?} but horizon {} gave {:?}; {}",
                shallow.evidence.horizon, shallow.outcome, evidence.horizon, deep.outcome, evidence.note
            );
            Verdict::inconclusive(evidence)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let e = &self.evidence;
        let mut m = serde_json::Map::new();
        m.insert("outcome".into(), serde_json::to_value(self.outcome).expect("outcome"));
        m.insert("horizon".into(), e.horizon.into());
        m.insert("witness".into(), e.witness.clone().into());
        if let Some(x) = e.oscillation {
            m.insert("oscillation_approx".into(), render_f64(x).into());
        }
        if let Some(x) = e.limit {
            m.insert("limit_approx".into(), render_f64(x).into());
        }
        if let Some(x) = e.value {
            m.insert("value_approx".into(), render_f64(x).into());
        }
        if !e.note.is_empty() {
            m.insert("note".into(), e.note.clone().into());
        }
        serde_json::Value::Object(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub horizon: usize,
    pub window: usize,
    pub tol: f64,
    /// Any probed magnitude above this counts as divergence.
    pub blow_up: f64,
    /// `d2 >= growth_ratio * d1` with `d2` above tolerance is read as growth.
    pub growth_ratio: f64,
    /// `d2 <= settle_ratio * d1` is read as a settling supremum.
    pub settle_ratio: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            horizon: 2000,
            window: 50,
            tol: 1e-9,
            blow_up: 1e12,
            growth_ratio: 0.75,
            settle_ratio: 0.6,
        }
    }
}

impl ProbeConfig {
    pub fn with_horizon(self, horizon: usize) -> Self {
        ProbeConfig { horizon, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        ProbeConfig { tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || self.horizon <= self.window {
            return Err(Error::InvalidArgument(format!(
                "need horizon > window >= 2, got horizon {} and window {}",
                self.horizon, self.window
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Same settings at twice the horizon.
    pub fn doubled(&self) -> Self {
        ProbeConfig {
            horizon: self.horizon * 2,
            ..*self
        }
    }

    /// Window of indices ending at `end`.
    fn window_ending(&self, end: usize) -> std::ops::RangeInclusive<usize> {
        end.saturating_sub(self.window - 1)..=end
    }

    /// The indices a sampled probe looks at: a dense head, a geometric grid,
    /// and full windows ending at `H/4`, `H/2` and `H`.
    pub fn sample_indices(&self) -> Vec<usize> {
        let h = self.horizon;
        let mut idx: Vec<usize> = (0..=h.min(32)).collect();
        let mut g = 32.0f64;
        while (g as usize) < h {
            idx.push(g as usize);
            g *= 1.25;
        }
        for end in [h / 4, h / 2, h] {
            idx.extend(self.window_ending(end));
        }
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Indices [`limit_probe_samples`] needs: windows ending at `H/4`, `H/2`, `H`.
    pub fn limit_indices(&self) -> Vec<usize> {
        let h = self.horizon;
        let mut idx: Vec<usize> = Vec::new();
        for end in [h / 4, h / 2, h] {
            idx.extend(self.window_ending(end));
        }
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// A sampled sequence: sorted `(index, value)` pairs.
pub type Samples = Vec<(usize, f64)>;

pub fn sample_sequence(s: &Sequence, indices: &[usize]) -> Result<Samples> {
    indices.iter().map(|&k| Ok((k, to_f64(&s.at(k)?)))).collect()
}

fn window_values(samples: &Samples, range: std::ops::RangeInclusive<usize>) -> Vec<(usize, f64)> {
    samples.iter().filter(|(k, _)| range.contains(k)).copied().collect()
}

fn mean(values: &[(usize, f64)]) -> f64 {
    let first = values[0].1;
    if values.iter().all(|&(_, v)| v == first) {
        return first;
    }
    values.iter().map(|&(_, v)| v).sum::<f64>() / values.len() as f64
}

fn spread(values: &[(usize, f64)]) -> (f64, usize, usize) {
    let (mut lo, mut hi) = (values[0], values[0]);
    for &p in values {
        if p.1 < lo.1 {
            lo = p;
        }
        if p.1 > hi.1 {
            hi = p;
        }
    }
    (hi.1 - lo.1, lo.0, hi.0)
}

/// Running maximum of `|s|` over samples with index `<= upto`, with its argmax.
fn running_max(samples: &Samples, upto: usize) -> (f64, usize) {
    samples
        .iter()
        .filter(|(k, _)| *k <= upto)
        .fold((0.0f64, 0usize), |(m, at), &(k, v)| if v.abs() > m { (v.abs(), k) } else { (m, at) })
}

fn blow_up_witness(samples: &Samples, cfg: &ProbeConfig) -> Option<(usize, f64)> {
    samples
        .iter()
        .find(|(_, v)| !v.is_finite() || v.abs() > cfg.blow_up)
        .copied()
}

/// Growth test on the running maximum at `H/4`, `H/2`, `H`.
fn growth(samples: &Samples, cfg: &ProbeConfig) -> (f64, f64, f64, usize) {
    let h = cfg.horizon;
    let (m1, _) = running_max(samples, h / 4);
    let (m2, _) = running_max(samples, h / 2);
    let (m3, at) = running_max(samples, h);
    (m2 - m1, m3 - m2, m3, at)
}

/// Does `s` converge? See the module docs for the decision rule.
pub fn limit_probe(s: &Sequence, horizon: usize, window: usize, tol: f64) -> Result<Verdict> {
    let cfg = ProbeConfig {
        horizon,
        window,
        tol,
        ..ProbeConfig::default()
    };
    limit_probe_with(s, &cfg)
}

pub fn limit_probe_with(s: &Sequence, cfg: &ProbeConfig) -> Result<Verdict> {
    cfg.validate()?;
    // Every term up to H is scanned so runaway growth is never missed.
    let all: Vec<usize> = (0..=cfg.horizon).collect();
    let samples = sample_sequence(s, &all)?;
    Ok(limit_probe_samples(&samples, cfg))
}

pub fn limit_probe_samples(samples: &Samples, cfg: &ProbeConfig) -> Verdict {
    let h = cfg.horizon;
    let base = Evidence {
        horizon: h,
        ..Evidence::default()
    };
    if let Some((k, v)) = blow_up_witness(samples, cfg) {
        return Verdict::fails(Evidence {
            witness: vec![k],
            value: Some(v),
            note: format!("|s_{}| exceeds the blow-up threshold {:e}", k, cfg.blow_up),
            ..base
        });
    }
    let last = window_values(samples, cfg.window_ending(h));
    let mid = window_values(samples, cfg.window_ending(h / 2));
    let l = mean(&last);
    let (osc, lo_at, hi_at) = spread(&last);
    let max_dev = last.iter().map(|&(_, v)| (v - l).abs()).fold(0.0, f64::max);
    if max_dev <= cfg.tol {
        return Verdict::holds(Evidence {
            witness: vec![last[0].0, h],
            oscillation: Some(osc),
            limit: Some(l),
            note: format!("last {} terms within {:e} of their mean", last.len(), cfg.tol),
            ..base
        });
    }
    let (d1, d2, m3, at) = growth(samples, cfg);
    if d2 > cfg.tol * m3.max(1.0) && d2 >= cfg.growth_ratio * d1 {
        return Verdict::fails(Evidence {
            witness: vec![h / 4, h / 2, at],
            oscillation: Some(osc),
            value: Some(m3),
            note: format!(
                "running max of |s| grew by {:.6e} over (H/4, H/2] and {:.6e} over (H/2, H]",
                d1, d2
            ),
            ..base
        });
    }
    if !mid.is_empty() {
        let (osc_mid, _, _) = spread(&mid);
        if osc > cfg.tol && osc >= cfg.growth_ratio * osc_mid {
            return Verdict::fails(Evidence {
                witness: vec![lo_at, hi_at],
                oscillation: Some(osc),
                note: format!(
                    "oscillation {:.6e} in the last window did not shrink from {:.6e} at H/2",
                    osc, osc_mid
                ),
                ..base
            });
        }
    }
    Verdict::inconclusive(Evidence {
        witness: vec![lo_at, hi_at],
        oscillation: Some(osc),
        limit: Some(l),
        note: format!("last window spread {:.6e} exceeds tolerance but is shrinking", osc),
        ..base
    })
}

/// Is `s` bounded? Samples every index up to the horizon.
pub fn bounded_probe(s: &Sequence, cfg: &ProbeConfig) -> Result<Verdict> {
    cfg.validate()?;
    let all: Vec<usize> = (0..=cfg.horizon).collect();
    Ok(bounded_probe_samples(&sample_sequence(s, &all)?, cfg))
}

pub fn bounded_probe_samples(samples: &Samples, cfg: &ProbeConfig) -> Verdict {
    let h = cfg.horizon;
    let base = Evidence {
        horizon: h,
        ..Evidence::default()
    };
    if let Some((k, v)) = blow_up_witness(samples, cfg) {
        return Verdict::fails(Evidence {
            witness: vec![k],
            value: Some(v),
            note: format!("|s_{}| exceeds the blow-up threshold {:e}", k, cfg.blow_up),
            ..base
        });
    }
    let (d1, d2, m3, at) = growth(samples, cfg);
    let negligible = cfg.tol * m3.max(1.0);
    if d2 <= negligible || d2 <= cfg.settle_ratio * d1 {
        return Verdict::holds(Evidence {
            witness: vec![at],
            value: Some(m3),
            note: format!("supremum settled: increments {:.6e} then {:.6e}", d1, d2),
            ..base
        });
    }
    if d2 >= cfg.growth_ratio * d1 {
        return Verdict::fails(Evidence {
            witness: vec![h / 4, h / 2, at],
            value: Some(m3),
            note: format!(
                "running max of |s| grew by {:.6e} over (H/4, H/2] and {:.6e} over (H/2, H]",
                d1, d2
            ),
            ..base
        });
    }
    Verdict::inconclusive(Evidence {
        witness: vec![at],
        value: Some(m3),
        note: format!("supremum still moving: increments {:.6e} then {:.6e}", d1, d2),
        ..base
    })
}
