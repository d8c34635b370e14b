//! Batch jobs: a JSON file naming weights and a list of tasks, run into a
//! deterministic JSON report.
//!
//! ```json
//! {
//!   "weights": { "u": "e", "v": "harmonic" },
//!   "defaults": { "horizon": 2000, "tol": 1e-9 },
//!   "tasks": [
//!     { "op": "forward_transform", "x": "enumerate", "prefix": 6 },
//!     { "op": "check_beta", "a": "geometric(1/2)", "space": "c_zero" }
//!   ]
//! }
//! ```
//!
//! Numeric parameters resolve in the order task field, command-line flag,
//! job `defaults`, the `GWM_HORIZON` environment variable (horizon only),
//! built-in default.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duals::{check_alpha, check_beta, check_gamma, DEFAULT_MAX_COLS};
use crate::error::{Error, Result};
use crate::matclass::{classify_into_c, classify_into_linf, dual_transform, toeplitz_condition, InfiniteMatrix, ToeplitzCondition};
use crate::rational::{render, Rational};
use crate::sequence::Sequence;
use crate::spaces::{ad_probe, basis_vector, expand, forward_transform, inverse_transform, membership, norm, partial_sum_residual, BaseSpace, SpaceId};
use crate::verdict::{Outcome, ProbeConfig, Verdict};
use crate::verify::{verify_suite, DEFAULT_SEED};
use crate::weights::Weights;

pub const SCHEMA: &str = "gwm-delta-report/1";
pub const HORIZON_ENV: &str = "GWM_HORIZON";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub u: String,
    pub v: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub op: String,
    /// Overrides the job weights for this task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_support: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub weights: WeightSpec,
    #[serde(default)]
    pub defaults: Params,
    pub tasks: Vec<TaskSpec>,
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Job(format!("job file does not parse: {}", e)))
    }
}

/// Settings supplied outside the job file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    /// Value of the horizon environment variable, if set.
    pub env_horizon: Option<usize>,
}

impl Overrides {
    /// Reads the horizon environment variable; a malformed value is an error.
    pub fn from_env() -> Result<Self> {
        let env_horizon = match std::env::var(HORIZON_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse()
                    .map_err(|_| Error::Job(format!("{} must be a positive integer, got {:?}", HORIZON_ENV, s)))?,
            ),
            Err(_) => None,
        };
        Ok(Overrides {
            env_horizon,
            ..Overrides::default()
        })
    }
}

/// Fully resolved numeric parameters for one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub probe: ProbeConfig,
    pub max_cols: usize,
    pub prefix: usize,
    pub tail_horizon: usize,
    pub seed: u64,
}

pub fn resolve(task: &Params, defaults: &Params, o: &Overrides) -> Resolved {
    let builtin = ProbeConfig::default();
    let horizon = task
        .horizon
        .or(o.horizon)
        .or(defaults.horizon)
        .or(o.env_horizon)
        .unwrap_or(builtin.horizon);
    let tol = task.tol.or(o.tol).or(defaults.tol).unwrap_or(builtin.tol);
    let window = task.window.or(defaults.window).unwrap_or(builtin.window);
    Resolved {
        probe: ProbeConfig {
            horizon,
            window,
            tol,
            ..builtin
        },
        max_cols: task.max_cols.or(defaults.max_cols).unwrap_or(DEFAULT_MAX_COLS),
        prefix: task.prefix.or(defaults.prefix).unwrap_or(10),
        tail_horizon: task.tail_horizon.or(defaults.tail_horizon).unwrap_or(2 * horizon),
        seed: task.seed.or(o.seed).or(defaults.seed).unwrap_or(DEFAULT_SEED),
    }
}

/// A task with its inputs parsed and parameters resolved.
struct Prepared {
    op: Op,
    weights: Weights,
    seq: Option<Sequence>,
    matrix: Option<InfiniteMatrix>,
    space: Option<BaseSpace>,
    condition: Option<ToeplitzCondition>,
    k: Option<usize>,
    m: Option<usize>,
    rows: Option<usize>,
    params: Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    ForwardTransform,
    InverseTransform,
    Norm,
    Membership,
    BasisVector,
    Expand,
    PartialSumResidual,
    AdProbe,
    CheckAlpha,
    CheckBeta,
    CheckGamma,
    DualTransform,
    ClassifyIntoLinf,
    ClassifyIntoC,
    Toeplitz,
    Verify,
}

impl Op {
    fn parse(s: &str) -> Option<Op> {
        Some(match s {
            "forward_transform" => Op::ForwardTransform,
            "inverse_transform" => Op::InverseTransform,
            "norm" => Op::Norm,
            "membership" => Op::Membership,
            "basis_vector" => Op::BasisVector,
            "expand" => Op::Expand,
            "partial_sum_residual" => Op::PartialSumResidual,
            "ad_probe" => Op::AdProbe,
            "check_alpha" => Op::CheckAlpha,
            "check_beta" => Op::CheckBeta,
            "check_gamma" => Op::CheckGamma,
            "dual_transform" => Op::DualTransform,
            "classify_into_linf" => Op::ClassifyIntoLinf,
            "classify_into_c" => Op::ClassifyIntoC,
            "toeplitz" => Op::Toeplitz,
            "verify" => Op::Verify,
            _ => return None,
        })
    }

    /// Which sequence field the op reads, if any.
    fn sequence_field(self) -> Option<&'static str> {
        match self {
            Op::ForwardTransform | Op::Norm | Op::Membership | Op::Expand | Op::PartialSumResidual | Op::AdProbe => {
                Some("x")
            }
            Op::InverseTransform => Some("y"),
            Op::CheckAlpha | Op::CheckBeta | Op::CheckGamma => Some("a"),
            _ => None,
        }
    }

    fn needs_matrix(self) -> bool {
        matches!(self, Op::DualTransform | Op::ClassifyIntoLinf | Op::ClassifyIntoC | Op::Toeplitz)
    }
}

fn task_error(index: usize, field: &str, e: Error) -> Error {
    Error::Job(format!("task {} ({}): {}", index, field, e))
}

fn missing(index: usize, field: &str, op: &str) -> Error {
    Error::Job(format!("task {} ({}): `{}` requires field `{}`", index, field, op, field))
}

fn prepare(index: usize, t: &TaskSpec, job: &JobSpec, job_weights: &Weights, o: &Overrides) -> Result<Prepared> {
    let op = Op::parse(&t.op).ok_or_else(|| Error::Job(format!("task {} (op): unknown operation `{}`", index, t.op)))?;
    let weights = match &t.weights {
        Some(ws) => Weights::parse(&ws.u, &ws.v).map_err(|e| task_error(index, "weights", e))?,
        None => job_weights.clone(),
    };
    let seq = match op.sequence_field() {
        Some(field) => {
            let text = match field {
                "x" => &t.x,
                "y" => &t.y,
                _ => &t.a,
            };
            let text = text.as_ref().ok_or_else(|| missing(index, field, &t.op))?;
            Some(Sequence::parse(text).map_err(|e| task_error(index, field, e))?)
        }
        None => None,
    };
    let matrix = if op.needs_matrix() {
        let text = t.matrix.as_ref().ok_or_else(|| missing(index, "matrix", &t.op))?;
        Some(InfiniteMatrix::parse(text, t.row_support.as_deref()).map_err(|e| task_error(index, "matrix", e))?)
    } else {
        None
    };
    let space = match (&t.space, op) {
        (Some(s), _) => Some(
            BaseSpace::from_name(s)
                .ok_or_else(|| Error::Job(format!("task {} (space): unknown space `{}`", index, s)))?,
        ),
        (None, Op::Membership | Op::Expand | Op::CheckBeta) => return Err(missing(index, "space", &t.op)),
        (None, _) => None,
    };
    let condition = match (&t.condition, op) {
        (Some(c), _) => Some(
            ToeplitzCondition::from_name(c)
                .ok_or_else(|| Error::Job(format!("task {} (condition): unknown condition `{}`", index, c)))?,
        ),
        (None, Op::Toeplitz) => return Err(missing(index, "condition", &t.op)),
        (None, _) => None,
    };
    if op == Op::BasisVector && t.k.is_none() {
        return Err(missing(index, "k", &t.op));
    }
    if matches!(op, Op::PartialSumResidual | Op::AdProbe) && t.m.is_none() {
        return Err(missing(index, "m", &t.op));
    }
    let params = resolve(&t.params, &job.defaults, o);
    params.probe.validate().map_err(|e| task_error(index, "params", e))?;
    Ok(Prepared {
        op,
        weights,
        seq,
        matrix,
        space,
        condition,
        k: t.k,
        m: t.m,
        rows: t.rows,
        params,
    })
}

fn rationals(v: &[Rational]) -> serde_json::Value {
    v.iter().map(render).collect::<Vec<_>>().into()
}

/// Result body of one task plus the verdict that counts towards the exit code.
fn execute(p: &Prepared) -> Result<(serde_json::Value, Option<Verdict>)> {
    use serde_json::json;
    let w = &p.weights;
    let cfg = &p.params.probe;
    let seq = || p.seq.as_ref().expect("prepared sequence");
    let matrix = || p.matrix.as_ref().expect("prepared matrix");
    let space = || p.space.expect("prepared space");
    Ok(match p.op {
        Op::ForwardTransform => (json!({ "y": rationals(&forward_transform(w, seq()).prefix(p.params.prefix)?) }), None),
        Op::InverseTransform => (json!({ "x": rationals(&inverse_transform(w, seq()).prefix(p.params.prefix)?) }), None),
        Op::Norm => {
            let r = norm(w, seq(), cfg.horizon)?;
            let body = json!({ "value": render(&r.value), "argmax": r.argmax, "verdict": r.verdict.to_json() });
            (body, Some(r.verdict))
        }
        Op::Membership => {
            let v = membership(&SpaceId::weighted(space(), w.clone()), seq(), cfg)?;
            (json!({ "space": space().name(), "verdict": v.to_json() }), Some(v))
        }
        Op::BasisVector => {
            let k = p.k.expect("prepared k");
            let len = p.params.prefix.max(k + 2);
            (json!({ "k": k, "b": rationals(&basis_vector(w, k).prefix(len)?) }), None)
        }
        Op::Expand => {
            let e = expand(w, seq(), space(), cfg)?;
            let limit = e.limit.as_ref().map(|l| {
                json!({ "value": render(&l.value), "exact": l.exact, "verdict": l.verdict.to_json() })
            });
            let body = json!({
                "space": space().name(),
                "coefficients": rationals(&e.coefficients.prefix(p.params.prefix)?),
                "limit": limit,
                "limit_vector": e.limit_vector.as_ref().map(|z| z.prefix(p.params.prefix).map(|t| rationals(&t))).transpose()?,
                "membership": e.membership.to_json(),
            });
            (body, Some(e.membership))
        }
        Op::PartialSumResidual => {
            let m = p.m.expect("prepared m");
            let r = partial_sum_residual(w, seq(), m, cfg.horizon)?;
            (json!({ "m": m, "horizon": cfg.horizon, "residual": render(&r) }), None)
        }
        Op::AdProbe => {
            let m = p.m.expect("prepared m");
            let r = ad_probe(w, seq(), m, cfg.horizon)?;
            let body = json!({
                "m": m,
                "horizon": cfg.horizon,
                "residual": render(&r.residual),
                "approximant": rationals(&r.approximant),
                "hypothesis": "u in c_zero(u,v,Delta); reported, not required",
                "hypothesis_verdict": r.hypothesis.to_json(),
            });
            (body, None)
        }
        Op::CheckAlpha => {
            let r = check_alpha(w, seq(), cfg, p.params.max_cols)?;
            (r.to_json(), Some(r.overall))
        }
        Op::CheckBeta => {
            let r = check_beta(w, seq(), space(), cfg)?;
            (r.to_json(), Some(r.overall))
        }
        Op::CheckGamma => {
            let r = check_gamma(w, seq(), cfg)?;
            (r.to_json(), Some(r.overall))
        }
        Op::DualTransform => {
            let d = dual_transform(matrix(), w, p.params.tail_horizon);
            let rows = p.rows.unwrap_or(5);
            let body: Vec<serde_json::Value> = (0..rows)
                .map(|n| Ok(rationals(&d.row(n, p.params.tail_horizon)?)))
                .collect::<Result<_>>()?;
            (json!({ "rows": body, "approximate_tail": d.truncated_at() }), None)
        }
        Op::ClassifyIntoLinf => {
            let r = classify_into_linf(matrix(), w, cfg, p.params.tail_horizon)?;
            (r.to_json(), Some(r.overall))
        }
        Op::ClassifyIntoC => {
            let r = classify_into_c(matrix(), w, cfg, p.params.tail_horizon)?;
            (r.to_json(), Some(r.overall))
        }
        Op::Toeplitz => {
            let c = p.condition.expect("prepared condition");
            let v = toeplitz_condition(matrix(), c, cfg, p.params.tail_horizon, p.params.max_cols)?;
            (json!({ "condition": c.name(), "verdict": v.to_json() }), Some(v))
        }
        Op::Verify => {
            let r = verify_suite(p.params.seed)?;
            let v = if r.failed() == 0 {
                Verdict::holds(Default::default())
            } else {
                Verdict::fails(crate::verdict::Evidence {
                    witness: vec![r.failed()],
                    note: format!("{} oracle checks failed", r.failed()),
                    ..Default::default()
                })
            };
            (r.to_json(), Some(v))
        }
    })
}

#[derive(Debug, Clone)]
pub struct TaskResult {
    pub index: usize,
    pub op: String,
    pub outcome: Option<Outcome>,
    pub body: std::result::Result<serde_json::Value, String>,
    pub millis: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub job: JobSpec,
    pub results: Vec<TaskResult>,
}

impl Report {
    /// 0 when every verdict holds, 2 on any failure, 3 on any inconclusive
    /// verdict without failures, 1 when a task errored.
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.body.is_err()) {
            1
        } else if self.results.iter().any(|r| r.outcome == Some(Outcome::Fails)) {
            2
        } else if self.results.iter().any(|r| r.outcome == Some(Outcome::Inconclusive)) {
            3
        } else {
            0
        }
    }

    /// Everything except wall times; identical jobs give identical bodies.
    pub fn body(&self) -> serde_json::Value {
        let results: Vec<serde_json::Value> = self
            .results
            .iter()
            .map(|r| {
                let mut m = serde_json::Map::new();
                m.insert("index".into(), r.index.into());
                m.insert("op".into(), r.op.clone().into());
                m.insert(
                    "outcome".into(),
                    r.outcome.map_or(serde_json::Value::Null, |o| serde_json::to_value(o).expect("outcome")),
                );
                match &r.body {
                    Ok(b) => m.insert("result".into(), b.clone()),
                    Err(e) => m.insert("error".into(), e.clone().into()),
                };
                serde_json::Value::Object(m)
            })
            .collect();
        let count = |o: Outcome| self.results.iter().filter(|r| r.outcome == Some(o)).count();
        serde_json::json!({
            "schema": SCHEMA,
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "job": serde_json::to_value(&self.job).expect("job serializes"),
            "results": results,
            "summary": {
                "holds": count(Outcome::Holds),
                "fails": count(Outcome::Fails),
                "inconclusive": count(Outcome::Inconclusive),
                "errors": self.results.iter().filter(|r| r.body.is_err()).count(),
                "exit_code": self.exit_code(),
            },
        })
    }

    /// The body plus a `timing` section with per-task wall times.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.body();
        let timing: Vec<serde_json::Value> = self
            .results
            .iter()
            .map(|r| serde_json::json!({ "index": r.index, "millis": r.millis }))
            .collect();
        v["timing"] = serde_json::json!({ "tasks": timing });
        v
    }
}

/// Parses every task up front, so syntax errors surface before any work.
pub fn run_job(job: &JobSpec, o: &Overrides) -> Result<Report> {
    let weights = Weights::parse(&job.weights.u, &job.weights.v)
        .map_err(|e| Error::Job(format!("job weights: {}", e)))?;
    let prepared: Vec<Prepared> = job
        .tasks
        .iter()
        .enumerate()
        .map(|(i, t)| prepare(i, t, job, &weights, o))
        .collect::<Result<_>>()?;
    let results: Vec<TaskResult> = prepared
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let start = Instant::now();
            let outcome = execute(p);
            let millis = start.elapsed().as_secs_f64() * 1e3;
            let (body, outcome) = match outcome {
                Ok((b, v)) => (Ok(b), v.map(|v| v.outcome)),
                Err(e) => (Err(format!("task {}: {}", i, e)), None),
            };
            TaskResult {
                index: i,
                op: job.tasks[i].op.clone(),
                outcome,
                body,
                millis,
            }
        })
        .collect();
    Ok(Report {
        job: job.clone(),
        results,
    })
}

pub fn run_job_file(path: &std::path::Path, o: &Overrides) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Job(format!("cannot read {}: {}", path.display(), e)))?;
    run_job(&JobSpec::from_json(&text)?, o)
}
