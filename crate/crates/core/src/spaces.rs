//! The spaces `λ(u,v,Δ)` for `λ ∈ {ℓ∞, c, c₀}`: transforms, norm,
//! membership, Schauder basis and expansions.

use std::fmt;

use num_traits::{FromPrimitive, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::sequence::Sequence;
use crate::triangle::{solve_leading_block, Triangle};
use crate::verdict::{bounded_probe, limit_probe_samples, limit_probe_with, sample_sequence, Evidence, ProbeConfig, Verdict};
use crate::weights::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseSpace {
    EllInfinity,
    C,
    CZero,
}

impl BaseSpace {
    pub fn name(self) -> &'static str {
        match self {
            BaseSpace::EllInfinity => "ell_infinity",
            BaseSpace::C => "c",
            BaseSpace::CZero => "c_zero",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ell_infinity" | "linf" | "l_inf" => Some(BaseSpace::EllInfinity),
            "c" => Some(BaseSpace::C),
            "c_zero" | "c0" => Some(BaseSpace::CZero),
            _ => None,
        }
    }
}

impl fmt::Display for BaseSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A classical space (`weights == None`) or its weighted difference
/// counterpart `λ(u,v,Δ)`.
#[derive(Debug, Clone)]
pub struct SpaceId {
    pub base: BaseSpace,
    pub weights: Option<Weights>,
}

impl SpaceId {
    pub fn classical(base: BaseSpace) -> Self {
        SpaceId { base, weights: None }
    }

    pub fn weighted(base: BaseSpace, weights: Weights) -> Self {
        SpaceId {
            base,
            weights: Some(weights),
        }
    }

    /// The sequence whose membership in the base space decides membership here.
    pub fn transform(&self, x: &Sequence) -> Sequence {
        match &self.weights {
            Some(w) => forward_transform(w, x),
            None => x.clone(),
        }
    }
}

/// `y_n = u_n Σ_{i≤n} v_i Δx_i`, computed through running partial sums.
pub fn forward_transform(w: &Weights, x: &Sequence) -> Sequence {
    let weighted = {
        let dx = x.delta();
        let w = w.clone();
        Sequence::from_fn("v·Δx", move |i| Ok(w.v(i)? * dx.at(i)?))
    };
    let sums = weighted.partial_sums();
    let w = w.clone();
    Sequence::from_fn(format!("G·Δ({})", x.label()), move |n| Ok(w.u(n)? * sums.at(n)?))
}

/// The same transform evaluated row by row through the operator matrix.
pub fn forward_transform_by_matrix(w: &Weights, x: &Sequence) -> Sequence {
    Triangle::gwm_delta(w).apply_seq(x)
}

/// `x_k = Σ_{i<k} (1/u_i)(1/v_i - 1/v_{i+1}) y_i + y_k / (u_k v_k)`.
pub fn inverse_transform(w: &Weights, y: &Sequence) -> Sequence {
    let weighted = {
        let (w, y) = (w.clone(), y.clone());
        Sequence::from_fn("∇(1/v)·y/u", move |i| {
            Ok(w.inv_u(i)? * w.nabla_inv_v(i)? * y.at(i)?)
        })
    };
    let sums = weighted.partial_sums();
    let (w, y) = (w.clone(), y.clone());
    Sequence::from_fn(format!("inv_transform({})", y.label()), move |k| {
        let head = if k == 0 { Rational::zero() } else { sums.at(k - 1)? };
        Ok(head + y.at(k)? * w.inv_u(k)? * w.inv_v(k)?)
    })
}

#[derive(Debug, Clone)]
pub struct NormReport {
    /// `max_{k≤H} |y_k|`, exact.
    pub value: Rational,
    pub argmax: usize,
    /// Whether `|y_k|` looks bounded beyond the horizon.
    pub verdict: Verdict,
}

/// `‖x‖ = sup_k |y_k|`, taken exactly over `k ≤ horizon`, plus a verdict on
/// the tail.
pub fn norm(w: &Weights, x: &Sequence, horizon: usize) -> Result<NormReport> {
    norm_of_transform(&forward_transform(w, x), horizon)
}

fn norm_of_transform(y: &Sequence, horizon: usize) -> Result<NormReport> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("norm horizon must be at least 1".into()));
    }
    let (value, argmax) = max_abs(y, 0, horizon)?.unwrap_or((Rational::zero(), 0));
    let cfg = ProbeConfig::default().with_horizon(horizon.max(4));
    let verdict = bounded_probe(y, &ProbeConfig { window: cfg.window.min(horizon.max(4) - 1).max(2), ..cfg })?;
    Ok(NormReport { value, argmax, verdict })
}

/// `max_{from≤k≤to} |s_k|` with the first index attaining it.
fn max_abs(s: &Sequence, from: usize, to: usize) -> Result<Option<(Rational, usize)>> {
    let mut best: Option<(Rational, usize)> = None;
    for k in from..=to {
        let a = s.at(k)?.abs();
        if best.as_ref().is_none_or(|(b, _)| a > *b) {
            best = Some((a, k));
        }
    }
    Ok(best)
}

/// Evidence that `x` belongs to `space`: boundedness for `ℓ∞`, convergence
/// for `c`, convergence to zero for `c₀`, all judged on the transform.
pub fn membership(space: &SpaceId, x: &Sequence, cfg: &ProbeConfig) -> Result<Verdict> {
    let y = space.transform(x);
    match space.base {
        BaseSpace::EllInfinity => bounded_probe(&y, cfg),
        BaseSpace::C => limit_probe_with(&y, cfg),
        BaseSpace::CZero => {
            let v = limit_probe_with(&y, cfg)?;
            Ok(require_zero_limit(v, cfg))
        }
    }
}

fn require_zero_limit(v: Verdict, cfg: &ProbeConfig) -> Verdict {
    match v.limit() {
        Some(l) if v.is_holds() && l.abs() > cfg.tol => Verdict::fails(Evidence {
            witness: vec![cfg.horizon],
            note: format!("transform converges to {:e}, not to 0", l),
            ..v.evidence
        }),
        _ => v,
    }
}

/// `b^(k)`, column `k` of the inverse operator: `0` above row `k`,
/// `1/(u_k v_k)` at row `k`, the constant `(1/u_k)(1/v_k - 1/v_{k+1})` below.
pub fn basis_vector(w: &Weights, k: usize) -> Sequence {
    let w = w.clone();
    Sequence::from_fn(format!("b^({})", k), move |n| {
        if n < k {
            Ok(Rational::zero())
        } else if n == k {
            Ok(w.inv_u(k)? * w.inv_v(k)?)
        } else {
            Ok(w.inv_u(k)? * w.nabla_inv_v(k)?)
        }
    })
}

#[derive(Debug, Clone)]
pub struct LimitPart {
    pub value: Rational,
    /// False when the limit had to be read off a floating-point estimate.
    pub exact: bool,
    pub verdict: Verdict,
}

/// `x = Σ λ_k b^(k)` (base `c₀`) or `x = l·z + Σ (λ_k - l) b^(k)` (base `c`),
/// where `z` is the preimage of the constant sequence 1. `z = e` exactly when
/// `u_k v_0 = 1` for every `k`.
#[derive(Debug, Clone)]
pub struct BasisExpansion {
    pub base: BaseSpace,
    pub coefficients: Sequence,
    pub limit: Option<LimitPart>,
    /// `z`, present for base `c`.
    pub limit_vector: Option<Sequence>,
    /// Membership evidence for `x`; anything but `Holds` means the expansion
    /// is formal only.
    pub membership: Verdict,
}

pub fn expand(w: &Weights, x: &Sequence, base: BaseSpace, cfg: &ProbeConfig) -> Result<BasisExpansion> {
    let space = SpaceId::weighted(base, w.clone());
    let y = forward_transform(w, x);
    match base {
        BaseSpace::EllInfinity => Err(Error::NoBasis),
        BaseSpace::CZero => Ok(BasisExpansion {
            base,
            coefficients: y,
            limit: None,
            limit_vector: None,
            membership: membership(&space, x, cfg)?,
        }),
        BaseSpace::C => {
            cfg.validate()?;
            let idx: Vec<usize> = (0..=cfg.horizon).collect();
            let samples = sample_sequence(&y, &idx)?;
            let verdict = limit_probe_samples(&samples, cfg);
            let tail: Vec<Rational> = (cfg.horizon + 1 - cfg.window..=cfg.horizon)
                .map(|k| y.at(k))
                .collect::<Result<_>>()?;
            let (value, exact) = if tail.iter().all(|t| *t == tail[0]) {
                (tail[0].clone(), true)
            } else {
                let l = verdict.limit().unwrap_or(0.0);
                (Rational::from_f64(l).unwrap_or_else(Rational::zero), false)
            };
            let l = value.clone();
            let coefficients = Sequence::from_fn("λ - l", move |k| Ok(y.at(k)? - &l));
            Ok(BasisExpansion {
                base,
                coefficients,
                limit: Some(LimitPart {
                    value,
                    exact,
                    verdict: verdict.clone(),
                }),
                limit_vector: Some(inverse_transform(w, &Sequence::ones())),
                membership: verdict,
            })
        }
    }
}

/// `‖x - S_m‖` over `k ≤ horizon`, with `S_m = Σ_{k≤m} λ_k b^(k)`.
///
/// The residual is computed from the basis vectors and checked against
/// `max_{m<k≤H} |y_k|`, which it must equal because `G(u,v,Δ) S_m` is `y`
/// cut off after index `m`.
pub fn partial_sum_residual(w: &Weights, x: &Sequence, m: usize, horizon: usize) -> Result<Rational> {
    if horizon <= m {
        return Err(Error::InvalidArgument(format!("horizon {} must exceed m = {}", horizon, m)));
    }
    let y = forward_transform(w, x);
    let terms: Vec<(Rational, Sequence)> = (0..=m)
        .map(|k| Ok((y.at(k)?, basis_vector(w, k))))
        .collect::<Result<_>>()?;
    let s_m = Sequence::linear_combination(terms);
    let residual = forward_transform(w, &x.sub(&s_m));
    let direct = max_abs(&residual, 0, horizon)?.map(|(v, _)| v).unwrap_or_else(Rational::zero);
    let via_tail = max_abs(&y, m + 1, horizon)?.map(|(v, _)| v).unwrap_or_else(Rational::zero);
    if direct != via_tail {
        return Err(Error::KernelMismatch(format!(
            "residual {} from basis vectors differs from tail supremum {} at m = {}",
            direct, via_tail, m
        )));
    }
    Ok(direct)
}

#[derive(Debug, Clone)]
pub struct AdProbe {
    /// `max_{m<k≤H} |y_k - (G(u,v,Δ) z)_k|`
    pub residual: Rational,
    /// The finitely supported approximant `z_0..z_m`.
    pub approximant: Vec<Rational>,
    /// Evidence for the density hypothesis `u ∈ c₀(u,v,Δ)`; reported, not required.
    pub hypothesis: Verdict,
}

/// Distance from `x` to the finitely supported `z` (support `⊆ {0..m}`) that
/// matches the transform of `x` on `k ≤ m`. A decreasing trend in `m` is
/// evidence that finitely supported sequences are dense.
pub fn ad_probe(w: &Weights, x: &Sequence, m: usize, horizon: usize) -> Result<AdProbe> {
    let g = Triangle::gwm_delta(w);
    let y = forward_transform(w, x);
    let rhs: Vec<Rational> = (0..=m).map(|k| y.at(k)).collect::<Result<_>>()?;
    let z = solve_leading_block(&g, &rhs)?;
    let mut residual = Rational::zero();
    for k in (m + 1)..=horizon {
        let mut gz = Rational::zero();
        for (i, zi) in z.iter().enumerate() {
            if !zi.is_zero() {
                gz += g.entry(k, i)? * zi;
            }
        }
        let d = (y.at(k)? - gz).abs();
        if d > residual {
            residual = d;
        }
    }
    let cfg = ProbeConfig::default().with_horizon(horizon.max(100));
    let hypothesis = membership(&SpaceId::weighted(BaseSpace::CZero, w.clone()), w.u_seq(), &cfg)?;
    Ok(AdProbe {
        residual,
        approximant: z,
        hypothesis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::verdict::Outcome;

    fn w_eh() -> Weights {
        Weights::parse("e", "harmonic").unwrap()
    }

    /// `Σ_{i≤n} u_n v_i (x_i - x_{i-1})` term by term, nothing shared.
    fn naive_transform(w: &Weights, x: &Sequence, n: usize) -> Rational {
        let mut acc = Rational::zero();
        for i in 0..=n {
            let dx = x.eval(i as i64).unwrap() - x.eval(i as i64 - 1).unwrap();
            acc += w.u(n).unwrap() * w.v(i).unwrap() * dx;
        }
        acc
    }

    #[test]
    fn forward_examples() {
        let y = forward_transform(&Weights::trivial(), &Sequence::enumerate());
        assert_eq!(y.prefix(5).unwrap(), (1..=5).map(int).collect::<Vec<_>>());
        let y = forward_transform(&w_eh(), &Sequence::ones());
        assert_eq!(y.prefix(5).unwrap(), vec![int(1); 5]);
    }

    #[test]
    fn forward_matches_naive_sum() {
        let w = Weights::parse("(k+2)/(k+1)", "geometric(-2/3)").unwrap();
        let x = Sequence::parse("(k^2 - 3*k + 1)/(k + 4)").unwrap();
        let fast = forward_transform(&w, &x);
        let by_matrix = forward_transform_by_matrix(&w, &x);
        for n in 0..40 {
            let expected = naive_transform(&w, &x, n);
            assert_eq!(fast.at(n).unwrap(), expected);
            assert_eq!(by_matrix.at(n).unwrap(), expected);
        }
    }

    #[test]
    fn inverse_examples() {
        let x = Sequence::parse("k^3 - 2").unwrap();
        let back = inverse_transform(&Weights::trivial(), &x);
        assert_eq!(back.prefix(20).unwrap(), x.prefix(20).unwrap());

        let x = Sequence::enumerate();
        let y = forward_transform(&w_eh(), &x);
        assert_eq!(y.at(1).unwrap(), ratio(3, 2));
        assert_eq!(inverse_transform(&w_eh(), &y).prefix(30).unwrap(), x.prefix(30).unwrap());

        let j = 4;
        let x = inverse_transform(&w_eh(), &Sequence::unit(j));
        assert_eq!(x.prefix(20).unwrap(), basis_vector(&w_eh(), j).prefix(20).unwrap());
    }

    #[test]
    fn norm_examples() {
        let r = norm(&Weights::trivial(), &Sequence::harmonic(), 100).unwrap();
        assert_eq!((r.value.clone(), r.argmax), (int(1), 0));
        assert!(r.verdict.is_holds());

        let r = norm(&Weights::trivial(), &Sequence::enumerate(), 100).unwrap();
        assert_eq!(r.verdict.outcome, Outcome::Fails);
        assert!(!r.verdict.evidence.witness.is_empty());

        let y = Sequence::geometric(ratio(1, 2));
        let x = inverse_transform(&w_eh(), &y);
        let r = norm(&w_eh(), &x, 100).unwrap();
        assert_eq!(r.value, int(1));
        assert!(r.verdict.is_holds());
    }

    #[test]
    fn membership_examples() {
        let cfg = ProbeConfig::default().with_horizon(300);
        let w = w_eh();
        let b3 = basis_vector(&w, 3);
        let c0 = SpaceId::weighted(BaseSpace::CZero, w.clone());
        assert!(membership(&c0, &b3, &cfg).unwrap().is_holds());

        let c = SpaceId::weighted(BaseSpace::C, Weights::trivial());
        let v = membership(&c, &Sequence::ones(), &cfg).unwrap();
        assert!(v.is_holds());
        assert_eq!(v.limit(), Some(1.0));
        let c0e = SpaceId::weighted(BaseSpace::CZero, Weights::trivial());
        assert!(membership(&c0e, &Sequence::ones(), &cfg).unwrap().is_fails());

        let alt = Sequence::parse("(-1)^k").unwrap();
        let linf = SpaceId::weighted(BaseSpace::EllInfinity, Weights::trivial());
        assert!(membership(&linf, &alt, &cfg).unwrap().is_holds());
        assert!(membership(&c, &alt, &cfg).unwrap().is_fails());
    }

    #[test]
    fn basis_vector_examples() {
        for k in 0..5 {
            assert_eq!(
                basis_vector(&Weights::trivial(), k).prefix(10).unwrap(),
                Sequence::unit(k).prefix(10).unwrap()
            );
        }
        let b0 = basis_vector(&w_eh(), 0);
        assert_eq!(b0.prefix(4).unwrap(), vec![int(1), int(-1), int(-1), int(-1)]);
        let w = Weights::parse("k + 1", "geometric(3/2)").unwrap();
        for k in 0..=30 {
            let y = forward_transform(&w, &basis_vector(&w, k));
            assert_eq!(y.prefix(40).unwrap(), Sequence::unit(k).prefix(40).unwrap(), "k = {}", k);
        }
    }

    #[test]
    fn expansion_examples() {
        let cfg = ProbeConfig::default().with_horizon(200);
        let w = w_eh();
        let e = expand(&w, &basis_vector(&w, 2), BaseSpace::CZero, &cfg).unwrap();
        assert_eq!(e.coefficients.prefix(6).unwrap(), Sequence::unit(2).prefix(6).unwrap());
        assert!(e.membership.is_holds());

        let e = expand(&Weights::trivial(), &Sequence::ones(), BaseSpace::C, &cfg).unwrap();
        let l = e.limit.unwrap();
        assert_eq!((l.value, l.exact), (int(1), true));
        assert_eq!(e.coefficients.prefix(10).unwrap(), vec![int(0); 10]);

        let x = inverse_transform(&w, &Sequence::geometric(ratio(1, 2)));
        let e = expand(&w, &x, BaseSpace::CZero, &cfg).unwrap();
        assert_eq!(e.coefficients.at(7).unwrap(), ratio(1, 128));

        assert_eq!(
            expand(&w, &x, BaseSpace::EllInfinity, &cfg).unwrap_err(),
            Error::NoBasis
        );
    }

    #[test]
    fn expansion_over_c_uses_limit_vector() {
        let cfg = ProbeConfig::default().with_horizon(200);
        let w = Weights::parse("harmonic", "e").unwrap();
        let y = Sequence::from_prefix("y", vec![int(1), int(-2)], int(3));
        let x = inverse_transform(&w, &y);
        let e = expand(&w, &x, BaseSpace::C, &cfg).unwrap();
        let l = e.limit.unwrap();
        assert_eq!((l.value.clone(), l.exact), (int(3), true));
        let z = e.limit_vector.unwrap();
        assert_ne!(z.prefix(5).unwrap(), vec![int(1); 5]);
        for n in 0..12 {
            let mut rebuilt = &l.value * z.at(n).unwrap();
            for k in 0..=n {
                rebuilt += e.coefficients.at(k).unwrap() * basis_vector(&w, k).at(n).unwrap();
            }
            assert_eq!(rebuilt, x.at(n).unwrap(), "n = {}", n);
        }

        let z = expand(&w_eh(), &Sequence::ones(), BaseSpace::C, &cfg).unwrap().limit_vector.unwrap();
        assert_eq!(z.prefix(8).unwrap(), vec![int(1); 8]);
    }

    #[test]
    fn residual_examples() {
        let w = w_eh();
        let x = inverse_transform(&w, &Sequence::geometric(ratio(1, 2)));
        for m in 0..8 {
            let r = partial_sum_residual(&w, &x, m, 40).unwrap();
            assert_eq!(r, Rational::new(1.into(), num_bigint::BigInt::from(2).pow(m as u32 + 1)));
        }
        let finite = inverse_transform(&w, &Sequence::finite(vec![int(3), int(-1), ratio(1, 2)]));
        assert_eq!(partial_sum_residual(&w, &finite, 2, 30).unwrap(), int(0));
        assert_eq!(
            partial_sum_residual(&Weights::trivial(), &Sequence::unit(0), 0, 10).unwrap(),
            int(0)
        );
        assert!(partial_sum_residual(&w, &x, 5, 5).is_err());
    }

    #[test]
    fn ad_probe_examples() {
        let x = Sequence::finite(vec![int(2), ratio(-1, 3), int(5)]);
        assert_eq!(ad_probe(&Weights::trivial(), &x, 3, 50).unwrap().residual, int(0));

        let t = Weights::trivial();
        let y = Sequence::parse("(k+3)/(k^2+1)").unwrap();
        for m in 0..6 {
            assert_eq!(
                ad_probe(&t, &y, m, 60).unwrap().residual,
                partial_sum_residual(&t, &y, m, 60).unwrap()
            );
        }

        // y = 2^-k under (e, harmonic): the residual is (2 - 2^-m)/(m+2) - 2^-H
        let w = w_eh();
        let x = inverse_transform(&w, &Sequence::geometric(ratio(1, 2)));
        let h = 60u32;
        let mut prev: Option<Rational> = None;
        for m in 0..=10u32 {
            let r = ad_probe(&w, &x, m as usize, h as usize).unwrap().residual;
            let two = num_bigint::BigInt::from(2);
            let expected = (int(2) - Rational::new(1.into(), two.pow(m))) / int(m as i64 + 2)
                - Rational::new(1.into(), two.pow(h));
            assert_eq!(r, expected, "m = {}", m);
            if let Some(p) = &prev {
                assert!(&r <= p);
            }
            prev = Some(r);
        }
    }
}
