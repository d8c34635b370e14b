//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gwm_delta::duals::{alpha_matrix, beta_matrix, check_alpha, check_beta, check_gamma, DEFAULT_MAX_COLS};
use gwm_delta::matclass::{classify_into_c, dual_transform, InfiniteMatrix};
use gwm_delta::rational::{int, ratio, render, Rational};
use gwm_delta::spaces::{basis_vector, forward_transform, inverse_transform, norm, partial_sum_residual, BaseSpace};
use gwm_delta::verdict::Outcome;
use gwm_delta::verify::{verify_suite, DEFAULT_SEED};
use gwm_delta::{ProbeConfig, Sequence, Triangle, Weights};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const SEED: u64 = 0x5eed_0001;

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

fn random_rational(r: &mut ChaCha8Rng) -> Rational {
    ratio(r.gen_range(-30..=30), r.gen_range(1..=17))
}

fn random_nonzero(r: &mut ChaCha8Rng) -> Rational {
    loop {
        let q = random_rational(r);
        if !q.is_zero() {
            return q;
        }
    }
}

fn random_terms(r: &mut ChaCha8Rng, len: usize) -> Vec<Rational> {
    (0..len).map(|_| random_rational(r)).collect()
}

/// The five weight pairs used throughout; the last one is random.
fn weight_pairs(len: usize) -> Vec<(&'static str, Weights)> {
    let mut r = rng(99);
    let u: Vec<Rational> = (0..len).map(|_| random_nonzero(&mut r)).collect();
    let v: Vec<Rational> = (0..len).map(|_| random_nonzero(&mut r)).collect();
    let random = Weights::new(
        Sequence::from_prefix("random u", u, int(1)),
        Sequence::from_prefix("random v", v, int(1)),
    )
    .expect("nonzero weights");
    vec![
        ("(e,e)", Weights::trivial()),
        ("(e,harmonic)", Weights::parse("e", "harmonic").unwrap()),
        ("(harmonic,e)", Weights::parse("harmonic", "e").unwrap()),
        ("(geometric(1/2),e)", Weights::parse("geometric(1/2)", "e").unwrap()),
        ("random", random),
    ]
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: gwm_delta::Error) -> String {
    e.to_string()
}

fn roundtrip() -> Check {
    const LEN: usize = 256;
    let mut r = rng(1);
    let pairs = weight_pairs(LEN + 2);
    for i in 0..100 {
        let x = Sequence::finite(random_terms(&mut r, LEN));
        let (name, w) = &pairs[i % pairs.len()];
        let back = inverse_transform(w, &forward_transform(w, &x));
        for k in 0..LEN {
            ensure(back.at(k).map_err(err)? == x.at(k).map_err(err)?, || {
                format!("sequence {} at {}: index {} differs", i, name, k)
            })?;
        }
    }
    Ok(format!("100 sequences of length {} over 5 weight pairs", LEN))
}

fn closed_form_inverse() -> Check {
    const N: usize = 100;
    for (name, w) in weight_pairs(N + 2) {
        let solved = Triangle::invert(&Triangle::gwm_delta(&w)).map_err(err)?;
        let closed = Triangle::gwm_delta_inverse(&w);
        for n in 0..=N {
            ensure(solved.row(n).map_err(err)? == closed.row(n).map_err(err)?, || {
                format!("{}: row {} differs", name, n)
            })?;
        }
    }
    Ok(format!("(n,k) ≤ {} on 5 weight pairs", N))
}

fn kernel_consistency() -> Check {
    const N: usize = 100;
    for (name, w) in weight_pairs(N + 2) {
        let g = Triangle::gwm_delta(&w);
        let composed = Triangle::compose(&Triangle::factorable(&w), &Triangle::difference());
        for n in 0..=N {
            ensure(g.row(n).map_err(err)? == composed.row(n).map_err(err)?, || {
                format!("{}: row {} differs", name, n)
            })?;
        }
    }
    Ok(format!("(n,k) ≤ {} on 5 weight pairs", N))
}

fn basis() -> Check {
    const LEN: usize = 64;
    for (name, w) in weight_pairs(LEN + 2) {
        for k in 0..=30 {
            let y = forward_transform(&w, &basis_vector(&w, k));
            for n in 0..LEN {
                let expected = if n == k { int(1) } else { Rational::zero() };
                ensure(y.at(n).map_err(err)? == expected, || format!("{}: transform of b({}) at {}", name, k, n))?;
            }
        }
        let x = inverse_transform(&w, &Sequence::geometric(ratio(1, 2)));
        for m in 0..=20 {
            let residual = partial_sum_residual(&w, &x, m, 200).map_err(err)?;
            let expected = ratio(1, 1 << (m + 1));
            ensure(residual == expected, || {
                format!("{}: residual at m = {} is {}, expected {}", name, m, render(&residual), render(&expected))
            })?;
        }
    }
    Ok("b(k) maps to e(k) for k ≤ 30; residuals 2^-(m+1) for m ≤ 20".into())
}

fn isometry() -> Check {
    const H: usize = 200;
    let mut r = rng(5);
    let pairs = weight_pairs(H + 2);
    for i in 0..50 {
        let (name, w) = &pairs[i % pairs.len()];
        let y = Sequence::finite(random_terms(&mut r, H + 1));
        let expected = y.prefix(H + 1).map_err(err)?.into_iter().map(|t| t.abs()).max().unwrap();
        let got = norm(w, &inverse_transform(w, &y), H).map_err(err)?.value;
        ensure(got == expected, || format!("draw {} at {}: norm {} != {}", i, name, render(&got), render(&expected)))?;
    }
    Ok(format!("50 random y, H = {}", H))
}

fn dual_matrices() -> Check {
    const N: usize = 100;
    let mut r = rng(6);
    for (name, w) in weight_pairs(N + 2) {
        for trial in 0..20 {
            let a = Sequence::finite(random_terms(&mut r, N + 1));
            let y = Sequence::finite(random_terms(&mut r, N + 1));
            let x = inverse_transform(&w, &y);
            let (b, c) = (alpha_matrix(&w, &a), beta_matrix(&w, &a));
            let mut running = Rational::zero();
            for n in 0..=N {
                let ax = a.at(n).map_err(err)? * x.at(n).map_err(err)?;
                running += &ax;
                ensure(b.apply(&y, n).map_err(err)? == ax, || format!("{} trial {}: (B y)_{}", name, trial, n))?;
                ensure(c.apply(&y, n).map_err(err)? == running, || format!("{} trial {}: (C y)_{}", name, trial, n))?;
            }
        }
    }
    Ok(format!("20 (a, y) pairs per weight pair, n ≤ {}", N))
}

fn classical_duals() -> Check {
    let w = Weights::trivial();
    let cfg = ProbeConfig::default();
    let cases = [
        ("geometric(1/2)", Outcome::Holds),
        ("unit(3)", Outcome::Holds),
        ("0", Outcome::Holds),
        ("e", Outcome::Fails),
        ("harmonic", Outcome::Fails),
    ];
    for (text, expected) in cases {
        let a = Sequence::parse(text).map_err(err)?;
        let got = [
            ("alpha", check_alpha(&w, &a, &cfg, DEFAULT_MAX_COLS).map_err(err)?.overall.outcome),
            ("beta(c0)", check_beta(&w, &a, BaseSpace::CZero, &cfg).map_err(err)?.overall.outcome),
            ("gamma", check_gamma(&w, &a, &cfg).map_err(err)?.overall.outcome),
        ];
        for (dual, outcome) in got {
            ensure(outcome == expected, || format!("{} for {}: {:?}, expected {:?}", dual, text, outcome, expected))?;
        }
    }
    Ok("α, β(c0), γ agree with ℓ1 membership on 5 multipliers".into())
}

fn matrix_classification() -> Check {
    let w = Weights::trivial();
    let cfg = ProbeConfig::default().with_horizon(10_000).with_tol(1e-6);
    for text in ["identity", "cesaro"] {
        let a = InfiniteMatrix::parse(text, None).map_err(err)?;
        let r = classify_into_c(&a, &w, &cfg, 2 * cfg.horizon).map_err(err)?;
        ensure(r.overall.outcome == Outcome::Holds, || format!("{}: overall {:?}: {}", text, r.overall.outcome, r.overall.evidence.note))?;
        let alpha = r.alpha.ok_or_else(|| format!("{}: no α extracted", text))?;
        ensure((alpha - 1.0).abs() <= 1e-6, || format!("{}: α = {}", text, alpha))?;
        ensure(!r.alpha_k.is_empty(), || format!("{}: no α_k probed", text))?;
        for (k, ak) in &r.alpha_k {
            let ak = ak.ok_or_else(|| format!("{}: α_{} not extracted", text, k))?;
            ensure(ak.abs() <= 1e-6, || format!("{}: α_{} = {}", text, k, ak))?;
        }
    }
    let diag = InfiniteMatrix::parse("diagonal(n+1)", None).map_err(err)?;
    let r = classify_into_c(&diag, &w, &cfg, 2 * cfg.horizon).map_err(err)?;
    let v = r.conditions.get("4.1").ok_or("diagonal: condition 4.1 missing")?;
    ensure(v.outcome == Outcome::Fails && !v.evidence.witness.is_empty(), || {
        format!("diagonal(n+1): 4.1 is {:?} with witness {:?}", v.outcome, v.evidence.witness)
    })?;
    Ok(format!("identity and cesaro regular at H = 10^4; diagonal(n+1) fails 4.1 at {:?}", v.evidence.witness))
}

fn truncated_product() -> Check {
    const N: usize = 60;
    let mut r = rng(9);
    let pairs = weight_pairs(2 * N + 8);
    for i in 0..10 {
        let (name, w) = &pairs[i % pairs.len()];
        let shift = r.gen_range(0..4usize);
        let entries = random_terms(&mut r, 257);
        let a = InfiniteMatrix::row_finite(
            "random",
            move |n, k| {
                Ok(if k <= n + shift {
                    entries[(n * 31 + k * 17) % entries.len()].clone()
                } else {
                    Rational::zero()
                })
            },
            move |n| Ok(n + shift),
        );
        let inv = Triangle::gwm_delta_inverse(w);
        let d = dual_transform(&a, w, 0);
        for n in 0..=N {
            let an = a.row(n, 0).map_err(err)?;
            let got = d.row(n, 0).map_err(err)?;
            for k in 0..an.len() {
                let mut expected = Rational::zero();
                for (j, x) in an.iter().enumerate().skip(k) {
                    expected += x * inv.entry(j, k).map_err(err)?;
                }
                let entry = got.get(k).cloned().unwrap_or_else(Rational::zero);
                ensure(entry == expected, || format!("matrix {} at {}: D({},{}) differs", i, name, n, k))?;
            }
        }
    }
    Ok(format!("10 random row-finite matrices, n ≤ {}", N))
}

fn cli_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_gwm-delta");
    let job = concat!(env!("CARGO_MANIFEST_DIR"), "/jobs/example.json");
    let body = || -> Result<String, String> {
        let out = Command::new(bin).args(["run", job]).env_remove("GWM_HORIZON").output().map_err(|e| e.to_string())?;
        ensure(matches!(out.status.code(), Some(0 | 2 | 3)), || {
            format!("run exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        v.as_object_mut().ok_or("report is not an object")?.remove("timing");
        Ok(v.to_string())
    };
    let (first, second) = (body()?, body()?);
    ensure(first == second, || "report bodies differ between runs".into())?;

    let out = Command::new(bin).arg("verify").output().map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure(out.status.success() && v["failed"] == 0 && v["seed"] == DEFAULT_SEED, || format!("verify: {}", v))?;
    let direct = verify_suite(DEFAULT_SEED).map_err(err)?;
    Ok(format!("identical bodies ({} bytes); verify passed {} checks", first.len(), direct.passed()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exact roundtrip", roundtrip),
        ("closed-form inverse", closed_form_inverse),
        ("kernel consistency", kernel_consistency),
        ("basis", basis),
        ("isometry", isometry),
        ("dual-matrix oracles", dual_matrices),
        ("classical duals", classical_duals),
        ("matrix classification", matrix_classification),
        ("truncated product", truncated_product),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] criterion {:>2} {}: {} ({:.2}s)", i + 1, name, detail, secs),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {:>2} {}: {} ({:.2}s)", i + 1, name, detail, secs);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
