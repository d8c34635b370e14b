//! Basis vectors, expansions and the decay of partial-sum residuals.

use gwm_delta::rational::{render, to_f64};
use gwm_delta::spaces::{basis_vector, expand, forward_transform, partial_sum_residual, BaseSpace};
use gwm_delta::{ProbeConfig, Sequence, Weights};

fn main() -> gwm_delta::Result<()> {
    let w = Weights::parse("e", "harmonic")?;
    for k in 0..3 {
        let b = basis_vector(&w, k);
        let terms: Vec<String> = b.prefix(6)?.iter().map(render).collect();
        let y: Vec<String> = forward_transform(&w, &b).prefix(6)?.iter().map(render).collect();
        println!("b({}) = {}   transform = {}", k, terms.join(", "), y.join(", "));
    }

    let x = Sequence::parse("1/(k+1)^2")?;
    let e = expand(&w, &x, BaseSpace::C, &ProbeConfig::default())?;
    let coeffs: Vec<String> = e.coefficients.prefix(4)?.iter().map(|c| format!("{:.6}", to_f64(c))).collect();
    println!("coefficients over c: {} ...", coeffs.join(", "));
    if let Some(l) = &e.limit {
        println!("limit part ≈ {:.9} ({:?})", to_f64(&l.value), l.verdict.outcome);
    }

    let trivial = Weights::trivial();
    let g = Sequence::geometric(gwm_delta::rational::ratio(1, 2));
    for m in [0, 5, 10, 20] {
        let r = partial_sum_residual(&trivial, &g, m, 200)?;
        println!("residual after {} terms: {}", m + 1, render(&r));
    }
    Ok(())
}
