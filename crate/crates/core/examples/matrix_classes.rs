//! Classifying infinite matrices as maps out of c(u,v,Δ).

use gwm_delta::matclass::{classify_into_c, classify_into_linf, dual_transform, toeplitz_condition, InfiniteMatrix, ToeplitzCondition};
use gwm_delta::rational::render;
use gwm_delta::{ProbeConfig, Weights};

fn main() -> gwm_delta::Result<()> {
    let w = Weights::trivial();
    let cfg = ProbeConfig::default().with_horizon(10_000).with_tol(1e-6);

    for text in ["identity", "cesaro", "diagonal(n+1)"] {
        let a = InfiniteMatrix::parse(text, None)?;
        let into_c = classify_into_c(&a, &w, &cfg, 2 * cfg.horizon)?;
        let into_linf = classify_into_linf(&a, &w, &cfg, 2 * cfg.horizon)?;
        println!("{:<14} into c: {:?}   into ℓ∞: {:?}", text, into_c.overall.outcome, into_linf.overall.outcome);
        if let Some(alpha) = into_c.alpha {
            println!("{:<14} row-sum limit ≈ {:.9}", "", alpha);
        }
    }

    let weighted = Weights::parse("e", "harmonic")?;
    let d = dual_transform(&InfiniteMatrix::identity(), &weighted, 0);
    for n in 0..4 {
        let row: Vec<String> = d.row(n, 0)?.iter().map(render).collect();
        println!("D row {}: {}", n, row.join("  "));
    }

    let cesaro = InfiniteMatrix::cesaro();
    for c in [ToeplitzCondition::C0ToL1, ToeplitzCondition::C0ToC] {
        let v = toeplitz_condition(&cesaro, c, &cfg, 2 * cfg.horizon, 15)?;
        println!("cesaro {}: {:?}", c.name(), v.outcome);
    }
    Ok(())
}
