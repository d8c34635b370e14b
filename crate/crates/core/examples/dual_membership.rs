//! Membership of multipliers in the α-, β- and γ-duals.

use gwm_delta::duals::{check_alpha, check_beta, check_gamma, DEFAULT_MAX_COLS};
use gwm_delta::spaces::BaseSpace;
use gwm_delta::{ProbeConfig, Sequence, Weights};

fn main() -> gwm_delta::Result<()> {
    let w = Weights::trivial();
    let cfg = ProbeConfig::default().with_horizon(1000);
    for text in ["geometric(1/2)", "unit(3)", "harmonic", "e"] {
        let a = Sequence::parse(text)?;
        let alpha = check_alpha(&w, &a, &cfg, DEFAULT_MAX_COLS)?;
        let beta = check_beta(&w, &a, BaseSpace::CZero, &cfg)?;
        let gamma = check_gamma(&w, &a, &cfg)?;
        println!(
            "{:<16} alpha {:<13} beta(c0) {:<13} gamma {:?}",
            text,
            format!("{:?}", alpha.overall.outcome),
            format!("{:?}", beta.overall.outcome),
            gamma.overall.outcome
        );
    }

    let a = Sequence::parse("1/(k+1)^3")?;
    let w = Weights::parse("e", "harmonic")?;
    // The tail of Σ 1/k³ shrinks like 1/n², so ask for 1e-6 rather than 1e-9.
    let r = check_beta(&w, &a, BaseSpace::C, &cfg.with_tol(1e-6))?;
    for (name, v) in &r.conditions {
        println!("beta over c(u,v,Δ), {}: {:?}  {}", name, v.outcome, v.evidence.note);
    }
    let limits: Vec<String> = r.column_limits.iter().take(4).map(|(k, l)| format!("{}: {:?}", k, l)).collect();
    println!("column limits {}", limits.join(", "));
    Ok(())
}
