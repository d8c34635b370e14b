//! Forward and inverse transforms, the norm and membership probes.

use gwm_delta::rational::{render, to_f64};
use gwm_delta::spaces::{forward_transform, inverse_transform, membership, norm, BaseSpace, SpaceId};
use gwm_delta::{ProbeConfig, Sequence, Weights};

fn main() -> gwm_delta::Result<()> {
    let w = Weights::parse("e", "harmonic")?;
    let x = Sequence::parse("(-1)^k * (k+1)")?;

    let y = forward_transform(&w, &x);
    let ys: Vec<String> = y.prefix(8)?.iter().map(render).collect();
    println!("y = {}", ys.join(", "));
    let back = inverse_transform(&w, &y);
    println!("inverse recovers x on 50 terms: {}", back.prefix(50)? == x.prefix(50)?);

    let r = norm(&w, &x, 1000)?;
    println!("norm ≈ {:.9} attained at k = {} ({:?})", to_f64(&r.value), r.argmax, r.verdict.outcome);

    let cfg = ProbeConfig::default().with_horizon(1000);
    for base in [BaseSpace::EllInfinity, BaseSpace::C, BaseSpace::CZero] {
        let v = membership(&SpaceId::weighted(base, w.clone()), &x, &cfg)?;
        println!("x in {}(u,v,Δ): {:?}  {}", base.name(), v.outcome, v.evidence.note);
    }
    Ok(())
}
