//! The operator G(u,v)·Δ as an exact triangle, its factorization and its
//! closed-form inverse.

use gwm_delta::rational::render;
use gwm_delta::{Triangle, Weights};

fn print(name: &str, t: &Triangle, rows: usize) -> gwm_delta::Result<()> {
    println!("{}:", name);
    for n in 0..rows {
        let row: Vec<String> = t.row(n)?.iter().map(render).collect();
        println!("  {}", row.join("  "));
    }
    Ok(())
}

fn main() -> gwm_delta::Result<()> {
    let w = Weights::parse("(k+2)/(k+1)", "(3/2)^k")?;
    println!("weights {}", w.describe());

    let g = Triangle::gwm_delta(&w);
    print("G(u,v)Δ", &g, 5)?;

    let composed = Triangle::compose(&Triangle::factorable(&w), &Triangle::difference());
    let same = (0..20).all(|n| g.row(n).ok() == composed.row(n).ok());
    println!("equals G(u,v) composed with Δ on 20 rows: {}", same);

    let closed = Triangle::gwm_delta_inverse(&w);
    print("closed-form inverse", &closed, 5)?;
    let solved = Triangle::invert(&g)?;
    let same = (0..20).all(|n| closed.row(n).ok() == solved.row(n).ok());
    println!("matches the inverse obtained by forward substitution on 20 rows: {}", same);
    Ok(())
}
