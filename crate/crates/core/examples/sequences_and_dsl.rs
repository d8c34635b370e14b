//! Building sequences from the expression language and combining them.

use gwm_delta::rational::render;
use gwm_delta::{Error, Sequence};

fn show(s: &Sequence, len: usize) -> gwm_delta::Result<()> {
    let terms: Vec<String> = s.prefix(len)?.iter().map(render).collect();
    println!("{:<28} {}", s.label(), terms.join(", "));
    Ok(())
}

fn main() -> gwm_delta::Result<()> {
    for text in ["e", "harmonic", "geometric(1/2)", "(-1)^k/(k+1)", "k^2 - 3*k + 1", "unit(2)"] {
        show(&Sequence::parse(text)?, 6)?;
    }

    let h = Sequence::harmonic();
    show(&h.delta(), 6)?;
    show(&h.partial_sums(), 6)?;
    show(&h.mul(&Sequence::enumerate()), 6)?;

    match Sequence::parse("k + * 2") {
        Err(Error::Syntax { pos, msg }) => println!("syntax error at {}: {}", pos, msg),
        other => println!("unexpected: {:?}", other.map(|s| s.label().to_string())),
    }
    match Sequence::parse("1/(k-2)")?.at(2) {
        Err(e) => println!("evaluation error: {}", e),
        Ok(v) => println!("unexpected value {}", render(&v)),
    }
    Ok(())
}
