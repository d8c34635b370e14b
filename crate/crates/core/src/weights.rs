use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::sequence::Sequence;

/// Number of leading terms checked for zeros when weights are built.
pub const CONSTRUCTION_PROBE: usize = 64;

/// A pair `(u, v)` of nowhere-vanishing weight sequences.
///
/// Zeros among the first [`CONSTRUCTION_PROBE`] terms are rejected up front;
/// deeper terms are checked whenever they are read.
#[derive(Clone, Debug)]
pub struct Weights {
    u: Sequence,
    v: Sequence,
    inv_u: Sequence,
    inv_v: Sequence,
}

fn checked(which: &'static str, s: &Sequence, k: usize) -> Result<Rational> {
    let x = s.at(k)?;
    if x.is_zero() {
        Err(Error::ZeroWeight { which, index: k })
    } else {
        Ok(x)
    }
}

impl Weights {
    pub fn new(u: Sequence, v: Sequence) -> Result<Self> {
        for k in 0..CONSTRUCTION_PROBE {
            checked("u", &u, k)?;
            checked("v", &v, k)?;
        }
        let inv_u = {
            let u = u.clone();
            Sequence::from_fn(format!("1/({})", u.label()), move |k| Ok(checked("u", &u, k)?.recip()))
        };
        let inv_v = {
            let v = v.clone();
            Sequence::from_fn(format!("1/({})", v.label()), move |k| Ok(checked("v", &v, k)?.recip()))
        };
        Ok(Weights { u, v, inv_u, inv_v })
    }

    pub fn parse(u: &str, v: &str) -> Result<Self> {
        Self::new(Sequence::parse(u)?, Sequence::parse(v)?)
    }

    /// `u = v = e`, under which the weighted difference operator is the identity.
    pub fn trivial() -> Self {
        Self::new(Sequence::ones(), Sequence::ones()).expect("e never vanishes")
    }

    pub fn u_seq(&self) -> &Sequence {
        &self.u
    }

    pub fn v_seq(&self) -> &Sequence {
        &self.v
    }

    pub fn u(&self, k: usize) -> Result<Rational> {
        checked("u", &self.u, k)
    }

    pub fn v(&self, k: usize) -> Result<Rational> {
        checked("v", &self.v, k)
    }

    pub fn inv_u(&self, k: usize) -> Result<Rational> {
        self.inv_u.at(k)
    }

    pub fn inv_v(&self, k: usize) -> Result<Rational> {
        self.inv_v.at(k)
    }

    /// `(∇v)_i = v_i - v_{i+1}`
    pub fn nabla_v(&self, i: usize) -> Result<Rational> {
        Ok(self.v(i)? - self.v(i + 1)?)
    }

    /// `1/v_i - 1/v_{i+1}`
    pub fn nabla_inv_v(&self, i: usize) -> Result<Rational> {
        Ok(self.inv_v(i)? - self.inv_v(i + 1)?)
    }

    pub fn describe(&self) -> String {
        format!("u = {}, v = {}", self.u.label(), self.v.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn zero_weight_rejected_at_construction() {
        let err = Weights::parse("k", "e").unwrap_err();
        assert_eq!(err, Error::ZeroWeight { which: "u", index: 0 });
        let err = Weights::parse("e", "k - 5").unwrap_err();
        assert_eq!(err, Error::ZeroWeight { which: "v", index: 5 });
        // a DSL division by zero inside the probe window is also a construction error
        assert_eq!(
            Weights::parse("1/(k-7)", "e").unwrap_err(),
            Error::DivisionByZero { index: 7 }
        );
    }

    #[test]
    fn deep_zero_detected_lazily() {
        let w = Weights::parse("e", "k - 100").unwrap();
        assert_eq!(w.v(99).unwrap(), int(-1));
        assert_eq!(w.v(100), Err(Error::ZeroWeight { which: "v", index: 100 }));
        assert!(w.inv_v(100).is_err());
    }

    #[test]
    fn reciprocals() {
        let w = Weights::parse("harmonic", "enumerate").unwrap();
        assert_eq!(w.inv_u(3).unwrap(), int(4));
        assert_eq!(w.inv_v(3).unwrap(), ratio(1, 4));
        assert_eq!(w.nabla_v(0).unwrap(), int(-1));
        assert_eq!(w.nabla_inv_v(0).unwrap(), ratio(1, 2));
    }
}
