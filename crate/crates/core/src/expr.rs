//! A small expression language for sequences `k -> value` and matrices
//! `(n, k) -> value`.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := '-' factor | base ('^' exponent)?
//! exponent := integer | '-' integer | var | '(' expr ')'
//! base     := integer | var | builtin | '(' expr ')'
//! builtin  := 'e' | 'harmonic' | 'enumerate' | 'geometric' '(' expr ')' | 'unit' '(' integer ')'
//! var      := 'k' | 'n'            (n only in matrix expressions)
//! ```
//!
//! Exponents may depend on the index but must evaluate to an integer. A
//! constant raised to `k` or `-k` is folded into `geometric(r)` at parse time,
//! and a literal quotient of two integers is folded into a single rational.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest exponent magnitude accepted by `^`.
pub const MAX_EXPONENT: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Row index.
    N,
    /// Sequence index, or column index in a matrix expression.
    K,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Builtin {
    /// `e = (1, 1, 1, ...)`
    E,
    /// `1 / (k + 1)`
    Harmonic,
    /// `(1, 2, 3, ...)`, i.e. `k + 1`
    Enumerate,
    /// `r^k`
    Geometric(Rational),
    /// `e^(j)`: 1 at `k = j`, 0 elsewhere
    Unit(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeqExpr {
    Num(Rational),
    Var(Var),
    Builtin(Builtin),
    Neg(Box<SeqExpr>),
    Add(Box<SeqExpr>, Box<SeqExpr>),
    Sub(Box<SeqExpr>, Box<SeqExpr>),
    Mul(Box<SeqExpr>, Box<SeqExpr>),
    Div(Box<SeqExpr>, Box<SeqExpr>),
    Pow(Box<SeqExpr>, Box<SeqExpr>),
}

/// Which index variables an expression may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequence,
    Matrix,
}

pub fn parse_expr(text: &str) -> Result<SeqExpr> {
    Parser::new(text, Mode::Sequence)?.parse_all()
}

pub fn parse_matrix_expr(text: &str) -> Result<SeqExpr> {
    Parser::new(text, Mode::Matrix)?.parse_all()
}

impl SeqExpr {
    pub fn eval(&self, k: usize) -> Result<Rational> {
        self.eval_at(k, k)
    }

    /// Evaluates with row index `n` and column/sequence index `k`. Errors
    /// report `k` as the failing index.
    pub fn eval_at(&self, n: usize, k: usize) -> Result<Rational> {
        Ok(match self {
            SeqExpr::Num(r) => r.clone(),
            SeqExpr::Var(Var::N) => Rational::from_integer(BigInt::from(n)),
            SeqExpr::Var(Var::K) => Rational::from_integer(BigInt::from(k)),
            SeqExpr::Builtin(b) => b.eval(k)?,
            SeqExpr::Neg(a) => -a.eval_at(n, k)?,
            SeqExpr::Add(a, b) => a.eval_at(n, k)? + b.eval_at(n, k)?,
            SeqExpr::Sub(a, b) => a.eval_at(n, k)? - b.eval_at(n, k)?,
            SeqExpr::Mul(a, b) => a.eval_at(n, k)? * b.eval_at(n, k)?,
            SeqExpr::Div(a, b) => {
                let den = b.eval_at(n, k)?;
                if den.is_zero() {
                    return Err(Error::DivisionByZero { index: k });
                }
                a.eval_at(n, k)? / den
            }
            SeqExpr::Pow(a, b) => {
                let base = a.eval_at(n, k)?;
                let exp = b.eval_at(n, k)?;
                if !exp.is_integer() {
                    return Err(Error::BadExponent {
                        index: k,
                        detail: format!("{} is not an integer", exp),
                    });
                }
                let e = exp
                    .to_integer()
                    .to_i64()
                    .filter(|e| e.abs() <= MAX_EXPONENT)
                    .ok_or_else(|| Error::BadExponent {
                        index: k,
                        detail: format!("|{}| exceeds {}", exp, MAX_EXPONENT),
                    })?;
                int_pow(&base, e, k)?
            }
        })
    }

    /// True when the expression mentions neither index variable nor any
    /// index-dependent builtin.
    pub fn is_constant(&self) -> bool {
        match self {
            SeqExpr::Num(_) => true,
            SeqExpr::Var(_) | SeqExpr::Builtin(_) => false,
            SeqExpr::Neg(a) => a.is_constant(),
            SeqExpr::Add(a, b)
            | SeqExpr::Sub(a, b)
            | SeqExpr::Mul(a, b)
            | SeqExpr::Div(a, b)
            | SeqExpr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            SeqExpr::Add(..) | SeqExpr::Sub(..) => 1,
            SeqExpr::Mul(..) | SeqExpr::Div(..) => 2,
            SeqExpr::Num(r) if !r.is_integer() => 2,
            SeqExpr::Num(r) if r.is_negative() => 3,
            SeqExpr::Neg(_) => 3,
            SeqExpr::Pow(..) => 4,
            SeqExpr::Num(_) | SeqExpr::Var(_) | SeqExpr::Builtin(_) => 5,
        }
    }
}

impl Builtin {
    pub fn eval(&self, k: usize) -> Result<Rational> {
        Ok(match self {
            Builtin::E => Rational::one(),
            Builtin::Harmonic => Rational::new(BigInt::one(), BigInt::from(k + 1)),
            Builtin::Enumerate => Rational::from_integer(BigInt::from(k + 1)),
            Builtin::Geometric(r) => {
                let e = i64::try_from(k).map_err(|_| Error::BadExponent {
                    index: k,
                    detail: "index too large".into(),
                })?;
                int_pow(r, e, k)?
            }
            Builtin::Unit(j) => {
                if k as u64 == *j {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
        })
    }
}

fn int_pow(base: &Rational, e: i64, index: usize) -> Result<Rational> {
    if e == 0 {
        return Ok(Rational::one());
    }
    if base.is_zero() {
        return if e > 0 {
            Ok(Rational::zero())
        } else {
            Err(Error::DivisionByZero { index })
        };
    }
    let mag = u32::try_from(e.unsigned_abs()).map_err(|_| Error::BadExponent {
        index,
        detail: format!("{} out of range", e),
    })?;
    let p = num_traits::pow::Pow::pow(base, mag);
    Ok(if e < 0 { p.recip() } else { p })
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::E => write!(f, "e"),
            Builtin::Harmonic => write!(f, "harmonic"),
            Builtin::Enumerate => write!(f, "enumerate"),
            Builtin::Geometric(r) => {
                write!(f, "geometric(")?;
                fmt_rational(r, f)?;
                write!(f, ")")
            }
            Builtin::Unit(j) => write!(f, "unit({})", j),
        }
    }
}

impl fmt::Display for SeqExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Writes `e`, parenthesised when its precedence is below `min`.
        fn child(e: &SeqExpr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({})", e)
            } else {
                write!(f, "{}", e)
            }
        }
        match self {
            SeqExpr::Num(r) => fmt_rational(r, f),
            SeqExpr::Var(Var::N) => write!(f, "n"),
            SeqExpr::Var(Var::K) => write!(f, "k"),
            SeqExpr::Builtin(b) => write!(f, "{}", b),
            SeqExpr::Neg(a) => {
                write!(f, "-")?;
                child(a, 3, f)
            }
            SeqExpr::Add(a, b) => {
                child(a, 1, f)?;
                write!(f, " + ")?;
                child(b, 2, f)
            }
            SeqExpr::Sub(a, b) => {
                child(a, 1, f)?;
                write!(f, " - ")?;
                child(b, 2, f)
            }
            SeqExpr::Mul(a, b) => {
                child(a, 2, f)?;
                write!(f, "*")?;
                child(b, 3, f)
            }
            SeqExpr::Div(a, b) => {
                child(a, 2, f)?;
                write!(f, "/")?;
                child(b, 3, f)
            }
            SeqExpr::Pow(a, b) => {
                child(a, 5, f)?;
                write!(f, "^")?;
                match b.as_ref() {
                    SeqExpr::Num(r) if r.is_integer() => fmt_rational(r, f),
                    SeqExpr::Var(_) => write!(f, "{}", b),
                    other => write!(f, "({})", other),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    mode: Mode,
}

impl Parser {
    fn new(text: &str, mode: Mode) -> Result<Self> {
        let mut toks = Vec::new();
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (at, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                toks.push((at, Tok::Int(digits.parse().expect("digits"))));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                toks.push((at, Tok::Ident(ident)));
            } else if "+-*/^()".contains(c) {
                toks.push((at, Tok::Sym(c)));
                i += 1;
            } else {
                return Err(Error::Syntax {
                    pos: at,
                    msg: format!("unexpected character `{}`", c),
                });
            }
        }
        Ok(Parser {
            toks,
            pos: 0,
            end: text.len(),
            mode,
        })
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c)))
        }
    }

    fn error(&self, msg: String) -> Error {
        let found = match self.peek() {
            Some(Tok::Int(i)) => format!("`{}`", i),
            Some(Tok::Ident(s)) => format!("`{}`", s),
            Some(Tok::Sym(c)) => format!("`{}`", c),
            None => "end of input".to_string(),
        };
        Error::Syntax {
            pos: self.here(),
            msg: format!("{}, found {}", msg, found),
        }
    }

    fn parse_all(mut self) -> Result<SeqExpr> {
        let e = self.expr()?;
        if self.pos != self.toks.len() {
            return Err(self.error("expected operator or end of input".into()));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<SeqExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = SeqExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = SeqExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<SeqExpr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = SeqExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat('/') {
                let rhs = self.factor()?;
                lhs = fold_div(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<SeqExpr> {
        if self.eat('-') {
            let inner = self.factor()?;
            return Ok(match inner {
                SeqExpr::Num(r) => SeqExpr::Num(-r),
                other => SeqExpr::Neg(Box::new(other)),
            });
        }
        let base = self.base()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exp = self.exponent()?;
        Ok(fold_pow(base, exp))
    }

    fn exponent(&mut self) -> Result<SeqExpr> {
        if self.eat('(') {
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(e);
        }
        let negative = self.eat('-');
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Int(i)) => {
                self.pos += 1;
                let r = Rational::from_integer(i);
                Ok(SeqExpr::Num(if negative { -r } else { r }))
            }
            Some(Tok::Ident(name)) if !negative => {
                self.pos += 1;
                self.variable(&name)
                    .ok_or(Error::UnknownName { pos: at, name })
            }
            _ => Err(self.error("expected integer exponent".into())),
        }
    }

    fn variable(&self, name: &str) -> Option<SeqExpr> {
        match (name, self.mode) {
            ("k", _) => Some(SeqExpr::Var(Var::K)),
            ("n", Mode::Matrix) => Some(SeqExpr::Var(Var::N)),
            _ => None,
        }
    }

    fn base(&mut self) -> Result<SeqExpr> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Int(i)) => {
                self.pos += 1;
                Ok(SeqExpr::Num(Rational::from_integer(i)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(v) = self.variable(&name) {
                    return Ok(v);
                }
                match name.as_str() {
                    "e" => Ok(SeqExpr::Builtin(Builtin::E)),
                    "harmonic" => Ok(SeqExpr::Builtin(Builtin::Harmonic)),
                    "enumerate" => Ok(SeqExpr::Builtin(Builtin::Enumerate)),
                    "geometric" => {
                        self.expect('(')?;
                        let arg_at = self.here();
                        let arg = self.expr()?;
                        self.expect(')')?;
                        if !arg.is_constant() {
                            return Err(Error::Syntax {
                                pos: arg_at,
                                msg: "geometric(r) needs a constant ratio".into(),
                            });
                        }
                        let r = arg.eval(0).map_err(|e| Error::Syntax {
                            pos: arg_at,
                            msg: format!("bad ratio: {}", e),
                        })?;
                        Ok(SeqExpr::Builtin(Builtin::Geometric(r)))
                    }
                    "unit" => {
                        self.expect('(')?;
                        let j = match self.peek().cloned() {
                            Some(Tok::Int(i)) => {
                                self.pos += 1;
                                i.to_u64()
                                    .ok_or_else(|| self.error("unit index out of range".into()))?
                            }
                            _ => return Err(self.error("unit(j) needs a non-negative integer".into())),
                        };
                        self.expect(')')?;
                        Ok(SeqExpr::Builtin(Builtin::Unit(j)))
                    }
                    _ => Err(Error::UnknownName { pos: at, name }),
                }
            }
            _ => Err(self.error("expected a number, variable, builtin or `(`".into())),
        }
    }
}

fn fold_div(lhs: SeqExpr, rhs: SeqExpr) -> SeqExpr {
    match (&lhs, &rhs) {
        (SeqExpr::Num(a), SeqExpr::Num(b)) if a.is_integer() && b.is_integer() && !b.is_zero() => {
            SeqExpr::Num(a / b)
        }
        _ => SeqExpr::Div(Box::new(lhs), Box::new(rhs)),
    }
}

fn fold_pow(base: SeqExpr, exp: SeqExpr) -> SeqExpr {
    if base.is_constant() {
        if let Ok(r) = base.eval(0) {
            match &exp {
                SeqExpr::Var(Var::K) => return SeqExpr::Builtin(Builtin::Geometric(r)),
                SeqExpr::Neg(inner) if **inner == SeqExpr::Var(Var::K) && !r.is_zero() => {
                    return SeqExpr::Builtin(Builtin::Geometric(r.recip()))
                }
                _ => {}
            }
        }
    }
    SeqExpr::Pow(Box::new(base), Box::new(exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn harmonic_by_formula() {
        let e = parse_expr("1/(k+1)").unwrap();
        for k in 0..20 {
            assert_eq!(e.eval(k).unwrap(), Builtin::Harmonic.eval(k).unwrap());
        }
        assert_eq!(e.eval(0).unwrap(), int(1));
    }

    #[test]
    fn e_is_constant_one() {
        let e = parse_expr("e").unwrap();
        assert_eq!(e, SeqExpr::Builtin(Builtin::E));
        assert_eq!(e.eval(17).unwrap(), int(1));
    }

    #[test]
    fn negative_power_of_k_folds_to_geometric() {
        let e = parse_expr("2^(-k)").unwrap();
        assert_eq!(e, SeqExpr::Builtin(Builtin::Geometric(ratio(1, 2))));
        assert_eq!(e.eval(3).unwrap(), ratio(1, 8));
        assert_eq!(
            parse_expr("(-1)^k").unwrap(),
            SeqExpr::Builtin(Builtin::Geometric(int(-1)))
        );
    }

    #[test]
    fn builtins() {
        assert_eq!(parse_expr("enumerate").unwrap().eval(4).unwrap(), int(5));
        assert_eq!(parse_expr("unit(3)").unwrap().eval(3).unwrap(), int(1));
        assert_eq!(parse_expr("unit(3)").unwrap().eval(2).unwrap(), int(0));
        assert_eq!(
            parse_expr("geometric(1/2)").unwrap().eval(10).unwrap(),
            ratio(1, 1024)
        );
        assert_eq!(parse_expr("geometric(0)").unwrap().eval(0).unwrap(), int(1));
    }

    #[test]
    fn precedence_and_negation() {
        let e = parse_expr("-k^2 + 3*k - 1/2").unwrap();
        assert_eq!(e.eval(2).unwrap(), ratio(3, 2));
        let e = parse_expr("2*3^2").unwrap();
        assert_eq!(e.eval(0).unwrap(), int(18));
        let e = parse_expr("k^-1").unwrap();
        assert_eq!(e.eval(4).unwrap(), ratio(1, 4));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_expr("1 + * k") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{:?}", other),
        }
        match parse_expr("(k + 1") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{:?}", other),
        }
        assert!(matches!(parse_expr("k $ 1"), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn unknown_names() {
        assert_eq!(
            parse_expr("1 + fibonacci"),
            Err(Error::UnknownName {
                pos: 4,
                name: "fibonacci".into()
            })
        );
        // `n` only exists in matrix expressions
        assert!(matches!(parse_expr("n + k"), Err(Error::UnknownName { .. })));
        assert!(parse_matrix_expr("n + k").is_ok());
    }

    #[test]
    fn runtime_division_by_zero() {
        let e = parse_expr("1/(k-3)").unwrap();
        assert!(e.eval(2).is_ok());
        assert_eq!(e.eval(3), Err(Error::DivisionByZero { index: 3 }));
        let e = parse_expr("0^(k-2)").unwrap();
        assert_eq!(e.eval(1), Err(Error::DivisionByZero { index: 1 }));
    }

    #[test]
    fn fractional_exponent_rejected() {
        let e = parse_expr("2^(k/2)").unwrap();
        assert!(e.eval(2).is_ok());
        assert!(matches!(e.eval(1), Err(Error::BadExponent { .. })));
    }

    #[test]
    fn matrix_expression() {
        let e = parse_matrix_expr("1/(n+1)").unwrap();
        assert_eq!(e.eval_at(3, 1).unwrap(), ratio(1, 4));
    }

    fn arb_expr() -> impl Strategy<Value = SeqExpr> {
        let leaf = prop_oneof![
            (-5i64..6).prop_map(|i| SeqExpr::Num(int(i))),
            (-5i64..6, 1i64..5).prop_map(|(p, q)| SeqExpr::Num(ratio(p, q))),
            Just(SeqExpr::Var(Var::K)),
            Just(SeqExpr::Var(Var::N)),
            Just(SeqExpr::Builtin(Builtin::E)),
            Just(SeqExpr::Builtin(Builtin::Harmonic)),
            Just(SeqExpr::Builtin(Builtin::Enumerate)),
            (-3i64..4, 1i64..4).prop_map(|(p, q)| SeqExpr::Builtin(Builtin::Geometric(ratio(p, q)))),
            (0u64..5).prop_map(|j| SeqExpr::Builtin(Builtin::Unit(j))),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| SeqExpr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| SeqExpr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| SeqExpr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| SeqExpr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| SeqExpr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), -3i64..4).prop_map(|(a, e)| SeqExpr::Pow(Box::new(a), Box::new(SeqExpr::Num(int(e))))),
                (inner, prop_oneof![Just(SeqExpr::Var(Var::K)), Just(SeqExpr::Var(Var::N))])
                    .prop_map(|(a, e)| SeqExpr::Pow(Box::new(a), Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn printing_round_trips(ast in arb_expr()) {
            let printed = ast.to_string();
            let normal = parse_matrix_expr(&printed).unwrap();
            // Parsing may fold literals; once normal, printing is a fixed point.
            prop_assert_eq!(parse_matrix_expr(&normal.to_string()).unwrap(), normal.clone());
            for (n, k) in [(0usize, 0usize), (3, 1), (2, 5)] {
                if let Ok(v) = ast.eval_at(n, k) {
                    prop_assert_eq!(normal.eval_at(n, k).unwrap(), v);
                }
            }
        }
    }
}
