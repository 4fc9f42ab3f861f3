//! Polynomial expressions over non-commuting operator slots.
//!
//! Surface syntax:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | primary
//! primary := number | slot | '(' expr ')'
//!          | sym(expr, expr) | comm(expr, expr)
//!          | pow(expr, n) | poly(expr, c0, c1, ...)
//! slot    := a | b | x | x1 | x2 | ...
//! ```
//!
//! `sym(p, q) = (pq + qp)/2` and `comm(p, q) = i[p, q]`. A bare number `c`
//! stands for `c` times the identity. `*` with a number on either side is a
//! real scalar multiple; between two operators it is the plain product, the
//! only node that does not preserve Hermiticity.

use std::fmt;

use num_complex::Complex64;

use crate::error::{PomError, Result};
use crate::numerics::{commutator_i, identity, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    A,
    B,
    /// `x` is an alias of `x1`.
    X(usize),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::A => write!(f, "a"),
            Slot::B => write!(f, "b"),
            Slot::X(1) => write!(f, "x"),
            Slot::X(n) => write!(f, "x{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpExpr {
    Slot(Slot),
    Constant(f64),
    Sum(Box<OpExpr>, Box<OpExpr>),
    Difference(Box<OpExpr>, Box<OpExpr>),
    Scale(f64, Box<OpExpr>),
    Sym(Box<OpExpr>, Box<OpExpr>),
    Comm(Box<OpExpr>, Box<OpExpr>),
    Product(Box<OpExpr>, Box<OpExpr>),
    Pow(Box<OpExpr>, u32),
    /// `sum_k c_k e^k`.
    Poly(Box<OpExpr>, Vec<f64>),
}

/// Operators bound to the slots of an expression, all of one dimension.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub dim: usize,
    pub a: Option<&'a ComplexMatrix>,
    pub b: Option<&'a ComplexMatrix>,
    pub xs: &'a [ComplexMatrix],
}

impl<'a> Bindings<'a> {
    fn get(&self, slot: Slot) -> Result<&'a ComplexMatrix> {
        let found = match slot {
            Slot::A => self.a,
            Slot::B => self.b,
            Slot::X(n) => n.checked_sub(1).and_then(|k| self.xs.get(k)),
        };
        found.ok_or_else(|| PomError::UnboundSlot(slot.to_string()))
    }
}

impl OpExpr {
    pub fn parse(src: &str) -> Result<OpExpr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn slot(s: Slot) -> Self {
        OpExpr::Slot(s)
    }

    /// Whether evaluation on Hermitian arguments is guaranteed Hermitian.
    pub fn is_hermitian(&self) -> bool {
        use OpExpr::*;
        match self {
            Slot(_) | Constant(_) => true,
            Sum(l, r) | Difference(l, r) | Sym(l, r) | Comm(l, r) => l.is_hermitian() && r.is_hermitian(),
            Scale(_, e) | Pow(e, _) | Poly(e, _) => e.is_hermitian(),
            Product(_, _) => false,
        }
    }

    /// Distinct slots referenced, sorted.
    pub fn slots(&self) -> Vec<Slot> {
        fn walk(e: &OpExpr, out: &mut Vec<Slot>) {
            use OpExpr::*;
            match e {
                Slot(s) => out.push(*s),
                Constant(_) => {}
                Sum(l, r) | Difference(l, r) | Sym(l, r) | Comm(l, r) | Product(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Scale(_, e) | Pow(e, _) | Poly(e, _) => walk(e, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Evaluates the expression in tree order.
    pub fn eval(&self, bind: &Bindings<'_>) -> Result<ComplexMatrix> {
        use OpExpr::*;
        let half = Complex64::new(0.5, 0.0);
        Ok(match self {
            Slot(s) => bind.get(*s)?.clone(),
            Constant(c) => identity(bind.dim) * Complex64::new(*c, 0.0),
            Sum(l, r) => l.eval(bind)? + r.eval(bind)?,
            Difference(l, r) => l.eval(bind)? - r.eval(bind)?,
            Scale(c, e) => e.eval(bind)? * Complex64::new(*c, 0.0),
            Sym(l, r) => {
                let (p, q) = (l.eval(bind)?, r.eval(bind)?);
                (&p * &q + &q * &p) * half
            }
            Comm(l, r) => commutator_i(&l.eval(bind)?, &r.eval(bind)?),
            Product(l, r) => l.eval(bind)? * r.eval(bind)?,
            Pow(e, n) => {
                let base = e.eval(bind)?;
                let mut acc = identity(bind.dim);
                for _ in 0..*n {
                    acc = &acc * &base;
                }
                acc
            }
            Poly(e, coeffs) => {
                let base = e.eval(bind)?;
                let mut acc = ComplexMatrix::zeros(bind.dim, bind.dim);
                for c in coeffs.iter().rev() {
                    acc = &acc * &base + identity(bind.dim) * Complex64::new(*c, 0.0);
                }
                acc
            }
        })
    }
}

impl fmt::Display for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use OpExpr::*;
        match self {
            Slot(s) => write!(f, "{s}"),
            Constant(c) => write!(f, "{c}"),
            Sum(l, r) => write!(f, "({l} + {r})"),
            Difference(l, r) => write!(f, "({l} - {r})"),
            Scale(c, e) => write!(f, "{c}*{e}"),
            Sym(l, r) => write!(f, "sym({l}, {r})"),
            Comm(l, r) => write!(f, "comm({l}, {r})"),
            Product(l, r) => write!(f, "({l} * {r})"),
            Pow(e, n) => write!(f, "pow({e}, {n})"),
            Poly(e, cs) => {
                write!(f, "poly({e}")?;
                for c in cs {
                    write!(f, ", {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl std::str::FromStr for OpExpr {
    type Err = PomError;
    fn from_str(s: &str) -> Result<Self> {
        OpExpr::parse(s)
    }
}

struct Parser<'s> {
    src: &'s [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> PomError {
        PomError::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<OpExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = OpExpr::Sum(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = OpExpr::Difference(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<OpExpr> {
        let mut lhs = self.unary()?;
        while self.eat(b'*') {
            let rhs = self.unary()?;
            lhs = match (lhs, rhs) {
                (OpExpr::Constant(p), OpExpr::Constant(q)) => OpExpr::Constant(p * q),
                (OpExpr::Constant(c), e) | (e, OpExpr::Constant(c)) => OpExpr::Scale(c, Box::new(e)),
                (l, r) => OpExpr::Product(Box::new(l), Box::new(r)),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<OpExpr> {
        if self.eat(b'-') {
            return Ok(match self.unary()? {
                OpExpr::Constant(c) => OpExpr::Constant(-c),
                e => OpExpr::Scale(-1.0, Box::new(e)),
            });
        }
        self.primary()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        if i < s.len() && (s[i] == b'-' || s[i] == b'+') {
            i += 1;
        }
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            i += 1;
            if i < s.len() && (s[i] == b'-' || s[i] == b'+') {
                i += 1;
            }
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = i;
                Ok(v)
            }
            _ => Err(self.error("expected a number")),
        }
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn binary_args(&mut self) -> Result<(Box<OpExpr>, Box<OpExpr>)> {
        self.expect(b'(')?;
        let l = self.expr()?;
        self.expect(b',')?;
        let r = self.expr()?;
        self.expect(b')')?;
        Ok((Box::new(l), Box::new(r)))
    }

    fn primary(&mut self) -> Result<OpExpr> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(OpExpr::Constant(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident().to_string();
                match name.as_str() {
                    "a" => Ok(OpExpr::Slot(Slot::A)),
                    "b" => Ok(OpExpr::Slot(Slot::B)),
                    "x" => Ok(OpExpr::Slot(Slot::X(1))),
                    "sym" => {
                        let (l, r) = self.binary_args()?;
                        Ok(OpExpr::Sym(l, r))
                    }
                    "comm" => {
                        let (l, r) = self.binary_args()?;
                        Ok(OpExpr::Comm(l, r))
                    }
                    "pow" => {
                        self.expect(b'(')?;
                        let e = self.expr()?;
                        self.expect(b',')?;
                        let n = self.number()?;
                        if n < 0.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                            return Err(self.error("power must be a non-negative integer"));
                        }
                        self.expect(b')')?;
                        Ok(OpExpr::Pow(Box::new(e), n as u32))
                    }
                    "poly" => {
                        self.expect(b'(')?;
                        let e = self.expr()?;
                        let mut coeffs = Vec::new();
                        while self.eat(b',') {
                            coeffs.push(self.number()?);
                        }
                        if coeffs.is_empty() {
                            return Err(self.error("poly needs at least one coefficient"));
                        }
                        self.expect(b')')?;
                        Ok(OpExpr::Poly(Box::new(e), coeffs))
                    }
                    s if s.len() > 1 && s.starts_with('x') && s[1..].bytes().all(|c| c.is_ascii_digit()) => {
                        match s[1..].parse::<usize>() {
                            Ok(n) if n >= 1 => Ok(OpExpr::Slot(Slot::X(n))),
                            _ => Err(PomError::Syntax {
                                position: at,
                                message: format!("invalid slot `{s}`"),
                            }),
                        }
                    }
                    other => Err(PomError::Syntax {
                        position: at,
                        message: format!("unknown identifier `{other}`"),
                    }),
                }
            }
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
        }
    }
}
