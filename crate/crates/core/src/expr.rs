//! Scalar expression language for frame components and conformal factors.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?          right-associative
//! exponent:= '-' exponent | atom ('^' exponent)?
//! atom    := number | 'pi' | 'e' | x1..xn | func '(' sum ')' | '(' sum ')'
//! func    := exp | log | sin | cos | sqrt
//! ```
//!
//! Exponents must be literal: numbers, `pi`, `e`, negations and powers of those.

use std::f64::consts;
use std::fmt;

use thiserror::Error;

use crate::jet::{Jet2, JetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedConst {
    Pi,
    E,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(NamedConst),
    /// 0-based coordinate index (`x1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    UnknownVariable { name: String, dimension: usize },
    NonLiteralExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::UnknownVariable { name, dimension } => {
                write!(f, "unknown variable `{name}` (dimension is {dimension})")
            }
            ParseErrorKind::NonLiteralExponent => write!(f, "exponent must be a literal"),
        }
    }
}

impl Expr {
    pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
            n,
        };
        let expr = parser.sum()?;
        parser.skip_ws();
        if parser.pos < parser.src.len() {
            return Err(parser.syntax("unexpected trailing input"));
        }
        Ok(expr)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b))
    }

    pub fn negated(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Largest referenced coordinate index plus one (0 if constant).
    pub fn min_dimension(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.min_dimension(),
            Expr::Binary(_, a, b) => a.min_dimension().max(b.min_dimension()),
        }
    }

    fn is_literal(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Neg(a) => a.is_literal(),
            Expr::Binary(BinOp::Pow, a, b) => a.is_literal() && b.is_literal(),
            _ => false,
        }
    }

    /// Plain floating-point evaluation, independent of the jet path.
    /// Out-of-domain inputs yield non-finite results.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => const_value(*c),
            Expr::Var(i) => point[*i],
            Expr::Neg(a) => -a.eval_f64(point),
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval_f64(point), b.eval_f64(point));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_f64(point);
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet2, JetError> {
        let n = point.len();
        Ok(match self {
            Expr::Num(v) => Jet2::constant(*v, n),
            Expr::Const(c) => Jet2::constant(const_value(*c), n),
            Expr::Var(i) => Jet2::variable(point, *i)?,
            Expr::Neg(a) => -&a.eval_jet(point)?,
            Expr::Binary(BinOp::Pow, a, b) => {
                // exponent is literal by construction
                let p = b.eval_f64(point);
                a.eval_jet(point)?.powf(p)?
            }
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval_jet(point)?, b.eval_jet(point)?);
                match op {
                    BinOp::Add => x.try_add(&y)?,
                    BinOp::Sub => x.try_sub(&y)?,
                    BinOp::Mul => x.try_mul(&y)?,
                    BinOp::Div => x.try_div(&y)?,
                    BinOp::Pow => unreachable!(),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_jet(point)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln()?,
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => x.sqrt()?,
                }
            }
        })
    }
}

fn const_value(c: NamedConst) -> f64 {
    match c {
        NamedConst::Pi => consts::PI,
        NamedConst::E => consts::E,
    }
}

/// Canonical printer: every compound subexpression is parenthesized, so
/// printing and reparsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Const(NamedConst::Pi) => f.write_str("pi"),
            Expr::Const(NamedConst::E) => f.write_str("e"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError {
            offset: self.pos,
            kind: ParseErrorKind::Syntax(msg.to_string()),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let start = self.peek_pos();
            let exponent = self.exponent()?;
            if !exponent.is_literal() {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::NonLiteralExponent,
                });
            }
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let rhs = self.exponent()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(rhs)));
        }
        Ok(base)
    }

    fn peek_pos(&mut self) -> usize {
        self.skip_ws();
        self.pos
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn expect(&mut self, want: u8) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", want as char)))
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if let Some(b'e' | b'E') = self.src.get(self.pos) {
            let mark = self.pos;
            self.pos += 1;
            if let Some(b'+' | b'-') = self.src.get(self.pos) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent; leave `e` for the caller to reject
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax("malformed number".into()),
        })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "pi" => return Ok(Expr::Const(NamedConst::Pi)),
            "e" => return Ok(Expr::Const(NamedConst::E)),
            _ => {}
        }
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.sum()?;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(idx) = name.strip_prefix('x') {
            if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) && !idx.starts_with('0') {
                return match idx.parse::<usize>() {
                    Ok(k) if k <= self.n => Ok(Expr::Var(k - 1)),
                    _ => Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownVariable {
                            name: name.to_string(),
                            dimension: self.n,
                        },
                    }),
                };
            }
        }
        Err(ParseError {
            offset: start,
            kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
        })
    }
}
