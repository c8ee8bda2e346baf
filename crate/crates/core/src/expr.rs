//! A small expression language for the data functions `l(t)`, `g(t, s)`, `f(t)`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*        left-associative
//! term   := unary (('*' | '/') unary)*      left-associative
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?               right-associative
//! atom   := number | 't' | 's' | 'e' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := exp | sin | cos | tan | log | sqrt | abs
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)` while `2^-1`
//! is `0.5`. Juxtaposition is not multiplication: `2t` is a syntax error.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    E,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Tan,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Constant),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("invalid number literal {0:?}")]
    InvalidNumber(String),
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("{func} takes 1 argument, got {got}")]
    Arity { func: &'static str, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at t = {t}{}", fmt_s(*.s))]
    Domain {
        op: &'static str,
        t: f64,
        s: Option<f64>,
    },
    #[error("expression uses s but no value was bound (t = {t})")]
    UnboundS { t: f64 },
}

fn fmt_s(s: Option<f64>) -> String {
    s.map(|s| format!(", s = {s}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Op(c) => format!("operator {c:?}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent only when digits follow, so `2e` stays `2` then `e`
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::InvalidNumber(text.into()),
                    offset: start,
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        kind: ParseErrorKind::InvalidNumber(text.into()),
                        offset: start,
                    });
                }
                out.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    offset: start,
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            offset: self.offset(),
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(tok) => self.err(ParseErrorKind::UnexpectedToken(tok.describe())),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "t" => return Ok(Expr::Var(Var::T)),
                    "s" => return Ok(Expr::Var(Var::S)),
                    "e" => return Ok(Expr::Const(Constant::E)),
                    "pi" => return Ok(Expr::Const(Constant::Pi)),
                    _ => {}
                }
                let func = Func::from_name(&name).ok_or(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                    offset,
                })?;
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    args.push(self.expr()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                }
                self.expect(Tok::RParen)?;
                if args.len() != 1 {
                    return Err(ParseError {
                        kind: ParseErrorKind::Arity {
                            func: func.name(),
                            got: args.len(),
                        },
                        offset,
                    });
                }
                Ok(Expr::Call {
                    func,
                    arg: Box::new(args.pop().expect("one argument")),
                })
            }
            _ => Err(self.unexpected()),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(ParseError {
                kind: ParseErrorKind::Empty,
                offset: 0,
            });
        }
        let mut p = Parser {
            toks,
            pos: 0,
            end: src.len(),
        };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.unexpected());
        }
        Ok(e)
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Whether the variable `s` occurs anywhere in the tree.
    pub fn uses_s(&self) -> bool {
        match self {
            Expr::Var(v) => *v == Var::S,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(e) | Expr::Call { arg: e, .. } => e.uses_s(),
            Expr::Binary { lhs, rhs, .. } => lhs.uses_s() || rhs.uses_s(),
        }
    }

    /// Whether the tree is the literal `0`.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Evaluates with `t` bound and optionally `s`.
    pub fn eval(&self, t: f64, s: Option<f64>) -> Result<f64, EvalError> {
        let domain = |op| EvalError::Domain { op, t, s };
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::T) => Ok(t),
            Expr::Var(Var::S) => s.ok_or(EvalError::UnboundS { t }),
            Expr::Const(Constant::E) => Ok(std::f64::consts::E),
            Expr::Const(Constant::Pi) => Ok(std::f64::consts::PI),
            Expr::Neg(e) => Ok(-e.eval(t, s)?),
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval(t, s)?;
                let b = rhs.eval(t, s)?;
                let (v, name) = match op {
                    BinOp::Add => (a + b, "addition"),
                    BinOp::Sub => (a - b, "subtraction"),
                    BinOp::Mul => (a * b, "multiplication"),
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        (a / b, "division")
                    }
                    BinOp::Pow => (pow(a, b), "power"),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(domain(name))
                }
            }
            Expr::Call { func, arg } => {
                let x = arg.eval(t, s)?;
                let v = match func {
                    Func::Log if x <= 0.0 => return Err(domain("log of a non-positive value")),
                    Func::Sqrt if x < 0.0 => return Err(domain("sqrt of a negative value")),
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(domain(func.name()))
                }
            }
        }
    }
}

/// Integer exponents go through `powi` so that `(-2)^3` is defined.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Fully parenthesised; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::S) => f.write_str("s"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary { op, lhs, rhs } => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "({lhs} {sym} {rhs})")
            }
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}
