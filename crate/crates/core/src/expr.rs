//! Tiny arithmetic expression grammar for coefficient definitions.
//!
//! Grammar (infix, `^` right-associative):
//!
//! ```text
//! expr    := term  (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?
//! unary   := '-' unary | primary
//! primary := number | 'x' | 'y' | 'pi' | '(' expr ')' | fn '(' expr {',' expr} ')'
//! fn      := exp | sin | cos | sqrt | abs | ln | min | max | ind | bump
//! ```
//!
//! `ind(t, a, b)` is the open-interval indicator `1` when `a < t < b`;
//! box indicators are products of `ind`. `bump(t, a, b)` is the C^1 bump
//! `(1 - s^2)^2` with `s = (2t - a - b)/(b - a)`, supported exactly on
//! `(a, b)`. Coordinates: `x`, and `y` in 2D.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Parsed closed-form expression of the coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Ln(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Ind(Box<Expr>, Box<Expr>, Box<Expr>),
    Bump(Box<Expr>, Box<Expr>, Box<Expr>),
}

/// Smooth bump supported on `(a, b)`, maximum 1 at the midpoint.
pub fn bump(t: f64, a: f64, b: f64) -> f64 {
    let s = (2.0 * t - a - b) / (b - a);
    if s.abs() < 1.0 {
        let q = 1.0 - s * s;
        q * q
    } else {
        0.0
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "trailing input at token {} in '{}'",
                p.pos, src
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => p[0],
            Expr::Y => p[1],
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => a.eval(p).powf(b.eval(p)),
            Expr::Exp(a) => a.eval(p).exp(),
            Expr::Sin(a) => a.eval(p).sin(),
            Expr::Cos(a) => a.eval(p).cos(),
            Expr::Sqrt(a) => a.eval(p).sqrt(),
            Expr::Abs(a) => a.eval(p).abs(),
            Expr::Ln(a) => a.eval(p).ln(),
            Expr::Min(a, b) => a.eval(p).min(b.eval(p)),
            Expr::Max(a, b) => a.eval(p).max(b.eval(p)),
            Expr::Ind(t, a, b) => {
                let (t, a, b) = (t.eval(p), a.eval(p), b.eval(p));
                if a < t && t < b {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Bump(t, a, b) => bump(t.eval(p), a.eval(p), b.eval(p)),
        }
    }

    /// Wraps the expression as a shareable scalar function.
    pub fn into_fn(self) -> Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync> {
        Arc::new(move |p| self.eval(p))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Comma => write!(f, ","),
        }
    }
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number '{text}' in '{src}'")))?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            _ => return Err(Error::Expr(format!("unexpected character '{c}' in '{src}'"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump_tok(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump_tok() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expr(format!(
                "expected '{t}', got {:?} in '{}'",
                got, self.src
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary minus binds looser than '^', so `-x^2` reads as `-(x^2)`
    fn factor(&mut self) -> Result<Expr> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let exp = self.factor()?; // right-associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump_tok() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                _ => {
                    self.expect(Tok::LParen)?;
                    let mut args = vec![self.expr()?];
                    while let Some(Tok::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    self.call(&name, args)
                }
            },
            got => Err(Error::Expr(format!(
                "unexpected token {:?} in '{}'",
                got, self.src
            ))),
        }
    }

    fn call(&self, name: &str, mut args: Vec<Expr>) -> Result<Expr> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Expr(format!(
                    "{name} takes {n} argument(s), got {} in '{}'",
                    args.len(),
                    self.src
                )))
            }
        };
        macro_rules! one {
            ($v:path) => {{
                arity(1)?;
                Ok($v(Box::new(args.remove(0))))
            }};
        }
        macro_rules! two {
            ($v:path) => {{
                arity(2)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok($v(Box::new(a), Box::new(b)))
            }};
        }
        macro_rules! three {
            ($v:path) => {{
                arity(3)?;
                let c = args.pop().unwrap();
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok($v(Box::new(a), Box::new(b), Box::new(c)))
            }};
        }
        match name {
            "exp" => one!(Expr::Exp),
            "sin" => one!(Expr::Sin),
            "cos" => one!(Expr::Cos),
            "sqrt" => one!(Expr::Sqrt),
            "abs" => one!(Expr::Abs),
            "ln" => one!(Expr::Ln),
            "min" => two!(Expr::Min),
            "max" => two!(Expr::Max),
            "ind" => three!(Expr::Ind),
            "bump" => three!(Expr::Bump),
            _ => Err(Error::Expr(format!("unknown function '{name}' in '{}'", self.src))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64, y: f64) -> f64 {
        Expr::parse(src).unwrap().eval([x, y])
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2*3", 0.0, 0.0), 7.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0); // right-assoc
        assert_eq!(ev("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("(1 + x) * (1 - x)", 0.5, 0.0), 0.75);
        assert!((ev("sin(pi/2)", 0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_and_bump() {
        assert_eq!(ev("ind(x, 0.4, 0.6)", 0.5, 0.0), 1.0);
        assert_eq!(ev("ind(x, 0.4, 0.6)", 0.4, 0.0), 0.0); // open interval
        assert_eq!(ev("bump(x, 0.4, 0.6)", 0.5, 0.0), 1.0);
        assert_eq!(ev("bump(x, 0.4, 0.6)", 0.61, 0.0), 0.0);
        // box indicator as a product
        assert_eq!(ev("ind(x,0,1)*ind(y,0,1)", 0.5, 0.5), 1.0);
        assert_eq!(ev("ind(x,0,1)*ind(y,0,1)", 0.5, 1.5), 0.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("bump(x, 0.4)").is_err());
    }
}
