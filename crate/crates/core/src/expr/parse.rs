//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x' | 'y' | 'r' | 'theta'
//! func    := 'sin' | 'cos' | 'exp' | 'ln' | 'sqrt'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so
//! `-x^2^3` reads as `-(x^(2^3))`.

use std::fmt;

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownIdentifier(String),
    InvalidNumber(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
        }
    }
}

/// Syntax error; `position` is the byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at column {}", position + 1)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent, only when a digit follows
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
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                position: start,
            })?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or(c);
                    return Err(ParseError {
                        kind: ParseErrorKind::UnexpectedChar(ch),
                        position: start,
                    });
                }
            };
            out.push((tok, start));
            i += 1;
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
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => ParseError {
                kind: ParseErrorKind::UnexpectedToken(t.to_string()),
                position: self.offset(),
            },
            None => ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                position: self.end,
            },
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
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = raw(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = raw(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(raw(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Expr::Var(v));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                let op = match name.as_str() {
                    "sin" => UnaryOp::Sin,
                    "cos" => UnaryOp::Cos,
                    "exp" => UnaryOp::Exp,
                    "ln" => UnaryOp::Ln,
                    "sqrt" => UnaryOp::Sqrt,
                    _ => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownIdentifier(name),
                            position: at,
                        })
                    }
                };
                self.expect(Tok::LParen)?;
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            _ => Err(self.unexpected()),
        }
    }
}

// The parser keeps the tree exactly as written; simplification is explicit.
fn raw(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

/// Parse an expression. Whitespace is insignificant.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Bindings;

    #[test]
    fn single_variable() {
        assert_eq!(parse("x").unwrap(), Expr::Var(Var::X));
        assert_eq!(parse("  theta ").unwrap(), Expr::Var(Var::Theta));
    }

    #[test]
    fn circle_system_component() {
        let e = parse("-y + x*(1 - (x^2 + y^2))").unwrap();
        let expected = raw(
            BinaryOp::Add,
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::y())),
            raw(
                BinaryOp::Mul,
                Expr::x(),
                raw(
                    BinaryOp::Sub,
                    Expr::Const(1.0),
                    raw(
                        BinaryOp::Add,
                        raw(BinaryOp::Pow, Expr::x(), Expr::Const(2.0)),
                        raw(BinaryOp::Pow, Expr::y(), Expr::Const(2.0)),
                    ),
                ),
            ),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn separable_radial_rate() {
        let e = parse("r*(1 - r^2)*cos(theta)^2").unwrap();
        let v = e.eval(&Bindings::polar(0.5, 0.3)).unwrap();
        let expected = 0.5 * (1.0 - 0.25) * 0.3f64.cos().powi(2);
        assert_eq!(v, expected);
        // cos(theta)^2 is the power of the call, not cos of theta^2
        assert!(matches!(
            e,
            Expr::Binary(BinaryOp::Mul, _, ref rhs) if matches!(**rhs, Expr::Binary(BinaryOp::Pow, ..))
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let b = Bindings::xy(2.0, 3.0);
        assert_eq!(parse("-x^2").unwrap().eval(&b).unwrap(), -4.0);
        assert_eq!(parse("2^3^2").unwrap().eval(&b).unwrap(), 512.0);
        assert_eq!(parse("x - y - 1").unwrap().eval(&b).unwrap(), -2.0);
        assert_eq!(parse("12 / x / 3").unwrap().eval(&b).unwrap(), 2.0);
        assert_eq!(parse("x^-1").unwrap().eval(&b).unwrap(), 0.5);
        assert_eq!(parse("1.5e1 + .5").unwrap().eval(&b).unwrap(), 15.5);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("x + $").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(err.position, 4);

        let err = parse("x + z").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("z".into()));
        assert_eq!(err.position, 4);

        let err = parse("(x + y").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);

        let err = parse("x y").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedToken("y".into()));
        assert_eq!(err.position, 2);

        assert!(parse("").is_err());
        assert!(parse("1.2.3").is_err());
        assert!(parse("foo(x)").is_err());
    }
}
