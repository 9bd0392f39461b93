use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::Expr;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("at {pos}: exp base must be an odd constant")]
    EvenBase { pos: usize },
    #[error("at {pos}: inv argument is not structurally odd: {arg}")]
    NotOdd { pos: usize, arg: String },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigUint),
    Ident(String),
    Sym(char),
    End,
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut p = 0;
    while p < b.len() {
        let ch = b[p] as char;
        if ch.is_ascii_whitespace() {
            p += 1;
        } else if ch.is_ascii_digit() {
            let start = p;
            let (radix, digits_start) = if ch == '0' && p + 1 < b.len() && (b[p + 1] == b'x' || b[p + 1] == b'X') {
                (16, p + 2)
            } else {
                (10, p)
            };
            p = digits_start;
            while p < b.len() && (b[p] as char).is_digit(radix) {
                p += 1;
            }
            if p < b.len() && (b[p] as char).is_ascii_alphanumeric() {
                return Err(ParseError::Syntax { pos: p, msg: "malformed number".into() });
            }
            let v = BigUint::parse_bytes(&b[digits_start..p], radix)
                .ok_or(ParseError::Syntax { pos: start, msg: "malformed number".into() })?;
            out.push((Tok::Num(v), start));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = p;
            while p < b.len() && ((b[p] as char).is_ascii_alphanumeric() || b[p] == b'_') {
                p += 1;
            }
            out.push((Tok::Ident(s[start..p].to_string()), start));
        } else if "+-*~&|^(),".contains(ch) {
            out.push((Tok::Sym(ch), p));
            p += 1;
        } else {
            return Err(ParseError::Syntax { pos: p, msg: format!("unexpected character '{ch}'") });
        }
    }
    out.push((Tok::End, s.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }
    fn pos(&self) -> usize {
        self.toks[self.at].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.into() })
    }
    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.xor_expr()?;
        while *self.peek() == Tok::Sym('|') {
            self.bump();
            e = e.or(self.xor_expr()?);
        }
        Ok(e)
    }
    fn xor_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.and_expr()?;
        while *self.peek() == Tok::Sym('^') {
            self.bump();
            e = e.xor(self.and_expr()?);
        }
        Ok(e)
    }
    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.sum()?;
        while *self.peek() == Tok::Sym('&') {
            self.bump();
            e = e.and(self.sum()?);
        }
        Ok(e)
    }
    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    e = e.add(self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    e = e.sub(self.term()?);
                }
                _ => return Ok(e),
            }
        }
    }
    // '*' groups to the right; multiplication mod 2^n is associative
    fn term(&mut self) -> Result<Expr, ParseError> {
        let f = self.factor()?;
        if *self.peek() == Tok::Sym('*') {
            self.bump();
            Ok(f.mul(self.term()?))
        } else {
            Ok(f)
        }
    }
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('~') {
            self.bump();
            Ok(Expr::Neg(Box::new(self.atom()?)))
        } else {
            self.atom()
        }
    }
    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Sym('(') => {
                let e = self.or_expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "i" => Ok(Expr::Counter),
                _ => self.call(&name, pos),
            },
            Tok::End => Err(ParseError::Syntax { pos, msg: "unexpected end of input".into() }),
            t => Err(ParseError::Syntax { pos, msg: format!("unexpected token {t:?}") }),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let arity = match name {
            "inv" | "rev" => 1,
            "exp" | "div1p" | "binom" | "ff" | "shl" | "shr" | "mask" | "mod2n" | "bit" => 2,
            _ => return Err(ParseError::Syntax { pos, msg: format!("unknown function '{name}'") }),
        };
        self.expect('(')?;
        let mut args = Vec::new();
        let mut arg_pos = Vec::new();
        loop {
            arg_pos.push(self.pos());
            args.push(self.or_expr()?);
            if *self.peek() == Tok::Sym(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(')')?;
        if args.len() != arity {
            return Err(ParseError::Syntax {
                pos,
                msg: format!("{name} takes {arity} argument(s), got {}", args.len()),
            });
        }
        let lit = |k: usize| -> Result<BigUint, ParseError> {
            match &args[k] {
                Expr::Const(v) => Ok(v.clone()),
                _ => Err(ParseError::Syntax { pos: arg_pos[k], msg: format!("{name} needs an integer literal here") }),
            }
        };
        let small = |k: usize| -> Result<u32, ParseError> {
            lit(k)?.to_u32().ok_or(ParseError::Syntax { pos: arg_pos[k], msg: "literal too large".into() })
        };
        let mut a = args.clone().into_iter().map(Box::new);
        let first = a.next().unwrap();
        Ok(match name {
            "inv" => {
                if first.parity() != Some(true) {
                    return Err(ParseError::NotOdd { pos: arg_pos[0], arg: first.to_string() });
                }
                Expr::Inv(first)
            }
            "rev" => Expr::Rev(first),
            "exp" => {
                let base = match *first {
                    Expr::Const(ref v) if v.bit(0) => v.clone(),
                    _ => return Err(ParseError::EvenBase { pos: arg_pos[0] }),
                };
                Expr::Exp(base, a.next().unwrap())
            }
            "div1p" => Expr::Div1p(first, a.next().unwrap()),
            "binom" | "ff" => {
                let k = lit(1)?;
                let k = k.to_u64().filter(|&k| k <= 1 << 20).ok_or(ParseError::Syntax {
                    pos: arg_pos[1],
                    msg: "order exceeds 2^20".into(),
                })?;
                if name == "binom" {
                    Expr::Binom(first, k)
                } else {
                    Expr::Ff(first, k)
                }
            }
            "shl" => Expr::Shl(first, small(1)?),
            "shr" => Expr::Shr(first, small(1)?),
            "mod2n" => Expr::Mod2n(first, small(1)?),
            "bit" => Expr::Bit(first, small(1)?),
            "mask" => Expr::Mask(first, lit(1)?),
            _ => unreachable!(),
        })
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    if *p.peek() == Tok::End {
        return p.err("empty expression");
    }
    let e = p.or_expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::super::{c, x};
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse("x + 2*x*x").unwrap(), x().add(c(2).mul(x().mul(x()))));
        assert_eq!(parse("x + (x*x | 5)").unwrap(), x().add(x().mul(x()).or(c(5))));
        let inv = parse("inv(2*x - 1) - x").unwrap();
        assert_eq!(inv, Expr::Inv(Box::new(c(2).mul(x()).sub(c(1)))).sub(x()));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("x + 1 & 3").unwrap(), x().add(c(1)).and(c(3)));
        assert_eq!(parse("x | 1 ^ 2 & 3").unwrap(), x().or(c(1).xor(c(2).and(c(3)))));
        assert_eq!(parse("x - 1 - 2").unwrap(), x().sub(c(1)).sub(c(2)));
        assert_eq!(parse("0x1F").unwrap(), c(31));
        assert_eq!(parse("~x + 1").unwrap(), Expr::Neg(Box::new(x())).add(c(1)));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("x + "), Err(ParseError::Syntax { pos: 4, .. })));
        assert!(matches!(parse("exp(2, x)"), Err(ParseError::EvenBase { .. })));
        assert!(matches!(parse("exp(x, x)"), Err(ParseError::EvenBase { .. })));
        assert!(matches!(parse("inv(2*x)"), Err(ParseError::NotOdd { .. })));
        assert!(matches!(parse("inv(x)"), Err(ParseError::NotOdd { .. })));
        assert!(parse("foo(x)").is_err());
        assert!(parse("shl(x, x)").is_err());
        assert!(parse("x $ 1").is_err());
        assert!(parse("(x").is_err());
        assert!(parse("x)").is_err());
        assert!(parse("").is_err());
        assert!(parse("12ab").is_err());
    }
}
