//! Composition trees of the compatible primitives, with parsing,
//! evaluation mod 2^n, Boolean-form extraction and empirical derivatives.

mod anf;
mod compat;
mod derivative;
mod eval;
mod parse;
mod poly;
pub mod random;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

pub use anf::{anf, AnfError, AnfRow, AnfTable, ANF_WIDTH_CAP};
pub use compat::{structural_compatibility, Compatibility};
pub use derivative::{empirical_derivative, Derivative, DerivativeError};
pub use eval::{eval, EvalError, Evaluator};
pub use parse::{parse, ParseError};
pub use poly::{is_arithmetic, to_rational_poly};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Const(BigUint),
    X,
    Counter,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Shl(Box<Expr>, u32),
    Shr(Box<Expr>, u32),
    Mask(Box<Expr>, BigUint),
    Mod2n(Box<Expr>, u32),
    Inv(Box<Expr>),
    /// a^e for an odd constant a.
    Exp(BigUint, Box<Expr>),
    /// u / (1 + 2v)
    Div1p(Box<Expr>, Box<Expr>),
    Binom(Box<Expr>, u64),
    /// falling factorial e(e-1)...(e-k+1)
    Ff(Box<Expr>, u64),
    Rev(Box<Expr>),
    Bit(Box<Expr>, u32),
}

pub fn c(v: u64) -> Expr {
    Expr::Const(BigUint::from(v))
}

pub fn x() -> Expr {
    Expr::X
}

impl Expr {
    pub fn add(self, o: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(o))
    }
    pub fn sub(self, o: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(o))
    }
    pub fn mul(self, o: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(o))
    }
    pub fn xor(self, o: Expr) -> Expr {
        Expr::Xor(Box::new(self), Box::new(o))
    }
    pub fn and(self, o: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(o))
    }
    pub fn or(self, o: Expr) -> Expr {
        Expr::Or(Box::new(self), Box::new(o))
    }

    pub fn children(&self) -> Vec<&Expr> {
        use Expr::*;
        match self {
            Const(_) | X | Counter => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Xor(a, b) | And(a, b) | Or(a, b) | Div1p(a, b) => {
                vec![a, b]
            }
            Neg(a) | Shl(a, _) | Shr(a, _) | Mask(a, _) | Mod2n(a, _) | Inv(a) | Exp(_, a)
            | Binom(a, _) | Ff(a, _) | Rev(a) | Bit(a, _) => vec![a],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        use Expr::*;
        match self {
            Const(_) => "const",
            X => "x",
            Counter => "i",
            Add(..) => "add",
            Sub(..) => "sub",
            Mul(..) => "mul",
            Xor(..) => "xor",
            And(..) => "and",
            Or(..) => "or",
            Neg(_) => "neg",
            Shl(..) => "shl",
            Shr(..) => "shr",
            Mask(..) => "mask",
            Mod2n(..) => "mod2n",
            Inv(_) => "inv",
            Exp(..) => "exp",
            Div1p(..) => "div1p",
            Binom(..) => "binom",
            Ff(..) => "ff",
            Rev(_) => "rev",
            Bit(..) => "bit",
        }
    }

    pub fn depends_on_x(&self) -> bool {
        matches!(self, Expr::X) || self.children().iter().any(|c| c.depends_on_x())
    }

    pub fn depends_on_counter(&self) -> bool {
        matches!(self, Expr::Counter) || self.children().iter().any(|c| c.depends_on_counter())
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Replace every occurrence of x by `r`.
    pub fn substitute_x(&self, r: &Expr) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::X => Some(r.clone()),
            _ => None,
        })
    }

    /// Replace the counter variable by a constant.
    pub fn bind_counter(&self, i: u64) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Counter => Some(c(i)),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        use Expr::*;
        if let Some(r) = f(self) {
            return r;
        }
        let m = |a: &Expr| Box::new(a.map_leaves(f));
        match self {
            Const(_) | X | Counter => self.clone(),
            Add(a, b) => Add(m(a), m(b)),
            Sub(a, b) => Sub(m(a), m(b)),
            Mul(a, b) => Mul(m(a), m(b)),
            Xor(a, b) => Xor(m(a), m(b)),
            And(a, b) => And(m(a), m(b)),
            Or(a, b) => Or(m(a), m(b)),
            Div1p(a, b) => Div1p(m(a), m(b)),
            Neg(a) => Neg(m(a)),
            Shl(a, k) => Shl(m(a), *k),
            Shr(a, k) => Shr(m(a), *k),
            Mask(a, v) => Mask(m(a), v.clone()),
            Mod2n(a, k) => Mod2n(m(a), *k),
            Inv(a) => Inv(m(a)),
            Exp(b, a) => Exp(b.clone(), m(a)),
            Binom(a, k) => Binom(m(a), *k),
            Ff(a, k) => Ff(m(a), *k),
            Rev(a) => Rev(m(a)),
            Bit(a, k) => Bit(m(a), *k),
        }
    }

    /// Known parity of the value at every width, if structurally evident.
    pub fn parity(&self) -> Option<bool> {
        use Expr::*;
        match self {
            Const(v) => Some(v.bit(0)),
            X | Counter | Shr(..) | Rev(_) => None,
            Add(a, b) | Sub(a, b) | Xor(a, b) => Some(a.parity()? ^ b.parity()?),
            Mul(a, b) | And(a, b) => match (a.parity(), b.parity()) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Or(a, b) => match (a.parity(), b.parity()) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            Neg(a) => a.parity().map(|p| !p),
            Shl(a, k) => if *k > 0 { Some(false) } else { a.parity() },
            Mask(a, v) => if v.bit(0) { a.parity() } else { Some(false) },
            Mod2n(a, k) => if *k == 0 { Some(false) } else { a.parity() },
            Inv(_) | Exp(..) => Some(true),
            Div1p(a, _) => a.parity(),
            Binom(_, 0) | Ff(_, 0) => Some(true),
            Binom(..) => None,
            Ff(a, 1) => a.parity(),
            Ff(..) => Some(false),
            Bit(a, 0) => a.parity(),
            Bit(..) => None,
        }
    }

    /// Constant value as u64 when the node is a literal.
    pub fn literal(&self) -> Option<u64> {
        match self {
            Expr::Const(v) => v.to_u64(),
            _ => None,
        }
    }

    fn prec(&self) -> u8 {
        use Expr::*;
        match self {
            Or(..) => 1,
            Xor(..) => 2,
            And(..) => 3,
            Add(..) | Sub(..) => 4,
            Mul(..) => 5,
            Neg(_) => 6,
            _ => 7,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        let p = self.prec();
        let infix = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, right_assoc: bool| {
            let (lp, rp) = if right_assoc { (a.prec() <= p, b.prec() < p) } else { (a.prec() < p, b.prec() <= p) };
            write_child(f, a, lp)?;
            write!(f, " {op} ")?;
            write_child(f, b, rp)
        };
        match self {
            Const(v) => write!(f, "{v}"),
            X => f.write_str("x"),
            Counter => f.write_str("i"),
            Add(a, b) => infix(f, a, "+", b, false),
            Sub(a, b) => infix(f, a, "-", b, false),
            Mul(a, b) => infix(f, a, "*", b, true),
            Xor(a, b) => infix(f, a, "^", b, false),
            And(a, b) => infix(f, a, "&", b, false),
            Or(a, b) => infix(f, a, "|", b, false),
            Neg(a) => {
                f.write_str("~")?;
                write_child(f, a, a.prec() < 7)
            }
            Shl(a, k) => write!(f, "shl({a}, {k})"),
            Shr(a, k) => write!(f, "shr({a}, {k})"),
            Mask(a, v) => write!(f, "mask({a}, {v})"),
            Mod2n(a, k) => write!(f, "mod2n({a}, {k})"),
            Inv(a) => write!(f, "inv({a})"),
            Exp(b, a) => write!(f, "exp({b}, {a})"),
            Div1p(a, b) => write!(f, "div1p({a}, {b})"),
            Binom(a, k) => write!(f, "binom({a}, {k})"),
            Ff(a, k) => write!(f, "ff({a}, {k})"),
            Rev(a) => write!(f, "rev({a})"),
            Bit(a, k) => write!(f, "bit({a}, {k})"),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// 2-adic valuation of a constant coefficient subexpression, if recognizable.
pub(crate) fn const_valuation(e: &Expr) -> Option<u64> {
    match e {
        Expr::Const(v) if v.is_zero() => Some(u64::MAX),
        Expr::Const(v) => v.trailing_zeros(),
        Expr::Shl(a, k) => const_valuation(a).map(|v| v.saturating_add(*k as u64)),
        Expr::Div1p(a, b) if !b.depends_on_x() => const_valuation(a),
        Expr::Mul(a, b) => Some(const_valuation(a)?.saturating_add(const_valuation(b)?)),
        _ => None,
    }
}
