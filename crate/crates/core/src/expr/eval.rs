use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use super::Expr;
use crate::words::{inverse_odd_big, inverse_odd_u64, mask_big, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("inversion of an even value in `{0}`")]
    EvenInverse(String),
    #[error("exp base {0} is even")]
    EvenBase(BigUint),
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("argument width {got} differs from evaluation width {want}")]
    Width { got: u32, want: u32 },
}

/// Arithmetic mod 2^n on some value representation.
trait Ring {
    type V: Clone;
    fn width(&self) -> u32;
    fn lift(&self, v: &BigUint) -> Self::V;
    fn small(&self, v: u64) -> Self::V;
    fn lower(&self, v: &Self::V) -> BigUint;
    fn zero(&self) -> Self::V {
        self.small(0)
    }
    fn one(&self) -> Self::V {
        self.small(1)
    }
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn sub(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn xor(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn and(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn or(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn not(&self, a: &Self::V) -> Self::V;
    fn shl(&self, a: &Self::V, m: u64) -> Self::V;
    fn shr(&self, a: &Self::V, m: u64) -> Self::V;
    fn bit(&self, a: &Self::V, j: u64) -> bool;
    /// a assumed odd
    fn inv(&self, a: &Self::V) -> Self::V;
    fn rev(&self, a: &Self::V) -> Self::V;
    /// a < k as integers
    fn less_than(&self, a: &Self::V, k: u64) -> bool;
    /// (odd part, valuation) of a nonzero value
    fn split_odd(&self, a: &Self::V) -> (Self::V, u64);
    fn is_zero(&self, a: &Self::V) -> bool;
}

#[derive(Clone, Copy)]
struct Narrow {
    n: u32,
    mask: u64,
}

impl Narrow {
    fn new(n: u32) -> Self {
        Narrow { n, mask: if n == 64 { u64::MAX } else { (1u64 << n) - 1 } }
    }
}

impl Ring for Narrow {
    type V = u64;
    fn width(&self) -> u32 {
        self.n
    }
    fn lift(&self, v: &BigUint) -> u64 {
        v.iter_u64_digits().next().unwrap_or(0) & self.mask
    }
    fn small(&self, v: u64) -> u64 {
        v & self.mask
    }
    fn lower(&self, v: &u64) -> BigUint {
        BigUint::from(*v)
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        a.wrapping_add(*b) & self.mask
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        a.wrapping_sub(*b) & self.mask
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a.wrapping_mul(*b) & self.mask
    }
    fn xor(&self, a: &u64, b: &u64) -> u64 {
        a ^ b
    }
    fn and(&self, a: &u64, b: &u64) -> u64 {
        a & b
    }
    fn or(&self, a: &u64, b: &u64) -> u64 {
        a | b
    }
    fn not(&self, a: &u64) -> u64 {
        !a & self.mask
    }
    fn shl(&self, a: &u64, m: u64) -> u64 {
        if m >= 64 {
            0
        } else {
            (a << m) & self.mask
        }
    }
    fn shr(&self, a: &u64, m: u64) -> u64 {
        if m >= 64 {
            0
        } else {
            a >> m
        }
    }
    fn bit(&self, a: &u64, j: u64) -> bool {
        j < 64 && (a >> j) & 1 == 1
    }
    fn inv(&self, a: &u64) -> u64 {
        inverse_odd_u64(*a) & self.mask
    }
    fn rev(&self, a: &u64) -> u64 {
        crate::words::reverse_u64(*a, self.n)
    }
    fn less_than(&self, a: &u64, k: u64) -> bool {
        *a < k
    }
    fn split_odd(&self, a: &u64) -> (u64, u64) {
        let z = a.trailing_zeros();
        (a >> z, z as u64)
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
}

#[derive(Clone)]
struct Wide {
    n: u32,
    mask: BigUint,
}

impl Ring for Wide {
    type V = BigUint;
    fn width(&self) -> u32 {
        self.n
    }
    fn lift(&self, v: &BigUint) -> BigUint {
        v & &self.mask
    }
    fn small(&self, v: u64) -> BigUint {
        BigUint::from(v) & &self.mask
    }
    fn lower(&self, v: &BigUint) -> BigUint {
        v.clone()
    }
    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) & &self.mask
    }
    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + &self.mask + BigUint::one() - b) & &self.mask
    }
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) & &self.mask
    }
    fn xor(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a ^ b
    }
    fn and(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a & b
    }
    fn or(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a | b
    }
    fn not(&self, a: &BigUint) -> BigUint {
        a ^ &self.mask
    }
    fn shl(&self, a: &BigUint, m: u64) -> BigUint {
        if m >= self.n as u64 {
            BigUint::zero()
        } else {
            (a << m as usize) & &self.mask
        }
    }
    fn shr(&self, a: &BigUint, m: u64) -> BigUint {
        a >> m as usize
    }
    fn bit(&self, a: &BigUint, j: u64) -> bool {
        a.bit(j)
    }
    fn inv(&self, a: &BigUint) -> BigUint {
        inverse_odd_big(a, self.n)
    }
    fn rev(&self, a: &BigUint) -> BigUint {
        let mut out = BigUint::zero();
        for j in 0..self.n as u64 {
            if a.bit(j) {
                out.set_bit(self.n as u64 - 1 - j, true);
            }
        }
        out
    }
    fn less_than(&self, a: &BigUint, k: u64) -> bool {
        *a < BigUint::from(k)
    }
    fn split_odd(&self, a: &BigUint) -> (BigUint, u64) {
        let z = a.trailing_zeros().unwrap_or(0);
        (a >> z as usize, z)
    }
    fn is_zero(&self, a: &BigUint) -> bool {
        a.is_zero()
    }
}

enum Op<V> {
    Const(V),
    X,
    Counter,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Xor(usize, usize),
    And(usize, usize),
    Or(usize, usize),
    Neg(usize),
    Shl(usize, u64),
    Shr(usize, u64),
    Mask(usize, V),
    Mod2n(usize, V),
    Inv(usize, String),
    Exp(usize, Vec<V>),
    Div1p(usize, usize),
    Binom { a: usize, k: u64, den_inv: V, den_val: u64 },
    Ff(usize, u64),
    Rev(usize),
    Bit(usize, u64),
}

/// Postorder program: every child index precedes its parent.
struct Program<R: Ring> {
    ring: R,
    ops: Vec<Op<R::V>>,
}

impl<R: Ring> Program<R> {
    fn compile(e: &Expr, ring: R) -> Result<Self, EvalError> {
        let mut p = Program { ring, ops: Vec::with_capacity(e.node_count()) };
        p.push(e)?;
        Ok(p)
    }

    fn push(&mut self, e: &Expr) -> Result<usize, EvalError> {
        let r = &self.ring;
        let n = r.width() as u64;
        let op = match e {
            Expr::Const(v) => Op::Const(r.lift(v)),
            Expr::X => Op::X,
            Expr::Counter => Op::Counter,
            Expr::Add(a, b) => Op::Add(self.push(a)?, self.push(b)?),
            Expr::Sub(a, b) => Op::Sub(self.push(a)?, self.push(b)?),
            Expr::Mul(a, b) => Op::Mul(self.push(a)?, self.push(b)?),
            Expr::Xor(a, b) => Op::Xor(self.push(a)?, self.push(b)?),
            Expr::And(a, b) => Op::And(self.push(a)?, self.push(b)?),
            Expr::Or(a, b) => Op::Or(self.push(a)?, self.push(b)?),
            Expr::Div1p(a, b) => Op::Div1p(self.push(a)?, self.push(b)?),
            Expr::Neg(a) => Op::Neg(self.push(a)?),
            Expr::Shl(a, m) => Op::Shl(self.push(a)?, *m as u64),
            Expr::Shr(a, m) => Op::Shr(self.push(a)?, *m as u64),
            Expr::Mask(a, v) => {
                let i = self.push(a)?;
                Op::Mask(i, self.ring.lift(v))
            }
            Expr::Mod2n(a, m) => {
                let i = self.push(a)?;
                let mv = if (*m as u64) >= n { mask_big(n as u32) } else { mask_big(*m) };
                Op::Mod2n(i, self.ring.lift(&mv))
            }
            Expr::Inv(a) => Op::Inv(self.push(a)?, a.to_string()),
            Expr::Exp(base, a) => {
                if !base.bit(0) {
                    return Err(EvalError::EvenBase(base.clone()));
                }
                let i = self.push(a)?;
                let r = &self.ring;
                let mut table = Vec::with_capacity(n as usize);
                let mut p = r.lift(base);
                for _ in 0..n {
                    table.push(p.clone());
                    p = r.mul(&p, &p);
                }
                Op::Exp(i, table)
            }
            Expr::Binom(a, k) => {
                let i = self.push(a)?;
                let r = &self.ring;
                let mut den = r.one();
                let mut den_val = 0;
                for d in 1..=*k {
                    let z = d.trailing_zeros();
                    den_val += z as u64;
                    den = r.mul(&den, &r.small(d >> z));
                }
                Op::Binom { a: i, k: *k, den_inv: r.inv(&den), den_val }
            }
            Expr::Ff(a, k) => Op::Ff(self.push(a)?, *k),
            Expr::Rev(a) => Op::Rev(self.push(a)?),
            Expr::Bit(a, j) => Op::Bit(self.push(a)?, *j as u64),
        };
        self.ops.push(op);
        Ok(self.ops.len() - 1)
    }

    fn run(&self, x: &R::V, i: &R::V) -> Result<R::V, EvalError> {
        let r = &self.ring;
        let n = r.width() as u64;
        let mut vals: Vec<R::V> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(v) => v.clone(),
                Op::X => x.clone(),
                Op::Counter => i.clone(),
                Op::Add(a, b) => r.add(&vals[*a], &vals[*b]),
                Op::Sub(a, b) => r.sub(&vals[*a], &vals[*b]),
                Op::Mul(a, b) => r.mul(&vals[*a], &vals[*b]),
                Op::Xor(a, b) => r.xor(&vals[*a], &vals[*b]),
                Op::And(a, b) => r.and(&vals[*a], &vals[*b]),
                Op::Or(a, b) => r.or(&vals[*a], &vals[*b]),
                Op::Neg(a) => r.not(&vals[*a]),
                Op::Shl(a, m) => r.shl(&vals[*a], *m),
                Op::Shr(a, m) => r.shr(&vals[*a], *m),
                Op::Mask(a, m) | Op::Mod2n(a, m) => r.and(&vals[*a], m),
                Op::Inv(a, text) => {
                    let v = &vals[*a];
                    if !r.bit(v, 0) {
                        return Err(EvalError::EvenInverse(text.clone()));
                    }
                    r.inv(v)
                }
                Op::Exp(a, table) => {
                    let e = &vals[*a];
                    let mut acc = r.one();
                    for (j, t) in table.iter().enumerate() {
                        if r.bit(e, j as u64) {
                            acc = r.mul(&acc, t);
                        }
                    }
                    acc
                }
                Op::Div1p(a, b) => {
                    let d = r.add(&r.one(), &r.shl(&vals[*b], 1));
                    r.mul(&vals[*a], &r.inv(&d))
                }
                Op::Binom { a, k, den_inv, den_val } => {
                    let v = &vals[*a];
                    if r.less_than(v, *k) {
                        r.zero()
                    } else {
                        let mut num = r.one();
                        let mut val = 0u64;
                        let mut f = v.clone();
                        for _ in 0..*k {
                            let (odd, z) = r.split_odd(&f);
                            num = r.mul(&num, &odd);
                            val += z;
                            f = r.sub(&f, &r.one());
                        }
                        let val = val - den_val;
                        if val >= n {
                            r.zero()
                        } else {
                            r.shl(&r.mul(&num, den_inv), val)
                        }
                    }
                }
                Op::Ff(a, k) => {
                    let mut acc = r.one();
                    let mut f = vals[*a].clone();
                    for _ in 0..*k {
                        if r.is_zero(&acc) {
                            break;
                        }
                        acc = r.mul(&acc, &f);
                        f = r.sub(&f, &r.one());
                    }
                    acc
                }
                Op::Rev(a) => r.rev(&vals[*a]),
                Op::Bit(a, j) => {
                    if r.bit(&vals[*a], *j) {
                        r.one()
                    } else {
                        r.zero()
                    }
                }
            };
            vals.push(v);
        }
        Ok(vals.pop().expect("program is never empty"))
    }
}

enum Backend {
    Narrow(Program<Narrow>),
    Wide(Program<Wide>),
}

/// An expression compiled for one evaluation width.
pub struct Evaluator {
    width: u32,
    backend: Backend,
}

impl Evaluator {
    /// Machine-word path for widths up to 64, big integers above.
    pub fn new(e: &Expr, n: u32) -> Result<Self, EvalError> {
        if n == 0 {
            return Err(EvalError::ZeroWidth);
        }
        if n <= 64 {
            Ok(Evaluator { width: n, backend: Backend::Narrow(Program::compile(e, Narrow::new(n))?) })
        } else {
            Self::with_big_integers(e, n)
        }
    }

    /// Force the arbitrary-precision path at any width.
    pub fn with_big_integers(e: &Expr, n: u32) -> Result<Self, EvalError> {
        if n == 0 {
            return Err(EvalError::ZeroWidth);
        }
        let ring = Wide { n, mask: mask_big(n) };
        Ok(Evaluator { width: n, backend: Backend::Wide(Program::compile(e, ring)?) })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn eval(&self, x: &Word, i: u64) -> Result<Word, EvalError> {
        let v = match &self.backend {
            Backend::Narrow(p) => {
                let xv = p.ring.lift(x.value());
                BigUint::from(p.run(&xv, &p.ring.small(i))?)
            }
            Backend::Wide(p) => {
                let xv = p.ring.lift(x.value());
                p.run(&xv, &p.ring.small(i))?
            }
        };
        Ok(Word::new(v, self.width))
    }

    /// Evaluate on a machine word; the result is reduced mod 2^width.
    pub fn eval_u64(&self, x: u64, i: u64) -> Result<u64, EvalError> {
        match &self.backend {
            Backend::Narrow(p) => p.run(&p.ring.small(x), &p.ring.small(i)),
            Backend::Wide(p) => {
                let v = p.run(&p.ring.small(x), &p.ring.small(i))?;
                Ok(p.ring.lower(&v).iter_u64_digits().next().unwrap_or(0))
            }
        }
    }

    pub fn eval_big(&self, x: &BigUint, i: u64) -> Result<BigUint, EvalError> {
        match &self.backend {
            Backend::Narrow(p) => p.run(&p.ring.lift(x), &p.ring.small(i)).map(BigUint::from),
            Backend::Wide(p) => p.run(&p.ring.lift(x), &p.ring.small(i)),
        }
    }
}

pub fn eval(e: &Expr, x: &Word, i: u64, n: u32) -> Result<Word, EvalError> {
    Evaluator::new(e, n)?.eval(&x.resize(n), i)
}
