use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Evaluator, Expr};
use crate::words::BitSeq;

/// A state law: an expression, or a triangular map given by its φ tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Law {
    Expr(Expr),
    Table(TableLaw),
}

/// δ_j(g(x)) = χ_j ⊕ φ_j(x mod 2^j); `phi[j]` has 2^j entries. Levels past the
/// table act as the identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableLaw {
    pub phi: Vec<BitSeq>,
}

impl TableLaw {
    pub fn identity(levels: u32) -> Self {
        TableLaw { phi: (0..levels).map(|j| BitSeq::zeros(1usize << j)).collect() }
    }

    pub fn levels(&self) -> u32 {
        self.phi.len() as u32
    }

    pub(crate) fn eval_u64(&self, x: u64, n: u32) -> u64 {
        let mut out = x;
        for j in 0..n.min(self.levels()) {
            let low = if j == 0 { 0 } else { (x & ((1u64 << j) - 1)) as usize };
            if self.phi[j as usize].get(low) {
                out ^= 1 << j;
            }
        }
        out
    }

    fn eval_big(&self, x: &BigUint, n: u32) -> BigUint {
        let mut out = x.clone();
        for j in 0..n.min(self.levels()) {
            let low = if j == 0 { 0 } else { x.iter_u64_digits().next().unwrap_or(0) & ((1u64 << j) - 1) };
            if self.phi[j as usize].get(low as usize) {
                out.set_bit(j as u64, !out.bit(j as u64));
            }
        }
        out
    }
}

impl From<Expr> for Law {
    fn from(e: Expr) -> Self {
        Law::Expr(e)
    }
}

impl Law {
    pub fn compile(&self, n: u32) -> Result<CompiledLaw, EvalError> {
        Ok(match self {
            Law::Expr(e) => CompiledLaw::Expr(Evaluator::new(e, n)?),
            Law::Table(t) => CompiledLaw::Table(t.clone(), n),
        })
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            Law::Expr(e) => Some(e),
            Law::Table(_) => None,
        }
    }
}

pub enum CompiledLaw {
    Expr(Evaluator),
    Table(TableLaw, u32),
}

impl CompiledLaw {
    pub fn eval_u64(&self, x: u64, counter: u64) -> Result<u64, EvalError> {
        match self {
            CompiledLaw::Expr(ev) => ev.eval_u64(x, counter),
            CompiledLaw::Table(t, n) => {
                let m = if *n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
                Ok(t.eval_u64(x & m, *n))
            }
        }
    }

    pub fn eval_big(&self, x: &BigUint, counter: u64) -> Result<BigUint, EvalError> {
        match self {
            CompiledLaw::Expr(ev) => ev.eval_big(x, counter),
            CompiledLaw::Table(t, n) => Ok(t.eval_big(&(x & crate::words::mask_big(*n)), *n)),
        }
    }
}
