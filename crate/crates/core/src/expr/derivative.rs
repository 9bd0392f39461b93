use serde::Serialize;
use thiserror::Error;

use super::{EvalError, Evaluator, Expr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DerivativeError {
    #[error("no K <= {0} works; the map may not be uniformly differentiable mod 2^k")]
    BoundExhausted(u32),
    #[error("k must be 1 or 2, got {0}")]
    BadOrder(u32),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Derivative {
    pub k: u32,
    /// The estimate of N_k.
    pub n_k: u32,
    /// D(u) mod 2^k for u < 2^{n_k}.
    pub table: Vec<u64>,
}

/// Smallest K <= `bound` such that f(u + h) = f(u) + h D(u) mod 2^{k+K} for every u and
/// every h divisible by 2^K, where D is the derivative mod 2^k read off two levels deeper
/// than the bound (and checked stable there).
pub fn empirical_derivative(e: &Expr, k: u32, bound: u32) -> Result<Derivative, DerivativeError> {
    if !(1..=2).contains(&k) {
        return Err(DerivativeError::BadOrder(k));
    }
    let top = bound + 2;
    let width = top + k;
    let ev = Evaluator::new(e, width)?;
    let vals = (0..1u64 << width).map(|x| ev.eval_u64(x, 0)).collect::<Result<Vec<_>, _>>()?;
    let dmask = (1u64 << k) - 1;

    // pointwise derivative at level K', defined for u < 2^{K'+k}
    let level = |kp: u32| -> Option<Vec<u64>> {
        let m = (1u64 << (kp + k)) - 1;
        let h = 1u64 << kp;
        (0..=m)
            .map(|u| {
                let diff = vals[((u + h) & m) as usize].wrapping_sub(vals[u as usize]) & m;
                (diff & (h - 1) == 0).then_some((diff >> kp) & dmask)
            })
            .collect()
    };
    let deep = level(top).ok_or(DerivativeError::BoundExhausted(bound))?;
    let below = level(top - 1).ok_or(DerivativeError::BoundExhausted(bound))?;
    if below.iter().enumerate().any(|(u, &d)| d != deep[u]) {
        return Err(DerivativeError::BoundExhausted(bound));
    }

    for kk in 0..=bound {
        let m = (1u64 << (kk + k)) - 1;
        let h = 1u64 << kk;
        let holds = (0..=m).all(|u| {
            let fu = vals[u as usize] & m;
            (1..=dmask).all(|t| {
                let lhs = vals[((u + h * t) & m) as usize].wrapping_sub(fu) & m;
                lhs == h.wrapping_mul(t).wrapping_mul(deep[u as usize]) & m
            })
        });
        let periodic = (0..=m as usize).all(|u| deep[u] == deep[u % (1usize << kk)]);
        if holds && periodic {
            return Ok(Derivative { k, n_k: kk, table: deep[..1usize << kk].to_vec() });
        }
    }
    Err(DerivativeError::BoundExhausted(bound))
}
