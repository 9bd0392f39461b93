use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Expr;

type Poly = Vec<BigRational>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn constant(v: BigRational) -> Poly {
    vec![v]
}

fn padd(a: &Poly, b: &Poly, sign: i32) -> Poly {
    let n = a.len().max(b.len());
    let z = BigRational::zero();
    let out = (0..n)
        .map(|i| {
            let x = a.get(i).unwrap_or(&z);
            let y = b.get(i).unwrap_or(&z);
            if sign > 0 {
                x + y
            } else {
                x - y
            }
        })
        .collect();
    trim(out)
}

fn pmul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn falling(p: &Poly, k: u64) -> Poly {
    let mut acc = constant(BigRational::one());
    for t in 0..k {
        let shifted = padd(p, &constant(BigRational::from_integer(BigInt::from(t))), -1);
        acc = pmul(&acc, &shifted);
    }
    acc
}

fn ratio(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(v.clone()))
}

/// Coefficients (lowest degree first) when e is a polynomial in x over the rationals.
pub fn to_rational_poly(e: &Expr) -> Option<Vec<BigRational>> {
    use Expr::*;
    Some(match e {
        Const(v) => constant(ratio(v)),
        X => vec![BigRational::zero(), BigRational::one()],
        Add(a, b) => padd(&to_rational_poly(a)?, &to_rational_poly(b)?, 1),
        Sub(a, b) => padd(&to_rational_poly(a)?, &to_rational_poly(b)?, -1),
        Mul(a, b) => pmul(&to_rational_poly(a)?, &to_rational_poly(b)?),
        // ~u = -1 - u
        Neg(a) => padd(&constant(-BigRational::one()), &to_rational_poly(a)?, -1),
        Shl(a, m) => {
            let f = BigRational::from_integer(BigInt::one() << *m as usize);
            to_rational_poly(a)?.into_iter().map(|c| c * &f).collect()
        }
        Div1p(a, b) => {
            let d = to_rational_poly(b)?;
            if d.len() > 1 {
                return None;
            }
            let den = BigRational::one() + BigRational::from_integer(BigInt::from(2)) * &d[0];
            if den.is_zero() {
                return None;
            }
            to_rational_poly(a)?.into_iter().map(|c| c / &den).collect()
        }
        Ff(a, k) => falling(&to_rational_poly(a)?, *k),
        Binom(a, k) => {
            let mut fact = BigInt::one();
            for t in 1..=*k {
                fact *= BigInt::from(t);
            }
            let f = BigRational::from_integer(fact);
            falling(&to_rational_poly(a)?, *k).into_iter().map(|c| c / &f).collect()
        }
        _ => return None,
    })
}

/// Built only from ring operations, odd division and odd-base exponentiation.
pub fn is_arithmetic(e: &Expr) -> bool {
    use Expr::*;
    match e {
        Const(_) | X => true,
        Add(..) | Sub(..) | Mul(..) | Neg(_) | Shl(..) | Inv(_) | Exp(..) | Div1p(..) | Ff(..) => {
            e.children().into_iter().all(is_arithmetic)
        }
        _ => false,
    }
}
