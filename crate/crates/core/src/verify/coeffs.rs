use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{Outcome, Property, Verdict, VerifyError, Witness};
use crate::expr::{c, x, Expr};
use crate::words::rational_to_word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Monomial,
    /// x(x-1)...(x-i+1)
    FallingFactorial,
    /// C(x, i)
    Mahler,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyCoeffs {
    pub basis: Basis,
    pub coeffs: Vec<BigRational>,
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn factorial(i: usize) -> BigInt {
    (1..=i as u64).fold(BigInt::one(), |a, b| a * b)
}

impl PolyCoeffs {
    pub fn new(basis: Basis, mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        PolyCoeffs { basis, coeffs }
    }

    pub fn from_integers(basis: Basis, cs: &[i64]) -> Self {
        Self::new(basis, cs.iter().map(|&v| int(v)).collect())
    }

    pub fn degree(&self) -> u64 {
        (self.coeffs.len() - 1) as u64
    }

    pub fn get(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Every coefficient has an odd denominator.
    pub fn is_two_adic(&self) -> bool {
        self.coeffs.iter().all(|c| c.denom().is_odd())
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// c_i mod 2^bits, or None if the denominator is even.
    pub fn coeff_mod(&self, i: usize, bits: u32) -> Option<u64> {
        let c = self.get(i);
        rational_to_word(c.numer(), c.denom(), bits).ok().and_then(|w| w.to_u64())
    }

    /// 2-adic valuation of c_i (None for zero).
    pub fn valuation(&self, i: usize) -> Option<i64> {
        let c = self.get(i);
        if c.is_zero() {
            return None;
        }
        let v = |z: &BigInt| z.abs().to_biguint().and_then(|m| m.trailing_zeros()).unwrap_or(0) as i64;
        Some(v(c.numer()) - v(c.denom()))
    }

    fn to_falling(&self) -> Vec<BigRational> {
        match self.basis {
            Basis::FallingFactorial => self.coeffs.clone(),
            Basis::Mahler => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| a / BigRational::from_integer(factorial(i)))
                .collect(),
            Basis::Monomial => {
                // x^n = sum_k S(n, k) x^(k)
                let d = self.coeffs.len();
                let mut s = vec![vec![BigInt::zero(); d + 1]; d + 1];
                s[0][0] = BigInt::one();
                for n in 1..=d {
                    for k in 1..=n {
                        s[n][k] = &s[n - 1][k - 1] + BigInt::from(k) * &s[n - 1][k];
                    }
                }
                let mut out = vec![BigRational::zero(); d];
                for (n, a) in self.coeffs.iter().enumerate() {
                    for (k, o) in out.iter_mut().enumerate().take(n + 1) {
                        *o += a * BigRational::from_integer(s[n][k].clone());
                    }
                }
                out
            }
        }
    }

    pub fn to_basis(&self, target: Basis) -> PolyCoeffs {
        if target == self.basis {
            return self.clone();
        }
        let ff = self.to_falling();
        let out = match target {
            Basis::FallingFactorial => ff,
            Basis::Mahler => ff
                .iter()
                .enumerate()
                .map(|(i, c)| c * BigRational::from_integer(factorial(i)))
                .collect(),
            Basis::Monomial => {
                // x^(k) = sum_j s(k, j) x^j, signed
                let d = ff.len();
                let mut s = vec![vec![BigInt::zero(); d + 1]; d + 1];
                s[0][0] = BigInt::one();
                for k in 1..=d {
                    for j in 1..=k {
                        s[k][j] = &s[k - 1][j - 1] - BigInt::from(k - 1) * &s[k - 1][j];
                    }
                }
                let mut out = vec![BigRational::zero(); d];
                for (k, c) in ff.iter().enumerate() {
                    for (j, o) in out.iter_mut().enumerate().take(k + 1) {
                        *o += c * BigRational::from_integer(s[k][j].clone());
                    }
                }
                out
            }
        };
        PolyCoeffs::new(target, out)
    }

    /// The polynomial as an expression; odd denominators become div1p.
    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let term_basis = match (self.basis, i) {
                (_, 0) => None,
                (Basis::Monomial, 1) | (Basis::FallingFactorial, 1) | (Basis::Mahler, 1) => Some(x()),
                (Basis::Monomial, _) => Some((1..i).fold(x(), |e, _| x().mul(e))),
                (Basis::FallingFactorial, _) => Some(Expr::Ff(Box::new(x()), i as u64)),
                (Basis::Mahler, _) => Some(Expr::Binom(Box::new(x()), i as u64)),
            };
            let num = Expr::Const(a.numer().abs().to_biguint().expect("abs"));
            let den = a.denom().to_biguint().expect("positive denominator");
            let scale = if den == num_bigint::BigUint::one() {
                num
            } else {
                Expr::Div1p(Box::new(num), Box::new(Expr::Const(den >> 1u32)))
            };
            let term = match term_basis {
                None => scale,
                Some(b) if a.abs().is_one() => b,
                Some(b) => scale.mul(b),
            };
            acc = Some(match (acc, a.is_negative()) {
                (None, false) => term,
                (None, true) => Expr::Neg(Box::new(term)),
                (Some(e), false) => e.add(term),
                (Some(e), true) => e.sub(term),
            });
        }
        acc.unwrap_or_else(|| c(0))
    }
}

fn monomial_ints(cs: &PolyCoeffs, strategy: &'static str) -> Result<Vec<BigInt>, VerifyError> {
    if cs.basis != Basis::Monomial || !cs.is_integral() {
        return Err(VerifyError::Hypothesis { strategy, reason: "requires integer monomial coefficients".into() });
    }
    Ok(cs.coeffs.iter().map(|c| c.numer().clone()).collect())
}

fn sum_from(a: &[BigInt], start: usize) -> BigInt {
    a.iter().skip(start).step_by(2).sum()
}

fn m4(v: &BigInt) -> i64 {
    v.mod_floor(&BigInt::from(4)).to_i64().unwrap()
}

fn coeff_verdict(property: Property, ok: bool, criterion: &str, bits: u32, detail: String) -> Verdict {
    Verdict {
        property,
        result: if ok { Outcome::Yes } else { Outcome::No },
        criterion: criterion.to_string(),
        modulus_bits: bits,
        witness: Witness::Coefficients { detail },
    }
}

/// Bijectivity of an integer polynomial mod every 2^n.
pub fn rivest_check(cs: &PolyCoeffs) -> Result<Verdict, VerifyError> {
    let a = monomial_ints(cs, "rivest")?;
    let z = BigInt::zero();
    let a1 = a.get(1).unwrap_or(&z);
    let even = sum_from(&a, 2);
    let odd = sum_from(&a, 3);
    let mut fails = Vec::new();
    if a1.is_even() {
        fails.push("a1 even");
    }
    if even.is_odd() {
        fails.push("a2+a4+... odd");
    }
    if odd.is_odd() {
        fails.push("a3+a5+... odd");
    }
    let detail = if fails.is_empty() { "a1 odd, a2+a4+... even, a3+a5+... even".into() } else { fails.join("; ") };
    Ok(coeff_verdict(Property::Bijective, fails.is_empty(), "Rivest permutation polynomial criterion", 0, detail))
}

/// Single-cycle property of an integer polynomial mod every 2^n.
pub fn larin_check(cs: &PolyCoeffs) -> Result<Verdict, VerifyError> {
    let a = monomial_ints(cs, "larin")?;
    let z = BigInt::zero();
    let g = |i: usize| a.get(i).unwrap_or(&z).clone();
    let mut fails = Vec::new();
    if m4(&sum_from(&a, 3)) != m4(&(BigInt::from(2) * g(2))) {
        fails.push("a3+a5+... != 2a2 mod 4");
    }
    if m4(&sum_from(&a, 4)) != m4(&(g(1) + g(2) - 1)) {
        fails.push("a4+a6+... != a1+a2-1 mod 4");
    }
    if g(1).is_even() {
        fails.push("a1 even");
    }
    if g(0).is_even() {
        fails.push("a0 even");
    }
    let detail = if fails.is_empty() { "all four congruences hold".into() } else { fails.join("; ") };
    Ok(coeff_verdict(Property::Transitive, fails.is_empty(), "Larin single-cycle criterion", 0, detail))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientVerdicts {
    pub compatible: bool,
    pub measure_preserving: Verdict,
    pub ergodic: Verdict,
}

fn require_two_adic(cs: &PolyCoeffs, basis: Basis, strategy: &'static str) -> Result<(), VerifyError> {
    if cs.basis != basis {
        return Err(VerifyError::Hypothesis { strategy, reason: format!("expects {basis:?} coefficients") });
    }
    if !cs.is_two_adic() {
        return Err(VerifyError::Hypothesis { strategy, reason: "coefficients must have odd denominators".into() });
    }
    Ok(())
}

/// Congruences on c_0..c_3 in the falling-factorial basis.
pub fn ff_check(cs: &PolyCoeffs) -> Result<CoefficientVerdicts, VerifyError> {
    require_two_adic(cs, Basis::FallingFactorial, "ff_basis")?;
    let r = |i: usize| cs.coeff_mod(i, 2).expect("two-adic");
    let (c0, c1, c2, c3) = (r(0), r(1), r(2), r(3));
    let detail = format!("c0..c3 mod 4 = {c0}, {c1}, {c2}, {c3}");
    let mp = c1 % 2 == 1 && c2 % 2 == 0 && c3 % 2 == 0;
    let erg = c0 % 2 == 1 && c1 == 1 && c2 % 2 == 0 && c3 == 0;
    Ok(CoefficientVerdicts {
        compatible: true,
        measure_preserving: coeff_verdict(Property::MeasurePreserving, mp, "falling-factorial congruences: c1 odd, c2, c3 even", 0, detail.clone()),
        ergodic: coeff_verdict(Property::Ergodic, erg, "falling-factorial congruences: c0 odd, c1 = 1 mod 4, c2 even, c3 = 0 mod 4", 0, detail),
    })
}

fn floor_log2(i: usize) -> i64 {
    (usize::BITS - 1 - i.leading_zeros()) as i64
}

/// Valuation bounds on the coefficients of the interpolation series in C(x, i).
pub fn mahler_check(cs: &PolyCoeffs) -> Result<CoefficientVerdicts, VerifyError> {
    require_two_adic(cs, Basis::Mahler, "mahler")?;
    let d = cs.coeffs.len();
    let v = |i: usize| cs.valuation(i).unwrap_or(i64::MAX);
    let compatible = (1..d).all(|i| v(i) >= floor_log2(i));
    let first_bad = |bound: &dyn Fn(usize) -> i64| (2..d).find(|&i| v(i) < bound(i));

    let mut mp_fail = Vec::new();
    if !compatible {
        mp_fail.push("not compatible".to_string());
    }
    if cs.coeff_mod(1, 1) != Some(1) {
        mp_fail.push("a1 even".into());
    }
    if let Some(i) = first_bad(&|i| floor_log2(i) + 1) {
        mp_fail.push(format!("v2(a{i}) < floor(log2 {i}) + 1"));
    }
    let mut erg_fail = Vec::new();
    if !compatible {
        erg_fail.push("not compatible".to_string());
    }
    if cs.coeff_mod(0, 1) != Some(1) {
        erg_fail.push("a0 even".into());
    }
    if cs.coeff_mod(1, 2) != Some(1) {
        erg_fail.push("a1 != 1 mod 4".into());
    }
    if let Some(i) = first_bad(&|i| floor_log2(i + 1) + 1) {
        erg_fail.push(format!("v2(a{i}) < floor(log2 {}) + 1", i + 1));
    }
    let detail = |f: &[String]| if f.is_empty() { "all valuation bounds hold".to_string() } else { f.join("; ") };
    Ok(CoefficientVerdicts {
        compatible,
        measure_preserving: coeff_verdict(
            Property::MeasurePreserving,
            mp_fail.is_empty(),
            "interpolation series: a1 odd, v2(a_i) >= floor(log2 i) + 1",
            0,
            detail(&mp_fail),
        ),
        ergodic: coeff_verdict(
            Property::Ergodic,
            erg_fail.is_empty(),
            "interpolation series: a0 odd, a1 = 1 mod 4, v2(a_i) >= floor(log2(i+1)) + 1",
            0,
            detail(&erg_fail),
        ),
    })
}
