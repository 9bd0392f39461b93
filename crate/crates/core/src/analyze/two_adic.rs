use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use super::AnalyzeError;
use crate::words::BitSeq;

/// Default largest j for coordinate cross-checks (2^j-bit Fermat operands).
pub const FERMAT_CAP: u32 = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoAdic {
    /// u / v in lowest terms, v > 0, with 2-adic expansion equal to the sequence.
    #[serde(serialize_with = "decimal")]
    pub u: BigInt,
    #[serde(serialize_with = "decimal")]
    pub v: BigInt,
    /// log2 max(|u|, |v|)
    pub phi2: f64,
    /// The exact ceiling of phi2: the register size of the smallest FCSR.
    pub phi2_ceil: u64,
}

fn decimal<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

fn log2_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 64 {
        return (v.iter_u64_digits().next().unwrap_or(0) as f64).log2();
    }
    let top = v >> (bits - 64) as usize;
    (top.iter_u64_digits().next().unwrap() as f64).log2() + (bits - 64) as f64
}

/// ceil(log2 v) for v >= 1.
fn ceil_log2(v: &BigUint) -> u64 {
    let bits = v.bits();
    if (v - BigUint::one()).is_zero() {
        0
    } else if v.trailing_zeros() == Some(bits - 1) {
        bits - 1
    } else {
        bits
    }
}

fn finish(u: BigInt, v: BigInt) -> TwoAdic {
    let g = u.gcd(&v);
    let (u, v) = if g.is_zero() { (u, v) } else { (u / &g, v / &g) };
    let phi = u.magnitude().max(v.magnitude()).clone();
    TwoAdic { phi2: log2_big(&phi), phi2_ceil: ceil_log2(&phi), u, v }
}

/// The rational with 2-adic expansion equal to the purely periodic sequence with the
/// given period: -gamma / (2^P - 1).
pub fn two_adic(period: &BitSeq) -> Result<TwoAdic, AnalyzeError> {
    if period.is_empty() {
        return Err(AnalyzeError::EmptyPeriod);
    }
    let gamma = BigInt::from_biguint(Sign::Plus, period.to_biguint());
    let den = (BigInt::one() << period.len()) - 1;
    Ok(finish(-gamma, den))
}

/// Closed form for coordinate j: (gamma + 1) / (2^{2^j} + 1) - 1, where gamma is the
/// first half-period; reduced by a gcd with the Fermat number.
pub fn two_adic_coordinate(first_half: &BitSeq, j: u32) -> Result<TwoAdic, AnalyzeError> {
    if j > FERMAT_CAP {
        return Err(AnalyzeError::Cap(format!("j = {j} exceeds the Fermat cap {FERMAT_CAP}")));
    }
    if first_half.len() != 1usize << j {
        return Err(AnalyzeError::Length { want: 1usize << j, got: first_half.len() });
    }
    let gamma = BigInt::from_biguint(Sign::Plus, first_half.to_biguint());
    let fermat = (BigInt::one() << (1usize << j)) + 1;
    Ok(finish(gamma + 1 - &fermat, fermat))
}
