use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use super::VerifyError;
use crate::words::wt2;

pub const COUNTING_CAP: u32 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counting {
    pub n: u32,
    /// log2 of the number of compatible maps transitive mod 2^n: 2^n - n - 1.
    #[serde(serialize_with = "as_decimal")]
    pub log2_all_transitive: BigUint,
    pub rho: u64,
    /// log2 of the number of transitive polynomial maps mod 2^n.
    pub eta: u64,
}

fn as_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

/// Largest k with k - wt2(k) < n, by the recursion on n = 2^k + t.
pub fn rho(n: u64) -> u64 {
    assert!(n >= 1);
    let k = 63 - n.leading_zeros();
    let p = 1u64 << k;
    let t = n - p;
    if t == p - 1 {
        n
    } else {
        p + rho(t + 1)
    }
}

pub fn eta(n: u32) -> u64 {
    match n {
        0 => 0,
        1..=3 => (1u64 << n) - n as u64 - 1,
        _ => {
            let n = n as u64;
            let s: u64 = (0..=rho(n)).map(|i| n + wt2(i) as u64 - i).sum();
            s - 6
        }
    }
}

pub fn counting(n: u32) -> Result<Counting, VerifyError> {
    if n == 0 || n > COUNTING_CAP {
        return Err(VerifyError::Hypothesis { strategy: "counting", reason: format!("n must be in 1..={COUNTING_CAP}") });
    }
    let all = (BigUint::one() << n as usize) - BigUint::from(n) - BigUint::one();
    Ok(Counting { n, log2_all_transitive: all, rho: rho(n as u64), eta: eta(n) })
}

/// Number of single-cycle triangular maps mod 2^n, by running through every choice
/// of the functions phi_i.
pub fn count_transitive_exhaustive(n: u32) -> u64 {
    assert!((1..=4).contains(&n), "exhaustive count only for n <= 4");
    let size = 1usize << n;
    let free_bits = size - 1;
    let mut count = 0;
    for choice in 0u64..1u64 << free_bits {
        // bits [2^i - 1, 2^{i+1} - 1) of `choice` hold the truth table of phi_i
        let image = |x: usize| -> usize {
            let mut y = x;
            for i in 0..n as usize {
                let low = x & ((1 << i) - 1);
                if choice >> ((1 << i) - 1 + low) & 1 == 1 {
                    y ^= 1 << i;
                }
            }
            y
        };
        let mut x = 0;
        let mut len = 0;
        loop {
            x = image(x);
            len += 1;
            if x == 0 {
                break;
            }
        }
        if len == size {
            count += 1;
        }
    }
    count
}
