//! Fixed-width 2-adic words and LSB-first bit sequences.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("width {width} is not {s} blocks of {t} bits")]
    BlockShape { width: u32, s: u32, t: u32 },
    #[error("denominator {0} is even")]
    EvenDenominator(BigInt),
    #[error("binary operation `{0}` needs a second operand")]
    MissingOperand(&'static str),
    #[error("bad hex literal: {0}")]
    BadHex(String),
    #[error("bad bit string: {0}")]
    BadBits(String),
}

/// `2^n - 1` as a big integer.
pub fn mask_big(n: u32) -> BigUint {
    (BigUint::one() << n as usize) - BigUint::one()
}

/// An n-bit residue modulo `2^width`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Word {
    value: BigUint,
    width: u32,
}

impl Word {
    pub fn new(value: impl Into<BigUint>, width: u32) -> Self {
        assert!(width >= 1, "word width must be positive");
        let v: BigUint = value.into();
        Word { value: v & mask_big(width), width }
    }

    pub fn from_u64(value: u64, width: u32) -> Self {
        Word::new(BigUint::from(value), width)
    }

    /// Reduce a signed integer mod 2^width.
    pub fn from_bigint(value: &BigInt, width: u32) -> Self {
        let m = BigInt::one() << width as usize;
        let r = value.mod_floor(&m);
        Word::new(r.to_biguint().expect("nonnegative after mod_floor"), width)
    }

    pub fn zero(width: u32) -> Self {
        Word::new(BigUint::zero(), width)
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.value.to_u64()
    }

    pub fn bit(&self, j: u32) -> bool {
        self.value.bit(j as u64)
    }

    pub fn resize(&self, width: u32) -> Word {
        Word::new(self.value.clone(), width)
    }

    /// Lowercase hex, most significant digit first, padded to ceil(width/4) digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4) as usize;
        format!("{:0>digits$}", self.value.to_str_radix(16))
    }

    pub fn from_hex(s: &str, width: u32) -> Result<Word, WordError> {
        let t = s.trim().trim_start_matches("0x");
        let v = if t.is_empty() {
            BigUint::zero()
        } else {
            BigUint::parse_bytes(t.as_bytes(), 16).ok_or_else(|| WordError::BadHex(s.to_string()))?
        };
        if v.bits() > width as u64 {
            return Err(WordError::BadHex(format!("{s} does not fit in {width} bits")));
        }
        Ok(Word::new(v, width))
    }

    /// Binary form, least significant bit first, length = width.
    pub fn to_bits(&self) -> String {
        (0..self.width).map(|j| if self.bit(j) { '1' } else { '0' }).collect()
    }

    pub fn from_bits(s: &str) -> Result<Word, WordError> {
        let seq: BitSeq = s.parse()?;
        if seq.is_empty() {
            return Err(WordError::ZeroWidth);
        }
        Ok(Word::new(seq.to_biguint(), seq.len() as u32))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitOp {
    Xor,
    And,
    Or,
    Neg,
}

impl BitOp {
    fn name(self) -> &'static str {
        match self {
            BitOp::Xor => "xor",
            BitOp::And => "and",
            BitOp::Or => "or",
            BitOp::Neg => "neg",
        }
    }
}

pub fn bitop(kind: BitOp, u: &Word, v: Option<&Word>) -> Result<Word, WordError> {
    if kind == BitOp::Neg {
        return Ok(Word::new(&u.value ^ mask_big(u.width), u.width));
    }
    let v = v.ok_or(WordError::MissingOperand(kind.name()))?;
    if u.width != v.width {
        return Err(WordError::WidthMismatch(u.width, v.width));
    }
    let r = match kind {
        BitOp::Xor => &u.value ^ &v.value,
        BitOp::And => &u.value & &v.value,
        BitOp::Or => &u.value | &v.value,
        BitOp::Neg => unreachable!(),
    };
    Ok(Word::new(r, u.width))
}

/// The j-th base-2^m digit of x.
pub fn delta(j: u32, m: u32, x: &Word) -> Word {
    let shift = (m as usize) * (j as usize);
    Word::new((&x.value >> shift) & mask_big(m), m.max(1))
}

/// Write the s base-2^t digits of x in reverse order.
pub fn bit_reverse(s: u32, t: u32, x: &Word) -> Result<Word, WordError> {
    if s == 0 || t == 0 || s.checked_mul(t) != Some(x.width) {
        return Err(WordError::BlockShape { width: x.width, s, t });
    }
    let mut out = BigUint::zero();
    for j in 0..s {
        let d = delta(j, t, x).value;
        out |= d << ((t * (s - 1 - j)) as usize);
    }
    Ok(Word::new(out, x.width))
}

/// Reverse the low `n` bits of a machine word.
pub fn reverse_u64(x: u64, n: u32) -> u64 {
    if n == 0 {
        0
    } else {
        x.reverse_bits() >> (64 - n)
    }
}

pub fn wt2(i: u64) -> u32 {
    i.count_ones()
}

/// Returns `(ord2(i!), wt2(i))`.
pub fn ord2_wt2(i: u64) -> (u64, u32) {
    let w = wt2(i);
    (i - w as u64, w)
}

/// Exact C(r, i) mod 2^n, r the canonical representative of x.
pub fn binom_mod(x: &Word, i: u64, n: u32) -> Word {
    let r = &x.value;
    if BigUint::from(i) > *r {
        return Word::zero(n);
    }
    let modulus = BigUint::one() << n as usize;
    let mut num_odd = BigUint::one();
    let mut den_odd = BigUint::one();
    let mut val: u64 = 0;
    for t in 0..i {
        let f = r - BigUint::from(t);
        let tz = f.trailing_zeros().unwrap_or(0);
        val += tz;
        num_odd = (num_odd * (f >> tz as usize)) % &modulus;
        let d = t + 1;
        let dz = d.trailing_zeros();
        val -= dz as u64;
        den_odd = (den_odd * BigUint::from(d >> dz)) % &modulus;
    }
    if val >= n as u64 {
        return Word::zero(n);
    }
    let inv = inverse_odd_big(&den_odd, n);
    Word::new((num_odd * inv) << val as usize, n)
}

/// Inverse of an odd value mod 2^n by Newton-Hensel lifting.
pub fn inverse_odd_big(v: &BigUint, n: u32) -> BigUint {
    debug_assert!(v.bit(0));
    let m = mask_big(n);
    let two = BigUint::from(2u32);
    let mut y = BigUint::one();
    let mut prec = 1u32;
    while prec < n {
        // y <- y * (2 - v*y), doubling the correct low bits
        let t = (v * &y) & &m;
        let corr = (&two + (&m + BigUint::one()) - t) & &m;
        y = (y * corr) & &m;
        prec *= 2;
    }
    y & m
}

pub fn inverse_odd_u64(v: u64) -> u64 {
    debug_assert!(v & 1 == 1);
    let mut y: u64 = 1;
    for _ in 0..6 {
        y = y.wrapping_mul(2u64.wrapping_sub(v.wrapping_mul(y)));
    }
    y
}

/// First `len` 2-adic digits of u/v.
pub fn rational_to_bits(u: &BigInt, v: &BigInt, len: usize) -> Result<BitSeq, WordError> {
    if v.is_even() {
        return Err(WordError::EvenDenominator(v.clone()));
    }
    let mut bits = BitSeq::with_capacity(len);
    let mut r = u.clone();
    for _ in 0..len {
        let b = r.is_odd();
        bits.push(b);
        if b {
            r -= v;
        }
        r >>= 1usize;
    }
    Ok(bits)
}

/// The value of a 2-adic rational mod 2^n as a word.
pub fn rational_to_word(u: &BigInt, v: &BigInt, n: u32) -> Result<Word, WordError> {
    let bits = rational_to_bits(u, v, n as usize)?;
    Ok(Word::new(bits.to_biguint(), n))
}

pub fn v2_bigint(x: &BigInt) -> Option<u64> {
    if x.is_zero() {
        None
    } else {
        x.abs().to_biguint().and_then(|m| m.trailing_zeros())
    }
}

/// Packed bit sequence, position 0 first.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitSeq {
    words: Vec<u64>,
    len: usize,
}

impl BitSeq {
    pub fn new() -> Self {
        BitSeq::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        BitSeq { words: Vec::with_capacity(n.div_ceil(64)), len: 0 }
    }

    pub fn zeros(len: usize) -> Self {
        BitSeq { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        assert!(i < self.len);
        let w = &mut self.words[i / 64];
        if b {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    pub fn push(&mut self, b: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, b);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn raw_words(&self) -> &[u64] {
        &self.words
    }

    /// 64 bits starting at `start`, zero beyond the end.
    pub fn word_at(&self, start: usize) -> u64 {
        let (q, r) = (start / 64, start % 64);
        let lo = self.words.get(q).copied().unwrap_or(0);
        let v = if r == 0 {
            lo
        } else {
            let hi = self.words.get(q + 1).copied().unwrap_or(0);
            (lo >> r) | (hi << (64 - r))
        };
        let left = self.len.saturating_sub(start);
        if left >= 64 {
            v
        } else {
            v & ((1u64 << left) - 1)
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> BitSeq {
        assert!(start <= end && end <= self.len);
        let mut out = BitSeq::zeros(end - start);
        for (k, w) in out.words.iter_mut().enumerate() {
            *w = self.word_at(start + 64 * k);
        }
        let n = end - start;
        if n % 64 != 0 {
            if let Some(last) = out.words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
        out
    }

    pub fn concat(&self, other: &BitSeq) -> BitSeq {
        let mut out = self.clone();
        for b in other.iter() {
            out.push(b);
        }
        out
    }

    /// The integer Σ b_i 2^i.
    pub fn to_biguint(&self) -> BigUint {
        let mut bytes = Vec::with_capacity(self.words.len() * 8);
        for w in &self.words {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    pub fn from_biguint(v: &BigUint, len: usize) -> BitSeq {
        let mut out = BitSeq::zeros(len);
        for (k, d) in v.iter_u64_digits().enumerate() {
            if k < out.words.len() {
                out.words[k] = d;
            }
        }
        if len % 64 != 0 {
            if let Some(last) = out.words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        out
    }

    /// Pack into bytes, bit 0 in the low bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> BitSeq {
        let mut out = BitSeq::zeros(len);
        for i in 0..len {
            out.set(i, (bytes[i / 8] >> (i % 8)) & 1 == 1);
        }
        out
    }
}

impl FromIterator<bool> for BitSeq {
    fn from_iter<I: IntoIterator<Item = bool>>(it: I) -> Self {
        let mut s = BitSeq::new();
        for b in it {
            s.push(b);
        }
        s
    }
}

impl std::str::FromStr for BitSeq {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, WordError> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(WordError::BadBits(s.to_string())),
            })
            .collect()
    }
}

impl fmt::Display for BitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSeq({self})")
    }
}

impl Serialize for BitSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: u64, n: u32) -> Word {
        Word::from_u64(v, n)
    }

    #[test]
    fn bitops_small() {
        assert_eq!(bitop(BitOp::Xor, &w(1, 8), Some(&w(3, 8))).unwrap(), w(2, 8));
        assert_eq!(bitop(BitOp::And, &w(1, 8), Some(&w(3, 8))).unwrap(), w(1, 8));
        for u in 0..256 {
            assert_eq!(bitop(BitOp::Xor, &w(u, 8), Some(&w(0, 8))).unwrap(), w(u, 8));
        }
        assert!(bitop(BitOp::Xor, &w(1, 8), Some(&w(1, 4))).is_err());
    }

    #[test]
    fn identities_width8() {
        for u in 0u64..256 {
            for v in 0u64..256 {
                let x = u ^ v;
                assert_eq!(x, (u + v - 2 * (u & v)) % 256);
                let o = bitop(BitOp::Or, &w(u, 8), Some(&w(v, 8))).unwrap();
                assert_eq!(o.to_u64().unwrap(), u + v - (u & v));
            }
            let n = bitop(BitOp::Neg, &w(u, 8), None).unwrap().to_u64().unwrap();
            assert_eq!(n + u, 255);
        }
    }

    #[test]
    fn digits() {
        assert_eq!(delta(0, 1, &w(7, 8)).to_u64(), Some(1));
        assert_eq!(delta(1, 2, &w(7, 8)).to_u64(), Some(1));
        for j in 0..20 {
            assert_eq!(delta(j, 1, &w(0, 8)).to_u64(), Some(0));
        }
    }

    #[test]
    fn reversal() {
        assert_eq!(bit_reverse(4, 1, &w(7, 4)).unwrap().to_u64(), Some(14));
        assert_eq!(bit_reverse(2, 2, &w(7, 4)).unwrap().to_u64(), Some(13));
        for s in 1..=12u32 {
            for t in 1..=12 / s {
                let n = s * t;
                let mut seen = vec![false; 1 << n];
                for x in 0..(1u64 << n) {
                    let y = bit_reverse(s, t, &w(x, n)).unwrap();
                    assert_eq!(bit_reverse(s, t, &y).unwrap(), w(x, n));
                    seen[y.to_u64().unwrap() as usize] = true;
                    if t == 1 {
                        assert_eq!(y.to_u64().unwrap(), reverse_u64(x, n));
                    }
                }
                assert!(seen.iter().all(|&b| b));
            }
        }
        assert!(bit_reverse(3, 2, &w(1, 8)).is_err());
    }

    #[test]
    fn factorial_valuation() {
        assert_eq!(ord2_wt2(7), (4, 3));
        assert_eq!(ord2_wt2(0), (0, 0));
        // direct valuation of i! by summing v2 of each factor
        for k in 0..=20u32 {
            let i = 1u64 << k;
            let direct: u64 = (1..=i).map(|t| t.trailing_zeros() as u64).sum();
            assert_eq!(ord2_wt2(i).0, direct);
            assert_eq!(direct, i - 1);
        }
    }

    #[test]
    fn binomials() {
        for x in 0..64 {
            assert_eq!(binom_mod(&w(x, 8), 0, 8).to_u64(), Some(1));
        }
        assert_eq!(binom_mod(&w(3, 8), 2, 8).to_u64(), Some(3));
        // Lucas: C(x, 2^a+2^b) is odd iff bits a and b of x are set
        for b in 1..=4u32 {
            for a in 0..b {
                let i = (1u64 << a) + (1u64 << b);
                for x in 0..256u64 {
                    let c = binom_mod(&w(x, 8), i, 8);
                    let expect = ((x >> a) & 1) * ((x >> b) & 1);
                    assert_eq!(c.to_u64().unwrap() & 1, expect, "x={x} a={a} b={b}");
                }
            }
        }
        // against exact Pascal triangle
        let mut row: Vec<BigUint> = vec![BigUint::one()];
        for r in 1..=40u64 {
            let mut next = vec![BigUint::one(); r as usize + 1];
            for i in 1..r as usize {
                next[i] = &row[i - 1] + &row[i];
            }
            row = next;
            for i in 0..=r {
                let got = binom_mod(&w(r, 12), i, 12);
                assert_eq!(got.value(), &(&row[i as usize] % 4096u32));
            }
        }
    }

    #[test]
    fn two_adic_expansions() {
        let b = |u: i64, v: i64, l| rational_to_bits(&BigInt::from(u), &BigInt::from(v), l).unwrap().to_string();
        assert_eq!(b(1, 3, 8), "11010101");
        assert_eq!(b(-3, 1, 5), "10111");
        assert_eq!(b(3, 1, 5), "11000");
        assert!(rational_to_bits(&BigInt::from(1), &BigInt::from(2), 4).is_err());
    }

    #[test]
    fn inverses() {
        for v in (1..2000u64).step_by(2) {
            assert_eq!(v.wrapping_mul(inverse_odd_u64(v)), 1);
            let big = inverse_odd_big(&BigUint::from(v), 100);
            assert_eq!((big * v) & mask_big(100), BigUint::one());
        }
    }

    #[test]
    fn serialization() {
        let x = w(0xabc, 13);
        assert_eq!(x.to_hex(), "0abc");
        assert_eq!(Word::from_hex(&x.to_hex(), 13).unwrap(), x);
        assert_eq!(w(12, 4).to_bits(), "0011");
        assert_eq!(Word::from_bits("0011").unwrap(), w(12, 4));
        let s: BitSeq = "0011".parse().unwrap();
        assert_eq!(s.to_biguint(), BigUint::from(12u32));
        let big = Word::new(BigUint::one() << 4000usize, 4096);
        assert_eq!(Word::from_hex(&big.to_hex(), 4096).unwrap(), big);
        assert_eq!(Word::from_bits(&big.to_bits()).unwrap(), big);
    }

    #[test]
    fn bitseq_packing() {
        let s: BitSeq = (0..200).map(|i| i % 3 == 0).collect();
        assert_eq!(BitSeq::from_bytes(&s.to_bytes(), 200), s);
        assert_eq!(BitSeq::from_biguint(&s.to_biguint(), 200), s);
        let t = s.slice(5, 150);
        for i in 0..145 {
            assert_eq!(t.get(i), s.get(i + 5));
        }
    }
}
