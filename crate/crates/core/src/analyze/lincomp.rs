use serde::Serialize;

use crate::words::BitSeq;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearComplexity {
    #[serde(rename = "L")]
    pub l: usize,
    /// Connection polynomial c_0 = 1, c_1, ..., c_L.
    pub connection: BitSeq,
}

fn xor_shifted(dst: &mut Vec<u64>, src: &[u64], shift: usize) {
    let (ws, bs) = (shift / 64, shift % 64);
    let need = src.len() + ws + 1;
    if dst.len() < need {
        dst.resize(need, 0);
    }
    for (i, &w) in src.iter().enumerate() {
        dst[i + ws] ^= w << bs;
        if bs != 0 {
            dst[i + ws + 1] ^= w >> (64 - bs);
        }
    }
}

/// Parity of sum_{i=0}^{len} c_i s_{n-i}, with `rev` the sequence reversed.
fn discrepancy(c: &[u64], rev: &BitSeq, total: usize, n: usize) -> bool {
    let base = total - 1 - n;
    let mut acc = 0u32;
    for (t, &w) in c.iter().enumerate() {
        if w != 0 {
            acc ^= (w & rev.word_at(base + 64 * t)).count_ones() & 1;
        }
    }
    acc == 1
}

fn trim(c: &mut Vec<u64>, l: usize) {
    c.truncate(l / 64 + 1);
    let extra = 64 - (l % 64) - 1;
    if let Some(last) = c.last_mut() {
        *last &= u64::MAX >> extra;
    }
}

/// Berlekamp-Massey over GF(2). The resulting recurrence is checked on the whole input.
pub fn linear_complexity(bits: &BitSeq) -> LinearComplexity {
    let total = bits.len();
    let rev: BitSeq = (0..total).rev().map(|i| bits.get(i)).collect();
    let mut c: Vec<u64> = vec![1];
    let mut b: Vec<u64> = vec![1];
    let mut l = 0usize;
    let mut m: isize = -1;
    for n in 0..total {
        if discrepancy(&c, &rev, total, n) {
            let t = c.clone();
            xor_shifted(&mut c, &b, (n as isize - m) as usize);
            if 2 * l <= n {
                l = n + 1 - l;
                m = n as isize;
                b = t;
            }
        }
    }
    trim(&mut c, l);
    assert!((l..total).all(|n| !discrepancy(&c, &rev, total, n)), "recurrence check failed");
    let connection = (0..=l).map(|i| c.get(i / 64).is_some_and(|w| (w >> (i % 64)) & 1 == 1)).collect();
    LinearComplexity { l, connection }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook Berlekamp-Massey on unpacked bits.
    fn naive(s: &[bool]) -> usize {
        let n = s.len();
        let (mut c, mut b) = (vec![false; n + 1], vec![false; n + 1]);
        c[0] = true;
        b[0] = true;
        let (mut l, mut m) = (0usize, -1isize);
        for i in 0..n {
            let mut d = s[i];
            for j in 1..=l {
                d ^= c[j] & s[i - j];
            }
            if d {
                let t = c.clone();
                let shift = (i as isize - m) as usize;
                for j in 0..=n - shift {
                    c[j + shift] ^= b[j];
                }
                if 2 * l <= i {
                    l = i + 1 - l;
                    m = i as isize;
                    b = t;
                }
            }
        }
        l
    }

    #[test]
    fn small_cases() {
        let ones: BitSeq = "11111111".parse().unwrap();
        assert_eq!(linear_complexity(&ones).l, 1);
        let zeros = BitSeq::zeros(20);
        assert_eq!(linear_complexity(&zeros).l, 0);
        let alt: BitSeq = "0101010101".parse().unwrap();
        assert_eq!(linear_complexity(&alt).l, 2);
    }

    #[test]
    fn matches_textbook_version() {
        let mut state = 0x9e3779b97f4a7c15u64;
        for len in [1usize, 5, 63, 64, 65, 130, 300] {
            let bits: Vec<bool> = (0..len)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    state & 1 == 1
                })
                .collect();
            let packed: BitSeq = bits.iter().copied().collect();
            assert_eq!(linear_complexity(&packed).l, naive(&bits), "len {len}");
        }
    }

    #[test]
    fn runs_and_gaps() {
        for j in 0..8 {
            let half = 1usize << j;
            let bits: BitSeq = (0..8 * half).map(|i| (i / half) % 2 == 1).collect();
            assert_eq!(linear_complexity(&bits).l, half + 1);
        }
    }
}
