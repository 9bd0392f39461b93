//! A toy stream cipher: an ergodic map built from sparse Boolean polynomials,
//! truncated to k output bits per step and XORed with the plaintext.
//! No security is claimed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::BitSeq;

/// The state width n + k + 1 must fit a machine word.
pub const CIPHER_WIDTH_CAP: u32 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CipherError {
    #[error("state width n + k + 1 = {0} outside 2..={CIPHER_WIDTH_CAP}")]
    Width(u32),
    #[error("psi_{index}: variable {var} out of range for n = {n}")]
    Variable { index: usize, var: u32, n: u32 },
    #[error("expected {k} polynomials, got {got}")]
    PsiCount { k: u32, got: usize },
    #[error("{count} monomials per polynomial exceeds the cap {cap}")]
    MonomialCap { count: usize, cap: usize },
    #[error("key {key:#x} does not fit in {n} bits")]
    Key { key: u64, n: u32 },
    #[error("state {x:#x} does not fit in {width} bits")]
    State { x: u64, width: u32 },
    #[error("test vector: {0}")]
    Vector(String),
    #[error("params: {0}")]
    Json(String),
}

/// The generator used to sample monomials: x <- x + (x^2 | 5) mod 2^64, output the
/// upper 32 bits.
#[derive(Clone, Debug)]
pub struct ParamRng(u64);

impl ParamRng {
    pub fn new(seed: u64) -> Self {
        ParamRng(seed)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0 = self.0.wrapping_add(self.0.wrapping_mul(self.0) | 5);
        (self.0 >> 32) as u32
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        (hi << 32) | self.next_u32() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherParams {
    pub n: u32,
    pub k: u32,
    /// psis[j] is a list of monomials, each a list of variable indices.
    pub psis: Vec<Vec<Vec<u32>>>,
    #[serde(skip)]
    masks: Vec<Vec<u64>>,
}

fn width_of(n: u32, k: u32) -> Result<u32, CipherError> {
    let w = n.saturating_add(k).saturating_add(1);
    if n == 0 || k == 0 || w > CIPHER_WIDTH_CAP {
        return Err(CipherError::Width(w));
    }
    Ok(w)
}

impl CipherParams {
    pub fn new(n: u32, k: u32, psis: Vec<Vec<Vec<u32>>>) -> Result<CipherParams, CipherError> {
        width_of(n, k)?;
        if psis.len() != k as usize {
            return Err(CipherError::PsiCount { k, got: psis.len() });
        }
        let mut masks = Vec::with_capacity(psis.len());
        for (index, psi) in psis.iter().enumerate() {
            let mut row = Vec::with_capacity(psi.len());
            for mono in psi {
                let mut mask = 0u64;
                for &var in mono {
                    if var >= n {
                        return Err(CipherError::Variable { index, var, n });
                    }
                    mask |= 1 << var;
                }
                row.push(mask);
            }
            masks.push(row);
        }
        Ok(CipherParams { n, k, psis, masks })
    }

    pub fn width(&self) -> u32 {
        self.n + self.k + 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<CipherParams, CipherError> {
        let raw: CipherParams = serde_json::from_str(s).map_err(|e| CipherError::Json(e.to_string()))?;
        CipherParams::new(raw.n, raw.k, raw.psis)
    }

    /// psi_j on the low n bits of x.
    pub fn psi(&self, j: usize, x: u64) -> bool {
        self.masks[j].iter().filter(|&&m| x & m == m).count() % 2 == 1
    }

    /// F(x) = sum psi_j(x) 2^j.
    pub fn big_f(&self, x: u64) -> u64 {
        (0..self.k as usize).map(|j| u64::from(self.psi(j, x)) << j).sum()
    }

    /// f_F(x) = (1 + x) xor 2^{n+1} F(x) over n + k + 1 bits.
    pub fn f_eval(&self, x: u64) -> Result<u64, CipherError> {
        let w = self.width();
        let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        if x & !mask != 0 {
            return Err(CipherError::State { x, width: w });
        }
        Ok((x.wrapping_add(1) ^ (self.big_f(x) << (self.n + 1))) & mask)
    }
}

pub const fn default_monomial_cap(n: u32) -> usize {
    4 * n as usize
}

pub fn gen_params(n: u32, k: u32, monomials: usize, seed: u64) -> Result<CipherParams, CipherError> {
    gen_params_with_cap(n, k, monomials, seed, default_monomial_cap(n))
}

/// k polynomials of `monomials` distinct monomials each. A monomial includes each
/// variable independently with probability 1/2.
pub fn gen_params_with_cap(n: u32, k: u32, monomials: usize, seed: u64, cap: usize) -> Result<CipherParams, CipherError> {
    width_of(n, k)?;
    let available = if n >= 63 { usize::MAX } else { 1usize << n };
    if monomials > cap || monomials > available {
        return Err(CipherError::MonomialCap { count: monomials, cap: cap.min(available) });
    }
    let mut rng = ParamRng::new(seed);
    let var_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let psis = (0..k)
        .map(|_| {
            let mut seen = BTreeSet::new();
            let mut psi = Vec::with_capacity(monomials);
            while psi.len() < monomials {
                let m = rng.next_u64() & var_mask;
                if seen.insert(m) {
                    psi.push((0..n).filter(|&v| (m >> v) & 1 == 1).collect());
                }
            }
            psi
        })
        .collect();
    CipherParams::new(n, k, psis)
}

/// Symbols y_0..y_{len-1} from key z: x_0 = z, x_{i+1} = f_F(x_i), y_i = floor(x_{i+1} / 2^{n+1}) mod 2^k.
pub fn keystream(params: &CipherParams, z: u64, len: usize) -> Result<Vec<u64>, CipherError> {
    let n = params.n;
    if n < 64 && z >> n != 0 {
        return Err(CipherError::Key { key: z, n });
    }
    let kmask = (1u64 << params.k) - 1;
    let mut x = z;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        x = params.f_eval(x)?;
        out.push((x >> (n + 1)) & kmask);
    }
    Ok(out)
}

/// k bits per symbol, low bit first.
pub fn keystream_bits(params: &CipherParams, z: u64, nbits: usize) -> Result<BitSeq, CipherError> {
    let k = params.k as usize;
    let syms = keystream(params, z, nbits.div_ceil(k))?;
    Ok((0..nbits).map(|i| (syms[i / k] >> (i % k)) & 1 == 1).collect())
}

pub fn encrypt(params: &CipherParams, z: u64, plaintext: &[u8]) -> Result<Vec<u8>, CipherError> {
    let ks = keystream_bits(params, z, plaintext.len() * 8)?.to_bytes();
    Ok(plaintext.iter().zip(ks).map(|(p, k)| p ^ k).collect())
}

pub fn decrypt(params: &CipherParams, z: u64, ciphertext: &[u8]) -> Result<Vec<u8>, CipherError> {
    encrypt(params, z, ciphertext)
}

/// Fraction of i < m where the keystream satisfies the idealized relation
/// y_i xor y_{i-1} = F(z + i) (with y_{-1} = 0), the high state bits accumulating F
/// along the counter z, z + 1, ... until the low n + 1 bits wrap.
pub fn kpa_trace(params: &CipherParams, z: u64, m: usize) -> Result<f64, CipherError> {
    if m == 0 {
        return Ok(1.0);
    }
    let ys = keystream(params, z, m)?;
    let nmask = if params.n == 64 { u64::MAX } else { (1u64 << params.n) - 1 };
    let mut prev = 0;
    let mut agree = 0usize;
    for (i, &y) in ys.iter().enumerate() {
        if y ^ prev == params.big_f(z.wrapping_add(i as u64) & nmask) {
            agree += 1;
        }
        prev = y;
    }
    Ok(agree as f64 / m as f64)
}

/// Header "n k z", then one hex symbol per line.
pub fn format_test_vector(params: &CipherParams, z: u64, symbols: &[u64]) -> String {
    let mut s = format!("{} {} {:x}\n", params.n, params.k, z);
    for y in symbols {
        s.push_str(&format!("{y:x}\n"));
    }
    s
}

pub fn parse_test_vector(text: &str) -> Result<(u32, u32, u64, Vec<u64>), CipherError> {
    let bad = |m: &str| CipherError::Vector(m.to_string());
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
    let [n, k, z] = head[..] else {
        return Err(bad("header must be `n k seed`"));
    };
    let n = n.parse().map_err(|_| bad("bad n"))?;
    let k = k.parse().map_err(|_| bad("bad k"))?;
    let z = u64::from_str_radix(z.trim_start_matches("0x"), 16).map_err(|_| bad("bad seed"))?;
    let syms = lines
        .map(|l| u64::from_str_radix(l, 16).map_err(|_| bad(&format!("bad symbol `{l}`"))))
        .collect::<Result<_, _>>()?;
    Ok((n, k, z, syms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::{cyclic_period, residue_census};
    use crate::expr::AnfTable;
    use crate::verify::transitive_table;

    #[test]
    fn params_shape_and_determinism() {
        let p = gen_params(8, 3, 16, 42).unwrap();
        assert_eq!(p.psis.len(), 3);
        assert!(p.psis.iter().all(|psi| psi.len() == 16));
        for psi in &p.psis {
            let set: BTreeSet<_> = psi.iter().collect();
            assert_eq!(set.len(), 16);
        }
        assert_eq!(p, gen_params(8, 3, 16, 42).unwrap());
        let differ = (0..100u64).filter(|&s| gen_params(8, 3, 16, s) != gen_params(8, 3, 16, s + 1000)).count();
        assert_eq!(differ, 100);
        assert!(matches!(gen_params(8, 3, 33, 1), Err(CipherError::MonomialCap { .. })));
        assert!(matches!(gen_params(2, 1, 5, 1), Err(CipherError::MonomialCap { .. })));
    }

    #[test]
    fn json_round_trip() {
        let p = gen_params(6, 2, 10, 7).unwrap();
        let q = CipherParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
        assert_eq!(keystream(&p, 5, 100).unwrap(), keystream(&q, 5, 100).unwrap());
        let bad = r#"{"n":4,"k":1,"psis":[[[0,4]]]}"#;
        assert!(matches!(CipherParams::from_json(bad), Err(CipherError::Variable { var: 4, .. })));
    }

    #[test]
    fn low_bit_and_zero_psis() {
        let p = gen_params(6, 2, 12, 3).unwrap();
        for x in 0..1u64 << p.width() {
            assert_eq!(p.f_eval(x).unwrap() & 1, 1 ^ (x & 1));
        }
        let zero = CipherParams::new(6, 2, vec![vec![], vec![]]).unwrap();
        for x in 0..1u64 << 9 {
            assert_eq!(zero.f_eval(x).unwrap(), (x + 1) % (1 << 9));
        }
        assert!(p.f_eval(1 << 9).is_err());
    }

    #[test]
    fn ergodic_for_random_params() {
        for seed in 0..5 {
            let p = gen_params(7, 3, 20, seed).unwrap();
            let w = p.width();
            let values: Vec<u64> = (0..1u64 << w).map(|x| p.f_eval(x).unwrap()).collect();
            for j in 1..=w {
                let m = (1u64 << j) - 1;
                let low: Vec<u64> = (0..=m).map(|x| values[x as usize] & m).collect();
                assert!(transitive_table(&low, j).is_yes(), "seed {seed} j {j}");
            }
            assert_eq!(AnfTable::from_values(&values, w).unwrap().first_non_ergodic_row(), None);
        }
    }

    #[test]
    fn keystream_properties() {
        let p = gen_params(6, 2, 10, 99).unwrap();
        let z = 37;
        let ys = keystream(&p, z, 1 << 10).unwrap();
        assert_eq!(ys[0], p.big_f(z));
        let one = &ys[..1 << 9];
        assert_eq!(&ys[1 << 9..], one);
        assert_eq!(cyclic_period(one), 1 << 9);
        let c = residue_census(one.iter().copied(), 2, false).unwrap();
        assert!(c.strict);
        assert_eq!(c.min, 1 << 7);
        assert!(keystream(&p, 64, 1).is_err());
    }

    #[test]
    fn encryption() {
        let p = gen_params(10, 3, 30, 5).unwrap();
        let mut rng = ParamRng::new(8);
        let msg: Vec<u8> = (0..1024).map(|_| rng.next_u32() as u8).collect();
        let ct = encrypt(&p, 123, &msg).unwrap();
        assert_ne!(ct, msg);
        assert_eq!(decrypt(&p, 123, &ct).unwrap(), msg);
        assert!(encrypt(&p, 123, &[]).unwrap().is_empty());
        let ks: Vec<u8> = ct.iter().zip(&msg).map(|(c, m)| c ^ m).collect();
        assert_eq!(ks, keystream_bits(&p, 123, 8 * 1024).unwrap().to_bytes());
    }

    #[test]
    fn known_plaintext_relation() {
        let p = gen_params(8, 3, 16, 1).unwrap();
        assert_eq!(kpa_trace(&p, 0, 64).unwrap(), 1.0);
        assert_eq!(kpa_trace(&p, 0, 0).unwrap(), 1.0);
        let p = gen_params(10, 3, 20, 2).unwrap();
        let mut rng = ParamRng::new(3);
        for _ in 0..100 {
            let z = rng.next_u64() % (1 << 10);
            assert!(kpa_trace(&p, z, 64).unwrap() >= 1.0 - 64.0 / 1024.0);
        }
    }

    #[test]
    fn test_vectors() {
        let p = gen_params(8, 3, 16, 1).unwrap();
        let ys = keystream(&p, 0x2a, 20).unwrap();
        let text = format_test_vector(&p, 0x2a, &ys);
        assert!(text.starts_with("8 3 2a\n"));
        assert_eq!(parse_test_vector(&text).unwrap(), (8, 3, 0x2a, ys));
        assert!(parse_test_vector("8 3\n1").is_err());
    }
}
