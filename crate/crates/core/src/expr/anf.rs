use thiserror::Error;

use super::{structural_compatibility, EvalError, Evaluator, Expr};
use crate::words::BitSeq;

pub const ANF_WIDTH_CAP: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnfError {
    #[error("width {0} exceeds the cap of {ANF_WIDTH_CAP}")]
    WidthCap(u32),
    #[error("expression is incompatible at node `{0}`")]
    Incompatible(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Row i: the Boolean function δ_i(f(x)) of χ_0..χ_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnfRow {
    pub truth: BitSeq,
    pub monomials: BitSeq,
}

impl AnfRow {
    /// Monomials as variable bitmasks.
    pub fn monomial_masks(&self) -> Vec<u32> {
        (0..self.monomials.len()).filter(|&s| self.monomials.get(s)).map(|s| s as u32).collect()
    }

    pub fn has_monomial(&self, mask: u32) -> bool {
        (mask as usize) < self.monomials.len() && self.monomials.get(mask as usize)
    }
}

#[derive(Clone, Debug)]
pub struct AnfTable {
    pub n: u32,
    rows: Vec<AnfRow>,
    triangular: bool,
}

fn mobius(truth: &BitSeq) -> BitSeq {
    let len = truth.len();
    let mut w: Vec<u64> = truth.raw_words().to_vec();
    const MASKS: [u64; 6] = [
        0x5555_5555_5555_5555,
        0x3333_3333_3333_3333,
        0x0f0f_0f0f_0f0f_0f0f,
        0x00ff_00ff_00ff_00ff,
        0x0000_ffff_0000_ffff,
        0x0000_0000_ffff_ffff,
    ];
    let mut s = 0;
    while (1usize << s) < len {
        if s < 6 {
            for word in w.iter_mut() {
                *word ^= (*word & MASKS[s]) << (1 << s);
            }
        } else {
            let stride = 1usize << (s - 6);
            for j in 0..w.len() {
                if j & stride != 0 {
                    w[j] ^= w[j - stride];
                }
            }
        }
        s += 1;
    }
    let mut bytes = Vec::with_capacity(w.len() * 8);
    for x in &w {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    BitSeq::from_bytes(&bytes, len)
}

impl AnfTable {
    /// Build from the values f(x), x < 2^n, of a map on n-bit words.
    pub fn from_values(values: &[u64], n: u32) -> Result<AnfTable, AnfError> {
        if n > ANF_WIDTH_CAP {
            return Err(AnfError::WidthCap(n));
        }
        assert_eq!(values.len(), 1usize << n);
        let mut rows = Vec::with_capacity(n as usize);
        let mut triangular = true;
        for i in 0..n {
            let size = 1usize << (i + 1);
            let truth: BitSeq = (0..size).map(|x| (values[x] >> i) & 1 == 1).collect();
            for (x, v) in values.iter().enumerate().skip(size) {
                if ((v >> i) & 1 == 1) != truth.get(x & (size - 1)) {
                    triangular = false;
                }
            }
            let monomials = mobius(&truth);
            rows.push(AnfRow { truth, monomials });
        }
        Ok(AnfTable { n, rows, triangular })
    }

    pub fn row(&self, i: u32) -> &AnfRow {
        &self.rows[i as usize]
    }

    pub fn rows(&self) -> &[AnfRow] {
        &self.rows
    }

    /// Whether each row depends on the low variables only, as for a compatible map.
    pub fn is_triangular(&self) -> bool {
        self.triangular
    }

    /// τ_i = χ_i + φ_i(χ_0..χ_{i-1}) for this row.
    pub fn row_is_linear_in_top(&self, i: u32) -> bool {
        let t = &self.rows[i as usize].truth;
        let half = 1usize << i;
        (0..half).all(|x| t.get(x) != t.get(x + half))
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.triangular && (0..self.n).all(|i| self.row_is_linear_in_top(i))
    }

    /// Weight of φ_i, when row i is linear in χ_i.
    pub fn phi_weight(&self, i: u32) -> Option<u64> {
        if !self.row_is_linear_in_top(i) {
            return None;
        }
        let t = &self.rows[i as usize].truth;
        Some((0..1usize << i).filter(|&x| t.get(x)).count() as u64)
    }

    /// The first row that breaks the odd-weight criterion, if any.
    pub fn first_non_ergodic_row(&self) -> Option<u32> {
        if !self.triangular {
            return Some(0);
        }
        for i in 0..self.n {
            match self.phi_weight(i) {
                None => return Some(i),
                Some(w) if w % 2 == 0 => return Some(i),
                _ => {}
            }
        }
        None
    }

    /// Rebuild δ_i(f(x)) for every i from the monomial sets.
    pub fn eval_from_monomials(&self, x: u64) -> u64 {
        let mut out = 0;
        for (i, row) in self.rows.iter().enumerate() {
            let vars = (x & ((1u64 << (i + 1)) - 1)) as u32;
            let bit = row.monomial_masks().into_iter().filter(|&s| s & vars == s).count() % 2;
            out |= (bit as u64) << i;
        }
        out
    }
}

pub fn anf(e: &Expr, n: u32) -> Result<AnfTable, AnfError> {
    if n > ANF_WIDTH_CAP {
        return Err(AnfError::WidthCap(n));
    }
    if let super::Compatibility::Incompatible(node) = structural_compatibility(e) {
        return Err(AnfError::Incompatible(node));
    }
    let ev = Evaluator::new(e, n)?;
    let values = (0..1u64 << n).map(|x| ev.eval_u64(x, 0)).collect::<Result<Vec<_>, _>>()?;
    AnfTable::from_values(&values, n)
}
