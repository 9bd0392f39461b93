//! Exact measurements on generator runs: periods, residue censuses, coordinate
//! sequences, linear and 2-adic complexity, k-chain censuses and Knuth's Q1.

mod lincomp;
mod two_adic;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::gen::{GenError, GeneratorSpec, GeneratorState};
use crate::words::{BitSeq, Word};

pub use lincomp::{linear_complexity, LinearComplexity};
pub use two_adic::{two_adic, two_adic_coordinate, TwoAdic, FERMAT_CAP};

/// Hard ceiling for the period search.
pub const PERIOD_CAP_MAX: u64 = 1 << 40;
/// Largest chain length for censuses (2^k counters).
pub const CHAIN_CAP: u32 = 24;
/// Berlekamp-Massey and the 2-adic reduction in `analyze` only run on streams this short.
pub const COMPLEXITY_BITS_CAP: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("empty period")]
    EmptyPeriod,
    #[error("period not found within {0} steps")]
    PeriodCap(u64),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("expected length {want}, got {got}")]
    Length { want: usize, got: usize },
    #[error("sequence too short: need {need}, got {got}")]
    Short { need: usize, got: usize },
    #[error("coordinate {j} out of range for width {width}")]
    Coordinate { j: u32, width: u32 },
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// The default search cap 2^{n+m+2}, clamped to 2^40.
pub fn default_period_cap(n: u32, m: usize) -> u64 {
    let e = (n as u64).saturating_add(m as u64).saturating_add(2);
    if e >= 40 {
        PERIOD_CAP_MAX
    } else {
        1 << e
    }
}

/// Smallest t > 0 after which the configuration (state, counter index) repeats.
/// The state is left advanced by t steps.
pub fn exact_period(state: &mut GeneratorState, cap: u64) -> Result<u64, AnalyzeError> {
    let idx0 = state.counter_index();
    if let Some(x0) = state.state_u64() {
        for t in 1..=cap {
            state.advance()?;
            if state.counter_index() == idx0 && state.state_u64() == Some(x0) {
                return Ok(t);
            }
        }
    } else {
        let x0 = state.state();
        for t in 1..=cap {
            state.advance()?;
            if state.counter_index() == idx0 && state.state() == x0 {
                return Ok(t);
            }
        }
    }
    Err(AnalyzeError::PeriodCap(cap))
}

/// Smallest p with s_i = s_{i+p} throughout the finite word (KMP failure function).
pub fn sequence_period<T: PartialEq>(seq: &[T]) -> usize {
    let n = seq.len();
    if n == 0 {
        return 0;
    }
    let mut fail = vec![0usize; n + 1];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && seq[i] != seq[k] {
            k = fail[k];
        }
        if seq[i] == seq[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    n - fail[n]
}

/// Period of the infinite periodic sequence with the given single period.
pub fn cyclic_period<T: PartialEq>(one_period: &[T]) -> usize {
    let n = one_period.len();
    let p = sequence_period(one_period);
    if p > 0 && n % p == 0 {
        p
    } else {
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Census {
    pub modulus_bits: u32,
    pub total: u64,
    pub min: u64,
    pub max: u64,
    /// Number of residues that occur.
    pub distinct: u64,
    /// Every residue occurs, all equally often.
    pub strict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<u64, u64>>,
}

/// Counts of v mod 2^k over the values. Residues that never occur count as zero for `min`.
pub fn residue_census(values: impl IntoIterator<Item = u64>, k: u32, keep_counts: bool) -> Result<Census, AnalyzeError> {
    if k > CHAIN_CAP {
        return Err(AnalyzeError::Cap(format!("modulus 2^{k} exceeds 2^{CHAIN_CAP}")));
    }
    let mask = (1u64 << k) - 1;
    let mut counts = vec![0u64; 1 << k];
    let mut total = 0;
    for v in values {
        counts[(v & mask) as usize] += 1;
        total += 1;
    }
    Ok(census_from(counts, k, total, keep_counts))
}

fn census_from(counts: Vec<u64>, k: u32, total: u64, keep: bool) -> Census {
    let min = counts.iter().copied().min().unwrap_or(0);
    let max = counts.iter().copied().max().unwrap_or(0);
    let distinct = counts.iter().filter(|&&c| c > 0).count() as u64;
    let map = keep.then(|| counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(r, &c)| (r as u64, c)).collect());
    Census { modulus_bits: k, total, min, max, distinct, strict: total > 0 && min == max, counts: map }
}

/// bit_{i+halflen} = 1 - bit_i for all i < halflen.
pub fn half_negation_check(bits: &BitSeq, halflen: usize) -> bool {
    if halflen == 0 || bits.len() < 2 * halflen {
        return false;
    }
    (0..halflen).step_by(64).all(|i| {
        let take = (halflen - i).min(64);
        let mask = if take == 64 { u64::MAX } else { (1 << take) - 1 };
        (bits.word_at(i) ^ bits.word_at(i + halflen)) & mask == mask
    })
}

pub fn coordinate_extract(words: &[Word], j: u32) -> Result<BitSeq, AnalyzeError> {
    if let Some(w) = words.first() {
        if j >= w.width() {
            return Err(AnalyzeError::Coordinate { j, width: w.width() });
        }
    }
    Ok(words.iter().map(|w| w.bit(j)).collect())
}

pub fn coordinate_extract_u64(values: &[u64], j: u32) -> BitSeq {
    values.iter().map(|v| j < 64 && (v >> j) & 1 == 1).collect()
}

/// The words written out bit by bit, low bit first.
pub fn binary_stream(values: &[u64], width: u32) -> BitSeq {
    let mut out = BitSeq::with_capacity(values.len() * width as usize);
    for v in values {
        for j in 0..width {
            out.push((v >> j) & 1 == 1);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainCensus {
    pub k: u32,
    pub length: usize,
    pub min: u64,
    pub max: u64,
    pub distinct: u64,
    /// Every k-chain occurs, all equally often.
    pub full: bool,
    /// Chain written as bits in order of occurrence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<String, u64>>,
}

fn chain_name(index: usize, k: u32) -> String {
    (0..k).map(|i| if (index >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

fn chain_counts(bits: &BitSeq, k: u32, starts: usize) -> Vec<u64> {
    let mask = (1u64 << k) - 1;
    let mut counts = vec![0u64; 1 << k];
    for i in 0..starts {
        counts[(bits.word_at(i) & mask) as usize] += 1;
    }
    counts
}

/// Overlapping k-chains of the bits read as a cycle. The chain b_0..b_{k-1} has index sum b_i 2^i.
pub fn ktuple_census(bits: &BitSeq, k: u32, keep_counts: bool) -> Result<ChainCensus, AnalyzeError> {
    if k == 0 || k > CHAIN_CAP {
        return Err(AnalyzeError::Cap(format!("chain length {k} outside 1..={CHAIN_CAP}")));
    }
    let n = bits.len();
    if n < 1 << k {
        return Err(AnalyzeError::Short { need: 1 << k, got: n });
    }
    let wrapped = bits.concat(&bits.slice(0, k as usize - 1));
    let counts = chain_counts(&wrapped, k, n);
    let min = counts.iter().copied().min().unwrap_or(0);
    let max = counts.iter().copied().max().unwrap_or(0);
    Ok(ChainCensus {
        k,
        length: n,
        min,
        max,
        distinct: counts.iter().filter(|&&c| c > 0).count() as u64,
        full: min == max,
        counts: keep_counts.then(|| counts.iter().enumerate().map(|(i, &c)| (chain_name(i, k), c)).collect()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Q1Level {
    pub k: u32,
    pub pass: bool,
    /// The chain with the largest deviation and its count.
    pub worst_chain: String,
    pub worst_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Q1 {
    pub length: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_chain: Option<String>,
    /// Every chain length that fails.
    pub failing: Vec<u32>,
    pub levels: Vec<Q1Level>,
}

/// Knuth's Q1 on a finite word: |nu(b)/N - 2^-k| <= N^-1/2 for all chains b of length
/// k <= log2 N, chains counted at the N - k + 1 linear positions.
pub fn q1_check(bits: &BitSeq) -> Result<Q1, AnalyzeError> {
    let n = bits.len();
    if n < 2 {
        return Err(AnalyzeError::Short { need: 2, got: n });
    }
    let kmax = (usize::BITS - 1 - n.leading_zeros()).min(CHAIN_CAP);
    let big_n = n as i128;
    let mut levels = Vec::new();
    for k in 1..=kmax {
        let counts = chain_counts(bits, k, n - k as usize + 1);
        // (nu 2^k - N)^2 <= 4^k N, exactly
        let dev = |c: u64| (c as i128 * (1i128 << k) - big_n).abs();
        let (worst, &worst_count) = counts.iter().enumerate().max_by_key(|(_, &c)| dev(c)).unwrap();
        let d = dev(worst_count);
        levels.push(Q1Level {
            k,
            pass: d * d <= (1i128 << (2 * k)) * big_n,
            worst_chain: chain_name(worst, k),
            worst_count,
        });
    }
    let first_fail = levels.iter().find(|l| !l.pass);
    Ok(Q1 {
        length: n,
        pass: first_fail.is_none(),
        failing_k: first_fail.map(|l| l.k),
        failing_chain: first_fail.map(|l| l.worst_chain.clone()),
        failing: levels.iter().filter(|l| !l.pass).map(|l| l.k).collect(),
        levels,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoordinateReport {
    pub j: u32,
    pub exact_period: usize,
    pub half_negation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_complexity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_adic: Option<TwoAdic>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AnalysisReport {
    pub exact_period: u64,
    /// Period of the output sequence, which may be shorter than the state period.
    pub output_period: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residue_census: Option<Census>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coordinate_reports: Vec<CoordinateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_complexity: Option<LinearComplexity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_adic: Option<TwoAdic>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ktuple: Vec<ChainCensus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1: Option<Q1>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    pub cap: Option<u64>,
    /// Census modulus; defaults to the output width, at most 20 bits.
    pub modulus_bits: Option<u32>,
    pub coordinates: Vec<u32>,
    pub ktuples: Vec<u32>,
    /// Linear and 2-adic complexity of the binary output stream.
    pub complexity: bool,
    pub q1: bool,
    pub full_counts: bool,
}

/// Run the generator over one exact period and measure the outputs.
pub fn analyze(spec: &GeneratorSpec, opts: &AnalyzeOptions) -> Result<AnalysisReport, AnalyzeError> {
    let width = spec.output_width();
    if width > 64 {
        return Err(AnalyzeError::Cap(format!("output width {width} exceeds 64 bits")));
    }
    let cap = opts.cap.unwrap_or_else(|| default_period_cap(spec.n, spec.m));
    let period = exact_period(&mut GeneratorState::build(spec)?, cap)?;
    let len = usize::try_from(period).map_err(|_| AnalyzeError::Cap("period exceeds memory".into()))?;
    let outs = GeneratorState::build(spec)?.run_u64(len)?;

    let mut report = AnalysisReport {
        exact_period: period,
        output_period: cyclic_period(&outs) as u64,
        ..Default::default()
    };
    let k = opts.modulus_bits.unwrap_or(width.min(20));
    report.residue_census = Some(residue_census(outs.iter().copied(), k, opts.full_counts)?);

    for &j in &opts.coordinates {
        if j >= width {
            return Err(AnalyzeError::Coordinate { j, width });
        }
        let bits = coordinate_extract_u64(&outs, j);
        let p = cyclic_period(&bits.iter().collect::<Vec<_>>());
        let one = bits.slice(0, p);
        let small = 2 * p <= COMPLEXITY_BITS_CAP;
        report.coordinate_reports.push(CoordinateReport {
            j,
            exact_period: p,
            half_negation: p % 2 == 0 && half_negation_check(&one, p / 2),
            linear_complexity: small.then(|| linear_complexity(&one.concat(&one)).l),
            two_adic: if small { Some(two_adic(&one)?) } else { None },
        });
    }

    let stream = binary_stream(&outs, width);
    for &t in &opts.ktuples {
        report.ktuple.push(ktuple_census(&stream, t, opts.full_counts)?);
    }
    if opts.complexity {
        if 2 * stream.len() > COMPLEXITY_BITS_CAP {
            return Err(AnalyzeError::Cap(format!("{} stream bits exceed the complexity cap", stream.len())));
        }
        report.linear_complexity = Some(linear_complexity(&stream.concat(&stream)));
        report.two_adic = Some(two_adic(&stream)?);
    }
    if opts.q1 {
        report.q1 = Some(q1_check(&stream)?);
    }
    Ok(report)
}
