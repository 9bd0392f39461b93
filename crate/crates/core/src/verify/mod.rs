//! Bijectivity, transitivity, measure preservation and ergodicity of laws,
//! by brute force and by the finite criteria for the various law classes.

mod coeffs;
mod counting;
mod wreath;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    anf, empirical_derivative, is_arithmetic, structural_compatibility, to_rational_poly, AnfError,
    Compatibility, DerivativeError, EvalError, Evaluator, Expr,
};

pub use coeffs::{ff_check, larin_check, mahler_check, rivest_check, Basis, CoefficientVerdicts, PolyCoeffs};
pub use counting::{count_transitive_exhaustive, counting, eta, rho, Counting};
pub use wreath::{validate_wreath_family, wreath_condition_three_by_weights};

pub const BRUTE_WIDTH_CAP: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("hypothesis of strategy `{strategy}` violated: {reason}")]
    Hypothesis { strategy: &'static str, reason: String },
    #[error("width {0} exceeds the brute-force cap of {BRUTE_WIDTH_CAP}")]
    WidthCap(u32),
    #[error("family member {0} is not measure preserving")]
    NotMeasurePreserving(usize),
    #[error("family member {index} is incompatible at node `{node}`")]
    Incompatible { index: usize, node: String },
    #[error("empty family")]
    EmptyFamily,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Anf(#[from] AnfError),
    #[error(transparent)]
    Derivative(#[from] DerivativeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Bijective,
    Transitive,
    MeasurePreserving,
    Ergodic,
    EquiprobableOutput,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Yes,
    No,
    /// Only necessary conditions were checked, and they hold.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The full image list, for small moduli.
    Images { images: Vec<u64> },
    Permutation,
    Collision { a: u64, b: u64, image: u64 },
    Orbit { start: u64, length: u64 },
    /// Orbit of 0 never returns: the map is not a permutation.
    Tail { start: u64, steps: u64 },
    AnfRow { row: u32, weight: Option<u64> },
    AnfRows { rows: u32 },
    Coefficients { detail: String },
    Wreath { condition: Option<u8>, level: Option<u32>, detail: String },
    Counts { min: u64, max: u64, classes: u64 },
    /// A theorem reduced the question to the nested finite check.
    Reduction { theorem: String, check: Box<Verdict> },
    BruteRange { max_bits: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub property: Property,
    pub result: Outcome,
    pub criterion: String,
    pub modulus_bits: u32,
    pub witness: Witness,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        self.result == Outcome::Yes
    }
    pub fn is_no(&self) -> bool {
        self.result == Outcome::No
    }
    /// Yes, or passed every necessary check.
    pub fn is_positive(&self) -> bool {
        self.result != Outcome::No
    }
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdicts serialize")
    }

    fn reduction(property: Property, theorem: &str, check: Verdict) -> Verdict {
        Verdict {
            property,
            result: if check.is_yes() { Outcome::Yes } else { Outcome::No },
            criterion: theorem.to_string(),
            modulus_bits: check.modulus_bits,
            witness: Witness::Reduction { theorem: theorem.to_string(), check: Box::new(check) },
        }
    }
}

fn outcome(b: bool) -> Outcome {
    if b {
        Outcome::Yes
    } else {
        Outcome::No
    }
}

fn values_mod(e: &Expr, k: u32) -> Result<Vec<u64>, VerifyError> {
    if k > BRUTE_WIDTH_CAP {
        return Err(VerifyError::WidthCap(k));
    }
    let ev = Evaluator::new(e, k)?;
    (0..1u64 << k).map(|x| ev.eval_u64(x, 0).map_err(VerifyError::from)).collect()
}

/// Permutation test on a value table of size 2^k.
pub fn bijective_table(values: &[u64], k: u32) -> Verdict {
    let mut first: Vec<u64> = vec![u64::MAX; values.len()];
    for (x, &y) in values.iter().enumerate() {
        let slot = &mut first[y as usize];
        if *slot != u64::MAX {
            return Verdict {
                property: Property::Bijective,
                result: Outcome::No,
                criterion: "exhaustive image check".into(),
                modulus_bits: k,
                witness: Witness::Collision { a: *slot, b: x as u64, image: y },
            };
        }
        *slot = x as u64;
    }
    let witness = if k <= 6 { Witness::Images { images: values.to_vec() } } else { Witness::Permutation };
    Verdict { property: Property::Bijective, result: Outcome::Yes, criterion: "exhaustive image check".into(), modulus_bits: k, witness }
}

/// Single-cycle test: the orbit of 0 must have length 2^k.
pub fn transitive_table(values: &[u64], k: u32) -> Verdict {
    let size = values.len() as u64;
    let mut seen = vec![false; values.len()];
    let mut x = 0u64;
    let mut steps = 0u64;
    loop {
        seen[x as usize] = true;
        x = values[x as usize];
        steps += 1;
        if x == 0 {
            break;
        }
        if seen[x as usize] {
            return Verdict {
                property: Property::Transitive,
                result: Outcome::No,
                criterion: "orbit of 0".into(),
                modulus_bits: k,
                witness: Witness::Tail { start: 0, steps },
            };
        }
    }
    Verdict {
        property: Property::Transitive,
        result: outcome(steps == size),
        criterion: "orbit of 0".into(),
        modulus_bits: k,
        witness: Witness::Orbit { start: 0, length: steps },
    }
}

pub fn bijective_mod(e: &Expr, k: u32) -> Result<Verdict, VerifyError> {
    Ok(bijective_table(&values_mod(e, k)?, k))
}

pub fn transitive_mod(e: &Expr, k: u32) -> Result<Verdict, VerifyError> {
    Ok(transitive_table(&values_mod(e, k)?, k))
}

/// Every value mod 2^k of e over [0, 2^n) occurs equally often.
pub fn equiprobable_mod(e: &Expr, n: u32, k: u32) -> Result<Verdict, VerifyError> {
    let vals = values_mod(e, n)?;
    let mask = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut counts = vec![0u64; 1usize << k.min(n)];
    let mut overflow = false;
    for v in vals {
        match counts.get_mut((v & mask) as usize) {
            Some(c) => *c += 1,
            None => overflow = true,
        }
    }
    let min = if overflow || k > n { 0 } else { *counts.iter().min().unwrap() };
    let max = *counts.iter().max().unwrap();
    Ok(Verdict {
        property: Property::EquiprobableOutput,
        result: outcome(min == max && !overflow && k <= n),
        criterion: "exhaustive preimage count".into(),
        modulus_bits: n,
        witness: Witness::Counts { min, max, classes: counts.len() as u64 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Odd-weight criterion on the Boolean form, complete up to the width.
    Anf { width: u32 },
    /// Integer polynomial: transitive mod 8.
    PolyZ,
    Mahler,
    FfBasis,
    /// Composition of arithmetic operators: transitive mod 8.
    BpClass,
    /// Rational polynomial of degree d: transitive mod 2^{floor(log2 d)+3}.
    Qpol,
    /// Uniformly differentiable mod 4: transitive mod 2^{N_2+2}.
    Differentiable { bound: u32 },
    Brute { bound: u32 },
    /// Add/xor chains with constants: transitive mod 4. Cited result, proof not included.
    XorChain,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Anf { .. } => "anf",
            Strategy::PolyZ => "poly_Z",
            Strategy::Mahler => "mahler",
            Strategy::FfBasis => "ff_basis",
            Strategy::BpClass => "bp_class",
            Strategy::Qpol => "qpol",
            Strategy::Differentiable { .. } => "differentiable",
            Strategy::Brute { .. } => "brute",
            Strategy::XorChain => "xor_chain",
        }
    }

    /// Parse "anf", "anf:12", "brute:10", "differentiable:8", ...
    pub fn parse(s: &str) -> Option<Strategy> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b.parse::<u32>().ok()?)),
            None => (s, None),
        };
        Some(match name {
            "anf" => Strategy::Anf { width: arg.unwrap_or(12) },
            "poly_Z" | "poly_z" => Strategy::PolyZ,
            "mahler" => Strategy::Mahler,
            "ff_basis" => Strategy::FfBasis,
            "bp_class" => Strategy::BpClass,
            "qpol" => Strategy::Qpol,
            "differentiable" => Strategy::Differentiable { bound: arg.unwrap_or(10) },
            "brute" => Strategy::Brute { bound: arg.unwrap_or(12) },
            "xor_chain" | "kotomina" => Strategy::XorChain,
            _ => return None,
        })
    }
}

fn hyp(strategy: &'static str, reason: impl Into<String>) -> VerifyError {
    VerifyError::Hypothesis { strategy, reason: reason.into() }
}

fn require_single_variable(e: &Expr, s: &'static str) -> Result<(), VerifyError> {
    if e.depends_on_counter() {
        return Err(hyp(s, "law depends on the counter"));
    }
    Ok(())
}

fn integer_poly(e: &Expr, s: &'static str) -> Result<PolyCoeffs, VerifyError> {
    let p = to_rational_poly(e).ok_or_else(|| hyp(s, "not a polynomial"))?;
    if p.iter().any(|c| !c.is_integer()) {
        return Err(hyp(s, "coefficients are not integers"));
    }
    Ok(PolyCoeffs::new(Basis::Monomial, p))
}

fn odd_denominator_poly(e: &Expr, s: &'static str) -> Result<PolyCoeffs, VerifyError> {
    let p = to_rational_poly(e).ok_or_else(|| hyp(s, "not a polynomial over the rationals"))?;
    Ok(PolyCoeffs::new(Basis::Monomial, p))
}

fn floor_log2(d: u64) -> u32 {
    63 - d.max(1).leading_zeros()
}

fn is_xor_chain(e: &Expr) -> bool {
    match e {
        Expr::X => true,
        Expr::Add(a, b) | Expr::Xor(a, b) => {
            (is_xor_chain(a) && !b.depends_on_x() && b.literal().is_some())
                || (is_xor_chain(b) && !a.depends_on_x() && a.literal().is_some())
        }
        _ => false,
    }
}

fn anf_verdict(e: &Expr, width: u32, property: Property) -> Result<Verdict, VerifyError> {
    let t = anf(e, width)?;
    let bad = match property {
        Property::Ergodic => t.first_non_ergodic_row(),
        _ => {
            if !t.is_triangular() {
                Some(0)
            } else {
                (0..width).find(|&i| !t.row_is_linear_in_top(i))
            }
        }
    };
    let criterion = match property {
        Property::Ergodic => format!("odd weight of every phi_i, rows below {width}"),
        _ => format!("every row linear in its top variable, rows below {width}"),
    };
    Ok(Verdict {
        property,
        result: outcome(bad.is_none()),
        criterion,
        modulus_bits: width,
        witness: match bad {
            Some(row) => Witness::AnfRow { row, weight: t.phi_weight(row) },
            None => Witness::AnfRows { rows: width },
        },
    })
}

fn brute_range(e: &Expr, bound: u32, property: Property) -> Result<Verdict, VerifyError> {
    for k in 1..=bound {
        let v = match property {
            Property::Ergodic => transitive_mod(e, k)?,
            _ => bijective_mod(e, k)?,
        };
        if v.is_no() {
            return Ok(Verdict { property, result: Outcome::No, criterion: format!("brute force, fails mod 2^{k}"), modulus_bits: k, witness: v.witness });
        }
    }
    Ok(Verdict {
        property,
        result: Outcome::Inconclusive,
        criterion: format!("brute force for all k <= {bound} (necessary condition only)"),
        modulus_bits: bound,
        witness: Witness::BruteRange { max_bits: bound },
    })
}

pub fn ergodic(e: &Expr, strategy: Strategy) -> Result<Verdict, VerifyError> {
    let s = strategy.name();
    let p = Property::Ergodic;
    match strategy {
        Strategy::Anf { width } => {
            require_single_variable(e, s)?;
            anf_verdict(e, width, p)
        }
        Strategy::PolyZ => {
            integer_poly(e, s)?;
            Ok(Verdict::reduction(p, "integer polynomial: ergodic iff transitive mod 8", transitive_mod(e, 3)?))
        }
        Strategy::BpClass => {
            if !is_arithmetic(e) {
                return Err(hyp(s, "not a composition of arithmetic operators"));
            }
            Ok(Verdict::reduction(p, "arithmetic composition: ergodic iff transitive mod 8", transitive_mod(e, 3)?))
        }
        Strategy::Qpol => {
            let c = odd_denominator_poly(e, s)?;
            let d = c.degree();
            let k = floor_log2(d) + 3;
            let t = transitive_mod(e, k)?;
            let theorem = format!("rational polynomial of degree {d}: ergodic iff compatible and transitive mod 2^{k}");
            let compat = compatible_mod(e, k)?;
            if !compat {
                return Ok(Verdict {
                    property: p,
                    result: Outcome::No,
                    criterion: theorem,
                    modulus_bits: k,
                    witness: Witness::Coefficients { detail: format!("not compatible mod 2^{k}") },
                });
            }
            Ok(Verdict::reduction(p, &theorem, t))
        }
        Strategy::Mahler => {
            let c = odd_denominator_poly(e, s)?.to_basis(Basis::Mahler);
            Ok(mahler_check(&c)?.ergodic)
        }
        Strategy::FfBasis => {
            let c = odd_denominator_poly(e, s)?.to_basis(Basis::FallingFactorial);
            Ok(ff_check(&c)?.ergodic)
        }
        Strategy::Differentiable { bound } => {
            require_single_variable(e, s)?;
            if structural_compatibility(e) != Compatibility::Compatible {
                return Err(hyp(s, "not structurally compatible"));
            }
            let d = empirical_derivative(e, 2, bound).map_err(|err| hyp(s, err.to_string()))?;
            let k = d.n_k + 2;
            let theorem = format!("uniformly differentiable mod 4 with N_2 = {}: ergodic iff transitive mod 2^{k}", d.n_k);
            Ok(Verdict::reduction(p, &theorem, transitive_mod(e, k)?))
        }
        Strategy::Brute { bound } => brute_range(e, bound, p),
        Strategy::XorChain => {
            if !is_xor_chain(e) {
                return Err(hyp(s, "not an add/xor chain with constants"));
            }
            Ok(Verdict::reduction(p, "add/xor chain: ergodic iff transitive mod 4 (cited result, proof not included)", transitive_mod(e, 2)?))
        }
    }
}

pub fn measure_preserving(e: &Expr, strategy: Strategy) -> Result<Verdict, VerifyError> {
    let s = strategy.name();
    let p = Property::MeasurePreserving;
    match strategy {
        Strategy::Anf { width } => {
            require_single_variable(e, s)?;
            anf_verdict(e, width, p)
        }
        Strategy::PolyZ => {
            integer_poly(e, s)?;
            Ok(Verdict::reduction(p, "integer polynomial: measure preserving iff bijective mod 4", bijective_mod(e, 2)?))
        }
        Strategy::BpClass => {
            if !is_arithmetic(e) {
                return Err(hyp(s, "not a composition of arithmetic operators"));
            }
            Ok(Verdict::reduction(p, "arithmetic composition: measure preserving iff bijective mod 4", bijective_mod(e, 2)?))
        }
        Strategy::Qpol => {
            let c = odd_denominator_poly(e, s)?;
            let k = floor_log2(c.degree()) + 3;
            if !compatible_mod(e, k)? {
                return Ok(Verdict {
                    property: p,
                    result: Outcome::No,
                    criterion: "rational polynomial: compatible and bijective".into(),
                    modulus_bits: k,
                    witness: Witness::Coefficients { detail: format!("not compatible mod 2^{k}") },
                });
            }
            let theorem = format!("rational polynomial: measure preserving iff compatible and bijective mod 2^{k}");
            Ok(Verdict::reduction(p, &theorem, bijective_mod(e, k)?))
        }
        Strategy::Mahler => Ok(mahler_check(&odd_denominator_poly(e, s)?.to_basis(Basis::Mahler))?.measure_preserving),
        Strategy::FfBasis => Ok(ff_check(&odd_denominator_poly(e, s)?.to_basis(Basis::FallingFactorial))?.measure_preserving),
        Strategy::Brute { bound } => brute_range(e, bound, p),
        Strategy::Differentiable { .. } | Strategy::XorChain => Err(hyp(s, "strategy decides ergodicity only")),
    }
}

/// x = y mod 2^r implies f(x) = f(y) mod 2^r, for every r <= k.
pub fn compatible_mod(e: &Expr, k: u32) -> Result<bool, VerifyError> {
    let vals = values_mod(e, k)?;
    for r in 1..k {
        let m = (1u64 << r) - 1;
        for (x, v) in vals.iter().enumerate() {
            if (vals[x & m as usize] ^ v) & m != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn bijective_examples() {
        let v = bijective_mod(&p("x + 2*x*x"), 2).unwrap();
        assert!(v.is_yes());
        assert_eq!(v.witness, Witness::Images { images: vec![0, 3, 2, 1] });
        assert!(bijective_mod(&p("x + x*x"), 1).unwrap().is_no());
        for k in 1..10 {
            assert!(bijective_mod(&p("x"), k).unwrap().is_yes());
        }
    }

    #[test]
    fn transitive_examples() {
        for k in 1..12 {
            assert!(transitive_mod(&p("x+1"), k).unwrap().is_yes());
        }
        assert!(transitive_mod(&p("x + (x*x | 5)"), 5).unwrap().is_yes());
        assert!(transitive_mod(&p("x + 2*x*x"), 3).unwrap().is_no());
        assert!(matches!(transitive_mod(&p("x*x + 1"), 3).unwrap().witness, Witness::Tail { .. }));
        assert!(matches!(transitive_mod(&p("x*x"), 3).unwrap().witness, Witness::Orbit { length: 1, .. }));
    }

    #[test]
    fn strategies_on_reference_laws() {
        assert!(ergodic(&p("3*x + exp(3,x)"), Strategy::BpClass).unwrap().is_yes());
        assert!(ergodic(&p("inv(2*x-1) - x"), Strategy::BpClass).unwrap().is_yes());
        let a = ergodic(&p("x + 4*(x & 12)"), Strategy::Anf { width: 8 }).unwrap();
        let b = ergodic(&p("x + 4*(x & 12)"), Strategy::Brute { bound: 8 }).unwrap();
        assert_eq!(a.is_positive(), b.is_positive());
        assert!(ergodic(&p("x + (x*x | 5)"), Strategy::Differentiable { bound: 8 }).unwrap().is_yes());
        assert!(ergodic(&p("((x + 1) ^ 4) + 8"), Strategy::XorChain).unwrap().is_yes());
        assert!(ergodic(&p("1 + x + 2*binom(x, 2)"), Strategy::Qpol).unwrap().is_no());
        assert!(ergodic(&p("1 + x + 4*binom(x, 2)"), Strategy::Qpol).unwrap().is_yes());
        assert!(ergodic(&p("1 + x + 4*binom(x, 2)"), Strategy::Mahler).unwrap().is_yes());
        assert!(ergodic(&p("1 + x + 4*binom(x, 2)"), Strategy::FfBasis).unwrap().is_yes());
    }

    #[test]
    fn brute_never_says_yes() {
        let v = ergodic(&p("x + 1"), Strategy::Brute { bound: 6 }).unwrap();
        assert_eq!(v.result, Outcome::Inconclusive);
    }

    #[test]
    fn hypotheses_are_named() {
        let err = ergodic(&p("x ^ 1"), Strategy::PolyZ).unwrap_err();
        assert!(matches!(err, VerifyError::Hypothesis { strategy: "poly_Z", .. }));
        assert!(ergodic(&p("x + (x | 1)"), Strategy::BpClass).is_err());
        assert!(ergodic(&p("1 + x + binom(x, 2)"), Strategy::PolyZ).is_err());
        assert!(ergodic(&p("x * x + 1"), Strategy::XorChain).is_err());
    }

    #[test]
    fn equiprobable_truncation() {
        assert!(equiprobable_mod(&p("shr(x, 3)"), 8, 5).unwrap().is_yes());
        assert!(equiprobable_mod(&p("x * x"), 6, 6).unwrap().is_no());
    }

    #[test]
    fn verdict_json_shape() {
        let v = transitive_mod(&p("x+1"), 3).unwrap();
        let j: serde_json::Value = serde_json::from_str(&v.to_json()).unwrap();
        for key in ["property", "result", "criterion", "modulus_bits", "witness"] {
            assert!(j.get(key).is_some(), "{key}");
        }
        assert_eq!(j["result"], "yes");
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!(Strategy::parse("anf:8"), Some(Strategy::Anf { width: 8 }));
        assert_eq!(Strategy::parse("poly_Z"), Some(Strategy::PolyZ));
        assert_eq!(Strategy::parse("nope"), None);
    }
}
