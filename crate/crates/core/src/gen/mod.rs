//! Generator specs and their runtime: congruential, truncated, coordinate and
//! counter-dependent wreath generators, plus the construction recipes.

mod anyhalfper;
mod law;
mod recipe;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::expr::{structural_compatibility, x, Compatibility, EvalError, Evaluator, Expr, ParseError};
use crate::verify::{validate_wreath_family, VerifyError, Witness};
use crate::words::{mask_big, Word};

pub use anyhalfper::{anyhalfper_sequence, anyhalfper_wreath, ANYHALFPER_WREATH_CAP};
pub use law::{CompiledLaw, Law, TableLaw};
pub use recipe::{degenerate_intro_family, make_recipe, ComposeVariant, JoinOp, Recipe};

/// Widths above this are validated only on their low bits.
pub const WREATH_VALIDATION_WIDTH: u32 = 20;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("law {index} is incompatible at node `{node}`")]
    Incompatible { index: usize, node: String },
    #[error("family size mismatch: m = {m} but {got} laws")]
    FamilySize { m: usize, got: usize },
    #[error("{kind} generator must have m = 1")]
    NotSingle { kind: &'static str },
    #[error("output {index}: {reason}")]
    Output { index: usize, reason: String },
    #[error("outputs: expected 1 or {m} descriptors, got {got}")]
    OutputCount { m: usize, got: usize },
    #[error("counter permutation: {0}")]
    Permutation(String),
    #[error("zero state width")]
    ZeroWidth,
    #[error("seed does not fit in {0} bits")]
    SeedRange(u32),
    #[error("WP-even condition: sum of c_j even (wreath condition (2))")]
    WreathSum,
    #[error("wreath condition ({condition}): {detail}")]
    Wreath { condition: u8, detail: String },
    #[error("recipe parameters: {0}")]
    Recipe(String),
    #[error("gamma_{index} out of range: needs fewer than {bits} bits")]
    GammaRange { index: usize, bits: u64 },
    #[error("step {step}: {source}")]
    Step { step: u64, source: EvalError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("spec: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Congruential,
    Truncated,
    Coordinate,
    Wreath,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputDescriptor {
    Identity,
    /// Drop the t low bits.
    Truncate(u32),
    Coordinate(u32),
    /// h(pi(x)) with pi the bit reversal over the state width.
    ReverseCompose(Expr),
    Expr(Expr),
    /// (x + pi_k(floor(x / 2^k))) mod 2^k over a 2k-bit state.
    Foldrev(u32),
}

impl OutputDescriptor {
    pub fn width(&self, n: u32) -> u32 {
        match self {
            OutputDescriptor::Identity | OutputDescriptor::ReverseCompose(_) | OutputDescriptor::Expr(_) => n,
            OutputDescriptor::Truncate(t) => n - t,
            OutputDescriptor::Coordinate(_) => 1,
            OutputDescriptor::Foldrev(k) => *k,
        }
    }

    fn check(&self, n: u32) -> Result<(), String> {
        match self {
            OutputDescriptor::Truncate(t) if *t >= n => Err(format!("truncate({t}) needs t < n = {n}")),
            OutputDescriptor::Coordinate(j) if *j >= n => Err(format!("coordinate({j}) needs j < n = {n}")),
            OutputDescriptor::Foldrev(k) if 2 * k != n => Err(format!("foldrev({k}) needs a {}-bit state", 2 * k)),
            _ => Ok(()),
        }
    }

    /// The output as an expression over the state.
    fn to_expr(&self) -> Expr {
        match self {
            OutputDescriptor::Identity => x(),
            OutputDescriptor::Truncate(t) => Expr::Shr(Box::new(x()), *t),
            OutputDescriptor::Coordinate(j) => Expr::Bit(Box::new(x()), *j),
            OutputDescriptor::ReverseCompose(h) => h.substitute_x(&Expr::Rev(Box::new(x()))),
            OutputDescriptor::Expr(f) => f.clone(),
            // the low k bits of rev over 2k bits are the reversed high half
            OutputDescriptor::Foldrev(k) => Expr::Mod2n(Box::new(x().add(Expr::Rev(Box::new(x())))), *k),
        }
    }
}

impl fmt::Display for OutputDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputDescriptor::Identity => write!(f, "identity"),
            OutputDescriptor::Truncate(t) => write!(f, "truncate({t})"),
            OutputDescriptor::Coordinate(j) => write!(f, "coordinate({j})"),
            OutputDescriptor::ReverseCompose(h) => write!(f, "reverse_compose({h})"),
            OutputDescriptor::Expr(e) => write!(f, "expr({e})"),
            OutputDescriptor::Foldrev(k) => write!(f, "foldrev({k})"),
        }
    }
}

impl FromStr for OutputDescriptor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "identity" {
            return Ok(OutputDescriptor::Identity);
        }
        let (name, arg) = s
            .split_once('(')
            .and_then(|(a, b)| b.strip_suffix(')').map(|b| (a.trim(), b.trim())))
            .ok_or_else(|| format!("unknown output descriptor `{s}`"))?;
        let num = || arg.parse::<u32>().map_err(|_| format!("`{name}` expects an integer, got `{arg}`"));
        let expr = || arg.parse::<Expr>().map_err(|e| format!("`{name}`: {e}"));
        Ok(match name {
            "truncate" => OutputDescriptor::Truncate(num()?),
            "coordinate" => OutputDescriptor::Coordinate(num()?),
            "foldrev" => OutputDescriptor::Foldrev(num()?),
            "reverse_compose" => OutputDescriptor::ReverseCompose(expr()?),
            "expr" => OutputDescriptor::Expr(expr()?),
            _ => return Err(format!("unknown output descriptor `{name}`")),
        })
    }
}

impl Serialize for OutputDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OutputDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// What a recipe promises about the run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guarantee {
    pub theorem: String,
    /// Exact period of the state sequence, when it fits in 64 bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    /// How often each residue mod 2^n occurs per period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<u64>,
}

mod hex_seed {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(16))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        let t = s.trim().trim_start_matches("0x");
        BigUint::parse_bytes(if t.is_empty() { b"0" } else { t.as_bytes() }, 16)
            .ok_or_else(|| serde::de::Error::custom(format!("bad hex seed `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: Kind,
    pub n: u32,
    #[serde(default = "one")]
    pub m: usize,
    pub fs: Vec<Law>,
    #[serde(default = "identity_out")]
    pub outs: Vec<OutputDescriptor>,
    #[serde(with = "hex_seed", default)]
    pub seed: BigUint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<Guarantee>,
}

fn one() -> usize {
    1
}

fn identity_out() -> Vec<OutputDescriptor> {
    vec![OutputDescriptor::Identity]
}

/// The counter indices idx_0 = 0, idx_{t+1} = perm[idx_t] over one cycle.
pub fn counter_order(m: usize, perm: Option<&[usize]>) -> Result<Vec<usize>, String> {
    let Some(p) = perm else {
        return Ok((0..m).collect());
    };
    if p.len() != m {
        return Err(format!("length {} but m = {m}", p.len()));
    }
    if let Some(&bad) = p.iter().find(|&&v| v >= m) {
        return Err(format!("entry {bad} out of range"));
    }
    let mut order = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    let mut i = 0;
    while !seen[i] {
        seen[i] = true;
        order.push(i);
        i = p[i];
    }
    if i != 0 || order.len() != m {
        return Err("not a single cycle through 0".into());
    }
    Ok(order)
}

impl GeneratorSpec {
    /// A single-law congruential generator with identity output.
    pub fn congruential(f: Expr, n: u32, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind: Kind::Congruential,
            n,
            m: 1,
            fs: vec![Law::Expr(f)],
            outs: identity_out(),
            seed: seed.into(),
            perm: None,
            guarantee: None,
        }
    }

    pub fn with_outputs(mut self, outs: Vec<OutputDescriptor>) -> Self {
        self.outs = outs;
        self
    }

    /// Structural checks only: widths, family size, compatibility, outputs.
    pub fn check_shape(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::ZeroWidth);
        }
        if self.seed.bits() > self.n as u64 {
            return Err(GenError::SeedRange(self.n));
        }
        if self.kind != Kind::Wreath && self.m != 1 {
            return Err(GenError::NotSingle { kind: kind_name(self.kind) });
        }
        if self.fs.len() != self.m || self.m == 0 {
            return Err(GenError::FamilySize { m: self.m, got: self.fs.len() });
        }
        for (index, law) in self.fs.iter().enumerate() {
            if let Law::Expr(e) = law {
                if let Compatibility::Incompatible(node) = structural_compatibility(e) {
                    return Err(GenError::Incompatible { index, node });
                }
            }
        }
        if self.outs.len() != 1 && self.outs.len() != self.m {
            return Err(GenError::OutputCount { m: self.m, got: self.outs.len() });
        }
        for (index, o) in self.outs.iter().enumerate() {
            o.check(self.n).map_err(|reason| GenError::Output { index, reason })?;
        }
        counter_order(self.m, self.perm.as_deref()).map_err(GenError::Permutation)?;
        Ok(())
    }

    /// Shape checks, plus the wreath conditions for wreath specs.
    pub fn validate(&self) -> Result<(), GenError> {
        self.check_shape()?;
        if self.kind == Kind::Wreath {
            let width = self.n.min(WREATH_VALIDATION_WIDTH);
            let v = validate_wreath_family(&self.fs, width, self.perm.as_deref())?;
            if let Witness::Wreath { condition: Some(condition), detail, .. } = v.witness {
                return Err(if condition == 2 { GenError::WreathSum } else { GenError::Wreath { condition, detail } });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn from_json(s: &str) -> Result<GeneratorSpec, GenError> {
        let spec: GeneratorSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn output_width(&self) -> u32 {
        self.outs[0].width(self.n)
    }
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Congruential => "congruential",
        Kind::Truncated => "truncated",
        Kind::Coordinate => "coordinate",
        Kind::Wreath => "wreath",
    }
}

pub fn load_spec(path: &std::path::Path) -> Result<GeneratorSpec, GenError> {
    let text = std::fs::read_to_string(path).map_err(|e| GenError::Recipe(format!("{}: {e}", path.display())))?;
    GeneratorSpec::from_json(&text)
}

pub fn save_spec(spec: &GeneratorSpec, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, spec.to_json() + "\n")
}

enum StateValue {
    Narrow(u64),
    Wide(BigUint),
}

pub struct GeneratorState {
    spec: GeneratorSpec,
    laws: Vec<CompiledLaw>,
    outs: Vec<Evaluator>,
    out_width: Vec<u32>,
    next_index: Vec<usize>,
    x: StateValue,
    idx: usize,
    step: u64,
}

impl GeneratorState {
    pub fn build(spec: &GeneratorSpec) -> Result<GeneratorState, GenError> {
        spec.validate()?;
        Self::build_unchecked(spec)
    }

    /// Build after shape checks only; the wreath conditions are not enforced.
    pub fn build_unchecked(spec: &GeneratorSpec) -> Result<GeneratorState, GenError> {
        spec.check_shape()?;
        let n = spec.n;
        let laws = spec.fs.iter().map(|l| l.compile(n)).collect::<Result<Vec<_>, _>>()?;
        let outs = spec.outs.iter().map(|o| Evaluator::new(&o.to_expr(), n)).collect::<Result<Vec<_>, _>>()?;
        let out_width = spec.outs.iter().map(|o| o.width(n)).collect();
        let order = counter_order(spec.m, spec.perm.as_deref()).map_err(GenError::Permutation)?;
        let mut next_index = vec![0; spec.m];
        for t in 0..spec.m {
            next_index[order[t]] = order[(t + 1) % spec.m];
        }
        let x = if n <= 64 { StateValue::Narrow(spec.seed.to_u64().unwrap_or(0)) } else { StateValue::Wide(spec.seed.clone()) };
        Ok(GeneratorState { spec: spec.clone(), laws, outs, out_width, next_index, x, idx: 0, step: 0 })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Family index used at the next step.
    pub fn counter_index(&self) -> usize {
        self.idx
    }

    pub fn state(&self) -> Word {
        match &self.x {
            StateValue::Narrow(v) => Word::from_u64(*v, self.spec.n),
            StateValue::Wide(v) => Word::new(v.clone(), self.spec.n),
        }
    }

    /// The state, when it fits a machine word.
    pub fn state_u64(&self) -> Option<u64> {
        match &self.x {
            StateValue::Narrow(v) => Some(*v),
            StateValue::Wide(_) => None,
        }
    }

    fn out_slot(&self) -> usize {
        if self.outs.len() == 1 {
            0
        } else {
            self.idx
        }
    }

    fn err(&self, source: EvalError) -> GenError {
        GenError::Step { step: self.step, source }
    }

    /// Apply the state law without computing an output.
    pub fn advance(&mut self) -> Result<(), GenError> {
        let law = &self.laws[self.idx];
        let i = self.idx as u64;
        self.x = match &self.x {
            StateValue::Narrow(v) => StateValue::Narrow(law.eval_u64(*v, i).map_err(|e| self.err(e))?),
            StateValue::Wide(v) => StateValue::Wide(law.eval_big(v, i).map_err(|e| self.err(e))?),
        };
        self.idx = self.next_index[self.idx];
        self.step += 1;
        Ok(())
    }

    /// Emit F_idx(x), then x <- f_idx(x).
    pub fn next(&mut self) -> Result<Word, GenError> {
        let slot = self.out_slot();
        let w = self.out_width[slot];
        let ev = &self.outs[slot];
        let i = self.idx as u64;
        let out = match &self.x {
            StateValue::Narrow(v) => Word::from_u64(ev.eval_u64(*v, i).map_err(|e| self.err(e))?, w),
            StateValue::Wide(v) => Word::new(ev.eval_big(v, i).map_err(|e| self.err(e))? & mask_big(w), w),
        };
        self.advance()?;
        Ok(out)
    }

    /// Like `next` for states of at most 64 bits.
    pub fn next_u64(&mut self) -> Result<u64, GenError> {
        match self.x {
            StateValue::Narrow(v) => {
                let slot = self.out_slot();
                let out = self.outs[slot].eval_u64(v, self.idx as u64).map_err(|e| self.err(e))?;
                self.advance()?;
                Ok(out)
            }
            StateValue::Wide(_) => Ok(self.next()?.to_u64().unwrap_or(0)),
        }
    }

    pub fn run(&mut self, len: usize) -> Result<Vec<Word>, GenError> {
        (0..len).map(|_| self.next()).collect()
    }

    pub fn run_u64(&mut self, len: usize) -> Result<Vec<u64>, GenError> {
        (0..len).map(|_| self.next_u64()).collect()
    }
}
