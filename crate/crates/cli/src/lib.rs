//! Command-line front end. `dispatch` does all the work so tests can run it in-process.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::json;
use thiserror::Error;

use ergo::analyze::{self, AnalyzeOptions};
use ergo::cipher::{self, CipherParams};
use ergo::gen::{self, GeneratorState};
use ergo::verify::{self, Strategy, Verdict};
use ergo::{parse, BitSeq};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ergo::expr::ParseError),
    #[error(transparent)]
    Verify(#[from] verify::VerifyError),
    #[error(transparent)]
    Gen(#[from] gen::GenError),
    #[error(transparent)]
    Analyze(#[from] analyze::AnalyzeError),
    #[error(transparent)]
    Cipher(#[from] cipher::CipherError),
    #[error("write: {0}")]
    Output(#[from] std::io::Error),
}

#[derive(Parser, Debug)]
#[command(name = "ergo", version, about = "Ergodic 2-adic maps: verify laws, run generators, analyze sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a law for bijectivity, transitivity, ergodicity or measure preservation.
    Verify(VerifyArgs),
    /// Run a generator spec.
    Gen(GenArgs),
    /// Measure a generator or a bit sequence.
    Analyze(AnalyzeArgs),
    /// Counts of compatible single-cycle maps mod 2^n.
    Count(CountArgs),
    /// Sequences with prescribed coordinate halves.
    Construct(ConstructArgs),
    #[command(subcommand)]
    Cipher(CipherCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Check {
    Bijective,
    Transitive,
    Ergodic,
    Mp,
    Compatible,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    law: String,
    #[arg(long, value_enum)]
    check: Check,
    /// anf:W, poly_Z, mahler, ff_basis, bp_class, qpol, differentiable:B, brute:B, xor_chain
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, default_value_t = 8)]
    mod_bits: u32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Hex,
    Bits,
    Words,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, value_enum, default_value = "hex")]
    format: Format,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, conflicts_with = "stdin_bits", required_unless_present = "stdin_bits")]
    spec: Option<PathBuf>,
    /// Read one period of a 0/1 sequence from standard input.
    #[arg(long)]
    stdin_bits: bool,
    #[arg(long)]
    period: bool,
    /// Residue census mod 2^K.
    #[arg(long, value_name = "K")]
    census: Option<u32>,
    /// Linear complexity of coordinate J, or of the whole binary stream without J.
    #[arg(long, value_name = "J", num_args = 0..=1)]
    lincomp: Option<Option<u32>>,
    /// 2-adic complexity of coordinate J, or of the whole binary stream without J.
    #[arg(long = "2adic", value_name = "J", num_args = 0..=1)]
    two_adic: Option<Option<u32>>,
    /// Cyclic census of K-chains in the binary stream.
    #[arg(long, value_name = "K")]
    ktuple: Vec<u32>,
    #[arg(long)]
    q1: bool,
    /// Dump every count instead of a summary.
    #[arg(long)]
    full_counts: bool,
    /// Period search cap in steps.
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long)]
    bits: u32,
    /// Also enumerate all compatible maps (n <= 4).
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Construction {
    Anyhalfper,
    AnyhalfperWreath,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(value_enum)]
    which: Construction,
    /// gamma_0, gamma_1, ... in hex, one per line.
    #[arg(long)]
    gamma: PathBuf,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long)]
    n: u32,
    /// Sequence length for the plain construction (default 2^{n+1}).
    #[arg(long)]
    len: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum CipherCommand {
    /// Sample parameters.
    Keygen {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        monomials: usize,
        #[arg(long, value_parser = parse_u64)]
        seed: u64,
    },
    /// Keystream symbols as a test vector.
    Stream {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_parser = parse_u64)]
        key: u64,
        #[arg(long)]
        count: usize,
    },
    Enc(CryptArgs),
    Dec(CryptArgs),
    /// Agreement of the keystream with the known-plaintext relation.
    Kpa {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_parser = parse_u64)]
        key: u64,
        #[arg(long)]
        m: usize,
    },
}

#[derive(Args, Debug)]
struct CryptArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, value_parser = parse_u64)]
    key: u64,
    /// Input file; standard input if absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("`{s}`: {e}"))
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn read_bytes(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Parse argv (program name first), run, and return the exit code.
pub fn dispatch<I, T>(argv: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match run(cli.command, stdin, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn verdict_code(v: &Verdict) -> i32 {
    if v.is_yes() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn run(cmd: Command, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Verify(a) => run_verify(a, out),
        Command::Gen(a) => run_gen(a, out),
        Command::Analyze(a) => run_analyze(a, stdin, out),
        Command::Count(a) => {
            let c = verify::counting(a.bits)?;
            let mut v = serde_json::to_value(&c).expect("counting serializes");
            if a.exhaustive {
                if !(1..=4).contains(&a.bits) {
                    return Err(CliError::Usage("--exhaustive needs 1 <= bits <= 4".into()));
                }
                v["exhaustive"] = json!(verify::count_transitive_exhaustive(a.bits));
            }
            emit(out, &v)?;
            Ok(EXIT_OK)
        }
        Command::Construct(a) => run_construct(a, out),
        Command::Cipher(c) => run_cipher(c, stdin, out),
    }
}

fn run_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let e = parse(&a.law)?;
    let strategy = match &a.strategy {
        Some(s) => Some(Strategy::parse(s).ok_or_else(|| CliError::Usage(format!("unknown strategy `{s}`")))?),
        None => None,
    };
    let default = Strategy::Anf { width: a.mod_bits };
    let v = match a.check {
        Check::Bijective => verify::bijective_mod(&e, a.mod_bits)?,
        Check::Transitive => verify::transitive_mod(&e, a.mod_bits)?,
        Check::Ergodic => verify::ergodic(&e, strategy.unwrap_or(default))?,
        Check::Mp => verify::measure_preserving(&e, strategy.unwrap_or(default))?,
        Check::Compatible => {
            let ok = verify::compatible_mod(&e, a.mod_bits)?;
            emit(out, &json!({ "property": "compatible", "result": if ok { "yes" } else { "no" }, "modulus_bits": a.mod_bits }))?;
            return Ok(if ok { EXIT_OK } else { EXIT_FAIL });
        }
    };
    emit(out, &v)?;
    Ok(verdict_code(&v))
}

fn run_gen(a: GenArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = gen::load_spec(&a.spec)?;
    let width = spec.output_width();
    let mut st = GeneratorState::build(&spec)?;
    let words = st.run(a.count)?;
    match a.format {
        Format::Hex => {
            for w in &words {
                writeln!(out, "{}", w.to_hex())?;
            }
        }
        Format::Words => {
            for w in &words {
                writeln!(out, "{}", w.value())?;
            }
        }
        Format::Bits => {
            let mut line = String::with_capacity(words.len() * width as usize);
            for w in &words {
                line.extend((0..width).map(|j| if w.bit(j) { '1' } else { '0' }));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(EXIT_OK)
}

fn read_bits(stdin: &mut dyn Read) -> Result<BitSeq, CliError> {
    let mut s = String::new();
    stdin.read_to_string(&mut s)?;
    s.parse().map_err(|e: ergo::words::WordError| CliError::Usage(e.to_string()))
}

fn run_analyze(a: AnalyzeArgs, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut report = serde_json::Map::new();
    let mut pass = true;
    if let Some(path) = &a.spec {
        let spec = gen::load_spec(path)?;
        let coordinates: Vec<u32> = [a.lincomp.flatten(), a.two_adic.flatten()].into_iter().flatten().collect();
        let opts = AnalyzeOptions {
            cap: a.cap,
            modulus_bits: a.census,
            coordinates,
            ktuples: a.ktuple.clone(),
            complexity: matches!(a.lincomp, Some(None)) || matches!(a.two_adic, Some(None)),
            q1: a.q1,
            full_counts: a.full_counts,
        };
        let r = analyze::analyze(&spec, &opts)?;
        pass = r.q1.as_ref().is_none_or(|q| q.pass);
        let v = serde_json::to_value(&r).expect("reports serialize");
        report = v.as_object().cloned().unwrap_or_default();
    } else {
        let bits = read_bits(stdin)?;
        let as_vec: Vec<bool> = bits.iter().collect();
        report.insert("length".into(), json!(bits.len()));
        if a.period {
            report.insert("exact_period".into(), json!(analyze::cyclic_period(&as_vec)));
        }
        if let Some(k) = a.census {
            if k == 0 || bits.len() % k as usize != 0 {
                return Err(CliError::Usage(format!("--census {k}: length {} is not a multiple of {k}", bits.len())));
            }
            let words = (0..bits.len() / k as usize).map(|i| bits.word_at(i * k as usize) & ((1u64 << k) - 1));
            report.insert("residue_census".into(), json!(analyze::residue_census(words, k, a.full_counts)?));
        }
        if a.lincomp.is_some() {
            report.insert("linear_complexity".into(), json!(analyze::linear_complexity(&bits)));
        }
        if a.two_adic.is_some() {
            report.insert("two_adic".into(), json!(analyze::two_adic(&bits)?));
        }
        let chains = a.ktuple.iter().map(|&k| analyze::ktuple_census(&bits, k, a.full_counts)).collect::<Result<Vec<_>, _>>()?;
        if !chains.is_empty() {
            report.insert("ktuple".into(), json!(chains));
        }
        if a.q1 {
            let q = analyze::q1_check(&bits)?;
            pass = q.pass;
            report.insert("q1".into(), json!(q));
        }
    }
    emit(out, &report)?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn read_gammas(path: &PathBuf) -> Result<Vec<BigUint>, CliError> {
    read_file(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let h = l.trim_start_matches("0x");
            BigUint::parse_bytes(h.as_bytes(), 16).ok_or_else(|| CliError::Usage(format!("bad gamma `{l}`")))
        })
        .collect()
}

fn run_construct(a: ConstructArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let gammas = read_gammas(&a.gamma)?;
    match a.which {
        Construction::Anyhalfper => {
            let len = a.len.unwrap_or(if a.n < 24 { 2usize << a.n } else { 1 << 24 });
            let words = gen::anyhalfper_sequence(&gammas, a.n, len)?;
            for w in &words {
                writeln!(out, "{}", w.to_hex())?;
            }
        }
        Construction::AnyhalfperWreath => {
            let spec = gen::anyhalfper_wreath(&gammas, a.m, a.n)?;
            writeln!(out, "{}", spec.to_json())?;
        }
    }
    Ok(EXIT_OK)
}

fn load_params(path: &PathBuf) -> Result<CipherParams, CliError> {
    Ok(CipherParams::from_json(&read_file(path)?)?)
}

fn run_cipher(c: CipherCommand, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<i32, CliError> {
    match c {
        CipherCommand::Keygen { n, k, monomials, seed } => {
            writeln!(out, "{}", cipher::gen_params(n, k, monomials, seed)?.to_json())?;
        }
        CipherCommand::Stream { params, key, count } => {
            let p = load_params(&params)?;
            let ys = cipher::keystream(&p, key, count)?;
            out.write_all(cipher::format_test_vector(&p, key, &ys).as_bytes())?;
        }
        CipherCommand::Enc(a) | CipherCommand::Dec(a) => {
            let p = load_params(&a.params)?;
            let data = match &a.input {
                Some(path) => read_bytes(path)?,
                None => {
                    let mut v = Vec::new();
                    stdin.read_to_end(&mut v)?;
                    v
                }
            };
            let res = cipher::encrypt(&p, a.key, &data)?;
            match &a.output {
                Some(path) => std::fs::write(path, res).map_err(|source| CliError::Io { path: path.display().to_string(), source })?,
                None => out.write_all(&res)?,
            }
        }
        CipherCommand::Kpa { params, key, m } => {
            let p = load_params(&params)?;
            let f = cipher::kpa_trace(&p, key, m)?;
            emit(out, &json!({ "key": key, "m": m, "agreement": f }))?;
        }
    }
    Ok(EXIT_OK)
}
