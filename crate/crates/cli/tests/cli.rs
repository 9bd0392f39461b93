use std::path::PathBuf;
use std::process::Command;

use ergo::gen::{load_spec, save_spec, GeneratorState, Kind, OutputDescriptor};
use ergo_cli::{dispatch, EXIT_FAIL, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

struct Run {
    code: i32,
    out: Vec<u8>,
    err: String,
}

impl Run {
    fn text(&self) -> String {
        String::from_utf8(self.out.clone()).unwrap()
    }

    fn json(&self) -> Value {
        serde_json::from_slice(&self.out).unwrap_or_else(|e| panic!("{e}: {}", self.text()))
    }
}

fn run_with(args: &[&str], stdin: &[u8]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("ergo").chain(args.iter().copied());
    let code = dispatch(argv, &mut &stdin[..], &mut out, &mut err);
    Run { code, out, err: String::from_utf8(err).unwrap() }
}

fn run(args: &[&str]) -> Run {
    run_with(args, b"")
}

#[test]
fn verify_bijective_example() {
    let r = run(&["verify", "--law", "x + 2*x*x", "--check", "bijective", "--mod-bits", "2"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.json()["result"], "yes");
}

#[test]
fn verify_no_exits_one() {
    let r = run(&["verify", "--law", "x + 2*x*x", "--check", "transitive", "--mod-bits", "3"]);
    assert_eq!(r.code, EXIT_FAIL);
    assert_eq!(r.json()["result"], "no");
    let r = run(&["verify", "--law", "x + (x*x | 5)", "--check", "ergodic", "--strategy", "anf:10"]);
    assert_eq!(r.code, EXIT_OK);
    let r = run(&["verify", "--law", "3*x + exp(3, x)", "--check", "ergodic", "--strategy", "bp_class"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(run(&["verify", "--law", "x"]).code, EXIT_USAGE);
    let r = run(&["verify", "--law", "x +", "--check", "bijective"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.starts_with("error:"));
    assert_eq!(run(&["verify", "--law", "x", "--check", "ergodic", "--strategy", "magic"]).code, EXIT_USAGE);
    assert_eq!(run(&["--help"]).code, EXIT_OK);
}

#[test]
fn gen_wp_odd_repeats_after_192() {
    let r = run(&["gen", "--spec", &data("wp_odd.json"), "--count", "384", "--format", "hex"]);
    assert_eq!(r.code, EXIT_OK);
    let lines: Vec<String> = r.text().lines().map(String::from).collect();
    assert_eq!(lines.len(), 384);
    assert_eq!(lines[..192], lines[192..]);
    let mut sorted = lines[..192].to_vec();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 64);
}

#[test]
fn gen_formats_agree() {
    let spec = data("congruential.json");
    let words = run(&["gen", "--spec", &spec, "--count", "10", "--format", "words"]).text();
    let bits = run(&["gen", "--spec", &spec, "--count", "10", "--format", "bits"]).text();
    let bits = bits.trim();
    assert_eq!(bits.len(), 80);
    for (i, w) in words.lines().enumerate() {
        let v: u64 = w.parse().unwrap();
        for j in 0..8 {
            assert_eq!(bits.as_bytes()[8 * i + j] == b'1', (v >> j) & 1 == 1);
        }
    }
}

#[test]
fn analyze_q1_example() {
    let input = std::fs::read(data("q1_example.bits")).unwrap();
    let r = run_with(&["analyze", "--stdin-bits", "--q1"], &input);
    assert_eq!(r.code, EXIT_FAIL);
    let q = &r.json()["q1"];
    assert_eq!(q["pass"], false);
    assert_eq!(q["levels"][2]["pass"], false);
    assert_eq!(q["levels"][3]["pass"], true);
    assert!(q["failing"].as_array().unwrap().contains(&Value::from(3)));
}

#[test]
fn analyze_spec() {
    let r = run(&["analyze", "--spec", &data("wp_odd.json"), "--census", "6", "--lincomp", "2", "--ktuple", "6", "--q1"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let v = r.json();
    assert_eq!(v["exact_period"], 192);
    assert_eq!(v["residue_census"]["strict"], true);
    assert_eq!(v["residue_census"]["min"], 3);
    assert_eq!(v["coordinate_reports"][0]["half_negation"], true);
    assert_eq!(v["coordinate_reports"][0]["exact_period"], 24);
    assert_eq!(v["ktuple"][0]["min"], 18);
    assert_eq!(v["ktuple"][0]["full"], true);
    let r = run(&["analyze", "--spec", &data("congruential.json"), "--period", "--lincomp", "--2adic"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert_eq!(r.json()["exact_period"], 256);
    assert!(r.json()["linear_complexity"]["L"].as_u64().unwrap() > 0);
    assert_eq!(run(&["analyze"]).code, EXIT_USAGE);
}

#[test]
fn analyze_bits_period_and_census() {
    let r = run_with(&["analyze", "--stdin-bits", "--period", "--census", "2", "--ktuple", "2", "--full-counts"], b"00011110");
    assert_eq!(r.code, EXIT_OK);
    let v = r.json();
    assert_eq!(v["exact_period"], 8);
    assert_eq!(v["residue_census"]["strict"], true);
    assert_eq!(v["ktuple"][0]["counts"]["00"], 3);
    assert_eq!(v["ktuple"][0]["counts"]["01"], 1);
}

#[test]
fn count_verb() {
    let v = run(&["count", "--bits", "32"]).json();
    assert_eq!(v["eta"], 604);
    let v = run(&["count", "--bits", "4", "--exhaustive"]).json();
    assert_eq!(v["exhaustive"], 2048);
    assert_eq!(v["log2_all_transitive"], "11");
    assert_eq!(run(&["count", "--bits", "9", "--exhaustive"]).code, EXIT_USAGE);
}

#[test]
fn load_spec_cases() {
    let s = load_spec(data("congruential.json").as_ref()).unwrap();
    assert_eq!((s.kind, s.m), (Kind::Congruential, 1));
    assert_eq!(s.outs, vec![OutputDescriptor::Identity]);
    let e = load_spec(data("wp_even_bad.json").as_ref()).unwrap_err();
    assert!(e.to_string().contains("WP-even condition: sum of c_j even"), "{e}");
    let r = run(&["gen", "--spec", &data("wp_even_bad.json"), "--count", "1"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("sum of c_j even"));

    let dir = std::env::temp_dir().join(format!("ergo-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for name in ["wp_odd.json", "wp_even.json", "congruential.json"] {
        let a = load_spec(data(name).as_ref()).unwrap();
        let path = dir.join(name);
        save_spec(&a, &path).unwrap();
        let b = load_spec(&path).unwrap();
        assert_eq!(a, b);
        let x = GeneratorState::build(&a).unwrap().run_u64(50).unwrap();
        let y = GeneratorState::build(&b).unwrap().run_u64(50).unwrap();
        assert_eq!(x, y);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn construct_verbs() {
    let r = run(&["construct", "anyhalfper", "--gamma", &data("gammas_plain.txt"), "--n", "4"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let words: Vec<u64> = r.text().lines().map(|l| u64::from_str_radix(l, 16).unwrap()).collect();
    assert_eq!(words.len(), 32);
    // gamma_3 = 0xd2: coordinate 3 starts 0,1,0,0,1,0,1,1
    let first: Vec<u64> = words[..8].iter().map(|w| (w >> 3) & 1).collect();
    assert_eq!(first, vec![0, 1, 0, 0, 1, 0, 1, 1]);

    let r = run(&["construct", "anyhalfper-wreath", "--gamma", &data("gammas_wreath.txt"), "--m", "3", "--n", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let spec = ergo::gen::GeneratorSpec::from_json(&r.text()).unwrap();
    let run = GeneratorState::build(&spec).unwrap().run_u64(24).unwrap();
    let coord2: u64 = (0..12).map(|k| ((run[k] >> 2) & 1) << k).sum();
    assert_eq!(coord2, 0x5a3);
}

#[test]
fn cipher_verbs() {
    let dir = std::env::temp_dir().join(format!("ergo-cipher-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let params = dir.join("params.json");
    let r = run(&["cipher", "keygen", "--n", "8", "--k", "3", "--monomials", "16", "--seed", "42"]);
    assert_eq!(r.code, EXIT_OK);
    std::fs::write(&params, r.text()).unwrap();
    let again = run(&["cipher", "keygen", "--n", "8", "--k", "3", "--monomials", "16", "--seed", "42"]);
    assert_eq!(r.out, again.out);
    let p = params.display().to_string();

    let s = run(&["cipher", "stream", "--params", &p, "--key", "0x2a", "--count", "5"]).text();
    assert!(s.starts_with("8 3 2a\n"));
    assert_eq!(s.lines().count(), 6);

    let plain = dir.join("plain.bin");
    let ct = dir.join("ct.bin");
    std::fs::write(&plain, b"attack at dawn").unwrap();
    let pl = plain.display().to_string();
    let c = ct.display().to_string();
    assert_eq!(run(&["cipher", "enc", "--params", &p, "--key", "7", "--in", &pl, "--out", &c]).code, EXIT_OK);
    let r = run(&["cipher", "dec", "--params", &p, "--key", "7", "--in", &c]);
    assert_eq!(r.out, b"attack at dawn");
    let r = run_with(&["cipher", "enc", "--params", &p, "--key", "7"], b"attack at dawn");
    assert_eq!(r.out, std::fs::read(&ct).unwrap());

    let v = run(&["cipher", "kpa", "--params", &p, "--key", "0", "--m", "16"]).json();
    assert_eq!(v["agreement"], 1.0);
    assert_eq!(run(&["cipher", "stream", "--params", &p, "--key", "256", "--count", "1"]).code, EXIT_USAGE);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn binary_is_deterministic() {
    let bin = env!("CARGO_BIN_EXE_ergo");
    let args = ["analyze", "--spec", &data("wp_even.json"), "--census", "4", "--ktuple", "3"];
    let a = Command::new(bin).args(args).output().unwrap();
    let b = Command::new(bin).args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = Command::new(bin).arg("count").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    let no = Command::new(bin).args(["verify", "--law", "x*x", "--check", "bijective", "--mod-bits", "3"]).output().unwrap();
    assert_eq!(no.status.code(), Some(EXIT_FAIL));
}
