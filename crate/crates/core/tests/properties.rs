use num_bigint::BigInt;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use ergo::analyze::{
    binary_stream, coordinate_extract_u64, cyclic_period, ktuple_census, q1_check, residue_census,
};
use ergo::cipher::{gen_params, keystream, CipherParams};
use ergo::expr::random::{random_compatible, random_ergodic, random_measure_preserving};
use ergo::expr::{anf, AnfTable, Evaluator};
use ergo::gen::{make_recipe, GeneratorSpec, GeneratorState, JoinOp, OutputDescriptor, Recipe};
use ergo::verify::{bijective_mod, ergodic, measure_preserving, transitive_mod, Strategy};
use ergo::words::{bit_reverse, bitop, rational_to_bits, BitOp};
use ergo::{parse, Expr, Word};

fn values(e: &Expr, n: u32) -> Vec<u64> {
    let ev = Evaluator::new(e, n).unwrap();
    (0..1u64 << n).map(|x| ev.eval_u64(x, 0).unwrap()).collect()
}

fn compatible(seed: u64) -> Expr {
    random_compatible(&mut StdRng::seed_from_u64(seed), 3)
}

#[test]
fn bit_identities_width_8() {
    for u in 0..256u64 {
        let wu = Word::from_u64(u, 8);
        let neg = bitop(BitOp::Neg, &wu, None).unwrap().to_u64().unwrap();
        assert_eq!((neg + u) % 256, 255);
        for v in 0..256u64 {
            let wv = Word::from_u64(v, 8);
            let xor = bitop(BitOp::Xor, &wu, Some(&wv)).unwrap().to_u64().unwrap() as i64;
            let and = bitop(BitOp::And, &wu, Some(&wv)).unwrap().to_u64().unwrap() as i64;
            let or = bitop(BitOp::Or, &wu, Some(&wv)).unwrap().to_u64().unwrap() as i64;
            let (a, b) = (u as i64, v as i64);
            assert_eq!(xor, (a + b - 2 * and).rem_euclid(256));
            assert_eq!(or, (a + b - and).rem_euclid(256));
        }
    }
}

#[test]
fn bit_reverse_permutes() {
    for s in 1..=12u32 {
        for t in 1..=12 / s {
            let w = s * t;
            let mut seen = vec![false; 1 << w];
            for x in 0..1u64 << w {
                let y = bit_reverse(s, t, &Word::from_u64(x, w)).unwrap().to_u64().unwrap();
                assert!(!seen[y as usize], "s={s} t={t}");
                seen[y as usize] = true;
            }
        }
    }
}

proptest! {
    #[test]
    fn rational_bits_times_v(u in -100000i64..100000, half in 0i64..5000, len in 1usize..200) {
        let v = BigInt::from(2 * half + 1);
        let bits = rational_to_bits(&BigInt::from(u), &v, len).unwrap();
        let modulus = BigInt::from(1) << len;
        let x = BigInt::from(bits.to_biguint());
        let lhs = (x * &v) % &modulus;
        let rhs = ((BigInt::from(u) % &modulus) + &modulus) % &modulus;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluation_is_compatible(seed in any::<u64>(), n in 1u32..=10) {
        let e = compatible(seed);
        let vals = values(&e, n);
        for r in 1..n {
            let m = (1u64 << r) - 1;
            for x in 0..1u64 << n {
                prop_assert_eq!(vals[x as usize] & m, vals[(x & m) as usize] & m, "e = {}", e);
            }
        }
    }

    #[test]
    fn anf_reproduces_eval(seed in any::<u64>(), n in 1u32..=10) {
        let e = compatible(seed);
        let t: AnfTable = anf(&e, n).unwrap();
        let vals = values(&e, n);
        for x in 0..1u64 << n {
            prop_assert_eq!(t.eval_from_monomials(x), vals[x as usize]);
        }
    }

    #[test]
    fn parse_print_round_trip(seed in any::<u64>()) {
        let e = compatible(seed);
        let back = parse(&e.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), e.to_string());
        prop_assert_eq!(values(&back, 8), values(&e, 8));
    }

    #[test]
    fn ergodic_implies_mp_implies_bijective(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        for e in [random_ergodic(&mut rng, 2), random_measure_preserving(&mut rng, 2), random_compatible(&mut rng, 2)] {
            let erg = ergodic(&e, Strategy::Anf { width: 10 }).unwrap().is_yes();
            let mp = measure_preserving(&e, Strategy::Anf { width: 10 }).unwrap().is_yes();
            prop_assert!(!erg || mp);
            for k in 1..=10 {
                prop_assert!(!mp || bijective_mod(&e, k).unwrap().is_yes());
                prop_assert!(!erg || transitive_mod(&e, k).unwrap().is_yes());
            }
        }
    }

    #[test]
    fn anf_agrees_with_brute(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        for e in [random_ergodic(&mut rng, 2), random_measure_preserving(&mut rng, 2), random_compatible(&mut rng, 2)] {
            let a = ergodic(&e, Strategy::Anf { width: 9 }).unwrap();
            let b = ergodic(&e, Strategy::Brute { bound: 9 }).unwrap();
            prop_assert!(!b.is_yes());
            prop_assert_eq!(a.is_no(), b.is_no(), "e = {}", e);
        }
    }

    #[test]
    fn polynomial_transitivity_settled_mod_8(cs in prop::collection::vec(-30i64..30, 1..=9)) {
        let mut text = String::from("0");
        for (i, c) in cs.iter().enumerate() {
            let sign = if *c < 0 { '-' } else { '+' };
            text += &format!(" {sign} {}", c.abs());
            for _ in 0..i {
                text += "*x";
            }
        }
        let e = parse(&text).unwrap();
        let base = transitive_mod(&e, 3).unwrap().is_yes();
        for k in 4..=10 {
            prop_assert_eq!(transitive_mod(&e, k).unwrap().is_yes(), base, "{}", text);
        }
    }

    #[test]
    fn ergodic_orbits_cover(seed in any::<u64>(), k in 1u32..=12) {
        let e = random_ergodic(&mut StdRng::seed_from_u64(seed), 2);
        for start in [0u64, 1] {
            let spec = GeneratorSpec::congruential(e.clone(), k, start);
            let run = GeneratorState::build(&spec).unwrap().run_u64(1 << k).unwrap();
            let mut seen = vec![false; 1 << k];
            run.iter().for_each(|&v| seen[v as usize] = true);
            prop_assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn wp_even_period(seed in any::<u64>(), n in 4u32..=8, m in 1u32..=4, cs in prop::collection::vec(0u64..16, 16)) {
        let size = 1usize << m;
        let mut cs = cs[..size].to_vec();
        if cs.iter().sum::<u64>() % 2 == 0 {
            cs[0] ^= 1;
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let fs = (0..size).map(|_| random_compatible(&mut rng, 2)).collect();
        let spec = make_recipe(&Recipe::WpEven { cs, fs }, n, 0).unwrap();
        let run = GeneratorState::build(&spec).unwrap().run_u64(2 << (n + m)).unwrap();
        let p = 1usize << (n + m);
        prop_assert_eq!(&run[..p], &run[p..]);
        prop_assert!(exact_config_period(&spec) == p as u64);
    }

    #[test]
    fn wp_odd_subsequences(seed in any::<u64>(), n in 3u32..=7, half in 1usize..=3) {
        let m = 2 * half + 1;
        let mut rng = StdRng::seed_from_u64(seed);
        let fs = (0..m).map(|_| random_ergodic(&mut rng, 2)).collect();
        let u = (0..m).map(|i| (i + 1) % m).collect();
        let spec = make_recipe(&Recipe::WpOdd { fs, u, z: 0, op: JoinOp::Xor }, n, 0).unwrap();
        let p = (1usize << n) * m;
        let run = GeneratorState::build(&spec).unwrap().run_u64(p).unwrap();
        let c = residue_census(run.iter().copied(), n, false).unwrap();
        prop_assert!(c.strict && c.min == m as u64);
        for r in 0..m {
            for t in 1..=n {
                let mask = (1u64 << t) - 1;
                let mut seen = vec![false; 1 << t];
                for v in run.iter().skip(r).step_by(m).take(1 << t) {
                    seen[(v & mask) as usize] = true;
                }
                prop_assert!(seen.iter().all(|&s| s), "r={} t={}", r, t);
            }
        }
    }

    #[test]
    fn reverse_output_coordinates(seed in any::<u64>(), n in 3u32..=8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = random_ergodic(&mut rng, 2);
        let h = random_ergodic(&mut rng, 2);
        let spec = make_recipe(&Recipe::ReverseOutput { fs: vec![f], hs: vec![h] }, n, 0).unwrap();
        let run = GeneratorState::build(&spec).unwrap().run_u64(1 << n).unwrap();
        for j in 0..n {
            let p = cyclic_period(&coordinate_extract_u64(&run, j).iter().collect::<Vec<_>>());
            prop_assert_eq!(p, 1usize << n);
        }
    }

    #[test]
    fn foldrev_output(seed in any::<u64>(), k in 1u32..=6) {
        let f = random_ergodic(&mut StdRng::seed_from_u64(seed), 2);
        let spec = make_recipe(&Recipe::Foldrev { f }, 2 * k, 0).unwrap();
        let p = 1usize << (2 * k);
        let run = GeneratorState::build(&spec).unwrap().run_u64(p).unwrap();
        prop_assert_eq!(cyclic_period(&run), p);
        for j in 0..k {
            prop_assert_eq!(cyclic_period(&coordinate_extract_u64(&run, j).iter().collect::<Vec<_>>()), p);
        }
        let c = residue_census(run.iter().copied(), k, false).unwrap();
        prop_assert!(c.strict && c.min == 1 << k);
    }

    #[test]
    fn truncated_output_distribution(seed in any::<u64>(), n in 2u32..=10, kk in 1u32..=5) {
        let k = kk.min(n / 2).max(1);
        let f = random_ergodic(&mut StdRng::seed_from_u64(seed), 2);
        let spec = GeneratorSpec::congruential(f, n, 0).with_outputs(vec![OutputDescriptor::Truncate(n - k)]);
        let run = GeneratorState::build(&spec).unwrap().run_u64(1 << n).unwrap();
        let stream = binary_stream(&run, k);
        prop_assert_eq!(stream.len(), (1usize << n) * k as usize);
        let c = ktuple_census(&stream, k, false).unwrap();
        prop_assert!(c.full);
        prop_assert_eq!(cyclic_period(&stream.iter().collect::<Vec<_>>()), stream.len());
    }

    #[test]
    fn strict_distribution_passes_q1(seed in any::<u64>(), n in 3u32..=9) {
        let f = random_ergodic(&mut StdRng::seed_from_u64(seed), 2);
        let run = GeneratorState::build(&GeneratorSpec::congruential(f, n, 0)).unwrap().run_u64(1 << n).unwrap();
        let stream = binary_stream(&run, n);
        prop_assert!(ktuple_census(&stream, n, false).unwrap().full);
        prop_assert!(q1_check(&stream).unwrap().pass);
    }

    #[test]
    fn cipher_map_is_ergodic(n in 1u32..=8, k in 1u32..=4, count in 0usize..=4, seed in any::<u64>()) {
        let count = count.min(1 << n);
        let p = gen_params(n, k, count, seed).unwrap();
        let w = p.width();
        let vals: Vec<u64> = (0..1u64 << w).map(|x| p.f_eval(x).unwrap()).collect();
        prop_assert_eq!(AnfTable::from_values(&vals, w).unwrap().first_non_ergodic_row(), None);
    }

    #[test]
    fn keystream_uniform_and_deterministic(n in 2u32..=8, k in 1u32..=4, seed in any::<u64>(), z in any::<u64>()) {
        let count = (4 * n as usize).min(1 << n);
        let p = gen_params(n, k, count, seed).unwrap();
        let z = z % (1 << n);
        let period = 1usize << p.width();
        let ys = keystream(&p, z, period).unwrap();
        let c = residue_census(ys.iter().copied(), k, false).unwrap();
        prop_assert!(c.strict && c.min == 1 << (n + 1));
        let q = CipherParams::from_json(&p.to_json()).unwrap();
        let head = period.min(64);
        prop_assert_eq!(keystream(&q, z, head).unwrap(), ys[..head].to_vec());
    }
}

fn exact_config_period(spec: &GeneratorSpec) -> u64 {
    ergo::analyze::exact_period(&mut GeneratorState::build(spec).unwrap(), 1 << 20).unwrap()
}
