use num_bigint::BigUint;

use super::{GenError, GeneratorSpec, Guarantee, Kind, Law, OutputDescriptor, TableLaw};
use crate::words::{BitSeq, Word};

/// Largest state width for the table-backed wreath construction.
pub const ANYHALFPER_WREATH_CAP: u32 = 16;

fn bit(v: &BigUint, k: u64) -> bool {
    v.bit(k)
}

fn check_ranges(gammas: &[BigUint], bits_at: impl Fn(usize) -> u64) -> Result<(), GenError> {
    for (index, g) in gammas.iter().enumerate() {
        let bits = bits_at(index);
        if g.bits() > bits {
            return Err(GenError::GammaRange { index, bits });
        }
    }
    Ok(())
}

/// Orbit z_0, z_1, ... of an ergodic map whose coordinate j starts with the 2^j bits of
/// gamma_j: delta_j(z_i) = delta_{i mod 2^j}(gamma_j) + floor(i / 2^j) mod 2.
pub fn anyhalfper_sequence(gammas: &[BigUint], n: u32, len: usize) -> Result<Vec<Word>, GenError> {
    if n == 0 || gammas.len() < n as usize {
        return Err(GenError::Recipe(format!("need gamma_0..gamma_{} for {n} coordinates", n.max(1) - 1)));
    }
    if n > 40 {
        return Err(GenError::Recipe("at most 40 coordinates".into()));
    }
    check_ranges(&gammas[..n as usize], |j| 1u64 << j)?;
    Ok((0..len as u64)
        .map(|i| {
            let mut z = BigUint::default();
            for j in 0..n as u64 {
                let period = 1u64 << j;
                if bit(&gammas[j as usize], i % period) ^ ((i / period) % 2 == 1) {
                    z.set_bit(j, true);
                }
            }
            Word::new(z, n)
        })
        .collect())
}

/// A table-backed family g_0..g_{m-1} satisfying the wreath conditions, and a seed,
/// such that coordinate j (j >= 1) of the state sequence starts with the 2^j m bits of
/// gamma_j and then repeats them negated. Coordinate 0 is fixed by the level-0 constants
/// (1, 0, ..., 0), which give g(0) mod 2 exact period m; only bit 0 of gamma_0 is used.
pub fn anyhalfper_wreath(gammas: &[BigUint], m: usize, n: u32) -> Result<GeneratorSpec, GenError> {
    if m < 2 {
        return Err(GenError::Recipe("family size must be at least 2".into()));
    }
    if n == 0 || n > ANYHALFPER_WREATH_CAP {
        return Err(GenError::Recipe(format!("width must be in 1..={ANYHALFPER_WREATH_CAP}")));
    }
    if gammas.len() < n as usize {
        return Err(GenError::Recipe(format!("need gamma_0..gamma_{}", n - 1)));
    }
    check_ranges(&gammas[..n as usize], |j| (1u64 << j) * m as u64)?;

    let x0: u64 = (0..n as usize).map(|j| u64::from(bit(&gammas[j], 0)) << j).sum();
    let mut tables: Vec<TableLaw> = (0..m).map(|i| TableLaw { phi: vec![BitSeq::from_iter([i == 0])] }).collect();
    // walk the orbit mod 2^j and pick phi_j so that coordinate j follows gamma_j
    for j in 1..n {
        let len = (1usize << j) * m;
        let g = &gammas[j as usize];
        let mut phis: Vec<BitSeq> = (0..m).map(|_| BitSeq::zeros(1 << j)).collect();
        let mask = (1u64 << j) - 1;
        let mut xi = x0 & mask;
        for k in 0..len {
            let target = if k + 1 < len {
                bit(g, k as u64) ^ bit(g, k as u64 + 1)
            } else {
                bit(g, k as u64) ^ bit(g, 0) ^ true
            };
            phis[k % m].set(xi as usize, target);
            xi = tables[k % m].eval_u64(xi, j);
        }
        debug_assert_eq!(xi, x0 & mask);
        for (t, phi) in tables.iter_mut().zip(phis) {
            t.phi.push(phi);
        }
    }

    let spec = GeneratorSpec {
        kind: Kind::Wreath,
        n,
        m,
        fs: tables.into_iter().map(Law::Table).collect(),
        outs: vec![OutputDescriptor::Identity],
        seed: x0.into(),
        perm: None,
        guarantee: Some(Guarantee {
            theorem: "prescribed first half of every senior coordinate of a wreath product".into(),
            period: Some((1u64 << n) * m as u64),
            multiplicity: Some(m as u64),
        }),
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::GeneratorState;
    use rand::{Rng, SeedableRng};

    fn random_gammas(rng: &mut impl Rng, n: u32, per: impl Fn(u32) -> u64) -> Vec<BigUint> {
        (0..n)
            .map(|j| {
                let bits = per(j);
                let mut g = BigUint::default();
                for b in 0..bits {
                    if rng.gen_bool(0.5) {
                        g.set_bit(b, true);
                    }
                }
                g
            })
            .collect()
    }

    #[test]
    fn plain_sequence_structure() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let n = 8;
        let gammas = random_gammas(&mut rng, n, |j| 1 << j);
        let seq = anyhalfper_sequence(&gammas, n, 1 << (n + 1)).unwrap();
        for j in 0..n {
            assert_eq!(seq[0].bit(j), gammas[j as usize].bit(0));
            for i in 0..1u64 << j {
                assert_eq!(seq[i as usize].bit(j), gammas[j as usize].bit(i));
            }
        }
        // the orbit of an ergodic map: mod 2^k it runs through every residue once per 2^k steps
        for k in 1..=n {
            let mask = (1u64 << k) - 1;
            let mut seen = vec![false; 1 << k];
            for w in &seq[..1 << k] {
                seen[(w.to_u64().unwrap() & mask) as usize] = true;
            }
            assert!(seen.iter().all(|&s| s));
            for i in 0..seq.len() - (1 << k) {
                assert_eq!(seq[i].to_u64().unwrap() & mask, seq[i + (1 << k)].to_u64().unwrap() & mask);
            }
        }
    }

    #[test]
    fn zero_gammas_alternate() {
        let seq = anyhalfper_sequence(&vec![BigUint::default(); 4], 4, 32).unwrap();
        for j in 0..4u32 {
            for (i, w) in seq.iter().enumerate() {
                assert_eq!(w.bit(j), (i >> j) & 1 == 1);
            }
        }
    }

    #[test]
    fn wreath_construction() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let (n, m) = (6, 3usize);
        for _ in 0..5 {
            let gammas = random_gammas(&mut rng, n, |j| (1 << j) * m as u64);
            let spec = anyhalfper_wreath(&gammas, m, n).unwrap();
            let run = GeneratorState::build(&spec).unwrap().run_u64((1 << n) * m * 2).unwrap();
            for j in 1..n {
                let half = (1usize << j) * m;
                for k in 0..half {
                    assert_eq!((run[k] >> j) & 1 == 1, gammas[j as usize].bit(k as u64), "j={j} k={k}");
                    assert_ne!((run[k] >> j) & 1, (run[k + half] >> j) & 1);
                }
            }
            let period = (1usize << n) * m;
            assert_eq!(run[..period], run[period..]);
            let mut counts = vec![0; 1 << n];
            run[..period].iter().for_each(|&v| counts[v as usize] += 1);
            assert!(counts.iter().all(|&c| c == m));
        }
    }

    #[test]
    fn ranges_enforced() {
        let g = vec![BigUint::from(2u32)];
        assert!(matches!(anyhalfper_sequence(&g, 1, 4), Err(GenError::GammaRange { index: 0, .. })));
        assert!(anyhalfper_wreath(&[BigUint::from(0u32)], 1, 1).is_err());
    }
}
