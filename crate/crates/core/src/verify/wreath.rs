use super::{Outcome, Property, Verdict, VerifyError, Witness, BRUTE_WIDTH_CAP};
use crate::expr::{structural_compatibility, AnfTable, Compatibility};
use crate::gen::{counter_order, Law};

/// Value tables g_j(x), x < 2^n, with the counter bound to j; checks that each
/// member is compatible and measure preserving.
fn member_tables(laws: &[Law], n: u32) -> Result<Vec<(Vec<u64>, AnfTable)>, VerifyError> {
    if laws.is_empty() {
        return Err(VerifyError::EmptyFamily);
    }
    if n > BRUTE_WIDTH_CAP {
        return Err(VerifyError::WidthCap(n));
    }
    laws.iter()
        .enumerate()
        .map(|(j, law)| {
            if let Law::Expr(e) = law {
                if let Compatibility::Incompatible(node) = structural_compatibility(e) {
                    return Err(VerifyError::Incompatible { index: j, node });
                }
            }
            let g = law.compile(n)?;
            let vals = (0..1u64 << n).map(|x| g.eval_u64(x, j as u64)).collect::<Result<Vec<_>, _>>()?;
            let t = AnfTable::from_values(&vals, n)?;
            if !t.is_measure_preserving() {
                return Err(VerifyError::NotMeasurePreserving(j));
            }
            Ok((vals, t))
        })
        .collect()
}

fn fail(condition: u8, level: Option<u32>, detail: String, n: u32) -> Verdict {
    Verdict {
        property: Property::Transitive,
        result: Outcome::No,
        criterion: format!("wreath product condition ({condition})"),
        modulus_bits: n,
        witness: Witness::Wreath { condition: Some(condition), level, detail },
    }
}

/// Conditions under which x_{t+1} = g_{idx_t}(x_t) is strictly uniformly distributed
/// mod 2^n with period 2^n m. `perm` is the counter transition (default increment).
pub fn validate_wreath_family(laws: &[Law], n: u32, perm: Option<&[usize]>) -> Result<Verdict, VerifyError> {
    let m = laws.len();
    let tables = member_tables(laws, n)?;
    let order = counter_order(m, perm).map_err(|reason| VerifyError::Hypothesis { strategy: "wreath", reason })?;

    // (1) exact period m of g(0) mod 2 along the counter order
    let bits: Vec<u64> = order.iter().map(|&j| tables[j].0[0] & 1).collect();
    if let Some(p) = (1..m).find(|&p| m % p == 0 && (0..m).all(|t| bits[t] == bits[(t + p) % m])) {
        return Ok(fail(1, None, format!("g(0) mod 2 along the counter has period {p}, not {m}"), n));
    }
    // (2)
    let parity = tables.iter().map(|(v, _)| v[0] & 1).sum::<u64>() & 1;
    if parity == 0 {
        return Ok(fail(2, None, "sum of c_j even".into(), n));
    }
    // (3) sum over j, z < 2^k of (g_j(z) mod 2^{k+1}) - z must be 2^k mod 2^{k+1}
    for k in 1..n {
        let modulus = 1u64 << (k + 1);
        let mut s = 0u64;
        for (vals, _) in &tables {
            for (z, v) in vals.iter().take(1 << k).enumerate() {
                s = s.wrapping_add((v & (modulus - 1)).wrapping_sub(z as u64));
            }
        }
        if s & (modulus - 1) != 1 << k {
            return Ok(fail(3, Some(k), format!("sum at level {k} is not 2^{k} mod 2^{}", k + 1), n));
        }
    }
    Ok(Verdict {
        property: Property::Transitive,
        result: Outcome::Yes,
        criterion: format!("wreath product conditions (1)-(3): period 2^{n}*{m}, each residue {m} times"),
        modulus_bits: n,
        witness: Witness::Wreath { condition: None, level: None, detail: format!("checked levels 1..{}", n.saturating_sub(1)) },
    })
}

/// Condition (3) in its Boolean form: for each level k = 1..n-1, whether the sum of
/// the weights of phi_k over the family is odd.
pub fn wreath_condition_three_by_weights(laws: &[Law], n: u32) -> Result<Vec<bool>, VerifyError> {
    let tables = member_tables(laws, n)?;
    Ok((1..n)
        .map(|k| tables.iter().map(|(_, t)| t.phi_weight(k).expect("measure preserving")).sum::<u64>() % 2 == 1)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn laws(src: &[&str]) -> Vec<Law> {
        src.iter().map(|s| Law::Expr(parse(s).unwrap())).collect()
    }

    #[test]
    fn wp_even_family() {
        let f = laws(&["1 + x + 4*(x*x)", "x + 4*(x & 6)", "x + 4*x*x*x", "x"]);
        let v = validate_wreath_family(&f, 8, None).unwrap();
        assert!(v.is_yes(), "{v:?}");
    }

    #[test]
    fn even_constant_sum() {
        let f = laws(&["1 + x", "1 + x + 4*x", "x", "x"]);
        let v = validate_wreath_family(&f, 6, None).unwrap();
        assert!(v.is_no());
        match v.witness {
            Witness::Wreath { condition: Some(c), detail, .. } => {
                assert!(c == 1 || c == 2);
                if c == 2 {
                    assert!(detail.contains("sum of c_j even"));
                }
            }
            w => panic!("{w:?}"),
        }
        let f = laws(&["1 + x", "1 + x", "x", "x"]);
        let v = validate_wreath_family(&f, 6, None).unwrap();
        assert!(matches!(v.witness, Witness::Wreath { condition: Some(2), .. }));
    }

    #[test]
    fn one_ergodic_and_two_xor_members() {
        let f = laws(&["1 + x + 2*(x*x + x)", "x ^ (2*(x + 2*x*x))", "x ^ (2*(3 + x))"]);
        assert!(validate_wreath_family(&f, 8, None).unwrap().is_yes());
        let w = wreath_condition_three_by_weights(&f, 8).unwrap();
        assert!(w.iter().all(|&b| b));
    }

    #[test]
    fn weights_agree_with_sums() {
        let f = laws(&["1 + x + 4*(x & 5)", "x ^ (2*x)", "3 + x", "x + 2*(x*x)"]);
        let byw = wreath_condition_three_by_weights(&f, 7).unwrap();
        let v = validate_wreath_family(&f, 7, None).unwrap();
        let first_bad = byw.iter().position(|&b| !b).map(|p| p as u32 + 1);
        match (&v.witness, first_bad) {
            (Witness::Wreath { condition: Some(3), level, .. }, Some(k)) => assert_eq!(*level, Some(k)),
            (Witness::Wreath { condition: Some(c), .. }, _) => assert!(*c < 3),
            (Witness::Wreath { condition: None, .. }, None) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn member_errors_name_index() {
        let f = laws(&["1 + x", "x*x"]);
        assert_eq!(validate_wreath_family(&f, 5, None).unwrap_err(), VerifyError::NotMeasurePreserving(1));
        let f = laws(&["1 + x", "shr(x, 1)"]);
        assert!(matches!(validate_wreath_family(&f, 5, None).unwrap_err(), VerifyError::Incompatible { index: 1, .. }));
    }
}
