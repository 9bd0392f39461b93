use crate::expr::{anf, c, structural_compatibility, x, Compatibility, Expr};

use super::{GenError, GeneratorSpec, Guarantee, Kind, Law, OutputDescriptor};

/// Width at which recipe inputs are checked through their Boolean form.
const CHECK_WIDTH: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComposeVariant {
    /// f(x + 4g)
    InnerAdd,
    /// f(x ^ 4g)
    InnerXor,
    /// f + 4g
    OuterAdd,
    /// f ^ 4g
    OuterXor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JoinOp {
    Xor,
    Add,
}

#[derive(Clone, Debug)]
pub enum Recipe {
    /// c + x + 2(g(x+1) - g(x)), c odd.
    Delta { g: Expr, c: u64 },
    Compose { f: Expr, g: Expr, variant: ComposeVariant },
    /// H_j = c_j + x + 4 f_j over a family of size 2^k; the sum of c_j must be odd.
    WpEven { cs: Vec<u64>, fs: Vec<Expr> },
    /// H_j = d_j op f_j with f_j ergodic and d built from the single-cycle permutation `u`.
    WpOdd { fs: Vec<Expr>, u: Vec<usize>, z: usize, op: JoinOp },
    /// Odd count of ergodic members followed by members x ^ 2h with h measure preserving.
    WpMixed { ergodic: Vec<Expr>, hs: Vec<Expr> },
    /// State i + x + 2(v_i(x+1) - v_i(x)), output h_i(pi(x)) with h_i = 1 + x + 2(w_i(x+1) - w_i(x)).
    Intro { vs: Vec<Expr>, ws: Vec<Expr> },
    /// a x + a^x
    Exp { a: u64 },
    /// inv(2x - 1) - x
    Inverse,
    /// Output h_j(pi(x)) over the family fs.
    ReverseOutput { fs: Vec<Expr>, hs: Vec<Expr> },
    /// Congruential 2k-bit state with the folded reversal output.
    Foldrev { f: Expr },
}

fn bad(msg: impl Into<String>) -> GenError {
    GenError::Recipe(msg.into())
}

fn delta_of(g: &Expr) -> Expr {
    g.substitute_x(&x().add(c(1))).sub(g.clone())
}

/// 1 + x + 2(g(x+1) - g(x)), ergodic for every compatible g.
fn ergodic_from(konst: Expr, g: &Expr) -> Expr {
    konst.add(x()).add(c(2).mul(delta_of(g)))
}

fn require_compatible(e: &Expr, what: &str) -> Result<(), GenError> {
    match structural_compatibility(e) {
        Compatibility::Incompatible(node) => Err(bad(format!("{what} is incompatible at `{node}`"))),
        _ => Ok(()),
    }
}

fn require_ergodic(e: &Expr, what: &str, n: u32) -> Result<(), GenError> {
    require_compatible(e, what)?;
    let t = anf(e, n.min(CHECK_WIDTH)).map_err(|err| bad(format!("{what}: {err}")))?;
    match t.first_non_ergodic_row() {
        None => Ok(()),
        Some(row) => Err(bad(format!("{what} is not ergodic (row {row})"))),
    }
}

fn require_measure_preserving(e: &Expr, what: &str, n: u32) -> Result<(), GenError> {
    require_compatible(e, what)?;
    let t = anf(e, n.min(CHECK_WIDTH)).map_err(|err| bad(format!("{what}: {err}")))?;
    if t.is_measure_preserving() {
        Ok(())
    } else {
        Err(bad(format!("{what} is not measure preserving")))
    }
}

fn pow2(k: u32) -> Option<u64> {
    1u64.checked_shl(k)
}

fn single(f: Expr, n: u32, seed: u64, theorem: &str) -> GeneratorSpec {
    let mut s = GeneratorSpec::congruential(f, n, seed);
    s.guarantee = Some(Guarantee { theorem: theorem.into(), period: pow2(n), multiplicity: Some(1) });
    s
}

fn wreath(fs: Vec<Expr>, outs: Vec<OutputDescriptor>, n: u32, seed: u64, theorem: &str) -> GeneratorSpec {
    let m = fs.len();
    GeneratorSpec {
        kind: Kind::Wreath,
        n,
        m,
        fs: fs.into_iter().map(Law::Expr).collect(),
        outs,
        seed: seed.into(),
        perm: None,
        guarantee: Some(Guarantee {
            theorem: theorem.into(),
            period: pow2(n).and_then(|p| p.checked_mul(m as u64)),
            multiplicity: Some(m as u64),
        }),
    }
}

/// The sequence d_i for the odd-family recipe: u^(i)(z), plus 1 when m = 3 mod 4 (not
/// reduced mod m, so that the sum stays even).
pub(crate) fn odd_family_offsets(u: &[usize], z: usize) -> Result<Vec<u64>, GenError> {
    let m = u.len();
    if m < 3 || m % 2 == 0 {
        return Err(bad(format!("family size must be odd and > 1, got {m}")));
    }
    if z >= m {
        return Err(bad(format!("start point {z} out of range")));
    }
    let mut seen = vec![false; m];
    let mut v = z;
    let mut d = Vec::with_capacity(m);
    for _ in 0..m {
        if v >= m || seen[v] {
            return Err(bad("u is not a single-cycle permutation"));
        }
        seen[v] = true;
        d.push(v as u64 + u64::from(m % 4 == 3));
        v = u[v];
    }
    if v != z {
        return Err(bad("u is not a single-cycle permutation"));
    }
    Ok(d)
}

pub fn make_recipe(r: &Recipe, n: u32, seed: u64) -> Result<GeneratorSpec, GenError> {
    if n == 0 {
        return Err(GenError::ZeroWidth);
    }
    let spec = match r {
        Recipe::Delta { g, c: k } => {
            if k % 2 == 0 {
                return Err(bad("the constant must be odd"));
            }
            require_compatible(g, "g")?;
            single(ergodic_from(c(*k), g), n, seed, "c + x + 2(g(x+1) - g(x)) with odd c is ergodic")
        }
        Recipe::Compose { f, g, variant } => {
            require_ergodic(f, "f", n)?;
            require_compatible(g, "g")?;
            let four_g = c(4).mul(g.clone());
            let law = match variant {
                ComposeVariant::InnerAdd => f.substitute_x(&x().add(four_g)),
                ComposeVariant::InnerXor => f.substitute_x(&x().xor(four_g)),
                ComposeVariant::OuterAdd => f.clone().add(four_g),
                ComposeVariant::OuterXor => f.clone().xor(four_g),
            };
            single(law, n, seed, "ergodic f perturbed by 4g stays ergodic")
        }
        Recipe::WpEven { cs, fs } => {
            let size = cs.len();
            if size != fs.len() || !size.is_power_of_two() {
                return Err(bad(format!("need 2^k constants and laws, got {} and {}", size, fs.len())));
            }
            if cs.iter().sum::<u64>() % 2 == 0 {
                return Err(GenError::WreathSum);
            }
            for (j, f) in fs.iter().enumerate() {
                require_compatible(f, &format!("f_{j}"))?;
            }
            let hs = cs.iter().zip(fs).map(|(&cj, f)| c(cj).add(x()).add(c(4).mul(f.clone()))).collect();
            wreath(hs, vec![OutputDescriptor::Identity], n, seed, "H_j = c_j + x + 4f_j over 2^k laws with odd sum of c_j")
        }
        Recipe::WpOdd { fs, u, z, op } => {
            if fs.len() != u.len() {
                return Err(bad("u must permute the family indices"));
            }
            let d = odd_family_offsets(u, *z)?;
            for (j, f) in fs.iter().enumerate() {
                require_ergodic(f, &format!("f_{j}"), n)?;
            }
            let hs = d
                .iter()
                .zip(fs)
                .map(|(&dj, f)| match op {
                    JoinOp::Xor => c(dj).xor(f.clone()),
                    JoinOp::Add => c(dj).add(f.clone()),
                })
                .collect();
            wreath(hs, vec![OutputDescriptor::Identity], n, seed, "d_j combined with ergodic f_j over an odd family")
        }
        Recipe::WpMixed { ergodic, hs } => {
            let s = ergodic.len();
            let m = s + hs.len();
            if s % 2 == 0 || m % 2 == 0 || hs.is_empty() {
                return Err(bad(format!("need an odd number of ergodic members and an odd family size, got {s} of {m}")));
            }
            for (j, g) in ergodic.iter().enumerate() {
                require_ergodic(g, &format!("g_{j}"), n)?;
            }
            let mut laws = ergodic.clone();
            for (k, h) in hs.iter().enumerate() {
                require_measure_preserving(h, &format!("h_{k}"), n)?;
                laws.push(x().xor(c(2).mul(h.clone())));
            }
            wreath(laws, vec![OutputDescriptor::Identity], n, seed, "odd count of ergodic members with x ^ 2h members")
        }
        Recipe::Intro { vs, ws } => {
            let m = vs.len();
            if m != ws.len() || m % 4 != 3 {
                return Err(bad(format!("need m = 3 mod 4 state and output laws, got {} and {}", vs.len(), ws.len())));
            }
            let mut fs = Vec::with_capacity(m);
            let mut outs = Vec::with_capacity(m);
            for (j, (v, w)) in vs.iter().zip(ws).enumerate() {
                require_compatible(v, &format!("v_{j}"))?;
                require_compatible(w, &format!("w_{j}"))?;
                fs.push(ergodic_from(Expr::Counter, v));
                outs.push(OutputDescriptor::ReverseCompose(ergodic_from(c(1), w)));
            }
            wreath(fs, outs, n, seed, "counter-dependent state i + x + 2 delta v_i with reversed output")
        }
        Recipe::Exp { a } => {
            if a % 2 == 0 {
                return Err(bad("the base must be odd"));
            }
            single(c(*a).mul(x()).add(Expr::Exp((*a).into(), Box::new(x()))), n, seed, "a x + a^x with odd a is ergodic")
        }
        Recipe::Inverse => {
            let law = Expr::Inv(Box::new(c(2).mul(x()).sub(c(1)))).sub(x());
            single(law, n, seed, "inv(2x - 1) - x is ergodic")
        }
        Recipe::ReverseOutput { fs, hs } => {
            if hs.len() != 1 && hs.len() != fs.len() {
                return Err(bad("need one output law or one per state law"));
            }
            for (j, h) in hs.iter().enumerate() {
                require_ergodic(h, &format!("h_{j}"), n)?;
            }
            let outs = hs.iter().cloned().map(OutputDescriptor::ReverseCompose).collect();
            if fs.len() == 1 {
                require_ergodic(&fs[0], "f", n)?;
                let mut s = single(fs[0].clone(), n, seed, "ergodic state with output h(pi(x)): every coordinate has period 2^n");
                s.outs = outs;
                s
            } else {
                wreath(fs.clone(), outs, n, seed, "wreath state with output h_j(pi(x))")
            }
        }
        Recipe::Foldrev { f } => {
            if n % 2 == 1 {
                return Err(bad("fold-reverse needs an even state width"));
            }
            require_ergodic(f, "f", n)?;
            let mut s = single(f.clone(), n, seed, "fold-reverse output over an ergodic 2k-bit state");
            s.outs = vec![OutputDescriptor::Foldrev(n / 2)];
            s.guarantee.as_mut().unwrap().multiplicity = pow2(n / 2);
            s
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// x+1 alternating with 1 ^ (x+1); evaluated as given, with no guarantee attached.
pub fn degenerate_intro_family(m: usize) -> Vec<Law> {
    (0..m).map(|j| Law::Expr(if j % 2 == 0 { x().add(c(1)) } else { c(1).xor(x().add(c(1))) })).collect()
}
