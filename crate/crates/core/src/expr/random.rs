//! Random compatible expressions, for recipes and tests.

use rand::Rng;

use super::{c, x, Expr};

/// A random expression built from compatible nodes only.
pub fn random_compatible<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return if rng.gen_bool(0.6) { x() } else { c(rng.gen_range(0..64)) };
    }
    let sub = |rng: &mut R| Box::new(random_compatible(rng, depth - 1));
    match rng.gen_range(0..12) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Sub(sub(rng), sub(rng)),
        2 => Expr::Mul(sub(rng), sub(rng)),
        3 => Expr::Xor(sub(rng), sub(rng)),
        4 => Expr::And(sub(rng), sub(rng)),
        5 => Expr::Or(sub(rng), sub(rng)),
        6 => Expr::Neg(sub(rng)),
        7 => Expr::Shl(sub(rng), rng.gen_range(0..3)),
        8 => Expr::Mask(sub(rng), rng.gen_range(0u64..256).into()),
        9 => Expr::Inv(Box::new(c(1).add(c(2).mul(random_compatible(rng, depth - 1))))),
        10 => Expr::Exp((2 * rng.gen_range(0u64..8) + 1).into(), sub(rng)),
        _ => Expr::Div1p(sub(rng), sub(rng)),
    }
}

/// A random compatible measure-preserving law: x ^ 2g or x + 2g with g compatible.
pub fn random_measure_preserving<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    let g = c(2).mul(random_compatible(rng, depth));
    if rng.gen_bool(0.5) {
        x().xor(g)
    } else {
        x().add(g)
    }
}

/// A random ergodic law 1 + x + 2(g(x+1) - g(x)).
pub fn random_ergodic<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    let g = random_compatible(rng, depth);
    let dg = g.substitute_x(&x().add(c(1))).sub(g);
    c(1).add(x()).add(c(2).mul(dg))
}
