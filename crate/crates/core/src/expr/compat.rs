use serde::Serialize;

use super::{const_valuation, Expr};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "node", rename_all = "snake_case")]
pub enum Compatibility {
    Compatible,
    /// Not structurally recognized; names the node kind.
    Unknown(String),
    /// A discarding or reordering node acts on the state path.
    Incompatible(String),
}

impl Compatibility {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Compatibility::Compatible)
    }
    pub fn is_incompatible(&self) -> bool {
        matches!(self, Compatibility::Incompatible(_))
    }
}

pub fn structural_compatibility(e: &Expr) -> Compatibility {
    let mut unknown = None;
    match walk(e, 0, &mut unknown) {
        Some(node) => Compatibility::Incompatible(node),
        None => match unknown {
            Some(node) => Compatibility::Unknown(node),
            None => Compatibility::Compatible,
        },
    }
}

fn floor_log2(k: u64) -> u64 {
    63 - k.leading_zeros() as u64
}

// `scale` is the 2-adic valuation of a constant factor directly multiplying this node.
fn walk(e: &Expr, scale: u64, unknown: &mut Option<String>) -> Option<String> {
    if !e.depends_on_x() {
        return None;
    }
    match e {
        Expr::Shr(_, m) if *m > 0 => return Some("shr".into()),
        Expr::Rev(_) => return Some("rev".into()),
        Expr::Bit(_, j) if *j > 0 => return Some("bit".into()),
        Expr::Binom(_, k) if *k >= 2 && scale < floor_log2(*k) => {
            unknown.get_or_insert_with(|| "binom".into());
        }
        _ => {}
    }
    let child_scales: Vec<(&Expr, u64)> = match e {
        Expr::Mul(a, b) => vec![(a.as_ref(), const_valuation(b).unwrap_or(0)), (b.as_ref(), const_valuation(a).unwrap_or(0))],
        Expr::Shl(a, m) => vec![(a.as_ref(), *m as u64)],
        _ => e.children().into_iter().map(|c| (c, 0)).collect(),
    };
    for (c, s) in child_scales {
        if let Some(bad) = walk(c, s, unknown) {
            return Some(bad);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn sc(s: &str) -> Compatibility {
        structural_compatibility(&parse(s).unwrap())
    }

    #[test]
    fn verdicts() {
        assert_eq!(sc("x + (x*x | 5)"), Compatibility::Compatible);
        assert_eq!(sc("shr(x, 1) + x"), Compatibility::Incompatible("shr".into()));
        assert_eq!(sc("x ^ (2*(x*x + inv(2*x+1)))"), Compatibility::Compatible);
        assert_eq!(sc("rev(x)"), Compatibility::Incompatible("rev".into()));
        assert_eq!(sc("x + shr(12, 1)"), Compatibility::Compatible);
        assert_eq!(sc("bit(x, 0)"), Compatibility::Compatible);
        assert_eq!(sc("bit(x, 1)"), Compatibility::Incompatible("bit".into()));
        assert_eq!(sc("binom(x, 3)"), Compatibility::Unknown("binom".into()));
        assert_eq!(sc("2*binom(x, 3)"), Compatibility::Compatible);
        assert_eq!(sc("binom(x, 4)*2"), Compatibility::Unknown("binom".into()));
        assert_eq!(sc("binom(x, 4)*4 + shl(binom(x, 7), 2)"), Compatibility::Compatible);
        assert_eq!(sc("binom(x, 1) + ff(x, 9)"), Compatibility::Compatible);
    }
}
