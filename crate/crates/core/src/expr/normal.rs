//! Expanded polynomial normal form, used only to prove expressions zero.
//!
//! Function calls and reciprocals of non-monomial denominators become opaque
//! atoms keyed by the canonical form of their argument, so `sin(x + y)` and
//! `sin(y + x)` share one atom.

use std::collections::BTreeMap;

use super::{BinaryOp, Expr, UnaryOp};

type Monomial = BTreeMap<String, i32>;

const DROP: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    fn constant(c: f64) -> Self {
        let mut p = Poly::default();
        if c != 0.0 {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    fn atom(key: String) -> Self {
        let mut m = Monomial::new();
        m.insert(key, 1);
        let mut p = Poly::default();
        p.terms.insert(m, 1.0);
        p
    }

    pub(crate) fn is_zero(&self) -> bool {
        let scale = self.terms.values().fold(1.0f64, |s, c| s.max(c.abs()));
        self.terms.values().all(|c| c.abs() <= DROP * scale)
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() > DROP);
        self
    }

    fn add(mut self, other: &Poly, sign: f64) -> Self {
        for (m, c) in &other.terms {
            *self.terms.entry(m.clone()).or_insert(0.0) += sign * c;
        }
        self.prune()
    }

    fn mul(&self, other: &Poly) -> Self {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (k, e) in m2 {
                    let slot = m.entry(k.clone()).or_insert(0);
                    *slot += e;
                    if *slot == 0 {
                        m.remove(k);
                    }
                }
                *out.terms.entry(m).or_insert(0.0) += c1 * c2;
            }
        }
        out.prune()
    }

    fn as_monomial(&self) -> Option<(&Monomial, f64)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (m, *c))
        } else {
            None
        }
    }

    fn reciprocal(&self) -> Poly {
        match self.as_monomial() {
            Some((m, c)) => {
                let inv: Monomial = m.iter().map(|(k, e)| (k.clone(), -e)).collect();
                let mut p = Poly::default();
                p.terms.insert(inv, 1.0 / c);
                p
            }
            None => Poly::atom(format!("1/({})", self.canonical())),
        }
    }

    fn powi(&self, n: i32) -> Poly {
        let base = if n < 0 { self.reciprocal() } else { self.clone() };
        let mut out = Poly::constant(1.0);
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    fn canonical(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let atoms: Vec<String> = m.iter().map(|(k, e)| format!("{k}^{e}")).collect();
                format!("{c:e}*{}", atoms.join("*"))
            })
            .collect();
        parts.join("+")
    }

    pub(crate) fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Const(c) => Poly::constant(*c),
            Expr::Var(v) => Poly::atom(v.to_string()),
            Expr::Unary(UnaryOp::Neg, a) => Poly::default().add(&Poly::from_expr(a), -1.0),
            Expr::Unary(op, a) => {
                let arg = Poly::from_expr(a);
                match (op, arg.terms.is_empty()) {
                    // exact values at a zero argument
                    (UnaryOp::Sin | UnaryOp::Tanh | UnaryOp::Sqrt, true) => Poly::default(),
                    (UnaryOp::Cos | UnaryOp::Exp, true) => Poly::constant(1.0),
                    _ => Poly::atom(format!("{}({})", op.name(), arg.canonical())),
                }
            }
            Expr::Pow(a, n) => Poly::from_expr(a).powi(*n),
            Expr::Binary(op, a, b) => {
                let pa = Poly::from_expr(a);
                let pb = Poly::from_expr(b);
                match op {
                    BinaryOp::Add => pa.add(&pb, 1.0),
                    BinaryOp::Sub => pa.add(&pb, -1.0),
                    BinaryOp::Mul => pa.mul(&pb),
                    BinaryOp::Div => pa.mul(&pb.reciprocal()),
                }
            }
        }
    }
}
