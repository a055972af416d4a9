use std::fmt;

use super::{BinaryOp, Expr, UnaryOp};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(_) | Expr::Var(_) => PREC_ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREC_UNARY,
        Expr::Unary(_, _) => PREC_ATOM,
        Expr::Pow(_, _) => PREC_POW,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => PREC_ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => PREC_MUL,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.is_sign_negative() {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var(v) => f.write_str(v),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                // Only bare names and calls may follow `-` unparenthesized; a
                // literal would be read back as a negative constant.
                let bare = matches!(**a, Expr::Var(_))
                    || matches!(**a, Expr::Unary(op, _) if op != UnaryOp::Neg)
                    || matches!(**a, Expr::Const(c) if c.is_sign_negative());
                write_child(f, a, !bare)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Pow(a, n) => {
                let bare = matches!(**a, Expr::Var(_))
                    || matches!(**a, Expr::Unary(op, _) if op != UnaryOp::Neg)
                    || matches!(**a, Expr::Const(_));
                write_child(f, a, !bare)?;
                write!(f, "^{n}")
            }
            Expr::Binary(op, a, b) => {
                let p = precedence(self);
                write_child(f, a, precedence(a) < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, precedence(b) <= p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn prints_readably() {
        let e = parse("x*z + exp(x) - (y - 1)/2", &["x", "y", "z"]).unwrap();
        assert_eq!(e.to_string(), "x * z + exp(x) - (y - 1.0) / 2.0");
        let e = parse("-(-2)^3 - -x", &["x"]).unwrap();
        assert_eq!(e.to_string(), "-((-2.0)^3) - -x");
    }
}
