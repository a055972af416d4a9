use super::{BinaryOp, Expr, UnaryOp};

impl Expr {
    /// Exact partial derivative with respect to `var`.
    ///
    /// The result is built with the folding constructors, so identities such
    /// as `0 * e` and `1 * e` collapse, but no further simplification is done.
    pub fn differentiate(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if &**v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                if da.is_const(0.0) {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match op {
                    UnaryOp::Neg => return Expr::neg(da),
                    UnaryOp::Sin => Expr::unary(UnaryOp::Cos, a),
                    UnaryOp::Cos => Expr::neg(Expr::unary(UnaryOp::Sin, a)),
                    UnaryOp::Exp => Expr::unary(UnaryOp::Exp, a),
                    // 1 - tanh(a)^2
                    UnaryOp::Tanh => Expr::sub(
                        Expr::Const(1.0),
                        Expr::pow(Expr::unary(UnaryOp::Tanh, a), 2),
                    ),
                    // 1 / (2 sqrt(a))
                    UnaryOp::Sqrt => Expr::div(
                        Expr::Const(0.5),
                        Expr::unary(UnaryOp::Sqrt, a),
                    ),
                };
                Expr::mul(outer, da)
            }
            Expr::Pow(a, n) => {
                let da = a.differentiate(var);
                if da.is_const(0.0) {
                    return Expr::Const(0.0);
                }
                let n = *n;
                Expr::mul(
                    Expr::mul(Expr::Const(n as f64), Expr::pow((**a).clone(), n - 1)),
                    da,
                )
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                match op {
                    BinaryOp::Add => Expr::add(da, db),
                    BinaryOp::Sub => Expr::sub(da, db),
                    BinaryOp::Mul => Expr::add(
                        Expr::mul(da, (**b).clone()),
                        Expr::mul((**a).clone(), db),
                    ),
                    BinaryOp::Div => {
                        // (a'b - ab') / b^2
                        if db.is_const(0.0) {
                            return Expr::div(da, (**b).clone());
                        }
                        Expr::div(
                            Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                            Expr::pow((**b).clone(), 2),
                        )
                    }
                }
            }
        }
    }

    /// Gradient with respect to each name in `vars`.
    pub fn gradient(&self, vars: &[&str]) -> Vec<Expr> {
        vars.iter().map(|v| self.differentiate(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, VarBinding};

    #[test]
    fn identity_and_sine() {
        let z = parse("z", &["z"]).unwrap();
        assert_eq!(z.differentiate("z").to_string(), "1.0");
        let s = parse("sin(z)", &["z"]).unwrap();
        assert_eq!(s.differentiate("z").to_string(), "cos(z)");
    }

    #[test]
    fn product_and_exponential_at_point() {
        let e = parse("x*z + exp(x)", &["x", "z"]).unwrap();
        let d = e.differentiate("x");
        let b = VarBinding::from_pairs(&[("x", 0.0), ("z", 2.0)]);
        let exact = d.evaluate(&b).unwrap();
        assert!((exact - 3.0).abs() < 1e-15);
        // central difference with step 1e-5
        let step = 1e-5;
        let f = |x: f64| e.evaluate(&VarBinding::from_pairs(&[("x", x), ("z", 2.0)])).unwrap();
        let fd = (f(step) - f(-step)) / (2.0 * step);
        assert!((fd - exact).abs() < 1e-8, "fd={fd}");
    }

    #[test]
    fn quotient_power_sqrt_tanh() {
        let e = parse("sqrt(1 + x^2) / (2 + tanh(x)) + x^-2", &["x"]).unwrap();
        let d = e.differentiate("x");
        for &x in &[-1.7, -0.3, 0.4, 1.9] {
            let f = |x: f64| e.evaluate(&VarBinding::from_pairs(&[("x", x)])).unwrap();
            let h = 1e-5;
            let fd = (f(x + h) - f(x - h)) / (2.0 * h);
            let ex = d.evaluate(&VarBinding::from_pairs(&[("x", x)])).unwrap();
            assert!((fd - ex).abs() < 1e-7 * (1.0 + ex.abs()), "x={x} fd={fd} ex={ex}");
        }
    }

    #[test]
    fn constant_in_var_gives_zero() {
        let e = parse("cos(y) * 3", &["y", "z"]).unwrap();
        assert!(e.differentiate("z").is_const(0.0));
    }
}
