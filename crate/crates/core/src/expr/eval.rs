use std::collections::HashMap;

use super::{BinaryOp, Expr, ExprError, NodePath, UnaryOp};

/// Values for the free variables of an expression.
#[derive(Debug, Clone, Default)]
pub struct VarBinding {
    values: HashMap<String, f64>,
}

impl VarBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let mut b = Self::new();
        for (k, v) in pairs {
            b.set(k, *v);
        }
        b
    }

    pub fn set(&mut self, name: &str, value: f64) -> &mut Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

fn apply_unary(op: UnaryOp, a: f64, node: &dyn Fn() -> NodePath) -> Result<f64, ExprError> {
    Ok(match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Exp => a.exp(),
        UnaryOp::Tanh => a.tanh(),
        UnaryOp::Sqrt => {
            if a < 0.0 {
                return Err(ExprError::Domain {
                    message: format!("sqrt of negative value {a}"),
                    node: node(),
                });
            }
            a.sqrt()
        }
    })
}

fn apply_binary(op: BinaryOp, a: f64, b: f64, node: &dyn Fn() -> NodePath) -> Result<f64, ExprError> {
    Ok(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == 0.0 {
                return Err(ExprError::DivisionByZero { node: node() });
            }
            a / b
        }
    })
}

fn pow_checked(a: f64, n: i32, node: &dyn Fn() -> NodePath) -> Result<f64, ExprError> {
    if n < 0 && a == 0.0 {
        return Err(ExprError::DivisionByZero { node: node() });
    }
    Ok(a.powi(n))
}

impl Expr {
    pub fn evaluate(&self, b: &VarBinding) -> Result<f64, ExprError> {
        let mut path = Vec::new();
        self.eval_at(b, &mut path)
    }

    fn eval_at(&self, b: &VarBinding, path: &mut Vec<u8>) -> Result<f64, ExprError> {
        let here = |p: &Vec<u8>| NodePath(p.clone());
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => b.get(v).ok_or_else(|| ExprError::UnboundVariable {
                name: v.to_string(),
                node: here(path),
            }),
            Expr::Unary(op, a) => {
                path.push(0);
                let x = a.eval_at(b, path)?;
                path.pop();
                apply_unary(*op, x, &|| here(path))
            }
            Expr::Pow(a, n) => {
                path.push(0);
                let x = a.eval_at(b, path)?;
                path.pop();
                pow_checked(x, *n, &|| here(path))
            }
            Expr::Binary(op, l, r) => {
                path.push(0);
                let x = l.eval_at(b, path)?;
                path.pop();
                path.push(1);
                let y = r.eval_at(b, path)?;
                path.pop();
                apply_binary(*op, x, y, &|| here(path))
            }
        }
    }

    /// Evaluate with variables given positionally, matching `names`.
    pub fn evaluate_with(&self, names: &[&str], values: &[f64]) -> Result<f64, ExprError> {
        let mut b = VarBinding::new();
        for (n, v) in names.iter().zip(values) {
            b.set(n, *v);
        }
        self.evaluate(&b)
    }
}

#[derive(Debug, Clone)]
enum Instr {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32),
    Pow(i32, u32),
}

/// Postfix program over a fixed variable order, for hot evaluation loops.
///
/// Error locations index into a side table so the program itself stays
/// compact.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    program: Vec<Instr>,
    paths: Vec<NodePath>,
    names: Vec<String>,
    max_stack: usize,
}

impl CompiledExpr {
    /// Compile `e` for evaluation with values supplied in the order of
    /// `names`. Fails if a free variable is missing from `names`.
    pub fn new(e: &Expr, names: &[&str]) -> Result<Self, ExprError> {
        let mut c = CompiledExpr {
            program: Vec::with_capacity(e.node_count()),
            paths: Vec::new(),
            names: names.iter().map(|s| s.to_string()).collect(),
            max_stack: 0,
        };
        let mut path = Vec::new();
        let mut depth = 0;
        c.emit(e, names, &mut path, &mut depth)?;
        Ok(c)
    }

    fn emit(
        &mut self,
        e: &Expr,
        names: &[&str],
        path: &mut Vec<u8>,
        depth: &mut usize,
    ) -> Result<(), ExprError> {
        match e {
            Expr::Const(v) => {
                self.program.push(Instr::Const(*v));
                *depth += 1;
            }
            Expr::Var(v) => {
                let slot = names.iter().position(|n| *n == &**v).ok_or_else(|| {
                    ExprError::UnboundVariable {
                        name: v.to_string(),
                        node: NodePath(path.clone()),
                    }
                })?;
                self.program.push(Instr::Slot(slot));
                *depth += 1;
            }
            Expr::Unary(op, a) => {
                path.push(0);
                self.emit(a, names, path, depth)?;
                path.pop();
                let id = self.record(path);
                self.program.push(Instr::Unary(*op, id));
            }
            Expr::Pow(a, n) => {
                path.push(0);
                self.emit(a, names, path, depth)?;
                path.pop();
                let id = self.record(path);
                self.program.push(Instr::Pow(*n, id));
            }
            Expr::Binary(op, l, r) => {
                path.push(0);
                self.emit(l, names, path, depth)?;
                path.pop();
                path.push(1);
                self.emit(r, names, path, depth)?;
                path.pop();
                let id = self.record(path);
                self.program.push(Instr::Binary(*op, id));
                *depth -= 1;
            }
        }
        self.max_stack = self.max_stack.max(*depth);
        Ok(())
    }

    fn record(&mut self, path: &[u8]) -> u32 {
        self.paths.push(NodePath(path.to_vec()));
        (self.paths.len() - 1) as u32
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        const INLINE: usize = 32;
        if self.max_stack <= INLINE {
            let mut buf = [0.0f64; INLINE];
            self.run(values, &mut buf)
        } else {
            let mut buf = vec![0.0f64; self.max_stack];
            self.run(values, &mut buf)
        }
    }

    fn run(&self, values: &[f64], stack: &mut [f64]) -> Result<f64, ExprError> {
        let mut top = 0usize;
        for ins in &self.program {
            match *ins {
                Instr::Const(v) => {
                    stack[top] = v;
                    top += 1;
                }
                Instr::Slot(i) => {
                    stack[top] = values[i];
                    top += 1;
                }
                Instr::Unary(op, id) => {
                    stack[top - 1] = apply_unary(op, stack[top - 1], &|| self.paths[id as usize].clone())?;
                }
                Instr::Pow(n, id) => {
                    stack[top - 1] = pow_checked(stack[top - 1], n, &|| self.paths[id as usize].clone())?;
                }
                Instr::Binary(op, id) => {
                    top -= 1;
                    stack[top - 1] =
                        apply_binary(op, stack[top - 1], stack[top], &|| self.paths[id as usize].clone())?;
                }
            }
        }
        Ok(stack[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn simple_values() {
        let e = parse("x+1", &["x"]).unwrap();
        assert_eq!(e.evaluate(&VarBinding::from_pairs(&[("x", 0.0)])).unwrap(), 1.0);
        let e = parse("tanh(0.5)*2", &[]).unwrap();
        let v = e.evaluate(&VarBinding::new()).unwrap();
        assert!((v - 2.0 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((v - 0.924_234_314_4).abs() < 1e-9);
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse("1/x", &["x"]).unwrap();
        let err = e.evaluate(&VarBinding::from_pairs(&[("x", 0.0)])).unwrap_err();
        assert_eq!(err, ExprError::DivisionByZero { node: NodePath(vec![]) });

        let e = parse("2 + sqrt(x - 3)", &["x"]).unwrap();
        match e.evaluate(&VarBinding::from_pairs(&[("x", 1.0)])) {
            Err(ExprError::Domain { node, .. }) => assert_eq!(node.to_string(), "root.1"),
            other => panic!("{other:?}"),
        }
        let e = parse("x * y", &["x", "y"]).unwrap();
        match e.evaluate(&VarBinding::from_pairs(&[("x", 1.0)])) {
            Err(ExprError::UnboundVariable { name, node }) => {
                assert_eq!(name, "y");
                assert_eq!(node, NodePath(vec![1]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compiled_matches_tree() {
        let e = parse("sin(x)*y^3 - exp(-x)/(1 + y^2) + sqrt(2 + cos(x*y))", &["x", "y"]).unwrap();
        let c = CompiledExpr::new(&e, &["x", "y"]).unwrap();
        for i in 0..20 {
            let x = -2.0 + 0.2 * i as f64;
            let y = 1.5 - 0.17 * i as f64;
            let a = e.evaluate(&VarBinding::from_pairs(&[("x", x), ("y", y)])).unwrap();
            assert_eq!(a.to_bits(), c.eval(&[x, y]).unwrap().to_bits());
        }
        let inv = CompiledExpr::new(&parse("1/(x-x)", &["x"]).unwrap(), &["x"]).unwrap();
        assert!(matches!(inv.eval(&[1.0]), Err(ExprError::DivisionByZero { .. })));
        assert!(CompiledExpr::new(&e, &["x"]).is_err());
    }
}
