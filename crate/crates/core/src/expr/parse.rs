use super::{BinaryOp, Expr, ExprError, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the next token and its byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|n| (Tok::Num(n), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            return Ok((Tok::Ident(s.to_string()), start));
        }
        self.pos += 1;
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<f64, ExprError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ExprError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // "2e" followed by something else: not an exponent.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|e| ExprError::Syntax {
            offset: start,
            message: e.to_string(),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    vars: &'a [&'a str],
}

/// Parse `text` as an expression over the declared `variables`.
pub fn parse(text: &str, variables: &[&str]) -> Result<Expr, ExprError> {
    let mut lexer = Lexer {
        src: text.as_bytes(),
        pos: 0,
    };
    let (tok, offset) = lexer.next()?;
    let mut p = Parser {
        lexer,
        tok,
        offset,
        vars: variables,
    };
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (t, o) = self.lexer.next()?;
        self.tok = t;
        self.offset = o;
        Ok(())
    }

    fn unexpected(&self) -> ExprError {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            t => format!("unexpected token {t:?}"),
        };
        ExprError::Syntax {
            offset: self.offset,
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Op('-') {
            // `-` glued to a literal is a negative constant.
            let minus_end = self.offset + 1;
            self.bump()?;
            if let Tok::Num(v) = self.tok {
                if self.offset == minus_end {
                    self.bump()?;
                    return self.power_tail(Expr::Const(-v));
                }
            }
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        let base = self.primary()?;
        self.power_tail(base)
    }

    fn power_tail(&mut self, mut base: Expr) -> Result<Expr, ExprError> {
        while self.tok == Tok::Op('^') {
            self.bump()?;
            let negative = if self.tok == Tok::Op('-') {
                self.bump()?;
                true
            } else {
                false
            };
            let n = match self.tok {
                Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
                _ => {
                    return Err(ExprError::Syntax {
                        offset: self.offset,
                        message: "exponent must be an integer literal".into(),
                    })
                }
            };
            self.bump()?;
            base = Expr::Pow(Box::new(base), if negative { -n } else { n });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected());
                }
                self.bump()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.offset;
                self.bump()?;
                if self.tok == Tok::LParen {
                    let op = UnaryOp::from_name(&name).ok_or(ExprError::UnknownFunction {
                        name: name.clone(),
                        offset: at,
                    })?;
                    self.bump()?;
                    let arg = self.expr()?;
                    if self.tok != Tok::RParen {
                        return Err(self.unexpected());
                    }
                    self.bump()?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                if self.vars.contains(&name.as_str()) {
                    Ok(Expr::var(&name))
                } else {
                    Err(ExprError::UnknownIdentifier { name, offset: at })
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_zero_keeps_structure() {
        let e = parse("x + 0", &["x"]).unwrap();
        assert_eq!(
            e,
            Expr::Binary(BinaryOp::Add, Box::new(Expr::var("x")), Box::new(Expr::Const(0.0)))
        );
    }

    #[test]
    fn function_times_variable() {
        let e = parse("sin(z1)*z2", &["z1", "z2"]).unwrap();
        let expected = Expr::Binary(
            BinaryOp::Mul,
            Box::new(Expr::Unary(UnaryOp::Sin, Box::new(Expr::var("z1")))),
            Box::new(Expr::var("z2")),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn syntax_error_reports_offset() {
        match parse("x +* 2", &["x"]) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(
            parse("x + y", &["x"]),
            Err(ExprError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            parse("log(x)", &["x"]),
            Err(ExprError::UnknownFunction { offset: 0, .. })
        ));
        assert!(matches!(parse("", &["x"]), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("x^0.5", &["x"]), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("(x", &["x"]), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn precedence_and_literals() {
        let e = parse("-x^2 * 3 - 2.5e-1", &["x"]).unwrap();
        // (-(x^2) * 3) - 0.25
        let lhs = Expr::Binary(
            BinaryOp::Mul,
            Box::new(Expr::Unary(
                UnaryOp::Neg,
                Box::new(Expr::Pow(Box::new(Expr::var("x")), 2)),
            )),
            Box::new(Expr::Const(3.0)),
        );
        assert_eq!(
            e,
            Expr::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(Expr::Const(0.25)))
        );
        assert_eq!(parse("-2", &[]).unwrap(), Expr::Const(-2.0));
        assert_eq!(
            parse("- 2", &[]).unwrap(),
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Const(2.0)))
        );
        assert_eq!(
            parse("x^-2", &["x"]).unwrap(),
            Expr::Pow(Box::new(Expr::var("x")), -2)
        );
    }
}
