//! Arithmetic expressions over `t` and `xi_1 .. xi_p`.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter than
//! unary minus):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'pi' | 'xi_k' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Atan,
    Sqrt,
    Abs,
    Min,
    Max,
    Exp,
    Norm,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan" => Func::Atan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "exp" => Func::Exp,
            "norm" => Func::Norm,
            _ => return None,
        })
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max | Func::Norm => n >= 1,
            _ => n == 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    /// Zero-based component of `xi`.
    Xi(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn eval<T: Real>(&self, t: T, xi: &[T]) -> T {
        match self {
            Expr::Num(v) => T::lit(*v),
            Expr::Time => t,
            Expr::Xi(i) => xi[*i],
            Expr::Neg(e) => -e.eval(t, xi),
            Expr::Bin(op, a, b) => {
                let x = a.eval(t, xi);
                match op {
                    BinOp::Add => x + b.eval(t, xi),
                    BinOp::Sub => x - b.eval(t, xi),
                    BinOp::Mul => x * b.eval(t, xi),
                    BinOp::Div => x / b.eval(t, xi),
                    BinOp::Pow => match **b {
                        // integer literal exponents stay exact for negative bases
                        Expr::Num(n) if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 => {
                            x.powi(n as i32)
                        }
                        _ => x.powf(b.eval(t, xi)),
                    },
                }
            }
            Expr::Call(f, args) => {
                let mut vals = args.iter().map(|a| a.eval(t, xi));
                match f {
                    Func::Min => vals.fold(T::infinity(), T::min),
                    Func::Max => vals.fold(T::neg_infinity(), T::max),
                    Func::Norm => {
                        let v: Vec<T> = vals.collect();
                        crate::linalg::norm(&v)
                    }
                    _ => {
                        let x = vals.next().unwrap_or_else(T::nan);
                        match f {
                            Func::Sin => x.sin(),
                            Func::Cos => x.cos(),
                            Func::Atan => x.atan(),
                            Func::Sqrt => x.sqrt(),
                            Func::Abs => x.abs(),
                            Func::Exp => x.exp(),
                            Func::Min | Func::Max | Func::Norm => unreachable!(),
                        }
                    }
                }
            }
        }
    }

    /// Whether `t` occurs anywhere in the expression.
    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Num(_) | Expr::Xi(_) => false,
            Expr::Neg(e) => e.uses_time(),
            Expr::Bin(_, a, b) => a.uses_time() || b.uses_time(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_time),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{text}' at column {}", start + 1)))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse(format!(
                "unexpected character '{c}' at column {}",
                i + 1
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    p: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map_or(self.src.len(), |(c, _)| *c)
            + 1
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at column {} in '{}'",
            self.column(),
            self.src
        ))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.eat('+');
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end of expression"))?;
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::lookup(&name) {
                    self.pos += 1;
                    if !self.eat('(') {
                        return Err(self.err(&format!("expected '(' after '{name}'")));
                    }
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return Err(self.err("expected ')'"));
                    }
                    if !func.arity_ok(args.len()) {
                        return Err(self.err(&format!(
                            "wrong number of arguments ({}) for '{name}'",
                            args.len()
                        )));
                    }
                    return Ok(Expr::Call(func, args));
                }
                let e = match name.as_str() {
                    "t" => Expr::Time,
                    "pi" => Expr::Num(std::f64::consts::PI),
                    _ => match name.strip_prefix("xi_").and_then(|k| k.parse::<usize>().ok()) {
                        Some(k) if (1..=self.p).contains(&k) => Expr::Xi(k - 1),
                        Some(k) => {
                            return Err(self.err(&format!(
                                "variable xi_{k} out of range (p = {})",
                                self.p
                            )))
                        }
                        None => return Err(self.err(&format!("unknown identifier '{name}'"))),
                    },
                };
                self.pos += 1;
                Ok(e)
            }
            Tok::Op(c) => Err(self.err(&format!("unexpected '{c}'"))),
        }
    }
}

/// Parse `src` as an expression in `t` and `xi_1 .. xi_p`.
pub fn parse(src: &str, p: usize) -> Result<Expr> {
    let mut parser = Parser {
        toks: tokenize(src)?,
        pos: 0,
        p,
        src,
    };
    let e = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.err("trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64, xi: &[f64]) -> f64 {
        parse(src, xi.len()).unwrap().eval(t, xi)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, &[]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, &[]), -4.0);
        assert_eq!(ev("(1 - 2) - 3", 0.0, &[]), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, &[]), 1.0);
        assert_eq!(ev("1.5e1 + .5", 0.0, &[]), 15.5);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("xi_1 - atan(xi_1)", 0.0, &[2.0]);
        assert!((v - (2.0 - 2f64.atan())).abs() < 1e-15);
        assert_eq!(ev("norm(xi_1, xi_2)", 0.0, &[3.0, 4.0]), 5.0);
        assert_eq!(ev("max(t, xi_1, 0)", 2.0, &[1.0]), 2.0);
        assert_eq!(ev("min(1, t / 2)", 4.0, &[]), 1.0);
        assert_eq!(ev("(-2)^3", 0.0, &[]), -8.0);
    }

    #[test]
    fn errors_are_located() {
        for bad in ["xi_2", "1 +", "foo(1)", "sin(1, 2)", "1 $ 2", "(1", "1 2"] {
            let e = parse(bad, 1).unwrap_err();
            assert!(matches!(e, Error::Parse(_)), "{bad}: {e}");
        }
        let msg = parse("1 + xi_3", 2).unwrap_err().to_string();
        assert!(msg.contains("column 5"), "{msg}");
    }
}
