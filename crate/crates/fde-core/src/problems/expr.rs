//! Recursive-descent parser and evaluator for the small expression language
//! used in problem-definition files.
//!
//! Grammar (precedence low to high): + -, * /, ^ (right-associative),
//! unary minus binding tighter than ^, so "-t^2" is (-t)^2. Variables are
//! t, u, v; `e` and `pi` are constants; functions are exp, log, sqrt,
//! sin, cos, abs and two-argument pow.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {}", expected.join(", "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable '{name}' not supplied")]
    MissingVariable { name: char },
    #[error("domain error: {function}({argument}) is undefined")]
    DomainError { function: String, argument: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    U,
    V,
}

impl Var {
    fn symbol(self) -> char {
        match self {
            Var::T => 't',
            Var::U => 'u',
            Var::V => 'v',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
    Pow,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "abs" => Some(Func::Abs),
            "pow" => Some(Func::Pow),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree over variables {t, u, v}.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    ConstE,
    ConstPi,
    Variable(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&[&format!("'{}'", c as char)]))
        }
    }

    fn syntax(&mut self, expected: &[&str]) -> ExprError {
        self.skip_ws();
        ExprError::Syntax {
            offset: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // factor := unary ('^' factor)?   (right-associative)
    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    // unary := '-' unary | primary   (binds tighter than '^')
    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.syntax(&["number", "identifier", "'('", "'-'"])),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Exponent suffix; requires at least one digit after e/E and sign.
        if matches!(self.src.get(self.pos), Some(&b'e') | Some(&b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(&b'+') | Some(&b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Number)
            .map_err(|_| ExprError::Syntax {
                offset: start,
                expected: vec!["number".to_string()],
            })
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "t" => Ok(Expr::Variable(Var::T)),
            "u" => Ok(Expr::Variable(Var::U)),
            "v" => Ok(Expr::Variable(Var::V)),
            "e" => Ok(Expr::ConstE),
            "pi" => Ok(Expr::ConstPi),
            _ => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(b'(')?;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(b')')?;
                    if args.len() != func.arity() {
                        return Err(ExprError::Syntax {
                            offset: start,
                            expected: vec![format!(
                                "{} argument(s) to {}",
                                func.arity(),
                                func.name()
                            )],
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    Err(ExprError::UnknownIdentifier {
                        name,
                        offset: start,
                    })
                }
            }
        }
    }
}

/// Parse an expression over (t, u, v).
pub fn parse_expr(source: &str) -> Result<Expr, ExprError> {
    let mut parser = Parser::new(source);
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.syntax(&["end of input", "operator"]));
    }
    Ok(expr)
}

/// Evaluate with the supplied variable bindings. Domain violations (log of
/// a non-positive number, fractional power of a negative base) are errors,
/// never NaNs.
pub fn eval_expr(
    expr: &Expr,
    t: f64,
    u: Option<f64>,
    v: Option<f64>,
) -> Result<f64, ExprError> {
    match expr {
        Expr::Number(x) => Ok(*x),
        Expr::ConstE => Ok(std::f64::consts::E),
        Expr::ConstPi => Ok(std::f64::consts::PI),
        Expr::Variable(Var::T) => Ok(t),
        Expr::Variable(Var::U) => u.ok_or(ExprError::MissingVariable { name: 'u' }),
        Expr::Variable(Var::V) => v.ok_or(ExprError::MissingVariable { name: 'v' }),
        Expr::Neg(inner) => Ok(-eval_expr(inner, t, u, v)?),
        Expr::Binary(op, lhs, rhs) => {
            let a = eval_expr(lhs, t, u, v)?;
            let b = eval_expr(rhs, t, u, v)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => Ok(a / b),
                BinOp::Pow => checked_pow(a, b),
            }
        }
        Expr::Call(func, args) => {
            let x = eval_expr(&args[0], t, u, v)?;
            match func {
                Func::Exp => Ok(x.exp()),
                Func::Log => {
                    if x <= 0.0 {
                        Err(ExprError::DomainError {
                            function: "log".into(),
                            argument: x,
                        })
                    } else {
                        Ok(x.ln())
                    }
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        Err(ExprError::DomainError {
                            function: "sqrt".into(),
                            argument: x,
                        })
                    } else {
                        Ok(x.sqrt())
                    }
                }
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Abs => Ok(x.abs()),
                Func::Pow => {
                    let y = eval_expr(&args[1], t, u, v)?;
                    checked_pow(x, y)
                }
            }
        }
    }
}

fn checked_pow(base: f64, exponent: f64) -> Result<f64, ExprError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(ExprError::DomainError {
            function: "pow".into(),
            argument: base,
        });
    }
    Ok(base.powf(exponent))
}

/// Variables the expression actually references, as a (t, u, v) mask.
pub fn used_variables(expr: &Expr) -> (bool, bool, bool) {
    fn walk(expr: &Expr, mask: &mut (bool, bool, bool)) {
        match expr {
            Expr::Variable(Var::T) => mask.0 = true,
            Expr::Variable(Var::U) => mask.1 = true,
            Expr::Variable(Var::V) => mask.2 = true,
            Expr::Neg(inner) => walk(inner, mask),
            Expr::Binary(_, lhs, rhs) => {
                walk(lhs, mask);
                walk(rhs, mask);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| walk(a, mask)),
            _ => {}
        }
    }
    let mut mask = (false, false, false);
    walk(expr, &mut mask);
    mask
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Binary(BinOp::Pow, ..) => 3,
            Expr::Neg(_) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    /// Canonical text form that re-parses to a structurally equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_child(
            f: &mut fmt::Formatter<'_>,
            child: &Expr,
            min_precedence: u8,
        ) -> fmt::Result {
            if child.precedence() < min_precedence {
                write!(f, "(")?;
                child.fmt(f)?;
                write!(f, ")")
            } else {
                child.fmt(f)
            }
        }
        match self {
            Expr::Number(x) => write!(f, "{x}"),
            Expr::ConstE => write!(f, "e"),
            Expr::ConstPi => write!(f, "pi"),
            Expr::Variable(var) => write!(f, "{}", var.symbol()),
            Expr::Neg(inner) => {
                write!(f, "-")?;
                write_child(f, inner, 4)
            }
            Expr::Binary(op, lhs, rhs) => match op {
                BinOp::Add => {
                    write_child(f, lhs, 1)?;
                    write!(f, " + ")?;
                    write_child(f, rhs, 2)
                }
                BinOp::Sub => {
                    write_child(f, lhs, 1)?;
                    write!(f, " - ")?;
                    write_child(f, rhs, 2)
                }
                BinOp::Mul => {
                    write_child(f, lhs, 2)?;
                    write!(f, "*")?;
                    write_child(f, rhs, 3)
                }
                BinOp::Div => {
                    write_child(f, lhs, 2)?;
                    write!(f, "/")?;
                    write_child(f, rhs, 4)
                }
                BinOp::Pow => {
                    // Base must outrank '^'; a unary-minus base keeps its
                    // parentheses-free form since '-' binds tighter.
                    write_child(f, lhs, 4)?;
                    write!(f, "^")?;
                    write_child(f, rhs, 3)
                }
            },
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    arg.fmt(f)?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rhs_of_first_example() {
        let expr = parse_expr("exp(-t)*u^(3/2)*v").unwrap();
        let value = eval_expr(&expr, 0.0, Some(1.0), Some(1.0)).unwrap();
        assert_eq!(value, 1.0);
    }

    #[test]
    fn identity_expression() {
        let expr = parse_expr("t").unwrap();
        assert_eq!(eval_expr(&expr, 0.37, None, None).unwrap(), 0.37);
    }

    #[test]
    fn malformed_input_reports_offset() {
        let err = parse_expr("2*^3").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 2, .. }));
    }

    #[test]
    fn unknown_identifier_reports_name() {
        let err = parse_expr("2*w + 1").unwrap_err();
        assert!(matches!(
            err,
            ExprError::UnknownIdentifier { ref name, offset: 2 } if name == "w"
        ));
    }

    #[test]
    fn fractional_power() {
        let expr = parse_expr("u^(3/2)").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, Some(4.0), None).unwrap(), 8.0);
    }

    #[test]
    fn second_example_rhs_value() {
        let expr = parse_expr("-4/(1+t)^4").unwrap();
        assert_eq!(eval_expr(&expr, 1.0, None, None).unwrap(), -0.25);
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let expr = parse_expr("sqrt(u)").unwrap();
        assert!(matches!(
            eval_expr(&expr, 0.0, Some(-1.0), None),
            Err(ExprError::DomainError { .. })
        ));
    }

    #[test]
    fn missing_variable_detected() {
        let expr = parse_expr("u + 1").unwrap();
        assert!(matches!(
            eval_expr(&expr, 0.0, None, None),
            Err(ExprError::MissingVariable { name: 'u' })
        ));
    }

    #[test]
    fn power_is_right_associative() {
        // 2^3^2 = 2^9 = 512
        let expr = parse_expr("2^3^2").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, None, None).unwrap(), 512.0);
    }

    #[test]
    fn unary_minus_binds_tighter_than_power() {
        // -2^2 parses as (-2)^2 = 4
        let expr = parse_expr("-2^2").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, None, None).unwrap(), 4.0);
    }

    #[test]
    fn negative_base_integer_exponent_allowed() {
        let expr = parse_expr("(-2)^3").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, None, None).unwrap(), -8.0);
        let expr = parse_expr("u^(3/2)").unwrap();
        assert!(matches!(
            eval_expr(&expr, 0.0, Some(-2.0), None),
            Err(ExprError::DomainError { .. })
        ));
    }

    #[test]
    fn constants_and_functions() {
        let expr = parse_expr("exp(1) - e").unwrap();
        assert!(eval_expr(&expr, 0.0, None, None).unwrap().abs() < 1e-15);
        let expr = parse_expr("cos(pi)").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, None, None).unwrap(), -1.0);
        let expr = parse_expr("pow(2, 10)").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, None, None).unwrap(), 1024.0);
    }

    #[test]
    fn exponent_literals() {
        let expr = parse_expr("1.5e-3").unwrap();
        assert_eq!(eval_expr(&expr, 0.0, None, None).unwrap(), 0.0015);
        // '2e' is a malformed literal, not 2 * e.
        assert!(parse_expr("2e").is_err());
        // But '2*e' is fine.
        let expr = parse_expr("2*e").unwrap();
        assert_eq!(
            eval_expr(&expr, 0.0, None, None).unwrap(),
            2.0 * std::f64::consts::E
        );
    }

    #[test]
    fn display_round_trips_structurally() {
        for src in [
            "exp(-t)*u^(3/2)*v",
            "-4/(1+t)^4 - (u^4 + u^3)*v",
            "e^t - 1/4*u + 1/4*v^2",
            "720*t + 1/5*u*v - 1/5*u^3",
            "-(2/3)*u - 1/3*exp(-0.5*t)*v",
            "pow(t, 2) - abs(-t)",
            "-t^2",
            "2^-3",
        ] {
            let expr = parse_expr(src).unwrap();
            let printed = expr.to_string();
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("reparse of '{printed}' failed: {e}"));
            assert_eq!(expr, reparsed, "source '{src}' printed as '{printed}'");
        }
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse_expr("1 + 2)").is_err());
        assert!(parse_expr("").is_err());
    }
}
