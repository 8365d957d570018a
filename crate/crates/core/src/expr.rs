//! Arithmetic expressions for coefficient fields and data functions.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | variable | call | '(' expr ')'
//! call  := name '(' expr (',' expr)* ')'
//! ```
//!
//! Variables are `x1..xN` (coordinates) and `t` / `s` (both bound to the
//! scalar argument). Functions: `log exp abs min max pow sin cos sqrt`.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Abs,
    Min,
    Max,
    Pow,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "log" => Func::Log,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Zero-based coordinate index (`x1` is `Coord(0)`).
    Coord(usize),
    T,
    S,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(syntax(tok.column, format!("unexpected '{}'", tok.kind)));
        }
        Ok(e)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Evaluates at coordinates `x` with scalar argument `arg` (bound to `t` and `s`).
    pub fn eval(&self, x: &[f64], arg: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Var::T) | Expr::Var(Var::S) => arg,
            Expr::Var(Var::Coord(i)) => *x
                .get(*i)
                .ok_or_else(|| Error::Domain(format!("x{} used in a {}-dimensional domain", i + 1, x.len())))?,
            Expr::Neg(e) => -e.eval(x, arg)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(x, arg)?;
                let b = r.eval(x, arg)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => checked_pow(a, b)?,
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, arg)?;
                match f {
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(Error::Domain(format!("log of non-positive value {a:?}")));
                        }
                        a.ln()
                    }
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {a:?}")));
                        }
                        a.sqrt()
                    }
                    Func::Min => a.min(args[1].eval(x, arg)?),
                    Func::Max => a.max(args[1].eval(x, arg)?),
                    Func::Pow => checked_pow(a, args[1].eval(x, arg)?)?,
                }
            }
        })
    }

    /// Evaluation that maps domain errors to NaN, for hot numerical loops.
    pub fn eval_or_nan(&self, x: &[f64], arg: f64) -> f64 {
        self.eval(x, arg).unwrap_or(f64::NAN)
    }

    /// True when the expression reads `t` or `s`.
    pub fn uses_arg(&self) -> bool {
        match self {
            Expr::Var(Var::T) | Expr::Var(Var::S) => true,
            Expr::Num(_) | Expr::Pi | Expr::Var(Var::Coord(_)) => false,
            Expr::Neg(e) => e.uses_arg(),
            Expr::Bin(_, l, r) => l.uses_arg() || r.uses_arg(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_arg),
        }
    }

    /// Largest coordinate index referenced, one-based (0 when none).
    pub fn max_coord(&self) -> usize {
        match self {
            Expr::Var(Var::Coord(i)) => i + 1,
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => 0,
            Expr::Neg(e) => e.max_coord(),
            Expr::Bin(_, l, r) => l.max_coord().max(r.max_coord()),
            Expr::Call(_, args) => args.iter().map(Expr::max_coord).max().unwrap_or(0),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn checked_pow(a: f64, b: f64) -> Result<f64> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "negative base {a:?} with fractional exponent {b:?}"
        )));
    }
    if a == 0.0 && b < 0.0 {
        return Err(Error::Domain("zero raised to a negative power".into()));
    }
    Ok(a.powf(b))
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => write!(f, "({v:?})"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(Var::Coord(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::S) => f.write_str("s"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, 3)
            }
            Expr::Bin(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => (" + ", 1),
                    BinOp::Sub => (" - ", 1),
                    BinOp::Mul => (" * ", 2),
                    BinOp::Div => (" / ", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    write_child(f, l, 5)?;
                    f.write_str(sym)?;
                    write_child(f, r, 3)
                } else {
                    write_child(f, l, p)?;
                    f.write_str(sym)?;
                    write_child(f, r, p + 1)
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(v) => write!(f, "{v}"),
            TokKind::Ident(s) => f.write_str(s),
            TokKind::Op(c) => write!(f, "{c}"),
            TokKind::LParen => f.write_str("("),
            TokKind::RParen => f.write_str(")"),
            TokKind::Comma => f.write_str(","),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    /// One-based character column.
    column: usize,
}

fn syntax(column: usize, message: String) -> Error {
    Error::Syntax {
        line: 1,
        column,
        message,
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit
                .parse::<f64>()
                .map_err(|_| syntax(column, format!("malformed number '{lit}'")))?;
            out.push(Token {
                kind: TokKind::Num(v),
                column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            _ => return Err(syntax(column, format!("unexpected character '{c}'"))),
        };
        out.push(Token { kind, column });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_column(&self) -> usize {
        self.tokens
            .last()
            .map_or(1, |t| t.column + t.kind.to_string().chars().count())
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokKind::Op(c), ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokKind) -> Result<()> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(syntax(t.column, format!("expected '{kind}', found '{}'", t.kind))),
            None => Err(syntax(
                self.end_column(),
                format!("expected '{kind}', found end of input"),
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(self.end_column(), "unexpected end of expression".into()));
        };
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::Num(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(e)
            }
            TokKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(TokKind::LParen)?;
                    let mut args = vec![self.expr()?];
                    while matches!(
                        self.peek(),
                        Some(Token {
                            kind: TokKind::Comma,
                            ..
                        })
                    ) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(TokKind::RParen)?;
                    if args.len() != func.arity() {
                        return Err(syntax(
                            tok.column,
                            format!("{} takes {} argument(s), got {}", name, func.arity(), args.len()),
                        ));
                    }
                    return Ok(Expr::Call(func, args));
                }
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "s" => Ok(Expr::Var(Var::S)),
                    "pi" => Ok(Expr::Pi),
                    _ => {
                        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                            if idx >= 1 {
                                return Ok(Expr::Var(Var::Coord(idx - 1)));
                            }
                        }
                        Err(syntax(tok.column, format!("unknown identifier '{name}'")))
                    }
                }
            }
            other => Err(syntax(tok.column, format!("unexpected '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(&[], 0.0).unwrap(), -4.0);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval(&[], 0.0).unwrap(), 512.0);
        let e = Expr::parse("-2^2").unwrap();
        assert_eq!(e.eval(&[], 0.0).unwrap(), -4.0);
        let e = Expr::parse("2^-1").unwrap();
        assert_eq!(e.eval(&[], 0.0).unwrap(), 0.5);
        let e = Expr::parse("1.5 + 0.2*x1 - t/s").unwrap();
        assert!((e.eval(&[0.5, 0.0], 2.0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn calls_and_constants() {
        let e = Expr::parse("max(abs(-3), pow(2, 2)) + min(log(exp(1)), cos(pi))").unwrap();
        assert!((e.eval(&[], 0.0).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_error_points_at_operator() {
        let err = Expr::parse("1.5 + * x1").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                line: 1,
                column: 7,
                message: "unexpected '*'".into()
            }
        );
    }

    #[test]
    fn domain_errors_are_reported() {
        assert!(matches!(
            Expr::parse("1/x1").unwrap().eval(&[0.0], 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("log(t)").unwrap().eval(&[], -1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("x3").unwrap().eval(&[0.0, 1.0], 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_unknown_names_and_bad_arity() {
        assert!(Expr::parse("foo + 1").is_err());
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("x0").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            Just(Expr::Pi),
            (0usize..3).prop_map(|i| Expr::Var(Var::Coord(i))),
            Just(Expr::Var(Var::T)),
            Just(Expr::Var(Var::S)),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
                inner.prop_map(|a| Expr::Call(Func::Exp, vec![a])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_fixpoint(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
