//! Scalar coefficient functions: a small expression language over the chart
//! coordinates (plus optionally declared extra symbols), with a recursive
//! descent parser, a printer, exact jet evaluation and symbolic
//! differentiation.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := base ("^" integer)?
//! base   := number | ident | func "(" expr ")" | "(" expr ")" | "-" base
//! func   := "sin" | "cos" | "exp" | "sqrt"
//! ```
//!
//! Numbers are decimal with optional exponent. Identifiers must resolve
//! against the declared symbol set; anything else is an error naming the
//! offending identifier and its byte offset.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::jet::Jet;

/// Coordinate chart: an ordered list of pairwise distinct coordinate names.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self, String> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err("chart dimension must be at least 1".to_string());
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(format!("duplicate coordinate name `{n}`"));
            }
        }
        Ok(Chart { names })
    }

    /// `x1..xd` convenience chart.
    pub fn standard(dim: usize) -> Self {
        Chart::new((1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>()).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn symbols(&self) -> Symbols {
        Symbols {
            names: self.names.clone(),
        }
    }
}

/// Resolved identifier set an expression may reference: chart coordinates
/// first, then any declared extra symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbols {
    names: Vec<String>,
}

impl Symbols {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Self {
        Symbols {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn with_extra<S: AsRef<str>>(chart: &Chart, extra: &[S]) -> Self {
        let mut names = chart.names.clone();
        names.extend(extra.iter().map(|s| s.as_ref().to_string()));
        Symbols { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        match s {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Expression tree over numeric literals, symbols and the fixed function set.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn one() -> Expr {
        Expr::Num(1.0)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    /// Constant-folding constructors keep derivative output compact.
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
            _ if a.is_zero() => b,
            _ if b.is_zero() => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
            _ if b.is_zero() => a,
            _ if a.is_zero() => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
            _ if a.is_zero() || b.is_zero() => Expr::zero(),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a;
        }
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(x) => Expr::Num(-x),
            Expr::Neg(inner) => *inner,
            _ => Expr::Neg(Box::new(a)),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        match n {
            0 => Expr::one(),
            1 => a,
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn scale(self, s: f64) -> Expr {
        Expr::mul(Expr::Num(s), self)
    }

    /// Exact evaluation in jet arithmetic over the symbol environment.
    pub fn eval(&self, env: &[Jet]) -> Result<Jet, EvalError> {
        let dim = env.first().map(|j| j.dim()).unwrap_or(0);
        match self {
            Expr::Num(v) => Ok(Jet::constant(*v, dim)),
            Expr::Var(i) => Ok(env[*i].clone()),
            Expr::Add(a, b) => Ok(a.eval(env)?.add(&b.eval(env)?)),
            Expr::Sub(a, b) => Ok(a.eval(env)?.sub(&b.eval(env)?)),
            Expr::Mul(a, b) => Ok(a.eval(env)?.mul(&b.eval(env)?)),
            Expr::Div(a, b) => {
                let den = b.eval(env)?;
                if den.v == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval(env)?.div(&den))
            }
            Expr::Neg(a) => Ok(a.eval(env)?.neg()),
            Expr::Pow(a, n) => {
                let base = a.eval(env)?;
                if *n < 0 && base.v == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(base.powi(*n))
            }
            Expr::Call(f, a) => {
                let arg = a.eval(env)?;
                match f {
                    Func::Sin => Ok(arg.sin()),
                    Func::Cos => Ok(arg.cos()),
                    Func::Exp => Ok(arg.exp()),
                    Func::Sqrt => {
                        if arg.v < 0.0 {
                            return Err(EvalError::SqrtNegative);
                        }
                        Ok(arg.sqrt())
                    }
                }
            }
        }
    }

    /// Plain value without derivative tracking.
    pub fn eval_value(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(i) => Ok(point[*i]),
            Expr::Add(a, b) => Ok(a.eval_value(point)? + b.eval_value(point)?),
            Expr::Sub(a, b) => Ok(a.eval_value(point)? - b.eval_value(point)?),
            Expr::Mul(a, b) => Ok(a.eval_value(point)? * b.eval_value(point)?),
            Expr::Div(a, b) => {
                let den = b.eval_value(point)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval_value(point)? / den)
            }
            Expr::Neg(a) => Ok(-a.eval_value(point)?),
            Expr::Pow(a, n) => {
                let base = a.eval_value(point)?;
                if *n < 0 && base == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(libm::pow(base, *n as f64))
            }
            Expr::Call(f, a) => {
                let x = a.eval_value(point)?;
                match f {
                    Func::Sin => Ok(libm::sin(x)),
                    Func::Cos => Ok(libm::cos(x)),
                    Func::Exp => Ok(libm::exp(x)),
                    Func::Sqrt => {
                        if x < 0.0 {
                            Err(EvalError::SqrtNegative)
                        } else {
                            Ok(libm::sqrt(x))
                        }
                    }
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to symbol `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::zero(),
            Expr::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(a, b) => Expr::add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => Expr::sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(var), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                let da = a.derivative(var);
                let db = b.derivative(var);
                Expr::sub(
                    Expr::div(da, (**b).clone()),
                    Expr::div(
                        Expr::mul((**a).clone(), db),
                        Expr::pow((**b).clone(), 2),
                    ),
                )
            }
            Expr::Neg(a) => Expr::neg(a.derivative(var)),
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::Num(*n as f64), Expr::pow((**a).clone(), n - 1)),
                a.derivative(var),
            ),
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, (**a).clone()),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, (**a).clone())),
                    Func::Exp => Expr::call(Func::Exp, (**a).clone()),
                    Func::Sqrt => Expr::div(
                        Expr::Num(0.5),
                        Expr::call(Func::Sqrt, (**a).clone()),
                    ),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Printer producing a string the parser accepts back into the same tree.
    pub fn print(&self, syms: &Symbols) -> String {
        let mut s = String::new();
        self.fmt_prec(syms, 0, &mut s);
        s
    }

    // precedence levels: 0 add, 1 mul, 2 unary/pow, 3 atom
    fn fmt_prec(&self, syms: &Symbols, parent: u8, out: &mut String) {
        let prec = match self {
            Expr::Add(..) | Expr::Sub(..) => 0,
            Expr::Mul(..) | Expr::Div(..) => 1,
            Expr::Neg(..) => 2,
            Expr::Pow(..) => 2,
            _ => 3,
        };
        let need = prec < parent;
        if need {
            out.push('(');
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    out.push_str(&format!("(-{})", fmt_f64(-*v)));
                } else {
                    out.push_str(&fmt_f64(*v));
                }
            }
            Expr::Var(i) => out.push_str(syms.name(*i)),
            Expr::Add(a, b) => {
                a.fmt_prec(syms, 0, out);
                out.push_str(" + ");
                b.fmt_prec(syms, 1, out);
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(syms, 0, out);
                out.push_str(" - ");
                b.fmt_prec(syms, 1, out);
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(syms, 1, out);
                out.push('*');
                b.fmt_prec(syms, 2, out);
            }
            Expr::Div(a, b) => {
                a.fmt_prec(syms, 1, out);
                out.push('/');
                b.fmt_prec(syms, 2, out);
            }
            Expr::Neg(a) => {
                // the grammar binds `^` after unary minus, so a power
                // under a negation needs explicit grouping
                out.push('-');
                a.fmt_prec(syms, 3, out);
            }
            Expr::Pow(a, n) => {
                a.fmt_prec(syms, 3, out);
                out.push('^');
                if *n < 0 {
                    out.push_str(&format!("({n})"));
                } else {
                    out.push_str(&n.to_string());
                }
            }
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.fmt_prec(syms, 0, out);
                out.push(')');
            }
        }
        if need {
            out.push(')');
        }
    }
}

fn fmt_f64(v: f64) -> String {
    if v == libm::trunc(v) && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalError {
    DivisionByZero,
    SqrtNegative,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => write!(f, "division by zero"),
            EvalError::SqrtNegative => write!(f, "square root of a negative value"),
        }
    }
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)
    }
}

pub fn parse(src: &str, syms: &Symbols) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        syms,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(ParseError {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError {
            offset: p.pos,
            message: format!("unexpected `{}`", p.src[p.pos] as char),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    syms: &'a Symbols,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, message: &str) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Add(Box::new(acc), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Sub(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = Expr::Mul(Box::new(acc), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = Expr::Div(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let mut paren = false;
        if self.src.get(self.pos) == Some(&b'(') {
            paren = true;
            self.pos += 1;
            self.skip_ws();
        }
        let start = self.pos;
        let mut neg = false;
        if self.src.get(self.pos) == Some(&b'-') {
            neg = true;
            self.pos += 1;
        }
        let dstart = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == dstart {
            self.pos = start;
            return self.err("expected integer exponent");
        }
        let digits = core::str::from_utf8(&self.src[dstart..self.pos]).unwrap();
        let mut n: i32 = match digits.parse() {
            Ok(n) => n,
            Err(_) => return self.err("exponent out of range"),
        };
        if neg {
            n = -n;
        }
        if paren {
            if self.peek() != Some(b')') {
                return self.err("expected `)` after exponent");
            }
            self.pos += 1;
        }
        Ok(n)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => self.err("expected expression"),
            Some(b'-') => {
                self.pos += 1;
                // fold a negated literal so numbers round-trip structurally
                match self.base()? {
                    Expr::Num(v) => Ok(Expr::Num(-v)),
                    inner => Ok(Expr::Neg(Box::new(inner))),
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => self.err(&format!("unexpected `{}`", c as char)),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => Err(ParseError {
                offset: start,
                message: format!("invalid number `{text}`"),
            }),
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && ((self.src[self.pos] as char).is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            let f = match Func::from_name(name) {
                Some(f) => f,
                None => {
                    return Err(ParseError {
                        offset: start,
                        message: format!("unknown function `{name}`"),
                    })
                }
            };
            self.pos += 1; // consume '('
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return self.err("expected `)`");
            }
            self.pos += 1;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        match self.syms.index(name) {
            Some(i) => Ok(Expr::Var(i)),
            None => Err(ParseError {
                offset: start,
                message: format!("unknown identifier `{name}`"),
            }),
        }
    }
}
