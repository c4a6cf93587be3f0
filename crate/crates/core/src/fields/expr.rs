//! Field expressions: a small arithmetic grammar over the coordinates `x`, `y`
//! and the time `t`, with evaluation, symbolic differentiation and a
//! precedence-aware pretty printer.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | ident "(" [ expr { "," expr } ] ")" | "(" expr ")" ;
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("function `{name}` at offset {offset} takes {expected} argument(s), got {got}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        got: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at argument {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("expression produced a non-finite value")]
    NonFinite,
}

/// Named quantities an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    T,
    /// Domain extent in x.
    Lx,
    /// Domain extent in y.
    Ly,
    Pi,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::Lx => "lx",
            Var::Ly => "ly",
            Var::Pi => "pi",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        Some(match name {
            "x" => Var::X,
            "y" => Var::Y,
            "t" => Var::T,
            "lx" => Var::Lx,
            "ly" => Var::Ly,
            "pi" => Var::Pi,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sqrt,
    Abs,
    Sign,
    Min,
    Max,
    /// Distance from `(x, y)` to the boundary of `[0,lx]×[0,ly]`.
    DistBoundary,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tanh,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
        Func::Min,
        Func::Max,
        Func::DistBoundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
            Func::DistBoundary => "dist_boundary",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::DistBoundary => 0,
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree. Numeric literals are nonnegative; negation is explicit.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Point of evaluation together with the domain extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalContext {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub lx: f64,
    pub ly: f64,
}

impl EvalContext {
    pub fn new(x: f64, y: f64, t: f64, lx: f64, ly: f64) -> Self {
        EvalContext { x, y, t, lx, ly }
    }

    /// Context on the unit square.
    pub fn unit(x: f64, y: f64, t: f64) -> Self {
        EvalContext::new(x, y, t, 1.0, 1.0)
    }
}

fn checked(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(e) => e.as_const().map(|v| -v),
            _ => None,
        }
    }

    pub fn eval(&self, c: &EvalContext) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => Ok(match v {
                Var::X => c.x,
                Var::Y => c.y,
                Var::T => c.t,
                Var::Lx => c.lx,
                Var::Ly => c.ly,
                Var::Pi => std::f64::consts::PI,
            }),
            Expr::Neg(e) => Ok(-e.eval(c)?),
            Expr::Bin(op, l, r) => {
                let a = l.eval(c)?;
                let b = r.eval(c)?;
                match op {
                    BinOp::Add => checked(a + b),
                    BinOp::Sub => checked(a - b),
                    BinOp::Mul => checked(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::Domain { op: "division", arg: b });
                        }
                        checked(a / b)
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(EvalError::Domain { op: "power", arg: a });
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(EvalError::Domain { op: "power", arg: a });
                        }
                        checked(a.powf(b))
                    }
                }
            }
            Expr::Call(f, args) => {
                let arg = |i: usize| args[i].eval(c);
                match f {
                    Func::Exp => checked(arg(0)?.exp()),
                    Func::Log => {
                        let v = arg(0)?;
                        if v <= 0.0 {
                            return Err(EvalError::Domain { op: "log", arg: v });
                        }
                        Ok(v.ln())
                    }
                    Func::Sin => Ok(arg(0)?.sin()),
                    Func::Cos => Ok(arg(0)?.cos()),
                    Func::Tanh => Ok(arg(0)?.tanh()),
                    Func::Sqrt => {
                        let v = arg(0)?;
                        if v < 0.0 {
                            return Err(EvalError::Domain { op: "sqrt", arg: v });
                        }
                        Ok(v.sqrt())
                    }
                    Func::Abs => Ok(arg(0)?.abs()),
                    Func::Sign => {
                        let v = arg(0)?;
                        Ok(if v > 0.0 {
                            1.0
                        } else if v < 0.0 {
                            -1.0
                        } else {
                            0.0
                        })
                    }
                    Func::Min => Ok(arg(0)?.min(arg(1)?)),
                    Func::Max => Ok(arg(0)?.max(arg(1)?)),
                    Func::DistBoundary => Ok(c.x.min(c.lx - c.x).min(c.y.min(c.ly - c.y))),
                }
            }
        }
    }

    /// True when the tree references `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(e) => e.depends_on(v),
            Expr::Bin(_, l, r) => l.depends_on(v) || r.depends_on(v),
            Expr::Call(Func::DistBoundary, _) => matches!(v, Var::X | Var::Y | Var::Lx | Var::Ly),
            Expr::Call(_, args) => args.iter().any(|a| a.depends_on(v)),
        }
    }

    /// Symbolic partial derivative with respect to `v`, lightly simplified.
    pub fn derivative(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::Num(0.0);
        }
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(w) => Expr::Num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derivative(v)),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.as_ref(), r.as_ref());
                match op {
                    BinOp::Add => add(l.derivative(v), r.derivative(v)),
                    BinOp::Sub => sub(l.derivative(v), r.derivative(v)),
                    BinOp::Mul => add(
                        mul(l.derivative(v), r.clone()),
                        mul(l.clone(), r.derivative(v)),
                    ),
                    BinOp::Div => sub(
                        div(l.derivative(v), r.clone()),
                        div(mul(l.clone(), r.derivative(v)), pow(r.clone(), Expr::Num(2.0))),
                    ),
                    BinOp::Pow => {
                        if !r.depends_on(v) {
                            let reduced = sub(r.clone(), Expr::Num(1.0));
                            mul(mul(r.clone(), pow(l.clone(), reduced)), l.derivative(v))
                        } else {
                            mul(
                                self.clone(),
                                add(
                                    mul(r.derivative(v), call1(Func::Log, l.clone())),
                                    div(mul(r.clone(), l.derivative(v)), l.clone()),
                                ),
                            )
                        }
                    }
                }
            }
            Expr::Call(f, args) => {
                let a = || args[0].clone();
                let da = || args[0].derivative(v);
                match f {
                    Func::Exp => mul(self.clone(), da()),
                    Func::Log => div(da(), a()),
                    Func::Sin => mul(call1(Func::Cos, a()), da()),
                    Func::Cos => neg(mul(call1(Func::Sin, a()), da())),
                    Func::Tanh => mul(
                        sub(Expr::Num(1.0), pow(self.clone(), Expr::Num(2.0))),
                        da(),
                    ),
                    Func::Sqrt => div(da(), mul(Expr::Num(2.0), self.clone())),
                    Func::Abs => mul(call1(Func::Sign, a()), da()),
                    Func::Sign => Expr::Num(0.0),
                    Func::Min | Func::Max => {
                        let b = args[1].clone();
                        let db = args[1].derivative(v);
                        let s = call1(Func::Sign, sub(a(), b));
                        let mean = add(da(), db.clone());
                        let gap = mul(s, sub(da(), db));
                        let combined = if *f == Func::Min {
                            sub(mean, gap)
                        } else {
                            add(mean, gap)
                        };
                        div(combined, Expr::Num(2.0))
                    }
                    Func::DistBoundary => expand_dist_boundary().derivative(v),
                }
            }
        }
    }
}

/// `dist_boundary()` written in terms of the coordinates and extents.
fn expand_dist_boundary() -> Expr {
    let x = Expr::Var(Var::X);
    let y = Expr::Var(Var::Y);
    let sx = call2(Func::Min, x.clone(), sub(Expr::Var(Var::Lx), x));
    let sy = call2(Func::Min, y.clone(), sub(Expr::Var(Var::Ly), y));
    call2(Func::Min, sx, sy)
}

fn call1(f: Func, a: Expr) -> Expr {
    Expr::Call(f, vec![a])
}

fn call2(f: Func, a: Expr, b: Expr) -> Expr {
    Expr::Call(f, vec![a, b])
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(v) if v == 0.0 => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match b.as_const() {
        Some(y) if y == 1.0 => a,
        Some(y) if y == 0.0 => Expr::Num(1.0),
        _ => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

// Binding strength used by the printer: sums < products < negation < powers < atoms.
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 => PREC_UNARY,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => PREC_ATOM,
        Expr::Neg(_) => PREC_UNARY,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_SUM,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => PREC_PRODUCT,
        Expr::Bin(BinOp::Pow, ..) => PREC_POWER,
    }
}

fn format_number(v: f64) -> String {
    let m = v.abs();
    if m == 0.0 || (1e-4..1e15).contains(&m) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_expr(e: &Expr, min_prec: u8, out: &mut String) {
    let paren = precedence(e) < min_prec;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Num(v) => out.push_str(&format_number(*v)),
        Expr::Var(v) => out.push_str(v.name()),
        Expr::Neg(inner) => {
            out.push('-');
            write_expr(inner, PREC_UNARY, out);
        }
        Expr::Bin(op, l, r) => {
            let (lp, rp) = match op {
                BinOp::Add | BinOp::Sub => (PREC_SUM, PREC_PRODUCT),
                BinOp::Mul | BinOp::Div => (PREC_PRODUCT, PREC_UNARY),
                BinOp::Pow => (PREC_ATOM, PREC_UNARY),
            };
            write_expr(l, lp, out);
            if *op == BinOp::Pow {
                out.push('^');
            } else {
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
            }
            write_expr(r, rp, out);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, PREC_SUM, out);
            }
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, PREC_SUM, &mut s);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((tok, start));
        i += c.len_utf8();
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ParseError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Comma => "`,`".to_string(),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("{message}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("expected `)`"));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, at) = self.bump();
                if *self.peek() == Tok::LParen {
                    let f = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                        offset: at,
                        name: name.clone(),
                    })?;
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.expr()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    if *self.peek() != Tok::RParen {
                        return Err(self.error("expected `,` or `)`"));
                    }
                    self.bump();
                    if args.len() != f.arity() {
                        return Err(ParseError::Arity {
                            offset: at,
                            name,
                            expected: f.arity(),
                            got: args.len(),
                        });
                    }
                    return Ok(Expr::Call(f, args));
                }
                Var::from_name(&name)
                    .map(Expr::Var)
                    .ok_or(ParseError::UnknownIdentifier { offset: at, name })
            }
            _ => Err(self.error("expected a number, identifier or `(`")),
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    if *p.peek() == Tok::End {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("expected an operator or end of input"));
    }
    Ok(e)
}

/// A parsed field expression that keeps its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    source: String,
    tree: Expr,
}

impl FieldExpr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Ok(FieldExpr {
            source: src.to_string(),
            tree: parse(src)?,
        })
    }

    pub fn constant(v: f64) -> Self {
        let tree = Expr::num(v);
        FieldExpr {
            source: tree.to_string(),
            tree,
        }
    }

    pub fn from_tree(tree: Expr) -> Self {
        FieldExpr {
            source: tree.to_string(),
            tree,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    pub fn eval(&self, c: &EvalContext) -> Result<f64, EvalError> {
        self.tree.eval(c)
    }

    /// Value of a time-independent expression evaluated at constant inputs.
    pub fn constant_value(&self) -> Option<f64> {
        let vars = [Var::X, Var::Y, Var::T, Var::Lx, Var::Ly];
        if vars.iter().any(|v| self.tree.depends_on(*v)) {
            return None;
        }
        self.tree.eval(&EvalContext::unit(0.0, 0.0, 0.0)).ok()
    }

    pub fn derivative(&self, v: Var) -> FieldExpr {
        FieldExpr::from_tree(self.tree.derivative(v))
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.tree.depends_on(v)
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.tree.fmt(f)
    }
}

impl serde::Serialize for FieldExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> serde::Deserialize<'de> for FieldExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FieldExpr::parse(&s).map_err(serde::de::Error::custom)
    }
}
