//! Closed-form coefficient expressions over `x` and `t`.
//!
//! Grammar (usual precedence, `^` binds tightest and is right-associative):
//!
//! ```text
//! expr    := sum (("<" | "<=" | ">" | ">=") sum)?
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := atom ("^" unary)?
//! atom    := number | "x" | "t" | "pi" | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Comparisons evaluate to `1.0` or `0.0`. `piecewise(c1, v1, c2, v2, ..., default)`
//! returns the first `vi` whose condition is nonzero, otherwise `default`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Abs,
    Sqrt,
    Min,
    Max,
    Piecewise,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "piecewise" => Func::Piecewise,
            _ => return None,
        })
    }

    fn check_arity(self, n: usize) -> std::result::Result<(), String> {
        let ok = match self {
            Func::Sin | Func::Cos | Func::Exp | Func::Tanh | Func::Abs | Func::Sqrt => n == 1,
            Func::Min | Func::Max => n >= 2,
            Func::Piecewise => n >= 3 && n % 2 == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("wrong number of arguments ({n}) for {self:?}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => pow(a, b),
            BinOp::Lt => f64::from(u8::from(a < b)),
            BinOp::Le => f64::from(u8::from(a <= b)),
            BinOp::Gt => f64::from(u8::from(a > b)),
            BinOp::Ge => f64::from(u8::from(a >= b)),
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    X,
    T,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::X => x,
            Node::T => t,
            Node::Neg(a) => -a.eval(x, t),
            Node::Bin(op, a, b) => op.apply(a.eval(x, t), b.eval(x, t)),
            Node::Call(f, args) => match f {
                Func::Sin => args[0].eval(x, t).sin(),
                Func::Cos => args[0].eval(x, t).cos(),
                Func::Exp => args[0].eval(x, t).exp(),
                Func::Tanh => args[0].eval(x, t).tanh(),
                Func::Abs => args[0].eval(x, t).abs(),
                Func::Sqrt => args[0].eval(x, t).sqrt(),
                Func::Min => args
                    .iter()
                    .map(|a| a.eval(x, t))
                    .fold(f64::INFINITY, f64::min),
                Func::Max => args
                    .iter()
                    .map(|a| a.eval(x, t))
                    .fold(f64::NEG_INFINITY, f64::max),
                Func::Piecewise => {
                    let pairs = args.len() / 2;
                    for k in 0..pairs {
                        if args[2 * k].eval(x, t) != 0.0 {
                            return args[2 * k + 1].eval(x, t);
                        }
                    }
                    args[args.len() - 1].eval(x, t)
                }
            },
        }
    }

    fn mentions(&self, var: &Node) -> bool {
        match self {
            Node::Const(_) => false,
            Node::X | Node::T => self == var,
            Node::Neg(a) => a.mentions(var),
            Node::Bin(_, a, b) => a.mentions(var) || b.mentions(var),
            Node::Call(_, args) => args.iter().any(|a| a.mentions(var)),
        }
    }

    /// Collapses subtrees without `x` or `t` into constants.
    fn fold(self) -> Node {
        let folded = match self {
            Node::Neg(a) => Node::Neg(Box::new(a.fold())),
            Node::Bin(op, a, b) => Node::Bin(op, Box::new(a.fold()), Box::new(b.fold())),
            Node::Call(f, args) => Node::Call(f, args.into_iter().map(Node::fold).collect()),
            leaf => leaf,
        };
        if matches!(folded, Node::Const(_)) || folded.mentions(&Node::X) || folded.mentions(&Node::T)
        {
            folded
        } else {
            Node::Const(folded.eval(0.0, 0.0))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> std::result::Result<Vec<Token>, String> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
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
            let value = text
                .parse::<f64>()
                .map_err(|_| format!("bad number literal '{text}'"))?;
            out.push(Token::Num(value));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token::Ident(src[start..i].to_string()));
            continue;
        }
        let two = src.get(i..i + 2);
        let tok = match (c, two) {
            (_, Some("<=")) => Token::Op("<="),
            (_, Some(">=")) => Token::Op(">="),
            ('<', _) => Token::Op("<"),
            ('>', _) => Token::Op(">"),
            ('+', _) => Token::Op("+"),
            ('-', _) => Token::Op("-"),
            ('*', _) => Token::Op("*"),
            ('/', _) => Token::Op("/"),
            ('^', _) => Token::Op("^"),
            ('(', _) => Token::LParen,
            (')', _) => Token::RParen,
            (',', _) => Token::Comma,
            _ => return Err(format!("unexpected character '{c}' at offset {i}")),
        };
        i += match tok {
            Token::Op(s) => s.len(),
            _ => 1,
        };
        out.push(tok);
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

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        if let Some(Token::Op(op)) = self.peek() {
            if let Some(found) = ops.iter().find(|o| *o == op) {
                self.pos += 1;
                return Some(found);
            }
        }
        None
    }

    fn expr(&mut self) -> std::result::Result<Node, String> {
        let lhs = self.sum()?;
        if let Some(op) = self.eat_op(&["<", "<=", ">", ">="]) {
            let rhs = self.sum()?;
            let op = match op {
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                _ => BinOp::Ge,
            };
            return Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> std::result::Result<Node, String> {
        let mut lhs = self.product()?;
        while let Some(op) = self.eat_op(&["+", "-"]) {
            let rhs = self.product()?;
            let op = if op == "+" { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> std::result::Result<Node, String> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&["*", "/"]) {
            let rhs = self.unary()?;
            let op = if op == "*" { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<Node, String> {
        if let Some(op) = self.eat_op(&["-", "+"]) {
            let inner = self.unary()?;
            return Ok(if op == "-" {
                Node::Neg(Box::new(inner))
            } else {
                inner
            });
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Node, String> {
        let base = self.atom()?;
        if self.eat_op(&["^"]).is_some() {
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Node, String> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Const(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err("expected ')'".into()),
                }
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    self.pos += 1;
                    let func =
                        Func::lookup(&name).ok_or_else(|| format!("unknown function '{name}'"))?;
                    let mut args = vec![self.expr()?];
                    loop {
                        match self.next() {
                            Some(Token::Comma) => args.push(self.expr()?),
                            Some(Token::RParen) => break,
                            _ => return Err(format!("expected ',' or ')' in call to {name}")),
                        }
                    }
                    func.check_arity(args.len())?;
                    return Ok(Node::Call(func, args));
                }
                match name.as_str() {
                    "x" => Ok(Node::X),
                    "t" => Ok(Node::T),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    _ => Err(format!("unknown identifier '{name}'")),
                }
            }
            Some(tok) => Err(format!("unexpected token {tok:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// A compiled coefficient expression; keeps its source text for serialization.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source).map_err(|e| Error::Parse(format!("'{source}': {e}")))?;
        if tokens.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser
            .expr()
            .map_err(|e| Error::Parse(format!("'{source}': {e}")))?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse(format!(
                "'{source}': trailing input after expression"
            )));
        }
        Ok(Expr {
            source: source.to_string(),
            root: root.fold(),
        })
    }

    pub fn constant(value: f64) -> Self {
        Expr {
            source: format!("{value:?}"),
            root: Node::Const(value),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.root.eval(x, t)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn depends_on_x(&self) -> bool {
        self.root.mentions(&Node::X)
    }

    pub fn depends_on_t(&self) -> bool {
        self.root.mentions(&Node::T)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        Expr::parse(&src).map_err(serde::de::Error::custom)
    }
}
