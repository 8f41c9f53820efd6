use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X1,
    X2,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Sin,
    Cos,
}

/// Closed-form scalar field in `x1`, `x2` parsed from a small arithmetic grammar:
/// `+ - * / ^`, parentheses, numeric constants, `pi`, and `exp`, `sin`, `cos`.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected trailing input in `{src}`")));
        }
        Ok(Expr { source: src.trim().to_string(), root })
    }

    pub fn constant(c: f64) -> Self {
        Expr { source: format!("{c:?}"), root: Node::Num(c) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        eval(&self.root, x)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(c) => Some(c),
            _ => None,
        }
    }
}

fn eval(n: &Node, x: [f64; 2]) -> f64 {
    match n {
        Node::Num(c) => *c,
        Node::X1 => x[0],
        Node::X2 => x[1],
        Node::Neg(a) => -eval(a, x),
        Node::Bin(op, a, b) => {
            let (u, v) = (eval(a, x), eval(b, x));
            match op {
                '+' => u + v,
                '-' => u - v,
                '*' => u * v,
                '/' => u / v,
                _ => {
                    if v == v.round() && v.abs() <= 64.0 {
                        u.powi(v as i32)
                    } else {
                        u.powf(v)
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let u = eval(a, x);
            match f {
                Func::Exp => u.exp(),
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let c: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < c.len() {
        let ch = c[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < c.len() && (c[i].is_ascii_digit() || c[i] == '.') {
                i += 1;
            }
            if i < c.len() && (c[i] == 'e' || c[i] == 'E') {
                let mut j = i + 1;
                if j < c.len() && (c[j] == '+' || c[j] == '-') {
                    j += 1;
                }
                if j < c.len() && c[j].is_ascii_digit() {
                    i = j;
                    while i < c.len() && c[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = c[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
            out.push(Tok::Num(v));
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < c.len() && (c[i].is_ascii_alphanumeric() || c[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(c[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) || ch == '\u{2212}' {
            out.push(Tok::Op(if ch == '\u{2212}' { '-' } else { ch }));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{ch}` in `{s}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x1" => Ok(Node::X1),
                "x2" => Ok(Node::X2),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "exp" | "sin" | "cos" => {
                    let f = match name.as_str() {
                        "exp" => Func::Exp,
                        "sin" => Func::Sin,
                        _ => Func::Cos,
                    };
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Node::Call(f, Box::new(arg)))
                }
                _ => Err(Error::Parse(format!("unknown identifier `{name}`"))),
            },
            Tok::Op(c) => Err(Error::Parse(format!("unexpected `{c}`"))),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected `{c}`")))
        }
    }
}
