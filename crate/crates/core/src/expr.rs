//! A small arithmetic expression language for user-supplied `f`, `F` and `h`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `s`, `t`, `T`, `pi` and the functions
//! `sin`, `cos`, `exp`, `sqrt`, `abs`. `^` is right-associative and binds
//! tighter than unary minus, so `-s^2` is `-(s^2)`.

use crate::error::{Result, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    S,
    T,
    Period,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression over `s`, `t` and the period `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    /// Parses `text`. Variables outside `allowed` are rejected.
    pub fn parse(text: &str, allowed: &[Var]) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            allowed,
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(SolverError::Expression {
                column: tok.column,
                message: format!("unexpected trailing {:?}", tok.kind),
            });
        }
        Ok(Expr {
            source: text.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, s: f64, t: f64, period: f64) -> f64 {
        eval(&self.root, s, t, period)
    }
}

fn eval(node: &Node, s: f64, t: f64, period: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(Var::S) => s,
        Node::Var(Var::T) => t,
        Node::Var(Var::Period) => period,
        Node::Neg(a) => -eval(a, s, t, period),
        Node::Add(a, b) => eval(a, s, t, period) + eval(b, s, t, period),
        Node::Sub(a, b) => eval(a, s, t, period) - eval(b, s, t, period),
        Node::Mul(a, b) => eval(a, s, t, period) * eval(b, s, t, period),
        Node::Div(a, b) => eval(a, s, t, period) / eval(b, s, t, period),
        Node::Pow(a, b) => {
            let base = eval(a, s, t, period);
            match b.as_ref() {
                Node::Num(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(*e as i32),
                _ => base.powf(eval(b, s, t, period)),
            }
        }
        Node::Call(f, a) => {
            let x = eval(a, s, t, period);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
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
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let v = lit.parse::<f64>().map_err(|_| SolverError::Expression {
                column,
                message: format!("bad number literal `{lit}`"),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                column,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^".contains(c) {
            out.push(Token {
                kind: TokKind::Op(c),
                column,
            });
            i += 1;
        } else if c == '(' {
            out.push(Token {
                kind: TokKind::LParen,
                column,
            });
            i += 1;
        } else if c == ')' {
            out.push(Token {
                kind: TokKind::RParen,
                column,
            });
            i += 1;
        } else {
            return Err(SolverError::Expression {
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .unwrap_or_else(|| self.tokens.last().map(|t| t.column + 1).unwrap_or(1))
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(SolverError::Expression {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(TokKind::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(lhs.into(), rhs.into())
            } else {
                Node::Sub(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(TokKind::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(lhs.into(), rhs.into())
            } else {
                Node::Div(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(TokKind::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some(TokKind::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(TokKind::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(base.into(), exponent.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(TokKind::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(TokKind::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(TokKind::Ident(name)) => {
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    "sqrt" => Some(Func::Sqrt),
                    "abs" => Some(Func::Abs),
                    _ => None,
                };
                if let Some(func) = func {
                    self.pos += 1;
                    if self.peek() != Some(&TokKind::LParen) {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, arg.into()));
                }
                let var = match name.as_str() {
                    "pi" => {
                        self.pos += 1;
                        return Ok(Node::Num(std::f64::consts::PI));
                    }
                    "s" => Var::S,
                    "t" => Var::T,
                    "T" => Var::Period,
                    _ => return self.err(format!("unknown identifier `{name}`")),
                };
                if !self.allowed.contains(&var) {
                    return self.err(format!("variable `{name}` is not allowed here"));
                }
                self.pos += 1;
                Ok(Node::Var(var))
            }
            Some(other) => self.err(format!("unexpected {other:?}")),
            None => self.err("unexpected end of expression"),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek() == Some(&TokKind::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `)`")
        }
    }
}
