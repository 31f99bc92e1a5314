//! Arithmetic expressions over the sample size `n` and the number of
//! regressors `p`, used for hyperparameters such as `tau2 = "n^2"`.
//!
//! Grammar: numbers, `n`, `p`, `+ - * / ^`, unary minus and parentheses.
//! `^` is right associative and binds tighter than unary minus.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    N,
    P,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
}

/// A parsed expression together with its source text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExprSource", into = "ExprSource")]
pub struct Expr {
    source: String,
    node: Node,
}

/// Expressions may be written as TOML numbers or strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ExprSource {
    Number(f64),
    Text(String),
}

impl TryFrom<ExprSource> for Expr {
    type Error = Error;

    fn try_from(src: ExprSource) -> Result<Self> {
        match src {
            ExprSource::Number(v) => Ok(Expr::constant(v)),
            ExprSource::Text(t) => Expr::parse(&t),
        }
    }
}

impl From<Expr> for ExprSource {
    fn from(e: Expr) -> Self {
        match e.node {
            Node::Num(v) if e.source == format!("{v}") => ExprSource::Number(v),
            _ => ExprSource::Text(e.source),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr {
            source: format!("{v}"),
            node: Node::Num(v),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let node = parser.sum()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Config(format!(
                "unexpected trailing input in expression {text:?}"
            )));
        }
        Ok(Expr {
            source: text.trim().to_string(),
            node,
        })
    }

    /// Value at sample size `n` and `p` regressors.
    pub fn eval(&self, n: usize, p: usize) -> Result<f64> {
        let v = eval(&self.node, n as f64, p as f64);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!(
                "expression {:?} is not finite at n = {n}, p = {p}",
                self.source
            )))
        }
    }
}

fn eval(node: &Node, n: f64, p: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::N => n,
        Node::P => p,
        Node::Neg(a) => -eval(a, n, p),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, n, p), eval(b, n, p));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Var(char),
    Op(char),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                let v = lit
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {lit:?} in {text:?}")))?;
                out.push(Token::Num(v));
            }
            'n' | 'p' => {
                out.push(Token::Var(c));
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            _ => {
                return Err(Error::Config(format!(
                    "unexpected character {c:?} in expression {text:?}"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty expression".into()));
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

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned();
        self.pos += 1;
        match tok {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::Var('n')) => Ok(Node::N),
            Some(Token::Var(_)) => Ok(Node::P),
            Some(Token::Open) => {
                let inner = self.sum()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(Error::Config("missing closing parenthesis".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(Error::Config(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> f64 {
        Expr::parse(s).unwrap().eval(100, 29).unwrap()
    }

    #[test]
    fn evaluates_symbols_and_precedence() {
        assert_eq!(ev("n^2"), 10000.0);
        assert_eq!(ev("p"), 29.0);
        assert_eq!(ev("1 + 2 * 3"), 7.0);
        assert_eq!(ev("(1 + 2) * 3"), 9.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("n/(p+1)"), 100.0 / 30.0);
        assert_eq!(ev("1.5e2"), 150.0);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "n +", "(n", "q", "2 3", "n)"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
        assert!(Expr::parse("1/(n-n)").unwrap().eval(5, 2).is_err());
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        #[derive(Deserialize)]
        struct T {
            a: Expr,
            b: Expr,
        }
        let t: T = toml::from_str("a = 3\nb = \"n^2\"").unwrap();
        assert_eq!(t.a.eval(10, 2).unwrap(), 3.0);
        assert_eq!(t.b.eval(10, 2).unwrap(), 100.0);
    }
}
