//! Surface syntax for symbol expressions.
//!
//! Grammar (integer exponents only):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' int | '^' '(' '-'? int ')')?
//! atom  := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `x`, `xi`, `y` (optionally indexed: `x1`, `xi2`), the imaginary
//! unit `i`, or names defined earlier in a symbol file. Functions are `exp` and
//! `angle`, the latter meaning `(1 + |v|^2)^{1/2}` of its arguments.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    /// Literal text of a nonnegative decimal.
    Num(String),
    Ident(String),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i64),
    Call(Func, Vec<Ast>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(text: &str, line: usize) -> Result<Lexer> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let save = k;
                k += 1;
                if k < chars.len() && (chars[k] == '-' || chars[k] == '+') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                } else {
                    k = save;
                }
            }
            let s: String = chars[start..k].iter().collect();
            if s.matches('.').count() > 1 || s == "." {
                return Err(Error::Parse {
                    line,
                    column: col,
                    message: format!("malformed number `{s}`"),
                });
            }
            toks.push((Tok::Num(s), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            toks.push((Tok::Ident(chars[start..k].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            toks.push((Tok::Sym(c), col));
            k += 1;
        } else {
            return Err(Error::Parse {
                line,
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    toks.push((Tok::End, chars.len() + 1));
    Ok(Lexer { toks })
}

struct Parser {
    lex: Lexer,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.lex.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.lex.toks[self.pos].1
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.col(),
            message: message.into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn int(&mut self) -> Result<i64> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let v = s
                    .parse::<i64>()
                    .map_err(|_| self.err(format!("exponent must be an integer, got `{s}`")))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected an integer exponent")),
        }
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let n = if self.eat('(') {
            let neg = self.eat('-');
            let v = self.int()?;
            self.expect(')')?;
            if neg {
                -v
            } else {
                v
            }
        } else {
            self.int()?
        };
        Ok(Ast::Pow(Box::new(base), n))
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.peek().clone() {
            Tok::Num(s) => {
                self.pos += 1;
                Ok(Ast::Num(s))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "angle" => Some(Func::Angle),
                    _ => None,
                };
                match func {
                    Some(f) => {
                        self.expect('(')?;
                        let mut args = vec![self.expr()?];
                        while self.eat(',') {
                            args.push(self.expr()?);
                        }
                        self.expect(')')?;
                        if f == Func::Exp && args.len() != 1 {
                            return Err(self.err("exp takes one argument"));
                        }
                        Ok(Ast::Call(f, args))
                    }
                    None => Ok(Ast::Ident(name)),
                }
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::End => Err(self.err("unexpected end of input")),
            Tok::Sym(c) => Err(self.err(format!("unexpected `{c}`"))),
        }
    }
}

/// Parse one expression; `line` is used in error positions.
pub fn parse_line(text: &str, line: usize) -> Result<Ast> {
    let lex = lex(text, line)?;
    let mut p = Parser { lex, pos: 0, line };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

pub fn parse(text: &str) -> Result<Ast> {
    parse_line(text, 1)
}

impl Ast {
    fn prec(&self) -> u8 {
        match self {
            Ast::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Ast::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Ast::Neg(_) => 3,
            Ast::Pow(..) => 4,
            _ => 5,
        }
    }

    /// Identifiers referenced by the expression.
    pub fn idents(&self, out: &mut Vec<String>) {
        match self {
            Ast::Ident(s) => out.push(s.clone()),
            Ast::Num(_) => {}
            Ast::Neg(a) | Ast::Pow(a, _) => a.idents(out),
            Ast::Bin(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
            Ast::Call(_, args) => args.iter().for_each(|a| a.idents(out)),
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, a: &Ast, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({a})")
    } else {
        write!(f, "{a}")
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Num(s) | Ast::Ident(s) => write!(f, "{s}"),
            Ast::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.prec() < 3)
            }
            Ast::Bin(op, a, b) => {
                let p = self.prec();
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                wrap(f, a, a.prec() < p)?;
                write!(f, "{sym}")?;
                wrap(f, b, b.prec() <= p)
            }
            Ast::Pow(a, n) => {
                wrap(f, a, a.prec() < 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Ast::Call(func, args) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Angle => "angle",
                };
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
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
    fn prints_canonical_text_back() {
        for t in [
            "exp(-xi^2/2)",
            "angle(x)^(-2)",
            "x*xi + 2*i",
            "exp(-x^2 - xi^2)",
            "(x - y)*xi",
            "a - (b - c)",
            "-(x + 1)",
        ] {
            assert_eq!(parse(t).unwrap().to_string(), t);
        }
    }

    #[test]
    fn error_positions() {
        match parse("x + * 2") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        match parse_line("exp(x", 3) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 6);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("x^0.5").is_err());
        assert!(parse("x $ 2").is_err());
    }
}
