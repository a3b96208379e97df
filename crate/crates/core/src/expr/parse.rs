//! Expression text grammar.
//!
//! ```text
//! expr    := expr ('+' | '-') expr | expr ('*' | '/') expr
//!          | '-' expr | expr '^' expr | atom
//! atom    := number | ident | func '(' expr ')' | '(' expr ')'
//! number  := digits ['.' digits]
//! ident   := 'x1'..'x9' | 'u' | 'u1'..'u9'
//! func    := 'exp' | 'log' | 'sin' | 'cos' | 'sqrt'
//! ```
//!
//! `^` binds tightest and is right-associative; unary minus binds tighter
//! than `*` but looser than `^`, so `-x1^2` is `-(x1^2)`. Exponents must
//! simplify to integer constants. `a/b` literals are ordinary division of
//! constants. With a [`SymbolResolver`], coefficient symbols `name[i,j,...]`
//! and derivatives `d(name[...], var, ...)` are accepted as well.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Expr, Func, Node, Symbol, VarId};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl ParseError {
    /// Shift a position measured inside a value string to file coordinates.
    pub fn offset(mut self, line: usize, column: usize) -> Self {
        self.line = line;
        self.column += column.saturating_sub(1);
        self
    }
}

/// Maps symbol names and indices to the variables the symbol depends on.
pub trait SymbolResolver {
    fn resolve(&self, name: &str, indices: &[usize]) -> Option<Vec<VarId>>;
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn err(col: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line: 1, column: col, message: msg.into() }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int: String = chars[start..i].iter().collect();
            let mut value = Rational::from_integer(int.parse::<BigInt>().unwrap_or_default());
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if fs == i {
                    return Err(err(col, "expected digits after decimal point"));
                }
                let frac: String = chars[fs..i].iter().collect();
                let scale = num_traits::pow(BigInt::from(10), i - fs);
                value += Rational::new(frac.parse::<BigInt>().unwrap(), scale);
            }
            out.push(Token { tok: Tok::Num(value), col });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if "+-*/^()[],".contains(c) {
            out.push(Token { tok: Tok::Op(c), col });
            i += 1;
        } else {
            return Err(err(col, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    end_col: usize,
    symbols: Option<&'a dyn SymbolResolver>,
}

// Binding powers: (left, right).
const ADD: (u8, u8) = (1, 2);
const MUL: (u8, u8) = (3, 4);
const UNARY: u8 = 5;
const POW: (u8, u8) = (7, 6);

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn col(&self) -> usize {
        self.peek().map_or(self.end_col, |t| t.col)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        let col = self.col();
        match self.next() {
            Some(Token { tok: Tok::Op(d), .. }) if d == c => Ok(()),
            Some(t) => Err(err(t.col, format!("expected '{c}', found {}", describe(&t.tok)))),
            None => Err(err(col, format!("expected '{c}', found end of input"))),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let Some(Token { tok: Tok::Op(op), .. }) = self.peek() else { break };
            let op = *op;
            let (l, r) = match op {
                '+' | '-' => ADD,
                '*' | '/' => MUL,
                '^' => POW,
                _ => break,
            };
            if l < min_bp {
                break;
            }
            self.next();
            let rhs_col = self.col();
            let rhs = self.expr(r)?;
            lhs = match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => {
                    if rhs.is_identically_zero() {
                        return Err(err(rhs_col, "division by zero"));
                    }
                    lhs / rhs
                }
                _ => {
                    let k = rhs
                        .simplify()
                        .as_const()
                        .filter(|c| c.is_integer())
                        .and_then(|c| c.to_integer().to_i64())
                        .ok_or_else(|| err(rhs_col, "exponent must be an integer constant"))?;
                    if k < 0 && lhs.is_identically_zero() {
                        return Err(err(rhs_col, "negative power of zero"));
                    }
                    match k {
                        0 => Expr::one(),
                        _ => Expr::from_node(Node::Power(lhs, k)),
                    }
                }
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        let Some(t) = self.next() else {
            return Err(err(col, "unexpected end of input"));
        };
        match t.tok {
            Tok::Num(c) => Ok(Expr::constant(c)),
            Tok::Op('-') => Ok(-self.expr(UNARY)?),
            Tok::Op('+') => self.expr(UNARY),
            Tok::Op('(') => {
                let e = self.expr(0)?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(&name, t.col),
            Tok::Op(c) => Err(err(t.col, format!("unexpected '{c}'"))),
        }
    }

    fn ident(&mut self, name: &str, col: usize) -> Result<Expr, ParseError> {
        if let Some(f) = Func::from_name(name) {
            self.expect('(')?;
            let arg = self.expr(0)?;
            self.expect(')')?;
            return Ok(Expr::fun(f, arg));
        }
        if let Some(v) = variable(name) {
            return Ok(Expr::var(v));
        }
        if self.symbols.is_some() {
            if name == "d" && self.at('(') {
                return self.derivative(col);
            }
            if self.at('[') {
                return self.symbol(name, col).map(Expr::sym);
            }
        }
        Err(err(col, format!("unknown identifier '{name}'")))
    }

    fn at(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Op(d), .. }) if *d == c)
    }

    fn symbol(&mut self, name: &str, col: usize) -> Result<Symbol, ParseError> {
        self.expect('[')?;
        let mut indices = Vec::new();
        loop {
            let c = self.col();
            match self.next() {
                Some(Token { tok: Tok::Num(v), .. }) if v.is_integer() => {
                    let i = v.to_integer().to_usize().ok_or_else(|| err(c, "index out of range"))?;
                    indices.push(i);
                }
                _ => return Err(err(c, "expected a non-negative integer index")),
            }
            if self.at(',') {
                self.next();
            } else {
                break;
            }
        }
        self.expect(']')?;
        let resolver = self.symbols.expect("symbol mode");
        let args = resolver
            .resolve(name, &indices)
            .ok_or_else(|| err(col, format!("unknown symbol '{name}' with {} indices", indices.len())))?;
        Ok(Symbol::new(name, indices, args))
    }

    fn derivative(&mut self, col: usize) -> Result<Expr, ParseError> {
        self.expect('(')?;
        let scol = self.col();
        let Some(Token { tok: Tok::Ident(name), .. }) = self.next() else {
            return Err(err(scol, "expected a coefficient symbol"));
        };
        let mut sym = self.symbol(&name, scol)?;
        let mut vanished = false;
        while self.at(',') {
            self.next();
            let vcol = self.col();
            let v = match self.next() {
                Some(Token { tok: Tok::Ident(n), .. }) => variable(&n),
                _ => None,
            }
            .ok_or_else(|| err(vcol, "expected a variable"))?;
            match sym.differentiated(v) {
                Some(s) => sym = s,
                None => vanished = true,
            }
        }
        self.expect(')')?;
        if sym.derivs().is_empty() && !vanished {
            return Err(err(col, "derivative needs at least one variable"));
        }
        Ok(if vanished { Expr::zero() } else { Expr::sym(sym) })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(c) => format!("number {c}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(c) => format!("'{c}'"),
    }
}

fn variable(name: &str) -> Option<VarId> {
    let (head, digits) = name.split_at(1);
    let index = match digits {
        "" if head == "u" => 1,
        d if d.len() == 1 => d.parse::<usize>().ok().filter(|i| *i >= 1)?,
        _ => return None,
    };
    match head {
        "x" if !digits.is_empty() => Some(VarId::Indep(index)),
        "u" => Some(VarId::Dep(index)),
        _ => None,
    }
}

fn run(text: &str, symbols: Option<&dyn SymbolResolver>) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let end_col = text.chars().count() + 1;
    let mut p = Parser { toks, pos: 0, end_col, symbols };
    let e = p.expr(0)?;
    if let Some(t) = p.peek() {
        return Err(err(t.col, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(e)
}

/// Parse an expression. The tree is returned as written (not simplified).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    run(text, None)
}

/// Parse an expression that may contain coefficient symbols.
pub fn parse_expr_with(text: &str, symbols: &dyn SymbolResolver) -> Result<Expr, ParseError> {
    run(text, Some(symbols))
}
