//! The symbolic transformation language features are written in.
//!
//! Every feature is a row-local expression over the raw columns: arithmetic,
//! a small function set, 0/1 comparisons, categorical flags, and a ternary
//! conditional. The concrete grammar:
//!
//! ```text
//! expr     := additive (cmpop additive)?          cmpop: < <= > >= ==
//! additive := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := base ('^' factor)?                  '^' is right-associative
//! base     := '-' base
//!           | number
//!           | ident '==' string-literal           categorical flag
//!           | func '(' expr (',' expr)* ')'       log log1p sqrt abs square min max if
//!           | ident
//!           | '(' expr ')'
//! ```
//!
//! Comparisons bind loosest, then `+`/`-`, then `*`/`/`, then `^`, then unary
//! minus (so `-a ^ b` is `(-a) ^ b`). Comparisons and flags evaluate to 0/1.
//!
//! Evaluation is total: a row where an operand is missing or an operation is
//! undefined (division by zero, log of a non-positive value, square root of a
//! negative, `0 ^ negative`, or any non-finite intermediate) produces the
//! missing marker for that row instead of aborting.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::dataset::{ColumnKind, ColumnValues, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    ColumnRef(String),
    /// Literal constant. The parser only produces non-negative finite
    /// literals; negative values are spelled with unary minus.
    Const(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    CatFlag(String, String),
    IfThenElse(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Log,
    Log1p,
    Sqrt,
    Abs,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("{function} expects {expected} argument(s), got {got} (at byte {position})")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
        position: usize,
    },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("column '{0}' is categorical; reference it through a flag like {0} == \"value\"")]
    NotNumeric(String),
    #[error("flag comparison requires a categorical column, but '{0}' is numeric")]
    NotCategorical(String),
    #[error("'{0}' is not a valid feature name (want [A-Za-z_][A-Za-z0-9_]*)")]
    BadName(String),
    #[error("{0} must be non-empty")]
    EmptyField(&'static str),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<SpannedTok>, DslError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                out.push(SpannedTok {
                    tok: Tok::Plus,
                    pos: i,
                });
                i += 1;
            }
            b'-' => {
                out.push(SpannedTok {
                    tok: Tok::Minus,
                    pos: i,
                });
                i += 1;
            }
            b'*' => {
                out.push(SpannedTok {
                    tok: Tok::Star,
                    pos: i,
                });
                i += 1;
            }
            b'/' => {
                out.push(SpannedTok {
                    tok: Tok::Slash,
                    pos: i,
                });
                i += 1;
            }
            b'^' => {
                out.push(SpannedTok {
                    tok: Tok::Caret,
                    pos: i,
                });
                i += 1;
            }
            b'(' => {
                out.push(SpannedTok {
                    tok: Tok::LParen,
                    pos: i,
                });
                i += 1;
            }
            b')' => {
                out.push(SpannedTok {
                    tok: Tok::RParen,
                    pos: i,
                });
                i += 1;
            }
            b',' => {
                out.push(SpannedTok {
                    tok: Tok::Comma,
                    pos: i,
                });
                i += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(SpannedTok {
                        tok: Tok::Le,
                        pos: i,
                    });
                    i += 2;
                } else {
                    out.push(SpannedTok {
                        tok: Tok::Lt,
                        pos: i,
                    });
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(SpannedTok {
                        tok: Tok::Ge,
                        pos: i,
                    });
                    i += 2;
                } else {
                    out.push(SpannedTok {
                        tok: Tok::Gt,
                        pos: i,
                    });
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(SpannedTok {
                        tok: Tok::EqEq,
                        pos: i,
                    });
                    i += 2;
                } else {
                    return Err(DslError::Syntax {
                        position: i,
                        message: "single '=' is not an operator; use '=='".into(),
                    });
                }
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(DslError::Syntax {
                                position: start,
                                message: "unterminated string literal".into(),
                            })
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => match bytes.get(i + 1) {
                            Some(b'"') => {
                                s.push('"');
                                i += 2;
                            }
                            Some(b'\\') => {
                                s.push('\\');
                                i += 2;
                            }
                            _ => {
                                return Err(DslError::Syntax {
                                    position: i,
                                    message: "unsupported escape; only \\\" and \\\\".into(),
                                })
                            }
                        },
                        Some(_) => {
                            // Multi-byte UTF-8 is copied through verbatim.
                            let ch_len = src[i..].chars().next().map(char::len_utf8).unwrap_or(1);
                            s.push_str(&src[i..i + ch_len]);
                            i += ch_len;
                        }
                    }
                }
                out.push(SpannedTok {
                    tok: Tok::Str(s),
                    pos: start,
                });
            }
            b'0'..=b'9' | b'.' => {
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
                let value: f64 = text.parse().map_err(|_| DslError::Syntax {
                    position: start,
                    message: format!("invalid number literal '{text}'"),
                })?;
                if !value.is_finite() {
                    return Err(DslError::Syntax {
                        position: start,
                        message: format!("number literal '{text}' out of range"),
                    });
                }
                out.push(SpannedTok {
                    tok: Tok::Num(value),
                    pos: start,
                });
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(SpannedTok {
                    tok: Tok::Ident(src[start..i].to_string()),
                    pos: start,
                });
            }
            _ => {
                return Err(DslError::Syntax {
                    position: i,
                    message: format!(
                        "unexpected character '{}'",
                        src[i..].chars().next().unwrap()
                    ),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<SpannedTok>,
    at: usize,
    len: usize,
}

pub fn parse(src: &str) -> Result<Expr, DslError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        len: src.len(),
    };
    let expr = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(DslError::Syntax {
            position: t.pos,
            message: format!("unexpected trailing input near '{:?}'", t.tok),
        });
    }
    Ok(expr)
}

impl Parser {
    fn peek(&self) -> Option<&SpannedTok> {
        self.toks.get(self.at)
    }

    fn peek2(&self) -> Option<&SpannedTok> {
        self.toks.get(self.at + 1)
    }

    fn bump(&mut self) -> Option<SpannedTok> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), DslError> {
        match self.bump() {
            Some(t) if t.tok == want => Ok(()),
            Some(t) => Err(DslError::Syntax {
                position: t.pos,
                message: format!("expected {what}"),
            }),
            None => Err(DslError::Syntax {
                position: self.len,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let lhs = self.additive()?;
        let op = match self.peek().map(|t| &t.tok) {
            Some(Tok::Lt) => Some(CmpOp::Lt),
            Some(Tok::Le) => Some(CmpOp::Le),
            Some(Tok::Gt) => Some(CmpOp::Gt),
            Some(Tok::Ge) => Some(CmpOp::Ge),
            Some(Tok::EqEq) => Some(CmpOp::Eq),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.additive()?;
            return Ok(Expr::Compare(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut node = self.term()?;
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    node = Expr::Binary(BinaryOp::Add, Box::new(node), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    node = Expr::Binary(BinaryOp::Sub, Box::new(node), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut node = self.factor()?;
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    node = Expr::Binary(BinaryOp::Mul, Box::new(node), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    node = Expr::Binary(BinaryOp::Div, Box::new(node), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Expr, DslError> {
        let base = self.base()?;
        if self.peek().map(|t| &t.tok) == Some(&Tok::Caret) {
            self.bump();
            let rhs = self.factor()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(rhs)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, DslError> {
        let t = match self.bump() {
            Some(t) => t,
            None => {
                return Err(DslError::Syntax {
                    position: self.len,
                    message: "expected expression, found end of input".into(),
                })
            }
        };
        match t.tok {
            Tok::Minus => {
                let child = self.base()?;
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(child)))
            }
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                // Categorical flag: ident '==' string-literal binds tightly.
                if self.peek().map(|t| &t.tok) == Some(&Tok::EqEq) {
                    if let Some(SpannedTok {
                        tok: Tok::Str(_), ..
                    }) = self.peek2()
                    {
                        self.bump();
                        if let Some(SpannedTok {
                            tok: Tok::Str(s), ..
                        }) = self.bump()
                        {
                            return Ok(Expr::CatFlag(name, s));
                        }
                        unreachable!("peeked a string literal");
                    }
                }
                if self.peek().map(|t| &t.tok) == Some(&Tok::LParen) {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while self.peek().map(|t| &t.tok) == Some(&Tok::Comma) {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    return self.call(&name, args, t.pos);
                }
                Ok(Expr::ColumnRef(name))
            }
            Tok::Str(_) => Err(DslError::Syntax {
                position: t.pos,
                message: "string literal only allowed as column == \"value\"".into(),
            }),
            other => Err(DslError::Syntax {
                position: t.pos,
                message: format!("expected expression, found '{other:?}'"),
            }),
        }
    }

    fn call(&mut self, name: &str, mut args: Vec<Expr>, pos: usize) -> Result<Expr, DslError> {
        let unary = |op: UnaryOp, mut args: Vec<Expr>| Expr::Unary(op, Box::new(args.remove(0)));
        let arity = |expected: usize, got: usize| DslError::Arity {
            function: name.to_string(),
            expected,
            got,
            position: pos,
        };
        match name {
            "log" | "log1p" | "sqrt" | "abs" | "square" => {
                if args.len() != 1 {
                    return Err(arity(1, args.len()));
                }
                let op = match name {
                    "log" => UnaryOp::Log,
                    "log1p" => UnaryOp::Log1p,
                    "sqrt" => UnaryOp::Sqrt,
                    "abs" => UnaryOp::Abs,
                    _ => UnaryOp::Square,
                };
                Ok(unary(op, args))
            }
            "min" | "max" => {
                if args.len() != 2 {
                    return Err(arity(2, args.len()));
                }
                let op = if name == "min" {
                    BinaryOp::Min
                } else {
                    BinaryOp::Max
                };
                let right = args.pop().unwrap();
                let left = args.pop().unwrap();
                Ok(Expr::Binary(op, Box::new(left), Box::new(right)))
            }
            "if" => {
                if args.len() != 3 {
                    return Err(arity(3, args.len()));
                }
                let otherwise = args.pop().unwrap();
                let then = args.pop().unwrap();
                let cond = args.pop().unwrap();
                Ok(Expr::IfThenElse(
                    Box::new(cond),
                    Box::new(then),
                    Box::new(otherwise),
                ))
            }
            _ => Err(DslError::Syntax {
                position: pos,
                message: format!("unknown function '{name}'"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// Binding strength used to decide where parentheses are required.
fn level(expr: &Expr) -> u8 {
    match expr {
        Expr::Compare(..) => 0,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Expr::Binary(BinaryOp::Pow, ..) => 3,
        Expr::Unary(UnaryOp::Neg, _) => 4,
        _ => 5,
    }
}

fn escape_token(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out
}

fn write_expr(expr: &Expr, min_level: u8, out: &mut String) {
    if level(expr) < min_level {
        out.push('(');
        write_expr(expr, 0, out);
        out.push(')');
        return;
    }
    match expr {
        Expr::ColumnRef(name) => out.push_str(name),
        Expr::Const(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Unary(UnaryOp::Neg, child) => {
            out.push('-');
            write_expr(child, 4, out);
        }
        Expr::Unary(op, child) => {
            let name = match op {
                UnaryOp::Log => "log",
                UnaryOp::Log1p => "log1p",
                UnaryOp::Sqrt => "sqrt",
                UnaryOp::Abs => "abs",
                UnaryOp::Square => "square",
                UnaryOp::Neg => unreachable!(),
            };
            out.push_str(name);
            out.push('(');
            write_expr(child, 0, out);
            out.push(')');
        }
        Expr::Binary(BinaryOp::Min, l, r) | Expr::Binary(BinaryOp::Max, l, r) => {
            let name = if matches!(expr, Expr::Binary(BinaryOp::Min, ..)) {
                "min"
            } else {
                "max"
            };
            out.push_str(name);
            out.push('(');
            write_expr(l, 0, out);
            out.push_str(", ");
            write_expr(r, 0, out);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            let (sym, lvl, right_min) = match op {
                BinaryOp::Add => ("+", 1, 2),
                BinaryOp::Sub => ("-", 1, 2),
                BinaryOp::Mul => ("*", 2, 3),
                BinaryOp::Div => ("/", 2, 3),
                // Right-associative: the left side needs strictly tighter binding.
                BinaryOp::Pow => ("^", 4, 3),
                BinaryOp::Min | BinaryOp::Max => unreachable!(),
            };
            write_expr(l, lvl, out);
            let _ = write!(out, " {sym} ");
            write_expr(r, right_min, out);
        }
        Expr::Compare(op, l, r) => {
            write_expr(l, 1, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(r, 1, out);
        }
        Expr::CatFlag(column, token) => {
            let _ = write!(out, "{column} == \"{}\"", escape_token(token));
        }
        Expr::IfThenElse(c, t, e) => {
            out.push_str("if(");
            write_expr(c, 0, out);
            out.push_str(", ");
            write_expr(t, 0, out);
            out.push_str(", ");
            write_expr(e, 0, out);
            out.push(')');
        }
    }
}

/// Canonical source text with minimal parentheses; `parse(format(e))`
/// structurally equals `e` for any expression the parser can produce.
pub fn format(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(expr, 0, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Validation, evaluation, free columns
// ---------------------------------------------------------------------------

/// Checks column resolution and kind rules: `ColumnRef` must name a numeric
/// column (raw categorical columns only enter arithmetic through flags) and
/// `CatFlag` must name a categorical one.
pub fn validate(expr: &Expr, dataset: &Dataset) -> Result<(), DslError> {
    match expr {
        Expr::ColumnRef(name) => match dataset.column(name) {
            None => Err(DslError::UnknownColumn(name.clone())),
            Some(col) if col.kind() == ColumnKind::Categorical => {
                Err(DslError::NotNumeric(name.clone()))
            }
            Some(_) => Ok(()),
        },
        Expr::CatFlag(name, _) => match dataset.column(name) {
            None => Err(DslError::UnknownColumn(name.clone())),
            Some(col) if col.kind() == ColumnKind::Numeric => {
                Err(DslError::NotCategorical(name.clone()))
            }
            Some(_) => Ok(()),
        },
        Expr::Const(_) => Ok(()),
        Expr::Unary(_, child) => validate(child, dataset),
        Expr::Binary(_, l, r) | Expr::Compare(_, l, r) => {
            validate(l, dataset)?;
            validate(r, dataset)
        }
        Expr::IfThenElse(c, t, e) => {
            validate(c, dataset)?;
            validate(t, dataset)?;
            validate(e, dataset)
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Evaluates a validated expression over every row, yielding the missing
/// marker wherever an operand is missing or the operation is undefined.
pub fn evaluate(expr: &Expr, dataset: &Dataset) -> Vec<Option<f64>> {
    let n = dataset.n_rows;
    match expr {
        Expr::ColumnRef(name) => match &dataset.column(name).expect("validated").values {
            ColumnValues::Numeric(vals) => vals.clone(),
            ColumnValues::Categorical(_) => unreachable!("validated: ColumnRef is numeric"),
        },
        Expr::Const(v) => vec![Some(*v); n],
        Expr::Unary(op, child) => {
            let vals = evaluate(child, dataset);
            vals.into_iter()
                .map(|cell| {
                    cell.and_then(|v| match op {
                        UnaryOp::Neg => finite(-v),
                        UnaryOp::Log => (v > 0.0).then(|| v.ln()).and_then(finite),
                        UnaryOp::Log1p => (v > -1.0).then(|| v.ln_1p()).and_then(finite),
                        UnaryOp::Sqrt => (v >= 0.0).then(|| v.sqrt()).and_then(finite),
                        UnaryOp::Abs => finite(v.abs()),
                        UnaryOp::Square => finite(v * v),
                    })
                })
                .collect()
        }
        Expr::Binary(op, l, r) => {
            let lv = evaluate(l, dataset);
            let rv = evaluate(r, dataset);
            lv.into_iter()
                .zip(rv)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => match op {
                        BinaryOp::Add => finite(a + b),
                        BinaryOp::Sub => finite(a - b),
                        BinaryOp::Mul => finite(a * b),
                        BinaryOp::Div => {
                            if b == 0.0 {
                                None
                            } else {
                                finite(a / b)
                            }
                        }
                        BinaryOp::Min => finite(a.min(b)),
                        BinaryOp::Max => finite(a.max(b)),
                        BinaryOp::Pow => {
                            if a == 0.0 && b < 0.0 {
                                None
                            } else {
                                finite(a.powf(b))
                            }
                        }
                    },
                    _ => None,
                })
                .collect()
        }
        Expr::Compare(op, l, r) => {
            let lv = evaluate(l, dataset);
            let rv = evaluate(r, dataset);
            lv.into_iter()
                .zip(rv)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => {
                        let hit = match op {
                            CmpOp::Lt => a < b,
                            CmpOp::Le => a <= b,
                            CmpOp::Gt => a > b,
                            CmpOp::Ge => a >= b,
                            CmpOp::Eq => a == b,
                        };
                        Some(if hit { 1.0 } else { 0.0 })
                    }
                    _ => None,
                })
                .collect()
        }
        Expr::CatFlag(name, token) => match &dataset.column(name).expect("validated").values {
            ColumnValues::Categorical(vals) => vals
                .iter()
                .map(|cell| cell.as_ref().map(|v| if v == token { 1.0 } else { 0.0 }))
                .collect(),
            ColumnValues::Numeric(_) => unreachable!("validated: CatFlag is categorical"),
        },
        Expr::IfThenElse(c, t, e) => {
            let cv = evaluate(c, dataset);
            let tv = evaluate(t, dataset);
            let ev = evaluate(e, dataset);
            cv.into_iter()
                .zip(tv.into_iter().zip(ev))
                .map(|(c, (t, e))| match c {
                    None => None,
                    Some(c) if c != 0.0 => t,
                    Some(_) => e,
                })
                .collect()
        }
    }
}

/// Exactly the column names referenced by `ColumnRef` or `CatFlag` nodes.
pub fn free_columns(expr: &Expr) -> BTreeSet<String> {
    fn walk(expr: &Expr, out: &mut BTreeSet<String>) {
        match expr {
            Expr::ColumnRef(name) | Expr::CatFlag(name, _) => {
                out.insert(name.clone());
            }
            Expr::Const(_) => {}
            Expr::Unary(_, child) => walk(child, out),
            Expr::Binary(_, l, r) | Expr::Compare(_, l, r) => {
                walk(l, out);
                walk(r, out);
            }
            Expr::IfThenElse(c, t, e) => {
                walk(c, out);
                walk(t, out);
                walk(e, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(expr, &mut out);
    out
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A named feature definition with its provenance and rationale.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformation {
    pub name: String,
    pub expr: Expr,
    pub justification: String,
    pub explanation: String,
    pub created_iter: u64,
    /// Canonical DSL text; always equals `format(&expr)`.
    pub source_text: String,
}

impl Transformation {
    /// Parses and validates `source` against the dataset, canonicalizing the
    /// stored text. Justification and explanation must be non-empty.
    pub fn new(
        name: impl Into<String>,
        source: &str,
        justification: impl Into<String>,
        explanation: impl Into<String>,
        created_iter: u64,
        dataset: &Dataset,
    ) -> Result<Self, DslError> {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(DslError::BadName(name));
        }
        let justification = justification.into();
        let explanation = explanation.into();
        if justification.trim().is_empty() {
            return Err(DslError::EmptyField("justification"));
        }
        if explanation.trim().is_empty() {
            return Err(DslError::EmptyField("explanation"));
        }
        let expr = parse(source)?;
        validate(&expr, dataset)?;
        let source_text = format(&expr);
        Ok(Transformation {
            name,
            expr,
            justification,
            explanation,
            created_iter,
            source_text,
        })
    }
}
