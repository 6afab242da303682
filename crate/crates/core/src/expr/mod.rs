//! Arithmetic expression language for user-supplied combination functions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := expr ('+' | '-') expr          left associative
//!          | expr ('*' | '/') expr          left associative
//!          | '-' expr
//!          | expr '^' expr                  right associative
//!          | number | name | name '(' args ')' | '(' expr ')'
//! name    := [a-zA-Z][a-zA-Z0-9_]*
//! number  := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
//! ```
//!
//! Functions: `log`, `exp`, `sqrt` (one argument) and `min`, `max` (one or
//! more). So `-2^2 = -4`, `2^3^2 = 512` and `2^-1 = 0.5`.

mod eval;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use self::eval::CompiledExpr;
pub use self::parser::parse_expression;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Log, Func::Exp, Func::Sqrt, Func::Min, Func::Max];

    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// `(min, max)` argument count.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Func::Log | Func::Exp | Func::Sqrt => (1, Some(1)),
            Func::Min | Func::Max => (1, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Free variable names in order of first appearance.
    pub fn free_variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(inner) => inner.collect_vars(out),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Evaluates with named bindings.
    pub fn eval(&self, bindings: &std::collections::HashMap<String, f64>) -> Result<f64, EvalError> {
        eval::eval_named(self, bindings)
    }
}

/// Fully parenthesized rendering; parses back to an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
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

pub fn free_variables(expr: &Expr) -> Vec<String> {
    expr.free_variables()
}

pub fn eval_expression(expr: &Expr, bindings: &std::collections::HashMap<String, f64>) -> Result<f64, EvalError> {
    expr.eval(bindings)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedToken,
    UnexpectedChar,
    BadNumber,
    UnknownFunction(String),
    Arity { func: &'static str, got: usize },
    TooDeep,
    TooLong,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    /// Token classes that would have been accepted.
    pub expected: Vec<&'static str>,
    pub message: String,
}

impl ParseError {
    fn unexpected(offset: usize, found: &str, expected: &[&'static str]) -> Self {
        Self {
            kind: ParseErrorKind::UnexpectedToken,
            offset,
            expected: expected.to_vec(),
            message: format!("syntax error: expected {}, found {found}", expected.join(" or ")),
        }
    }

    fn unexpected_char(offset: usize, ch: char) -> Self {
        Self {
            kind: ParseErrorKind::UnexpectedChar,
            offset,
            expected: vec![],
            message: format!("unexpected character `{ch}`"),
        }
    }

    fn bad_number(offset: usize, literal: &str) -> Self {
        Self {
            kind: ParseErrorKind::BadNumber,
            offset,
            expected: vec!["number"],
            message: format!("malformed or non-finite number `{literal}`"),
        }
    }

    fn unknown_function(offset: usize, name: &str) -> Self {
        let known: Vec<&str> = Func::ALL.iter().map(|f| f.name()).collect();
        Self {
            kind: ParseErrorKind::UnknownFunction(name.to_string()),
            offset,
            expected: vec![],
            message: format!("unknown function `{name}` (known: {})", known.join(", ")),
        }
    }

    fn too_deep(offset: usize) -> Self {
        Self {
            kind: ParseErrorKind::TooDeep,
            offset,
            expected: vec![],
            message: "expression nested too deeply".to_string(),
        }
    }

    fn too_long(offset: usize) -> Self {
        Self {
            kind: ParseErrorKind::TooLong,
            offset,
            expected: vec![],
            message: "expression has too many tokens".to_string(),
        }
    }

    fn arity(offset: usize, func: Func, got: usize) -> Self {
        Self {
            kind: ParseErrorKind::Arity { func: func.name(), got },
            offset,
            expected: vec![],
            message: format!("wrong number of arguments to `{}`: {got}", func.name()),
        }
    }
}

/// Failure evaluating a combiner on one draw.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} of {arg} is undefined")]
    Domain { func: &'static str, arg: f64 },
    #[error("non-finite result")]
    NonFinite,
    #[error("uninformative test: sensitivity {sens} + specificity {spec} <= 1")]
    UninformativeTest { sens: f64, spec: f64 },
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
}
