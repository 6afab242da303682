use std::collections::HashMap;

use super::{BinOp, EvalError, Expr, Func};

/// An expression with its variables resolved to input slots.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    source: Expr,
    variables: Vec<String>,
    root: Node,
}

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl CompiledExpr {
    /// Binds variables to slots. With `names`, slot `i` is `names[i]` and
    /// every free variable must be listed; otherwise slots follow first
    /// appearance order.
    pub fn new(expr: Expr, names: Option<Vec<String>>) -> Result<Self, EvalError> {
        let variables = match names {
            Some(names) => {
                if let Some(missing) = expr.free_variables().into_iter().find(|v| !names.contains(v)) {
                    return Err(EvalError::UnboundVariable(missing));
                }
                names
            }
            None => expr.free_variables(),
        };
        let root = lower(&expr, &variables);
        Ok(Self {
            source: expr,
            variables,
            root,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn expr(&self) -> &Expr {
        &self.source
    }

    pub fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        if inputs.len() != self.variables.len() {
            return Err(EvalError::Arity {
                expected: self.variables.len(),
                got: inputs.len(),
            });
        }
        finite(eval_node(&self.root, inputs)?)
    }
}

fn lower(expr: &Expr, vars: &[String]) -> Node {
    match expr {
        Expr::Num(v) => Node::Num(*v),
        Expr::Var(name) => Node::Slot(
            vars.iter()
                .position(|v| v == name)
                .expect("variables resolved before lowering"),
        ),
        Expr::Neg(inner) => Node::Neg(Box::new(lower(inner, vars))),
        Expr::Binary(op, l, r) => Node::Binary(*op, Box::new(lower(l, vars)), Box::new(lower(r, vars))),
        Expr::Call(f, args) => Node::Call(*f, args.iter().map(|a| lower(a, vars)).collect()),
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_node(node: &Node, inputs: &[f64]) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Slot(i) => inputs[*i],
        Node::Neg(inner) => -eval_node(inner, inputs)?,
        Node::Binary(op, l, r) => binary(*op, eval_node(l, inputs)?, eval_node(r, inputs)?)?,
        Node::Call(f, args) => {
            let values = args
                .iter()
                .map(|a| eval_node(a, inputs))
                .collect::<Result<Vec<_>, _>>()?;
            call(*f, &values)?
        }
    })
}

pub(super) fn eval_named(expr: &Expr, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
    fn go(expr: &Expr, b: &HashMap<String, f64>) -> Result<f64, EvalError> {
        Ok(match expr {
            Expr::Num(v) => *v,
            Expr::Var(name) => *b.get(name).ok_or_else(|| EvalError::UnboundVariable(name.clone()))?,
            Expr::Neg(inner) => -go(inner, b)?,
            Expr::Binary(op, l, r) => binary(*op, go(l, b)?, go(r, b)?)?,
            Expr::Call(f, args) => {
                let values = args.iter().map(|a| go(a, b)).collect::<Result<Vec<_>, _>>()?;
                call(*f, &values)?
            }
        })
    }
    finite(go(expr, bindings)?)
}

fn binary(op: BinOp, l: f64, r: f64) -> Result<f64, EvalError> {
    Ok(match op {
        BinOp::Add => l + r,
        BinOp::Sub => l - r,
        BinOp::Mul => l * r,
        BinOp::Div => {
            if r == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            l / r
        }
        BinOp::Pow => l.powf(r),
    })
}

fn call(f: Func, args: &[f64]) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Log => {
            if args[0] <= 0.0 {
                return Err(EvalError::Domain {
                    func: "log",
                    arg: args[0],
                });
            }
            args[0].ln()
        }
        Func::Sqrt => {
            if args[0] < 0.0 {
                return Err(EvalError::Domain {
                    func: "sqrt",
                    arg: args[0],
                });
            }
            args[0].sqrt()
        }
        Func::Exp => args[0].exp(),
        Func::Min => args[1..].iter().fold(args[0], |acc, &v| acc.min(v)),
        Func::Max => args[1..].iter().fold(args[0], |acc, &v| acc.max(v)),
    })
}
