//! Functions mapping one joint draw to the combined parameter.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::epi::rogan_gladen;
use crate::error::{Error, Result};
use crate::expr::{parse_expression, CompiledExpr, EvalError};

/// A combination function of fixed arity.
pub trait CombineFn: Send + Sync + fmt::Debug {
    fn arity(&self) -> usize;

    /// Input names in slot order.
    fn variables(&self) -> Vec<String>;

    fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError>;
}

type Builder = fn(usize) -> Result<Arc<dyn CombineFn>>;

/// Built-in combiners by name. Each builder receives the requested arity.
const BUILTINS: &[(&str, Builder)] = &[
    ("product", |d| Ok(Arc::new(Product(variadic("product", d)?)))),
    ("sum", |d| Ok(Arc::new(Sum(variadic("sum", d)?)))),
    ("identity", |d| {
        fixed("identity", 1, d)?;
        Ok(Arc::new(Identity))
    }),
    ("roganGladen", |d| {
        fixed("roganGladen", 3, d)?;
        Ok(Arc::new(RoganGladen))
    }),
];

pub fn builtin_combiner_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

fn variadic(name: &str, arity: usize) -> Result<usize> {
    if arity == 0 {
        Err(Error::Dimension(format!("combiner `{name}` needs at least one input")))
    } else {
        Ok(arity)
    }
}

fn fixed(name: &str, expected: usize, arity: usize) -> Result<()> {
    if arity == expected {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "combiner `{name}` takes {expected} inputs, got {arity}"
        )))
    }
}

fn positional(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn check_arity(expected: usize, inputs: &[f64]) -> Result<(), EvalError> {
    if inputs.len() == expected {
        Ok(())
    } else {
        Err(EvalError::Arity {
            expected,
            got: inputs.len(),
        })
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

#[derive(Debug)]
struct Product(usize);

impl CombineFn for Product {
    fn arity(&self) -> usize {
        self.0
    }

    fn variables(&self) -> Vec<String> {
        positional(self.0)
    }

    fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.0, inputs)?;
        finite(inputs[1..].iter().fold(inputs[0], |acc, &v| acc * v))
    }
}

#[derive(Debug)]
struct Sum(usize);

impl CombineFn for Sum {
    fn arity(&self) -> usize {
        self.0
    }

    fn variables(&self) -> Vec<String> {
        positional(self.0)
    }

    fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.0, inputs)?;
        finite(inputs[1..].iter().fold(inputs[0], |acc, &v| acc + v))
    }
}

#[derive(Debug)]
struct Identity;

impl CombineFn for Identity {
    fn arity(&self) -> usize {
        1
    }

    fn variables(&self) -> Vec<String> {
        positional(1)
    }

    fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        check_arity(1, inputs)?;
        finite(inputs[0])
    }
}

/// Prevalence corrected for test sensitivity and specificity; inputs are
/// `(prev, sens, spec)`.
#[derive(Debug)]
struct RoganGladen;

impl CombineFn for RoganGladen {
    fn arity(&self) -> usize {
        3
    }

    fn variables(&self) -> Vec<String> {
        vec!["prev".into(), "sens".into(), "spec".into()]
    }

    fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        check_arity(3, inputs)?;
        rogan_gladen(inputs[0], inputs[1], inputs[2])
    }
}

#[derive(Debug)]
struct ExprCombiner(CompiledExpr);

impl CombineFn for ExprCombiner {
    fn arity(&self) -> usize {
        self.0.variables().len()
    }

    fn variables(&self) -> Vec<String> {
        self.0.variables().to_vec()
    }

    fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        self.0.eval(inputs)
    }
}

/// How a combiner was specified; this is what gets recorded and replayed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CombinerSource {
    Builtin {
        name: String,
        arity: usize,
    },
    Expression {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variables: Option<Vec<String>>,
    },
}

/// A resolved combiner: its source plus the strategy evaluating it.
#[derive(Clone)]
pub struct Combiner {
    source: CombinerSource,
    imp: Arc<dyn CombineFn>,
}

impl Combiner {
    /// Looks up a built-in combiner (case-insensitive) for `arity` inputs.
    pub fn builtin(name: &str, arity: usize) -> Result<Self> {
        let (canonical, build) = BUILTINS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::UnknownName {
                kind: "combiner",
                name: name.to_string(),
                known: builtin_combiner_names().collect::<Vec<_>>().join(", "),
            })?;
        Ok(Self {
            source: CombinerSource::Builtin {
                name: canonical.to_string(),
                arity,
            },
            imp: build(arity)?,
        })
    }

    /// Parses an expression. Without `variables`, inputs bind to free
    /// variables in order of first appearance.
    pub fn expression(text: &str, variables: Option<Vec<String>>) -> Result<Self> {
        let expr = parse_expression(text)?;
        if let Some(vars) = &variables {
            if let Some(dup) = vars
                .iter()
                .enumerate()
                .find_map(|(i, v)| vars[..i].contains(v).then_some(v))
            {
                return Err(Error::Config(format!("variable `{dup}` listed twice")));
            }
        }
        let compiled = CompiledExpr::new(expr, variables.clone())?;
        Ok(Self {
            source: CombinerSource::Expression {
                text: text.to_string(),
                variables,
            },
            imp: Arc::new(ExprCombiner(compiled)),
        })
    }

    pub fn from_source(source: &CombinerSource) -> Result<Self> {
        match source {
            CombinerSource::Builtin { name, arity } => Self::builtin(name, *arity),
            CombinerSource::Expression { text, variables } => Self::expression(text, variables.clone()),
        }
    }

    pub fn source(&self) -> &CombinerSource {
        &self.source
    }

    pub fn arity(&self) -> usize {
        self.imp.arity()
    }

    pub fn variables(&self) -> Vec<String> {
        self.imp.variables()
    }

    #[inline]
    pub fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        self.imp.eval(inputs)
    }
}

impl fmt::Debug for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.source.fmt(f)
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            CombinerSource::Builtin { name, .. } => f.write_str(name),
            CombinerSource::Expression { text, .. } => f.write_str(text),
        }
    }
}

impl Serialize for Combiner {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.source.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Combiner {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let source = CombinerSource::deserialize(deserializer)?;
        Combiner::from_source(&source).map_err(serde::de::Error::custom)
    }
}
