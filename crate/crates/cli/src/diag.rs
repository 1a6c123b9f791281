//! Exit codes and machine-readable diagnostics.
//!
//! Every error and warning goes to stderr as one JSON object per line.

use serde_json::{json, Map, Value};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit_code: i32,
    pub message: String,
    pub details: Map<String, Value>,
}

impl CliError {
    pub fn new(code: &'static str, exit_code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            exit_code,
            message: message.into(),
            details: Map::new(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", EXIT_USAGE, message)
    }

    pub fn parse(path: &str, line: Option<u64>, message: impl Into<String>) -> Self {
        let message = message.into();
        let text = match line {
            Some(l) => format!("{path}:{l}: {message}"),
            None => format!("{path}: {message}"),
        };
        let mut e = Self::new("parse_error", EXIT_USAGE, text);
        e.details.insert("path".into(), json!(path));
        if let Some(l) = line {
            e.details.insert("line".into(), json!(l));
        }
        e
    }

    pub fn io(path: &str, err: std::io::Error) -> Self {
        let mut e = Self::new("io_error", EXIT_USAGE, format!("{path}: {err}"));
        e.details.insert("path".into(), json!(path));
        e
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("level".into(), json!("error"));
        obj.insert("code".into(), json!(self.code));
        obj.insert("exit_code".into(), json!(self.exit_code));
        obj.insert("message".into(), json!(self.message));
        for (k, v) in &self.details {
            obj.insert(k.clone(), v.clone());
        }
        Value::Object(obj)
    }
}

impl From<peai::Error> for CliError {
    fn from(err: peai::Error) -> Self {
        use peai::Error as E;
        let message = err.to_string();
        match err.root() {
            E::SingularCovariance { index, pivot } => {
                CliError::new("singular_covariance", EXIT_NUMERICAL, message)
                    .with("pivot_index", json!(index))
                    .with("pivot", finite_or_null(*pivot))
            }
            E::DegenerateFrontier { delta, mu_spread } => {
                let mut e = CliError::new("degenerate_frontier", EXIT_NUMERICAL, message)
                    .with("delta", finite_or_null(*delta));
                if let Some(s) = mu_spread {
                    e = e.with("mu_spread", finite_or_null(*s));
                }
                e
            }
            E::Infeasible { target, lo, hi } => {
                CliError::new("infeasible", EXIT_INFEASIBLE, message)
                    .with("target", json!(target))
                    .with("attainable", json!([lo, hi]))
            }
            E::IllPosedFit(_) => CliError::new("ill_posed_fit", EXIT_NUMERICAL, message),
            E::Numerical(_) => CliError::new("numerical_failure", EXIT_NUMERICAL, message),
            E::NonFinite(_) => CliError::new("non_finite", EXIT_USAGE, message),
            E::InsufficientSamples { .. } => {
                CliError::new("insufficient_samples", EXIT_USAGE, message)
            }
            E::NotSquare { .. } | E::Asymmetric { .. } | E::Dimension(_) => {
                CliError::new("shape_error", EXIT_USAGE, message)
            }
            E::InvalidParameter(_) | E::SizeLimit { .. } | E::AtComplexity { .. } => {
                CliError::new("invalid_parameter", EXIT_USAGE, message)
            }
        }
    }
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn warn(code: &str, message: impl AsRef<str>) {
    let line = json!({"level": "warning", "code": code, "message": message.as_ref()});
    eprintln!("{line}");
}
