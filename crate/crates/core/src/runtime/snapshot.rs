//! Data visible to one FB instance, and guard evaluation over it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use core::cmp::Ordering;

use crate::model::{CmpOp, DataKind, Expr, FbType, Value};

/// Failure reported by an algorithm or service.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct AlgError(pub String);

impl AlgError {
    pub fn new(msg: impl Into<String>) -> Self {
        AlgError(msg.into())
    }
}

/// Inputs (as last sampled), outputs and internal variables of an
/// instance. Writes are kind-checked; written outputs are tracked so the
/// runtime can forward them along data connections.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Snapshot {
    vars: BTreeMap<String, Value>,
    kinds: BTreeMap<String, DataKind>,
    outputs: BTreeSet<String>,
    dirty: BTreeSet<String>,
}

impl Snapshot {
    pub fn for_type(ty: &FbType) -> Self {
        let mut s = Snapshot::default();
        for d in &ty.interface.data_inputs {
            s.declare(&d.name, d.kind, d.kind.default_value());
        }
        for d in &ty.interface.data_outputs {
            s.declare(&d.name, d.kind, d.kind.default_value());
            s.outputs.insert(d.name.clone());
        }
        if let crate::model::FbBody::Basic(b) = &ty.body {
            for v in &b.internals {
                s.declare(&v.name, v.kind, v.initial.clone());
            }
        }
        s
    }

    /// Adds a variable; used for ad hoc snapshots in tests.
    pub fn declare(&mut self, name: &str, kind: DataKind, initial: Value) {
        self.kinds.insert(name.to_string(), kind);
        self.vars.insert(name.to_string(), initial);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    pub fn kind(&self, name: &str) -> Option<DataKind> {
        self.kinds.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: Value) -> Result<(), AlgError> {
        let kind = self
            .kinds
            .get(name)
            .ok_or_else(|| AlgError(format!("no variable `{name}`")))?;
        if value.kind() != *kind {
            return Err(AlgError(format!("`{name}` is {kind}, cannot hold {}", value.kind())));
        }
        if self.outputs.contains(name) {
            self.dirty.insert(name.to_string());
        }
        self.vars.insert(name.to_string(), value);
        Ok(())
    }

    pub(crate) fn take_dirty(&mut self) -> BTreeSet<String> {
        core::mem::take(&mut self.dirty)
    }

    fn need(&self, name: &str) -> Result<&Value, AlgError> {
        self.vars
            .get(name)
            .ok_or_else(|| AlgError(format!("no variable `{name}`")))
    }

    pub fn bool(&self, name: &str) -> Result<bool, AlgError> {
        self.need(name)?
            .as_bool()
            .ok_or_else(|| AlgError(format!("`{name}` is not BOOL")))
    }

    pub fn uint(&self, name: &str) -> Result<u64, AlgError> {
        self.need(name)?
            .as_u64()
            .ok_or_else(|| AlgError(format!("`{name}` is not a non-negative integer")))
    }

    pub fn real(&self, name: &str) -> Result<f64, AlgError> {
        self.need(name)?
            .as_f64()
            .ok_or_else(|| AlgError(format!("`{name}` is not numeric")))
    }

    pub fn bytes(&self, name: &str) -> Result<&[u8], AlgError> {
        self.need(name)?
            .as_bytes()
            .ok_or_else(|| AlgError(format!("`{name}` is not a byte array")))
    }

    pub fn block(&self, name: &str) -> Result<[u8; 16], AlgError> {
        match self.need(name)? {
            Value::Bytes16(b) => Ok(*b),
            _ => Err(AlgError(format!("`{name}` is not BYTES16"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str, AlgError> {
        self.need(name)?
            .as_str()
            .ok_or_else(|| AlgError(format!("`{name}` is not STRING")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.vars.iter()
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, AlgError> {
    let ord = match (a, b) {
        (x, y) if x.kind().is_numeric() && y.kind().is_numeric() => {
            let (x, y) = (x.as_f64().unwrap_or(0.0), y.as_f64().unwrap_or(0.0));
            x.partial_cmp(&y)
        }
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        (x, y) => match (x.as_bytes(), y.as_bytes()) {
            (Some(p), Some(q)) => Some(p.cmp(q)),
            _ => return Err(AlgError(format!("cannot compare {} with {}", x.kind(), y.kind()))),
        },
    };
    Ok(match (op, ord) {
        (CmpOp::Lt, Some(o)) => o == Ordering::Less,
        (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
        (CmpOp::Eq, Some(o)) => o == Ordering::Equal,
        (CmpOp::Ne, Some(o)) => o != Ordering::Equal,
        (CmpOp::Ne, None) => true,
        (_, None) => false,
    })
}

/// Evaluates a guard expression against a snapshot.
pub fn eval(expr: &Expr, snap: &Snapshot) -> Result<Value, AlgError> {
    Ok(match expr {
        Expr::Lit(v) => v.clone(),
        Expr::Var(name) => snap.need(name)?.clone(),
        Expr::Not(e) => Value::Bool(!truth(e, snap)?),
        Expr::And(a, b) => Value::Bool(truth(a, snap)? && truth(b, snap)?),
        Expr::Or(a, b) => Value::Bool(truth(a, snap)? || truth(b, snap)?),
        Expr::Cmp(op, a, b) => Value::Bool(compare(*op, &eval(a, snap)?, &eval(b, snap)?)?),
    })
}

pub fn truth(expr: &Expr, snap: &Snapshot) -> Result<bool, AlgError> {
    eval(expr, snap)?
        .as_bool()
        .ok_or_else(|| AlgError("guard does not evaluate to BOOL".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;

    fn snap() -> Snapshot {
        let mut s = Snapshot::default();
        s.declare("I", DataKind::Lreal, Value::Lreal(150.0));
        s.declare("N", DataKind::Uint, Value::Uint(3));
        s.declare("Q", DataKind::Bool, Value::Bool(true));
        s.declare("S", DataKind::String, Value::String("ESTABLISHED".into()));
        s
    }

    #[test]
    fn numeric_comparisons_mix_kinds() {
        let s = snap();
        let gt = Expr::cmp(CmpOp::Gt, Expr::var("I"), Expr::Lit(Value::Int(100)));
        assert!(truth(&gt, &s).unwrap());
        let eq = Expr::cmp(CmpOp::Eq, Expr::var("N"), Expr::Lit(Value::Int(3)));
        assert!(truth(&eq, &s).unwrap());
    }

    #[test]
    fn boolean_connectives() {
        let s = snap();
        let e = Expr::And(
            Box::new(Expr::var("Q")),
            Box::new(Expr::negate(Expr::cmp(
                CmpOp::Ne,
                Expr::var("S"),
                Expr::Lit(Value::String("ESTABLISHED".into())),
            ))),
        );
        assert!(truth(&e, &s).unwrap());
        assert!(truth(
            &Expr::Or(Box::new(Expr::negate(Expr::var("Q"))), Box::new(Expr::var("Q"))),
            &s
        )
        .unwrap());
    }

    #[test]
    fn type_errors_surface() {
        let s = snap();
        assert!(truth(&Expr::var("N"), &s).is_err());
        assert!(truth(&Expr::cmp(CmpOp::Lt, Expr::var("Q"), Expr::var("S")), &s).is_err());
        assert!(truth(&Expr::var("missing"), &s).is_err());
    }

    #[test]
    fn writes_are_kind_checked() {
        let mut s = snap();
        assert!(s.set("Q", Value::Uint(1)).is_err());
        assert!(s.set("nope", Value::Bool(true)).is_err());
        s.set("Q", Value::Bool(false)).unwrap();
        assert!(!s.bool("Q").unwrap());
    }
}
