//! Function-block domain model: types, networks, device mapping and
//! secure-link annotations.
//!
//! Everything here is plain data. Structural checks live in
//! [`crate::validate`].

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Name used by a composite network to refer to its own interface ports.
pub const SELF_FB: &str = "self";

/// IEC 61131-3 style data kinds carried on data ports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataKind {
    Bool,
    Int,
    Uint,
    Lreal,
    Byte,
    /// Exactly one AES block.
    Bytes16,
    /// Variable-length octet string (session keys, expanded key schedules).
    Bytes,
    String,
}

impl DataKind {
    pub const ALL: [DataKind; 8] = [
        DataKind::Bool,
        DataKind::Int,
        DataKind::Uint,
        DataKind::Lreal,
        DataKind::Byte,
        DataKind::Bytes16,
        DataKind::Bytes,
        DataKind::String,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            DataKind::Bool => "BOOL",
            DataKind::Int => "INT",
            DataKind::Uint => "UINT",
            DataKind::Lreal => "LREAL",
            DataKind::Byte => "BYTE",
            DataKind::Bytes16 => "BYTES16",
            DataKind::Bytes => "BYTES",
            DataKind::String => "STRING",
        }
    }

    pub fn from_keyword(word: &str) -> Option<DataKind> {
        DataKind::ALL.into_iter().find(|k| k.keyword() == word)
    }

    /// Value an unconnected, unparameterised port starts with.
    pub fn default_value(self) -> Value {
        match self {
            DataKind::Bool => Value::Bool(false),
            DataKind::Int => Value::Int(0),
            DataKind::Uint => Value::Uint(0),
            DataKind::Lreal => Value::Lreal(0.0),
            DataKind::Byte => Value::Byte(0),
            DataKind::Bytes16 => Value::Bytes16([0; 16]),
            DataKind::Bytes => Value::Bytes(Vec::new()),
            DataKind::String => Value::String(String::new()),
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, DataKind::Int | DataKind::Uint | DataKind::Lreal | DataKind::Byte)
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A typed data value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Uint(u64),
    Lreal(f64),
    Byte(u8),
    Bytes16([u8; 16]),
    Bytes(Vec<u8>),
    String(String),
}

impl Value {
    pub fn kind(&self) -> DataKind {
        match self {
            Value::Bool(_) => DataKind::Bool,
            Value::Int(_) => DataKind::Int,
            Value::Uint(_) => DataKind::Uint,
            Value::Lreal(_) => DataKind::Lreal,
            Value::Byte(_) => DataKind::Byte,
            Value::Bytes16(_) => DataKind::Bytes16,
            Value::Bytes(_) => DataKind::Bytes,
            Value::String(_) => DataKind::String,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match *self {
            Value::Uint(v) => Some(v),
            Value::Byte(v) => Some(v as u64),
            Value::Int(v) if v >= 0 => Some(v as u64),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::Uint(v) => Some(v as f64),
            Value::Lreal(v) => Some(v),
            Value::Byte(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Bytes16(b) => Some(b),
            Value::Bytes(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }
}

/// `instance.port` reference. Inside a composite type, [`SELF_FB`] names the
/// composite's own interface.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub fb: String,
    pub port: String,
}

impl PortRef {
    pub fn new(fb: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef {
            fb: fb.into(),
            port: port.into(),
        }
    }

    /// Parses `"fb.port"`; panics on malformed input. Meant for builders
    /// and tests.
    pub fn parse(dotted: &str) -> Self {
        let (fb, port) = dotted
            .split_once('.')
            .unwrap_or_else(|| panic!("port reference `{dotted}` has no `.`"));
        PortRef::new(fb, port)
    }

    pub fn is_self(&self) -> bool {
        self.fb == SELF_FB
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.fb, self.port)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Connection {
    pub source: PortRef,
    pub target: PortRef,
}

impl Connection {
    pub fn new(source: PortRef, target: PortRef) -> Self {
        Connection { source, target }
    }
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamBinding {
    pub target: PortRef,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FbInstance {
    pub name: String,
    pub type_name: String,
}

/// An instance graph: function-block instances plus event and data wiring.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FbNetwork {
    pub instances: Vec<FbInstance>,
    pub event_conns: Vec<Connection>,
    pub data_conns: Vec<Connection>,
    pub params: Vec<ParamBinding>,
}

impl FbNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn instance(mut self, name: &str, type_name: &str) -> Self {
        self.instances.push(FbInstance {
            name: name.to_string(),
            type_name: type_name.to_string(),
        });
        self
    }

    pub fn event(mut self, source: &str, target: &str) -> Self {
        self.event_conns
            .push(Connection::new(PortRef::parse(source), PortRef::parse(target)));
        self
    }

    pub fn data(mut self, source: &str, target: &str) -> Self {
        self.data_conns
            .push(Connection::new(PortRef::parse(source), PortRef::parse(target)));
        self
    }

    pub fn param(mut self, target: &str, value: Value) -> Self {
        self.params.push(ParamBinding {
            target: PortRef::parse(target),
            value,
        });
        self
    }

    pub fn find_instance(&self, name: &str) -> Option<&FbInstance> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn data_conn_index(&self, conn: &Connection) -> Option<usize> {
        self.data_conns.iter().position(|c| c == conn)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub kind: DataKind,
}

impl VarDecl {
    pub fn new(name: &str, kind: DataKind) -> Self {
        VarDecl {
            name: name.to_string(),
            kind,
        }
    }
}

/// Event and data ports of a function-block type.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FbInterface {
    pub event_inputs: Vec<String>,
    pub event_outputs: Vec<String>,
    pub data_inputs: Vec<VarDecl>,
    pub data_outputs: Vec<VarDecl>,
    /// Event name -> data ports sampled (inputs) or published (outputs)
    /// with that event.
    pub with_assoc: BTreeMap<String, BTreeSet<String>>,
}

impl FbInterface {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn event_in(mut self, name: &str, with: &[&str]) -> Self {
        self.event_inputs.push(name.to_string());
        self.assoc(name, with)
    }

    pub fn event_out(mut self, name: &str, with: &[&str]) -> Self {
        self.event_outputs.push(name.to_string());
        self.assoc(name, with)
    }

    pub fn data_in(mut self, name: &str, kind: DataKind) -> Self {
        self.data_inputs.push(VarDecl::new(name, kind));
        self
    }

    pub fn data_out(mut self, name: &str, kind: DataKind) -> Self {
        self.data_outputs.push(VarDecl::new(name, kind));
        self
    }

    fn assoc(mut self, event: &str, with: &[&str]) -> Self {
        if !with.is_empty() {
            self.with_assoc
                .entry(event.to_string())
                .or_default()
                .extend(with.iter().map(|w| w.to_string()));
        }
        self
    }

    pub fn has_event_input(&self, name: &str) -> bool {
        self.event_inputs.iter().any(|e| e == name)
    }

    pub fn has_event_output(&self, name: &str) -> bool {
        self.event_outputs.iter().any(|e| e == name)
    }

    pub fn data_input(&self, name: &str) -> Option<&VarDecl> {
        self.data_inputs.iter().find(|d| d.name == name)
    }

    pub fn data_output(&self, name: &str) -> Option<&VarDecl> {
        self.data_outputs.iter().find(|d| d.name == name)
    }

    pub fn associated(&self, event: &str) -> impl Iterator<Item = &String> {
        self.with_assoc.get(event).into_iter().flatten()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Guard expression over data inputs and internal variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn negate(inner: Expr) -> Expr {
        Expr::Not(Box::new(inner))
    }

    /// Every variable name the expression reads.
    pub fn variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Not(e) => e.variables(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trigger {
    Event(String),
    Always,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: String,
    pub trigger: Trigger,
    pub guard: Option<Expr>,
    pub to: String,
}

/// One state action: run an algorithm, then optionally emit an output event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub algorithm: Option<String>,
    pub output: Option<String>,
}

impl Action {
    pub fn new(algorithm: Option<&str>, output: Option<&str>) -> Self {
        Action {
            algorithm: algorithm.map(str::to_string),
            output: output.map(str::to_string),
        }
    }
}

/// Execution Control Chart.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ecc {
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<Transition>,
    pub actions: BTreeMap<String, Vec<Action>>,
}

impl Ecc {
    pub fn new(initial: &str) -> Self {
        Ecc {
            states: alloc::vec![initial.to_string()],
            initial: initial.to_string(),
            ..Self::default()
        }
    }

    pub fn state(mut self, name: &str, actions: &[(Option<&str>, Option<&str>)]) -> Self {
        if !self.states.iter().any(|s| s == name) {
            self.states.push(name.to_string());
        }
        if !actions.is_empty() {
            self.actions.insert(
                name.to_string(),
                actions.iter().map(|(a, o)| Action::new(*a, *o)).collect(),
            );
        }
        self
    }

    pub fn on(mut self, from: &str, event: &str, guard: Option<Expr>, to: &str) -> Self {
        self.transitions.push(Transition {
            from: from.to_string(),
            trigger: Trigger::Event(event.to_string()),
            guard,
            to: to.to_string(),
        });
        self
    }

    pub fn always(mut self, from: &str, guard: Option<Expr>, to: &str) -> Self {
        self.transitions.push(Transition {
            from: from.to_string(),
            trigger: Trigger::Always,
            guard,
            to: to.to_string(),
        });
        self
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InternalVar {
    pub name: String,
    pub kind: DataKind,
    pub initial: Value,
}

impl InternalVar {
    /// Variable starting at the kind's default value.
    pub fn new(name: &str, kind: DataKind) -> Self {
        InternalVar {
            name: name.to_string(),
            kind,
            initial: kind.default_value(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasicFb {
    pub internals: Vec<InternalVar>,
    pub ecc: Ecc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbKind {
    Basic,
    Composite,
    Service,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FbBody {
    Basic(BasicFb),
    Composite(FbNetwork),
    /// Backed by a host service registered under `binding`.
    Service {
        binding: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FbType {
    pub name: String,
    pub interface: FbInterface,
    pub body: FbBody,
}

impl FbType {
    pub fn basic(name: &str, interface: FbInterface, internals: Vec<InternalVar>, ecc: Ecc) -> Self {
        FbType {
            name: name.to_string(),
            interface,
            body: FbBody::Basic(BasicFb { internals, ecc }),
        }
    }

    pub fn composite(name: &str, interface: FbInterface, network: FbNetwork) -> Self {
        FbType {
            name: name.to_string(),
            interface,
            body: FbBody::Composite(network),
        }
    }

    pub fn service(name: &str, interface: FbInterface, binding: &str) -> Self {
        FbType {
            name: name.to_string(),
            interface,
            body: FbBody::Service {
                binding: binding.to_string(),
            },
        }
    }

    pub fn kind(&self) -> FbKind {
        match self.body {
            FbBody::Basic(_) => FbKind::Basic,
            FbBody::Composite(_) => FbKind::Composite,
            FbBody::Service { .. } => FbKind::Service,
        }
    }

    /// Kind of a data input, output or internal variable.
    pub fn variable_kind(&self, name: &str) -> Option<DataKind> {
        if let Some(d) = self.interface.data_input(name) {
            return Some(d.kind);
        }
        if let Some(d) = self.interface.data_output(name) {
            return Some(d.kind);
        }
        match &self.body {
            FbBody::Basic(b) => b.internals.iter().find(|v| v.name == name).map(|v| v.kind),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SecurityGoal {
    Confidentiality,
    Integrity,
    Availability,
}

impl SecurityGoal {
    pub fn letter(self) -> &'static str {
        match self {
            SecurityGoal::Confidentiality => "C",
            SecurityGoal::Integrity => "I",
            SecurityGoal::Availability => "A",
        }
    }

    pub fn from_letter(token: &str) -> Option<SecurityGoal> {
        match token {
            "C" => Some(SecurityGoal::Confidentiality),
            "I" => Some(SecurityGoal::Integrity),
            "A" => Some(SecurityGoal::Availability),
            _ => None,
        }
    }
}

/// Value of a `key=value` annotation argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamValue {
    Int(u64),
    DurationMs(u64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::DurationMs(ms) if *ms % 1000 == 0 => write!(f, "{}s", ms / 1000),
            ParamValue::DurationMs(ms) => write!(f, "{ms}ms"),
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

pub const DEFAULT_KEYSIZE: u64 = 128;
pub const DEFAULT_REKEY_MS: u64 = 60_000;

/// A data connection annotated with a security requirement:
/// connection, goal, algorithm and algorithm parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecureLink {
    pub d_con: Connection,
    pub goal: SecurityGoal,
    pub alg: String,
    pub params: BTreeMap<String, ParamValue>,
}

impl SecureLink {
    pub fn new(d_con: Connection, goal: SecurityGoal, alg: &str) -> Self {
        SecureLink {
            d_con,
            goal,
            alg: alg.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// `keysize`, defaulting to 128. `None` if present but not an integer.
    pub fn keysize(&self) -> Option<u64> {
        match self.params.get("keysize") {
            None => Some(DEFAULT_KEYSIZE),
            Some(ParamValue::Int(v)) => Some(*v),
            Some(_) => None,
        }
    }

    /// `rekey` interval in milliseconds, defaulting to 60 s.
    pub fn rekey_ms(&self) -> Option<u64> {
        match self.params.get("rekey") {
            None => Some(DEFAULT_REKEY_MS),
            Some(ParamValue::DurationMs(v)) | Some(ParamValue::Int(v)) => Some(*v),
            Some(_) => None,
        }
    }

    pub fn channel(&self) -> Option<&ParamValue> {
        self.params.get("channel")
    }
}

/// A distributed application: type library, root network, devices, the
/// instance-to-device mapping and secure-link annotations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Application {
    pub fb_types: Vec<FbType>,
    pub root: FbNetwork,
    pub devices: Vec<String>,
    pub mapping: BTreeMap<String, String>,
    pub secure_links: Vec<SecureLink>,
}

impl Application {
    pub fn fb_type(&self, name: &str) -> Option<&FbType> {
        self.fb_types.iter().find(|t| t.name == name)
    }

    pub fn instance_type(&self, instance: &str) -> Option<&FbType> {
        self.root
            .find_instance(instance)
            .and_then(|i| self.fb_type(&i.type_name))
    }

    pub fn device_of(&self, instance: &str) -> Option<&str> {
        self.mapping.get(instance).map(String::as_str)
    }

    pub fn secure_link_for(&self, conn: &Connection) -> Option<&SecureLink> {
        self.secure_links.iter().find(|l| &l.d_con == conn)
    }
}
