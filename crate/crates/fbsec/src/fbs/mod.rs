//! The `.fbs` application language: parser, resolver and canonical printer.
//!
//! ```text
//! fbtype Relay basic {
//!   event_in REQ with I
//!   event_out CNF with TRIP
//!   data_in I : LREAL
//!   data_out TRIP : BOOL
//!   initial IDLE
//!   state IDLE
//!   state EVAL : overcurrent -> CNF
//!   IDLE -> EVAL on REQ
//!   EVAL -> IDLE always
//! }
//! app {
//!   instance oc : Relay
//!   instance brk : TripLatch
//!   event oc.CNF -> brk.REQ
//!   data oc.TRIP -> brk.TRIP @secure(C, AES, keysize=256, rekey=60s)
//! }
//! devices {
//!   IED3, BRK
//! }
//! map {
//!   oc -> IED3
//!   brk -> BRK
//! }
//! ```

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod resolve;

use std::fmt;
use std::sync::Arc;

use fbsec_core::model::{Application, ParamValue, SecureLink, SecurityGoal};

pub use ast::AnnotationAst;
pub use print::serialize_application;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Arc<str>,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub col: usize,
    pub len: usize,
}

impl SourceSpan {
    pub fn new(file: Arc<str>, line: usize, col: usize, len: usize) -> Self {
        SourceSpan { file, line, col, len }
    }

    /// From the start of `self` to the end of `other` (same line only).
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        let mut s = self.clone();
        if other.line == self.line && other.col + other.len > self.col {
            s.len = other.col + other.len - self.col;
        }
        s
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownType,
    Duplicate,
    DanglingEndpoint,
    UnknownName,
    Literal,
    UnknownGoal,
    Annotation,
    DuplicateParam,
}

impl ParseErrorKind {
    pub const ALL: [ParseErrorKind; 10] = [
        ParseErrorKind::Lexical,
        ParseErrorKind::Syntax,
        ParseErrorKind::UnknownType,
        ParseErrorKind::Duplicate,
        ParseErrorKind::DanglingEndpoint,
        ParseErrorKind::UnknownName,
        ParseErrorKind::Literal,
        ParseErrorKind::UnknownGoal,
        ParseErrorKind::Annotation,
        ParseErrorKind::DuplicateParam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Lexical => "lexical",
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownType => "unknown-type",
            ParseErrorKind::Duplicate => "duplicate",
            ParseErrorKind::DanglingEndpoint => "dangling-endpoint",
            ParseErrorKind::UnknownName => "unknown-name",
            ParseErrorKind::Literal => "literal",
            ParseErrorKind::UnknownGoal => "unknown-goal",
            ParseErrorKind::Annotation => "annotation",
            ParseErrorKind::DuplicateParam => "duplicate-param",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: error[{}]: {message}", kind.as_str())]
pub struct ParseDiagnostic {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            kind,
            span,
            message: message.into(),
        }
    }
}

/// Parses and resolves a whole document. Types the document uses but does
/// not declare are taken from the built-in library.
pub fn parse_application(file: &str, text: &str) -> Result<Application, Vec<ParseDiagnostic>> {
    let file: Arc<str> = Arc::from(file);
    let doc = parser::parse_document(&file, text).map_err(|d| vec![d])?;
    resolve::resolve(&doc)
}

/// Goal, algorithm and parameters of one `@secure(...)` annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecureFragment {
    pub goal: SecurityGoal,
    pub alg: String,
    pub params: std::collections::BTreeMap<String, ParamValue>,
}

impl SecureFragment {
    pub fn attach(self, d_con: fbsec_core::model::Connection) -> SecureLink {
        SecureLink {
            d_con,
            goal: self.goal,
            alg: self.alg,
            params: self.params,
        }
    }
}

fn param_value(raw: &str) -> ParamValue {
    if let Ok(v) = raw.parse::<u64>() {
        return ParamValue::Int(v);
    }
    for (suffix, scale) in [("ms", 1), ("s", 1000)] {
        if let Some(n) = raw.strip_suffix(suffix).and_then(|n| n.parse::<u64>().ok()) {
            if let Some(ms) = n.checked_mul(scale) {
                return ParamValue::DurationMs(ms);
            }
        }
    }
    match raw.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        Some(_) => ParamValue::Text(print::unquote(raw)),
        None => ParamValue::Text(raw.to_string()),
    }
}

/// Interprets the raw arguments: goal letter, algorithm name, then
/// `key=value` pairs. Integers become [`ParamValue::Int`], `NNs`/`NNms`
/// durations, anything else text.
pub fn parse_secure_annotation(ast: &AnnotationAst) -> Result<SecureFragment, ParseDiagnostic> {
    let err = |kind, span: &SourceSpan, msg: String| Err(ParseDiagnostic::new(kind, span.clone(), msg));
    if ast.args.len() < 2 {
        return err(
            ParseErrorKind::Annotation,
            &ast.span,
            "@secure needs at least a security goal and an algorithm".into(),
        );
    }
    let goal_text = ast.args[0].text();
    let Some(goal) = SecurityGoal::from_letter(&goal_text) else {
        return err(
            ParseErrorKind::UnknownGoal,
            &ast.args[0].span,
            format!("unknown security goal {goal_text}"),
        );
    };
    let alg_arg = &ast.args[1];
    let alg = alg_arg.text();
    if alg_arg.tokens.len() != 1 || !alg.starts_with(lexer::is_ident_start) {
        return err(
            ParseErrorKind::Annotation,
            &alg_arg.span,
            format!("`{alg}` is not an algorithm name"),
        );
    }
    let mut params = std::collections::BTreeMap::new();
    for arg in &ast.args[2..] {
        let (key, value) = match arg.tokens.as_slice() {
            [k, eq, v] if eq == "=" && k.starts_with(lexer::is_ident_start) => (k.clone(), v.clone()),
            _ => {
                return err(
                    ParseErrorKind::Annotation,
                    &arg.span,
                    format!("expected key=value, found `{}`", arg.text()),
                )
            }
        };
        if params.insert(key.clone(), param_value(&value)).is_some() {
            return err(
                ParseErrorKind::DuplicateParam,
                &arg.span,
                format!("duplicate parameter `{key}`"),
            );
        }
    }
    Ok(SecureFragment { goal, alg, params })
}
