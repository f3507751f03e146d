//! Unresolved syntax tree. Every node keeps the span it came from.

use super::SourceSpan;

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortAst {
    pub fb: Ident,
    pub port: Ident,
}

impl PortAst {
    pub fn span(&self) -> SourceSpan {
        self.fb.span.to(&self.port.span)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawLit {
    Bool(bool),
    Number(String),
    Str(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LitAst {
    pub raw: RawLit,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnAst {
    pub source: PortAst,
    pub target: PortAst,
}

/// One comma-separated argument of an annotation, as raw tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct ArgAst {
    pub tokens: Vec<String>,
    pub span: SourceSpan,
}

impl ArgAst {
    pub fn text(&self) -> String {
        self.tokens.concat()
    }
}

/// `@secure(goal, alg, key=value, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationAst {
    pub keyword: Ident,
    pub args: Vec<ArgAst>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataConnAst {
    pub conn: ConnAst,
    pub annotation: Option<AnnotationAst>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkAst {
    pub instances: Vec<(Ident, Ident)>,
    pub events: Vec<ConnAst>,
    pub data: Vec<DataConnAst>,
    pub params: Vec<(PortAst, LitAst)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprAst {
    Lit(LitAst),
    Var(Ident),
    Not(Box<ExprAst>),
    And(Box<ExprAst>, Box<ExprAst>),
    Or(Box<ExprAst>, Box<ExprAst>),
    Cmp(&'static str, Box<ExprAst>, Box<ExprAst>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionAst {
    pub algorithm: Option<Ident>,
    pub output: Option<Ident>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateAst {
    pub name: Ident,
    pub actions: Vec<ActionAst>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionAst {
    pub from: Ident,
    pub to: Ident,
    /// `None` for `always`.
    pub event: Option<Ident>,
    pub guard: Option<ExprAst>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeKindAst {
    Basic,
    Composite,
    Service(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarAst {
    pub name: Ident,
    pub kind: Ident,
    pub init: Option<LitAst>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeAst {
    pub name: Ident,
    pub kind: TypeKindAst,
    pub event_in: Vec<(Ident, Vec<Ident>)>,
    pub event_out: Vec<(Ident, Vec<Ident>)>,
    pub data_in: Vec<(Ident, Ident)>,
    pub data_out: Vec<(Ident, Ident)>,
    pub vars: Vec<VarAst>,
    pub initial: Option<Ident>,
    pub states: Vec<StateAst>,
    pub transitions: Vec<TransitionAst>,
    pub network: NetworkAst,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DocumentAst {
    pub types: Vec<TypeAst>,
    pub app: NetworkAst,
    pub devices: Vec<Ident>,
    pub map: Vec<(Ident, Ident)>,
}
