//! Line-oriented syntax pass: tokens to [`DocumentAst`].

use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseDiagnostic, ParseErrorKind, SourceSpan};

type PResult<T> = Result<T, ParseDiagnostic>;

const GUARD_WORDS: [&str; 5] = ["AND", "OR", "NOT", "TRUE", "FALSE"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Basic,
    Composite,
    Service,
    App,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        self.pos += 1;
        t
    }

    fn error<T>(&self, span: SourceSpan, msg: impl Into<String>) -> PResult<T> {
        Err(ParseDiagnostic::new(ParseErrorKind::Syntax, span, msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        let t = self.peek();
        self.error(t.span.clone(), format!("expected {wanted}, found {}", t.tok.describe()))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_punct(&mut self, p: &str) -> PResult<SourceSpan> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        let hit = self.is_word(w);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let text = s.clone();
                let span = self.bump().span;
                Ok(Ident { text, span })
            }
            _ => self.unexpected(what),
        }
    }

    fn end_line(&mut self) -> PResult<()> {
        match self.peek().tok {
            Tok::Newline => {
                self.pos += 1;
                Ok(())
            }
            _ => self.unexpected("end of line"),
        }
    }

    fn skip_blank(&mut self) {
        while !self.at_end() && self.peek().tok == Tok::Newline {
            self.pos += 1;
        }
    }

    fn port(&mut self) -> PResult<PortAst> {
        let fb = self.ident("instance name")?;
        self.expect_punct(".")?;
        let port = self.ident("port name")?;
        Ok(PortAst { fb, port })
    }

    fn conn(&mut self) -> PResult<ConnAst> {
        let source = self.port()?;
        self.expect_punct("->")?;
        let target = self.port()?;
        Ok(ConnAst { source, target })
    }

    fn literal(&mut self) -> PResult<LitAst> {
        let t = self.peek().clone();
        let raw = match &t.tok {
            Tok::Ident(w) if w == "TRUE" => RawLit::Bool(true),
            Tok::Ident(w) if w == "FALSE" => RawLit::Bool(false),
            Tok::Number(n) => RawLit::Number(n.clone()),
            Tok::Str(s) => RawLit::Str(s.clone()),
            _ => return self.unexpected("a literal"),
        };
        self.pos += 1;
        Ok(LitAst { raw, span: t.span })
    }

    fn braced_block(&mut self) -> PResult<()> {
        self.expect_punct("{")?;
        self.end_line()
    }

    /// True (and consumes the line) when the block closes here.
    fn block_closed(&mut self) -> PResult<bool> {
        self.skip_blank();
        if self.at_end() {
            return self.unexpected("`}`");
        }
        if self.eat_punct("}") {
            self.end_line()?;
            return Ok(true);
        }
        Ok(false)
    }

    fn document(&mut self) -> PResult<DocumentAst> {
        let mut doc = DocumentAst::default();
        let mut seen_app = None::<SourceSpan>;
        loop {
            self.skip_blank();
            if self.at_end() {
                return Ok(doc);
            }
            let head = self.ident("`fbtype`, `app`, `devices` or `map`")?;
            match head.text.as_str() {
                "fbtype" => doc.types.push(self.fb_type()?),
                "app" => {
                    if seen_app.is_some() {
                        return self.error(head.span, "duplicate `app` section");
                    }
                    seen_app = Some(head.span);
                    self.braced_block()?;
                    while !self.block_closed()? {
                        self.statement(Section::App, None, &mut doc.app)?;
                    }
                }
                "devices" => {
                    self.braced_block()?;
                    while !self.block_closed()? {
                        loop {
                            doc.devices.push(self.ident("device name")?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                        self.end_line()?;
                    }
                }
                "map" => {
                    self.braced_block()?;
                    while !self.block_closed()? {
                        let inst = self.ident("instance name")?;
                        self.expect_punct("->")?;
                        let dev = self.ident("device name")?;
                        self.end_line()?;
                        doc.map.push((inst, dev));
                    }
                }
                other => {
                    return self.error(
                        head.span.clone(),
                        format!("expected `fbtype`, `app`, `devices` or `map`, found `{other}`"),
                    )
                }
            }
        }
    }

    fn fb_type(&mut self) -> PResult<TypeAst> {
        let name = self.ident("type name")?;
        let kind_word = self.ident("`basic`, `composite` or `sifb`")?;
        let (kind, section) = match kind_word.text.as_str() {
            "basic" => (TypeKindAst::Basic, Section::Basic),
            "composite" => (TypeKindAst::Composite, Section::Composite),
            "sifb" => match &self.peek().tok {
                Tok::Str(b) => {
                    let b = b.clone();
                    self.pos += 1;
                    (TypeKindAst::Service(b), Section::Service)
                }
                _ => return self.unexpected("a quoted service binding"),
            },
            other => {
                return self.error(
                    kind_word.span.clone(),
                    format!("expected `basic`, `composite` or `sifb`, found `{other}`"),
                )
            }
        };
        self.braced_block()?;
        let mut ty = TypeAst {
            name,
            kind,
            event_in: vec![],
            event_out: vec![],
            data_in: vec![],
            data_out: vec![],
            vars: vec![],
            initial: None,
            states: vec![],
            transitions: vec![],
            network: NetworkAst::default(),
        };
        while !self.block_closed()? {
            let mut net = std::mem::take(&mut ty.network);
            self.statement(section, Some(&mut ty), &mut net)?;
            ty.network = net;
        }
        Ok(ty)
    }

    fn statement(&mut self, section: Section, ty: Option<&mut TypeAst>, net: &mut NetworkAst) -> PResult<()> {
        let transition_line = matches!(self.peek_at(1), Some(Tok::Punct("->")));
        let head = self.ident("a statement")?;
        let where_ = match section {
            Section::Basic => "a basic type",
            Section::Composite => "a composite type",
            Section::Service => "a service type",
            Section::App => "the `app` section",
        };
        let not_here = |p: &Self, head: &Ident| -> PResult<()> {
            p.error(head.span.clone(), format!("`{}` is not allowed in {where_}", head.text))
        };
        let word = if transition_line { "" } else { head.text.as_str() };
        match (word, ty) {
            ("event_in" | "event_out", Some(ty)) if section != Section::App => {
                let name = self.ident("event name")?;
                let mut with = Vec::new();
                if self.eat_word("with") {
                    loop {
                        with.push(self.ident("data port name")?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                if head.text == "event_in" {
                    ty.event_in.push((name, with));
                } else {
                    ty.event_out.push((name, with));
                }
            }
            ("data_in" | "data_out", Some(ty)) if section != Section::App => {
                let name = self.ident("data port name")?;
                self.expect_punct(":")?;
                let kind = self.ident("data kind")?;
                if head.text == "data_in" {
                    ty.data_in.push((name, kind));
                } else {
                    ty.data_out.push((name, kind));
                }
            }
            ("var", Some(ty)) if section == Section::Basic => {
                let name = self.ident("variable name")?;
                self.expect_punct(":")?;
                let kind = self.ident("data kind")?;
                let init = if self.eat_punct("=") {
                    Some(self.literal()?)
                } else {
                    None
                };
                ty.vars.push(VarAst { name, kind, init });
            }
            ("initial", Some(ty)) if section == Section::Basic => {
                let s = self.ident("state name")?;
                if ty.initial.is_some() {
                    return self.error(head.span.to(&s.span), "duplicate `initial` statement");
                }
                ty.initial = Some(s);
            }
            ("state", Some(ty)) if section == Section::Basic => {
                let name = self.ident("state name")?;
                let mut actions = Vec::new();
                if self.eat_punct(":") {
                    loop {
                        let algorithm = if self.is_punct("->") {
                            None
                        } else {
                            Some(self.ident("algorithm name")?)
                        };
                        let output = if self.eat_punct("->") {
                            Some(self.ident("output event")?)
                        } else {
                            None
                        };
                        actions.push(ActionAst { algorithm, output });
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                ty.states.push(StateAst { name, actions });
            }
            ("", Some(ty)) if section == Section::Basic => {
                self.expect_punct("->")?;
                let to = self.ident("target state")?;
                let event = if self.eat_word("on") {
                    Some(self.ident("event name")?)
                } else if self.eat_word("always") {
                    None
                } else {
                    return self.unexpected("`on EVENT` or `always`");
                };
                let guard = if self.eat_word("when") {
                    Some(self.expr()?)
                } else {
                    None
                };
                ty.transitions.push(TransitionAst {
                    from: head,
                    to,
                    event,
                    guard,
                });
            }
            ("instance", _) if matches!(section, Section::Composite | Section::App) => {
                let name = self.ident("instance name")?;
                self.expect_punct(":")?;
                let t = self.ident("type name")?;
                net.instances.push((name, t));
            }
            ("event", _) if matches!(section, Section::Composite | Section::App) => {
                net.events.push(self.conn()?);
            }
            ("data", _) if matches!(section, Section::Composite | Section::App) => {
                let conn = self.conn()?;
                let annotation = if self.is_punct("@") {
                    let a = self.annotation()?;
                    if section != Section::App {
                        return self.error(a.span, "security annotations are only allowed in the `app` section");
                    }
                    Some(a)
                } else {
                    None
                };
                net.data.push(DataConnAst { conn, annotation });
            }
            ("param", _) if matches!(section, Section::Composite | Section::App) => {
                let target = self.port()?;
                self.expect_punct("=")?;
                let lit = self.literal()?;
                net.params.push((target, lit));
            }
            ("", _) => {
                return self.error(head.span.clone(), format!("transitions are not allowed in {where_}"));
            }
            (
                "event_in" | "event_out" | "data_in" | "data_out" | "var" | "initial" | "state" | "instance" | "event"
                | "data" | "param",
                _,
            ) => return not_here(self, &head),
            _ => return self.error(head.span.clone(), format!("unknown statement `{}`", head.text)),
        }
        self.end_line()
    }

    fn annotation(&mut self) -> PResult<AnnotationAst> {
        let at = self.expect_punct("@")?;
        let keyword = self.ident("annotation name")?;
        if keyword.text != "secure" {
            return Err(ParseDiagnostic::new(
                ParseErrorKind::Annotation,
                keyword.span.clone(),
                format!("unknown annotation `@{}`", keyword.text),
            ));
        }
        self.expect_punct("(")?;
        let mut args = Vec::new();
        let mut current: Vec<Token> = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Punct(p @ ("," | ")")) => {
                    let (Some(first), Some(last)) = (current.first(), current.last()) else {
                        return self.error(t.span, "empty annotation argument");
                    };
                    args.push(ArgAst {
                        tokens: current.iter().map(|t| t.tok.text()).collect(),
                        span: first.span.to(&last.span),
                    });
                    current.clear();
                    self.pos += 1;
                    if *p == ")" {
                        return Ok(AnnotationAst {
                            keyword,
                            args,
                            span: at.to(&t.span),
                        });
                    }
                }
                Tok::Newline => return self.unexpected("`)`"),
                _ => current.push(self.bump()),
            }
        }
    }

    fn expr(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("OR") {
            lhs = ExprAst::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.not_expr()?;
        while self.eat_word("AND") {
            lhs = ExprAst::And(Box::new(lhs), Box::new(self.not_expr()?));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<ExprAst> {
        if self.eat_word("NOT") {
            return Ok(ExprAst::Not(Box::new(self.not_expr()?)));
        }
        let lhs = self.primary()?;
        for op in ["<", ">", "==", "!="] {
            if self.eat_punct(op) {
                let rhs = self.primary()?;
                return Ok(ExprAst::Cmp(op, Box::new(lhs), Box::new(rhs)));
            }
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> PResult<ExprAst> {
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        match &self.peek().tok {
            Tok::Ident(w) if w == "TRUE" || w == "FALSE" => Ok(ExprAst::Lit(self.literal()?)),
            Tok::Ident(w) if GUARD_WORDS.contains(&w.as_str()) => self.unexpected("an operand"),
            Tok::Ident(_) => Ok(ExprAst::Var(self.ident("variable")?)),
            Tok::Number(_) | Tok::Str(_) => Ok(ExprAst::Lit(self.literal()?)),
            _ => self.unexpected("an operand"),
        }
    }
}

pub fn parse_document(file: &Arc<str>, text: &str) -> PResult<DocumentAst> {
    let toks = tokenize(file, text)?;
    let mut p = Parser { toks, pos: 0 };
    p.document()
}
