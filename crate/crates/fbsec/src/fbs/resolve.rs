//! Name resolution: syntax tree to a checked [`Application`].

use std::collections::{BTreeMap, BTreeSet};

use fbsec_core::grid::grid_types;
use fbsec_core::model::{
    Action, Application, CmpOp, Connection, DataKind, Ecc, Expr, FbBody, FbInterface, FbNetwork, FbType, InternalVar,
    ParamBinding, PortRef, Transition, Trigger, Value, VarDecl, SELF_FB,
};
use fbsec_core::runtime::library::standard_types;

use super::ast::*;
use super::{parse_secure_annotation, ParseDiagnostic, ParseErrorKind, SourceSpan};

/// Types available without a declaration, in emission order.
pub fn prelude() -> Vec<FbType> {
    standard_types().into_iter().chain(grid_types()).collect()
}

struct Resolver {
    errors: Vec<ParseDiagnostic>,
    interfaces: BTreeMap<String, FbInterface>,
}

impl Resolver {
    fn err(&mut self, kind: ParseErrorKind, span: &SourceSpan, msg: impl Into<String>) {
        self.errors.push(ParseDiagnostic::new(kind, span.clone(), msg));
    }

    fn kind(&mut self, id: &Ident) -> Option<DataKind> {
        let k = DataKind::from_keyword(&id.text);
        if k.is_none() {
            self.err(
                ParseErrorKind::UnknownName,
                &id.span,
                format!("unknown data kind `{}`", id.text),
            );
        }
        k
    }

    fn interface(&mut self, t: &TypeAst) -> FbInterface {
        let mut iface = FbInterface::new();
        let mut names = BTreeSet::new();
        let mut fresh = |r: &mut Self, id: &Ident| {
            if !names.insert(id.text.clone()) {
                r.err(
                    ParseErrorKind::Duplicate,
                    &id.span,
                    format!("port `{}` declared twice in `{}`", id.text, t.name.text),
                );
            }
        };
        for (n, k) in &t.data_in {
            fresh(self, n);
            if let Some(k) = self.kind(k) {
                iface.data_inputs.push(VarDecl::new(&n.text, k));
            }
        }
        for (n, k) in &t.data_out {
            fresh(self, n);
            if let Some(k) = self.kind(k) {
                iface.data_outputs.push(VarDecl::new(&n.text, k));
            }
        }
        for (inputs, list) in [(true, &t.event_in), (false, &t.event_out)] {
            for (ev, with) in list {
                fresh(self, ev);
                let mut set = BTreeSet::new();
                for w in with {
                    let ok = if inputs {
                        iface.data_input(&w.text).is_some()
                    } else {
                        iface.data_output(&w.text).is_some()
                    };
                    if !ok {
                        let dir = if inputs { "input" } else { "output" };
                        self.err(
                            ParseErrorKind::UnknownName,
                            &w.span,
                            format!("`{}` is not a data {dir} of `{}`", w.text, t.name.text),
                        );
                    }
                    set.insert(w.text.clone());
                }
                if inputs {
                    iface.event_inputs.push(ev.text.clone());
                } else {
                    iface.event_outputs.push(ev.text.clone());
                }
                if !set.is_empty() {
                    iface.with_assoc.insert(ev.text.clone(), set);
                }
            }
        }
        iface
    }

    fn literal(&mut self, lit: &LitAst, kind: DataKind) -> Option<Value> {
        let v = literal_value(&lit.raw, kind);
        if v.is_none() {
            let shown = match &lit.raw {
                RawLit::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
                RawLit::Number(n) => n.clone(),
                RawLit::Str(s) => super::print::quote(s),
            };
            self.err(
                ParseErrorKind::Literal,
                &lit.span,
                format!("`{shown}` is not a valid {kind} literal"),
            );
        }
        v
    }

    fn untyped_literal(&mut self, lit: &LitAst) -> Option<Value> {
        let kind = match &lit.raw {
            RawLit::Bool(_) => DataKind::Bool,
            RawLit::Str(_) => DataKind::String,
            RawLit::Number(n) if n.starts_with("0x") || n.starts_with("0X") => DataKind::Bytes,
            RawLit::Number(n) if n.parse::<i64>().is_ok() => DataKind::Int,
            RawLit::Number(_) => DataKind::Lreal,
        };
        self.literal(lit, kind)
    }

    fn guard(&mut self, e: &ExprAst, ty: &FbType) -> Option<Expr> {
        Some(match e {
            ExprAst::Lit(l) => Expr::Lit(self.untyped_literal(l)?),
            ExprAst::Var(v) => {
                if ty.variable_kind(&v.text).is_none() {
                    self.err(
                        ParseErrorKind::UnknownName,
                        &v.span,
                        format!("`{}` is not a variable of `{}`", v.text, ty.name),
                    );
                    return None;
                }
                Expr::var(&v.text)
            }
            ExprAst::Not(a) => Expr::negate(self.guard(a, ty)?),
            ExprAst::And(a, b) => {
                let (a, b) = (self.guard(a, ty), self.guard(b, ty));
                Expr::And(Box::new(a?), Box::new(b?))
            }
            ExprAst::Or(a, b) => {
                let (a, b) = (self.guard(a, ty), self.guard(b, ty));
                Expr::Or(Box::new(a?), Box::new(b?))
            }
            ExprAst::Cmp(op, a, b) => {
                let op = match *op {
                    "<" => CmpOp::Lt,
                    ">" => CmpOp::Gt,
                    "==" => CmpOp::Eq,
                    _ => CmpOp::Ne,
                };
                let (a, b) = (self.guard(a, ty), self.guard(b, ty));
                Expr::cmp(op, a?, b?)
            }
        })
    }

    fn basic(&mut self, t: &TypeAst, iface: FbInterface) -> FbType {
        let mut internals = Vec::new();
        for v in &t.vars {
            let Some(kind) = self.kind(&v.kind) else { continue };
            if iface.data_input(&v.name.text).is_some()
                || iface.data_output(&v.name.text).is_some()
                || internals.iter().any(|i: &InternalVar| i.name == v.name.text)
            {
                self.err(
                    ParseErrorKind::Duplicate,
                    &v.name.span,
                    format!("variable `{}` declared twice in `{}`", v.name.text, t.name.text),
                );
                continue;
            }
            let initial = match &v.init {
                Some(l) => self.literal(l, kind).unwrap_or_else(|| kind.default_value()),
                None => kind.default_value(),
            };
            internals.push(InternalVar {
                name: v.name.text.clone(),
                kind,
                initial,
            });
        }

        let Some(initial) = t.initial.as_ref() else {
            self.err(
                ParseErrorKind::Syntax,
                &t.name.span,
                format!("basic type `{}` needs an `initial` state", t.name.text),
            );
            return FbType::basic(&t.name.text, iface, internals, Ecc::default());
        };
        let mut ecc = Ecc::new(&initial.text);
        let mut declared = BTreeSet::new();
        for s in &t.states {
            if !declared.insert(s.name.text.clone()) {
                self.err(
                    ParseErrorKind::Duplicate,
                    &s.name.span,
                    format!("state `{}` declared twice", s.name.text),
                );
                continue;
            }
            if !ecc.states.contains(&s.name.text) {
                ecc.states.push(s.name.text.clone());
            }
            let mut actions = Vec::new();
            for a in &s.actions {
                if let Some(o) = &a.output {
                    if !iface.has_event_output(&o.text) {
                        self.err(
                            ParseErrorKind::UnknownName,
                            &o.span,
                            format!("`{}` is not an event output of `{}`", o.text, t.name.text),
                        );
                    }
                }
                actions.push(Action {
                    algorithm: a.algorithm.as_ref().map(|i| i.text.clone()),
                    output: a.output.as_ref().map(|i| i.text.clone()),
                });
            }
            if !actions.is_empty() {
                ecc.actions.insert(s.name.text.clone(), actions);
            }
        }
        let mut ty = FbType::basic(&t.name.text, iface, internals, Ecc::default());
        for tr in &t.transitions {
            for s in [&tr.from, &tr.to] {
                if !ecc.states.contains(&s.text) {
                    self.err(
                        ParseErrorKind::UnknownName,
                        &s.span,
                        format!("unknown state `{}`", s.text),
                    );
                }
            }
            let trigger = match &tr.event {
                Some(ev) => {
                    if !ty.interface.has_event_input(&ev.text) {
                        self.err(
                            ParseErrorKind::UnknownName,
                            &ev.span,
                            format!("`{}` is not an event input of `{}`", ev.text, t.name.text),
                        );
                    }
                    Trigger::Event(ev.text.clone())
                }
                None => Trigger::Always,
            };
            let guard = tr.guard.as_ref().and_then(|g| self.guard(g, &ty));
            ecc.transitions.push(Transition {
                from: tr.from.text.clone(),
                trigger,
                guard,
                to: tr.to.text.clone(),
            });
        }
        if let FbBody::Basic(b) = &mut ty.body {
            b.ecc = ecc;
        }
        ty
    }

    fn endpoint(
        &mut self,
        p: &PortAst,
        owner: Option<&FbInterface>,
        instances: &BTreeMap<String, String>,
        event: bool,
        source: bool,
    ) {
        let (what, iface) = if p.fb.text == SELF_FB && owner.is_some() {
            ("the enclosing type", owner.cloned())
        } else {
            match instances.get(&p.fb.text) {
                Some(t) => ("", self.interfaces.get(t).cloned()),
                None => {
                    self.err(
                        ParseErrorKind::DanglingEndpoint,
                        &p.fb.span,
                        format!("unknown instance `{}`", p.fb.text),
                    );
                    return;
                }
            }
        };
        let Some(iface) = iface else { return };
        // `self` ports face inwards: its inputs are sources.
        let output_side = source != (p.fb.text == SELF_FB && owner.is_some());
        let found = match (event, output_side) {
            (true, true) => iface.has_event_output(&p.port.text),
            (true, false) => iface.has_event_input(&p.port.text),
            (false, true) => iface.data_output(&p.port.text).is_some(),
            (false, false) => iface.data_input(&p.port.text).is_some(),
        };
        if !found {
            let dir = match (event, output_side) {
                (true, true) => "event output",
                (true, false) => "event input",
                (false, true) => "data output",
                (false, false) => "data input",
            };
            let who = if what.is_empty() {
                format!("`{}`", p.fb.text)
            } else {
                what.to_string()
            };
            self.err(
                ParseErrorKind::DanglingEndpoint,
                &p.port.span,
                format!("{who} has no {dir} `{}`", p.port.text),
            );
        }
    }

    fn network(
        &mut self,
        n: &NetworkAst,
        owner: Option<&FbInterface>,
    ) -> (FbNetwork, Vec<Option<super::SecureFragment>>) {
        let mut net = FbNetwork::new();
        let mut instances = BTreeMap::new();
        for (name, ty) in &n.instances {
            if name.text == SELF_FB || instances.contains_key(&name.text) {
                self.err(
                    ParseErrorKind::Duplicate,
                    &name.span,
                    format!("instance `{}` declared twice", name.text),
                );
                continue;
            }
            if !self.interfaces.contains_key(&ty.text) {
                self.err(
                    ParseErrorKind::UnknownType,
                    &ty.span,
                    format!("unknown function block type `{}`", ty.text),
                );
            }
            instances.insert(name.text.clone(), ty.text.clone());
            net = net.instance(&name.text, &ty.text);
        }
        let conn = |c: &ConnAst| {
            Connection::new(
                PortRef::new(c.source.fb.text.as_str(), c.source.port.text.as_str()),
                PortRef::new(c.target.fb.text.as_str(), c.target.port.text.as_str()),
            )
        };
        for c in &n.events {
            self.endpoint(&c.source, owner, &instances, true, true);
            self.endpoint(&c.target, owner, &instances, true, false);
            net.event_conns.push(conn(c));
        }
        let mut fragments = Vec::new();
        for d in &n.data {
            self.endpoint(&d.conn.source, owner, &instances, false, true);
            self.endpoint(&d.conn.target, owner, &instances, false, false);
            let c = conn(&d.conn);
            if net.data_conns.contains(&c) {
                self.err(
                    ParseErrorKind::Duplicate,
                    &d.conn.source.span(),
                    format!("connection {c} declared twice"),
                );
                continue;
            }
            net.data_conns.push(c);
            fragments.push(d.annotation.as_ref().and_then(|a| match parse_secure_annotation(a) {
                Ok(f) => Some(f),
                Err(e) => {
                    self.errors.push(e);
                    None
                }
            }));
        }
        for (target, lit) in &n.params {
            self.endpoint(target, None, &instances, false, false);
            let kind = instances
                .get(&target.fb.text)
                .and_then(|t| self.interfaces.get(t))
                .and_then(|i| i.data_input(&target.port.text))
                .map(|d| d.kind);
            let Some(kind) = kind else { continue };
            if let Some(value) = self.literal(lit, kind) {
                net.params.push(ParamBinding {
                    target: PortRef::new(target.fb.text.as_str(), target.port.text.as_str()),
                    value,
                });
            }
        }
        (net, fragments)
    }
}

pub fn literal_value(raw: &RawLit, kind: DataKind) -> Option<Value> {
    let hex = |n: &str| {
        n.strip_prefix("0x")
            .or_else(|| n.strip_prefix("0X"))
            .and_then(|h| hex::decode(h).ok())
    };
    match (raw, kind) {
        (RawLit::Bool(b), DataKind::Bool) => Some(Value::Bool(*b)),
        (RawLit::Str(s), DataKind::String) => Some(Value::String(s.clone())),
        (RawLit::Number(n), DataKind::Int) => n.parse().ok().map(Value::Int),
        (RawLit::Number(n), DataKind::Uint) => n.parse().ok().map(Value::Uint),
        (RawLit::Number(n), DataKind::Byte) => n.parse().ok().map(Value::Byte),
        (RawLit::Number(n), DataKind::Lreal) => n.parse::<f64>().ok().filter(|v| v.is_finite()).map(Value::Lreal),
        (RawLit::Number(n), DataKind::Bytes) => hex(n).map(Value::Bytes),
        (RawLit::Number(n), DataKind::Bytes16) => hex(n).and_then(|b| <[u8; 16]>::try_from(b).ok()).map(Value::Bytes16),
        _ => None,
    }
}

/// Types reachable from `roots` through composite bodies.
fn reachable<'a>(roots: impl IntoIterator<Item = &'a str>, types: &BTreeMap<String, &FbType>) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<String> = roots.into_iter().map(str::to_string).collect();
    while let Some(t) = stack.pop() {
        if !seen.insert(t.clone()) {
            continue;
        }
        if let Some(FbType {
            body: FbBody::Composite(n),
            ..
        }) = types.get(&t)
        {
            stack.extend(n.instances.iter().map(|i| i.type_name.clone()));
        }
    }
    seen
}

pub fn resolve(doc: &DocumentAst) -> Result<Application, Vec<ParseDiagnostic>> {
    let mut r = Resolver {
        errors: Vec::new(),
        interfaces: BTreeMap::new(),
    };
    let prelude = prelude();

    let mut declared: Vec<(&TypeAst, FbInterface)> = Vec::new();
    for t in &doc.types {
        if declared.iter().any(|(d, _)| d.name.text == t.name.text) {
            r.err(
                ParseErrorKind::Duplicate,
                &t.name.span,
                format!("type `{}` declared twice", t.name.text),
            );
            continue;
        }
        let iface = r.interface(t);
        declared.push((t, iface));
    }
    for p in &prelude {
        r.interfaces.insert(p.name.clone(), p.interface.clone());
    }
    for (t, iface) in &declared {
        r.interfaces.insert(t.name.text.clone(), iface.clone());
    }

    let mut fb_types = Vec::new();
    for (t, iface) in declared {
        let ty = match &t.kind {
            TypeKindAst::Basic => r.basic(t, iface),
            TypeKindAst::Service(binding) => FbType::service(&t.name.text, iface, binding),
            TypeKindAst::Composite => {
                let (net, _) = r.network(&t.network, Some(&iface));
                FbType::composite(&t.name.text, iface, net)
            }
        };
        fb_types.push(ty);
    }

    let (root, fragments) = r.network(&doc.app, None);
    let by_name: BTreeMap<String, &FbType> = fb_types
        .iter()
        .chain(prelude.iter().filter(|p| !fb_types.iter().any(|t| t.name == p.name)))
        .map(|t| (t.name.clone(), t))
        .collect();
    let roots = root
        .instances
        .iter()
        .map(|i| i.type_name.as_str())
        .chain(fb_types.iter().map(|t| t.name.as_str()));
    let used = reachable(roots, &by_name);
    let implicit: Vec<FbType> = prelude
        .iter()
        .filter(|p| used.contains(&p.name) && !fb_types.iter().any(|t| t.name == p.name))
        .cloned()
        .collect();
    fb_types.extend(implicit);

    let mut devices: Vec<String> = Vec::new();
    for d in &doc.devices {
        if devices.contains(&d.text) {
            r.err(
                ParseErrorKind::Duplicate,
                &d.span,
                format!("device `{}` declared twice", d.text),
            );
        } else {
            devices.push(d.text.clone());
        }
    }
    let mut mapping = BTreeMap::new();
    for (inst, dev) in &doc.map {
        if root.find_instance(&inst.text).is_none() {
            r.err(
                ParseErrorKind::UnknownName,
                &inst.span,
                format!("unknown instance `{}`", inst.text),
            );
        }
        if !devices.contains(&dev.text) {
            r.err(
                ParseErrorKind::UnknownName,
                &dev.span,
                format!("unknown device `{}`", dev.text),
            );
        }
        if mapping.insert(inst.text.clone(), dev.text.clone()).is_some() {
            r.err(
                ParseErrorKind::Duplicate,
                &inst.span,
                format!("instance `{}` mapped twice", inst.text),
            );
        }
    }

    let secure_links = root
        .data_conns
        .iter()
        .zip(fragments)
        .filter_map(|(c, f)| f.map(|f| f.attach(c.clone())))
        .collect();

    if !r.errors.is_empty() {
        return Err(r.errors);
    }
    Ok(Application {
        fb_types,
        root,
        devices,
        mapping,
        secure_links,
    })
}
