//! Structural validation of applications and function-block types.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diag::{DiagCode, Diagnostic, Location, NetItem};
use crate::model::{
    Application, Connection, DataKind, FbBody, FbInterface, FbNetwork, FbType, PortRef, SecurityGoal, Trigger, SELF_FB,
};

/// Checks every structural invariant of `app`. An empty result means the
/// application is well formed. Pure and idempotent.
pub fn validate_application(app: &Application) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let types = TypeIndex::new(&app.fb_types);

    let mut seen = BTreeSet::new();
    for t in &app.fb_types {
        if !seen.insert(t.name.as_str()) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateName,
                Location::FbType(t.name.clone()),
                format!("fbtype `{}` declared more than once", t.name),
            ));
        }
    }
    for t in &app.fb_types {
        validate_type(t, &types, &mut diags);
    }
    check_composite_cycles(&app.fb_types, &types, &mut diags);

    validate_network(&app.root, None, &types, &mut diags, &|item| Location::Root(item));

    let mut devices = BTreeSet::new();
    for d in &app.devices {
        if !devices.insert(d.as_str()) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateName,
                Location::Device(d.clone()),
                format!("device `{d}` declared more than once"),
            ));
        }
    }
    for inst in &app.root.instances {
        match app.mapping.get(&inst.name) {
            None => diags.push(Diagnostic::error(
                DiagCode::Unmapped,
                Location::Root(NetItem::Instance(inst.name.clone())),
                format!("instance `{}` is not mapped to a device", inst.name),
            )),
            Some(dev) if !devices.contains(dev.as_str()) => diags.push(Diagnostic::error(
                DiagCode::UnknownDevice,
                Location::Mapping(inst.name.clone()),
                format!("instance `{}` mapped to undeclared device `{dev}`", inst.name),
            )),
            Some(_) => {}
        }
    }
    for inst in app.mapping.keys() {
        if app.root.find_instance(inst).is_none() {
            diags.push(Diagnostic::error(
                DiagCode::Unmapped,
                Location::Mapping(inst.clone()),
                format!("mapping names unknown instance `{inst}`"),
            ));
        }
    }

    validate_secure_links(app, &mut diags);
    diags
}

pub(crate) struct TypeIndex<'a> {
    by_name: BTreeMap<&'a str, &'a FbType>,
}

impl<'a> TypeIndex<'a> {
    pub(crate) fn new(types: &'a [FbType]) -> Self {
        let mut by_name = BTreeMap::new();
        for t in types {
            by_name.entry(t.name.as_str()).or_insert(t);
        }
        TypeIndex { by_name }
    }

    pub(crate) fn get(&self, name: &str) -> Option<&'a FbType> {
        self.by_name.get(name).copied()
    }
}

fn validate_type(t: &FbType, types: &TypeIndex<'_>, diags: &mut Vec<Diagnostic>) {
    let loc = || Location::FbType(t.name.clone());
    let iface = &t.interface;

    let mut dup = |names: &mut dyn Iterator<Item = &str>, what: &str| {
        let mut seen = BTreeSet::new();
        for n in names {
            if !seen.insert(n) {
                diags.push(Diagnostic::error(
                    DiagCode::DuplicateName,
                    loc(),
                    format!("{what} `{n}` declared more than once"),
                ));
            }
        }
    };
    // Events, data ports and internal variables share one namespace.
    let internals: Vec<&str> = match &t.body {
        FbBody::Basic(b) => b.internals.iter().map(|v| v.name.as_str()).collect(),
        _ => Vec::new(),
    };
    dup(
        &mut iface
            .event_inputs
            .iter()
            .chain(iface.event_outputs.iter())
            .map(String::as_str)
            .chain(
                iface
                    .data_inputs
                    .iter()
                    .chain(iface.data_outputs.iter())
                    .map(|d| d.name.as_str()),
            )
            .chain(internals.iter().copied()),
        "name",
    );

    for (event, ports) in &iface.with_assoc {
        let is_in = iface.has_event_input(event);
        let is_out = iface.has_event_output(event);
        if !is_in && !is_out {
            diags.push(Diagnostic::error(
                DiagCode::InvalidAssociation,
                loc(),
                format!("WITH association names unknown event `{event}`"),
            ));
            continue;
        }
        for p in ports {
            let ok = (is_in && iface.data_input(p).is_some()) || (is_out && iface.data_output(p).is_some());
            if !ok {
                diags.push(Diagnostic::error(
                    DiagCode::InvalidAssociation,
                    loc(),
                    format!(
                        "event `{event}` is associated with `{p}`, which is not a data {} port",
                        if is_in { "input" } else { "output" }
                    ),
                ));
            }
        }
    }

    match &t.body {
        FbBody::Basic(basic) => {
            for v in &basic.internals {
                if v.initial.kind() != v.kind {
                    diags.push(Diagnostic::error(
                        DiagCode::KindMismatch,
                        loc(),
                        format!(
                            "internal `{}` is {} but its initial value is {}",
                            v.name,
                            v.kind,
                            v.initial.kind()
                        ),
                    ));
                }
            }
            let ecc = &basic.ecc;
            let ecc_err = |msg: String| Diagnostic::error(DiagCode::InvalidEcc, loc(), msg);
            let mut states = BTreeSet::new();
            for s in &ecc.states {
                if !states.insert(s.as_str()) {
                    diags.push(ecc_err(format!("ECC state `{s}` declared more than once")));
                }
            }
            if !states.contains(ecc.initial.as_str()) {
                diags.push(ecc_err(format!(
                    "initial state `{}` is not a declared state",
                    ecc.initial
                )));
            }
            let readable: BTreeSet<&str> = iface
                .data_inputs
                .iter()
                .map(|d| d.name.as_str())
                .chain(basic.internals.iter().map(|v| v.name.as_str()))
                .collect();
            for tr in &ecc.transitions {
                for end in [&tr.from, &tr.to] {
                    if !states.contains(end.as_str()) {
                        diags.push(ecc_err(format!(
                            "transition {} -> {} references unknown state `{end}`",
                            tr.from, tr.to
                        )));
                    }
                }
                if let Trigger::Event(e) = &tr.trigger {
                    if !iface.has_event_input(e) {
                        diags.push(ecc_err(format!(
                            "transition {} -> {} is triggered by unknown event input `{e}`",
                            tr.from, tr.to
                        )));
                    }
                }
                if let Some(guard) = &tr.guard {
                    let mut vars = Vec::new();
                    guard.variables(&mut vars);
                    for v in vars {
                        if !readable.contains(v) {
                            diags.push(ecc_err(format!(
                                "guard of {} -> {} reads `{v}`, which is neither a data input nor an internal variable",
                                tr.from, tr.to
                            )));
                        }
                    }
                }
            }
            for (state, actions) in &ecc.actions {
                if !states.contains(state.as_str()) {
                    diags.push(ecc_err(format!("actions attached to unknown state `{state}`")));
                }
                for a in actions {
                    if let Some(out) = &a.output {
                        if !iface.has_event_output(out) {
                            diags.push(ecc_err(format!("state `{state}` emits unknown event output `{out}`")));
                        }
                    }
                }
            }
        }
        FbBody::Composite(net) => {
            let name = t.name.clone();
            validate_network(net, Some(iface), types, diags, &move |item| Location::TypeNetwork {
                fb_type: name.clone(),
                item,
            });
        }
        FbBody::Service { binding } => {
            if binding.is_empty() {
                diags.push(Diagnostic::error(
                    DiagCode::UnknownType,
                    loc(),
                    "service FB has an empty binding name",
                ));
            }
        }
    }
}

fn check_composite_cycles(all: &[FbType], types: &TypeIndex<'_>, diags: &mut Vec<Diagnostic>) {
    fn visit<'a>(
        t: &'a FbType,
        types: &TypeIndex<'a>,
        stack: &mut Vec<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Option<String> {
        if done.contains(t.name.as_str()) {
            return None;
        }
        if stack.contains(&t.name.as_str()) {
            return Some(t.name.clone());
        }
        stack.push(&t.name);
        if let FbBody::Composite(net) = &t.body {
            for inst in &net.instances {
                if let Some(child) = types.get(&inst.type_name) {
                    if let Some(c) = visit(child, types, stack, done) {
                        return Some(c);
                    }
                }
            }
        }
        stack.pop();
        done.insert(&t.name);
        None
    }
    let mut done = BTreeSet::new();
    for t in all {
        let mut stack = Vec::new();
        if let Some(name) = visit(t, types, &mut stack, &mut done) {
            diags.push(Diagnostic::error(
                DiagCode::UnknownType,
                Location::FbType(name.clone()),
                format!("composite type `{name}` contains itself"),
            ));
            return;
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Category {
    Event,
    Data,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum End {
    Source,
    Target,
}

/// Resolves a connection endpoint. Returns the data kind for data ports,
/// `None` for event ports, or an error message.
fn resolve_end(
    port: &PortRef,
    cat: Category,
    end: End,
    net: &FbNetwork,
    self_iface: Option<&FbInterface>,
    types: &TypeIndex<'_>,
) -> Result<Option<DataKind>, (DiagCode, String)> {
    // Instance outputs feed sources; a composite's own inputs also act as
    // sources inside its network, and its outputs as targets.
    let (iface, want_output) = if port.fb == SELF_FB {
        let Some(iface) = self_iface else {
            return Err((
                DiagCode::UnknownPort,
                format!("`{port}`: `self` is only valid inside a composite type"),
            ));
        };
        (iface, end == End::Target)
    } else {
        let Some(inst) = net.find_instance(&port.fb) else {
            return Err((
                DiagCode::UnknownPort,
                format!("`{port}` names unknown instance `{}`", port.fb),
            ));
        };
        let Some(t) = types.get(&inst.type_name) else {
            // Reported once on the instance itself.
            return Ok(None);
        };
        (&t.interface, end == End::Source)
    };
    let dir = if want_output { "output" } else { "input" };
    match cat {
        Category::Event => {
            let (here, there) = if want_output {
                (iface.has_event_output(&port.port), iface.has_event_input(&port.port))
            } else {
                (iface.has_event_input(&port.port), iface.has_event_output(&port.port))
            };
            if here {
                Ok(None)
            } else if there {
                Err((
                    DiagCode::DirectionMismatch,
                    format!("`{port}` is used as an event {dir} but has the opposite direction"),
                ))
            } else {
                Err((DiagCode::UnknownPort, format!("`{port}` is not an event {dir}")))
            }
        }
        Category::Data => {
            let (here, there) = if want_output {
                (iface.data_output(&port.port), iface.data_input(&port.port))
            } else {
                (iface.data_input(&port.port), iface.data_output(&port.port))
            };
            if let Some(d) = here {
                Ok(Some(d.kind))
            } else if there.is_some() {
                Err((
                    DiagCode::DirectionMismatch,
                    format!("`{port}` is used as a data {dir} but has the opposite direction"),
                ))
            } else {
                Err((DiagCode::UnknownPort, format!("`{port}` is not a data {dir}")))
            }
        }
    }
}

fn validate_network(
    net: &FbNetwork,
    self_iface: Option<&FbInterface>,
    types: &TypeIndex<'_>,
    diags: &mut Vec<Diagnostic>,
    loc: &dyn Fn(NetItem) -> Location,
) {
    let mut names = BTreeSet::new();
    for inst in &net.instances {
        let here = || loc(NetItem::Instance(inst.name.clone()));
        if inst.name == SELF_FB || !names.insert(inst.name.as_str()) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateName,
                here(),
                format!("instance name `{}` is reserved or already used", inst.name),
            ));
        }
        if types.get(&inst.type_name).is_none() {
            diags.push(Diagnostic::error(
                DiagCode::UnknownType,
                here(),
                format!("instance `{}` has unknown type `{}`", inst.name, inst.type_name),
            ));
        }
    }

    for (i, c) in net.event_conns.iter().enumerate() {
        for (port, end) in [(&c.source, End::Source), (&c.target, End::Target)] {
            if let Err((code, msg)) = resolve_end(port, Category::Event, end, net, self_iface, types) {
                diags.push(Diagnostic::error(code, loc(NetItem::EventConn(i)), msg));
            }
        }
    }

    let mut writers: BTreeMap<&PortRef, usize> = BTreeMap::new();
    for (i, c) in net.data_conns.iter().enumerate() {
        let here = || loc(NetItem::DataConn(i));
        let src = resolve_end(&c.source, Category::Data, End::Source, net, self_iface, types);
        let dst = resolve_end(&c.target, Category::Data, End::Target, net, self_iface, types);
        for r in [&src, &dst] {
            if let Err((code, msg)) = r {
                diags.push(Diagnostic::error(*code, here(), msg.clone()));
            }
        }
        if let (Ok(Some(a)), Ok(Some(b))) = (src, dst) {
            if a != b {
                diags.push(Diagnostic::error(
                    DiagCode::KindMismatch,
                    here(),
                    format!("{c}: {a} output connected to {b} input"),
                ));
            }
        }
        if let Some(prev) = writers.insert(&c.target, i) {
            diags.push(Diagnostic::error(
                DiagCode::MultipleWriters,
                here(),
                format!("`{}` already has a writer (data connection #{prev})", c.target),
            ));
        }
    }

    let mut bound = BTreeSet::new();
    for (i, p) in net.params.iter().enumerate() {
        let here = || loc(NetItem::Param(i));
        if p.target.fb == SELF_FB {
            diags.push(Diagnostic::error(
                DiagCode::InvalidParamBinding,
                here(),
                format!("cannot bind a literal to interface port `{}`", p.target),
            ));
            continue;
        }
        match resolve_end(&p.target, Category::Data, End::Target, net, self_iface, types) {
            Err((code, msg)) => diags.push(Diagnostic::error(code, here(), msg)),
            Ok(Some(kind)) if kind != p.value.kind() => diags.push(Diagnostic::error(
                DiagCode::KindMismatch,
                here(),
                format!("`{}` is {kind} but is bound to a {} literal", p.target, p.value.kind()),
            )),
            Ok(_) => {}
        }
        if writers.contains_key(&p.target) {
            diags.push(Diagnostic::error(
                DiagCode::InvalidParamBinding,
                here(),
                format!("`{}` is both connected and bound to a literal", p.target),
            ));
        }
        if !bound.insert(&p.target) {
            diags.push(Diagnostic::error(
                DiagCode::InvalidParamBinding,
                here(),
                format!("`{}` is bound more than once", p.target),
            ));
        }
    }
}

fn validate_secure_links(app: &Application, diags: &mut Vec<Diagnostic>) {
    let mut annotated: BTreeMap<&Connection, usize> = BTreeMap::new();
    for (i, link) in app.secure_links.iter().enumerate() {
        let here = || Location::SecureLink(i);
        if app.root.data_conn_index(&link.d_con).is_none() {
            diags.push(Diagnostic::error(
                DiagCode::DanglingSecureLink,
                here(),
                format!("secure link refers to missing data connection {}", link.d_con),
            ));
        }
        if let Some(prev) = annotated.insert(&link.d_con, i) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateSecureLink,
                here(),
                format!("data connection {} already carries secure link #{prev}", link.d_con),
            ));
        }
        if link.goal == SecurityGoal::Confidentiality && link.alg == "AES" {
            match link.keysize() {
                Some(128 | 192 | 256) => {}
                Some(other) => diags.push(Diagnostic::error(
                    DiagCode::InvalidParam,
                    here(),
                    format!("AES keysize must be 128, 192 or 256, got {other}"),
                )),
                None => diags.push(Diagnostic::error(
                    DiagCode::InvalidParam,
                    here(),
                    "AES keysize must be an integer",
                )),
            }
        }
        match link.rekey_ms() {
            Some(0) => diags.push(Diagnostic::error(
                DiagCode::InvalidParam,
                here(),
                "rekey interval must be positive",
            )),
            None => diags.push(Diagnostic::error(
                DiagCode::InvalidParam,
                here(),
                "rekey must be a duration such as 60s or 500ms",
            )),
            Some(_) => {}
        }
    }
}

/// Data connections of the root network whose endpoints are mapped to
/// different devices, in declaration order.
pub fn cross_device_connections(app: &Application) -> Result<Vec<Connection>, UnmappedInstance> {
    let mut out = Vec::new();
    for c in &app.root.data_conns {
        let a = app
            .device_of(&c.source.fb)
            .ok_or_else(|| UnmappedInstance(c.source.fb.clone()))?;
        let b = app
            .device_of(&c.target.fb)
            .ok_or_else(|| UnmappedInstance(c.target.fb.clone()))?;
        if a != b {
            out.push(c.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("instance `{0}` is not mapped to any device")]
pub struct UnmappedInstance(pub String);
