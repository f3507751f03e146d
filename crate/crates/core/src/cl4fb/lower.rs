use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;

use crate::diag::{DiagCode, Diagnostic, Location, NetItem};
use crate::model::{Application, Connection, DataKind, FbBody, FbNetwork, FbType, PortRef, SecurityGoal, Value};
use crate::runtime::library::standard_types;
use crate::transport::ChannelId;
use crate::validate::validate_application;

use super::blocks::{receiver, receiver_type_name, sender, sender_type_name};
use super::channels::{allocate_channels, ChannelRequest, LinkChannels};

pub const DEFAULT_BASE: ChannelId = ChannelId::new(Ipv4Addr::new(239, 0, 0, 1), 61_000);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    pub base: ChannelId,
    /// Adds timestamp recorders around the protected path and a latency
    /// probe on every receiver.
    pub instrument: bool,
    /// With `false`, annotated links get plain carriers as well.
    pub encrypt: bool,
    /// Lowers secure links even when both ends share a device.
    pub force_lower_same_device: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            base: DEFAULT_BASE,
            instrument: false,
            encrypt: true,
            force_lower_same_device: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Initiator,
    Responder,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Initiator => "initiator",
            Role::Responder => "responder",
        })
    }
}

/// One connection replaced by a sender/receiver pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweredLink {
    pub link_id: u32,
    /// Index into the application's secure links; `None` for a plain
    /// carrier of an unannotated connection.
    pub secure_link: Option<usize>,
    pub conn: Connection,
    pub encrypted: bool,
    pub sender_device: String,
    pub receiver_device: String,
    pub sender: String,
    pub receiver: String,
    /// 1-based slot of this link inside its receiver.
    pub slot: usize,
    pub channels: LinkChannels,
    pub keysize: u64,
    pub rekey_ms: u64,
    /// True when the data channel carries more than one link.
    pub shared: bool,
    /// Producer events that carry the connection's value.
    pub triggers: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleEntry {
    pub device: String,
    pub link_id: u32,
    pub role: Role,
}

/// A single-device application ready to run on `name`.
#[derive(Clone, Debug, PartialEq)]
pub struct DevicePlan {
    pub name: String,
    pub app: Application,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeploymentPlan {
    pub devices: Vec<DevicePlan>,
    pub links: Vec<LoweredLink>,
    pub roles: Vec<RoleEntry>,
    pub warnings: Vec<Diagnostic>,
}

impl DeploymentPlan {
    pub fn device(&self, name: &str) -> Option<&DevicePlan> {
        self.devices.iter().find(|d| d.name == name)
    }

    /// Instances across all devices whose type satisfies `pred`.
    pub fn instances_where(&self, pred: impl Fn(&str) -> bool) -> Vec<(&str, &str)> {
        self.devices
            .iter()
            .flat_map(|d| {
                d.app
                    .root
                    .instances
                    .iter()
                    .filter(|i| pred(&i.type_name))
                    .map(move |i| (d.name.as_str(), i.name.as_str()))
            })
            .collect()
    }
}

struct Candidate {
    conn: Connection,
    secure: Option<usize>,
    encrypted: bool,
    keysize: u64,
    rekey_ms: u64,
}

struct Group {
    device: String,
    data: ChannelId,
    encrypted: bool,
    name: String,
    members: Vec<usize>,
}

fn port_kind(app: &Application, p: &PortRef) -> Option<DataKind> {
    app.instance_type(&p.fb)?.interface.data_output(&p.port).map(|d| d.kind)
}

/// Events of the producer's type that publish `port`.
fn triggers(app: &Application, p: &PortRef) -> Vec<String> {
    let Some(t) = app.instance_type(&p.fb) else {
        return Vec::new();
    };
    t.interface
        .event_outputs
        .iter()
        .filter(|e| t.interface.with_assoc.get(*e).is_some_and(|w| w.contains(&p.port)))
        .cloned()
        .collect()
}

struct Names(BTreeSet<String>);

impl Names {
    fn fresh(&mut self, base: &str) -> String {
        let mut n = 0usize;
        loop {
            let candidate = if n == 0 {
                base.to_string()
            } else {
                format!("{base}_{n}")
            };
            if self.0.insert(candidate.clone()) {
                return candidate;
            }
            n += 1;
        }
    }
}

/// Replaces every eligible cross-device secure link (and every plain
/// cross-device BOOL connection) with a sender composite on the source
/// device and a receiver composite on the target device, and splits the
/// result into one single-device application per device.
pub fn compile_secure_links(app: &Application, opts: &CompileOptions) -> Result<DeploymentPlan, Vec<Diagnostic>> {
    let checked = validate_application(app);
    if checked.iter().any(Diagnostic::is_error) {
        return Err(checked);
    }
    let mut warnings = checked;
    let mut errors = Vec::new();
    let dev = |inst: &str| app.device_of(inst).unwrap_or_default().to_string();
    let ordinal = |d: &str| app.devices.iter().position(|x| x == d).unwrap_or(0) as u64 + 1;

    let mut candidates = Vec::new();
    for (li, link) in app.secure_links.iter().enumerate() {
        let c = &link.d_con;
        let here = || Location::SecureLink(li);
        if dev(&c.source.fb) == dev(&c.target.fb) && !opts.force_lower_same_device {
            warnings.push(Diagnostic::warning(
                DiagCode::SameDeviceLink,
                here(),
                format!(
                    "{c} stays on device `{}`; the annotation is kept but not lowered",
                    dev(&c.source.fb)
                ),
            ));
            continue;
        }
        if link.goal != SecurityGoal::Confidentiality {
            errors.push(Diagnostic::error(
                DiagCode::UnsupportedGoal,
                here(),
                format!(
                    "unsupported goal `{}` on {c}: only confidentiality (C) links can be compiled for now",
                    link.goal.letter()
                ),
            ));
            continue;
        }
        if link.alg != "AES" {
            errors.push(Diagnostic::error(
                DiagCode::UnsupportedAlgorithm,
                here(),
                format!(
                    "unsupported algorithm `{}` on {c}: confidentiality links use AES",
                    link.alg
                ),
            ));
            continue;
        }
        if port_kind(app, &c.source) != Some(DataKind::Bool) {
            errors.push(Diagnostic::error(
                DiagCode::UnsupportedKind,
                here(),
                format!(
                    "{c} carries {:?}; only BOOL links can be lowered",
                    port_kind(app, &c.source)
                ),
            ));
            continue;
        }
        candidates.push(Candidate {
            conn: c.clone(),
            secure: Some(li),
            encrypted: opts.encrypt,
            keysize: link.keysize().unwrap_or(crate::model::DEFAULT_KEYSIZE),
            rekey_ms: link.rekey_ms().unwrap_or(crate::model::DEFAULT_REKEY_MS),
        });
    }
    for (ci, c) in app.root.data_conns.iter().enumerate() {
        if app.secure_link_for(c).is_some() || dev(&c.source.fb) == dev(&c.target.fb) {
            continue;
        }
        match port_kind(app, &c.source) {
            Some(DataKind::Bool) => candidates.push(Candidate {
                conn: c.clone(),
                secure: None,
                encrypted: false,
                keysize: 0,
                rekey_ms: 0,
            }),
            kind => errors.push(Diagnostic::error(
                DiagCode::UnsupportedKind,
                Location::Root(NetItem::DataConn(ci)),
                format!(
                    "{c} crosses devices `{}` -> `{}` but carries {}; only BOOL values have a carrier",
                    dev(&c.source.fb),
                    dev(&c.target.fb),
                    kind.map(|k| k.to_string()).unwrap_or_default()
                ),
            )),
        }
    }

    let trig: Vec<Vec<String>> = candidates.iter().map(|c| triggers(app, &c.conn.source)).collect();
    for (c, t) in candidates.iter().zip(&trig) {
        if t.is_empty() {
            let loc = match c.secure {
                Some(li) => Location::SecureLink(li),
                None => Location::Root(NetItem::DataConn(app.root.data_conn_index(&c.conn).unwrap_or(0))),
            };
            errors.push(Diagnostic::error(
                DiagCode::MissingTrigger,
                loc,
                format!(
                    "no event output of `{}` is associated with `{}`",
                    c.conn.source.fb, c.conn.source.port
                ),
            ));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let requests: Vec<ChannelRequest> = candidates
        .iter()
        .map(|c| {
            let link = c.secure.map(|i| &app.secure_links[i]);
            ChannelRequest {
                target_device: dev(&c.conn.target.fb),
                alg: link.map(|l| l.alg.clone()).unwrap_or_default(),
                keysize: Some(c.keysize),
                rekey_ms: Some(c.rekey_ms),
                channel: link.filter(|_| c.encrypted).and_then(|l| l.channel().cloned()),
            }
        })
        .collect();
    let assignments = allocate_channels(&requests, opts.base).map_err(|e| {
        alloc::vec![Diagnostic::error(
            DiagCode::PortOverflow,
            Location::Application,
            e.to_string()
        )]
    })?;

    let mut names = Names(app.root.instances.iter().map(|i| i.name.clone()).collect());
    let sender_names: Vec<String> = candidates
        .iter()
        .map(|c| names.fresh(sender_type_name(c.encrypted)))
        .collect();

    let mut groups: Vec<Group> = Vec::new();
    let mut slot_of = Vec::with_capacity(candidates.len());
    for (i, (c, a)) in candidates.iter().zip(&assignments).enumerate() {
        let device = dev(&c.conn.target.fb);
        let existing = a
            .shared_with
            .and_then(|j| groups.iter().position(|g| g.members.contains(&j)));
        match existing {
            Some(g) => {
                groups[g].members.push(i);
                slot_of.push((g, groups[g].members.len()));
            }
            None => {
                groups.push(Group {
                    device,
                    data: a.channels.data,
                    encrypted: c.encrypted,
                    name: String::new(),
                    members: alloc::vec![i],
                });
                slot_of.push((groups.len() - 1, 1));
            }
        }
    }
    for g in &mut groups {
        g.name = names.fresh(&receiver_type_name(g.encrypted, 1));
    }

    let links: Vec<LoweredLink> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (g, slot) = slot_of[i];
            LoweredLink {
                link_id: i as u32 + 1,
                secure_link: c.secure,
                conn: c.conn.clone(),
                encrypted: c.encrypted,
                sender_device: dev(&c.conn.source.fb),
                receiver_device: groups[g].device.clone(),
                sender: sender_names[i].clone(),
                receiver: groups[g].name.clone(),
                slot,
                channels: assignments[i].channels,
                keysize: c.keysize,
                rekey_ms: c.rekey_ms,
                shared: groups[g].members.len() > 1,
                triggers: trig[i].clone(),
            }
        })
        .collect();

    let mut redirected: BTreeMap<usize, usize> = BTreeMap::new();
    for (ei, e) in app.root.event_conns.iter().enumerate() {
        let cover = links.iter().position(|l| {
            l.conn.source.fb == e.source.fb && l.conn.target.fb == e.target.fb && l.triggers.contains(&e.source.port)
        });
        match cover {
            Some(li) => {
                redirected.insert(ei, li);
            }
            None if dev(&e.source.fb) != dev(&e.target.fb) => errors.push(Diagnostic::error(
                DiagCode::UncoveredEvent,
                Location::Root(NetItem::EventConn(ei)),
                format!("event connection {e} crosses devices but no lowered data link carries it"),
            )),
            None => {}
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let mut generated: Vec<FbType> = Vec::new();
    for encrypted in [true, false] {
        if links.iter().any(|l| l.encrypted == encrypted) {
            generated.push(sender(encrypted, opts.instrument));
        }
        let mut sizes: Vec<usize> = groups
            .iter()
            .filter(|g| g.encrypted == encrypted)
            .map(|g| g.members.len())
            .collect();
        sizes.sort_unstable();
        sizes.dedup();
        generated.extend(sizes.into_iter().map(|n| receiver(n, encrypted, opts.instrument)));
    }
    let library: Vec<FbType> = app
        .fb_types
        .iter()
        .cloned()
        .chain(generated)
        .chain(standard_types())
        .collect();

    let lowered: BTreeSet<&Connection> = links.iter().map(|l| &l.conn).collect();
    let mut devices = Vec::new();
    for d in &app.devices {
        let on = |inst: &str| dev(inst) == *d;
        let mut net = FbNetwork::new();
        for inst in app.root.instances.iter().filter(|i| on(&i.name)) {
            net.instances.push(inst.clone());
        }
        for l in links.iter().filter(|l| l.sender_device == *d) {
            net = net.instance(&l.sender, sender_type_name(l.encrypted));
        }
        for g in groups.iter().filter(|g| g.device == *d) {
            net = net.instance(&g.name, &receiver_type_name(g.encrypted, g.members.len()));
        }

        for (ei, e) in app.root.event_conns.iter().enumerate() {
            match redirected.get(&ei) {
                Some(&li) if on(&e.target.fb) => {
                    let l = &links[li];
                    net.event_conns.push(Connection::new(
                        PortRef::new(l.receiver.as_str(), format!("IND_{}", l.slot)),
                        e.target.clone(),
                    ));
                }
                Some(_) => {}
                None if on(&e.source.fb) => net.event_conns.push(e.clone()),
                None => {}
            }
        }
        for l in links.iter().filter(|l| l.sender_device == *d) {
            for t in &l.triggers {
                net.event_conns.push(Connection::new(
                    PortRef::new(l.conn.source.fb.as_str(), t.as_str()),
                    PortRef::new(l.sender.as_str(), "REQ"),
                ));
            }
        }

        for c in app
            .root
            .data_conns
            .iter()
            .filter(|c| !lowered.contains(c) && on(&c.source.fb))
        {
            net.data_conns.push(c.clone());
        }
        for l in links.iter().filter(|l| l.sender_device == *d) {
            net.data_conns.push(Connection::new(
                l.conn.source.clone(),
                PortRef::new(l.sender.as_str(), "SD"),
            ));
        }
        for l in links.iter().filter(|l| l.receiver_device == *d) {
            net.data_conns.push(Connection::new(
                PortRef::new(l.receiver.as_str(), format!("RD_{}", l.slot)),
                l.conn.target.clone(),
            ));
        }

        for p in app.root.params.iter().filter(|p| on(&p.target.fb)) {
            net.params.push(p.clone());
        }
        let text = |c: ChannelId| Value::String(c.to_string());
        for l in links.iter().filter(|l| l.sender_device == *d) {
            let s = &l.sender;
            net = net
                .param(&format!("{s}.ID"), text(l.channels.data))
                .param(&format!("{s}.TS_ID"), text(l.channels.ts))
                .param(&format!("{s}.LID"), Value::Uint(l.link_id as u64))
                .param(&format!("{s}.SID"), Value::Uint(ordinal(d)));
            if l.encrypted {
                net = net
                    .param(&format!("{s}.KE_ID"), text(l.channels.ke))
                    .param(&format!("{s}.KSIZE"), Value::Uint(l.keysize))
                    .param(&format!("{s}.REKEY"), Value::Uint(l.rekey_ms));
            }
        }
        for g in groups.iter().filter(|g| g.device == *d) {
            let r = &g.name;
            let ids: Vec<String> = g.members.iter().map(|&i| links[i].link_id.to_string()).collect();
            net = net
                .param(&format!("{r}.ID"), text(g.data))
                .param(&format!("{r}.LINKS"), Value::String(ids.join(",")))
                .param(&format!("{r}.SID"), Value::Uint(ordinal(d)));
            for &i in &g.members {
                let l = &links[i];
                let k = l.slot;
                if l.encrypted {
                    net = net.param(&format!("{r}.KE_ID_{k}"), text(l.channels.ke));
                }
                net = net
                    .param(&format!("{r}.TS_ID_{k}"), text(l.channels.ts))
                    .param(&format!("{r}.LID_{k}"), Value::Uint(l.link_id as u64));
                if l.encrypted {
                    net = net.param(&format!("{r}.KSIZE_{k}"), Value::Uint(l.keysize));
                }
            }
        }

        let secure_links = app
            .secure_links
            .iter()
            .filter(|s| !lowered.contains(&s.d_con) && on(&s.d_con.source.fb))
            .cloned()
            .collect();
        let fb_types = used_types(&net, &library);
        let mapping = net.instances.iter().map(|i| (i.name.clone(), d.clone())).collect();
        devices.push(DevicePlan {
            name: d.clone(),
            app: Application {
                fb_types,
                root: net,
                devices: alloc::vec![d.clone()],
                mapping,
                secure_links,
            },
        });
    }

    let mut roles = Vec::new();
    for l in &links {
        roles.push(RoleEntry {
            device: l.sender_device.clone(),
            link_id: l.link_id,
            role: Role::Initiator,
        });
        roles.push(RoleEntry {
            device: l.receiver_device.clone(),
            link_id: l.link_id,
            role: Role::Responder,
        });
    }

    Ok(DeploymentPlan {
        devices,
        links,
        roles,
        warnings,
    })
}

/// Types reachable from `net`, in library order.
fn used_types(net: &FbNetwork, library: &[FbType]) -> Vec<FbType> {
    let mut used = BTreeSet::new();
    let mut stack: Vec<String> = net.instances.iter().map(|i| i.type_name.clone()).collect();
    while let Some(name) = stack.pop() {
        if !used.insert(name.clone()) {
            continue;
        }
        if let Some(FbType {
            body: FbBody::Composite(inner),
            ..
        }) = library.iter().find(|t| t.name == name)
        {
            stack.extend(inner.instances.iter().map(|i| i.type_name.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    library
        .iter()
        .filter(|t| used.contains(&t.name) && seen.insert(t.name.clone()))
        .cloned()
        .collect()
}
