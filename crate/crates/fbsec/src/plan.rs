//! Deployment plans on disk: one `.fbs` document per device plus a
//! line-oriented manifest.
//!
//! ```text
//! device IED1 IED1.fbs
//! link 1 src=diff.TRIP dst=brk_diff.TRIP sender=IED1/CLSender receiver=BRK/CLRecv slot=1 data=239.0.0.1:61000 ke=239.0.0.1:61001 ts=239.0.0.1:61002 keysize=128 rekey=60000ms shared
//! role IED1 1 initiator
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fbsec_core::cl4fb::{DeploymentPlan, LoweredLink, Role};
use fbsec_core::model::Application;
use fbsec_core::transport::ChannelId;

use crate::fbs::{parse_application, serialize_application, ParseDiagnostic};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{MANIFEST} line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("device `{0}` is not in the plan")]
    UnknownDevice(String),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseDiagnostic>),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PlanError + '_ {
    move |source| PlanError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One `link` line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestLink {
    pub id: u32,
    pub fields: BTreeMap<String, String>,
    pub shared: bool,
    pub encrypted: bool,
}

impl ManifestLink {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn channel(&self, key: &str) -> Option<ChannelId> {
        self.get(key)?.parse().ok()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    /// Device name and document file name, in plan order.
    pub devices: Vec<(String, String)>,
    pub links: Vec<ManifestLink>,
    pub roles: Vec<(String, u32, String)>,
}

pub fn device_file(device: &str) -> String {
    format!("{device}.fbs")
}

fn link_line(l: &LoweredLink) -> String {
    let mut s = format!(
        "link {} src={} dst={} sender={}/{} receiver={}/{} slot={} data={} ke={} ts={}",
        l.link_id,
        l.conn.source,
        l.conn.target,
        l.sender_device,
        l.sender,
        l.receiver_device,
        l.receiver,
        l.slot,
        l.channels.data,
        l.channels.ke,
        l.channels.ts,
    );
    if l.encrypted {
        let _ = write!(s, " keysize={} rekey={}ms", l.keysize, l.rekey_ms);
    } else {
        s.push_str(" plain");
    }
    if l.shared {
        s.push_str(" shared");
    }
    s
}

pub fn render_manifest(plan: &DeploymentPlan) -> String {
    let mut out = String::from("# deployment plan\n");
    for d in &plan.devices {
        let _ = writeln!(out, "device {} {}", d.name, device_file(&d.name));
    }
    for l in &plan.links {
        out.push_str(&link_line(l));
        out.push('\n');
    }
    for r in &plan.roles {
        let _ = writeln!(out, "role {} {} {}", r.device, r.link_id, r.role);
    }
    out
}

/// Writes every device document and the manifest into `dir`, creating it
/// if needed. Returns the written paths, manifest last.
pub fn emit_plan(plan: &DeploymentPlan, dir: &Path) -> Result<Vec<PathBuf>, PlanError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for d in &plan.devices {
        let path = dir.join(device_file(&d.name));
        fs::write(&path, serialize_application(&d.app)).map_err(io_err(&path))?;
        written.push(path);
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, render_manifest(plan)).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

pub fn parse_manifest(text: &str) -> Result<Manifest, PlanError> {
    let mut m = Manifest::default();
    for (i, line) in text.lines().enumerate() {
        let bad = |message: String| PlanError::Manifest { line: i + 1, message };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["device", name, file] => m.devices.push((name.to_string(), file.to_string())),
            ["link", id, rest @ ..] => {
                let id = id.parse().map_err(|_| bad(format!("bad link id `{id}`")))?;
                let mut link = ManifestLink {
                    id,
                    fields: BTreeMap::new(),
                    shared: false,
                    encrypted: true,
                };
                for w in rest {
                    match (*w, w.split_once('=')) {
                        ("shared", _) => link.shared = true,
                        ("plain", _) => link.encrypted = false,
                        (_, Some((k, v))) => {
                            link.fields.insert(k.to_string(), v.to_string());
                        }
                        _ => return Err(bad(format!("unexpected `{w}`"))),
                    }
                }
                m.links.push(link);
            }
            ["role", dev, id, role] if *role == Role::Initiator.to_string() || *role == Role::Responder.to_string() => {
                let id = id.parse().map_err(|_| bad(format!("bad link id `{id}`")))?;
                m.roles.push((dev.to_string(), id, role.to_string()));
            }
            _ => return Err(bad(format!("unrecognised line `{line}`"))),
        }
    }
    Ok(m)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, PlanError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    parse_manifest(&text)
}

/// Reads the document of one device from a plan directory.
pub fn load_device(dir: &Path, device: &str) -> Result<Application, PlanError> {
    let manifest = load_manifest(dir)?;
    let (_, file) = manifest
        .devices
        .iter()
        .find(|(d, _)| d == device)
        .ok_or_else(|| PlanError::UnknownDevice(device.to_string()))?;
    let path = dir.join(file);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    parse_application(&path.display().to_string(), &text).map_err(PlanError::Parse)
}
