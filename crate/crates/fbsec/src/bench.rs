//! Latency bench: t1 is taken before encryption, t2 after decryption, and
//! L = t2 - t1 is aggregated over a fixed number of protection cycles.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fbsec_core::cl4fb::{compile_secure_links, CompileOptions, DeploymentPlan};
use fbsec_core::crypto::DhGroup;
use fbsec_core::diag::Diagnostic;
use fbsec_core::grid::{ProtectionConfig, ProtectionFunction, Scenario, CURRENT_STUB};
use fbsec_core::model::{Application, ParamValue};
use fbsec_core::runtime::library::LATENCY_PROBE;
use fbsec_core::runtime::{LatencySample, RuntimeError, Simulation};
use fbsec_core::transport::{ChannelId, LatencyModel};

use crate::casestudy::{bindings, protection_of};

pub const MIN_CYCLES: usize = 100;
pub const KEY_SIZES: [u64; 3] = [128, 192, 256];
pub const UNENCRYPTED_LABEL: &str = "Latency without encryption";
/// Device hosting everything in the single topology.
pub const SINGLE_DEVICE: &str = "HOST";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Topology {
    Single,
    Distributed,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Topology::Single => "single",
            Topology::Distributed => "distributed",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub cycles: usize,
    /// Overrides the key size of every secure link.
    pub keysize: Option<u64>,
    pub topology: Topology,
    /// One-way latency of the distributed topology.
    pub latency_ms: f64,
    pub seed: u64,
    pub group: DhGroup,
    pub encrypt: bool,
    pub base: ChannelId,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            cycles: MIN_CYCLES,
            keysize: None,
            topology: Topology::Distributed,
            latency_ms: 1.0,
            seed: 0,
            group: DhGroup::modp2048(),
            encrypt: true,
            base: CompileOptions::default().base,
        }
    }
}

impl BenchOptions {
    pub fn label(&self) -> String {
        match (self.encrypt, self.keysize) {
            (false, _) => UNENCRYPTED_LABEL.into(),
            (true, Some(k)) => format!("AES{k}"),
            (true, None) => "AES".into(),
        }
    }

    fn latency_model(&self) -> LatencyModel {
        match self.topology {
            Topology::Single => LatencyModel::zero(),
            Topology::Distributed => LatencyModel::fixed_ms(self.latency_ms),
        }
    }

    /// Long enough for a trip to cross the network and its timestamp to
    /// follow it.
    fn period_ms(&self) -> u64 {
        let lat = match self.topology {
            Topology::Single => 0,
            Topology::Distributed => self.latency_ms.max(0.0).ceil() as u64,
        };
        20u64.max(4 * lat + 4)
    }

    fn warmup_ms(&self) -> u64 {
        50u64.max(10 * self.period_ms())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("at least {MIN_CYCLES} cycles are required, got {0}")]
    TooFewCycles(usize),
    #[error("unsupported key size {0}")]
    KeySize(u64),
    #[error("latency must be finite and non-negative, got {0}")]
    Latency(f64),
    #[error("plan carries no latency instrumentation; compile with instrumentation enabled")]
    NotInstrumented,
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Compile(Vec<Diagnostic>),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("cycle {cycle}: expected {expected} samples, got {got}")]
    MissingSamples { cycle: usize, expected: usize, got: usize },
}

/// One delivery of a protected link in a given cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchSample {
    pub cycle: usize,
    /// `src -> dst` of the original connection.
    pub link: String,
    pub sample: LatencySample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeadlineTally {
    pub function: ProtectionFunction,
    pub deadline_ms: u64,
    pub pass: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub label: String,
    pub topology: Topology,
    pub keysize: Option<u64>,
    pub encrypted: bool,
    pub cycles: usize,
    pub min_ms: u64,
    pub max_ms: u64,
    pub mean_ms: f64,
    pub samples: Vec<BenchSample>,
    pub deadlines: Vec<DeadlineTally>,
}

impl BenchReport {
    pub fn deadline(&self, f: ProtectionFunction) -> Option<&DeadlineTally> {
        self.deadlines.iter().find(|d| d.function == f)
    }
}

/// Random currents per stub instance and cycle, with roughly one fault
/// in four cycles for each protection function.
pub fn random_scenario<S: AsRef<str>>(stubs: &[S], cycles: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for _ in 0..cycles {
        for s in stubs {
            let fault = rng.random_bool(0.25);
            let v = if fault {
                rng.random_range(150.0..400.0)
            } else {
                rng.random_range(0.0..0.5)
            };
            table.entry(s.as_ref().to_string()).or_default().push(v);
        }
    }
    Arc::new(move |inst: &str, n: u64| table.get(inst).and_then(|v| v.get(n as usize)).copied().unwrap_or(0.0))
}

pub fn stub_names(app: &Application) -> Vec<String> {
    app.root
        .instances
        .iter()
        .filter(|i| i.type_name == CURRENT_STUB)
        .map(|i| i.name.clone())
        .collect()
}

/// Applies the keysize override and, for the single topology, moves every
/// instance onto one device.
pub fn prepare(app: &Application, opts: &BenchOptions) -> Result<DeploymentPlan, BenchError> {
    let mut app = app.clone();
    if let Some(k) = opts.keysize {
        if !KEY_SIZES.contains(&k) {
            return Err(BenchError::KeySize(k));
        }
        for l in &mut app.secure_links {
            l.params.insert("keysize".into(), ParamValue::Int(k));
        }
    }
    if opts.topology == Topology::Single {
        app.devices = vec![SINGLE_DEVICE.into()];
        for d in app.mapping.values_mut() {
            *d = SINGLE_DEVICE.into();
        }
    }
    let copts = CompileOptions {
        base: opts.base,
        instrument: true,
        encrypt: opts.encrypt,
        force_lower_same_device: opts.topology == Topology::Single,
    };
    compile_secure_links(&app, &copts).map_err(BenchError::Compile)
}

fn is_instrumented(plan: &DeploymentPlan) -> bool {
    plan.devices
        .iter()
        .any(|d| d.app.fb_types.iter().any(|t| t.name == LATENCY_PROBE))
}

/// Stubs nothing else triggers, with their devices; each gets `REQ`
/// once per cycle.
pub fn cycle_sources<'a>(devices: impl IntoIterator<Item = (&'a str, &'a Application)>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (dev, app) in devices {
        for i in &app.root.instances {
            let triggered = app.root.event_conns.iter().any(|c| c.target.fb == i.name);
            if i.type_name == CURRENT_STUB && !triggered {
                out.push((dev.to_string(), i.name.clone()));
            }
        }
    }
    out
}

/// Runs `opts.cycles` protection cycles over an instrumented plan.
pub fn run_latency_bench(
    plan: &DeploymentPlan,
    original: &Application,
    opts: &BenchOptions,
    scenario: Scenario,
) -> Result<BenchReport, BenchError> {
    if opts.cycles < MIN_CYCLES {
        return Err(BenchError::TooFewCycles(opts.cycles));
    }
    if !opts.latency_ms.is_finite() || opts.latency_ms < 0.0 {
        return Err(BenchError::Latency(opts.latency_ms));
    }
    if !is_instrumented(plan) {
        return Err(BenchError::NotInstrumented);
    }
    let binds = bindings(opts.group.clone(), scenario);
    let mut sim = Simulation::new(opts.latency_model(), opts.seed);
    for d in &plan.devices {
        sim.add_device(&d.name, &d.app.root, &d.app.fb_types, &binds)?;
    }
    sim.cold_start_all();
    sim.run_for_ms(opts.warmup_ms())?;
    sim.take_samples();

    let names: BTreeMap<u32, String> = plan.links.iter().map(|l| (l.link_id, l.conn.to_string())).collect();
    let functions: BTreeMap<u32, ProtectionConfig> = plan
        .links
        .iter()
        .filter_map(|l| protection_of(original, &l.conn.source.fb).map(|p| (l.link_id, p)))
        .collect();
    let sources = cycle_sources(plan.devices.iter().map(|d| (d.name.as_str(), &d.app)));
    let period = opts.period_ms();
    let mut samples = Vec::with_capacity(opts.cycles * plan.links.len());
    for cycle in 0..opts.cycles {
        for (dev, inst) in &sources {
            sim.inject(dev, inst, "REQ")?;
        }
        sim.run_for_ms(period)?;
        let got = sim.take_samples();
        if got.len() != plan.links.len() {
            return Err(BenchError::MissingSamples {
                cycle,
                expected: plan.links.len(),
                got: got.len(),
            });
        }
        samples.extend(got.into_iter().map(|(_, s)| BenchSample {
            cycle,
            link: names.get(&s.link).cloned().unwrap_or_default(),
            sample: s,
        }));
    }

    let lat: Vec<u64> = samples.iter().map(|s| s.sample.latency_ms()).collect();
    let min_ms = lat.iter().copied().min().unwrap_or(0);
    let max_ms = lat.iter().copied().max().unwrap_or(0);
    let mean_ms = if lat.is_empty() {
        0.0
    } else {
        lat.iter().map(|&l| l as f64).sum::<f64>() / lat.len() as f64
    };

    let mut deadlines: Vec<DeadlineTally> = Vec::new();
    for f in ProtectionFunction::ALL {
        let links: Vec<(u32, ProtectionConfig)> = functions
            .iter()
            .filter(|(_, p)| p.function == f)
            .map(|(l, p)| (*l, *p))
            .collect();
        let Some(&(_, cfg)) = links.first() else {
            continue;
        };
        let mut t = DeadlineTally {
            function: f,
            deadline_ms: cfg.deadline_ms,
            pass: 0,
            fail: 0,
        };
        for s in samples
            .iter()
            .filter(|s| links.iter().any(|(l, _)| *l == s.sample.link))
        {
            if cfg.meets_deadline(s.sample.latency_ms()) {
                t.pass += 1;
            } else {
                t.fail += 1;
            }
        }
        deadlines.push(t);
    }

    Ok(BenchReport {
        label: opts.label(),
        topology: opts.topology,
        keysize: opts.keysize,
        encrypted: opts.encrypt,
        cycles: opts.cycles,
        min_ms,
        max_ms,
        mean_ms,
        samples,
        deadlines,
    })
}

/// Compiles `app` for `opts` and benches it against a seeded random
/// scenario.
pub fn bench_application(app: &Application, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    let plan = prepare(app, opts)?;
    let scenario = random_scenario(&stub_names(app), opts.cycles, opts.seed);
    run_latency_bench(&plan, app, opts, scenario)
}

/// The unencrypted reference row followed by one row per requested key
/// size and topology, in that order.
pub fn run_matrix(
    app: &Application,
    base: &BenchOptions,
    keysizes: &[u64],
    topologies: &[Topology],
) -> Result<Vec<BenchReport>, BenchError> {
    let mut out = vec![bench_application(
        app,
        &BenchOptions {
            encrypt: false,
            keysize: None,
            topology: Topology::Distributed,
            ..base.clone()
        },
    )?];
    for &k in keysizes {
        for &t in topologies {
            out.push(bench_application(
                app,
                &BenchOptions {
                    encrypt: true,
                    keysize: Some(k),
                    topology: t,
                    ..base.clone()
                },
            )?);
        }
    }
    Ok(out)
}

/// Aligned text table, one row per report.
pub fn render_table(reports: &[BenchReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<12} {:>6} {:>8} {:>8} {:>9}  deadlines",
        "configuration", "topology", "cycles", "min(ms)", "max(ms)", "mean(ms)"
    );
    for r in reports {
        let verdicts: Vec<String> = r
            .deadlines
            .iter()
            .map(|d| {
                format!(
                    "{} {}/{} within {}ms",
                    d.function,
                    d.pass,
                    d.pass + d.fail,
                    d.deadline_ms
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "{:<28} {:<12} {:>6} {:>8} {:>8} {:>9.3}  {}",
            r.label,
            r.topology,
            r.cycles,
            r.min_ms,
            r.max_ms,
            r.mean_ms,
            verdicts.join(", ")
        );
    }
    out
}

pub const CSV_HEADER: [&str; 9] = [
    "config", "topology", "keysize", "cycle", "link", "t1", "t2", "latency", "epoch",
];

/// One row per (cycle, link).
pub fn write_csv<W: io::Write>(reports: &[BenchReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        let keysize = r.keysize.map(|k| k.to_string()).unwrap_or_default();
        for s in &r.samples {
            w.write_record([
                r.label.as_str(),
                &r.topology.to_string(),
                &keysize,
                &s.cycle.to_string(),
                &s.link,
                &s.sample.t1.to_string(),
                &s.sample.t2.to_string(),
                &s.sample.latency_ms().to_string(),
                &s.sample.epoch.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
