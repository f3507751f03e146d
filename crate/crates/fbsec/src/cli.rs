//! Command-line front end. [`run`] returns the process exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};

use fbsec_core::cl4fb::{compile_secure_links, CompileOptions, DeploymentPlan};
use fbsec_core::crypto::DhGroup;
use fbsec_core::diag::Diagnostic;
use fbsec_core::model::Application;
use fbsec_core::runtime::{DeviceRuntime, RuntimeError, Simulation};
use fbsec_core::transport::{ChannelId, LatencyModel};

use crate::bench::{self, BenchError, BenchOptions, Topology, KEY_SIZES};
use crate::casestudy;
use crate::fbs::{parse_application, print, ParseDiagnostic};
use crate::net::{OsEntropy, SystemClock, UdpTransport};
use crate::plan::{self, PlanError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

const EXIT_HELP: &str = "Exit status:
  0  success
  1  usage error (unknown flag, bad value)
  2  parse or validation diagnostics
  3  runtime fault
  4  unreadable input or unwritable output";

#[derive(Parser, Debug)]
#[command(name = "fbsec", version, about = "Secure-link compiler, runtime and latency bench for function-block applications", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Real,
    Virtual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lower secure links and write one document per device plus a manifest.
    Compile {
        app: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 61000)]
        base_port: u16,
        #[arg(long, default_value = "239.0.0.1")]
        base_group: Ipv4Addr,
        /// Add timestamp recorders and latency probes.
        #[arg(long)]
        instrument: bool,
    },
    /// Execute a compiled plan and report on one device.
    Run {
        /// Directory written by `compile`.
        plan: PathBuf,
        /// Device to run and report on.
        #[arg(long)]
        device: String,
        #[arg(long, value_enum, default_value_t = Mode::Virtual)]
        mode: Mode,
        /// Stimulus cycles in virtual mode.
        #[arg(long, default_value_t = 10)]
        cycles: usize,
        /// Gap between stimulus cycles in virtual mode.
        #[arg(long, default_value_t = 20)]
        period_ms: u64,
        /// One-way loopback latency in virtual mode.
        #[arg(long, default_value_t = 1.0)]
        latency_ms: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall-clock run time in real mode.
        #[arg(long, default_value_t = 2000)]
        duration_ms: u64,
        /// Interface address for multicast in real mode.
        #[arg(long, default_value = "0.0.0.0")]
        interface: Ipv4Addr,
    },
    /// Measure end-to-end latency of every secure link.
    Bench {
        app: PathBuf,
        #[arg(long, default_value_t = bench::MIN_CYCLES)]
        cycles: usize,
        /// Omit to run all key sizes.
        #[arg(long, value_parser = parse_keysize)]
        keysize: Option<u64>,
        /// Omit to run both topologies.
        #[arg(long, value_enum)]
        topology: Option<Topology>,
        #[arg(long, default_value_t = 1.0)]
        latency_ms: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the network, its secure links and the channel table.
    Inspect { app: PathBuf },
}

fn parse_keysize(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(k) if KEY_SIZES.contains(&k) => Ok(k),
        _ => Err(format!("expected one of 128, 192, 256, got `{s}`")),
    }
}

/// Failure carrying its exit code and message.
struct Failure(i32, String);

type Out<'a> = &'a mut dyn Write;

impl From<Vec<ParseDiagnostic>> for Failure {
    fn from(d: Vec<ParseDiagnostic>) -> Self {
        Failure(
            EXIT_INVALID,
            d.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"),
        )
    }
}

impl From<RuntimeError> for Failure {
    fn from(e: RuntimeError) -> Self {
        Failure(EXIT_RUNTIME, e.to_string())
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::Io { .. } => EXIT_IO,
            PlanError::UnknownDevice(_) => EXIT_USAGE,
            PlanError::Manifest { .. } | PlanError::Parse(_) => EXIT_INVALID,
        };
        Failure(code, e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        let code = match e {
            BenchError::TooFewCycles(_) | BenchError::KeySize(_) | BenchError::Latency(_) => EXIT_USAGE,
            BenchError::NotInstrumented | BenchError::Compile(_) => EXIT_INVALID,
            BenchError::Runtime(_) | BenchError::MissingSamples { .. } => EXIT_RUNTIME,
        };
        Failure(code, e.to_string())
    }
}

fn diagnostics(d: &[Diagnostic]) -> Failure {
    Failure(
        EXIT_INVALID,
        d.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"),
    )
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_IO, format!("{}: {e}", path.display()))
}

fn load_app(path: &Path) -> Result<Application, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    Ok(parse_application(&path.display().to_string(), &text)?)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: Out = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "{msg}");
            code
        }
    }
}

fn dispatch(cmd: Command, out: Out, err: Out) -> Result<(), Failure> {
    match cmd {
        Command::Compile {
            app,
            out: dir,
            base_port,
            base_group,
            instrument,
        } => compile(&app, &dir, base_group, base_port, instrument, out, err),
        Command::Run {
            plan,
            device,
            mode,
            cycles,
            period_ms,
            latency_ms,
            seed,
            duration_ms,
            interface,
        } => match mode {
            Mode::Virtual => run_virtual(&plan, &device, cycles, period_ms, latency_ms, seed, out),
            Mode::Real => run_real(&plan, &device, period_ms, duration_ms, seed, interface, out),
        },
        Command::Bench {
            app,
            cycles,
            keysize,
            topology,
            latency_ms,
            seed,
            format,
        } => {
            let app = load_app(&app)?;
            let base = BenchOptions {
                cycles,
                latency_ms,
                seed,
                ..BenchOptions::default()
            };
            let keys: Vec<u64> = keysize.map_or(KEY_SIZES.to_vec(), |k| vec![k]);
            let tops: Vec<Topology> = topology.map_or(vec![Topology::Single, Topology::Distributed], |t| vec![t]);
            let reports = bench::run_matrix(&app, &base, &keys, &tops)?;
            match format {
                Format::Table => {
                    let _ = out.write_all(bench::render_table(&reports).as_bytes());
                }
                Format::Csv => bench::write_csv(&reports, out).map_err(|e| Failure(EXIT_IO, e.to_string()))?,
            }
            Ok(())
        }
        Command::Inspect { app } => inspect(&app, out),
    }
}

fn compile(
    app: &Path,
    dir: &Path,
    group: Ipv4Addr,
    port: u16,
    instrument: bool,
    out: Out,
    err: Out,
) -> Result<(), Failure> {
    let app = load_app(app)?;
    let base = ChannelId::new(group, port);
    if base.to_string().parse::<ChannelId>().is_err() {
        return Err(Failure(EXIT_USAGE, format!("`{base}` is not a usable multicast base")));
    }
    let opts = CompileOptions {
        base,
        instrument,
        ..CompileOptions::default()
    };
    let plan = compile_secure_links(&app, &opts).map_err(|d| diagnostics(&d))?;
    for w in &plan.warnings {
        let _ = writeln!(err, "{w}");
    }
    let written = plan::emit_plan(&plan, dir)?;
    for p in written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(())
}

fn load_all(dir: &Path) -> Result<Vec<(String, Application)>, Failure> {
    let manifest = plan::load_manifest(dir)?;
    manifest
        .devices
        .iter()
        .map(|(d, _)| Ok((d.clone(), plan::load_device(dir, d)?)))
        .collect()
}

fn summary(rt: &DeviceRuntime, app: &Application) -> String {
    let mut s = format!(
        "device {}: {} events processed, {} faults\n",
        rt.name(),
        rt.processed(),
        rt.faults().len()
    );
    for f in rt.faults() {
        let _ = writeln!(s, "  fault at {}us in {}: {}", f.time_us, f.instance, f.message);
    }
    for i in &app.root.instances {
        let Some(ty) = app.fb_type(&i.type_name) else { continue };
        let outputs: Vec<String> = ty
            .interface
            .data_outputs
            .iter()
            .filter_map(|d| {
                rt.read(&i.name, &d.name)
                    .map(|v| format!("{}={}", d.name, print::literal(v)))
            })
            .collect();
        if !outputs.is_empty() {
            let _ = writeln!(s, "  {} : {}  {}", i.name, i.type_name, outputs.join(" "));
        }
    }
    s
}

fn run_virtual(
    dir: &Path,
    device: &str,
    cycles: usize,
    period_ms: u64,
    latency_ms: f64,
    seed: u64,
    out: Out,
) -> Result<(), Failure> {
    if !latency_ms.is_finite() || latency_ms < 0.0 {
        return Err(Failure(
            EXIT_USAGE,
            format!("latency must be non-negative, got {latency_ms}"),
        ));
    }
    let devices = load_all(dir)?;
    if !devices.iter().any(|(d, _)| d == device) {
        return Err(PlanError::UnknownDevice(device.into()).into());
    }
    let stubs: Vec<String> = devices.iter().flat_map(|(_, a)| bench::stub_names(a)).collect();
    let binds = casestudy::bindings(DhGroup::modp2048(), bench::random_scenario(&stubs, cycles, seed));
    let mut sim = Simulation::new(LatencyModel::fixed_ms(latency_ms), seed);
    for (name, app) in &devices {
        sim.add_device(name, &app.root, &app.fb_types, &binds)?;
    }
    sim.cold_start_all();
    sim.run_for_ms(period_ms.max(50))?;
    let sources = bench::cycle_sources(devices.iter().map(|(d, a)| (d.as_str(), a)));
    for _ in 0..cycles {
        for (d, i) in &sources {
            sim.inject(d, i, "REQ")?;
        }
        sim.run_for_ms(period_ms.max(1))?;
    }
    let samples: Vec<_> = sim.take_samples().into_iter().filter(|(d, _)| d == device).collect();
    let app = &devices.iter().find(|(d, _)| d == device).expect("checked above").1;
    let rt = sim.device(device).expect("added above");
    let _ = write!(out, "{}", summary(rt, app));
    for (_, s) in samples {
        let _ = writeln!(
            out,
            "  link {} seq {} epoch {} latency {}ms",
            s.link,
            s.seq,
            s.epoch,
            s.latency_ms()
        );
    }
    Ok(())
}

fn run_real(
    dir: &Path,
    device: &str,
    period_ms: u64,
    duration_ms: u64,
    seed: u64,
    interface: Ipv4Addr,
    out: Out,
) -> Result<(), Failure> {
    let app = plan::load_device(dir, device)?;
    let stubs = bench::stub_names(&app);
    let cycles = (duration_ms / period_ms.max(1)) as usize + 1;
    let binds = casestudy::bindings(DhGroup::modp2048(), bench::random_scenario(&stubs, cycles, seed));
    let mut rt = DeviceRuntime::new(
        device,
        &app.root,
        &app.fb_types,
        &binds,
        Box::new(SystemClock::new()),
        Box::new(UdpTransport::new(interface)),
        Box::new(OsEntropy),
    )?;
    rt.cold_start();
    let sources = bench::cycle_sources([(device, &app)]);
    let start = Instant::now();
    let end = start + Duration::from_millis(duration_ms);
    let mut next = start + Duration::from_millis(period_ms.max(50));
    while Instant::now() < end {
        if Instant::now() >= next {
            for (_, i) in &sources {
                rt.inject(i, "REQ")?;
            }
            next += Duration::from_millis(period_ms.max(1));
        }
        rt.run_until_idle(1_000_000)?;
        std::thread::sleep(Duration::from_millis(1));
    }
    let samples = rt.take_samples();
    let _ = write!(out, "{}", summary(&rt, &app));
    for s in samples {
        let _ = writeln!(
            out,
            "  link {} seq {} epoch {} latency {}ms",
            s.link,
            s.seq,
            s.epoch,
            s.latency_ms()
        );
    }
    Ok(())
}

fn channel_table(plan: &DeploymentPlan) -> String {
    let mut s = String::from("channel table\n");
    for l in &plan.links {
        let _ = writeln!(
            s,
            "  link {} {} -> {}  data={} ke={} ts={}  {}/{} -> {}/{}{}",
            l.link_id,
            l.conn.source,
            l.conn.target,
            l.channels.data,
            l.channels.ke,
            l.channels.ts,
            l.sender_device,
            l.sender,
            l.receiver_device,
            l.receiver,
            match (l.encrypted, l.shared) {
                (false, _) => " plain",
                (true, true) => " shared",
                (true, false) => "",
            }
        );
    }
    s
}

fn inspect(path: &Path, out: Out) -> Result<(), Failure> {
    let app = load_app(path)?;
    let mut s = format!(
        "network: {} instances, {} event connections, {} data connections\n",
        app.root.instances.len(),
        app.root.event_conns.len(),
        app.root.data_conns.len()
    );
    for i in &app.root.instances {
        let dev = app.device_of(&i.name).map(|d| format!(" @ {d}")).unwrap_or_default();
        let _ = writeln!(s, "  instance {} : {}{dev}", i.name, i.type_name);
    }
    let n = app.secure_links.len();
    let _ = writeln!(s, "{n} secure link{}", if n == 1 { "" } else { "s" });
    for l in &app.secure_links {
        let _ = writeln!(s, "  {} {}", l.d_con, print::annotation(l));
    }
    if !app.devices.is_empty() {
        let plan = compile_secure_links(&app, &CompileOptions::default()).map_err(|d| diagnostics(&d))?;
        s.push_str(&channel_table(&plan));
        for w in &plan.warnings {
            let _ = writeln!(s, "{w}");
        }
    }
    let _ = out.write_all(s.as_bytes());
    Ok(())
}
