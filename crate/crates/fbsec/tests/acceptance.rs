//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fbsec::bench::{bench_application, render_table, run_matrix, BenchOptions, Topology, UNENCRYPTED_LABEL};
use fbsec::casestudy::{bindings, build_case_study};
use fbsec::fbs::{parse_application, serialize_application, ParseErrorKind};
use fbsec::plan::{emit_plan, render_manifest};
use fbsec_core::cl4fb::blocks::{is_receiver_type, CL_RECV, CL_SENDER};
use fbsec_core::cl4fb::{compile_secure_links, CompileOptions, DeploymentPlan};
use fbsec_core::crypto::{
    aes_decrypt_block, aes_encrypt_block, aes_key_expansion, derive_session_key, dh_keypair, dh_public,
    dh_shared_secret, DhGroup, KeyContext, KeySize, SeededEntropy,
};
use fbsec_core::grid::{
    ProtectionFunction, Scenario, CURRENT_STUB, DIFFERENTIAL, EARTH_FAULT, OVERCURRENT, TRIP_LATCH,
};
use fbsec_core::model::{Application, Connection, FbNetwork, ParamValue, PortRef, SecureLink, SecurityGoal, Value};
use fbsec_core::runtime::services::DEFAULT_KE_RETRY_MS;
use fbsec_core::runtime::{DeviceRuntime, Simulation, VirtualClock};
use fbsec_core::transport::{LatencyModel, NullTransport};
use fbsec_core::wire::{decode_frame, encode_frame, MsgType, WireFrame};

// Pinned budgets and tolerances.
const AES_KAT_BUDGET: Duration = Duration::from_secs(1);
const AES_ROUND_TRIPS: usize = 10_000;
const AES_ROUND_TRIP_BUDGET: Duration = Duration::from_secs(5);
const DH_EXCHANGES: usize = 100;
const DH_BUDGET: Duration = Duration::from_secs(10);
const PRESERVATION_APPS: usize = 50;
const PRESERVATION_BUDGET: Duration = Duration::from_secs(60);
const REKEY_MS: u64 = 50;
const TRAFFIC_MS: u64 = 500;
const TRAFFIC_PERIOD_MS: u64 = 10;
const MIN_EPOCHS: usize = 9;
// Key exchange finishes within one retransmit after cold start.
const WARMUP_MS: u64 = 2 * DEFAULT_KE_RETRY_MS + 10;
const BENCH_CYCLES: usize = 100;
const DEADLINE_LATENCY_MS: f64 = 3.0;
const WIRE_FRAMES: usize = 10_000;
const MIN_CRAFTED_FILES: usize = 10;

fn hex(s: &str) -> Vec<u8> {
    hex::decode(s).unwrap()
}

fn block(s: &str) -> [u8; 16] {
    hex(s).try_into().unwrap()
}

fn within(start: Instant, budget: Duration, what: &str) {
    let took = start.elapsed();
    assert!(took < budget, "{what} took {took:?}, budget {budget:?}");
}

// 1. Published AES known-answer vectors (FIPS-197 appendices and
//    SP 800-38A ECB), each checked in both directions.
fn aes_known_answers() {
    let start = Instant::now();
    let vectors = [
        (
            "000102030405060708090a0b0c0d0e0f",
            "00112233445566778899aabbccddeeff",
            "69c4e0d86a7b0430d8cdb78070b4c55a",
        ),
        (
            "000102030405060708090a0b0c0d0e0f1011121314151617",
            "00112233445566778899aabbccddeeff",
            "dda97ca4864cdfe06eaf70a0ec0d7191",
        ),
        (
            "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f",
            "00112233445566778899aabbccddeeff",
            "8ea2b7ca516745bfeafc49904b496089",
        ),
        (
            "2b7e151628aed2a6abf7158809cf4f3c",
            "3243f6a8885a308d313198a2e0370734",
            "3925841d02dc09fbdc118597196a0b32",
        ),
        (
            "2b7e151628aed2a6abf7158809cf4f3c",
            "6bc1bee22e409f96e93d7e117393172a",
            "3ad77bb40d7a3660a89ecaf32466ef97",
        ),
        (
            "8e73b0f7da0e6452c810f32b809079e562f8ead2522c6b7b",
            "6bc1bee22e409f96e93d7e117393172a",
            "bd334f1d6e45f25ff712a214571fa5cc",
        ),
        (
            "603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4",
            "6bc1bee22e409f96e93d7e117393172a",
            "f3eed1bdb5d2a03c064b5a7e3db181f8",
        ),
    ];
    let mut sizes = BTreeSet::new();
    for (key, pt, ct) in vectors {
        let key = hex(key);
        let ksize = KeySize::from_bits(key.len() as u64 * 8).unwrap();
        sizes.insert(ksize.bits());
        let sched = aes_key_expansion(&key, ksize).unwrap();
        assert_eq!(aes_encrypt_block(&block(pt), &sched), block(ct), "encrypt {ct}");
        assert_eq!(aes_decrypt_block(&block(ct), &sched), block(pt), "decrypt {ct}");
    }
    assert_eq!(sizes, BTreeSet::from([128, 192, 256]));
    within(start, AES_KAT_BUDGET, "known answers");
}

// 2. Random round trips.
fn aes_round_trips() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for bits in [128u64, 192, 256] {
        let ksize = KeySize::from_bits(bits).unwrap();
        let mut key = vec![0u8; ksize.key_len()];
        for _ in 0..AES_ROUND_TRIPS {
            rng.fill_bytes(&mut key);
            let mut pt = [0u8; 16];
            rng.fill_bytes(&mut pt);
            let sched = aes_key_expansion(&key, ksize).unwrap();
            let ct = aes_encrypt_block(&pt, &sched);
            assert_eq!(aes_decrypt_block(&ct, &sched), pt);
        }
    }
    within(start, AES_ROUND_TRIP_BUDGET, "round trips");
}

// 3. Diffie-Hellman: toy worked example against repeated multiplication,
//    then random exchanges over the 2048-bit MODP group.
fn diffie_hellman() {
    let slow = |g: u64, e: u64, p: u64| (0..e).fold(1u64, |acc, _| acc * g % p);
    let oracle = slow(slow(5, 6, 23), 15, 23);
    assert_eq!(oracle, slow(slow(5, 15, 23), 6, 23));
    assert_eq!(oracle, 2);
    let toy = DhGroup::toy();
    let (a, b) = (BigUint::from(6u8), BigUint::from(15u8));
    let (pa, pb) = (dh_public(&toy, &a), dh_public(&toy, &b));
    assert_eq!(pa, BigUint::from(slow(5, 6, 23)));
    assert_eq!(dh_shared_secret(&a, &pb, &toy).unwrap(), BigUint::from(oracle));
    assert_eq!(dh_shared_secret(&b, &pa, &toy).unwrap(), BigUint::from(oracle));

    let start = Instant::now();
    let group = DhGroup::modp2048();
    let mut rng = SeededEntropy::from_seed(3);
    for i in 0..DH_EXCHANGES {
        let x = dh_keypair(&group, &mut rng).unwrap();
        let y = dh_keypair(&group, &mut rng).unwrap();
        let sx = dh_shared_secret(&x.private, &y.public, &group).unwrap();
        let sy = dh_shared_secret(&y.private, &x.public, &group).unwrap();
        assert_eq!(sx, sy);
        let ctx = KeyContext {
            link_id: i as u32,
            epoch: 0,
        };
        let ksize = KeySize::from_bits([128, 192, 256][i % 3]).unwrap();
        assert_eq!(
            derive_session_key(&sx, ksize, ctx, 0),
            derive_session_key(&sy, ksize, ctx, 0)
        );
    }
    within(start, DH_BUDGET, "modp2048 exchanges");
}

fn param<'a>(plan: &'a DeploymentPlan, dev: &str, target: &str) -> Option<&'a Value> {
    plan.device(dev)?
        .app
        .root
        .params
        .iter()
        .find(|p| p.target == PortRef::parse(target))
        .map(|p| &p.value)
}

// 4. Compiler golden test on the case study.
fn compiler_golden() {
    let app = build_case_study();
    let plan = compile_secure_links(&app, &CompileOptions::default()).unwrap();
    assert_eq!(plan.instances_where(|t| t == CL_SENDER).len(), 3);
    assert_eq!(
        plan.instances_where(|t| is_receiver_type(t) && t.starts_with(CL_RECV))
            .len(),
        2
    );
    let link = |src: &str| plan.links.iter().find(|l| l.conn.source.to_string() == src).unwrap();
    let (diff, ef, oc) = (link("diff.TRIP"), link("ef.TRIP"), link("oc.TRIP"));
    assert_eq!(diff.channels.data, ef.channels.data, "128-bit links share a channel");
    assert_eq!(diff.receiver, ef.receiver);
    assert_ne!(oc.channels.data, diff.channels.data);
    for l in [diff, ef, oc] {
        let want = app.secure_link_for(&l.conn).unwrap();
        let ksize = want.keysize().unwrap();
        let rekey = want.rekey_ms().unwrap();
        assert_eq!(
            param(&plan, &l.sender_device, &format!("{}.KSIZE", l.sender)),
            Some(&Value::Uint(ksize))
        );
        assert_eq!(
            param(&plan, &l.sender_device, &format!("{}.REKEY", l.sender)),
            Some(&Value::Uint(rekey))
        );
        let recv = format!("{}.KSIZE_{}", l.receiver, l.slot);
        assert_eq!(param(&plan, &l.receiver_device, &recv), Some(&Value::Uint(ksize)));
    }
    assert_eq!((diff.keysize, oc.keysize, oc.rekey_ms), (128, 256, 60_000));

    let docs = |p: &DeploymentPlan| {
        let mut v: Vec<String> = p.devices.iter().map(|d| serialize_application(&d.app)).collect();
        v.push(render_manifest(p));
        v
    };
    let again = compile_secure_links(&app, &CompileOptions::default()).unwrap();
    assert_eq!(docs(&plan), docs(&again));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit_plan(&plan, a.path()).unwrap();
    let fb = emit_plan(&again, b.path()).unwrap();
    assert_eq!(fa.len(), 5);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

/// Stub(s) -> relay on the sending device, latch on the receiving one,
/// with the relay's TRIP annotated.
struct RandomApp {
    app: Application,
    stubs: Vec<String>,
    table: BTreeMap<String, Vec<f64>>,
    cycles: usize,
}

fn random_app(rng: &mut ChaCha8Rng) -> RandomApp {
    let relay_ty = [OVERCURRENT, DIFFERENTIAL, EARTH_FAULT][rng.random_range(0..3)];
    let names = ["SUB", "IED", "RTU", "GW", "BRK", "PMU"];
    let a = names[rng.random_range(0..names.len())];
    let b = loop {
        let b = names[rng.random_range(0..names.len())];
        if b != a {
            break b;
        }
    };
    let stubs: Vec<String> = if relay_ty == DIFFERENTIAL {
        vec!["s1".into(), "s2".into()]
    } else {
        vec!["s1".into()]
    };
    let mut root = FbNetwork::new().instance("r", relay_ty).instance("l", TRIP_LATCH);
    for s in &stubs {
        root = root.instance(s, CURRENT_STUB);
    }
    if relay_ty == DIFFERENTIAL {
        root = root
            .event("s1.CNF", "s2.REQ")
            .event("s2.CNF", "r.REQ")
            .data("s1.I", "r.I1")
            .data("s2.I", "r.I2");
    } else {
        root = root.event("s1.CNF", "r.REQ").data("s1.I", "r.I");
    }
    let threshold: f64 = rng.random_range(0.5..200.0);
    root = root
        .event("r.CNF", "l.REQ")
        .data("r.TRIP", "l.TRIP")
        .param("r.THRESHOLD", Value::Lreal(threshold));
    let link = SecureLink::new(
        Connection::new(PortRef::new("r", "TRIP"), PortRef::new("l", "TRIP")),
        SecurityGoal::Confidentiality,
        "AES",
    )
    .with_param("keysize", ParamValue::Int([128, 192, 256][rng.random_range(0..3)]))
    .with_param("rekey", ParamValue::DurationMs(rng.random_range(20..2000)));
    let mut mapping = BTreeMap::new();
    for i in &root.instances {
        mapping.insert(i.name.clone(), if i.name == "l" { b } else { a }.to_string());
    }
    let lib = fbsec::fbs::resolve::prelude();
    let used: BTreeSet<&str> = root.instances.iter().map(|i| i.type_name.as_str()).collect();
    let cycles = rng.random_range(5..40);
    let mut table = BTreeMap::new();
    for s in &stubs {
        let v: Vec<f64> = (0..cycles).map(|_| rng.random_range(0.0..2.0 * threshold)).collect();
        table.insert(s.clone(), v);
    }
    RandomApp {
        app: Application {
            fb_types: lib.into_iter().filter(|t| used.contains(t.name.as_str())).collect(),
            root,
            devices: vec![a.into(), b.into()],
            mapping,
            secure_links: vec![link],
        },
        stubs,
        table,
        cycles,
    }
}

fn scenario(table: &BTreeMap<String, Vec<f64>>) -> Scenario {
    let t = table.clone();
    Arc::new(move |inst: &str, n| t[inst][n as usize])
}

fn latch_inputs(rt: &DeviceRuntime) -> Vec<Value> {
    rt.trace()
        .iter()
        .filter(|t| t.instance == "l" && t.event == "REQ")
        .map(|t| t.values.iter().find(|(n, _)| n == "TRIP").unwrap().1.clone())
        .collect()
}

// 5. Lowering preserves the delivered value sequence.
fn semantic_preservation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..PRESERVATION_APPS {
        let r = random_app(&mut rng);
        let binds = bindings(DhGroup::modp2048(), scenario(&r.table));

        let mut reference = DeviceRuntime::new(
            "ALL",
            &r.app.root,
            &r.app.fb_types,
            &binds,
            Box::new(VirtualClock::new()),
            Box::new(NullTransport),
            Box::new(SeededEntropy::from_seed(case as u64)),
        )
        .unwrap();
        reference.enable_trace();
        for _ in 0..r.cycles {
            reference.inject("s1", "REQ").unwrap();
            reference.run_until_idle(100_000).unwrap();
        }
        let expected = latch_inputs(&reference);
        assert_eq!(expected.len(), r.cycles);

        let plan = compile_secure_links(&r.app, &CompileOptions::default()).unwrap();
        assert_eq!(plan.links.len(), 1);
        let mut sim = Simulation::new(LatencyModel::zero(), case as u64);
        for d in &plan.devices {
            sim.add_device(&d.name, &d.app.root, &d.app.fb_types, &binds).unwrap();
            sim.device_mut(&d.name).unwrap().enable_trace();
        }
        sim.cold_start_all();
        sim.run_for_ms(WARMUP_MS).unwrap();
        let (src, dst) = (&r.app.mapping["s1"], &r.app.mapping["l"]);
        for _ in 0..r.cycles {
            sim.inject(src, "s1", "REQ").unwrap();
            sim.run_for_ms(10).unwrap();
        }
        assert_eq!(
            latch_inputs(sim.device(dst).unwrap()),
            expected,
            "case {case} ({:?})",
            r.stubs
        );
    }
    within(start, PRESERVATION_BUDGET, "preservation");
}

// 6. Rekeying every 50 ms under 10 ms traffic.
fn rekey_run(seed: u64) -> (Vec<Value>, Vec<u8>, Value, Vec<Value>) {
    let mut app = build_case_study();
    for l in &mut app.secure_links {
        l.params.insert("rekey".into(), ParamValue::DurationMs(REKEY_MS));
    }
    let opts = CompileOptions {
        instrument: true,
        ..CompileOptions::default()
    };
    let plan = compile_secure_links(&app, &opts).unwrap();
    let oc = plan.links.iter().find(|l| l.conn.source.fb == "oc").unwrap().clone();
    let frames = (TRAFFIC_MS / TRAFFIC_PERIOD_MS) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table: BTreeMap<String, Vec<f64>> = ["ia", "ib", "ir", "il"]
        .iter()
        .map(|s| {
            (
                s.to_string(),
                (0..frames).map(|_| rng.random_range(0.0..200.0)).collect(),
            )
        })
        .collect();
    let binds = bindings(DhGroup::modp2048(), scenario(&table));
    let mut sim = Simulation::new(LatencyModel::fixed_ms(1.0), seed);
    for d in &plan.devices {
        sim.add_device(&d.name, &d.app.root, &d.app.fb_types, &binds).unwrap();
        sim.device_mut(&d.name).unwrap().enable_trace();
    }
    sim.cold_start_all();
    sim.run_for_ms(WARMUP_MS).unwrap();
    sim.take_samples();
    for _ in 0..frames {
        for (d, i) in [("IED1", "ia"), ("IED2", "ir"), ("IED3", "il")] {
            sim.inject(d, i, "REQ").unwrap();
        }
        sim.run_for_ms(TRAFFIC_PERIOD_MS).unwrap();
    }
    let epochs: Vec<u8> = sim
        .take_samples()
        .into_iter()
        .filter(|(_, s)| s.link == oc.link_id)
        .map(|(_, s)| s.epoch)
        .collect();
    let brk = sim.device("BRK").unwrap();
    let received: Vec<Value> = brk
        .trace()
        .iter()
        .filter(|t| t.instance == "brk_oc" && t.event == "REQ")
        .map(|t| t.values[0].1.clone())
        .collect();
    let expected: Vec<Value> = table["il"].iter().map(|&i| Value::Bool(i > 100.0)).collect();
    let dropped = brk
        .read(&format!("{}.dec_{}", oc.receiver, oc.slot), "DROPPED")
        .unwrap()
        .clone();
    (received, epochs, dropped, expected)
}

fn rekey_continuity() {
    let (received, epochs, dropped, expected) = rekey_run(6);
    assert_eq!(received, expected, "every frame decrypted to the sent value");
    assert_eq!(dropped, Value::Uint(0), "undecryptable frames");
    assert_eq!(epochs.len(), (TRAFFIC_MS / TRAFFIC_PERIOD_MS) as usize);
    let distinct: BTreeSet<u8> = epochs.iter().copied().collect();
    assert!(distinct.len() >= MIN_EPOCHS, "epochs seen: {distinct:?}");
    assert!(epochs.windows(2).all(|w| w[0] <= w[1]), "epochs never go back");
    assert_eq!(
        rekey_run(6),
        (received, epochs, dropped, expected),
        "fixed seed reproduces the run"
    );
}

// 7. Measurement method on the case study.
fn measurement_method() {
    let app = build_case_study();
    let base = BenchOptions {
        cycles: BENCH_CYCLES,
        ..BenchOptions::default()
    };
    let tops = [Topology::Single, Topology::Distributed];
    let reports = run_matrix(&app, &base, &[128, 192, 256], &tops).unwrap();
    print!("{}", indent(&render_table(&reports)));
    let rows: Vec<(String, Topology)> = reports.iter().map(|r| (r.label.clone(), r.topology)).collect();
    let mut want = vec![(UNENCRYPTED_LABEL.to_string(), Topology::Distributed)];
    for k in [128, 192, 256] {
        for t in tops {
            want.push((format!("AES{k}"), t));
        }
    }
    assert_eq!(rows, want);
    for t in tops {
        let plain = bench_application(
            &app,
            &BenchOptions {
                encrypt: false,
                topology: t,
                ..base.clone()
            },
        )
        .unwrap();
        for r in reports.iter().filter(|r| r.topology == t) {
            assert!(
                r.mean_ms >= plain.mean_ms,
                "{} {t}: {} < {}",
                r.label,
                r.mean_ms,
                plain.mean_ms
            );
        }
    }
    for r in &reports {
        assert_eq!(r.cycles, BENCH_CYCLES);
        assert!(
            r.min_ms as f64 <= r.mean_ms && r.mean_ms <= r.max_ms as f64,
            "{}",
            r.label
        );
    }
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("      {l}\n")).collect()
}

// 8. Deadline verdicts.
fn deadline_verdicts() {
    let app = build_case_study();
    let run = |lat: f64| {
        bench_application(
            &app,
            &BenchOptions {
                cycles: BENCH_CYCLES,
                latency_ms: lat,
                ..BenchOptions::default()
            },
        )
        .unwrap()
    };
    let r = run(DEADLINE_LATENCY_MS);
    for f in [ProtectionFunction::Differential, ProtectionFunction::Overcurrent] {
        let d = r.deadline(f).unwrap();
        assert_eq!(d.pass + d.fail, BENCH_CYCLES, "{f}");
        let oracle = r
            .samples
            .iter()
            .filter(|s| {
                s.link.starts_with(if f == ProtectionFunction::Differential {
                    "diff."
                } else {
                    "oc."
                })
            })
            .filter(|s| s.sample.latency_ms() <= d.deadline_ms)
            .count();
        assert_eq!(d.pass, oracle, "{f}");
    }
    let z = run(0.0);
    assert!(
        z.deadlines.iter().all(|d| d.pass == BENCH_CYCLES && d.fail == 0),
        "{:?}",
        z.deadlines
    );
}

// 9. Wire format.
fn wire_format() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..WIRE_FRAMES {
        let msg_type = MsgType::ALL[rng.random_range(0..4)];
        let len = match msg_type {
            MsgType::Data => 16 * rng.random_range(0..5),
            MsgType::Ts => 8,
            _ => rng.random_range(0..600),
        };
        let mut payload = vec![0u8; len];
        rng.fill_bytes(&mut payload);
        let f = WireFrame::new(
            msg_type,
            rng.random(),
            rng.random(),
            rng.random(),
            rng.random(),
            payload,
        );
        let bytes = encode_frame(&f).unwrap();
        assert_eq!(bytes.len(), f.encoded_len());
        assert_eq!(decode_frame(&bytes).unwrap(), f);
    }
    let golden: [u8; 33] = [
        0xFB, 0x5E, // magic
        0x01, // version
        0x01, // DATA
        0x00, 0x00, 0x00, 0x02, // link 2
        0x00, 0x03, // sender 3
        0x04, // epoch
        0x00, 0x00, 0x01, 0x00, // seq 256
        0x00, 0x10, // 16 payload bytes
        0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xAA, 0xBB, 0xCC, 0xDD, 0xEE, 0xFF,
    ];
    let f = WireFrame::new(MsgType::Data, 2, 3, 4, 256, hex("00112233445566778899aabbccddeeff"));
    assert_eq!(encode_frame(&f).unwrap(), golden);
    assert_eq!(decode_frame(&golden).unwrap(), f);
}

fn corpus(dir: &str) -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(dir);
    let mut v: Vec<PathBuf> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

// 10. Parser corpus and annotation arguments.
fn parser_corpus() {
    let valid = corpus("valid");
    let invalid = corpus("invalid");
    assert!(valid.len() - 1 + invalid.len() >= MIN_CRAFTED_FILES);
    assert!(valid.iter().any(|p| p.ends_with("casestudy.fbs")));
    for p in &valid {
        let text = std::fs::read_to_string(p).unwrap();
        let app = parse_application(&p.display().to_string(), &text).unwrap();
        let printed = serialize_application(&app);
        let again = parse_application("printed.fbs", &printed).unwrap();
        assert_eq!(again, app, "{}", p.display());
        assert_eq!(serialize_application(&again), printed);
    }
    let mut kinds = BTreeSet::new();
    for p in &invalid {
        let text = std::fs::read_to_string(p).unwrap();
        let want = text.lines().next().unwrap().strip_prefix("// expect: ").unwrap();
        let d = &parse_application("f", &text).unwrap_err()[0];
        assert_eq!(
            format!("{} {}:{}", d.kind.as_str(), d.span.line, d.span.col),
            want,
            "{}",
            p.display()
        );
        kinds.insert(d.kind);
    }
    assert_eq!(kinds, ParseErrorKind::ALL.into_iter().collect::<BTreeSet<_>>());

    let app = build_case_study();
    let oc = app.secure_links.iter().find(|l| l.d_con.source.fb == "oc").unwrap();
    assert_eq!((oc.goal, oc.alg.as_str()), (SecurityGoal::Confidentiality, "AES"));
    assert_eq!(oc.params.len(), 2);
    assert_eq!(oc.params["keysize"], ParamValue::Int(256));
    assert_eq!(oc.params["rekey"], ParamValue::DurationMs(60_000));
    let diff = app.secure_links.iter().find(|l| l.d_con.source.fb == "diff").unwrap();
    assert_eq!(diff.params["channel"], ParamValue::Text("grp1".into()));
    let text = "app {\n  instance r : Overcurrent\n  instance l : TripLatch\n  event r.CNF -> l.REQ\n  data r.TRIP -> l.TRIP @secure(I, HMAC, rekey=250ms, tag=\"sha 256\", n=3)\n}\n";
    let l = &parse_application("v.fbs", text).unwrap().secure_links[0];
    assert_eq!((l.goal, l.alg.as_str()), (SecurityGoal::Integrity, "HMAC"));
    assert_eq!(l.params["rekey"], ParamValue::DurationMs(250));
    assert_eq!(l.params["tag"], ParamValue::Text("sha 256".into()));
    assert_eq!(l.params["n"], ParamValue::Int(3));
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        ("AES known-answer vectors, 3 key sizes", aes_known_answers),
        ("AES random round trips", aes_round_trips),
        ("Diffie-Hellman toy example and modp2048 exchanges", diffie_hellman),
        ("compiler golden test on the case study", compiler_golden),
        ("semantic preservation over random 2-device apps", semantic_preservation),
        ("rekey continuity", rekey_continuity),
        ("latency measurement method", measurement_method),
        ("deadline verdicts", deadline_verdicts),
        ("wire format", wire_format),
        ("parser corpus and @secure arguments", parser_corpus),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f));
        let took = start.elapsed();
        match outcome {
            Ok(()) => println!("[PASS] {:>2} {name} ({took:.2?})", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("[FAIL] {:>2} {name} ({took:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
