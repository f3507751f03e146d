use std::collections::BTreeMap;
use std::sync::Arc;

use fbsec::bench::{cycle_sources, prepare, BenchOptions, Topology};
use fbsec::casestudy::{bindings, build_case_study, protection_of};
use fbsec_core::cl4fb::blocks::{is_receiver_type, CL_RECV, CL_SENDER};
use fbsec_core::cl4fb::{compile_secure_links, CompileOptions, DeploymentPlan};
use fbsec_core::crypto::DhGroup;
use fbsec_core::grid::{ProtectionFunction, Scenario};
use fbsec_core::model::{PortRef, Value};
use fbsec_core::runtime::Simulation;
use fbsec_core::transport::LatencyModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn param<'a>(plan: &'a DeploymentPlan, dev: &str, target: &str) -> Option<&'a Value> {
    plan.device(dev)?
        .app
        .root
        .params
        .iter()
        .find(|p| p.target == PortRef::parse(target))
        .map(|p| &p.value)
}

#[test]
fn compiles_to_three_senders_and_two_receivers() {
    let plan = compile_secure_links(&build_case_study(), &CompileOptions::default()).unwrap();
    assert_eq!(plan.instances_where(|t| t == CL_SENDER).len(), 3);
    let recv = plan.instances_where(|t| is_receiver_type(t) && t.starts_with(CL_RECV));
    assert_eq!(recv.len(), 2);
    assert!(recv.iter().all(|(d, _)| *d == "BRK"));
    let diff = &plan.links[0];
    let ef = &plan.links[1];
    let oc = &plan.links[2];
    assert_eq!(diff.channels.data, ef.channels.data);
    assert_ne!(diff.channels.data, oc.channels.data);
    assert_eq!((diff.keysize, ef.keysize, oc.keysize), (128, 128, 256));

    for (dev, inst, k) in [
        ("IED1", "CLSender", 128),
        ("IED2", "CLSender_1", 128),
        ("IED3", "CLSender_2", 256),
    ] {
        assert_eq!(
            param(&plan, dev, &format!("{inst}.KSIZE")),
            Some(&Value::Uint(k)),
            "{inst}"
        );
        assert_eq!(
            param(&plan, dev, &format!("{inst}.REKEY")),
            Some(&Value::Uint(60_000)),
            "{inst}"
        );
    }
    assert_eq!(param(&plan, "BRK", "CLRecv.KSIZE_1"), Some(&Value::Uint(128)));
    assert_eq!(param(&plan, "BRK", "CLRecv.KSIZE_2"), Some(&Value::Uint(128)));
    assert_eq!(param(&plan, "BRK", "CLRecv_1.KSIZE_1"), Some(&Value::Uint(256)));
}

#[test]
fn protection_functions_of_instances() {
    let app = build_case_study();
    assert_eq!(
        protection_of(&app, "diff").unwrap().function,
        ProtectionFunction::Differential
    );
    assert_eq!(protection_of(&app, "ef").unwrap().deadline_ms, 5);
    assert_eq!(protection_of(&app, "oc").unwrap().deadline_ms, 600);
    assert!(protection_of(&app, "ia").is_none());
    assert!(protection_of(&app, "missing").is_none());
}

/// Fixed currents per stub; unknown stubs read zero.
fn currents(map: &[(&str, f64)]) -> Scenario {
    let m: BTreeMap<String, f64> = map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Arc::new(move |inst: &str, _| m.get(inst).copied().unwrap_or(0.0))
}

fn simulate(plan: &DeploymentPlan, scenario: Scenario, cycles: usize) -> Simulation {
    let binds = bindings(DhGroup::modp2048(), scenario);
    let mut sim = Simulation::new(LatencyModel::fixed_ms(1.0), 11);
    for d in &plan.devices {
        sim.add_device(&d.name, &d.app.root, &d.app.fb_types, &binds).unwrap();
        sim.device_mut(&d.name).unwrap().enable_trace();
    }
    sim.cold_start_all();
    sim.run_for_ms(100).unwrap();
    let sources = cycle_sources(plan.devices.iter().map(|d| (d.name.as_str(), &d.app)));
    assert_eq!(sources.len(), 3, "ia, ir and il start each cycle");
    for _ in 0..cycles {
        for (d, i) in &sources {
            sim.inject(d, i, "REQ").unwrap();
        }
        sim.run_for_ms(20).unwrap();
    }
    sim
}

fn received(sim: &Simulation, latch: &str) -> Vec<bool> {
    sim.device("BRK")
        .unwrap()
        .trace()
        .iter()
        .filter(|t| t.instance == latch && t.event == "REQ")
        .map(|t| t.values.iter().find(|(n, _)| n == "TRIP").unwrap().1.as_bool().unwrap())
        .collect()
}

fn plan() -> DeploymentPlan {
    compile_secure_links(&build_case_study(), &CompileOptions::default()).unwrap()
}

#[test]
fn differential_fault_opens_the_breaker() {
    let sim = simulate(&plan(), currents(&[("ia", 10.0), ("ib", 8.0)]), 1);
    let brk = sim.device("BRK").unwrap();
    assert_eq!(brk.read("brk_diff", "OPEN"), Some(&Value::Bool(true)));
    assert_eq!(brk.read("brk_ef", "OPEN"), Some(&Value::Bool(false)));
    assert_eq!(brk.read("brk_oc", "OPEN"), Some(&Value::Bool(false)));
}

#[test]
fn threshold_is_strict_end_to_end() {
    let sim = simulate(
        &plan(),
        currents(&[("ia", 10.0), ("ib", 9.0), ("il", 100.0), ("ir", 1.0)]),
        1,
    );
    for latch in ["brk_diff", "brk_ef", "brk_oc"] {
        assert_eq!(received(&sim, latch), vec![false], "{latch}");
    }
}

#[test]
fn quiescent_grid_never_trips() {
    let sim = simulate(
        &plan(),
        currents(&[("ia", 10.0), ("ib", 10.0), ("il", 50.0), ("ir", 0.2)]),
        100,
    );
    for latch in ["brk_diff", "brk_ef", "brk_oc"] {
        let r = received(&sim, latch);
        assert_eq!(r.len(), 100, "{latch}");
        assert!(r.iter().all(|t| !t), "{latch}");
    }
}

/// Per-cycle currents; the oracle below recomputes the trip decisions
/// with plain comparisons.
fn random_table(seed: u64, cycles: usize) -> BTreeMap<&'static str, Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for _ in 0..cycles {
        let ia = rng.random_range(5.0..15.0);
        let fault = rng.random_bool(0.5);
        let ib = if fault {
            ia - rng.random_range(1.01..5.0)
        } else {
            ia - rng.random_range(-0.99..0.99)
        };
        t.entry("ia").or_default().push(ia);
        t.entry("ib").or_default().push(ib);
        t.entry("ir")
            .or_default()
            .push(if rng.random_bool(0.5) { 3.0 } else { 0.5 });
        t.entry("il")
            .or_default()
            .push(if rng.random_bool(0.5) { 250.0 } else { 20.0 });
    }
    t
}

#[test]
fn breaker_sees_every_trip_decision_for_every_key_size() {
    const CYCLES: usize = 1000;
    let app = build_case_study();
    for (i, k) in [128u64, 192, 256].into_iter().enumerate() {
        let table = random_table(i as u64, CYCLES);
        let expected_diff: Vec<bool> = (0..CYCLES)
            .map(|n| (table["ia"][n] - table["ib"][n]).abs() > 1.0)
            .collect();
        let expected_ef: Vec<bool> = table["ir"].iter().map(|&i| i > 1.0).collect();
        let expected_oc: Vec<bool> = table["il"].iter().map(|&i| i > 100.0).collect();
        assert!(expected_diff.iter().any(|t| *t) && expected_diff.iter().any(|t| !t));

        let t2 = table.clone();
        let scenario: Scenario = Arc::new(move |inst: &str, n| t2[inst][n as usize]);
        let opts = BenchOptions {
            keysize: Some(k),
            topology: Topology::Distributed,
            ..BenchOptions::default()
        };
        let plan = prepare(&app, &opts).unwrap();
        let sim = simulate(&plan, scenario, CYCLES);
        assert_eq!(received(&sim, "brk_diff"), expected_diff, "AES{k}");
        assert_eq!(received(&sim, "brk_ef"), expected_ef, "AES{k}");
        assert_eq!(received(&sim, "brk_oc"), expected_oc, "AES{k}");
    }
}
