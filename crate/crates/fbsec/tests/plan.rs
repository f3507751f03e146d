use std::fs;

use fbsec::casestudy::build_case_study;
use fbsec::fbs::serialize_application;
use fbsec::plan::{emit_plan, load_device, load_manifest, parse_manifest, render_manifest, PlanError, MANIFEST};
use fbsec_core::cl4fb::{compile_secure_links, CompileOptions, DeploymentPlan};

fn plan() -> DeploymentPlan {
    compile_secure_links(&build_case_study(), &CompileOptions::default()).unwrap()
}

#[test]
fn writes_one_document_per_device_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let written = emit_plan(&plan(), dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["IED1.fbs", "IED2.fbs", "IED3.fbs", "BRK.fbs", MANIFEST]);
}

#[test]
fn emission_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit_plan(&plan(), a.path()).unwrap();
    let fb = emit_plan(&plan(), b.path()).unwrap();
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn device_documents_load_back_unchanged() {
    for instrument in [false, true] {
        let opts = CompileOptions {
            instrument,
            ..CompileOptions::default()
        };
        let p = compile_secure_links(&build_case_study(), &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_plan(&p, dir.path()).unwrap();
        for d in &p.devices {
            let loaded = load_device(dir.path(), &d.name).unwrap();
            assert_eq!(loaded, d.app, "{}", d.name);
            let on_disk = fs::read_to_string(dir.path().join(format!("{}.fbs", d.name))).unwrap();
            assert_eq!(serialize_application(&loaded), on_disk);
        }
        assert!(matches!(
            load_device(dir.path(), "NOPE"),
            Err(PlanError::UnknownDevice(_))
        ));
    }
}

#[test]
fn manifest_matches_the_plan() {
    let p = plan();
    let dir = tempfile::tempdir().unwrap();
    emit_plan(&p, dir.path()).unwrap();
    let m = load_manifest(dir.path()).unwrap();
    assert_eq!(m.devices.len(), 4);
    assert_eq!(m.links.len(), p.links.len());
    for (ml, l) in m.links.iter().zip(&p.links) {
        assert_eq!(ml.id, l.link_id);
        assert_eq!(ml.channel("data"), Some(l.channels.data));
        assert_eq!(ml.channel("ke"), Some(l.channels.ke));
        assert_eq!(ml.channel("ts"), Some(l.channels.ts));
        assert_eq!(ml.get("keysize"), Some(l.keysize.to_string().as_str()));
        assert_eq!(ml.get("src"), Some(l.conn.source.to_string().as_str()));
        assert_eq!(ml.shared, l.shared);
        assert!(ml.encrypted);
    }
    assert_eq!(m.roles.len(), 6);
    assert_eq!(m.roles[0], ("IED1".into(), 1, "initiator".into()));
}

#[test]
fn unencrypted_links_are_marked_plain() {
    let opts = CompileOptions {
        encrypt: false,
        ..CompileOptions::default()
    };
    let p = compile_secure_links(&build_case_study(), &opts).unwrap();
    let m = parse_manifest(&render_manifest(&p)).unwrap();
    assert!(m.links.iter().all(|l| !l.encrypted && l.get("keysize").is_none()));
}

#[test]
fn malformed_manifest_lines_are_reported_with_their_number() {
    let err = parse_manifest("# ok\ndevice A A.fbs\nbogus line\n").unwrap_err();
    assert!(matches!(err, PlanError::Manifest { line: 3, .. }), "{err}");
    assert!(parse_manifest("link x src=a.b\n").is_err());
    assert!(parse_manifest("link 1 stray\n").is_err());
    assert!(parse_manifest("role A 1 observer\n").is_err());
}

#[test]
fn missing_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_manifest(&dir.path().join("none")),
        Err(PlanError::Io { .. })
    ));
}
