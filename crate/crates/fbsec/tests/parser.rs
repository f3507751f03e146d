use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use fbsec::fbs::{parse_application, serialize_application, ParseDiagnostic, ParseErrorKind};
use fbsec_core::model::{Application, Connection, ParamValue, PortRef, SecureLink, SecurityGoal, Value};
use proptest::prelude::*;

fn corpus(dir: &str) -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(dir);
    let mut files: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "fbs"))
        .collect();
    files.sort();
    files
}

fn name(p: &Path) -> String {
    p.file_name().unwrap().to_string_lossy().into_owned()
}

fn round_trip(file: &str, text: &str) -> Application {
    let app = parse_application(file, text).unwrap_or_else(|d| panic!("{file}: {d:?}"));
    let printed = serialize_application(&app);
    let again =
        parse_application("printed.fbs", &printed).unwrap_or_else(|d| panic!("{file} reprint: {d:?}\n{printed}"));
    assert_eq!(again, app, "{file}");
    assert_eq!(
        serialize_application(&again),
        printed,
        "{file}: printer is not a fixpoint"
    );
    app
}

/// Every span names real characters of the input (or the position just
/// past the end of a line).
fn span_in_bounds(text: &str, d: &ParseDiagnostic) -> bool {
    let lines: Vec<&str> = text.split('\n').collect();
    if d.span.line == 0 || d.span.line > lines.len() || d.span.col == 0 {
        return false;
    }
    let width = lines[d.span.line - 1].trim_end_matches('\r').chars().count();
    d.span.col + d.span.len <= width + 2
}

#[test]
fn corpus_has_enough_crafted_files() {
    let crafted = corpus("valid").len() - 1 + corpus("invalid").len();
    assert!(crafted >= 10, "{crafted}");
}

#[test]
fn valid_corpus_round_trips() {
    for p in corpus("valid") {
        round_trip(&name(&p), &fs::read_to_string(&p).unwrap());
    }
}

fn expectation(text: &str) -> (String, usize, usize) {
    let header = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("// expect: ")
        .expect("expect header");
    let (kind, pos) = header.split_once(' ').unwrap();
    let (l, c) = pos.split_once(':').unwrap();
    (kind.to_string(), l.parse().unwrap(), c.parse().unwrap())
}

#[test]
fn invalid_corpus_reports_expected_diagnostics() {
    let mut seen = BTreeSet::new();
    for p in corpus("invalid") {
        let file = name(&p);
        let text = fs::read_to_string(&p).unwrap();
        let (kind, line, col) = expectation(&text);
        let diags = parse_application(&file, &text).expect_err(&file);
        let first = &diags[0];
        assert_eq!(first.kind.as_str(), kind, "{file}: {first}");
        assert_eq!((first.span.line, first.span.col), (line, col), "{file}: {first}");
        assert_eq!(&*first.span.file, file.as_str());
        for d in &diags {
            assert!(span_in_bounds(&text, d), "{file}: {d}");
        }
        seen.insert(first.kind);
    }
    assert_eq!(
        seen,
        ParseErrorKind::ALL.into_iter().collect(),
        "every diagnostic class has a corpus file"
    );
}

#[test]
fn diagnostic_display_format() {
    let diags = parse_application("x.fbs", "app {\n  instance a : Nope\n}\n").unwrap_err();
    assert_eq!(
        diags[0].to_string(),
        "x.fbs:2:16: error[unknown-type]: unknown function block type `Nope`"
    );
}

fn case_study() -> Application {
    let p = corpus("valid")
        .into_iter()
        .find(|p| name(p) == "casestudy.fbs")
        .unwrap();
    round_trip("casestudy.fbs", &fs::read_to_string(p).unwrap())
}

#[test]
fn secure_arguments_of_the_case_study() {
    let app = case_study();
    assert_eq!(app.secure_links.len(), 3);
    let by_src = |s: &str| {
        app.secure_links
            .iter()
            .find(|l| l.d_con.source.to_string() == s)
            .unwrap()
    };
    for (src, keysize, channel) in [
        ("diff.TRIP", 128, true),
        ("ef.TRIP", 128, true),
        ("oc.TRIP", 256, false),
    ] {
        let l = by_src(src);
        assert_eq!(l.goal, SecurityGoal::Confidentiality);
        assert_eq!(l.alg, "AES");
        assert_eq!(l.params["keysize"], ParamValue::Int(keysize));
        assert_eq!(l.params["rekey"], ParamValue::DurationMs(60_000));
        assert_eq!(
            l.params.get("channel") == Some(&ParamValue::Text("grp1".into())),
            channel
        );
    }
}

#[test]
fn annotation_argument_forms() {
    let p = corpus("valid")
        .into_iter()
        .find(|p| name(p) == "annotations.fbs")
        .unwrap();
    let app = round_trip("annotations.fbs", &fs::read_to_string(p).unwrap());
    let l = &app.secure_links;
    assert_eq!(l.len(), 3);
    assert_eq!(l[0].params["rekey"], ParamValue::DurationMs(500));
    assert_eq!(l[0].params["keysize"], ParamValue::Int(192));
    assert_eq!(l[0].params["channel"], ParamValue::Text("grp A".into()));
    assert_eq!((l[1].goal, l[1].alg.as_str()), (SecurityGoal::Integrity, "HMAC"));
    assert_eq!(l[1].params["tag"], ParamValue::Text("SHA256".into()));
    assert_eq!(l[2].goal, SecurityGoal::Availability);
    assert_eq!(app.root.params[1].value, Value::Lreal(1000.0));
}

#[test]
fn crlf_and_lf_inputs_agree() {
    let p = corpus("valid").into_iter().find(|p| name(p) == "crlf.fbs").unwrap();
    let crlf = fs::read_to_string(p).unwrap();
    assert!(crlf.contains("\r\n"));
    assert_eq!(
        parse_application("a", &crlf).unwrap(),
        parse_application("b", &crlf.replace("\r\n", "\n")).unwrap()
    );
}

// Random well-formed documents over the built-in protection types.

const STUB: &str = "CurrentStub";
const RELAY: &str = "Overcurrent";
const LATCH: &str = "TripLatch";

/// goal selector, keysize, rekey ms, explicit channel
type SecureSpec = (u8, u64, u64, Option<String>);

#[derive(Debug, Clone)]
struct Shape {
    relays: usize,
    thresholds: Vec<f64>,
    secure: Vec<Option<SecureSpec>>,
    devices: usize,
    placement: Vec<usize>,
}

fn shape() -> impl Strategy<Value = Shape> {
    (1usize..5).prop_flat_map(|n| {
        let link = prop::option::of((
            0u8..3,
            prop::sample::select(vec![128u64, 192, 256]),
            1u64..100_000,
            prop::option::of("[a-z][a-z0-9_]{0,6}|\"[a-z ]{1,6}\""),
        ));
        (
            Just(n),
            prop::collection::vec(0.001f64..1e6, n),
            prop::collection::vec(link, n),
            1usize..4,
            prop::collection::vec(0usize..4, 3 * n),
        )
            .prop_map(|(relays, thresholds, secure, devices, placement)| Shape {
                relays,
                thresholds,
                secure,
                devices,
                placement,
            })
    })
}

fn build(s: &Shape) -> Application {
    let mut app = Application::default();
    let mut types = Vec::new();
    for k in 0..s.relays {
        let (stub, relay, latch) = (format!("s{k}"), format!("r{k}"), format!("l{k}"));
        app.root = app
            .root
            .instance(&stub, STUB)
            .instance(&relay, RELAY)
            .instance(&latch, LATCH)
            .event(&format!("{stub}.CNF"), &format!("{relay}.REQ"))
            .event(&format!("{relay}.CNF"), &format!("{latch}.REQ"))
            .data(&format!("{stub}.I"), &format!("{relay}.I"))
            .data(&format!("{relay}.TRIP"), &format!("{latch}.TRIP"))
            .param(&format!("{relay}.THRESHOLD"), Value::Lreal(s.thresholds[k]));
        if let Some((goal, keysize, rekey, channel)) = &s.secure[k] {
            let goal = [
                SecurityGoal::Confidentiality,
                SecurityGoal::Integrity,
                SecurityGoal::Availability,
            ][*goal as usize];
            let conn = Connection::new(PortRef::new(&relay, "TRIP"), PortRef::new(&latch, "TRIP"));
            let mut l = SecureLink::new(conn, goal, "AES")
                .with_param("keysize", ParamValue::Int(*keysize))
                .with_param("rekey", ParamValue::DurationMs(*rekey));
            if let Some(c) = channel {
                l = l.with_param("channel", ParamValue::Text(c.trim_matches('"').to_string()));
            }
            app.secure_links.push(l);
        }
        types.extend([STUB, RELAY, LATCH]);
    }
    // Prelude types appear once each, in library order.
    let lib = fbsec::fbs::resolve::prelude();
    app.fb_types = lib.into_iter().filter(|t| types.contains(&t.name.as_str())).collect();
    app.devices = (0..s.devices).map(|d| format!("D{d}")).collect();
    for (i, inst) in app.root.instances.iter().enumerate() {
        app.mapping
            .insert(inst.name.clone(), format!("D{}", s.placement[i] % s.devices));
    }
    app
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_documents_round_trip(s in shape()) {
        let app = build(&s);
        let text = serialize_application(&app);
        let parsed = parse_application("gen.fbs", &text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        prop_assert_eq!(&parsed, &app);
        prop_assert_eq!(serialize_application(&parsed), text);
    }

    #[test]
    fn arbitrary_input_never_panics_and_spans_stay_in_bounds(text in "(app|fbtype|devices|map|\\{|\\}|instance|event|data|@secure|\\(|\\)|,|=|->|[a-zA-Z_.]{1,4}|[0-9]{1,3}|\"|0x[0-9a-f]{0,3}|:| |\n|\\$){0,40}") {
        if let Err(diags) = parse_application("fuzz.fbs", &text) {
            prop_assert!(!diags.is_empty());
            for d in &diags {
                prop_assert!(span_in_bounds(&text, d), "{}", d);
            }
        }
    }

    #[test]
    fn mutated_case_study_diagnostics_stay_in_bounds(pos in 0usize..2000, junk in "[\\$#\"@(){}=a-z0-9 ]{1,3}") {
        let base = fbsec::casestudy::CASE_STUDY;
        let mut cut = pos % base.len();
        while !base.is_char_boundary(cut) { cut -= 1; }
        let text = format!("{}{junk}{}", &base[..cut], &base[cut..]);
        if let Err(diags) = parse_application("m.fbs", &text) {
            for d in &diags {
                prop_assert!(span_in_bounds(&text, d), "{}", d);
            }
        }
    }
}

#[test]
fn every_library_type_prints_and_parses_back() {
    let mut text = String::new();
    for t in fbsec::fbs::resolve::prelude() {
        fbsec::fbs::print::fb_type(&t, &mut text);
        text.push('\n');
    }
    text.push_str("app {\n}\n");
    let app = round_trip("library.fbs", &text);
    assert_eq!(app.fb_types, fbsec::fbs::resolve::prelude());
}
