//! Canonical printer. Output always parses back to an equal application.

use std::fmt::Write;

use fbsec_core::model::{
    Application, Ecc, Expr, FbBody, FbInterface, FbNetwork, FbType, ParamValue, SecureLink, Trigger, Value,
};

use super::lexer::{is_ident_char, is_ident_start};

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Inverse of [`quote`]; input must be a quoted literal.
pub fn unquote(s: &str) -> String {
    let inner = &s[1..s.len() - 1];
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn literal(v: &Value) -> String {
    match v {
        Value::Bool(true) => "TRUE".into(),
        Value::Bool(false) => "FALSE".into(),
        Value::Int(i) => i.to_string(),
        Value::Uint(u) => u.to_string(),
        Value::Byte(b) => b.to_string(),
        Value::Lreal(f) => format!("{f:?}"),
        Value::Bytes16(b) => format!("0x{}", hex::encode(b)),
        Value::Bytes(b) => format!("0x{}", hex::encode(b)),
        Value::String(s) => quote(s),
    }
}

fn is_plain_word(s: &str) -> bool {
    s.starts_with(is_ident_start) && s.chars().all(is_ident_char)
}

fn param(v: &ParamValue) -> String {
    match v {
        ParamValue::Text(t) if is_plain_word(t) => t.clone(),
        ParamValue::Text(t) => quote(t),
        other => other.to_string(),
    }
}

pub fn annotation(link: &SecureLink) -> String {
    let mut args = vec![link.goal.letter().to_string(), link.alg.clone()];
    args.extend(link.params.iter().map(|(k, v)| format!("{k}={}", param(v))));
    format!("@secure({})", args.join(", "))
}

fn expr(e: &Expr, out: &mut String) {
    let child = |e: &Expr, out: &mut String| {
        if !matches!(e, Expr::Lit(_) | Expr::Var(_)) {
            out.push('(');
            expr(e, out);
            out.push(')');
        } else {
            expr(e, out);
        }
    };
    match e {
        Expr::Lit(v) => out.push_str(&literal(v)),
        Expr::Var(v) => out.push_str(v),
        Expr::Not(a) => {
            out.push_str("NOT ");
            child(a, out);
        }
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) => {
            let op = match e {
                Expr::And(..) => "AND",
                Expr::Or(..) => "OR",
                Expr::Cmp(op, ..) => op.symbol(),
                _ => unreachable!(),
            };
            child(a, out);
            let _ = write!(out, " {op} ");
            child(b, out);
        }
    }
}

fn interface(i: &FbInterface, out: &mut String) {
    let with = |ev: &str| -> String {
        match i.with_assoc.get(ev) {
            Some(w) if !w.is_empty() => format!(" with {}", w.iter().cloned().collect::<Vec<_>>().join(", ")),
            _ => String::new(),
        }
    };
    for e in &i.event_inputs {
        let _ = writeln!(out, "  event_in {e}{}", with(e));
    }
    for e in &i.event_outputs {
        let _ = writeln!(out, "  event_out {e}{}", with(e));
    }
    for d in &i.data_inputs {
        let _ = writeln!(out, "  data_in {} : {}", d.name, d.kind);
    }
    for d in &i.data_outputs {
        let _ = writeln!(out, "  data_out {} : {}", d.name, d.kind);
    }
}

fn ecc(e: &Ecc, out: &mut String) {
    let _ = writeln!(out, "  initial {}", e.initial);
    for s in &e.states {
        let _ = write!(out, "  state {s}");
        if let Some(actions) = e.actions.get(s) {
            let parts: Vec<String> = actions
                .iter()
                .map(|a| match (&a.algorithm, &a.output) {
                    (Some(alg), Some(o)) => format!("{alg} -> {o}"),
                    (Some(alg), None) => alg.clone(),
                    (None, Some(o)) => format!("-> {o}"),
                    (None, None) => String::new(),
                })
                .filter(|p| !p.is_empty())
                .collect();
            if !parts.is_empty() {
                let _ = write!(out, " : {}", parts.join(", "));
            }
        }
        out.push('\n');
    }
    for t in &e.transitions {
        let _ = write!(out, "  {} -> {}", t.from, t.to);
        match &t.trigger {
            Trigger::Event(ev) => {
                let _ = write!(out, " on {ev}");
            }
            Trigger::Always => out.push_str(" always"),
        }
        if let Some(g) = &t.guard {
            out.push_str(" when ");
            expr(g, out);
        }
        out.push('\n');
    }
}

fn network(n: &FbNetwork, links: &[SecureLink], out: &mut String) {
    for i in &n.instances {
        let _ = writeln!(out, "  instance {} : {}", i.name, i.type_name);
    }
    for c in &n.event_conns {
        let _ = writeln!(out, "  event {c}");
    }
    for c in &n.data_conns {
        let _ = write!(out, "  data {c}");
        if let Some(l) = links.iter().find(|l| &l.d_con == c) {
            let _ = write!(out, " {}", annotation(l));
        }
        out.push('\n');
    }
    for p in &n.params {
        let _ = writeln!(out, "  param {} = {}", p.target, literal(&p.value));
    }
}

pub fn fb_type(t: &FbType, out: &mut String) {
    let kind = match &t.body {
        FbBody::Basic(_) => "basic".to_string(),
        FbBody::Composite(_) => "composite".to_string(),
        FbBody::Service { binding } => format!("sifb {}", quote(binding)),
    };
    let _ = writeln!(out, "fbtype {} {kind} {{", t.name);
    interface(&t.interface, out);
    match &t.body {
        FbBody::Basic(b) => {
            for v in &b.internals {
                let _ = write!(out, "  var {} : {}", v.name, v.kind);
                if v.initial != v.kind.default_value() {
                    let _ = write!(out, " = {}", literal(&v.initial));
                }
                out.push('\n');
            }
            ecc(&b.ecc, out);
        }
        FbBody::Composite(n) => network(n, &[], out),
        FbBody::Service { .. } => {}
    }
    out.push_str("}\n");
}

/// Canonical text: types in library order, then `app`, `devices` and `map`
/// (the last two only when non-empty). Always LF line endings.
pub fn serialize_application(app: &Application) -> String {
    let mut out = String::new();
    for t in &app.fb_types {
        fb_type(t, &mut out);
        out.push('\n');
    }
    out.push_str("app {\n");
    network(&app.root, &app.secure_links, &mut out);
    out.push_str("}\n");
    if !app.devices.is_empty() {
        out.push_str("\ndevices {\n");
        for d in &app.devices {
            let _ = writeln!(out, "  {d}");
        }
        out.push_str("}\n");
    }
    if !app.mapping.is_empty() {
        out.push_str("\nmap {\n");
        for (i, d) in &app.mapping {
            let _ = writeln!(out, "  {i} -> {d}");
        }
        out.push_str("}\n");
    }
    out
}
