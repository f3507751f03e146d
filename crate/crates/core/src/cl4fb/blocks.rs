//! Generated sender and receiver composites.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{DataKind, FbInterface, FbNetwork, FbType, Value};
use crate::runtime::library as lib;

pub const CL_SENDER: &str = "CLSender";
pub const CL_RECV: &str = "CLRecv";
pub const PLAIN_SENDER: &str = "PlainSender";
pub const PLAIN_RECV: &str = "PlainRecv";

/// Type name of a receiver serving `links` links: `CLRecv`, `CLRecv2`, ...
pub fn receiver_type_name(encrypt: bool, links: usize) -> String {
    let base = if encrypt { CL_RECV } else { PLAIN_RECV };
    if links <= 1 {
        base.into()
    } else {
        format!("{base}{links}")
    }
}

pub fn sender_type_name(encrypt: bool) -> &'static str {
    if encrypt {
        CL_SENDER
    } else {
        PLAIN_SENDER
    }
}

pub fn is_sender_type(name: &str) -> bool {
    name == CL_SENDER || name == PLAIN_SENDER
}

pub fn is_receiver_type(name: &str) -> bool {
    [CL_RECV, PLAIN_RECV].iter().any(|b| {
        name.strip_prefix(b)
            .is_some_and(|rest| rest.chars().all(|c| c.is_ascii_digit()))
    })
}

/// Encrypt-and-publish side of a link.
///
/// `REQ` converts `SD` to a padded block, encrypts it under the current
/// session key and publishes it; `CNF` follows publication. `INIT` starts
/// the key exchange, and every `REKEY` ms the exchange is repeated under
/// the next epoch. With `instrument`, t1 is taken just before encryption
/// and shipped on `TS_ID`.
pub fn sender(encrypt: bool, instrument: bool) -> FbType {
    let mut init_with = alloc::vec!["ID", "TS_ID", "LID", "SID"];
    if encrypt {
        init_with.extend(["KE_ID", "KSIZE", "REKEY"]);
    }
    let mut iface = FbInterface::new()
        .event_in("INIT", &init_with)
        .event_in("REQ", &["SD"])
        .event_out("INITO", &[])
        .event_out("CNF", &[])
        .data_in("ID", DataKind::String)
        .data_in("TS_ID", DataKind::String)
        .data_in("LID", DataKind::Uint)
        .data_in("SID", DataKind::Uint);
    if encrypt {
        iface = iface
            .data_in("KE_ID", DataKind::String)
            .data_in("KSIZE", DataKind::Uint)
            .data_in("REKEY", DataKind::Uint);
    }
    iface = iface.data_in("SD", DataKind::Bool);

    let mut net = FbNetwork::new()
        .instance("conv", lib::CONVERT_TO_ARRAY)
        .instance("pub", lib::PUBLISHER);
    if encrypt {
        net = net
            .instance("ke", lib::DH_INITIATOR)
            .instance("kexp", lib::AES_KEY_EXP)
            .instance("enc", lib::AES_ENCRYPT)
            .instance("cyc", lib::E_CYCLE);
    }
    if instrument {
        net = net
            .instance("ts", lib::TIMESTAMP_RECORDER)
            .instance("tpub", lib::TS_PUBLISHER);
    }

    net = net.event("self.INIT", "pub.INIT");
    if instrument {
        net = net.event("self.INIT", "tpub.INIT");
    }
    if encrypt {
        net = net
            .event("self.INIT", "ke.INIT")
            .event("ke.INITO", "ke.REQ")
            .event("ke.INITO", "cyc.START")
            .event("ke.INITO", "self.INITO")
            .event("cyc.EO", "ke.REQ")
            .event("ke.CNF", "kexp.REQ")
            .event("kexp.CNF", "enc.KEY");
    } else {
        net = net.event("pub.INITO", "self.INITO");
    }
    net = net.event("self.REQ", "conv.REQ");
    let protect = if encrypt { "enc.REQ" } else { "pub.REQ" };
    if instrument {
        net = net.event("conv.CNF", "ts.REQ").event("ts.CNF", protect);
    } else {
        net = net.event("conv.CNF", protect);
    }
    if encrypt {
        net = net.event("enc.CNF", "pub.REQ");
    }
    if instrument {
        net = net.event("pub.CNF", "tpub.REQ").event("tpub.CNF", "self.CNF");
    } else {
        net = net.event("pub.CNF", "self.CNF");
    }

    net = net
        .data("self.ID", "pub.ID")
        .data("self.LID", "pub.LID")
        .data("self.SID", "pub.SID")
        .data("self.SD", "conv.IN");
    if encrypt {
        net = net
            .data("self.KE_ID", "ke.ID")
            .data("self.LID", "ke.LID")
            .data("self.SID", "ke.SID")
            .data("self.KSIZE", "ke.KSIZE")
            .data("self.KSIZE", "kexp.KSIZE")
            .data("self.REKEY", "cyc.DT")
            .data("ke.QO", "kexp.QI")
            .data("ke.KEY", "kexp.KEY")
            .data("ke.EPOCH", "kexp.EPOCH")
            .data("kexp.EXPKEY", "enc.EXPKEY")
            .data("kexp.EPOCH_O", "enc.KEPOCH")
            .data("conv.OUT", "enc.PT")
            .data("enc.CT", "pub.SD")
            .data("enc.EPOCH_O", "pub.EPOCH")
            .param("ke.QI", Value::Bool(true));
    } else {
        net = net.data("conv.OUT", "pub.SD");
    }
    if instrument {
        net = net
            .data("self.TS_ID", "tpub.ID")
            .data("self.LID", "tpub.LID")
            .data("self.SID", "tpub.SID")
            .data("ts.TS", "tpub.TS")
            .data("pub.SEQ", "tpub.SEQ");
    }
    FbType::composite(sender_type_name(encrypt), iface, net)
}

/// Subscribe-and-decrypt side for `links` links sharing one data channel.
///
/// Per link `k` (1-based) the receiver runs its own key-exchange responder
/// and key store, and raises `IND_k` with the recovered value on `RD_k`.
pub fn receiver(links: usize, encrypt: bool, instrument: bool) -> FbType {
    let links = links.max(1);
    let k_names: Vec<[String; 7]> = (1..=links)
        .map(|k| {
            [
                format!("KE_ID_{k}"),
                format!("TS_ID_{k}"),
                format!("LID_{k}"),
                format!("KSIZE_{k}"),
                format!("RD_{k}"),
                format!("IND_{k}"),
                format!("{k}"),
            ]
        })
        .collect();

    let mut init_with: Vec<&str> = alloc::vec!["ID", "LINKS", "SID"];
    for [ke, ts, lid, ks, ..] in &k_names {
        if encrypt {
            init_with.push(ke);
        }
        init_with.push(ts);
        init_with.push(lid);
        if encrypt {
            init_with.push(ks);
        }
    }
    let mut iface = FbInterface::new()
        .event_in("INIT", &init_with)
        .event_out("INITO", &[])
        .data_in("ID", DataKind::String)
        .data_in("LINKS", DataKind::String)
        .data_in("SID", DataKind::Uint);
    for [ke, ts, lid, ks, rd, ind, _] in &k_names {
        iface = iface.event_out(ind, &[rd.as_str()]);
        if encrypt {
            iface = iface.data_in(ke, DataKind::String);
        }
        iface = iface.data_in(ts, DataKind::String).data_in(lid, DataKind::Uint);
        if encrypt {
            iface = iface.data_in(ks, DataKind::Uint);
        }
        iface = iface.data_out(rd, DataKind::Bool);
    }

    let mut net = FbNetwork::new()
        .instance("sub", lib::SUBSCRIBER)
        .event("self.INIT", "sub.INIT")
        .event("sub.INITO", "self.INITO")
        .data("self.ID", "sub.ID")
        .data("self.LINKS", "sub.LINKS");
    for [ke_id, ts_id, lid, ksize, rd, ind, k] in &k_names {
        let n = |base: &str| format!("{base}_{k}");
        let p = |inst: &str, port: &str| format!("{inst}.{port}");
        let (ke, kexp, dec, conv, ts2, tsub, lat) =
            (n("ke"), n("kexp"), n("dec"), n("conv"), n("ts2"), n("tsub"), n("lat"));
        let this = |port: &str| format!("self.{port}");

        net = net.instance(&conv, lib::CONVERT_FROM_ARRAY);
        if encrypt {
            net = net
                .instance(&ke, lib::DH_RESPONDER)
                .instance(&kexp, lib::AES_KEY_EXP)
                .instance(&dec, lib::AES_DECRYPT);
        }
        if instrument {
            net = net
                .instance(&ts2, lib::TIMESTAMP_RECORDER)
                .instance(&tsub, lib::TS_SUBSCRIBER)
                .instance(&lat, lib::LATENCY_PROBE);
        }

        // events
        let delivered = if encrypt {
            net = net
                .event("self.INIT", &p(&ke, "INIT"))
                .event(&p(&ke, "INITO"), &p(&ke, "REQ"))
                .event(&p(&ke, "CNF"), &p(&kexp, "REQ"))
                .event(&p(&kexp, "CNF"), &p(&dec, "KEY"))
                .event("sub.IND", &p(&dec, "REQ"));
            p(&dec, "CNF")
        } else {
            String::from("sub.IND")
        };
        if instrument {
            net = net
                .event("self.INIT", &p(&tsub, "INIT"))
                .event(&delivered, &p(&ts2, "REQ"))
                .event(&p(&ts2, "CNF"), &p(&conv, "REQ"))
                .event(&p(&ts2, "CNF"), &p(&lat, "REQ2"))
                .event(&p(&tsub, "IND"), &p(&lat, "REQ1"));
        } else {
            net = net.event(&delivered, &p(&conv, "REQ"));
        }
        net = net.event(&p(&conv, "CNF"), &this(ind));

        // data
        if encrypt {
            net = net
                .data(&this(ke_id), &p(&ke, "ID"))
                .data(&this(lid), &p(&ke, "LID"))
                .data("self.SID", &p(&ke, "SID"))
                .data(&this(ksize), &p(&ke, "KSIZE"))
                .data(&this(ksize), &p(&kexp, "KSIZE"))
                .data(&p(&ke, "QO"), &p(&kexp, "QI"))
                .data(&p(&ke, "KEY"), &p(&kexp, "KEY"))
                .data(&p(&ke, "EPOCH"), &p(&kexp, "EPOCH"))
                .data(&p(&kexp, "EXPKEY"), &p(&dec, "EXPKEY"))
                .data(&p(&kexp, "EPOCH_O"), &p(&dec, "KEPOCH"))
                .data("sub.RD", &p(&dec, "CT"))
                .data("sub.EPOCH", &p(&dec, "EPOCH"))
                .data("sub.LINK", &p(&dec, "LINK"))
                .data(&this(lid), &p(&dec, "LID"))
                .data(&p(&dec, "PT"), &p(&conv, "IN"))
                .param(&p(&ke, "QI"), Value::Bool(false));
        } else {
            net = net.data("sub.RD", &p(&conv, "IN"));
        }
        net = net.data(&p(&conv, "OUT"), &this(rd));
        if instrument {
            net = net
                .data(&this(ts_id), &p(&tsub, "ID"))
                .data(&this(lid), &p(&lat, "LID"))
                .data(&p(&ts2, "TS"), &p(&lat, "T2"))
                .data("sub.SEQ", &p(&lat, "SEQ2"))
                .data("sub.EPOCH", &p(&lat, "EPOCH"))
                .data(&p(&tsub, "TS"), &p(&lat, "T1"))
                .data(&p(&tsub, "SEQ"), &p(&lat, "SEQ1"));
        }
    }
    FbType::composite(&receiver_type_name(encrypt, links), iface, net)
}
