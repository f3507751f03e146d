//! Standard FB types used by the confidentiality layer, with the binding
//! names their services and algorithms are registered under.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{CmpOp, DataKind, Ecc, Expr, FbInterface, FbType, InternalVar};

pub mod binding {
    pub const E_CYCLE: &str = "E_CYCLE";
    pub const TIMESTAMP: &str = "TIMESTAMP";
    pub const DH_KE: &str = "DH_KE";
    pub const BOOL_TO_BLOCK: &str = "BOOL_TO_BLOCK";
    pub const PUBLISH_DATA: &str = "PUBLISH_DATA";
    pub const PUBLISH_TS: &str = "PUBLISH_TS";
    pub const SUBSCRIBE_DATA: &str = "SUBSCRIBE_DATA";
    pub const SUBSCRIBE_TS: &str = "SUBSCRIBE_TS";
    pub const LATENCY_PROBE: &str = "LATENCY_PROBE";
}

pub mod alg {
    pub const KEY_EXPANSION: &str = "aes_key_expansion";
    pub const ENC_SET_KEY: &str = "aes_enc_set_key";
    pub const ENCRYPT: &str = "aes_encrypt";
    pub const ENC_DROP: &str = "aes_enc_drop";
    pub const DEC_SET_KEY: &str = "aes_dec_set_key";
    pub const DECRYPT: &str = "aes_decrypt";
    pub const BLOCK_TO_BOOL: &str = "block_to_bool";
}

pub const E_CYCLE: &str = "E_CYCLE";
pub const TIMESTAMP_RECORDER: &str = "TimeStampRecorder";
pub const DH_INITIATOR: &str = "DHInitiator";
pub const DH_RESPONDER: &str = "DHResponder";
pub const CONVERT_TO_ARRAY: &str = "ConvertToArray";
pub const CONVERT_FROM_ARRAY: &str = "ConvertFromArray";
pub const AES_KEY_EXP: &str = "AESKeyExp";
pub const AES_ENCRYPT: &str = "AESEncrypt";
pub const AES_DECRYPT: &str = "AESDecrypt";
pub const PUBLISHER: &str = "Publisher";
pub const TS_PUBLISHER: &str = "TsPublisher";
pub const SUBSCRIBER: &str = "Subscriber";
pub const TS_SUBSCRIBER: &str = "TsSubscriber";
pub const LATENCY_PROBE: &str = "LatencyProbe";

use DataKind::{Bool, Bytes, Bytes16, String as Str, Uint};

pub fn e_cycle() -> FbType {
    FbType::service(
        E_CYCLE,
        FbInterface::new()
            .event_in("START", &["DT"])
            .event_in("STOP", &[])
            .event_out("EO", &[])
            .data_in("DT", Uint),
        binding::E_CYCLE,
    )
}

pub fn timestamp_recorder() -> FbType {
    FbType::service(
        TIMESTAMP_RECORDER,
        FbInterface::new()
            .event_in("REQ", &[])
            .event_out("CNF", &["TS"])
            .data_out("TS", Uint),
        binding::TIMESTAMP,
    )
}

fn ke_interface() -> FbInterface {
    FbInterface::new()
        .event_in("INIT", &["QI", "ID", "LID", "SID", "KSIZE", "TIMEOUT", "RETRY"])
        .event_in("REQ", &[])
        .event_out("INITO", &[])
        .event_out("CNF", &["QO", "STATUS", "KEY", "EPOCH"])
        .data_in("QI", Bool)
        .data_in("ID", Str)
        .data_in("LID", Uint)
        .data_in("SID", Uint)
        .data_in("KSIZE", Uint)
        .data_in("TIMEOUT", Uint)
        .data_in("RETRY", Uint)
        .data_out("QO", Bool)
        .data_out("STATUS", Str)
        .data_out("KEY", Bytes)
        .data_out("EPOCH", Uint)
}

/// Key-exchange SIFB; `QI = TRUE` selects the initiator role.
pub fn dh_initiator() -> FbType {
    FbType::service(DH_INITIATOR, ke_interface(), binding::DH_KE)
}

pub fn dh_responder() -> FbType {
    FbType::service(DH_RESPONDER, ke_interface(), binding::DH_KE)
}

pub fn convert_to_array() -> FbType {
    FbType::service(
        CONVERT_TO_ARRAY,
        FbInterface::new()
            .event_in("REQ", &["IN"])
            .event_out("CNF", &["OUT"])
            .data_in("IN", Bool)
            .data_out("OUT", Bytes16),
        binding::BOOL_TO_BLOCK,
    )
}

pub fn convert_from_array() -> FbType {
    FbType::basic(
        CONVERT_FROM_ARRAY,
        FbInterface::new()
            .event_in("REQ", &["IN"])
            .event_out("CNF", &["OUT"])
            .data_in("IN", Bytes16)
            .data_out("OUT", Bool),
        vec![InternalVar::new("VALID", Bool), InternalVar::new("REJECTED", Uint)],
        Ecc::new("START")
            .state("START", &[])
            .state("CONV", &[(Some(alg::BLOCK_TO_BOOL), None)])
            .state("OK", &[(None, Some("CNF"))])
            .on("START", "REQ", None, "CONV")
            .always("CONV", Some(Expr::var("VALID")), "OK")
            .always("CONV", None, "START")
            .always("OK", None, "START"),
    )
}

pub fn aes_key_exp() -> FbType {
    FbType::basic(
        AES_KEY_EXP,
        FbInterface::new()
            .event_in("REQ", &["KEY", "KSIZE", "EPOCH", "QI"])
            .event_out("CNF", &["EXPKEY", "EPOCH_O"])
            .data_in("KEY", Bytes)
            .data_in("KSIZE", Uint)
            .data_in("EPOCH", Uint)
            .data_in("QI", Bool)
            .data_out("EXPKEY", Bytes)
            .data_out("EPOCH_O", Uint),
        vec![],
        Ecc::new("START")
            .state("START", &[])
            .state("EXP", &[(Some(alg::KEY_EXPANSION), Some("CNF"))])
            .on("START", "REQ", Some(Expr::var("QI")), "EXP")
            .always("EXP", None, "START"),
    )
}

pub fn aes_encrypt() -> FbType {
    FbType::basic(
        AES_ENCRYPT,
        FbInterface::new()
            .event_in("KEY", &["EXPKEY", "KEPOCH"])
            .event_in("REQ", &["PT"])
            .event_out("CNF", &["CT", "EPOCH_O"])
            .data_in("EXPKEY", Bytes)
            .data_in("KEPOCH", Uint)
            .data_in("PT", Bytes16)
            .data_out("CT", Bytes16)
            .data_out("EPOCH_O", Uint),
        vec![
            InternalVar::new("K", Bytes),
            InternalVar::new("KE", Uint),
            InternalVar::new("HASKEY", Bool),
            InternalVar::new("DROPPED", Uint),
        ],
        Ecc::new("START")
            .state("START", &[])
            .state("SETKEY", &[(Some(alg::ENC_SET_KEY), None)])
            .state("ENC", &[(Some(alg::ENCRYPT), Some("CNF"))])
            .state("DROP", &[(Some(alg::ENC_DROP), None)])
            .on("START", "KEY", None, "SETKEY")
            .on("START", "REQ", Some(Expr::var("HASKEY")), "ENC")
            .on("START", "REQ", None, "DROP")
            .always("SETKEY", None, "START")
            .always("ENC", None, "START")
            .always("DROP", None, "START"),
    )
}

/// Decryptor for one link on a possibly shared channel. Keeps the two
/// most recent key epochs; frames under any other epoch (including frames
/// arriving before the first key) are counted in `DROPPED`.
pub fn aes_decrypt() -> FbType {
    FbType::basic(
        AES_DECRYPT,
        FbInterface::new()
            .event_in("KEY", &["EXPKEY", "KEPOCH"])
            .event_in("REQ", &["CT", "EPOCH", "LINK"])
            .event_out("CNF", &["PT"])
            .data_in("EXPKEY", Bytes)
            .data_in("KEPOCH", Uint)
            .data_in("CT", Bytes16)
            .data_in("EPOCH", Uint)
            .data_in("LINK", Uint)
            .data_in("LID", Uint)
            .data_out("PT", Bytes16),
        vec![
            InternalVar::new("K0", Bytes),
            InternalVar::new("E0", Uint),
            InternalVar::new("K1", Bytes),
            InternalVar::new("E1", Uint),
            InternalVar::new("NKEYS", Uint),
            InternalVar::new("OK", Bool),
            InternalVar::new("DROPPED", Uint),
        ],
        Ecc::new("START")
            .state("START", &[])
            .state("SETKEY", &[(Some(alg::DEC_SET_KEY), None)])
            .state("DEC", &[(Some(alg::DECRYPT), None)])
            .state("DONE", &[(None, Some("CNF"))])
            .on("START", "KEY", None, "SETKEY")
            .on(
                "START",
                "REQ",
                Some(Expr::cmp(CmpOp::Eq, Expr::var("LINK"), Expr::var("LID"))),
                "DEC",
            )
            .always("SETKEY", None, "START")
            .always("DEC", Some(Expr::var("OK")), "DONE")
            .always("DEC", None, "START")
            .always("DONE", None, "START"),
    )
}

pub fn publisher() -> FbType {
    FbType::service(
        PUBLISHER,
        FbInterface::new()
            .event_in("INIT", &["ID", "LID", "SID"])
            .event_in("REQ", &["SD", "EPOCH"])
            .event_out("INITO", &[])
            .event_out("CNF", &["SEQ"])
            .data_in("ID", Str)
            .data_in("LID", Uint)
            .data_in("SID", Uint)
            .data_in("SD", Bytes16)
            .data_in("EPOCH", Uint)
            .data_out("SEQ", Uint),
        binding::PUBLISH_DATA,
    )
}

pub fn ts_publisher() -> FbType {
    FbType::service(
        TS_PUBLISHER,
        FbInterface::new()
            .event_in("INIT", &["ID", "LID", "SID"])
            .event_in("REQ", &["TS", "SEQ"])
            .event_out("INITO", &[])
            .event_out("CNF", &[])
            .data_in("ID", Str)
            .data_in("LID", Uint)
            .data_in("SID", Uint)
            .data_in("TS", Uint)
            .data_in("SEQ", Uint),
        binding::PUBLISH_TS,
    )
}

pub fn subscriber() -> FbType {
    FbType::service(
        SUBSCRIBER,
        FbInterface::new()
            .event_in("INIT", &["ID", "LINKS"])
            .event_out("INITO", &[])
            .event_out("IND", &["RD", "EPOCH", "LINK", "SEQ"])
            .data_in("ID", Str)
            .data_in("LINKS", Str)
            .data_out("RD", Bytes16)
            .data_out("EPOCH", Uint)
            .data_out("LINK", Uint)
            .data_out("SEQ", Uint),
        binding::SUBSCRIBE_DATA,
    )
}

pub fn ts_subscriber() -> FbType {
    FbType::service(
        TS_SUBSCRIBER,
        FbInterface::new()
            .event_in("INIT", &["ID", "LINKS"])
            .event_out("INITO", &[])
            .event_out("IND", &["TS", "LINK", "SEQ"])
            .data_in("ID", Str)
            .data_in("LINKS", Str)
            .data_out("TS", Uint)
            .data_out("LINK", Uint)
            .data_out("SEQ", Uint),
        binding::SUBSCRIBE_TS,
    )
}

/// Pairs t1 (shipped from the sender) with t2 (taken after decryption)
/// by sequence number and reports each pair to the runtime.
pub fn latency_probe() -> FbType {
    FbType::service(
        LATENCY_PROBE,
        FbInterface::new()
            .event_in("REQ1", &["T1", "SEQ1"])
            .event_in("REQ2", &["T2", "SEQ2", "EPOCH"])
            .data_in("LID", Uint)
            .data_in("T1", Uint)
            .data_in("SEQ1", Uint)
            .data_in("T2", Uint)
            .data_in("SEQ2", Uint)
            .data_in("EPOCH", Uint),
        binding::LATENCY_PROBE,
    )
}

/// Every standard type.
pub fn standard_types() -> Vec<FbType> {
    vec![
        e_cycle(),
        timestamp_recorder(),
        dh_initiator(),
        dh_responder(),
        convert_to_array(),
        convert_from_array(),
        aes_key_exp(),
        aes_encrypt(),
        aes_decrypt(),
        publisher(),
        ts_publisher(),
        subscriber(),
        ts_subscriber(),
        latency_probe(),
    ]
}
