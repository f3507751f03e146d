//! Host implementations behind the standard library types.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::crypto::aes::{decrypt_blocks, encrypt_blocks};
use crate::crypto::{
    aes_key_expansion, derive_session_key, dh_keypair, dh_shared_secret, DhGroup, DhKeyPair, EntropySource, KeyContext,
    KeySchedule, KeySize, Mode,
};
use crate::model::Value;
use crate::transport::{ChannelId, LinkFilter};
use crate::wire::{MsgType, WireFrame};

use super::library::{alg, binding};
use super::snapshot::{AlgError, Snapshot};
use super::{Bindings, LatencySample, Service, ServiceCtx, ServiceTrigger};

pub const DEFAULT_KE_TIMEOUT_MS: u64 = 1000;
pub const DEFAULT_KE_RETRY_MS: u64 = 20;

fn err(msg: impl Into<String>) -> AlgError {
    AlgError::new(msg)
}

fn channel(snap: &Snapshot, port: &str) -> Result<ChannelId, AlgError> {
    let text = snap.text(port)?;
    text.parse().map_err(|e| err(format!("{port} `{text}`: {e}")))
}

fn uint_u32(snap: &Snapshot, port: &str) -> Result<u32, AlgError> {
    u32::try_from(snap.uint(port)?).map_err(|_| err(format!("{port} exceeds 32 bits")))
}

fn uint_u16(snap: &Snapshot, port: &str) -> Result<u16, AlgError> {
    u16::try_from(snap.uint(port)?).map_err(|_| err(format!("{port} exceeds 16 bits")))
}

fn link_filter(text: &str) -> Result<LinkFilter, AlgError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(LinkFilter::Any);
    }
    let links: Result<Vec<u32>, _> = text.split(',').map(|t| t.trim().parse::<u32>()).collect();
    links
        .map(LinkFilter::only)
        .map_err(|_| err(format!("LINKS `{text}` is not a comma-separated list of link ids")))
}

fn transport_err(e: crate::transport::TransportError) -> AlgError {
    err(format!("{e}"))
}

// ---------------------------------------------------------------- booleans

/// Encodes a boolean into one AES block: byte 0 carries the value, bytes
/// 1..16 are random so repeated values encrypt differently under ECB.
pub fn encode_bool(value: bool, rng: &mut dyn EntropySource) -> Result<[u8; 16], AlgError> {
    let mut block = [0u8; 16];
    rng.fill(&mut block[1..]).map_err(|e| err(format!("{e}")))?;
    block[0] = value as u8;
    Ok(block)
}

/// Inverse of [`encode_bool`]; any leading byte other than 0 or 1 is
/// rejected.
pub fn decode_bool(block: &[u8; 16]) -> Result<bool, AlgError> {
    match block[0] {
        0 => Ok(false),
        1 => Ok(true),
        b => Err(err(format!("block does not encode a boolean (leading byte {b:#04x})"))),
    }
}

// ---------------------------------------------------------------- E_CYCLE

struct Cycle {
    period_us: u64,
    next_us: u64,
    running: bool,
}

impl Service for Cycle {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        match trigger {
            ServiceTrigger::Event("START") => {
                let dt = snap.uint("DT")?;
                if dt == 0 {
                    return Err(err("DT must be greater than zero"));
                }
                ctx.cancel_timer(0);
                self.period_us = dt * 1000;
                self.next_us = ctx.now_us() + self.period_us;
                self.running = true;
                ctx.set_timer_at(self.next_us, 0);
            }
            ServiceTrigger::Event("STOP") => {
                ctx.cancel_timer(0);
                self.running = false;
            }
            ServiceTrigger::Timer(0) if self.running => {
                ctx.emit("EO");
                self.next_us += self.period_us;
                ctx.set_timer_at(self.next_us, 0);
            }
            _ => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- TimeStampRecorder

struct TimeStamp;

impl Service for TimeStamp {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        if let ServiceTrigger::Event("REQ") = trigger {
            snap.set("TS", Value::Uint(ctx.now_ms()))?;
            ctx.emit("CNF");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- ConvertToArray

struct BoolToBlock;

impl Service for BoolToBlock {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        if let ServiceTrigger::Event("REQ") = trigger {
            let block = encode_bool(snap.bool("IN")?, ctx.entropy())?;
            snap.set("OUT", Value::Bytes16(block))?;
            ctx.emit("CNF");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- publishers / subscribers

#[derive(Default)]
struct Publish {
    ts: bool,
    ch: Option<ChannelId>,
    link: u32,
    sender: u16,
    seq: u32,
}

impl Service for Publish {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        match trigger {
            ServiceTrigger::Event("INIT") => {
                let ch = channel(snap, "ID")?;
                ctx.open(ch).map_err(transport_err)?;
                self.ch = Some(ch);
                self.link = uint_u32(snap, "LID")?;
                self.sender = uint_u16(snap, "SID")?;
                ctx.emit("INITO");
            }
            ServiceTrigger::Event("REQ") => {
                let ch = self.ch.ok_or_else(|| err("REQ before INIT"))?;
                let frame = if self.ts {
                    let seq = uint_u32(snap, "SEQ")?;
                    let ts = snap.uint("TS")?;
                    WireFrame::new(MsgType::Ts, self.link, self.sender, 0, seq, ts.to_be_bytes().to_vec())
                } else {
                    let epoch = snap.uint("EPOCH")? as u8;
                    let seq = self.seq;
                    self.seq = self.seq.wrapping_add(1);
                    snap.set("SEQ", Value::Uint(seq as u64))?;
                    WireFrame::new(
                        MsgType::Data,
                        self.link,
                        self.sender,
                        epoch,
                        seq,
                        snap.block("SD")?.to_vec(),
                    )
                };
                ctx.publish(ch, &frame).map_err(transport_err)?;
                ctx.emit("CNF");
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Default)]
struct Subscribe {
    ts: bool,
    ignored: u64,
}

impl Service for Subscribe {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        match trigger {
            ServiceTrigger::Event("INIT") => {
                let ch = channel(snap, "ID")?;
                let filter = link_filter(snap.text("LINKS")?)?;
                ctx.open(ch).map_err(transport_err)?;
                ctx.subscribe(ch, filter).map_err(transport_err)?;
                ctx.emit("INITO");
            }
            ServiceTrigger::Frame(d) => {
                let f = &d.frame;
                match (self.ts, f.msg_type) {
                    (false, MsgType::Data) if f.payload.len() == 16 => {
                        let mut block = [0u8; 16];
                        block.copy_from_slice(&f.payload);
                        snap.set("RD", Value::Bytes16(block))?;
                        snap.set("EPOCH", Value::Uint(f.epoch as u64))?;
                    }
                    (true, MsgType::Ts) => {
                        let ts = f.timestamp().ok_or_else(|| err("malformed TS frame"))?;
                        snap.set("TS", Value::Uint(ts))?;
                    }
                    _ => {
                        self.ignored += 1;
                        return Ok(());
                    }
                }
                snap.set("LINK", Value::Uint(f.link_id as u64))?;
                snap.set("SEQ", Value::Uint(f.seq as u64))?;
                ctx.emit("IND");
            }
            _ => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- latency probe

const PROBE_WINDOW: usize = 4096;

#[derive(Default)]
struct Probe {
    t1: BTreeMap<u32, u64>,
    t2: BTreeMap<u32, (u64, u8)>,
}

fn bounded_insert<V>(map: &mut BTreeMap<u32, V>, key: u32, value: V) {
    map.insert(key, value);
    while map.len() > PROBE_WINDOW {
        map.pop_first();
    }
}

impl Service for Probe {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        let link = uint_u32(snap, "LID")?;
        match trigger {
            ServiceTrigger::Event("REQ1") => {
                let seq = uint_u32(snap, "SEQ1")?;
                let t1 = snap.uint("T1")?;
                match self.t2.remove(&seq) {
                    Some((t2, epoch)) => ctx.record_sample(LatencySample {
                        link,
                        seq,
                        epoch,
                        t1,
                        t2,
                    }),
                    None => bounded_insert(&mut self.t1, seq, t1),
                }
            }
            ServiceTrigger::Event("REQ2") => {
                let seq = uint_u32(snap, "SEQ2")?;
                let t2 = snap.uint("T2")?;
                let epoch = snap.uint("EPOCH")? as u8;
                match self.t1.remove(&seq) {
                    Some(t1) => ctx.record_sample(LatencySample {
                        link,
                        seq,
                        epoch,
                        t1,
                        t2,
                    }),
                    None => bounded_insert(&mut self.t2, seq, (t2, epoch)),
                }
            }
            _ => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- key exchange

pub mod ke_status {
    pub const IDLE: &str = "IDLE";
    pub const ESTABLISHED: &str = "ESTABLISHED";
    pub const TIMEOUT: &str = "TIMEOUT";
    pub const PROTOCOL_ERROR: &str = "PROTOCOL_ERROR";
}

const RETRY_TIMER: u64 = 1;
const TIMEOUT_TIMER: u64 = 2;
const RESPONDER_CACHE_EPOCHS: usize = 2;

struct Exchange {
    epoch: u8,
    keypair: DhKeyPair,
    frame: WireFrame,
}

/// Diffie-Hellman key exchange over a per-link channel.
///
/// The initiator sends `KE_INIT(epoch, public)` and retransmits every
/// RETRY ms until a matching `KE_RESP` arrives or TIMEOUT elapses. The
/// responder answers each new `(epoch, public)` with a fresh key pair and
/// replays its cached answer for retransmissions. Both sides derive the
/// session key from the shared secret, the link id and the epoch.
struct KeyExchange {
    group: Arc<DhGroup>,
    initiator: bool,
    ch: Option<ChannelId>,
    link: u32,
    sender: u16,
    ksize: KeySize,
    timeout_us: u64,
    retry_us: u64,
    seq: u32,
    next_epoch: u8,
    spare: Option<DhKeyPair>,
    current: Option<Exchange>,
    replies: BTreeMap<u8, BTreeMap<Vec<u8>, WireFrame>>,
    established: bool,
}

impl KeyExchange {
    fn new(group: Arc<DhGroup>) -> Self {
        KeyExchange {
            group,
            initiator: false,
            ch: None,
            link: 0,
            sender: 0,
            ksize: KeySize::Aes128,
            timeout_us: DEFAULT_KE_TIMEOUT_MS * 1000,
            retry_us: DEFAULT_KE_RETRY_MS * 1000,
            seq: 0,
            next_epoch: 0,
            spare: None,
            current: None,
            replies: BTreeMap::new(),
            established: false,
        }
    }

    fn encode_public(&self, public: &BigUint) -> Vec<u8> {
        let raw = public.to_bytes_be();
        let mut out = alloc::vec![0u8; self.group.element_len().saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }

    fn decode_public(&self, payload: &[u8]) -> Option<BigUint> {
        (payload.len() == self.group.element_len()).then(|| BigUint::from_bytes_be(payload))
    }

    fn frame(&mut self, msg_type: MsgType, epoch: u8, payload: Vec<u8>) -> WireFrame {
        let seq = self.seq;
        self.seq = self.seq.wrapping_add(1);
        WireFrame::new(msg_type, self.link, self.sender, epoch, seq, payload)
    }

    fn finish(
        &mut self,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
        status: &str,
        key: Option<(Vec<u8>, u8)>,
    ) -> Result<(), AlgError> {
        snap.set("STATUS", Value::String(status.into()))?;
        snap.set("QO", Value::Bool(key.is_some()))?;
        if let Some((key, epoch)) = key {
            snap.set("KEY", Value::Bytes(key))?;
            snap.set("EPOCH", Value::Uint(epoch as u64))?;
            self.established = true;
        }
        ctx.cancel_timer(RETRY_TIMER);
        ctx.cancel_timer(TIMEOUT_TIMER);
        ctx.emit("CNF");
        Ok(())
    }

    fn derive(&self, secret: &BigUint, epoch: u8, now_ms: u64) -> Vec<u8> {
        derive_session_key(
            secret,
            self.ksize,
            KeyContext {
                link_id: self.link,
                epoch,
            },
            now_ms,
        )
        .key
    }

    fn init(&mut self, snap: &mut Snapshot, ctx: &mut ServiceCtx<'_>) -> Result<(), AlgError> {
        self.initiator = snap.bool("QI")?;
        let ch = channel(snap, "ID")?;
        self.link = uint_u32(snap, "LID")?;
        self.sender = uint_u16(snap, "SID")?;
        self.ksize = KeySize::from_bits(snap.uint("KSIZE")?).map_err(|e| err(format!("{e}")))?;
        if let t @ 1.. = snap.uint("TIMEOUT")? {
            self.timeout_us = t * 1000;
        }
        if let r @ 1.. = snap.uint("RETRY")? {
            self.retry_us = r * 1000;
        }
        ctx.open(ch).map_err(transport_err)?;
        ctx.subscribe(ch, LinkFilter::only([self.link]))
            .map_err(transport_err)?;
        self.ch = Some(ch);
        if self.initiator {
            self.spare = Some(dh_keypair(&self.group, ctx.entropy()).map_err(|e| err(format!("{e}")))?);
        }
        snap.set("STATUS", Value::String(ke_status::IDLE.into()))?;
        ctx.emit("INITO");
        Ok(())
    }

    fn start(&mut self, snap: &mut Snapshot, ctx: &mut ServiceCtx<'_>) -> Result<(), AlgError> {
        let ch = self.ch.ok_or_else(|| err("REQ before INIT"))?;
        if !self.initiator {
            if !self.established {
                ctx.cancel_timer(TIMEOUT_TIMER);
                ctx.set_timer(self.timeout_us, TIMEOUT_TIMER);
            }
            return Ok(());
        }
        let keypair = match self.spare.take() {
            Some(kp) => kp,
            None => dh_keypair(&self.group, ctx.entropy()).map_err(|e| err(format!("{e}")))?,
        };
        let epoch = self.next_epoch;
        self.next_epoch = self.next_epoch.wrapping_add(1);
        let payload = self.encode_public(&keypair.public);
        let frame = self.frame(MsgType::KeInit, epoch, payload);
        ctx.publish(ch, &frame).map_err(transport_err)?;
        self.current = Some(Exchange { epoch, keypair, frame });
        ctx.cancel_timer(RETRY_TIMER);
        ctx.cancel_timer(TIMEOUT_TIMER);
        ctx.set_timer(self.retry_us, RETRY_TIMER);
        ctx.set_timer(self.timeout_us, TIMEOUT_TIMER);
        let _ = snap;
        Ok(())
    }

    fn on_frame(&mut self, frame: &WireFrame, snap: &mut Snapshot, ctx: &mut ServiceCtx<'_>) -> Result<(), AlgError> {
        match (self.initiator, frame.msg_type) {
            (true, MsgType::KeResp) => {
                let Some(ex) = self.current.as_ref().filter(|ex| ex.epoch == frame.epoch) else {
                    return Ok(());
                };
                let secret = self
                    .decode_public(&frame.payload)
                    .and_then(|peer| dh_shared_secret(&ex.keypair.private, &peer, &self.group).ok());
                let epoch = ex.epoch;
                self.current = None;
                match secret {
                    Some(s) => {
                        let key = self.derive(&s, epoch, ctx.now_ms());
                        self.finish(snap, ctx, ke_status::ESTABLISHED, Some((key, epoch)))
                    }
                    None => self.finish(snap, ctx, ke_status::PROTOCOL_ERROR, None),
                }
            }
            (false, MsgType::KeInit) => {
                let ch = self.ch.ok_or_else(|| err("frame before INIT"))?;
                if let Some(reply) = self.replies.get(&frame.epoch).and_then(|m| m.get(&frame.payload)) {
                    let reply = reply.clone();
                    return ctx.publish(ch, &reply).map_err(transport_err);
                }
                let Some(peer) = self.decode_public(&frame.payload) else {
                    return self.finish(snap, ctx, ke_status::PROTOCOL_ERROR, None);
                };
                let keypair = dh_keypair(&self.group, ctx.entropy()).map_err(|e| err(format!("{e}")))?;
                let secret = match dh_shared_secret(&keypair.private, &peer, &self.group) {
                    Ok(s) => s,
                    Err(_) => return self.finish(snap, ctx, ke_status::PROTOCOL_ERROR, None),
                };
                let payload = self.encode_public(&keypair.public);
                let reply = self.frame(MsgType::KeResp, frame.epoch, payload);
                ctx.publish(ch, &reply).map_err(transport_err)?;
                self.replies
                    .entry(frame.epoch)
                    .or_default()
                    .insert(frame.payload.clone(), reply);
                while self.replies.len() > RESPONDER_CACHE_EPOCHS {
                    // drop the epoch furthest behind the newest, modulo 256
                    let newest = frame.epoch;
                    let oldest = *self
                        .replies
                        .keys()
                        .max_by_key(|e| newest.wrapping_sub(**e))
                        .expect("non-empty");
                    self.replies.remove(&oldest);
                }
                let key = self.derive(&secret, frame.epoch, ctx.now_ms());
                self.finish(snap, ctx, ke_status::ESTABLISHED, Some((key, frame.epoch)))
            }
            _ => Ok(()),
        }
    }
}

impl Service for KeyExchange {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        match trigger {
            ServiceTrigger::Event("INIT") => self.init(snap, ctx),
            ServiceTrigger::Event("REQ") => self.start(snap, ctx),
            ServiceTrigger::Frame(d) => self.on_frame(&d.frame, snap, ctx),
            ServiceTrigger::Timer(RETRY_TIMER) => {
                if let (Some(ch), Some(ex)) = (self.ch, &self.current) {
                    ctx.publish(ch, &ex.frame).map_err(transport_err)?;
                    ctx.set_timer(self.retry_us, RETRY_TIMER);
                }
                Ok(())
            }
            ServiceTrigger::Timer(TIMEOUT_TIMER) => {
                self.current = None;
                self.finish(snap, ctx, ke_status::TIMEOUT, None)
            }
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------- algorithms

fn key_expansion(s: &mut Snapshot) -> Result<(), AlgError> {
    let ksize = KeySize::from_bits(s.uint("KSIZE")?).map_err(|e| err(format!("{e}")))?;
    let sched = aes_key_expansion(s.bytes("KEY")?, ksize).map_err(|e| err(format!("{e}")))?;
    s.set("EXPKEY", Value::Bytes(sched.as_bytes().to_vec()))?;
    let epoch = s.uint("EPOCH")?;
    s.set("EPOCH_O", Value::Uint(epoch))
}

fn schedule(bytes: &[u8]) -> Result<KeySchedule, AlgError> {
    KeySchedule::from_expanded(bytes).map_err(|e| err(format!("{e}")))
}

fn enc_set_key(s: &mut Snapshot) -> Result<(), AlgError> {
    let key = s.bytes("EXPKEY")?.to_vec();
    schedule(&key)?;
    let epoch = s.uint("KEPOCH")?;
    s.set("K", Value::Bytes(key))?;
    s.set("KE", Value::Uint(epoch))?;
    s.set("HASKEY", Value::Bool(true))
}

fn encrypt(s: &mut Snapshot) -> Result<(), AlgError> {
    let sched = schedule(s.bytes("K")?)?;
    let mut block = s.block("PT")?;
    encrypt_blocks(Mode::Ecb, &mut block, &sched).map_err(|e| err(format!("{e}")))?;
    let epoch = s.uint("KE")?;
    s.set("CT", Value::Bytes16(block))?;
    s.set("EPOCH_O", Value::Uint(epoch))
}

fn count(s: &mut Snapshot, var: &str) -> Result<(), AlgError> {
    let n = s.uint(var)?;
    s.set(var, Value::Uint(n + 1))
}

fn dec_set_key(s: &mut Snapshot) -> Result<(), AlgError> {
    let key = s.bytes("EXPKEY")?.to_vec();
    schedule(&key)?;
    let epoch = s.uint("KEPOCH")?;
    let held = s.uint("NKEYS")?;
    if held > 0 && s.uint("E0")? == epoch {
        return s.set("K0", Value::Bytes(key));
    }
    let (k0, e0) = (s.bytes("K0")?.to_vec(), s.uint("E0")?);
    s.set("K1", Value::Bytes(k0))?;
    s.set("E1", Value::Uint(e0))?;
    s.set("K0", Value::Bytes(key))?;
    s.set("E0", Value::Uint(epoch))?;
    s.set("NKEYS", Value::Uint((held + 1).min(2)))
}

fn decrypt(s: &mut Snapshot) -> Result<(), AlgError> {
    let epoch = s.uint("EPOCH")?;
    let held = s.uint("NKEYS")?;
    let slot = if held >= 1 && s.uint("E0")? == epoch {
        Some("K0")
    } else if held >= 2 && s.uint("E1")? == epoch {
        Some("K1")
    } else {
        None
    };
    let Some(slot) = slot else {
        s.set("OK", Value::Bool(false))?;
        return count(s, "DROPPED");
    };
    let sched = schedule(s.bytes(slot)?)?;
    let mut block = s.block("CT")?;
    decrypt_blocks(Mode::Ecb, &mut block, &sched).map_err(|e| err(format!("{e}")))?;
    s.set("PT", Value::Bytes16(block))?;
    s.set("OK", Value::Bool(true))
}

fn block_to_bool(s: &mut Snapshot) -> Result<(), AlgError> {
    match decode_bool(&s.block("IN")?) {
        Ok(b) => {
            s.set("OUT", Value::Bool(b))?;
            s.set("VALID", Value::Bool(true))
        }
        Err(_) => {
            s.set("VALID", Value::Bool(false))?;
            count(s, "REJECTED")
        }
    }
}

/// Bindings for every type in [`super::library::standard_types`].
pub fn standard_bindings(group: DhGroup) -> Bindings {
    let group = Arc::new(group);
    Bindings::new()
        .service(binding::E_CYCLE, |_| {
            Ok(Box::new(Cycle {
                period_us: 0,
                next_us: 0,
                running: false,
            }))
        })
        .service(binding::TIMESTAMP, |_| Ok(Box::new(TimeStamp)))
        .service(binding::BOOL_TO_BLOCK, |_| Ok(Box::new(BoolToBlock)))
        .service(binding::PUBLISH_DATA, |_| Ok(Box::new(Publish::default())))
        .service(binding::PUBLISH_TS, |_| {
            Ok(Box::new(Publish {
                ts: true,
                ..Publish::default()
            }))
        })
        .service(binding::SUBSCRIBE_DATA, |_| Ok(Box::new(Subscribe::default())))
        .service(binding::SUBSCRIBE_TS, |_| {
            Ok(Box::new(Subscribe {
                ts: true,
                ..Subscribe::default()
            }))
        })
        .service(binding::LATENCY_PROBE, |_| Ok(Box::new(Probe::default())))
        .service(binding::DH_KE, move |_| Ok(Box::new(KeyExchange::new(group.clone()))))
        .algorithm(alg::KEY_EXPANSION, key_expansion)
        .algorithm(alg::ENC_SET_KEY, enc_set_key)
        .algorithm(alg::ENCRYPT, encrypt)
        .algorithm(alg::ENC_DROP, |s| count(s, "DROPPED"))
        .algorithm(alg::DEC_SET_KEY, dec_set_key)
        .algorithm(alg::DECRYPT, decrypt)
        .algorithm(alg::BLOCK_TO_BOOL, block_to_bool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SeededEntropy;

    #[test]
    fn bool_encoding_round_trips_with_random_padding() {
        let mut rng = SeededEntropy::from_seed(1);
        for i in 0..1000 {
            let v = i % 3 == 0;
            let block = encode_bool(v, &mut rng).unwrap();
            assert_eq!(block[0], v as u8);
            assert_eq!(decode_bool(&block).unwrap(), v);
        }
        let a = encode_bool(true, &mut rng).unwrap();
        let b = encode_bool(true, &mut rng).unwrap();
        assert_ne!(a[1..], b[1..]);
        let mut bad = a;
        bad[0] = 7;
        assert!(decode_bool(&bad).is_err());
    }

    #[test]
    fn link_filter_text() {
        assert_eq!(link_filter("").unwrap(), LinkFilter::Any);
        assert_eq!(link_filter("1, 2").unwrap(), LinkFilter::only([1, 2]));
        assert!(link_filter("x").is_err());
    }

    fn dec_snapshot() -> Snapshot {
        Snapshot::for_type(&super::super::library::aes_decrypt())
    }

    #[test]
    fn decryptor_keeps_two_epochs() {
        let mut s = dec_snapshot();
        let keys: Vec<Vec<u8>> = (0..3u8)
            .map(|e| {
                aes_key_expansion(&[e; 16], KeySize::Aes128)
                    .unwrap()
                    .as_bytes()
                    .to_vec()
            })
            .collect();
        for (e, k) in keys.iter().enumerate() {
            s.set("EXPKEY", Value::Bytes(k.clone())).unwrap();
            s.set("KEPOCH", Value::Uint(e as u64)).unwrap();
            dec_set_key(&mut s).unwrap();
        }
        assert_eq!(s.uint("NKEYS").unwrap(), 2);
        assert_eq!((s.uint("E0").unwrap(), s.uint("E1").unwrap()), (2, 1));
        for (epoch, ok) in [(2, true), (1, true), (0, false)] {
            s.set("EPOCH", Value::Uint(epoch)).unwrap();
            decrypt(&mut s).unwrap();
            assert_eq!(s.bool("OK").unwrap(), ok, "epoch {epoch}");
        }
        assert_eq!(s.uint("DROPPED").unwrap(), 1);
    }

    #[test]
    fn decryptor_drops_before_first_key() {
        let mut s = dec_snapshot();
        decrypt(&mut s).unwrap();
        assert!(!s.bool("OK").unwrap());
        assert_eq!(s.uint("DROPPED").unwrap(), 1);
    }
}
