//! In-process fabric connecting simulated devices.
//!
//! Frames travel as encoded bytes so every delivery exercises the wire
//! codec. Delivery time is `publish time + latency (+ jitter)`, clamped so
//! a subscriber never sees frames from one channel out of order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::RefCell;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{ChannelId, ChannelStats, Delivery, LinkFilter, SubscriptionId, Transport, TransportError};
use crate::wire::{decode_frame, encode_frame, WireFrame};

/// One-way latency in microseconds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LatencyModel {
    pub default_us: u64,
    pub per_link_us: BTreeMap<u32, u64>,
    /// Uniform extra delay in `0..=jitter_us`.
    pub jitter_us: u64,
}

fn ms_to_us(ms: f64) -> u64 {
    assert!(
        ms >= 0.0 && ms.is_finite(),
        "latency must be a non-negative number of ms"
    );
    (ms * 1000.0 + 0.5) as u64
}

impl LatencyModel {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn fixed_ms(ms: f64) -> Self {
        LatencyModel {
            default_us: ms_to_us(ms),
            ..Self::default()
        }
    }

    pub fn with_link_ms(mut self, link: u32, ms: f64) -> Self {
        self.per_link_us.insert(link, ms_to_us(ms));
        self
    }

    pub fn with_jitter_ms(mut self, ms: f64) -> Self {
        self.jitter_us = ms_to_us(ms);
        self
    }

    fn base_us(&self, link: u32) -> u64 {
        self.per_link_us.get(&link).copied().unwrap_or(self.default_us)
    }
}

struct Sub {
    channel: ChannelId,
    owner: String,
    subscriber: String,
    filter: LinkFilter,
    last_at: u64,
}

#[derive(Default)]
struct Chan {
    open_by: BTreeSet<String>,
    subs: Vec<SubscriptionId>,
    stats: ChannelStats,
}

struct Pending {
    channel: ChannelId,
    sub: SubscriptionId,
    bytes: Rc<Vec<u8>>,
}

struct State {
    model: LatencyModel,
    rng: ChaCha20Rng,
    channels: BTreeMap<ChannelId, Chan>,
    subs: BTreeMap<SubscriptionId, Sub>,
    next_sub: u64,
    order: u64,
    pending: BTreeMap<String, BTreeMap<(u64, u64), Pending>>,
}

impl State {
    fn schedule(&mut self, channel: ChannelId, bytes: Vec<u8>, link: u32, now_us: u64) {
        let jitter = match self.model.jitter_us {
            0 => 0,
            j => self.rng.next_u64() % (j + 1),
        };
        let at = now_us + self.model.base_us(link) + jitter;
        let bytes = Rc::new(bytes);
        let chan = self.channels.entry(channel).or_default();
        chan.stats.published += 1;
        for sid in chan.subs.clone() {
            let sub = self.subs.get_mut(&sid).expect("listed subscription exists");
            let at = at.max(sub.last_at);
            sub.last_at = at;
            chan.stats.sent += 1;
            self.order += 1;
            self.pending.entry(sub.owner.clone()).or_default().insert(
                (at, self.order),
                Pending {
                    channel,
                    sub: sid,
                    bytes: bytes.clone(),
                },
            );
        }
    }

    fn deliver(&mut self, p: Pending) -> Option<Delivery> {
        let chan = self.channels.get_mut(&p.channel).expect("pending frame has a channel");
        let Some(sub) = self.subs.get(&p.sub) else {
            chan.stats.dropped += 1;
            return None;
        };
        let frame = match decode_frame(&p.bytes) {
            Ok(f) => f,
            Err(_) => {
                chan.stats.decode_errors += 1;
                chan.stats.dropped += 1;
                return None;
            }
        };
        if !sub.filter.accepts(frame.link_id) {
            chan.stats.dropped += 1;
            return None;
        }
        chan.stats.received += 1;
        Some(Delivery {
            subscription: p.sub,
            channel: p.channel,
            subscriber: sub.subscriber.clone(),
            frame,
        })
    }
}

/// Shared fabric; cloning yields another handle to the same network.
#[derive(Clone)]
pub struct LoopbackFabric(Rc<RefCell<State>>);

impl LoopbackFabric {
    pub fn new(model: LatencyModel, seed: u64) -> Self {
        LoopbackFabric(Rc::new(RefCell::new(State {
            model,
            rng: ChaCha20Rng::seed_from_u64(seed),
            channels: BTreeMap::new(),
            subs: BTreeMap::new(),
            next_sub: 0,
            order: 0,
            pending: BTreeMap::new(),
        })))
    }

    /// Attachment point for one device.
    pub fn port(&self, owner: &str) -> LoopbackPort {
        LoopbackPort {
            fabric: self.clone(),
            owner: owner.to_string(),
        }
    }

    pub fn stats(&self, channel: ChannelId) -> ChannelStats {
        self.0
            .borrow()
            .channels
            .get(&channel)
            .map(|c| c.stats)
            .unwrap_or_default()
    }

    pub fn channels(&self) -> Vec<(ChannelId, ChannelStats)> {
        self.0.borrow().channels.iter().map(|(id, c)| (*id, c.stats)).collect()
    }

    /// Earliest pending delivery across all devices.
    pub fn next_delivery(&self) -> Option<u64> {
        self.0
            .borrow()
            .pending
            .values()
            .filter_map(|q| q.keys().next().map(|(at, _)| *at))
            .min()
    }

    pub fn in_flight(&self) -> usize {
        self.0.borrow().pending.values().map(BTreeMap::len).sum()
    }

    /// Schedules arbitrary bytes as if published; used to exercise
    /// decode-error accounting.
    pub fn inject_raw(&self, channel: ChannelId, bytes: Vec<u8>, link: u32, now_us: u64) {
        self.0.borrow_mut().schedule(channel, bytes, link, now_us);
    }
}

pub struct LoopbackPort {
    fabric: LoopbackFabric,
    owner: String,
}

impl LoopbackPort {
    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn fabric(&self) -> &LoopbackFabric {
        &self.fabric
    }
}

impl Transport for LoopbackPort {
    fn open(&mut self, channel: ChannelId) -> Result<(), TransportError> {
        let mut st = self.fabric.0.borrow_mut();
        st.channels
            .entry(channel)
            .or_default()
            .open_by
            .insert(self.owner.clone());
        Ok(())
    }

    fn close(&mut self, channel: ChannelId) {
        let mut st = self.fabric.0.borrow_mut();
        let Some(chan) = st.channels.get_mut(&channel) else {
            return;
        };
        chan.open_by.remove(&self.owner);
        let owned: Vec<SubscriptionId> = chan.subs.clone();
        for sid in owned {
            if st.subs.get(&sid).is_some_and(|s| s.owner == self.owner) {
                st.subs.remove(&sid);
                if let Some(chan) = st.channels.get_mut(&channel) {
                    chan.subs.retain(|s| *s != sid);
                }
            }
        }
    }

    fn subscribe(
        &mut self,
        channel: ChannelId,
        subscriber: &str,
        filter: LinkFilter,
    ) -> Result<SubscriptionId, TransportError> {
        let mut st = self.fabric.0.borrow_mut();
        let st = &mut *st;
        let chan = st.channels.entry(channel).or_default();
        if !chan.open_by.contains(&self.owner) {
            return Err(TransportError::fault(channel, "channel not open"));
        }
        let dup = chan.subs.iter().any(|sid| {
            let s = &st.subs[sid];
            s.owner == self.owner && s.subscriber == subscriber
        });
        if dup {
            return Err(TransportError::DuplicateSubscription {
                channel,
                subscriber: subscriber.to_string(),
            });
        }
        let sid = SubscriptionId(st.next_sub);
        st.next_sub += 1;
        chan.subs.push(sid);
        st.subs.insert(
            sid,
            Sub {
                channel,
                owner: self.owner.clone(),
                subscriber: subscriber.to_string(),
                filter,
                last_at: 0,
            },
        );
        Ok(sid)
    }

    fn unsubscribe(&mut self, subscription: SubscriptionId) {
        let mut st = self.fabric.0.borrow_mut();
        if let Some(sub) = st.subs.remove(&subscription) {
            if let Some(chan) = st.channels.get_mut(&sub.channel) {
                chan.subs.retain(|s| *s != subscription);
            }
        }
    }

    fn publish(&mut self, channel: ChannelId, frame: &WireFrame, now_us: u64) -> Result<(), TransportError> {
        let bytes = encode_frame(frame)?;
        let mut st = self.fabric.0.borrow_mut();
        let open = st
            .channels
            .get(&channel)
            .is_some_and(|c| c.open_by.contains(&self.owner));
        if !open {
            return Err(TransportError::fault(channel, "channel not open"));
        }
        st.schedule(channel, bytes, frame.link_id, now_us);
        Ok(())
    }

    fn poll(&mut self, now_us: u64) -> Vec<Delivery> {
        let mut st = self.fabric.0.borrow_mut();
        let Some(queue) = st.pending.get_mut(&self.owner) else {
            return Vec::new();
        };
        let later = queue.split_off(&(now_us.saturating_add(1), 0));
        let due = core::mem::replace(queue, later);
        due.into_values().filter_map(|p| st.deliver(p)).collect()
    }

    fn next_delivery(&self) -> Option<u64> {
        let st = self.fabric.0.borrow();
        st.pending.get(&self.owner)?.keys().next().map(|(at, _)| *at)
    }

    fn stats(&self, channel: ChannelId) -> ChannelStats {
        self.fabric.stats(channel)
    }
}
