//! Publish/subscribe channels carrying [`WireFrame`]s.

mod loopback;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;
use core::str::FromStr;

use crate::wire::{EncodeError, WireFrame};

pub use loopback::{LatencyModel, LoopbackFabric, LoopbackPort};

/// Multicast group and UDP port identifying one channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId {
    pub group: Ipv4Addr,
    pub port: u16,
}

impl ChannelId {
    pub const fn new(group: Ipv4Addr, port: u16) -> Self {
        ChannelId { group, port }
    }

    /// Same group, port shifted by `delta`; `None` past 65535.
    pub fn offset(self, delta: u32) -> Option<ChannelId> {
        let port = u16::try_from(self.port as u32 + delta).ok()?;
        Some(ChannelId {
            group: self.group,
            port,
        })
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group, self.port)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ChannelIdError {
    #[error("expected GROUP:PORT")]
    Shape,
    #[error("invalid IPv4 group address")]
    Group,
    #[error("{0} is not a multicast address")]
    NotMulticast(Ipv4Addr),
    #[error("port must be 1024..=65535")]
    Port,
}

impl FromStr for ChannelId {
    type Err = ChannelIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (group, port) = s.rsplit_once(':').ok_or(ChannelIdError::Shape)?;
        let group: Ipv4Addr = group.parse().map_err(|_| ChannelIdError::Group)?;
        if !group.is_multicast() {
            return Err(ChannelIdError::NotMulticast(group));
        }
        let port: u16 = port.parse().map_err(|_| ChannelIdError::Port)?;
        if port < 1024 {
            return Err(ChannelIdError::Port);
        }
        Ok(ChannelId { group, port })
    }
}

/// Which link ids a subscription accepts. Frames for other links on a
/// shared channel are dropped and counted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum LinkFilter {
    #[default]
    Any,
    Links(BTreeSet<u32>),
}

impl LinkFilter {
    pub fn only(links: impl IntoIterator<Item = u32>) -> Self {
        LinkFilter::Links(links.into_iter().collect())
    }

    pub fn accepts(&self, link: u32) -> bool {
        match self {
            LinkFilter::Any => true,
            LinkFilter::Links(set) => set.contains(&link),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubscriptionId(pub u64);

/// A frame handed to one subscriber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub subscription: SubscriptionId,
    pub channel: ChannelId,
    pub subscriber: String,
    pub frame: WireFrame,
}

/// Per-channel counters. `sent` counts copies scheduled for subscribers;
/// once nothing is in flight, `sent == received + dropped`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChannelStats {
    pub published: u64,
    pub sent: u64,
    pub received: u64,
    pub dropped: u64,
    pub decode_errors: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("channel {channel} fault: {reason}")]
    ChannelFault { channel: ChannelId, reason: String },
    #[error("{subscriber} already subscribed to {channel}")]
    DuplicateSubscription { channel: ChannelId, subscriber: String },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

impl TransportError {
    pub fn fault(channel: ChannelId, reason: impl Into<String>) -> Self {
        TransportError::ChannelFault {
            channel,
            reason: reason.into(),
        }
    }
}

/// One device's view of the network. Times are microseconds on the
/// device clock.
pub trait Transport {
    fn open(&mut self, channel: ChannelId) -> Result<(), TransportError>;
    fn close(&mut self, channel: ChannelId);
    fn subscribe(
        &mut self,
        channel: ChannelId,
        subscriber: &str,
        filter: LinkFilter,
    ) -> Result<SubscriptionId, TransportError>;
    fn unsubscribe(&mut self, subscription: SubscriptionId);
    fn publish(&mut self, channel: ChannelId, frame: &WireFrame, now_us: u64) -> Result<(), TransportError>;
    /// Frames due at or before `now_us`, in delivery order.
    fn poll(&mut self, now_us: u64) -> Vec<Delivery>;
    /// Earliest pending delivery time, if known.
    fn next_delivery(&self) -> Option<u64>;
    fn stats(&self, channel: ChannelId) -> ChannelStats;
}

/// Transport for devices with no network connections.
#[derive(Debug, Default)]
pub struct NullTransport;

impl Transport for NullTransport {
    fn open(&mut self, channel: ChannelId) -> Result<(), TransportError> {
        Err(TransportError::fault(channel, "no network attached"))
    }
    fn close(&mut self, _: ChannelId) {}
    fn subscribe(&mut self, channel: ChannelId, _: &str, _: LinkFilter) -> Result<SubscriptionId, TransportError> {
        Err(TransportError::fault(channel, "no network attached"))
    }
    fn unsubscribe(&mut self, _: SubscriptionId) {}
    fn publish(&mut self, channel: ChannelId, _: &WireFrame, _: u64) -> Result<(), TransportError> {
        Err(TransportError::fault(channel, "no network attached"))
    }
    fn poll(&mut self, _: u64) -> Vec<Delivery> {
        Vec::new()
    }
    fn next_delivery(&self) -> Option<u64> {
        None
    }
    fn stats(&self, _: ChannelId) -> ChannelStats {
        ChannelStats::default()
    }
}
