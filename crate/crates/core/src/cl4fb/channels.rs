//! Deterministic channel allocation for lowered links.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::ParamValue;
use crate::transport::ChannelId;

/// Ports used by one link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkChannels {
    pub data: ChannelId,
    pub ke: ChannelId,
    pub ts: ChannelId,
}

/// What the allocator needs to know about a link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelRequest {
    pub target_device: String,
    pub alg: String,
    pub keysize: Option<u64>,
    pub rekey_ms: Option<u64>,
    /// Explicit `channel` annotation argument; only links naming the same
    /// channel may share one.
    pub channel: Option<ParamValue>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelAssignment {
    pub channels: LinkChannels,
    /// Index of the first link whose data channel this link reuses.
    pub shared_with: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("link #{link} needs ports beyond 65535 (base {base})")]
pub struct PortOverflow {
    pub link: usize,
    pub base: ChannelId,
}

fn shares(a: &ChannelRequest, b: &ChannelRequest) -> bool {
    a.channel.is_some()
        && a.channel == b.channel
        && a.target_device == b.target_device
        && a.alg == b.alg
        && a.keysize == b.keysize
        && a.rekey_ms == b.rekey_ms
}

/// Link `i` gets ports `base + 3i` (data), `+1` (key exchange) and `+2`
/// (timestamps). A link reuses the data channel of the first earlier link
/// with identical parameters, the same target device and the same explicit
/// `channel` argument.
pub fn allocate_channels(requests: &[ChannelRequest], base: ChannelId) -> Result<Vec<ChannelAssignment>, PortOverflow> {
    let mut out: Vec<ChannelAssignment> = Vec::with_capacity(requests.len());
    for (i, req) in requests.iter().enumerate() {
        let at = |k: u32| {
            u32::try_from(i)
                .ok()
                .and_then(|i| i.checked_mul(3))
                .and_then(|d| d.checked_add(k))
                .and_then(|d| base.offset(d))
                .ok_or(PortOverflow { link: i, base })
        };
        let mut channels = LinkChannels {
            data: at(0)?,
            ke: at(1)?,
            ts: at(2)?,
        };
        let shared_with = requests[..i].iter().position(|prev| shares(prev, req));
        if let Some(j) = shared_with {
            channels.data = out[j].channels.data;
        }
        out.push(ChannelAssignment { channels, shared_with });
    }
    Ok(out)
}
