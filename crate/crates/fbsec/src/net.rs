//! Host bindings: UDP multicast transport, wall clock and OS entropy.

use std::collections::BTreeMap;
use std::io;
use std::mem::MaybeUninit;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4};
use std::time::Instant;

use socket2::{Domain, Protocol, Socket, Type};

use fbsec_core::crypto::{CryptoError, EntropySource};
use fbsec_core::runtime::clock::{Clock, ClockMode};
use fbsec_core::transport::{ChannelId, ChannelStats, Delivery, LinkFilter, SubscriptionId, Transport, TransportError};
use fbsec_core::wire::{decode_frame, encode_frame, WireFrame};

/// Monotonic wall clock starting at zero.
#[derive(Clone, Copy, Debug)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        SystemClock(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_us(&self) -> u64 {
        self.0.elapsed().as_micros() as u64
    }

    fn mode(&self) -> ClockMode {
        ClockMode::Real
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OsEntropy;

impl EntropySource for OsEntropy {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), CryptoError> {
        getrandom::fill(buf).map_err(|_| CryptoError::EntropyExhausted)
    }
}

struct Sub {
    subscriber: String,
    filter: LinkFilter,
}

struct Chan {
    socket: Socket,
    subs: BTreeMap<SubscriptionId, Sub>,
    stats: ChannelStats,
}

/// Largest datagram read; frames are far smaller.
const MAX_DATAGRAM: usize = 2048;

/// One multicast socket per open channel, TTL 1, loopback on, so
/// devices on the same host (and the sender itself) see each frame.
pub struct UdpTransport {
    interface: Ipv4Addr,
    chans: BTreeMap<ChannelId, Chan>,
    next_sub: u64,
}

impl UdpTransport {
    /// `interface` selects the NIC for joins and sends; `UNSPECIFIED`
    /// lets the kernel choose.
    pub fn new(interface: Ipv4Addr) -> Self {
        UdpTransport {
            interface,
            chans: BTreeMap::new(),
            next_sub: 0,
        }
    }

    fn socket(&self, ch: ChannelId) -> io::Result<Socket> {
        let s = Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::UDP))?;
        s.set_reuse_address(true)?;
        s.set_reuse_port(true)?;
        s.bind(&SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, ch.port).into())?;
        s.join_multicast_v4(&ch.group, &self.interface)?;
        s.set_multicast_if_v4(&self.interface)?;
        s.set_multicast_ttl_v4(1)?;
        s.set_multicast_loop_v4(true)?;
        s.set_nonblocking(true)?;
        Ok(s)
    }

    fn drain(chan: &mut Chan, channel: ChannelId, out: &mut Vec<Delivery>) {
        let mut buf = [MaybeUninit::<u8>::uninit(); MAX_DATAGRAM];
        loop {
            let n = match chan.socket.recv(&mut buf) {
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => return,
            };
            // SAFETY: recv initialised the first n bytes.
            let bytes: Vec<u8> = buf[..n].iter().map(|b| unsafe { b.assume_init() }).collect();
            let frame = match decode_frame(&bytes) {
                Ok(f) => f,
                Err(_) => {
                    chan.stats.decode_errors += 1;
                    chan.stats.dropped += 1;
                    continue;
                }
            };
            for (sid, sub) in &chan.subs {
                if sub.filter.accepts(frame.link_id) {
                    chan.stats.received += 1;
                    out.push(Delivery {
                        subscription: *sid,
                        channel,
                        subscriber: sub.subscriber.clone(),
                        frame: frame.clone(),
                    });
                } else {
                    chan.stats.dropped += 1;
                }
            }
        }
    }
}

impl Transport for UdpTransport {
    fn open(&mut self, channel: ChannelId) -> Result<(), TransportError> {
        if self.chans.contains_key(&channel) {
            return Ok(());
        }
        let socket = self
            .socket(channel)
            .map_err(|e| TransportError::fault(channel, e.to_string()))?;
        self.chans.insert(
            channel,
            Chan {
                socket,
                subs: BTreeMap::new(),
                stats: ChannelStats::default(),
            },
        );
        Ok(())
    }

    fn close(&mut self, channel: ChannelId) {
        if let Some(c) = self.chans.remove(&channel) {
            let _ = c.socket.leave_multicast_v4(&channel.group, &self.interface);
        }
    }

    fn subscribe(
        &mut self,
        channel: ChannelId,
        subscriber: &str,
        filter: LinkFilter,
    ) -> Result<SubscriptionId, TransportError> {
        let chan = self
            .chans
            .get_mut(&channel)
            .ok_or_else(|| TransportError::fault(channel, "channel not open"))?;
        if chan.subs.values().any(|s| s.subscriber == subscriber) {
            return Err(TransportError::DuplicateSubscription {
                channel,
                subscriber: subscriber.to_string(),
            });
        }
        let sid = SubscriptionId(self.next_sub);
        self.next_sub += 1;
        chan.subs.insert(
            sid,
            Sub {
                subscriber: subscriber.to_string(),
                filter,
            },
        );
        Ok(sid)
    }

    fn unsubscribe(&mut self, subscription: SubscriptionId) {
        for c in self.chans.values_mut() {
            c.subs.remove(&subscription);
        }
    }

    fn publish(&mut self, channel: ChannelId, frame: &WireFrame, _now_us: u64) -> Result<(), TransportError> {
        let bytes = encode_frame(frame)?;
        let chan = self
            .chans
            .get_mut(&channel)
            .ok_or_else(|| TransportError::fault(channel, "channel not open"))?;
        chan.stats.published += 1;
        let dest: SocketAddr = SocketAddrV4::new(channel.group, channel.port).into();
        chan.socket
            .send_to(&bytes, &dest.into())
            .map_err(|e| TransportError::fault(channel, e.to_string()))?;
        chan.stats.sent += 1;
        Ok(())
    }

    fn poll(&mut self, _now_us: u64) -> Vec<Delivery> {
        let mut out = Vec::new();
        for (id, chan) in &mut self.chans {
            Self::drain(chan, *id, &mut out);
        }
        out
    }

    fn next_delivery(&self) -> Option<u64> {
        None
    }

    fn stats(&self, channel: ChannelId) -> ChannelStats {
        self.chans.get(&channel).map(|c| c.stats).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_clock_is_monotonic() {
        let c = SystemClock::new();
        let a = c.now_us();
        std::thread::sleep(std::time::Duration::from_millis(2));
        assert!(c.now_us() >= a + 2000);
        assert_eq!(c.mode(), ClockMode::Real);
    }

    #[test]
    fn os_entropy_fills() {
        let mut a = [0u8; 32];
        let mut b = [0u8; 32];
        OsEntropy.fill(&mut a).unwrap();
        OsEntropy.fill(&mut b).unwrap();
        assert_ne!(a, b);
    }
}
