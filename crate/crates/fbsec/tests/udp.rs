//! Multicast over the host network stack. Hosts without a multicast
//! route (some containers) report it and skip the exchange.

use std::net::Ipv4Addr;
use std::time::{Duration, Instant};

use fbsec::net::UdpTransport;
use fbsec_core::transport::{ChannelId, LinkFilter, Transport};
use fbsec_core::wire::{MsgType, WireFrame};

fn poll_until(t: &mut UdpTransport, want: usize) -> Vec<fbsec_core::transport::Delivery> {
    let mut got = Vec::new();
    let end = Instant::now() + Duration::from_secs(2);
    while got.len() < want && Instant::now() < end {
        got.extend(t.poll(0));
        std::thread::sleep(Duration::from_millis(5));
    }
    got
}

#[test]
fn frames_cross_between_two_transports_with_filters() {
    let ch = ChannelId::new(Ipv4Addr::new(239, 0, 0, 77), 61_777);
    let mut tx = UdpTransport::new(Ipv4Addr::UNSPECIFIED);
    let mut rx = UdpTransport::new(Ipv4Addr::UNSPECIFIED);
    if let Err(e) = tx.open(ch).and_then(|_| rx.open(ch)) {
        eprintln!("multicast unavailable, skipping: {e}");
        return;
    }
    rx.subscribe(ch, "one", LinkFilter::only([1])).unwrap();
    rx.subscribe(ch, "any", LinkFilter::Any).unwrap();
    assert!(rx.subscribe(ch, "one", LinkFilter::Any).is_err());

    let f1 = WireFrame::new(MsgType::Data, 1, 1, 0, 7, vec![0xab; 16]);
    let f2 = WireFrame::new(MsgType::Data, 2, 1, 0, 8, vec![0xcd; 16]);
    if let Err(e) = tx.publish(ch, &f1, 0).and_then(|_| tx.publish(ch, &f2, 0)) {
        eprintln!("multicast send failed, skipping: {e}");
        return;
    }
    let got = poll_until(&mut rx, 3);
    if got.is_empty() {
        eprintln!("no multicast loopback on this host, skipping");
        return;
    }
    assert_eq!(got.len(), 3, "{got:?}");
    assert!(got.iter().any(|d| d.subscriber == "one" && d.frame == f1));
    assert_eq!(got.iter().filter(|d| d.subscriber == "any").count(), 2);
    let s = rx.stats(ch);
    assert_eq!((s.received, s.dropped), (3, 1));
    assert_eq!(tx.stats(ch).sent, 2);
}

#[test]
fn unopened_channels_are_faults() {
    let ch = ChannelId::new(Ipv4Addr::new(239, 0, 0, 78), 61_778);
    let mut t = UdpTransport::new(Ipv4Addr::UNSPECIFIED);
    assert!(t.subscribe(ch, "x", LinkFilter::Any).is_err());
    assert!(t
        .publish(ch, &WireFrame::new(MsgType::Data, 1, 1, 0, 0, vec![0; 16]), 0)
        .is_err());
    assert!(t.poll(0).is_empty());
    assert_eq!(t.next_delivery(), None);
}
