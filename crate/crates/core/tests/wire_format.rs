use fbsec_core::wire::*;
use proptest::prelude::*;

#[test]
fn golden_data_frame() {
    let payload: Vec<u8> = (0x10..0x20).collect();
    let frame = WireFrame::new(MsgType::Data, 1, 0, 0, 0, payload);
    let bytes = encode_frame(&frame).unwrap();
    #[rustfmt::skip]
    let expected: [u8; 33] = [
        0xFB, 0x5E,             // magic
        0x01,                   // version
        0x01,                   // DATA
        0x00, 0x00, 0x00, 0x01, // link_id
        0x00, 0x00,             // sender_id
        0x00,                   // key_epoch
        0x00, 0x00, 0x00, 0x00, // seq
        0x00, 0x10,             // payload_len = 16
        0x10, 0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17,
        0x18, 0x19, 0x1A, 0x1B, 0x1C, 0x1D, 0x1E, 0x1F,
    ];
    assert_eq!(bytes, expected);
    assert_eq!(decode_frame(&expected).unwrap(), frame);
}

#[test]
fn golden_ts_frame_fields_are_big_endian() {
    let frame = WireFrame::new(
        MsgType::Ts,
        0x0102_0304,
        0x0506,
        7,
        0x0809_0A0B,
        1000u64.to_be_bytes().to_vec(),
    );
    let bytes = encode_frame(&frame).unwrap();
    assert_eq!(
        bytes,
        [
            0xFB, 0x5E, 0x01, 0x04, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0A, 0x0B, 0x00, 0x08, 0, 0,
            0, 0, 0, 0, 0x03, 0xE8
        ]
    );
}

#[test]
fn declared_length_beyond_buffer_is_truncated() {
    let mut bytes = vec![0xFB, 0x5E, 0x01, 0x02, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0];
    bytes.extend_from_slice(&[0x01, 0x00]); // claims 256 bytes
    bytes.extend_from_slice(&[0u8; 10]);
    assert_eq!(decode_frame(&bytes).unwrap_err().reason, DecodeReason::Truncated);
}

pub fn frame_strategy() -> impl Strategy<Value = WireFrame> {
    let payload = prop_oneof![
        (0usize..5)
            .prop_flat_map(|n| prop::collection::vec(any::<u8>(), n * 16))
            .prop_map(|p| (MsgType::Data, p)),
        prop::collection::vec(any::<u8>(), 0..300).prop_map(|p| (MsgType::KeInit, p)),
        prop::collection::vec(any::<u8>(), 0..300).prop_map(|p| (MsgType::KeResp, p)),
        any::<u64>().prop_map(|t| (MsgType::Ts, t.to_be_bytes().to_vec())),
    ];
    (payload, any::<u32>(), any::<u16>(), any::<u8>(), any::<u32>())
        .prop_map(|((t, p), link, sender, epoch, seq)| WireFrame::new(t, link, sender, epoch, seq, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn encode_decode_inverse(frame in frame_strategy()) {
        let bytes = encode_frame(&frame).unwrap();
        prop_assert_eq!(bytes.len(), 17 + frame.payload.len());
        prop_assert_eq!(&bytes[..4], &[0xFB, 0x5E, 0x01, frame.msg_type as u8][..]);
        prop_assert_eq!(decode_frame(&bytes).unwrap(), frame);
    }
}

proptest! {
    #[test]
    fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode_frame(&bytes);
    }
}
