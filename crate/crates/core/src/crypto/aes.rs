//! AES (Rijndael with 128-bit blocks) for 128, 192 and 256-bit keys.
//!
//! Key expansion is a separate step producing a [`KeySchedule`] that is
//! reused for every block of a session. Only ECB is offered as a block
//! mode: identical plaintext blocks encrypt to identical ciphertext
//! blocks under one key, so callers must randomise their plaintext
//! (see the boolean encoding in the runtime) if that leaks information.

use core::fmt;

use super::CryptoError;

pub const BLOCK_LEN: usize = 16;
const MAX_SCHEDULE: usize = 240;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeySize {
    Aes128,
    Aes192,
    Aes256,
}

impl KeySize {
    pub const ALL: [KeySize; 3] = [KeySize::Aes128, KeySize::Aes192, KeySize::Aes256];

    pub fn from_bits(bits: u64) -> Result<KeySize, CryptoError> {
        match bits {
            128 => Ok(KeySize::Aes128),
            192 => Ok(KeySize::Aes192),
            256 => Ok(KeySize::Aes256),
            other => Err(CryptoError::InvalidKeySize(other)),
        }
    }

    pub fn bits(self) -> u64 {
        match self {
            KeySize::Aes128 => 128,
            KeySize::Aes192 => 192,
            KeySize::Aes256 => 256,
        }
    }

    pub fn key_len(self) -> usize {
        self.bits() as usize / 8
    }

    pub fn rounds(self) -> usize {
        match self {
            KeySize::Aes128 => 10,
            KeySize::Aes192 => 12,
            KeySize::Aes256 => 14,
        }
    }

    /// Length in bytes of the expanded key: one 16-byte round key per
    /// round plus the initial whitening key.
    pub fn schedule_len(self) -> usize {
        BLOCK_LEN * (self.rounds() + 1)
    }

    fn from_schedule_len(len: usize) -> Option<KeySize> {
        KeySize::ALL.into_iter().find(|k| k.schedule_len() == len)
    }
}

impl fmt::Display for KeySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AES{}", self.bits())
    }
}

/// Block mode. ECB is the only mode implemented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Ecb,
}

/// Expanded AES key.
#[derive(Clone, PartialEq, Eq)]
pub struct KeySchedule {
    ksize: KeySize,
    expanded: [u8; MAX_SCHEDULE],
}

impl fmt::Debug for KeySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeySchedule")
            .field("ksize", &self.ksize)
            .finish_non_exhaustive()
    }
}

impl KeySchedule {
    pub fn ksize(&self) -> KeySize {
        self.ksize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.expanded[..self.ksize.schedule_len()]
    }

    /// Rebuilds a schedule carried as raw bytes (e.g. over a data port).
    /// The length selects the key size; the tail must be the expansion of
    /// the leading key bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<KeySchedule, CryptoError> {
        let ksize = KeySize::from_schedule_len(bytes.len()).ok_or(CryptoError::ScheduleLength(bytes.len()))?;
        let sched = aes_key_expansion(&bytes[..ksize.key_len()], ksize)?;
        if sched.as_bytes() != bytes {
            return Err(CryptoError::ScheduleMismatch);
        }
        Ok(sched)
    }

    /// Wraps bytes produced earlier by [`aes_key_expansion`], checking only
    /// the length. Use [`KeySchedule::from_bytes`] for untrusted input.
    pub fn from_expanded(bytes: &[u8]) -> Result<KeySchedule, CryptoError> {
        let ksize = KeySize::from_schedule_len(bytes.len()).ok_or(CryptoError::ScheduleLength(bytes.len()))?;
        let mut expanded = [0u8; MAX_SCHEDULE];
        expanded[..bytes.len()].copy_from_slice(bytes);
        Ok(KeySchedule { ksize, expanded })
    }

    fn round_key(&self, round: usize) -> &[u8] {
        &self.expanded[round * BLOCK_LEN..(round + 1) * BLOCK_LEN]
    }
}

#[rustfmt::skip]
const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

#[rustfmt::skip]
const INV_SBOX: [u8; 256] = [
    0x52, 0x09, 0x6a, 0xd5, 0x30, 0x36, 0xa5, 0x38, 0xbf, 0x40, 0xa3, 0x9e, 0x81, 0xf3, 0xd7, 0xfb,
    0x7c, 0xe3, 0x39, 0x82, 0x9b, 0x2f, 0xff, 0x87, 0x34, 0x8e, 0x43, 0x44, 0xc4, 0xde, 0xe9, 0xcb,
    0x54, 0x7b, 0x94, 0x32, 0xa6, 0xc2, 0x23, 0x3d, 0xee, 0x4c, 0x95, 0x0b, 0x42, 0xfa, 0xc3, 0x4e,
    0x08, 0x2e, 0xa1, 0x66, 0x28, 0xd9, 0x24, 0xb2, 0x76, 0x5b, 0xa2, 0x49, 0x6d, 0x8b, 0xd1, 0x25,
    0x72, 0xf8, 0xf6, 0x64, 0x86, 0x68, 0x98, 0x16, 0xd4, 0xa4, 0x5c, 0xcc, 0x5d, 0x65, 0xb6, 0x92,
    0x6c, 0x70, 0x48, 0x50, 0xfd, 0xed, 0xb9, 0xda, 0x5e, 0x15, 0x46, 0x57, 0xa7, 0x8d, 0x9d, 0x84,
    0x90, 0xd8, 0xab, 0x00, 0x8c, 0xbc, 0xd3, 0x0a, 0xf7, 0xe4, 0x58, 0x05, 0xb8, 0xb3, 0x45, 0x06,
    0xd0, 0x2c, 0x1e, 0x8f, 0xca, 0x3f, 0x0f, 0x02, 0xc1, 0xaf, 0xbd, 0x03, 0x01, 0x13, 0x8a, 0x6b,
    0x3a, 0x91, 0x11, 0x41, 0x4f, 0x67, 0xdc, 0xea, 0x97, 0xf2, 0xcf, 0xce, 0xf0, 0xb4, 0xe6, 0x73,
    0x96, 0xac, 0x74, 0x22, 0xe7, 0xad, 0x35, 0x85, 0xe2, 0xf9, 0x37, 0xe8, 0x1c, 0x75, 0xdf, 0x6e,
    0x47, 0xf1, 0x1a, 0x71, 0x1d, 0x29, 0xc5, 0x89, 0x6f, 0xb7, 0x62, 0x0e, 0xaa, 0x18, 0xbe, 0x1b,
    0xfc, 0x56, 0x3e, 0x4b, 0xc6, 0xd2, 0x79, 0x20, 0x9a, 0xdb, 0xc0, 0xfe, 0x78, 0xcd, 0x5a, 0xf4,
    0x1f, 0xdd, 0xa8, 0x33, 0x88, 0x07, 0xc7, 0x31, 0xb1, 0x12, 0x10, 0x59, 0x27, 0x80, 0xec, 0x5f,
    0x60, 0x51, 0x7f, 0xa9, 0x19, 0xb5, 0x4a, 0x0d, 0x2d, 0xe5, 0x7a, 0x9f, 0x93, 0xc9, 0x9c, 0xef,
    0xa0, 0xe0, 0x3b, 0x4d, 0xae, 0x2a, 0xf5, 0xb0, 0xc8, 0xeb, 0xbb, 0x3c, 0x83, 0x53, 0x99, 0x61,
    0x17, 0x2b, 0x04, 0x7e, 0xba, 0x77, 0xd6, 0x26, 0xe1, 0x69, 0x14, 0x63, 0x55, 0x21, 0x0c, 0x7d,
];

// x^(i-1) in GF(2^8), first byte of Rcon[i].
const RCON: [u8; 10] = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36];

#[inline]
fn xtime(b: u8) -> u8 {
    (b << 1) ^ if b & 0x80 != 0 { 0x1b } else { 0 }
}

#[inline]
fn gmul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    p
}

/// Expands `key` into the full round-key schedule for `ksize`.
pub fn aes_key_expansion(key: &[u8], ksize: KeySize) -> Result<KeySchedule, CryptoError> {
    if key.len() != ksize.key_len() {
        return Err(CryptoError::KeyLength {
            expected: ksize.key_len(),
            got: key.len(),
        });
    }
    let nk = key.len() / 4;
    let total_words = 4 * (ksize.rounds() + 1);
    let mut w = [0u8; MAX_SCHEDULE];
    w[..key.len()].copy_from_slice(key);

    for i in nk..total_words {
        let mut temp = [0u8; 4];
        temp.copy_from_slice(&w[(i - 1) * 4..i * 4]);
        if i % nk == 0 {
            temp.rotate_left(1);
            for b in &mut temp {
                *b = SBOX[*b as usize];
            }
            temp[0] ^= RCON[i / nk - 1];
        } else if nk > 6 && i % nk == 4 {
            for b in &mut temp {
                *b = SBOX[*b as usize];
            }
        }
        for j in 0..4 {
            w[i * 4 + j] = w[(i - nk) * 4 + j] ^ temp[j];
        }
    }
    Ok(KeySchedule { ksize, expanded: w })
}

// State is column-major: byte (row r, column c) lives at index 4c + r.

fn add_round_key(state: &mut [u8; 16], rk: &[u8]) {
    for (s, k) in state.iter_mut().zip(rk) {
        *s ^= k;
    }
}

fn sub_bytes(state: &mut [u8; 16], table: &[u8; 256]) {
    for s in state.iter_mut() {
        *s = table[*s as usize];
    }
}

fn shift_rows(state: &mut [u8; 16]) {
    let old = *state;
    for r in 1..4 {
        for c in 0..4 {
            state[4 * c + r] = old[4 * ((c + r) % 4) + r];
        }
    }
}

fn inv_shift_rows(state: &mut [u8; 16]) {
    let old = *state;
    for r in 1..4 {
        for c in 0..4 {
            state[4 * ((c + r) % 4) + r] = old[4 * c + r];
        }
    }
}

fn mix_columns(state: &mut [u8; 16]) {
    for col in state.chunks_exact_mut(4) {
        let [a0, a1, a2, a3] = [col[0], col[1], col[2], col[3]];
        col[0] = xtime(a0) ^ (xtime(a1) ^ a1) ^ a2 ^ a3;
        col[1] = a0 ^ xtime(a1) ^ (xtime(a2) ^ a2) ^ a3;
        col[2] = a0 ^ a1 ^ xtime(a2) ^ (xtime(a3) ^ a3);
        col[3] = (xtime(a0) ^ a0) ^ a1 ^ a2 ^ xtime(a3);
    }
}

fn inv_mix_columns(state: &mut [u8; 16]) {
    for col in state.chunks_exact_mut(4) {
        let [a0, a1, a2, a3] = [col[0], col[1], col[2], col[3]];
        col[0] = gmul(a0, 14) ^ gmul(a1, 11) ^ gmul(a2, 13) ^ gmul(a3, 9);
        col[1] = gmul(a0, 9) ^ gmul(a1, 14) ^ gmul(a2, 11) ^ gmul(a3, 13);
        col[2] = gmul(a0, 13) ^ gmul(a1, 9) ^ gmul(a2, 14) ^ gmul(a3, 11);
        col[3] = gmul(a0, 11) ^ gmul(a1, 13) ^ gmul(a2, 9) ^ gmul(a3, 14);
    }
}

/// Forward cipher on one block.
pub fn aes_encrypt_block(pt: &[u8; 16], sched: &KeySchedule) -> [u8; 16] {
    let rounds = sched.ksize.rounds();
    let mut state = *pt;
    add_round_key(&mut state, sched.round_key(0));
    for round in 1..rounds {
        sub_bytes(&mut state, &SBOX);
        shift_rows(&mut state);
        mix_columns(&mut state);
        add_round_key(&mut state, sched.round_key(round));
    }
    sub_bytes(&mut state, &SBOX);
    shift_rows(&mut state);
    add_round_key(&mut state, sched.round_key(rounds));
    state
}

/// Inverse cipher on one block.
pub fn aes_decrypt_block(ct: &[u8; 16], sched: &KeySchedule) -> [u8; 16] {
    let rounds = sched.ksize.rounds();
    let mut state = *ct;
    add_round_key(&mut state, sched.round_key(rounds));
    for round in (1..rounds).rev() {
        inv_shift_rows(&mut state);
        sub_bytes(&mut state, &INV_SBOX);
        add_round_key(&mut state, sched.round_key(round));
        inv_mix_columns(&mut state);
    }
    inv_shift_rows(&mut state);
    sub_bytes(&mut state, &INV_SBOX);
    add_round_key(&mut state, sched.round_key(0));
    state
}

/// Encrypts whole blocks in place.
pub fn encrypt_blocks(mode: Mode, data: &mut [u8], sched: &KeySchedule) -> Result<(), CryptoError> {
    if !data.len().is_multiple_of(BLOCK_LEN) {
        return Err(CryptoError::DataLength(data.len()));
    }
    match mode {
        Mode::Ecb => {
            for chunk in data.chunks_exact_mut(BLOCK_LEN) {
                let block: &mut [u8; 16] = chunk.try_into().expect("exact chunk");
                *block = aes_encrypt_block(block, sched);
            }
        }
    }
    Ok(())
}

pub fn decrypt_blocks(mode: Mode, data: &mut [u8], sched: &KeySchedule) -> Result<(), CryptoError> {
    if !data.len().is_multiple_of(BLOCK_LEN) {
        return Err(CryptoError::DataLength(data.len()));
    }
    match mode {
        Mode::Ecb => {
            for chunk in data.chunks_exact_mut(BLOCK_LEN) {
                let block: &mut [u8; 16] = chunk.try_into().expect("exact chunk");
                *block = aes_decrypt_block(block, sched);
            }
        }
    }
    Ok(())
}
