use alloc::vec::Vec;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use super::KeySize;

/// Identifies which link and which negotiation a key belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyContext {
    pub link_id: u32,
    pub epoch: u8,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey {
    pub key: Vec<u8>,
    pub ksize: KeySize,
    pub epoch: u8,
    pub established_at: u64,
}

impl core::fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SessionKey")
            .field("ksize", &self.ksize)
            .field("epoch", &self.epoch)
            .field("established_at", &self.established_at)
            .finish_non_exhaustive()
    }
}

/// `SHA-256(secret_be || link_id_be || epoch)`, truncated to the key length.
pub fn derive_session_key(secret: &BigUint, ksize: KeySize, context: KeyContext, established_at: u64) -> SessionKey {
    let mut h = Sha256::new();
    h.update(secret.to_bytes_be());
    h.update(context.link_id.to_be_bytes());
    h.update([context.epoch]);
    let digest = h.finalize();
    SessionKey {
        key: digest[..ksize.key_len()].to_vec(),
        ksize,
        epoch: context.epoch,
        established_at,
    }
}
