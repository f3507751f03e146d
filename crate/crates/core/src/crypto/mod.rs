//! Cryptographic building blocks of the confidentiality layer: AES with a
//! separate key expansion, Diffie-Hellman agreement and session-key
//! derivation.

pub mod aes;
pub mod dh;
pub mod entropy;
pub mod kdf;

pub use aes::{aes_decrypt_block, aes_encrypt_block, aes_key_expansion, KeySchedule, KeySize, Mode};
pub use dh::{dh_keypair, dh_public, dh_shared_secret, DhGroup, DhKeyPair};
pub use entropy::{EntropySource, RngEntropy, SeededEntropy};
pub use kdf::{derive_session_key, KeyContext, SessionKey};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("key is {got} bytes, expected {expected}")]
    KeyLength { expected: usize, got: usize },
    #[error("unsupported AES key size {0} (expected 128, 192 or 256)")]
    InvalidKeySize(u64),
    #[error("expanded key of {0} bytes matches no AES key size")]
    ScheduleLength(usize),
    #[error("expanded key is not the expansion of its leading key bytes")]
    ScheduleMismatch,
    #[error("{0} bytes is not a whole number of AES blocks")]
    DataLength(usize),
    #[error("invalid Diffie-Hellman group parameters")]
    InvalidGroup,
    #[error("peer public value outside (1, p)")]
    PeerPublicOutOfRange,
    #[error("entropy source exhausted")]
    EntropyExhausted,
}
