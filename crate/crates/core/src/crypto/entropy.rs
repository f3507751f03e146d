use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::CryptoError;

/// Source of random bytes for key generation and block padding.
pub trait EntropySource {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), CryptoError>;
}

/// Adapts any infallible [`RngCore`].
pub struct RngEntropy<R>(pub R);

impl<R: RngCore> EntropySource for RngEntropy<R> {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), CryptoError> {
        self.0.fill_bytes(buf);
        Ok(())
    }
}

/// Deterministic ChaCha20 stream, for simulation and tests.
pub struct SeededEntropy(ChaCha20Rng);

impl SeededEntropy {
    pub fn from_seed(seed: u64) -> Self {
        SeededEntropy(ChaCha20Rng::seed_from_u64(seed))
    }
}

impl EntropySource for SeededEntropy {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), CryptoError> {
        self.0.fill_bytes(buf);
        Ok(())
    }
}
