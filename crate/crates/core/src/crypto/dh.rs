//! Finite-field Diffie-Hellman key agreement.

use alloc::vec;

use num_bigint::BigUint;
use num_traits::One;

use super::entropy::EntropySource;
use super::CryptoError;

/// RFC 3526 group 14 (2048-bit MODP), generator 2.
const MODP_2048_HEX: &[u8] = b"\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1\
29024E088A67CC74020BBEA63B139B22514A08798E3404DD\
EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245\
E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D\
C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F\
83655D23DCA3AD961C62F356208552BB9ED529077096966D\
670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9\
DE2BCBF6955817183995497CEA956AE515D2261898FA0510\
15728E5A8AACAA68FFFFFFFFFFFFFFFF";

const MAX_DRAWS: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DhGroup {
    p: BigUint,
    g: BigUint,
}

impl DhGroup {
    pub fn new(p: BigUint, g: BigUint) -> Result<DhGroup, CryptoError> {
        let two = BigUint::from(2u8);
        if p.bits() < 3 || !p.bit(0) || g < two || g >= p {
            return Err(CryptoError::InvalidGroup);
        }
        Ok(DhGroup { p, g })
    }

    /// The production group.
    pub fn modp2048() -> DhGroup {
        let p = BigUint::parse_bytes(MODP_2048_HEX, 16).expect("valid constant");
        DhGroup {
            p,
            g: BigUint::from(2u8),
        }
    }

    /// p = 23, g = 5. Only for tests and worked examples.
    pub fn toy() -> DhGroup {
        DhGroup {
            p: BigUint::from(23u8),
            g: BigUint::from(5u8),
        }
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// Width of p in bytes; public values are sent padded to this.
    pub fn element_len(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct DhKeyPair {
    pub private: BigUint,
    pub public: BigUint,
}

impl core::fmt::Debug for DhKeyPair {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DhKeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

/// Public value for a given private exponent.
pub fn dh_public(group: &DhGroup, private: &BigUint) -> BigUint {
    group.g.modpow(private, &group.p)
}

/// Draws a private exponent uniformly from [2, p-2] by rejection sampling.
pub fn dh_keypair(group: &DhGroup, rng: &mut dyn EntropySource) -> Result<DhKeyPair, CryptoError> {
    let bits = group.p.bits();
    let len = bits.div_ceil(8) as usize;
    let excess = (len as u64 * 8 - bits) as u32;
    let upper = &group.p - 2u8;
    let mut buf = vec![0u8; len];
    for _ in 0..MAX_DRAWS {
        rng.fill(&mut buf)?;
        buf[0] &= 0xffu8 >> excess;
        let candidate = BigUint::from_bytes_be(&buf);
        if candidate >= BigUint::from(2u8) && candidate <= upper {
            let public = dh_public(group, &candidate);
            return Ok(DhKeyPair {
                private: candidate,
                public,
            });
        }
    }
    Err(CryptoError::EntropyExhausted)
}

/// `peer_public ^ private mod p`, rejecting peer values outside (1, p).
pub fn dh_shared_secret(private: &BigUint, peer_public: &BigUint, group: &DhGroup) -> Result<BigUint, CryptoError> {
    if peer_public <= &BigUint::one() || peer_public >= &group.p {
        return Err(CryptoError::PeerPublicOutOfRange);
    }
    Ok(peer_public.modpow(private, &group.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::entropy::SeededEntropy;

    // Brute-force modular exponentiation by repeated multiplication.
    fn slow_pow(g: u64, e: u64, p: u64) -> u64 {
        (0..e).fold(1, |acc, _| acc * g % p)
    }

    #[test]
    fn toy_group_worked_example() {
        let group = DhGroup::toy();
        assert_eq!(slow_pow(5, 6, 23), 8);
        assert_eq!(slow_pow(5, 15, 23), 19);
        assert_eq!(slow_pow(19, 6, 23), 2);
        assert_eq!(slow_pow(8, 15, 23), 2);

        let a = BigUint::from(6u8);
        let b = BigUint::from(15u8);
        assert_eq!(dh_public(&group, &a), BigUint::from(8u8));
        assert_eq!(dh_public(&group, &b), BigUint::from(19u8));
        let s1 = dh_shared_secret(&a, &BigUint::from(19u8), &group).unwrap();
        let s2 = dh_shared_secret(&b, &BigUint::from(8u8), &group).unwrap();
        assert_eq!(s1, BigUint::from(2u8));
        assert_eq!(s1, s2);
    }

    #[test]
    fn degenerate_peer_values_are_rejected() {
        let group = DhGroup::toy();
        let k = BigUint::from(6u8);
        for bad in [0u8, 1, 23, 24] {
            assert_eq!(
                dh_shared_secret(&k, &BigUint::from(bad), &group),
                Err(CryptoError::PeerPublicOutOfRange),
                "peer {bad}"
            );
        }
    }

    #[test]
    fn keypairs_stay_in_range() {
        let group = DhGroup::toy();
        let mut rng = SeededEntropy::from_seed(7);
        for _ in 0..1000 {
            let kp = dh_keypair(&group, &mut rng).unwrap();
            assert!(kp.private >= BigUint::from(2u8) && kp.private <= BigUint::from(21u8));
            assert!(kp.public >= BigUint::one() && kp.public <= BigUint::from(22u8));
            assert_eq!(
                kp.public,
                BigUint::from(slow_pow(5, kp.private.iter_u64_digits().next().unwrap(), 23))
            );
        }
    }

    #[test]
    fn toy_symmetry_over_random_pairs() {
        let group = DhGroup::toy();
        let mut rng = SeededEntropy::from_seed(11);
        for _ in 0..100 {
            let a = dh_keypair(&group, &mut rng).unwrap();
            let b = dh_keypair(&group, &mut rng).unwrap();
            // public 22 has order 2 and is still within (1, p)
            let s1 = dh_shared_secret(&a.private, &b.public, &group).unwrap();
            let s2 = dh_shared_secret(&b.private, &a.public, &group).unwrap();
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn modp_group_shape() {
        let g = DhGroup::modp2048();
        assert_eq!(g.p().bits(), 2048);
        assert_eq!(g.element_len(), 256);
        assert!(DhGroup::new(g.p().clone(), g.g().clone()).is_ok());
        assert_eq!(
            DhGroup::new(BigUint::from(24u8), BigUint::from(5u8)),
            Err(CryptoError::InvalidGroup)
        );
        assert_eq!(
            DhGroup::new(BigUint::from(23u8), BigUint::from(23u8)),
            Err(CryptoError::InvalidGroup)
        );
    }

    #[test]
    fn failing_entropy_surfaces() {
        struct Dead;
        impl EntropySource for Dead {
            fn fill(&mut self, _: &mut [u8]) -> Result<(), CryptoError> {
                Err(CryptoError::EntropyExhausted)
            }
        }
        assert_eq!(
            dh_keypair(&DhGroup::toy(), &mut Dead),
            Err(CryptoError::EntropyExhausted)
        );
    }
}
