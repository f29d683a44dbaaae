//! Signature schemes addressed by the NPKT field.
//!
//! Elliptic-curve schemes are backed by real ECDSA. Post-quantum schemes are
//! backed by a size-faithful surrogate (see [`SurrogateScheme`]) so protocol
//! experiments see exactly the key and signature lengths of the real
//! algorithm. Stateful hash-based schemes exist only as characterization rows.

mod ec;
mod registry;
mod surrogate;
mod table;

pub use ec::{EcCurve, EcdsaScheme};
pub use registry::{normalize_name, HybridScheme, Registry, NPKT_SENTINEL};
pub use surrogate::SurrogateScheme;
pub use table::{builtin_table, characterization_csv, characterize, Family, SchemeCharacterization};

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("NPKT {0} is not assigned and no extension maps it")]
    UnassignedNpkt(u8),
    #[error("NPKT 4 is assigned but its scheme is not modeled")]
    SentinelNpkt,
    #[error("NPKT {0} is already assigned")]
    CodeTaken(u8),
    #[error("NPKT {0} does not fit in 4 bits")]
    NpktOutOfRange(u8),
    #[error("unknown signature scheme `{0}`")]
    UnknownScheme(String),
    #[error("{0} is characterized but has no signing provider")]
    NotSignable(String),
    #[error("secret key is malformed for {0}")]
    BadSecretKey(String),
    #[error("registry config line {line}: {reason}")]
    BadConfig { line: usize, reason: String },
}

/// Secret signing material. Its contents are never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(Vec<u8>);

impl SecretKey {
    pub fn from_bytes(bytes: Vec<u8>) -> SecretKey {
        SecretKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({} bytes)", self.0.len())
    }
}

#[derive(Clone, Debug)]
pub struct KeyPair {
    pub public: Vec<u8>,
    pub secret: SecretKey,
}

/// A signing provider.
///
/// Public keys are exactly `pk_bits` long and signatures exactly `sig_bits`
/// long, as given by the provider's characterization.
pub trait SignatureScheme: Send + Sync + fmt::Debug {
    fn characterization(&self) -> &SchemeCharacterization;

    /// True when the provider only mimics the sizes of the named scheme.
    fn is_surrogate(&self) -> bool;

    /// Deterministic key generation from a 32-byte seed.
    fn keygen(&self, seed: [u8; 32]) -> KeyPair;

    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Result<Vec<u8>, SchemeError>;

    fn verify(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool;

    fn name(&self) -> &str {
        &self.characterization().name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn signable() -> Vec<&'static str> {
        vec![
            "ECDSA-P256",
            "ECDSA-P521",
            "Dilithium2",
            "Falcon-512",
            "SPHINCS+-128s",
            "ECDSA-P256+Falcon-512",
        ]
    }

    #[test]
    fn sizes_are_faithful() {
        let reg = Registry::new();
        for name in signable() {
            let p = reg.provider(name).unwrap();
            let c = p.characterization().clone();
            for i in 0..20u8 {
                let kp = p.keygen([i; 32]);
                assert_eq!(kp.public.len() as u64 * 8, c.pk_bits, "{name} pk");
                let sig = p.sign(&kp.secret, &[i; 40]).unwrap();
                assert_eq!(sig.len() as u64 * 8, c.sig_bits, "{name} sig");
            }
        }
    }

    #[test]
    fn single_bit_tamper_sweep() {
        let reg = Registry::new();
        for name in signable() {
            let p = reg.provider(name).unwrap();
            let kp = p.keygen([42; 32]);
            let msg = b"root key".to_vec();
            let sig = p.sign(&kp.secret, &msg).unwrap();
            assert!(p.verify(&kp.public, &msg, &sig), "{name}");
            for bit in 0..msg.len() * 8 {
                let mut m = msg.clone();
                m[bit / 8] ^= 0x80 >> (bit % 8);
                assert!(!p.verify(&kp.public, &m, &sig), "{name} msg bit {bit}");
            }
            // Every bit for short signatures, a stride for long ones.
            let stride = (sig.len() * 8 / 512).max(1);
            for bit in (0..sig.len() * 8).step_by(stride) {
                let mut s = sig.clone();
                s[bit / 8] ^= 0x80 >> (bit % 8);
                assert!(!p.verify(&kp.public, &msg, &s), "{name} sig bit {bit}");
            }
            let stride = (kp.public.len() * 8 / 512).max(1);
            for bit in (0..kp.public.len() * 8).step_by(stride) {
                let mut pk = kp.public.clone();
                pk[bit / 8] ^= 0x80 >> (bit % 8);
                assert!(!p.verify(&pk, &msg, &sig), "{name} pk bit {bit}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sign_then_verify(seed in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..200), which in 0usize..6) {
            let reg = Registry::new();
            let p = reg.provider(signable()[which]).unwrap();
            let kp = p.keygen(seed);
            let sig = p.sign(&kp.secret, &msg).unwrap();
            prop_assert!(p.verify(&kp.public, &msg, &sig));
            let other = p.keygen([seed[0].wrapping_add(1); 32]);
            if other.public != kp.public {
                prop_assert!(!p.verify(&other.public, &msg, &sig));
            }
        }
    }
}
