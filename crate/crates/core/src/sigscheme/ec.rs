use p256::ecdsa::signature::{Signer, Verifier};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{characterize, KeyPair, SchemeCharacterization, SchemeError, SecretKey, SignatureScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcCurve {
    P256,
    P521,
}

/// ECDSA with compressed SEC1 public keys and fixed-width `r || s`
/// signatures.
#[derive(Debug)]
pub struct EcdsaScheme {
    curve: EcCurve,
    info: SchemeCharacterization,
}

impl EcdsaScheme {
    pub fn new(curve: EcCurve) -> EcdsaScheme {
        let name = match curve {
            EcCurve::P256 => "ECDSA-P256",
            EcCurve::P521 => "ECDSA-P521",
        };
        EcdsaScheme {
            curve,
            info: characterize(name).expect("built-in row"),
        }
    }

    pub fn curve(&self) -> EcCurve {
        self.curve
    }
}

impl SignatureScheme for EcdsaScheme {
    fn characterization(&self) -> &SchemeCharacterization {
        &self.info
    }

    fn is_surrogate(&self) -> bool {
        false
    }

    fn keygen(&self, seed: [u8; 32]) -> KeyPair {
        let mut rng = ChaCha20Rng::from_seed(seed);
        match self.curve {
            EcCurve::P256 => {
                let sk = p256::ecdsa::SigningKey::random(&mut rng);
                KeyPair {
                    public: sk.verifying_key().to_encoded_point(true).as_bytes().to_vec(),
                    secret: SecretKey::from_bytes(sk.to_bytes().to_vec()),
                }
            }
            EcCurve::P521 => {
                let sk = p521::ecdsa::SigningKey::random(&mut rng);
                KeyPair {
                    public: p521::ecdsa::VerifyingKey::from(&sk).to_encoded_point(true).as_bytes().to_vec(),
                    secret: SecretKey::from_bytes(sk.to_bytes().to_vec()),
                }
            }
        }
    }

    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Result<Vec<u8>, SchemeError> {
        let bad = || SchemeError::BadSecretKey(self.info.name.clone());
        match self.curve {
            EcCurve::P256 => {
                let sk = p256::ecdsa::SigningKey::from_slice(secret.as_bytes()).map_err(|_| bad())?;
                let sig: p256::ecdsa::Signature = sk.sign(message);
                Ok(sig.to_bytes().to_vec())
            }
            EcCurve::P521 => {
                let sk = p521::ecdsa::SigningKey::from_slice(secret.as_bytes()).map_err(|_| bad())?;
                let sig: p521::ecdsa::Signature = sk.sign(message);
                Ok(sig.to_bytes().to_vec())
            }
        }
    }

    fn verify(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool {
        if public.len() as u64 * 8 != self.info.pk_bits
            || signature.len() as u64 * 8 != self.info.sig_bits
        {
            return false;
        }
        match self.curve {
            EcCurve::P256 => {
                let (Ok(vk), Ok(sig)) = (
                    p256::ecdsa::VerifyingKey::from_sec1_bytes(public),
                    p256::ecdsa::Signature::from_slice(signature),
                ) else {
                    return false;
                };
                vk.verify(message, &sig).is_ok()
            }
            EcCurve::P521 => {
                let (Ok(vk), Ok(sig)) = (
                    p521::ecdsa::VerifyingKey::from_sec1_bytes(public),
                    p521::ecdsa::Signature::from_slice(signature),
                ) else {
                    return false;
                };
                vk.verify(message, &sig).is_ok()
            }
        }
    }
}
