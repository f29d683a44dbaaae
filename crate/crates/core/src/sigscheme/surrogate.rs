use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use super::{KeyPair, SchemeCharacterization, SchemeError, SecretKey, SignatureScheme};

const ED_PK: usize = 32;
const ED_SIG: usize = 64;

/// Size-faithful stand-in for a post-quantum scheme.
///
/// The public key is an Ed25519 key followed by a SHAKE256 expansion of it;
/// the signature is an Ed25519 signature followed by a SHAKE256 expansion of
/// the signature and message. Both are cut to the exact published lengths, so
/// the construction is publicly verifiable and any bit flip is detected.
#[derive(Debug)]
pub struct SurrogateScheme {
    info: SchemeCharacterization,
}

impl SurrogateScheme {
    pub fn new(info: SchemeCharacterization) -> Result<SurrogateScheme, SchemeError> {
        let fits = info.pk_bits % 8 == 0
            && info.sig_bits % 8 == 0
            && info.pk_bits >= ED_PK as u64 * 8
            && info.sig_bits >= ED_SIG as u64 * 8
            && info.pk_bits <= 1 << 24;
        if info.is_stateful() || !fits {
            return Err(SchemeError::NotSignable(info.name));
        }
        Ok(SurrogateScheme { info })
    }

    fn filler(&self, label: &[u8], parts: &[&[u8]], out_len: usize) -> Vec<u8> {
        let mut h = Shake256::default();
        h.update(label);
        h.update(self.info.name.as_bytes());
        for p in parts {
            h.update(p);
        }
        let mut out = vec![0u8; out_len];
        h.finalize_xof().read(&mut out);
        out
    }

    fn pk_len(&self) -> usize {
        (self.info.pk_bits / 8) as usize
    }

    fn sig_len(&self) -> usize {
        (self.info.sig_bits / 8) as usize
    }
}

impl SignatureScheme for SurrogateScheme {
    fn characterization(&self) -> &SchemeCharacterization {
        &self.info
    }

    fn is_surrogate(&self) -> bool {
        true
    }

    fn keygen(&self, seed: [u8; 32]) -> KeyPair {
        let sk = SigningKey::from_bytes(&seed);
        let vk = sk.verifying_key().to_bytes();
        let mut public = vk.to_vec();
        public.extend(self.filler(b"pk", &[&vk], self.pk_len() - ED_PK));
        KeyPair {
            public,
            secret: SecretKey::from_bytes(seed.to_vec()),
        }
    }

    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Result<Vec<u8>, SchemeError> {
        let seed: [u8; 32] = secret
            .as_bytes()
            .try_into()
            .map_err(|_| SchemeError::BadSecretKey(self.info.name.clone()))?;
        let sig = SigningKey::from_bytes(&seed).sign(message).to_bytes();
        let mut out = sig.to_vec();
        out.extend(self.filler(b"sig", &[&sig, message], self.sig_len() - ED_SIG));
        Ok(out)
    }

    fn verify(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool {
        if public.len() != self.pk_len() || signature.len() != self.sig_len() {
            return false;
        }
        let (vk_bytes, pk_fill) = public.split_at(ED_PK);
        let (sig_bytes, sig_fill) = signature.split_at(ED_SIG);
        if pk_fill != self.filler(b"pk", &[vk_bytes], pk_fill.len()).as_slice()
            || sig_fill != self.filler(b"sig", &[sig_bytes, message], sig_fill.len()).as_slice()
        {
            return false;
        }
        let Ok(vk) = VerifyingKey::from_bytes(vk_bytes.try_into().expect("split at 32")) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(sig_bytes.try_into().expect("split at 64"));
        vk.verify_strict(message, &sig).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigscheme::characterize;

    #[test]
    fn published_lengths() {
        let falcon = SurrogateScheme::new(characterize("Falcon-512").unwrap()).unwrap();
        let kp = falcon.keygen([1; 32]);
        assert_eq!(falcon.sign(&kp.secret, b"m").unwrap().len() * 8, 5328);
        let sphincs = SurrogateScheme::new(characterize("SPHINCS+-128s").unwrap()).unwrap();
        let kp = sphincs.keygen([2; 32]);
        assert_eq!(kp.public.len() * 8, 256);
        assert_eq!(sphincs.sign(&kp.secret, b"m").unwrap().len() * 8, 62848);
    }

    #[test]
    fn tampered_message_fails() {
        let s = SurrogateScheme::new(characterize("Dilithium2").unwrap()).unwrap();
        let kp = s.keygen([3; 32]);
        let sig = s.sign(&kp.secret, b"kroot").unwrap();
        assert!(s.verify(&kp.public, b"kroot", &sig));
        assert!(!s.verify(&kp.public, b"kroot!", &sig));
    }

    #[test]
    fn stateful_rows_are_not_signable() {
        for name in ["XMSS-w32-h8", "LMS-h512"] {
            assert!(matches!(
                SurrogateScheme::new(characterize(name).unwrap()),
                Err(SchemeError::NotSignable(_))
            ));
        }
    }
}
