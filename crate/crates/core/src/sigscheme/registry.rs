use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{
    builtin_table, characterize, EcCurve, EcdsaScheme, Family, KeyPair, SchemeCharacterization,
    SchemeError, SecretKey, SignatureScheme, SurrogateScheme,
};

/// NPKT value that is assigned but not described, so never resolved.
pub const NPKT_SENTINEL: u8 = 4;
const ASSIGNED: [(u8, &str); 2] = [(1, "ECDSA-P256"), (3, "ECDSA-P521")];

/// Lowercase alphanumerics only, so `Falcon-512`, `falcon512` and
/// `FALCON_512` compare equal.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// NPKT to scheme mapping: the assigned codes plus configured extensions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    extensions: BTreeMap<u8, String>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    /// Maps a free NPKT value to a scheme or hybrid such as
    /// `ECDSA-P256+Falcon-512`.
    pub fn assign(&mut self, npkt: u8, scheme: &str) -> Result<(), SchemeError> {
        if npkt > 15 {
            return Err(SchemeError::NpktOutOfRange(npkt));
        }
        if npkt == NPKT_SENTINEL || ASSIGNED.iter().any(|(c, _)| *c == npkt) {
            return Err(SchemeError::CodeTaken(npkt));
        }
        let provider = self.provider(scheme)?;
        self.extensions.insert(npkt, provider.name().to_string());
        Ok(())
    }

    /// Parses lines of the form `npkt=<code> scheme=<name>`.
    pub fn from_config(text: &str) -> Result<Registry, SchemeError> {
        let mut reg = Registry::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| SchemeError::BadConfig { line: i + 1, reason };
            let (mut code, mut scheme) = (None, None);
            for token in line.split_whitespace() {
                match token.split_once('=') {
                    Some(("npkt", v)) => {
                        code = Some(v.parse::<u8>().map_err(|_| bad(format!("bad code `{v}`")))?)
                    }
                    Some(("scheme", v)) => scheme = Some(v),
                    _ => return Err(bad(format!("unexpected token `{token}`"))),
                }
            }
            let code = code.ok_or_else(|| bad("missing npkt".into()))?;
            let scheme = scheme.ok_or_else(|| bad("missing scheme".into()))?;
            reg.assign(code, scheme).map_err(|e| bad(e.to_string()))?;
        }
        Ok(reg)
    }

    pub fn to_config(&self) -> String {
        self.extensions
            .iter()
            .map(|(c, s)| format!("npkt={c} scheme={s}\n"))
            .collect()
    }

    /// Every resolvable code with its scheme name.
    pub fn assignments(&self) -> Vec<(u8, String)> {
        let mut out: Vec<(u8, String)> = ASSIGNED.iter().map(|(c, s)| (*c, s.to_string())).collect();
        out.extend(self.extensions.iter().map(|(c, s)| (*c, s.clone())));
        out.sort();
        out
    }

    pub fn lookup(&self, npkt: u8) -> Result<Arc<dyn SignatureScheme>, SchemeError> {
        if npkt == NPKT_SENTINEL {
            return Err(SchemeError::SentinelNpkt);
        }
        if let Some((_, name)) = ASSIGNED.iter().find(|(c, _)| *c == npkt) {
            return self.provider(name);
        }
        match self.extensions.get(&npkt) {
            Some(name) => self.provider(name),
            None => Err(SchemeError::UnassignedNpkt(npkt)),
        }
    }

    /// NPKT code currently resolving to `name`, if any.
    pub fn npkt_of(&self, name: &str) -> Option<u8> {
        let wanted = normalize_name(name);
        self.assignments()
            .into_iter()
            .find(|(_, s)| normalize_name(s) == wanted)
            .map(|(c, _)| c)
    }

    /// Provider for a built-in scheme or a `classical+pqc` hybrid.
    pub fn provider(&self, name: &str) -> Result<Arc<dyn SignatureScheme>, SchemeError> {
        let base = self.base_provider(name);
        if base.is_ok() || !name.contains('+') {
            return base;
        }
        // `+` also occurs inside names such as SPHINCS+-128s.
        for (i, _) in name.match_indices('+') {
            if let (Ok(a), Ok(b)) = (self.base_provider(&name[..i]), self.provider(&name[i + 1..])) {
                return Ok(Arc::new(HybridScheme::new(a, b)));
            }
        }
        base
    }

    fn base_provider(&self, name: &str) -> Result<Arc<dyn SignatureScheme>, SchemeError> {
        let info = characterize(name)?;
        match normalize_name(&info.name).as_str() {
            "ecdsap256" => Ok(Arc::new(EcdsaScheme::new(EcCurve::P256))),
            "ecdsap521" => Ok(Arc::new(EcdsaScheme::new(EcCurve::P521))),
            _ => Ok(Arc::new(SurrogateScheme::new(info)?)),
        }
    }

    /// Characterization of a built-in scheme or a hybrid.
    pub fn characterize(&self, name: &str) -> Result<SchemeCharacterization, SchemeError> {
        let Ok(mut info) = characterize(name) else {
            return Ok(self.provider(name)?.characterization().clone());
        };
        info.npkt = self.npkt_of(&info.name);
        Ok(info)
    }

    /// Built-in rows with any configured NPKT codes filled in.
    pub fn table(&self) -> Vec<SchemeCharacterization> {
        builtin_table()
            .into_iter()
            .map(|mut c| {
                c.npkt = self.npkt_of(&c.name);
                c
            })
            .collect()
    }
}

/// Classical and post-quantum signatures side by side.
#[derive(Debug)]
pub struct HybridScheme {
    classical: Arc<dyn SignatureScheme>,
    pqc: Arc<dyn SignatureScheme>,
    info: SchemeCharacterization,
}

impl HybridScheme {
    pub fn new(classical: Arc<dyn SignatureScheme>, pqc: Arc<dyn SignatureScheme>) -> HybridScheme {
        let (a, b) = (classical.characterization(), pqc.characterization());
        let info = SchemeCharacterization {
            name: format!("{}+{}", a.name, b.name),
            npkt: None,
            pk_bits: a.pk_bits + b.pk_bits,
            sig_bits: a.sig_bits + b.sig_bits,
            family: if b.family == Family::EllipticCurve { a.family } else { b.family },
            quantum_resistant: a.quantum_resistant || b.quantum_resistant,
            printed_pk: None,
            flag: None,
        };
        HybridScheme {
            classical,
            pqc,
            info,
        }
    }

    fn split_len(bits: u64) -> usize {
        (bits / 8) as usize
    }
}

impl SignatureScheme for HybridScheme {
    fn characterization(&self) -> &SchemeCharacterization {
        &self.info
    }

    fn is_surrogate(&self) -> bool {
        self.classical.is_surrogate() || self.pqc.is_surrogate()
    }

    fn keygen(&self, seed: [u8; 32]) -> KeyPair {
        let sub = |tag: u8| -> [u8; 32] { Sha256::new().chain_update(seed).chain_update([tag]).finalize().into() };
        let a = self.classical.keygen(sub(0));
        let b = self.pqc.keygen(sub(1));
        let mut secret = (a.secret.as_bytes().len() as u16).to_be_bytes().to_vec();
        secret.extend_from_slice(a.secret.as_bytes());
        secret.extend_from_slice(b.secret.as_bytes());
        let mut public = a.public;
        public.extend(b.public);
        KeyPair {
            public,
            secret: SecretKey::from_bytes(secret),
        }
    }

    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Result<Vec<u8>, SchemeError> {
        let bad = || SchemeError::BadSecretKey(self.info.name.clone());
        let bytes = secret.as_bytes();
        let len = bytes.get(..2).ok_or_else(bad)?;
        let len = usize::from(u16::from_be_bytes([len[0], len[1]]));
        let rest = &bytes[2..];
        if rest.len() < len {
            return Err(bad());
        }
        let (a, b) = rest.split_at(len);
        let mut sig = self.classical.sign(&SecretKey::from_bytes(a.to_vec()), message)?;
        sig.extend(self.pqc.sign(&SecretKey::from_bytes(b.to_vec()), message)?);
        Ok(sig)
    }

    fn verify(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool {
        let pk_a = Self::split_len(self.classical.characterization().pk_bits);
        let sig_a = Self::split_len(self.classical.characterization().sig_bits);
        if public.len() < pk_a || signature.len() < sig_a {
            return false;
        }
        let (pa, pb) = public.split_at(pk_a);
        let (sa, sb) = signature.split_at(sig_a);
        self.classical.verify(pa, message, sa) && self.pqc.verify(pb, message, sb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assigned_codes() {
        let reg = Registry::new();
        assert_eq!(reg.lookup(1).unwrap().name(), "ECDSA-P256");
        assert_eq!(reg.lookup(3).unwrap().name(), "ECDSA-P521");
        assert!(!reg.lookup(1).unwrap().is_surrogate());
        assert_eq!(reg.lookup(4).unwrap_err(), SchemeError::SentinelNpkt);
        assert_eq!(reg.lookup(7).unwrap_err(), SchemeError::UnassignedNpkt(7));
        for code in [0, 2, 5, 6, 8, 15] {
            assert!(reg.lookup(code).is_err());
        }
    }

    #[test]
    fn extension_mapping() {
        let mut reg = Registry::new();
        reg.assign(7, "falcon512").unwrap();
        let p = reg.lookup(7).unwrap();
        assert_eq!(p.name(), "Falcon-512");
        assert!(p.is_surrogate());
        assert_eq!(reg.npkt_of("Falcon-512"), Some(7));
        assert_eq!(reg.assign(3, "Falcon-512"), Err(SchemeError::CodeTaken(3)));
        assert_eq!(reg.assign(4, "Falcon-512"), Err(SchemeError::CodeTaken(4)));
        assert_eq!(reg.assign(16, "Falcon-512"), Err(SchemeError::NpktOutOfRange(16)));
        assert!(matches!(reg.assign(8, "LMS-h512"), Err(SchemeError::NotSignable(_))));
        assert!(matches!(reg.assign(8, "RSA"), Err(SchemeError::UnknownScheme(_))));
    }

    #[test]
    fn config_round_trip() {
        let text = "# extensions\nnpkt=7 scheme=Falcon-512\nnpkt=9 scheme=ECDSA-P256+Dilithium2\n";
        let reg = Registry::from_config(text).unwrap();
        assert_eq!(Registry::from_config(&reg.to_config()).unwrap(), reg);
        let hybrid = reg.lookup(9).unwrap();
        assert_eq!(hybrid.name(), "ECDSA-P256+Dilithium2");
        assert_eq!(hybrid.characterization().sig_bits, 512 + 19360);
        assert_eq!(hybrid.characterization().pk_bits, 264 + 10496);
        let h = reg.provider("ECDSA-P521+SPHINCS+-128s").unwrap();
        assert_eq!(h.characterization().sig_bits, 1056 + 62848);
        assert_eq!(reg.provider("SPHINCS+-128s").unwrap().name(), "SPHINCS+-128s");
        assert!(matches!(
            Registry::from_config("npkt=7\n"),
            Err(SchemeError::BadConfig { line: 1, .. })
        ));
        assert!(matches!(
            Registry::from_config("\nnpkt=x scheme=Falcon-512"),
            Err(SchemeError::BadConfig { line: 2, .. })
        ));
    }

    #[test]
    fn lookup_is_deterministic() {
        let mut reg = Registry::new();
        reg.assign(11, "SPHINCS+-128s").unwrap();
        let a = reg.lookup(11).unwrap().keygen([5; 32]);
        let b = reg.lookup(11).unwrap().keygen([5; 32]);
        assert_eq!(a.public, b.public);
    }
}
