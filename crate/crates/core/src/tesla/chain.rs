use std::fmt::Write as _;

use super::{ks_code, ts_code, HashFunction, Key, MacFunction, TeslaError};
use crate::bitgrid::{GstTime, SUBFRAME_PERIOD_S};

const HOUR_S: u32 = 3600;

/// Parameters of one TESLA chain, validated on construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeslaParams {
    key_bits: u32,
    tag_bits: u32,
    hash: HashFunction,
    mac: MacFunction,
    chain_id: u8,
    length: u32,
    start: GstTime,
}

impl TeslaParams {
    /// Builds validated parameters.
    ///
    /// `key_bits` and `tag_bits` must have KS and TS codes, `chain_id` must
    /// fit in 2 bits, and `start` must lie on an hour boundary so the root key
    /// epoch can be carried in the KROOT TOWH field.
    pub fn new(
        key_bits: u32,
        tag_bits: u32,
        hash: HashFunction,
        mac: MacFunction,
        chain_id: u8,
        length: u32,
        start: GstTime,
    ) -> Result<TeslaParams, TeslaError> {
        ks_code(key_bits)?;
        ts_code(tag_bits)?;
        if !mac.supports_key_bytes(key_bits as usize / 8) {
            return Err(TeslaError::UnsupportedMacFunction(mac, key_bits as usize));
        }
        Self::validate_common(chain_id, length, start)?;
        Ok(TeslaParams {
            key_bits,
            tag_bits,
            hash,
            mac,
            chain_id,
            length,
            start,
        })
    }

    /// Like [`TeslaParams::new`] but accepts any tag width from 1 to 64 bits.
    ///
    /// Used to scale brute-force experiments down to sizes where acceptance
    /// rates can be measured.
    pub fn with_test_tag_width(
        key_bits: u32,
        tag_bits: u32,
        hash: HashFunction,
        mac: MacFunction,
        chain_id: u8,
        length: u32,
        start: GstTime,
    ) -> Result<TeslaParams, TeslaError> {
        ks_code(key_bits)?;
        if !(1..=64).contains(&tag_bits) {
            return Err(TeslaError::BadTagWidth(tag_bits));
        }
        if !mac.supports_key_bytes(key_bits as usize / 8) {
            return Err(TeslaError::UnsupportedMacFunction(mac, key_bits as usize));
        }
        Self::validate_common(chain_id, length, start)?;
        Ok(TeslaParams {
            key_bits,
            tag_bits,
            hash,
            mac,
            chain_id,
            length,
            start,
        })
    }

    fn validate_common(chain_id: u8, length: u32, start: GstTime) -> Result<(), TeslaError> {
        if chain_id > 3 {
            return Err(TeslaError::BadChainId(chain_id));
        }
        if length == 0 {
            return Err(TeslaError::EmptyChain);
        }
        if start.tow() % HOUR_S != 0 {
            return Err(TeslaError::UnalignedStart(start));
        }
        // The last key's epoch must still be representable.
        start.add_subframes(i64::from(length))?;
        Ok(())
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    pub fn tag_bits(&self) -> u32 {
        self.tag_bits
    }

    pub fn hash(&self) -> HashFunction {
        self.hash
    }

    pub fn mac(&self) -> MacFunction {
        self.mac
    }

    pub fn chain_id(&self) -> u8 {
        self.chain_id
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn start(&self) -> GstTime {
        self.start
    }

    /// Tags per MACK: `floor((480 - l_K) / (l_T + 16))`.
    pub fn tags_per_mack(&self) -> u32 {
        super::tags_per_mack(self.key_bits, self.tag_bits)
    }

    /// Start of the subframe signed by `K_index`.
    pub fn key_gst(&self, index: u32) -> GstTime {
        self.start
            .add_subframes(i64::from(index))
            .expect("validated at construction")
    }

    /// Index of the key that signs the subframe starting at `t`, if `t` is a
    /// subframe boundary inside the chain's span.
    pub fn key_index_at(&self, t: GstTime) -> Option<u32> {
        let dt = t.to_seconds().checked_sub(self.start.to_seconds())?;
        if dt % u64::from(SUBFRAME_PERIOD_S) != 0 {
            return None;
        }
        let j = dt / u64::from(SUBFRAME_PERIOD_S);
        (1..=u64::from(self.length))
            .contains(&j)
            .then_some(j as u32)
    }

    pub fn derivation(&self) -> KeyDerivation {
        KeyDerivation {
            key_bits: self.key_bits,
            hash: self.hash,
            chain_id: self.chain_id,
            start: self.start,
        }
    }
}

/// The one-way function linking consecutive chain keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyDerivation {
    pub key_bits: u32,
    pub hash: HashFunction,
    pub chain_id: u8,
    pub start: GstTime,
}

impl KeyDerivation {
    /// `K_{index-1}` from `K_index`.
    pub fn step(&self, key: &Key, index: u32) -> Key {
        let gst = self
            .start
            .to_seconds()
            .saturating_add(u64::from(index) * u64::from(SUBFRAME_PERIOD_S));
        let gst = GstTime::from_seconds(gst).map(|g| g.packed()).unwrap_or(u32::MAX);
        let mut input = Vec::with_capacity(key.as_bytes().len() + 5);
        input.extend_from_slice(key.as_bytes());
        input.push(self.chain_id);
        input.extend_from_slice(&gst.to_be_bytes());
        let digest = self.hash.digest(&input);
        Key::from_bytes(&digest[..self.key_bits as usize / 8])
    }

    /// Hashes `key`, assumed to be `K_from`, down to `K_to`.
    pub fn walk(&self, key: &Key, from: u32, to: u32) -> Key {
        let mut k = key.clone();
        for i in (to + 1..=from).rev() {
            k = self.step(&k, i);
        }
        k
    }

    /// True iff `candidate` at index `i` hashes down to `trusted` at index `j`.
    pub fn verify_key(
        &self,
        candidate: &Key,
        i: u32,
        trusted: &Key,
        j: u32,
    ) -> Result<bool, TeslaError> {
        if i <= j {
            return Err(TeslaError::IndexOrder {
                candidate: i,
                trusted: j,
            });
        }
        if candidate.bit_len() != self.key_bits as usize {
            return Ok(false);
        }
        Ok(&self.walk(candidate, i, j) == trusted)
    }
}

/// A fully generated chain. Index `j` holds `K_j`; index 0 is the root key.
#[derive(Clone, Debug)]
pub struct TeslaChain {
    params: TeslaParams,
    keys: Vec<Key>,
}

impl TeslaChain {
    /// Generates `K_N .. K_0` from the secret seed `K_N`.
    pub fn generate(params: TeslaParams, seed: &[u8]) -> Result<TeslaChain, TeslaError> {
        if seed.len() * 8 != params.key_bits as usize {
            return Err(TeslaError::BadSeedLength {
                got: seed.len() * 8,
                expected: params.key_bits,
            });
        }
        let derivation = params.derivation();
        let n = params.length as usize;
        let mut keys = vec![Key::from_bytes(Vec::new()); n + 1];
        keys[n] = Key::from_bytes(seed);
        for j in (1..=n).rev() {
            keys[j - 1] = derivation.step(&keys[j], j as u32);
        }
        Ok(TeslaChain { params, keys })
    }

    pub fn params(&self) -> &TeslaParams {
        &self.params
    }

    pub fn root_key(&self) -> &Key {
        &self.keys[0]
    }

    pub fn seed_key(&self) -> &Key {
        &self.keys[self.params.length as usize]
    }

    pub fn key(&self, index: u32) -> Option<&Key> {
        self.keys.get(index as usize)
    }

    /// All keys from `K_0` to `K_N`.
    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    /// Key that may sign at `index`; the root key is rejected.
    pub fn signing_key(&self, index: u32) -> Result<&Key, TeslaError> {
        if index == 0 {
            return Err(TeslaError::RootKeySigning);
        }
        self.key(index).ok_or(TeslaError::ChainExhausted {
            index,
            length: self.params.length,
        })
    }

    /// Tag over `data` with the key of subframe `index`.
    pub fn make_tag(
        &self,
        index: u32,
        info: super::TagInfo,
        data: &[u8],
    ) -> Result<super::Tag, TeslaError> {
        let key = self.signing_key(index)?;
        super::make_tag(key, data, &self.params, info)
    }

    /// Recomputes the whole chain from the seed and compares it.
    pub fn check(&self) -> bool {
        TeslaChain::generate(self.params.clone(), self.seed_key().as_bytes())
            .map(|c| c.keys == self.keys)
            .unwrap_or(false)
    }

    pub fn dump(&self) -> ChainDump {
        ChainDump {
            derivation: self.params.derivation(),
            length: self.params.length,
            keys: self.keys.clone(),
        }
    }
}

/// Text form of a chain: a header line then one hex key per line, root first.
///
/// ```text
/// l_K=128 N=3 hash=SHA-256 cid=0
/// <K_0>
/// <K_1>
/// <K_2>
/// <K_3>
/// ```
///
/// A ` start=<week>:<tow>` token is appended to the header when the chain
/// does not start at week 0, TOW 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainDump {
    pub derivation: KeyDerivation,
    pub length: u32,
    pub keys: Vec<Key>,
}

impl ChainDump {
    pub fn to_text(&self) -> String {
        let d = &self.derivation;
        let mut out = format!(
            "l_K={} N={} hash={} cid={}",
            d.key_bits,
            self.length,
            d.hash.name(),
            d.chain_id
        );
        if d.start != GstTime::default() {
            let _ = write!(out, " start={}", d.start);
        }
        out.push('\n');
        for k in &self.keys {
            out.push_str(&k.to_hex());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<ChainDump, TeslaError> {
        let bad = |m: String| TeslaError::Dump(m);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let (mut key_bits, mut length, mut hash, mut cid) = (None, None, None, None);
        let mut start = GstTime::default();
        for token in header.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| bad(format!("header token `{token}`")))?;
            let num = |v: &str| v.parse::<u32>().map_err(|_| bad(format!("`{token}`")));
            match k {
                "l_K" => key_bits = Some(num(v)?),
                "N" => length = Some(num(v)?),
                "hash" => hash = Some(HashFunction::from_name(v)?),
                "cid" => cid = Some(num(v)?),
                "start" => {
                    let (w, t) = v
                        .split_once(':')
                        .ok_or_else(|| bad(format!("`{token}`")))?;
                    start = GstTime::new(num(w)? as u16, num(t)?)?;
                }
                _ => return Err(bad(format!("unknown header field `{k}`"))),
            }
        }
        let key_bits = key_bits.ok_or_else(|| bad("missing l_K".into()))?;
        let length = length.ok_or_else(|| bad("missing N".into()))?;
        let hash = hash.ok_or_else(|| bad("missing hash".into()))?;
        let cid = cid.ok_or_else(|| bad("missing cid".into()))?;
        ks_code(key_bits)?;
        if cid > 3 {
            return Err(TeslaError::BadChainId(cid as u8));
        }
        let mut keys = Vec::new();
        for (i, line) in lines.enumerate() {
            let key = Key::from_hex(line).map_err(|e| bad(format!("key line {i}: {e}")))?;
            if key.bit_len() != key_bits as usize {
                return Err(TeslaError::BadKeyLength {
                    got: key.bit_len(),
                    expected: key_bits,
                });
            }
            keys.push(key);
        }
        if keys.len() != length as usize + 1 {
            return Err(bad(format!(
                "expected {} keys, found {}",
                length + 1,
                keys.len()
            )));
        }
        Ok(ChainDump {
            derivation: KeyDerivation {
                key_bits,
                hash,
                chain_id: cid as u8,
                start,
            },
            length,
            keys,
        })
    }

    /// Index of the first key that does not derive its predecessor, if any.
    pub fn first_broken_link(&self) -> Option<u32> {
        (1..self.keys.len()).find_map(|j| {
            let derived = self.derivation.step(&self.keys[j], j as u32);
            (derived != self.keys[j - 1]).then_some(j as u32)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32) -> TeslaParams {
        TeslaParams::new(
            128,
            40,
            HashFunction::Sha256,
            MacFunction::HmacSha256,
            1,
            n,
            GstTime::new(1200, 7200).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_step_chain() {
        let chain = TeslaChain::generate(params(1), &[7; 16]).unwrap();
        assert_eq!(chain.keys().len(), 2);
        let d = chain.params().derivation();
        assert_eq!(chain.root_key(), &d.step(chain.seed_key(), 1));
        assert!(d
            .verify_key(chain.key(1).unwrap(), 1, chain.root_key(), 0)
            .unwrap());
    }

    #[test]
    fn index_order_is_enforced() {
        let chain = TeslaChain::generate(params(4), &[1; 16]).unwrap();
        let d = chain.params().derivation();
        let err = d.verify_key(chain.root_key(), 0, chain.root_key(), 0);
        assert_eq!(
            err,
            Err(TeslaError::IndexOrder {
                candidate: 0,
                trusted: 0
            })
        );
        assert!(d.verify_key(chain.key(1).unwrap(), 1, chain.key(2).unwrap(), 2).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let start = GstTime::new(1, 0).unwrap();
        let h = HashFunction::Sha256;
        let m = MacFunction::HmacSha256;
        assert!(TeslaParams::new(64, 40, h, m, 0, 5, start).is_err());
        assert!(TeslaParams::new(128, 16, h, m, 0, 5, start).is_err());
        assert!(TeslaParams::new(128, 40, h, m, 4, 5, start).is_err());
        assert_eq!(
            TeslaParams::new(128, 40, h, m, 0, 0, start),
            Err(TeslaError::EmptyChain)
        );
        let odd = GstTime::new(1, 30).unwrap();
        assert!(matches!(
            TeslaParams::new(128, 40, h, m, 0, 5, odd),
            Err(TeslaError::UnalignedStart(_))
        ));
        assert!(matches!(
            TeslaParams::new(96, 40, h, MacFunction::CmacAes, 0, 5, start),
            Err(TeslaError::UnsupportedMacFunction(..))
        ));
        assert!(TeslaParams::with_test_tag_width(128, 10, h, m, 0, 5, start).is_ok());
        assert!(TeslaParams::with_test_tag_width(128, 65, h, m, 0, 5, start).is_err());
    }

    #[test]
    fn bad_seed_length() {
        assert_eq!(
            TeslaChain::generate(params(3), &[0; 15]).unwrap_err(),
            TeslaError::BadSeedLength {
                got: 120,
                expected: 128
            }
        );
    }

    #[test]
    fn root_never_signs() {
        let chain = TeslaChain::generate(params(3), &[2; 16]).unwrap();
        let info = super::super::TagInfo::new(5, super::super::Adkd::EphemerisClock, 0).unwrap();
        assert_eq!(
            chain.make_tag(0, info, b"x").unwrap_err(),
            TeslaError::RootKeySigning
        );
        assert!(matches!(
            chain.make_tag(4, info, b"x"),
            Err(TeslaError::ChainExhausted { index: 4, length: 3 })
        ));
        assert!(chain.make_tag(3, info, b"x").is_ok());
    }

    #[test]
    fn dump_round_trip_and_tamper() {
        let chain = TeslaChain::generate(params(5), &[9; 16]).unwrap();
        let text = chain.dump().to_text();
        assert!(text.starts_with("l_K=128 N=5 hash=SHA-256 cid=1 start=1200:7200\n"));
        let parsed = ChainDump::parse(&text).unwrap();
        assert_eq!(parsed, chain.dump());
        assert_eq!(parsed.first_broken_link(), None);

        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let flipped = if lines[4].starts_with('0') { "1" } else { "0" };
        lines[4].replace_range(0..1, flipped);
        let tampered = ChainDump::parse(&lines.join("\n")).unwrap();
        // Line 4 is K_3; the link K_3 -> K_2 breaks first.
        assert_eq!(tampered.first_broken_link(), Some(3));
    }

    #[test]
    fn key_index_at() {
        let p = params(10);
        assert_eq!(p.key_index_at(p.start()), None);
        assert_eq!(p.key_index_at(p.key_gst(1)), Some(1));
        assert_eq!(p.key_index_at(p.key_gst(10)), Some(10));
        assert_eq!(p.key_index_at(p.key_gst(11)), None);
        assert_eq!(p.key_index_at(p.start().offset(45).unwrap()), None);
    }
}
