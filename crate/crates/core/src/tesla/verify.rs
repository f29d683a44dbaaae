use super::{compute_tag, Key, Tag, TeslaParams};

/// A key together with its chain index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainAnchor {
    pub key: Key,
    pub index: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Authentic,
    Forged,
    KeyUnverified,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingTag {
    pub tag: Tag,
    pub data: Vec<u8>,
}

/// Tags received in one subframe, waiting for their key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingSubframe {
    pub index: u32,
    pub tags: Vec<PendingTag>,
}

/// Checks `disclosed` against `anchor` in whichever direction the indices
/// allow. A later anchor is hashed down to the disclosed index.
fn key_is_authentic(params: &TeslaParams, disclosed: &ChainAnchor, anchor: &ChainAnchor) -> bool {
    let d = params.derivation();
    if disclosed.key.bit_len() != params.key_bits() as usize {
        return false;
    }
    match disclosed.index.cmp(&anchor.index) {
        std::cmp::Ordering::Equal => disclosed.key == anchor.key,
        std::cmp::Ordering::Greater => d
            .verify_key(&disclosed.key, disclosed.index, &anchor.key, anchor.index)
            .unwrap_or(false),
        std::cmp::Ordering::Less => {
            d.walk(&anchor.key, anchor.index, disclosed.index) == disclosed.key
        }
    }
}

/// Verdict for every pending tag once a key has been disclosed.
///
/// All tags are `KeyUnverified` unless the disclosed key chains to the trust
/// anchor and is at or after the subframe that the tags belong to.
pub fn receiver_verify_tags(
    params: &TeslaParams,
    pending: &PendingSubframe,
    disclosed: &ChainAnchor,
    anchor: &ChainAnchor,
) -> Vec<Verdict> {
    let usable = pending.index > 0
        && disclosed.index >= pending.index
        && key_is_authentic(params, disclosed, anchor);
    if !usable {
        return vec![Verdict::KeyUnverified; pending.tags.len()];
    }
    let key = params
        .derivation()
        .walk(&disclosed.key, disclosed.index, pending.index);
    pending
        .tags
        .iter()
        .map(|p| match compute_tag(&key, &p.data, params, p.tag.info) {
            Ok(bits) if bits == p.tag.bits => Verdict::Authentic,
            _ => Verdict::Forged,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitgrid::GstTime;
    use crate::tesla::{Adkd, HashFunction, MacFunction, TagInfo, TeslaChain};

    fn setup() -> (TeslaChain, PendingSubframe) {
        let p = TeslaParams::new(
            128,
            40,
            HashFunction::Sha3_256,
            MacFunction::HmacSha256,
            2,
            30,
            GstTime::new(1000, 0).unwrap(),
        )
        .unwrap();
        let chain = TeslaChain::generate(p, &[5; 16]).unwrap();
        let info = TagInfo::new(3, Adkd::EphemerisClock, 0).unwrap();
        let tags = (0..3)
            .map(|i| {
                let data = vec![i; 20];
                PendingTag {
                    tag: chain.make_tag(8, info, &data).unwrap(),
                    data,
                }
            })
            .collect();
        (chain, PendingSubframe { index: 8, tags })
    }

    fn anchor(chain: &TeslaChain, i: u32) -> ChainAnchor {
        ChainAnchor {
            key: chain.key(i).unwrap().clone(),
            index: i,
        }
    }

    #[test]
    fn genuine_flow_is_authentic() {
        let (chain, pending) = setup();
        let v = receiver_verify_tags(chain.params(), &pending, &anchor(&chain, 9), &anchor(&chain, 0));
        assert_eq!(v, vec![Verdict::Authentic; 3]);
        // Anchor later than the disclosed key.
        let v = receiver_verify_tags(chain.params(), &pending, &anchor(&chain, 18), &anchor(&chain, 25));
        assert_eq!(v, vec![Verdict::Authentic; 3]);
    }

    #[test]
    fn modified_data_is_forged() {
        let (chain, mut pending) = setup();
        pending.tags[1].data[0] ^= 1;
        let v = receiver_verify_tags(chain.params(), &pending, &anchor(&chain, 9), &anchor(&chain, 0));
        assert_eq!(v, vec![Verdict::Authentic, Verdict::Forged, Verdict::Authentic]);
    }

    #[test]
    fn unverified_key_gates_everything() {
        let (chain, pending) = setup();
        let mut bad = anchor(&chain, 9);
        let mut bytes = bad.key.as_bytes().to_vec();
        bytes[15] ^= 0x80;
        bad.key = Key::from_bytes(bytes);
        let v = receiver_verify_tags(chain.params(), &pending, &bad, &anchor(&chain, 0));
        assert_eq!(v, vec![Verdict::KeyUnverified; 3]);
        // A key older than the tags cannot verify them.
        let v = receiver_verify_tags(chain.params(), &pending, &anchor(&chain, 7), &anchor(&chain, 0));
        assert_eq!(v, vec![Verdict::KeyUnverified; 3]);
    }
}
