//! Builds a MACK section, parses it back and verifies its tags once the key
//! of the next subframe is disclosed.

use osnma_lab::bitgrid::GstTime;
use osnma_lab::tesla::{
    build_mack, receiver_verify_tags, Adkd, ChainAnchor, HashFunction, MacFunction, MackMessage, MackRequest,
    PendingSubframe, PendingTag, TagInfo, TagRequest, TeslaChain, TeslaParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = TeslaParams::new(128, 40, HashFunction::Sha256, MacFunction::HmacSha256, 0, 10, GstTime::new(1200, 3600)?)?;
    let chain = TeslaChain::generate(params.clone(), &[9; 16])?;
    let ephemeris: Vec<u8> = (0..69).collect();
    let timing: Vec<u8> = (0..18).rev().collect();

    let req = MackRequest {
        subframe_index: 4,
        transmitter: 11,
        tag0_data: ephemeris.clone(),
        entries: vec![TagRequest { info: TagInfo::new(11, Adkd::Timing, 0)?, data: timing.clone() }],
        disclosure_delay: 1,
    };
    let mack = build_mack(&chain, &req)?;
    let bits = mack.to_bits(&params)?;
    let parsed = MackMessage::parse(&bits, &params)?;
    assert_eq!(parsed, mack);
    println!("{} bits, tag0 {:010X}, macseq {:03X}, {} tags", bits.len(), parsed.tag0.value(), parsed.macseq, parsed.tags.len());

    let mut tags = vec![PendingTag {
        tag: osnma_lab::tesla::Tag { bits: parsed.tag0, info: MackMessage::tag0_info(11) },
        data: ephemeris,
    }];
    tags.push(PendingTag { tag: parsed.tags[0], data: timing });
    let mut spoofed = tags[0].clone();
    spoofed.data[0] ^= 1;
    tags.push(spoofed);
    let pending = PendingSubframe { index: 4, tags };

    // The MACK of subframe 5 discloses K_4.
    let disclosed = ChainAnchor { key: chain.key(4).unwrap().clone(), index: 4 };
    let anchor = ChainAnchor { key: chain.root_key().clone(), index: 0 };
    for (i, v) in receiver_verify_tags(&params, &pending, &disclosed, &anchor).iter().enumerate() {
        println!("tag {i}: {v:?}");
    }
    Ok(())
}
