//! Golden vectors: deterministic messages rendered as annotated hex text.
//!
//! [`generate`] rebuilds every file from fixed inputs; [`check`] compares the
//! result with a stored directory so codec changes show up as diffs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bitgrid::{format_page_vectors, to_bytes, GstTime, SubframePayload};
use crate::dsm::{
    build_dsm_kroot, build_dsm_pkr, segment, BidMode, HkrootMessage, KrootHeader, MerkleLeaf, MerkleTree,
    NmaHeader,
};
use crate::sigscheme::Registry;
use crate::tesla::{
    build_mack, Adkd, HashFunction, MacFunction, MackRequest, TagInfo, TagRequest, TeslaChain, TeslaParams,
};

/// Environment variable that overrides [`default_dir`].
pub const DIR_ENV: &str = "OSNMA_LAB_VECTORS";

pub const FILES: [&str; 6] = ["chain.txt", "mack.txt", "kroot.txt", "pkr.txt", "merkle.txt", "pages.txt"];

pub fn default_dir() -> PathBuf {
    std::env::var_os(DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/vectors")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFile {
    pub name: &'static str,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Match,
    Mismatch,
    Missing,
}

fn hexbits(bits: &crate::bitgrid::BitSlice) -> String {
    hex::encode_upper(to_bytes(bits))
}

/// Builds every golden file from fixed seeds.
pub fn generate() -> Result<Vec<VectorFile>, Box<dyn std::error::Error>> {
    let start = GstTime::new(1200, 3600)?;
    let params = TeslaParams::new(128, 40, HashFunction::Sha256, MacFunction::HmacSha256, 0, 10, start)?;
    let seed: Vec<u8> = (0u8..16).collect();
    let chain = TeslaChain::generate(params.clone(), &seed)?;
    let mode = BidMode::Nominal;

    let prn = 5;
    let req = MackRequest {
        subframe_index: 3,
        transmitter: prn,
        tag0_data: (0u8..69).collect(),
        entries: vec![TagRequest {
            info: TagInfo::new(prn, Adkd::Timing, 0)?,
            data: (100u8..118).collect(),
        }],
        disclosure_delay: 1,
    };
    let mack = build_mack(&chain, &req)?;
    let mack_bits = mack.to_bits(&params)?;
    let mut mack_txt = format!("# MACK subframe=3 prn={prn} l_K=128 l_T=40 HMAC-SHA-256\nhex={}\n", hexbits(&mack_bits));
    writeln!(mack_txt, "tag0={:010X}", mack.tag0.value())?;
    writeln!(mack_txt, "macseq={:03X}", mack.macseq)?;
    for (i, t) in mack.tags.iter().enumerate() {
        writeln!(
            mack_txt,
            "tag{} prn={} adkd={} cop={} bits={:010X}",
            i + 1,
            t.info.prn,
            t.info.adkd.code(),
            t.info.cop,
            t.bits.value()
        )?;
    }
    writeln!(mack_txt, "key index=2 {}", mack.key.to_hex())?;

    let registry = Registry::new();
    let scheme = registry.lookup(1)?;
    let keys = scheme.keygen([7; 32]);
    let leaves = (0..16u8)
        .map(|i| MerkleLeaf {
            npkt: 1,
            npk: if i == 0 { keys.public.clone() } else { scheme.keygen([i; 32]).public },
        })
        .collect();
    let tree = MerkleTree::new(leaves)?;

    let nma = NmaHeader::operational(0);
    let header = KrootHeader {
        nma,
        pkid: 0,
        maclt: 0,
        alpha: 0x0123_4567_89AB,
    };
    let kroot = build_dsm_kroot(&chain, scheme.as_ref(), &keys.secret, header, mode)?;
    let kroot_bits = kroot.to_bits(mode)?;
    let kroot_txt = format!(
        "# DSM-KROOT nominal ECDSA-P256 nma={:02X}\nhex={}\nnb={} pkid={} cidkr={} hash={} mac={} l_K={} l_T={} maclt={}\nstart={} alpha={:012X}\nkroot={}\nds={}\n",
        nma.to_u8(),
        hexbits(&kroot_bits),
        kroot_bits.len() / mode.block_bits(),
        kroot.pkid,
        kroot.cidkr,
        kroot.hash.name(),
        kroot.mac.name(),
        kroot.key_bits,
        kroot.tag_bits,
        kroot.maclt,
        kroot.start,
        kroot.alpha,
        kroot.kroot.to_hex(),
        hex::encode_upper(&kroot.ds),
    );

    let pkr = build_dsm_pkr(&keys.public, 1, 0, &tree, mode)?;
    let pkr_bits = pkr.to_bits(mode)?;
    let mut pkr_txt = format!(
        "# DSM-PKR nominal\nhex={}\nnb={} npkt={} npkid={}\n",
        hexbits(&pkr_bits),
        pkr_bits.len() / mode.block_bits(),
        pkr.npkt,
        pkr.npkid
    );
    for (i, node) in pkr.path.iter().enumerate() {
        writeln!(pkr_txt, "path{i}={}", hex::encode_upper(node))?;
    }
    writeln!(pkr_txt, "npk={}", hex::encode_upper(&pkr.npk))?;

    let blocks = segment(0, &kroot_bits, mode)?;
    let mut subframes = Vec::new();
    for block in blocks.iter().take(2) {
        let hk = HkrootMessage { nma, block: block.clone() }.to_bits(mode)?;
        subframes.push(SubframePayload::from_bits(&hk, &mack_bits)?.disassemble());
    }
    let pages = format!(
        "# Two subframes: DSM-KROOT blocks 0 and 1 with the MACK above\n{}",
        format_page_vectors(&subframes)
    );

    Ok(vec![
        VectorFile { name: "chain.txt", text: chain.dump().to_text() },
        VectorFile { name: "mack.txt", text: mack_txt },
        VectorFile { name: "kroot.txt", text: kroot_txt },
        VectorFile { name: "pkr.txt", text: pkr_txt },
        VectorFile { name: "merkle.txt", text: tree.to_file() },
        VectorFile { name: "pages.txt", text: pages },
    ])
}

pub fn write(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    fs::create_dir_all(dir)?;
    for f in generate()? {
        fs::write(dir.join(f.name), f.text)?;
    }
    Ok(())
}

pub fn check(dir: &Path) -> Result<Vec<(&'static str, Status)>, Box<dyn std::error::Error>> {
    Ok(generate()?
        .into_iter()
        .map(|f| {
            let status = match fs::read_to_string(dir.join(f.name)) {
                Ok(stored) if stored == f.text => Status::Match,
                Ok(_) => Status::Mismatch,
                Err(_) => Status::Missing,
            };
            (f.name, status)
        })
        .collect())
}
