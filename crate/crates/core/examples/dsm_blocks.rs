//! Signs a DSM-KROOT with ECDSA P-256, cuts it into blocks and reassembles it
//! from blocks that arrive out of order.

use osnma_lab::bitgrid::GstTime;
use osnma_lab::dsm::{build_dsm_kroot, segment, verify_kroot, Accumulate, BidMode, DsmAccumulator, DsmKroot, KrootHeader, NmaHeader};
use osnma_lab::sigscheme::Registry;
use osnma_lab::tesla::{HashFunction, MacFunction, TeslaChain, TeslaParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = TeslaParams::new(128, 40, HashFunction::Sha256, MacFunction::HmacSha256, 0, 120, GstTime::new(1200, 3600)?)?;
    let chain = TeslaChain::generate(params, &[3; 16])?;
    let scheme = Registry::new().provider("ECDSA-P256")?;
    let keys = scheme.keygen([1; 32]);

    let nma = NmaHeader::operational(0);
    let header = KrootHeader { nma, pkid: 0, maclt: 0, alpha: 0xA1B2_C3D4_E5F6 };
    let kroot = build_dsm_kroot(&chain, scheme.as_ref(), &keys.secret, header, BidMode::Nominal)?;
    let bits = kroot.to_bits(BidMode::Nominal)?;
    let blocks = segment(3, &bits, BidMode::Nominal)?;
    println!("DSM-KROOT: {} bits in {} blocks", bits.len(), blocks.len());

    let mut acc = DsmAccumulator::new(BidMode::Nominal);
    let order = [4, 0, 6, 2, 0, 7, 5, 1, 3];
    for &i in &order {
        match acc.push(&blocks[i]) {
            Accumulate::Incomplete => println!("block {i}: waiting"),
            Accumulate::Conflict => println!("block {i}: conflict"),
            Accumulate::Complete(all) => {
                let back = DsmKroot::parse(&all, BidMode::Nominal, scheme.characterization().sig_bits as usize)?;
                let ok = verify_kroot(&back, nma, scheme.as_ref(), &keys.public);
                println!("block {i}: complete, signature valid: {ok}");
            }
        }
    }
    Ok(())
}
