//! Generates a short TESLA chain, checks a late key against the root and
//! shows how a broken dump is reported.

use osnma_lab::bitgrid::GstTime;
use osnma_lab::tesla::{ChainDump, HashFunction, MacFunction, TeslaChain, TeslaParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = TeslaParams::new(128, 40, HashFunction::Sha256, MacFunction::HmacSha256, 1, 20, GstTime::new(1200, 3600)?)?;
    let chain = TeslaChain::generate(params.clone(), &[0x5a; 16])?;
    println!("root K_0 = {}", chain.root_key().to_hex());

    let derivation = params.derivation();
    let k15 = chain.key(15).unwrap();
    let ok = derivation.verify_key(k15, 15, chain.root_key(), 0)?;
    println!("K_15 at {:?} chains to the root: {ok}", params.key_gst(15));

    let text = chain.dump().to_text();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[8] = "00".repeat(16);
    let tampered = ChainDump::parse(&(lines.join("\n") + "\n"))?;
    match tampered.first_broken_link() {
        Some(j) => println!("tampered dump breaks at key {j}"),
        None => println!("tampered dump verified"),
    }
    Ok(())
}
