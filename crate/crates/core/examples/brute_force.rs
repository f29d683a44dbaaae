//! Empirical against theoretical success of random tag guessing.

use osnma_lab::bitgrid::GstTime;
use osnma_lab::sim::{brute_force, brute_force_theory};
use osnma_lab::tesla::{Adkd, HashFunction, Key, MacFunction, TagInfo, TeslaParams};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let info = TagInfo::new(3, Adkd::EphemerisClock, 0)?;
    let start = GstTime::new(1200, 3600)?;
    let trials = 2000;
    for (bits, attempts) in [(10u32, 1u64), (10, 64), (12, 256), (40, 1 << 16)] {
        let params = TeslaParams::with_test_tag_width(128, bits, HashFunction::Sha256, MacFunction::HmacSha256, 0, 10, start)?;
        let mut hits = 0;
        for t in 0..trials {
            let key = Key::from_bytes(vec![t as u8; 16]);
            let data = (t as u32).to_be_bytes();
            hits += brute_force(&params, &key, info, &data, attempts, &mut rng)?.is_some() as u32;
        }
        println!(
            "{bits:2}-bit tags, {attempts:6} guesses: {:.4} measured, {:.4} expected",
            f64::from(hits) / f64::from(trials),
            brute_force_theory(bits, attempts)
        );
    }
    Ok(())
}
