use rand::Rng;

use super::broadcaster::{Broadcaster, Emission};
use super::log::{digest, Actor, EventKind, EventLog};
use super::SimError;
use crate::bitgrid::{GstTime, SubframePayload};
use crate::tesla::{compute_tag, Key, TagBits, TagInfo, TeslaError, TeslaParams};

/// Flips ephemeris bits of one satellite every `every` subframes.
#[derive(Clone, Copy, Debug)]
pub struct DataSpoofer {
    pub every: u32,
    pub random_tags: bool,
    pub tag_bits: u32,
}

impl DataSpoofer {
    pub fn apply(
        &self,
        tick: u32,
        gst: GstTime,
        emissions: &mut [Emission],
        rng: &mut impl Rng,
        log: &mut EventLog,
    ) {
        if emissions.is_empty() || tick % self.every != 0 {
            return;
        }
        let n = emissions.len() as u32;
        let e = &mut emissions[(tick % n) as usize];
        e.nav.ephemeris[0] ^= 0xFF;
        if self.random_tags {
            overwrite_tag0(e, self.tag_bits, rng);
        }
        log.push(tick, gst, Actor::Adversary, EventKind::Spoof { prn: e.prn }, digest(&e.nav.ephemeris), "-");
    }
}

/// Replaces the header tag of a MACK with random bits.
fn overwrite_tag0(e: &mut Emission, tag_bits: u32, rng: &mut impl Rng) {
    let payload = e.payload();
    let mut mack = payload.mack_bits().to_bitvec();
    for i in 0..tag_bits as usize {
        mack.set(i, rng.gen());
    }
    let p = SubframePayload::from_bits(payload.hkroot_bits(), &mack).expect("same sizes");
    e.set_payload(&p);
}

/// Sends `attempts` extra copies of one satellite's subframe per tick, each
/// with altered ephemeris and a fresh random header tag.
#[derive(Clone, Copy, Debug)]
pub struct TagBruteForcer {
    pub attempts: u32,
    pub tag_bits: u32,
}

impl TagBruteForcer {
    pub fn apply(
        &self,
        tick: u32,
        gst: GstTime,
        emissions: &mut Vec<Emission>,
        rng: &mut impl Rng,
        log: &mut EventLog,
    ) {
        if emissions.is_empty() || self.attempts == 0 {
            return;
        }
        let target = emissions[tick as usize % emissions.len()].clone();
        for _ in 0..self.attempts {
            let mut copy = target.clone();
            rng.fill(&mut copy.nav.ephemeris[..]);
            overwrite_tag0(&mut copy, self.tag_bits, rng);
            emissions.push(copy);
        }
        log.push(
            tick,
            gst,
            Actor::Adversary,
            EventKind::BruteForce {
                prn: target.prn,
                attempts: self.attempts,
            },
            "-",
            "-",
        );
    }
}

/// Replaces the whole signal with that of its own broadcaster from
/// `attack_start` on.
#[derive(Debug)]
pub struct QuantumForger {
    pub broadcaster: Broadcaster,
    pub attack_start: u32,
}

impl QuantumForger {
    pub fn apply(
        &mut self,
        tick: u32,
        gst: GstTime,
        emissions: &mut Vec<Emission>,
        log: &mut EventLog,
    ) -> Result<(), SimError> {
        if tick < self.attack_start {
            return Ok(());
        }
        if tick == self.attack_start {
            log.push(tick, gst, Actor::Adversary, EventKind::Takeover, "-", "-");
        }
        *emissions = self.broadcaster.emit(tick)?;
        Ok(())
    }
}

/// Guesses random tags until one matches the MAC of `data` under `key`.
///
/// Returns the matching tag, or `None` after `attempts` misses.
pub fn brute_force(
    params: &TeslaParams,
    key: &Key,
    info: TagInfo,
    data: &[u8],
    attempts: u64,
    rng: &mut impl Rng,
) -> Result<Option<TagBits>, TeslaError> {
    let genuine = compute_tag(key, data, params, info)?;
    let width = params.tag_bits();
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    for _ in 0..attempts {
        let guess = TagBits::new(rng.gen::<u64>() & mask, width)?;
        if guess == genuine {
            return Ok(Some(guess));
        }
    }
    Ok(None)
}

/// Probability that `attempts` independent guesses hit an `tag_bits`-bit tag.
pub fn brute_force_theory(tag_bits: u32, attempts: u64) -> f64 {
    let p = 0.5f64.powi(tag_bits as i32);
    1.0 - (1.0 - p).powf(attempts as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tesla::{Adkd, HashFunction, MacFunction};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(lt: u32) -> TeslaParams {
        TeslaParams::with_test_tag_width(
            128,
            lt,
            HashFunction::Sha256,
            MacFunction::HmacSha256,
            0,
            10,
            GstTime::new(1200, 0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_attempts_never_succeed() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let info = TagInfo::new(1, Adkd::EphemerisClock, 0).unwrap();
        let key = Key::from_bytes(vec![7; 16]);
        assert_eq!(brute_force(&params(1), &key, info, b"d", 0, &mut rng).unwrap(), None);
        assert!(brute_force(&params(1), &key, info, b"d", 200, &mut rng).unwrap().is_some());
    }

    #[test]
    fn theory_values() {
        assert_eq!(brute_force_theory(10, 0), 0.0);
        assert!((brute_force_theory(10, 1024) - 0.6323).abs() < 1e-3);
        assert!((brute_force_theory(16, 1) - 2f64.powi(-16)).abs() < 1e-12);
    }
}
