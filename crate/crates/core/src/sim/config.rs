use std::fmt::Write as _;

use super::SimError;
use crate::dsm::{BidMode, DsmKroot, DsmPkr};
use crate::sigscheme::Registry;
use crate::tesla::{HashFunction, MacFunction};

/// Allowed chain renewal periods in subframes: one hour to one day.
pub const RENEWAL_RANGE: std::ops::RangeInclusive<u32> = 120..=2880;
const HOUR_SUBFRAMES: u32 = 120;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryKind {
    None,
    /// Alters the ephemeris of one satellite every `every` subframes.
    DataSpoofer { every: u32, random_tags: bool },
    /// Sends `attempts` forged copies with random tags per subframe.
    TagBruteForcer { attempts: u32 },
    /// Takes over the signal holding whatever EC private keys it can derive.
    QuantumForger,
}

impl AdversaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::None => "none",
            AdversaryKind::DataSpoofer { .. } => "spoofer",
            AdversaryKind::TagBruteForcer { .. } => "brute_force",
            AdversaryKind::QuantumForger => "quantum",
        }
    }
}

/// A scenario, read from flat `key = value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub duration_subframes: u32,
    pub satellites: u8,
    pub seed: u64,
    pub key_bits: u32,
    pub tag_bits: u32,
    pub hash: HashFunction,
    pub mac: MacFunction,
    pub npkt: u8,
    /// NPKT extensions as `(code, scheme)`.
    pub extensions: Vec<(u8, String)>,
    pub bid_mode: BidMode,
    /// Merkle leaf of the key that signs DSM-KROOTs.
    pub pkid: u8,
    pub renewal_period: u32,
    /// Subframes before a renewal during which the next DSM-KROOT is sent.
    pub renewal_lead: u32,
    pub pkr_period: u32,
    pub pkr_window: u32,
    pub start_week: u16,
    pub start_offset: u32,
    pub page_loss: f64,
    pub adversary: AdversaryKind,
    pub attack_start: u32,
    pub trust_merkle_root: bool,
    /// Receiver starts holding the DSM-PKR of the active key.
    pub preload_public_key: bool,
}

impl Default for ScenarioConfig {
    fn default() -> ScenarioConfig {
        ScenarioConfig {
            duration_subframes: 200,
            satellites: 1,
            seed: 1,
            key_bits: 128,
            tag_bits: 40,
            hash: HashFunction::Sha256,
            mac: MacFunction::HmacSha256,
            npkt: 1,
            extensions: Vec::new(),
            bid_mode: BidMode::Nominal,
            pkid: 0,
            renewal_period: 2880,
            renewal_lead: 120,
            pkr_period: 720,
            pkr_window: 60,
            start_week: 1200,
            start_offset: 120,
            page_loss: 0.0,
            adversary: AdversaryKind::None,
            attack_start: 0,
            trust_merkle_root: true,
            preload_public_key: true,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl ScenarioConfig {
    /// Parses scenario text. Keys not listed in [`ScenarioConfig::to_text`]
    /// are rejected.
    pub fn parse(text: &str) -> Result<ScenarioConfig, SimError> {
        let mut cfg = ScenarioConfig::default();
        let mut adversary = "none".to_string();
        let mut spoof_every = 1u32;
        let mut random_tags = false;
        let mut attempts = 1u32;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| SimError::Config {
                line: Some(i + 1),
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            fn num<T: std::str::FromStr>(
                v: &str,
                key: &str,
                bad: &dyn Fn(String) -> SimError,
            ) -> Result<T, SimError> {
                v.parse().map_err(|_| bad(format!("`{key}` needs a number, got `{v}`")))
            }
            let flag = |v: &str| parse_bool(v).ok_or_else(|| bad(format!("`{key}` needs true or false")));
            match key {
                "duration_subframes" => cfg.duration_subframes = num(value, key, &bad)?,
                "satellites" => cfg.satellites = num(value, key, &bad)?,
                "seed" => cfg.seed = num(value, key, &bad)?,
                "key_bits" => cfg.key_bits = num(value, key, &bad)?,
                "tag_bits" => cfg.tag_bits = num(value, key, &bad)?,
                "hash" => cfg.hash = HashFunction::from_name(value).map_err(|e| bad(e.to_string()))?,
                "mac" => cfg.mac = MacFunction::from_name(value).map_err(|e| bad(e.to_string()))?,
                "npkt" => cfg.npkt = num(value, key, &bad)?,
                "extension" => {
                    let (code, scheme) = value
                        .split_once(':')
                        .ok_or_else(|| bad("extension needs `<npkt>:<scheme>`".into()))?;
                    cfg.extensions
                        .push((num(code.trim(), key, &bad)?, scheme.trim().to_string()));
                }
                "bid_mode" => {
                    cfg.bid_mode = BidMode::from_name(value)
                        .ok_or_else(|| bad(format!("unknown bid_mode `{value}`")))?
                }
                "pkid" => cfg.pkid = num(value, key, &bad)?,
                "renewal_period_subframes" => cfg.renewal_period = num(value, key, &bad)?,
                "renewal_lead_subframes" => cfg.renewal_lead = num(value, key, &bad)?,
                "pkr_period_subframes" => cfg.pkr_period = num(value, key, &bad)?,
                "pkr_window_subframes" => cfg.pkr_window = num(value, key, &bad)?,
                "start_week" => cfg.start_week = num(value, key, &bad)?,
                "start_offset_subframes" => cfg.start_offset = num(value, key, &bad)?,
                "page_loss" => cfg.page_loss = num(value, key, &bad)?,
                "adversary" => adversary = value.to_string(),
                "spoof_every" => spoof_every = num(value, key, &bad)?,
                "spoof_tags" => {
                    random_tags = match value {
                        "keep" => false,
                        "random" => true,
                        _ => return Err(bad("spoof_tags is `keep` or `random`".into())),
                    }
                }
                "brute_force_attempts" => attempts = num(value, key, &bad)?,
                "attack_start_subframe" => cfg.attack_start = num(value, key, &bad)?,
                "trust_merkle_root" => cfg.trust_merkle_root = flag(value)?,
                "preload_public_key" => cfg.preload_public_key = flag(value)?,
                _ => return Err(bad(format!("unknown key `{key}`"))),
            }
        }
        cfg.adversary = match adversary.as_str() {
            "none" => AdversaryKind::None,
            "spoofer" => AdversaryKind::DataSpoofer {
                every: spoof_every,
                random_tags,
            },
            "brute_force" => AdversaryKind::TagBruteForcer { attempts },
            "quantum" => AdversaryKind::QuantumForger,
            other => {
                return Err(SimError::Config {
                    line: None,
                    reason: format!("unknown adversary `{other}`"),
                })
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("duration_subframes", self.duration_subframes.to_string());
        kv("satellites", self.satellites.to_string());
        kv("seed", self.seed.to_string());
        kv("key_bits", self.key_bits.to_string());
        kv("tag_bits", self.tag_bits.to_string());
        kv("hash", self.hash.name().to_string());
        kv("mac", self.mac.name().to_string());
        kv("npkt", self.npkt.to_string());
        for (code, scheme) in &self.extensions {
            kv("extension", format!("{code}:{scheme}"));
        }
        kv("bid_mode", self.bid_mode.name().to_string());
        kv("pkid", self.pkid.to_string());
        kv("renewal_period_subframes", self.renewal_period.to_string());
        kv("renewal_lead_subframes", self.renewal_lead.to_string());
        kv("pkr_period_subframes", self.pkr_period.to_string());
        kv("pkr_window_subframes", self.pkr_window.to_string());
        kv("start_week", self.start_week.to_string());
        kv("start_offset_subframes", self.start_offset.to_string());
        kv("page_loss", self.page_loss.to_string());
        kv("adversary", self.adversary.name().to_string());
        match self.adversary {
            AdversaryKind::DataSpoofer { every, random_tags } => {
                kv("spoof_every", every.to_string());
                kv("spoof_tags", if random_tags { "random" } else { "keep" }.to_string());
            }
            AdversaryKind::TagBruteForcer { attempts } => {
                kv("brute_force_attempts", attempts.to_string())
            }
            _ => {}
        }
        kv("attack_start_subframe", self.attack_start.to_string());
        kv("trust_merkle_root", self.trust_merkle_root.to_string());
        kv("preload_public_key", self.preload_public_key.to_string());
        s
    }

    /// NPKT registry with the scenario's extensions.
    pub fn registry(&self) -> Result<Registry, SimError> {
        let mut reg = Registry::new();
        for (code, scheme) in &self.extensions {
            reg.assign(*code, scheme).map_err(|e| SimError::Config {
                line: None,
                reason: e.to_string(),
            })?;
        }
        Ok(reg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: String| Err(SimError::Config { line: None, reason });
        if !RENEWAL_RANGE.contains(&self.renewal_period) || self.renewal_period % HOUR_SUBFRAMES != 0 {
            return bad(format!(
                "renewal_period_subframes must be a whole number of hours in 120..=2880, got {}",
                self.renewal_period
            ));
        }
        if self.renewal_lead >= self.renewal_period {
            return bad("renewal_lead_subframes must be shorter than the renewal period".into());
        }
        if !(0.0..1.0).contains(&self.page_loss) {
            return bad(format!("page_loss must be in [0, 1), got {}", self.page_loss));
        }
        if !(1..=36).contains(&self.satellites) {
            return bad(format!("satellites must be 1..=36, got {}", self.satellites));
        }
        if self.pkr_period == 0 || self.pkr_window > self.pkr_period {
            return bad("pkr window must fit inside a non-empty pkr period".into());
        }
        if self.pkid > 15 {
            return bad(format!("pkid {} does not fit in 4 bits", self.pkid));
        }
        match self.adversary {
            AdversaryKind::DataSpoofer { every: 0, .. } => return bad("spoof_every must be at least 1".into()),
            _ => {}
        }
        crate::tesla::TeslaParams::new(
            self.key_bits,
            self.tag_bits,
            self.hash,
            self.mac,
            0,
            self.renewal_period,
            crate::bitgrid::GstTime::new(self.start_week, 0).map_err(|e| SimError::Config {
                line: None,
                reason: e.to_string(),
            })?,
        )
        .map_err(|e| SimError::Config {
            line: None,
            reason: e.to_string(),
        })?;
        let reg = self.registry()?;
        let scheme = reg.lookup(self.npkt).map_err(|e| SimError::Config {
            line: None,
            reason: e.to_string(),
        })?;
        let c = scheme.characterization();
        if let Err(e) = DsmKroot::length_in(self.bid_mode, self.key_bits as usize, c.sig_bits as usize) {
            return bad(e.to_string());
        }
        if let Err(e) = DsmPkr::length_in(self.bid_mode, c.pk_bits as usize) {
            return bad(e.to_string());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ScenarioConfig {
            satellites: 6,
            page_loss: 0.2,
            npkt: 7,
            extensions: vec![(7, "Falcon-512".into())],
            bid_mode: BidMode::Extended,
            adversary: AdversaryKind::DataSpoofer {
                every: 3,
                random_tags: true,
            },
            ..ScenarioConfig::default()
        };
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
        cfg.adversary = AdversaryKind::TagBruteForcer { attempts: 9 };
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "renewal_period_subframes = 60",
            "renewal_period_subframes = 150",
            "page_loss = 1.0",
            "satellites = 0",
            "nonsense = 1",
            "adversary = ghost",
            "key_bits = 64",
            "npkt = 7",
            "npkt = 4",
            "npkt = 7\nextension = 7:Falcon-512",
            "seed",
            "trust_merkle_root = maybe",
        ] {
            assert!(ScenarioConfig::parse(text).is_err(), "{text}");
        }
        let err = ScenarioConfig::parse("# comment\nsatellites = x").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn pqc_needs_extended_bid() {
        let text = "npkt = 7\nextension = 7:Falcon-512\nbid_mode = extended";
        assert_eq!(ScenarioConfig::parse(text).unwrap().npkt, 7);
    }
}
