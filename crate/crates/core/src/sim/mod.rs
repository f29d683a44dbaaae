//! Discrete-time simulation of a broadcaster, a lossy channel, a receiver and
//! an optional adversary, one 30 s subframe per tick.
//!
//! Each tick every satellite emits one subframe. Satellite `i` sends block
//! `(tick + i) mod nb` of the DSM in force, so several satellites fill a DSM
//! faster than one. Inside the periodic DSM-PKR window even-numbered
//! satellites send the DSM-PKR instead of the DSM-KROOT.
//!
//! Runs are deterministic: every random stream is a ChaCha8 generator seeded
//! from the scenario seed and a label.

mod adversary;
mod broadcaster;
mod channel;
mod config;
mod log;
mod receiver;

pub use adversary::{brute_force, brute_force_theory, DataSpoofer, QuantumForger, TagBruteForcer};
pub use broadcaster::{
    nav_data, BroadcastSetup, Broadcaster, Emission, NavData, Timeline, EPHEMERIS_BYTES, TIMING_BYTES,
};
pub use channel::{LossyChannel, Reception};
pub use config::{AdversaryKind, ScenarioConfig, RENEWAL_RANGE};
pub use log::{digest, Actor, Event, EventKind, EventLog};
pub use receiver::{receiver_setup, Phase, Receiver, ReceiverSetup, TagOutcome};

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bitgrid::{BitError, GstTime};
use crate::dsm::{DsmError, MerkleLeaf, MerkleTree};
use crate::sigscheme::{KeyPair, SchemeError, SignatureScheme};
use crate::tesla::{Adkd, MackError, TeslaError, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{}", match .line { Some(n) => format!("scenario line {n}: {reason}"), None => format!("scenario: {reason}") })]
    Config { line: Option<usize>, reason: String },
    #[error(transparent)]
    Dsm(#[from] DsmError),
    #[error(transparent)]
    Tesla(#[from] TeslaError),
    #[error(transparent)]
    Mack(#[from] MackError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// Counters for one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub receptions: u64,
    pub tags: u64,
    pub authentic: u64,
    pub forged: u64,
    pub key_unverified: u64,
    /// Authentic verdicts on data that differs from what was broadcast.
    pub forged_accepted: u64,
    /// Forged verdicts on altered data.
    pub spoof_detected: u64,
    /// Forged verdicts on unaltered data.
    pub genuine_rejected: u64,
    pub first_auth_tick: Option<u32>,
    pub kroot_accepted: u64,
    pub kroot_rejected: u64,
    pub pkr_accepted: u64,
    pub pkr_rejected: u64,
    /// Distinct `(tick, prn)` received with all 15 pages.
    pub subframes_complete: u64,
    /// Distinct `(tick, prn)` whose header tag was found authentic.
    pub subframes_authenticated: u64,
    /// Distinct `(tick, prn)` still waiting at the end.
    pub subframes_awaiting_key: u64,
    /// Of those, subframes older than the latest accepted key.
    pub awaiting_before_last_key: u64,
    pub brute_force_attempts: u64,
    pub audit_violations: u64,
}

impl Summary {
    /// Authentic header tags over complete subframes that are no longer
    /// waiting for a key.
    pub fn authenticated_rate(&self) -> f64 {
        let settled = self.subframes_complete - self.subframes_awaiting_key;
        if settled == 0 {
            return 0.0;
        }
        self.subframes_authenticated as f64 / settled as f64
    }

    pub fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("receptions", self.receptions.to_string()),
            ("tags", self.tags.to_string()),
            ("authentic", self.authentic.to_string()),
            ("forged", self.forged.to_string()),
            ("key_unverified", self.key_unverified.to_string()),
            ("forged_accepted", self.forged_accepted.to_string()),
            ("spoof_detected", self.spoof_detected.to_string()),
            ("genuine_rejected", self.genuine_rejected.to_string()),
            (
                "first_auth_tick",
                self.first_auth_tick.map_or_else(|| "none".into(), |t| t.to_string()),
            ),
            ("kroot_accepted", self.kroot_accepted.to_string()),
            ("kroot_rejected", self.kroot_rejected.to_string()),
            ("pkr_accepted", self.pkr_accepted.to_string()),
            ("pkr_rejected", self.pkr_rejected.to_string()),
            ("subframes_complete", self.subframes_complete.to_string()),
            ("subframes_authenticated", self.subframes_authenticated.to_string()),
            ("subframes_awaiting_key", self.subframes_awaiting_key.to_string()),
            ("awaiting_before_last_key", self.awaiting_before_last_key.to_string()),
            ("authenticated_rate", format!("{:.4}", self.authenticated_rate())),
            ("brute_force_attempts", self.brute_force_attempts.to_string()),
            ("audit_violations", self.audit_violations.to_string()),
        ]
    }

    /// `metric,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"]).expect("in-memory write");
        for (k, v) in self.rows() {
            w.write_record([k, v.as_str()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("ASCII")
    }
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub log: EventLog,
    pub summary: Summary,
    pub outcomes: Vec<TagOutcome>,
}

fn sub_seed(seed: u64, label: &str) -> [u8; 32] {
    Sha256::new()
        .chain_update(label.as_bytes())
        .chain_update(seed.to_be_bytes())
        .finalize()
        .into()
}

fn rng(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(sub_seed(seed, label))
}

/// A 16-leaf tree holding `active` at `pkid` and filler keys elsewhere.
fn build_tree(
    scheme: &dyn SignatureScheme,
    npkt: u8,
    pkid: u8,
    active: &KeyPair,
    seed: u64,
    label: &str,
) -> Result<MerkleTree, SimError> {
    let leaves = (0..16u8)
        .map(|i| MerkleLeaf {
            npkt,
            npk: if i == pkid {
                active.public.clone()
            } else {
                scheme.keygen(sub_seed(seed ^ u64::from(i), label)).public
            },
        })
        .collect();
    Ok(MerkleTree::new(leaves)?)
}

/// Runs a scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let mut log = EventLog::default();
    let mut summary = Summary::default();
    let mut outcomes = Vec::new();
    if cfg.duration_subframes == 0 {
        return Ok(SimOutput { log, summary, outcomes });
    }
    let registry = cfg.registry()?;
    let scheme = registry.lookup(cfg.npkt)?;
    let start = GstTime::new(cfg.start_week, 0)?.add_subframes(i64::from(cfg.start_offset))?;
    let timeline = Timeline::new(start, cfg.renewal_period, cfg.renewal_lead, cfg.pkr_period, cfg.pkr_window)?;

    let genuine = scheme.keygen(sub_seed(cfg.seed, "genuine-key"));
    let tree = build_tree(scheme.as_ref(), cfg.npkt, cfg.pkid, &genuine, cfg.seed, "genuine-filler")?;
    let setup = BroadcastSetup {
        timeline,
        satellites: cfg.satellites,
        key_bits: cfg.key_bits,
        tag_bits: cfg.tag_bits,
        hash: cfg.hash,
        mac: cfg.mac,
        mode: cfg.bid_mode,
        signer: Arc::clone(&scheme),
        secret: genuine.secret.clone(),
        npkt: cfg.npkt,
        pkid: cfg.pkid,
        tree: tree.clone(),
        chain_seed: sub_seed(cfg.seed, "chain"),
        nav_seed: cfg.seed,
        cid_offset: 0,
        kroot_ids: (0..=10).collect(),
        pkr_id: 12,
    };
    let mut broadcaster = Broadcaster::new(setup.clone())?;

    let mut forger = match cfg.adversary {
        AdversaryKind::QuantumForger => {
            // Shor's algorithm recovers EC secrets; anything else stays out of
            // reach and the forger signs with a key of its own.
            let keys = if scheme.characterization().quantum_resistant {
                scheme.keygen(sub_seed(cfg.seed, "forger-key"))
            } else {
                genuine.clone()
            };
            let fake_tree = build_tree(scheme.as_ref(), cfg.npkt, cfg.pkid, &keys, cfg.seed, "forger-filler")?;
            let fake = BroadcastSetup {
                secret: keys.secret,
                tree: fake_tree,
                chain_seed: sub_seed(cfg.seed, "forger-chain"),
                nav_seed: cfg.seed ^ 0xA5A5_A5A5_A5A5_A5A5,
                cid_offset: 2,
                kroot_ids: vec![11],
                pkr_id: 15,
                ..setup
            };
            Some(QuantumForger {
                broadcaster: Broadcaster::new(fake)?,
                attack_start: cfg.attack_start,
            })
        }
        _ => None,
    };

    let rx_setup = receiver_setup(
        &tree,
        cfg.pkid,
        cfg.bid_mode,
        registry,
        cfg.trust_merkle_root,
        cfg.preload_public_key,
    );
    let mut receiver = Receiver::new(rx_setup, timeline.gst(0), &mut log);
    let channel = LossyChannel {
        page_loss: cfg.page_loss,
    };
    let mut channel_rng = rng(cfg.seed, "channel");
    let mut adversary_rng = rng(cfg.seed, "adversary");
    let mut complete = BTreeSet::new();
    let mut authenticated = BTreeSet::new();
    let mut last_tick = 0;

    for tick in 0..cfg.duration_subframes {
        last_tick = tick;
        let gst = timeline.gst(tick);
        let mut emissions = broadcaster.emit(tick)?;
        for e in &emissions {
            let payload = e.payload();
            log.push(tick, gst, Actor::Broadcaster, EventKind::Mack, digest(payload.mack_bytes()), format!("prn={}", e.prn));
        }
        if tick >= cfg.attack_start {
            match cfg.adversary {
                AdversaryKind::DataSpoofer { every, random_tags } => DataSpoofer {
                    every,
                    random_tags,
                    tag_bits: cfg.tag_bits,
                }
                .apply(tick, gst, &mut emissions, &mut adversary_rng, &mut log),
                AdversaryKind::TagBruteForcer { attempts } => {
                    TagBruteForcer {
                        attempts,
                        tag_bits: cfg.tag_bits,
                    }
                    .apply(tick, gst, &mut emissions, &mut adversary_rng, &mut log);
                    summary.brute_force_attempts += u64::from(attempts);
                }
                AdversaryKind::QuantumForger => {
                    if let Some(f) = forger.as_mut() {
                        f.apply(tick, gst, &mut emissions, &mut log)?;
                    }
                }
                AdversaryKind::None => {}
            }
        }
        let receptions: Vec<Reception> = emissions.iter().map(|e| channel.transmit(e, &mut channel_rng)).collect();
        for r in &receptions {
            summary.receptions += 1;
            if r.pages_lost > 0 {
                log.push(
                    tick,
                    gst,
                    Actor::Channel,
                    EventKind::Loss {
                        prn: r.prn,
                        pages: r.pages_lost,
                    },
                    "-",
                    "-",
                );
            } else {
                complete.insert((tick, r.prn));
            }
        }
        for o in receiver.step(tick, gst, &receptions, &mut log) {
            let truth = nav_data(cfg.seed, o.info.prn, o.origin);
            let expected = if o.info.adkd == Adkd::Timing { &truth.timing } else { &truth.ephemeris };
            let altered = o.data != *expected;
            summary.tags += 1;
            match o.verdict {
                Verdict::Authentic => {
                    summary.authentic += 1;
                    summary.forged_accepted += u64::from(altered);
                    summary.first_auth_tick.get_or_insert(o.tick);
                    if o.info.adkd == Adkd::EphemerisClock && o.info.prn == o.transmitter {
                        authenticated.insert((o.origin, o.transmitter));
                    }
                }
                Verdict::Forged => {
                    summary.forged += 1;
                    summary.spoof_detected += u64::from(altered);
                    summary.genuine_rejected += u64::from(!altered);
                }
                Verdict::KeyUnverified => summary.key_unverified += 1,
            }
            outcomes.push(o);
        }
    }

    let pending: BTreeSet<(u32, u8)> = receiver.pending().into_iter().collect();
    let last_key = receiver.last_key_rx();
    summary.subframes_complete = complete.len() as u64;
    summary.subframes_authenticated = authenticated.len() as u64;
    summary.subframes_awaiting_key = pending.len() as u64;
    summary.awaiting_before_last_key = pending
        .iter()
        .filter(|(t, _)| last_key.is_some_and(|k| *t < k) && *t < last_tick)
        .count() as u64;
    for e in log.events.iter().filter(|e| e.actor == Actor::Receiver) {
        let accepted = e.verdict == "Accepted";
        let rejected = e.verdict.starts_with("Rejected");
        match e.kind {
            EventKind::Kroot => {
                summary.kroot_accepted += u64::from(accepted);
                summary.kroot_rejected += u64::from(rejected);
            }
            EventKind::Pkr => {
                summary.pkr_accepted += u64::from(accepted);
                summary.pkr_rejected += u64::from(rejected);
            }
            _ => {}
        }
    }
    summary.audit_violations = log.audit().len() as u64;
    Ok(SimOutput { log, summary, outcomes })
}
