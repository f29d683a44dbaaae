use std::collections::BTreeMap;

use super::broadcaster::NavData;
use super::channel::Reception;
use super::log::{digest, Actor, EventKind, EventLog};
use crate::bitgrid::{BitReader, BitSlice, BitString, GstTime};
use crate::dsm::{
    verify_kroot, verify_pkr, BidMode, Cpks, DsmAccumulator, DsmKind, DsmKroot, DsmPkr, HkrootMessage,
    NmaHeader, Accumulate,
};
use crate::dsm::MerkleTree;
use crate::sigscheme::Registry;
use crate::tesla::{
    macseq, receiver_verify_tags, ChainAnchor, Key, MackMessage, PendingSubframe, PendingTag, Tag,
    TagInfo, TeslaParams, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    ColdStart,
    HaveMerkleRoot,
    HavePublicKey,
    HaveKroot,
    Authenticating,
}

#[derive(Clone, Debug)]
pub struct ReceiverSetup {
    pub mode: BidMode,
    pub registry: Registry,
    /// Installed out of band.
    pub merkle_root: Option<[u8; 32]>,
    /// A DSM-PKR stored from an earlier session.
    pub preload: Option<DsmPkr>,
    /// Chain length assumed for every DSM-KROOT.
    pub chain_length: u32,
    /// Subframes a MACK may wait for a DSM-KROOT before it is dropped.
    pub raw_limit: u32,
}

/// A verdict on one received tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagOutcome {
    pub origin: u32,
    pub transmitter: u8,
    pub info: TagInfo,
    pub data: Vec<u8>,
    pub verdict: Verdict,
    pub tick: u32,
}

#[derive(Clone, Debug)]
struct VerifiedChain {
    params: TeslaParams,
    root: Key,
    best: ChainAnchor,
    /// Subframe in which `best` arrived.
    best_rx: u32,
}

#[derive(Clone, Debug)]
struct RawMack {
    tick: u32,
    gst: GstTime,
    prn: u8,
    bits: BitString,
    nav: NavData,
}

#[derive(Clone, Debug)]
struct ParsedMack {
    tick: u32,
    gst: GstTime,
    chain: usize,
    index: u32,
    prn: u8,
    mack: MackMessage,
    nav: NavData,
}

/// Receiver state machine: DSM reassembly, key bootstrapping and delayed tag
/// verification.
#[derive(Debug)]
pub struct Receiver {
    setup: ReceiverSetup,
    phase: Phase,
    keys: BTreeMap<u8, (u8, Vec<u8>)>,
    chains: Vec<VerifiedChain>,
    acc: DsmAccumulator,
    raw: Vec<RawMack>,
    parsed: Vec<ParsedMack>,
    last_cpks: Option<Cpks>,
}

impl Receiver {
    pub fn new(setup: ReceiverSetup, gst: GstTime, log: &mut EventLog) -> Receiver {
        let mut rx = Receiver {
            acc: DsmAccumulator::new(setup.mode),
            setup,
            phase: Phase::ColdStart,
            keys: BTreeMap::new(),
            chains: Vec::new(),
            raw: Vec::new(),
            parsed: Vec::new(),
            last_cpks: None,
        };
        if let Some(root) = rx.setup.merkle_root {
            rx.set_phase(Phase::HaveMerkleRoot, 0, gst, log);
            log.push(0, gst, Actor::Receiver, EventKind::Phase, hex::encode(&root[..8]), "root installed");
        }
        if let Some(pkr) = rx.setup.preload.clone() {
            rx.accept_pkr(&pkr, 0, gst, log);
        }
        rx
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Public keys verified so far, by PKID.
    pub fn public_keys(&self) -> impl Iterator<Item = (&u8, &(u8, Vec<u8>))> {
        self.keys.iter()
    }

    /// Root keys of the verified chains.
    pub fn chain_roots(&self) -> Vec<&Key> {
        self.chains.iter().map(|c| &c.root).collect()
    }

    /// `(tick, prn)` of every MACK still waiting for a verdict.
    pub fn pending(&self) -> Vec<(u32, u8)> {
        let raw = self.raw.iter().map(|r| (r.tick, r.prn));
        let parsed = self.parsed.iter().map(|p| (p.tick, p.prn));
        raw.chain(parsed).collect()
    }

    /// Latest subframe in which a chain key was accepted.
    pub fn last_key_rx(&self) -> Option<u32> {
        self.chains.iter().filter(|c| c.best.index > 0).map(|c| c.best_rx).max()
    }

    fn set_phase(&mut self, phase: Phase, tick: u32, gst: GstTime, log: &mut EventLog) {
        if phase != self.phase {
            self.phase = phase;
            log.push(tick, gst, Actor::Receiver, EventKind::Phase, "-", format!("{phase:?}"));
        }
    }

    fn raise_phase(&mut self, phase: Phase, tick: u32, gst: GstTime, log: &mut EventLog) {
        if phase > self.phase {
            self.set_phase(phase, tick, gst, log);
        }
    }

    /// Processes one subframe's receptions and returns every verdict reached.
    pub fn step(
        &mut self,
        tick: u32,
        gst: GstTime,
        receptions: &[Reception],
        log: &mut EventLog,
    ) -> Vec<TagOutcome> {
        for r in receptions {
            let Some((payload, nav)) = &r.complete else {
                continue;
            };
            match HkrootMessage::parse(payload.hkroot_bits(), self.setup.mode) {
                Ok(msg) => {
                    self.on_header(msg.nma, tick, gst, log);
                    match self.acc.push(&msg.block) {
                        Accumulate::Complete(bits) => self.on_dsm(msg.block.dsm_id, &bits, msg.nma, tick, gst, log),
                        Accumulate::Conflict => log.push(
                            tick,
                            gst,
                            Actor::Receiver,
                            EventKind::Dsm,
                            digest(&crate::bitgrid::to_bytes(&msg.block.bits)),
                            format!("conflict id={}", msg.block.dsm_id),
                        ),
                        Accumulate::Incomplete => {}
                    }
                }
                Err(e) => log.push(tick, gst, Actor::Receiver, EventKind::Dsm, "-", format!("Rejected {e}")),
            }
            self.raw.push(RawMack {
                tick,
                gst,
                prn: r.prn,
                bits: payload.mack_bits().to_bitvec(),
                nav: nav.clone(),
            });
        }
        self.resolve_raw(tick, gst, log);
        self.verify_pending(tick, gst, log)
    }

    /// Applies CPKS changes: a chain revocation drops every chain, a public
    /// key revocation drops keys as well.
    pub fn on_header(&mut self, nma: NmaHeader, tick: u32, gst: GstTime, log: &mut EventLog) {
        if self.last_cpks == Some(nma.cpks) {
            return;
        }
        self.last_cpks = Some(nma.cpks);
        match nma.cpks {
            Cpks::ChainRevoked if self.phase > Phase::HavePublicKey => {
                self.chains.clear();
                self.parsed.clear();
                self.set_phase(Phase::HavePublicKey, tick, gst, log);
            }
            Cpks::PublicKeyRevoked if self.phase > Phase::HaveMerkleRoot => {
                self.chains.clear();
                self.parsed.clear();
                self.keys.clear();
                self.set_phase(Phase::HaveMerkleRoot, tick, gst, log);
            }
            _ => {}
        }
    }

    fn on_dsm(&mut self, id: u8, bits: &BitSlice, nma: NmaHeader, tick: u32, gst: GstTime, log: &mut EventLog) {
        match DsmKind::of(id) {
            DsmKind::Pkr => {
                let reg = &self.setup.registry;
                let parsed = DsmPkr::parse(bits, self.setup.mode, |npkt| {
                    reg.lookup(npkt).ok().map(|s| s.characterization().pk_bits as usize)
                });
                match parsed {
                    Ok(pkr) => self.accept_pkr(&pkr, tick, gst, log),
                    Err(e) => log.push(tick, gst, Actor::Receiver, EventKind::Pkr, "-", format!("Rejected {e}")),
                }
            }
            DsmKind::Kroot => self.on_kroot(bits, nma, tick, gst, log),
        }
    }

    fn accept_pkr(&mut self, pkr: &DsmPkr, tick: u32, gst: GstTime, log: &mut EventLog) {
        let d = digest(&pkr.npk);
        let ok = self.setup.merkle_root.is_some_and(|root| verify_pkr(pkr, &root));
        if !ok {
            log.push(tick, gst, Actor::Receiver, EventKind::Pkr, d, "Rejected");
            return;
        }
        self.keys.insert(pkr.npkid, (pkr.npkt, pkr.npk.clone()));
        log.push(tick, gst, Actor::Receiver, EventKind::Pkr, d, "Accepted");
        self.raise_phase(Phase::HavePublicKey, tick, gst, log);
    }

    fn on_kroot(&mut self, bits: &BitSlice, nma: NmaHeader, tick: u32, gst: GstTime, log: &mut EventLog) {
        let mode = self.setup.mode;
        let mut reject = |reason: String| {
            log.push(tick, gst, Actor::Receiver, EventKind::Kroot, "-", format!("Rejected {reason}"));
        };
        let mut r = BitReader::new(bits);
        let pkid = match r.read(mode.bid_bits()).and_then(|_| r.read(4)) {
            Ok(v) => v as u8,
            Err(e) => return reject(e.to_string()),
        };
        let Some((npkt, public)) = self.keys.get(&pkid).cloned() else {
            return reject(format!("no verified key for pkid {pkid}"));
        };
        let scheme = match self.setup.registry.lookup(npkt) {
            Ok(s) => s,
            Err(e) => return reject(e.to_string()),
        };
        let kroot = match DsmKroot::parse(bits, mode, scheme.characterization().sig_bits as usize) {
            Ok(k) => k,
            Err(e) => return reject(e.to_string()),
        };
        if !verify_kroot(&kroot, nma, scheme.as_ref(), &public) {
            log.push(tick, gst, Actor::Receiver, EventKind::Kroot, digest(kroot.kroot.as_bytes()), "Rejected");
            return;
        }
        let params = match kroot.tesla_params(self.setup.chain_length) {
            Ok(p) => p,
            Err(e) => return reject(e.to_string()),
        };
        let d = digest(kroot.kroot.as_bytes());
        if let Some(existing) = self
            .chains
            .iter()
            .find(|c| c.params.start() == params.start() && c.params.chain_id() == params.chain_id())
        {
            if existing.root != kroot.kroot {
                log.push(tick, gst, Actor::Receiver, EventKind::Kroot, d, "Rejected conflicting root");
            }
            return;
        }
        log.push(tick, gst, Actor::Receiver, EventKind::Kroot, d, "Accepted");
        self.chains.push(VerifiedChain {
            params,
            root: kroot.kroot.clone(),
            best: ChainAnchor {
                key: kroot.kroot,
                index: 0,
            },
            best_rx: tick,
        });
        self.raise_phase(Phase::HaveKroot, tick, gst, log);
    }

    /// Latest verified chain that covers `gst`.
    fn chain_for(&self, gst: GstTime) -> Option<(usize, u32)> {
        self.chains
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.params.key_index_at(gst).map(|j| (i, j, c.params.start())))
            .max_by_key(|&(_, _, start)| start)
            .map(|(i, j, _)| (i, j))
    }

    fn resolve_raw(&mut self, tick: u32, gst: GstTime, log: &mut EventLog) {
        for raw in std::mem::take(&mut self.raw) {
            let Some((ci, index)) = self.chain_for(raw.gst) else {
                if tick - raw.tick < self.setup.raw_limit {
                    self.raw.push(raw);
                } else {
                    log.push(tick, gst, Actor::Receiver, EventKind::Mack, "-", "Expired");
                }
                continue;
            };
            match MackMessage::parse(&raw.bits, &self.chains[ci].params) {
                Ok(mack) => {
                    self.on_key(ci, index - 1, &mack.key, raw.tick, tick, gst, log);
                    self.parsed.push(ParsedMack {
                        tick: raw.tick,
                        gst: raw.gst,
                        chain: ci,
                        index,
                        prn: raw.prn,
                        mack,
                        nav: raw.nav,
                    });
                }
                Err(e) => log.push(tick, gst, Actor::Receiver, EventKind::Mack, "-", format!("Rejected {e}")),
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_key(&mut self, ci: usize, index: u32, key: &Key, rx: u32, tick: u32, gst: GstTime, log: &mut EventLog) {
        let c = &mut self.chains[ci];
        let d = c.params.derivation();
        let ok = key.bit_len() == c.params.key_bits() as usize
            && if index > c.best.index {
                d.verify_key(key, index, &c.best.key, c.best.index).unwrap_or(false)
            } else {
                d.walk(&c.best.key, c.best.index, index) == *key
            };
        if !ok {
            log.push(tick, gst, Actor::Receiver, EventKind::Key, digest(key.as_bytes()), "Rejected");
        } else if index > c.best.index {
            c.best = ChainAnchor {
                key: key.clone(),
                index,
            };
            c.best_rx = rx;
            log.push(tick, gst, Actor::Receiver, EventKind::Key, digest(key.as_bytes()), "Accepted");
        }
    }

    fn verify_pending(&mut self, tick: u32, gst: GstTime, log: &mut EventLog) -> Vec<TagOutcome> {
        let mut out = Vec::new();
        for p in std::mem::take(&mut self.parsed) {
            let c = &self.chains[p.chain];
            if c.best.index < p.index {
                if tick - p.tick < self.setup.raw_limit {
                    self.parsed.push(p);
                } else {
                    log.push(tick, gst, Actor::Receiver, EventKind::Mack, "-", "Expired");
                }
                continue;
            }
            let mut tags = vec![PendingTag {
                tag: Tag {
                    bits: p.mack.tag0,
                    info: MackMessage::tag0_info(p.prn),
                },
                data: p.nav.ephemeris.clone(),
            }];
            for t in &p.mack.tags {
                let data = match t.info.adkd {
                    _ if t.info.prn != p.prn => continue,
                    crate::tesla::Adkd::Timing => p.nav.timing.clone(),
                    _ => p.nav.ephemeris.clone(),
                };
                tags.push(PendingTag { tag: *t, data });
            }
            let verdicts = if c.best_rx <= p.tick {
                // The key was public before the tag arrived.
                vec![Verdict::KeyUnverified; tags.len()]
            } else {
                let key = c.params.derivation().walk(&c.best.key, c.best.index, p.index);
                let infos: Vec<TagInfo> = p.mack.tags.iter().map(|t| t.info).collect();
                let seq_ok = macseq(&c.params, &key, p.prn, p.gst, &infos) == Ok(p.mack.macseq);
                let pending = PendingSubframe {
                    index: p.index,
                    tags: tags.clone(),
                };
                let v = receiver_verify_tags(&c.params, &pending, &c.best, &c.best);
                if seq_ok {
                    v
                } else {
                    vec![Verdict::Forged; tags.len()]
                }
            };
            for (t, v) in tags.into_iter().zip(verdicts) {
                log.push(
                    tick,
                    gst,
                    Actor::Receiver,
                    EventKind::Tag {
                        origin: p.tick,
                        prn: t.tag.info.prn,
                        adkd: t.tag.info.adkd.code(),
                    },
                    digest(&t.data),
                    format!("{v:?}"),
                );
                out.push(TagOutcome {
                    origin: p.tick,
                    transmitter: p.prn,
                    info: t.tag.info,
                    data: t.data,
                    verdict: v,
                    tick,
                });
            }
        }
        if out.iter().any(|o| o.verdict == Verdict::Authentic) {
            self.raise_phase(Phase::Authenticating, tick, gst, log);
        }
        out
    }
}

/// Receiver setup matching a broadcaster's Merkle tree.
pub fn receiver_setup(
    tree: &MerkleTree,
    pkid: u8,
    mode: BidMode,
    registry: Registry,
    trust_root: bool,
    preload: bool,
) -> ReceiverSetup {
    let leaf = tree.leaf(pkid).expect("pkid below 16");
    ReceiverSetup {
        mode,
        registry,
        merkle_root: trust_root.then(|| tree.root()),
        preload: preload.then(|| DsmPkr {
            npkt: leaf.npkt,
            npkid: pkid,
            path: tree.path(pkid).expect("pkid below 16"),
            npk: leaf.npk.clone(),
        }),
        chain_length: 2880 * 7,
        raw_limit: 2880,
    }
}
