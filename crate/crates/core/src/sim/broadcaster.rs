use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::SimError;
use crate::bitgrid::{GstTime, OsnmaPageField, SubframePayload, PAGES_PER_SUBFRAME, SUBFRAME_PERIOD_S};
use crate::dsm::{
    build_dsm_kroot, build_dsm_pkr, cpks_transition, segment, BidMode, DsmBlock, HkrootMessage,
    KrootHeader, LifecycleEvent, MerkleTree, NmaHeader,
};
use crate::sigscheme::{SecretKey, SignatureScheme};
use crate::tesla::{
    build_mack, Adkd, HashFunction, MacFunction, MackRequest, TagInfo, TagRequest, TeslaChain,
    TeslaParams,
};

const SF: u64 = SUBFRAME_PERIOD_S as u64;
const HOUR_S: u64 = 3600;
/// I/NAV ephemeris and clock bits (ADKD 0), rounded up to bytes.
pub const EPHEMERIS_BYTES: usize = 69;
/// Timing bits (ADKD 4), rounded up to bytes.
pub const TIMING_BYTES: usize = 18;

/// Navigation data of one satellite in one subframe.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NavData {
    pub ephemeris: Vec<u8>,
    pub timing: Vec<u8>,
}

/// Deterministic stand-in for the navigation message.
pub fn nav_data(seed: u64, prn: u8, tick: u32) -> NavData {
    let digest = Sha256::new()
        .chain_update(b"nav")
        .chain_update(seed.to_be_bytes())
        .chain_update([prn])
        .chain_update(tick.to_be_bytes())
        .finalize();
    let mut rng = ChaCha8Rng::from_seed(digest.into());
    let mut ephemeris = vec![0u8; EPHEMERIS_BYTES];
    let mut timing = vec![0u8; TIMING_BYTES];
    rng.fill_bytes(&mut ephemeris);
    rng.fill_bytes(&mut timing);
    NavData { ephemeris, timing }
}

/// What one satellite puts on air in one subframe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emission {
    pub prn: u8,
    pub nav: NavData,
    pub pages: [OsnmaPageField; PAGES_PER_SUBFRAME],
}

impl Emission {
    pub fn payload(&self) -> SubframePayload {
        SubframePayload::assemble(&self.pages).expect("15 pages")
    }

    pub fn set_payload(&mut self, payload: &SubframePayload) {
        self.pages = payload.disassemble();
    }
}

/// Maps simulation ticks to GST, chains and broadcast windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Timeline {
    t0: u64,
    chain0: u64,
    period: u32,
    lead: u32,
    pkr_period: u32,
    pkr_window: u32,
}

impl Timeline {
    pub fn new(
        start: GstTime,
        period: u32,
        lead: u32,
        pkr_period: u32,
        pkr_window: u32,
    ) -> Result<Timeline, SimError> {
        let t0 = start.to_seconds();
        if t0 < SF {
            return Err(SimError::Config {
                line: None,
                reason: "simulation must not start at GST 0".into(),
            });
        }
        Ok(Timeline {
            t0,
            chain0: (t0 - SF) / HOUR_S * HOUR_S,
            period,
            lead,
            pkr_period,
            pkr_window,
        })
    }

    pub fn gst(&self, tick: u32) -> GstTime {
        GstTime::from_seconds(self.t0 + u64::from(tick) * SF).expect("validated span")
    }

    /// Chain in force at `tick`. Chain `k` signs the subframes after its
    /// start, up to and including the start of chain `k + 1`.
    pub fn chain_of(&self, tick: u32) -> u32 {
        let dt = self.t0 + u64::from(tick) * SF - self.chain0 - SF;
        (dt / (SF * u64::from(self.period))) as u32
    }

    pub fn chain_start(&self, k: u32) -> GstTime {
        GstTime::from_seconds(self.chain0 + u64::from(k) * u64::from(self.period) * SF)
            .expect("validated span")
    }

    /// Index of the signing key at `tick` within its chain, `1..=period`.
    pub fn key_index(&self, tick: u32) -> u32 {
        let start = self.chain_start(self.chain_of(tick)).to_seconds();
        ((self.t0 + u64::from(tick) * SF - start) / SF) as u32
    }

    /// True in the last subframes of a chain, when its successor's DSM-KROOT
    /// is on air.
    pub fn in_lead(&self, tick: u32) -> bool {
        self.key_index(tick) > self.period - self.lead
    }

    pub fn in_pkr_window(&self, tick: u32) -> bool {
        let t = self.t0 + u64::from(tick) * SF;
        t % (u64::from(self.pkr_period) * SF) < u64::from(self.pkr_window) * SF
    }

    pub fn period(&self) -> u32 {
        self.period
    }
}

/// Everything a broadcaster needs. Adversaries build their own.
#[derive(Clone, Debug)]
pub struct BroadcastSetup {
    pub timeline: Timeline,
    pub satellites: u8,
    pub key_bits: u32,
    pub tag_bits: u32,
    pub hash: HashFunction,
    pub mac: MacFunction,
    pub mode: BidMode,
    pub signer: Arc<dyn SignatureScheme>,
    pub secret: SecretKey,
    pub npkt: u8,
    pub pkid: u8,
    pub tree: MerkleTree,
    pub chain_seed: [u8; 32],
    pub nav_seed: u64,
    /// Added to the chain number before it is reduced to a CID.
    pub cid_offset: u8,
    /// DSM IDs used for successive DSM-KROOTs.
    pub kroot_ids: Vec<u8>,
    pub pkr_id: u8,
}

/// The ground segment and the satellites it uplinks to.
#[derive(Debug)]
pub struct Broadcaster {
    setup: BroadcastSetup,
    chains: BTreeMap<u32, TeslaChain>,
    kroots: BTreeMap<(u32, u8), Vec<DsmBlock>>,
    next_kroot_id: usize,
    pkr_blocks: Vec<DsmBlock>,
}

impl Broadcaster {
    pub fn new(setup: BroadcastSetup) -> Result<Broadcaster, SimError> {
        let leaf = setup
            .tree
            .leaf(setup.pkid)
            .ok_or(crate::dsm::DsmError::BadNpkid(setup.pkid))?
            .clone();
        let pkr = build_dsm_pkr(&leaf.npk, leaf.npkt, setup.pkid, &setup.tree, setup.mode)?;
        let pkr_blocks = segment(setup.pkr_id, &pkr.to_bits(setup.mode)?, setup.mode)?;
        Ok(Broadcaster {
            setup,
            chains: BTreeMap::new(),
            kroots: BTreeMap::new(),
            next_kroot_id: 0,
            pkr_blocks,
        })
    }

    pub fn timeline(&self) -> &Timeline {
        &self.setup.timeline
    }

    pub fn pkr_blocks(&self) -> &[DsmBlock] {
        &self.pkr_blocks
    }

    pub fn chain_params(&self, k: u32) -> Result<TeslaParams, SimError> {
        let s = &self.setup;
        Ok(TeslaParams::new(
            s.key_bits,
            s.tag_bits,
            s.hash,
            s.mac,
            ((k + u32::from(s.cid_offset)) % 4) as u8,
            s.timeline.period(),
            s.timeline.chain_start(k),
        )?)
    }

    pub fn chain(&mut self, k: u32) -> Result<&TeslaChain, SimError> {
        if !self.chains.contains_key(&k) {
            let params = self.chain_params(k)?;
            let seed = Sha256::new()
                .chain_update(self.setup.chain_seed)
                .chain_update(k.to_be_bytes())
                .finalize();
            let chain = TeslaChain::generate(params, &seed[..self.setup.key_bits as usize / 8])?;
            // Only the current chain and its successor are ever needed.
            self.chains.retain(|&j, _| j + 1 >= k);
            self.chains.insert(k, chain);
        }
        Ok(&self.chains[&k])
    }

    /// NMA header on air at `tick`.
    pub fn header(&self, tick: u32) -> NmaHeader {
        let tl = &self.setup.timeline;
        let cid = (tl.chain_of(tick) + u32::from(self.setup.cid_offset)) % 4;
        let base = NmaHeader::operational(cid as u8);
        if tl.in_lead(tick) {
            cpks_transition(base, LifecycleEvent::ChainRenewal).expect("defined from Nominal")
        } else {
            base
        }
    }

    fn kroot_blocks(&mut self, k: u32, nma: NmaHeader) -> Result<Vec<DsmBlock>, SimError> {
        let key = (k, nma.to_u8());
        if let Some(b) = self.kroots.get(&key) {
            return Ok(b.clone());
        }
        let mode = self.setup.mode;
        let header = KrootHeader {
            nma,
            pkid: self.setup.pkid,
            maclt: 0,
            alpha: u64::from(k) ^ 0x5EED,
        };
        let signer = Arc::clone(&self.setup.signer);
        let secret = self.setup.secret.clone();
        let kroot = build_dsm_kroot(self.chain(k)?, signer.as_ref(), &secret, header, mode)?;
        let ids = &self.setup.kroot_ids;
        let id = ids[self.next_kroot_id % ids.len()];
        self.next_kroot_id += 1;
        let blocks = segment(id, &kroot.to_bits(mode)?, mode)?;
        self.kroots.retain(|&(j, _), _| j + 1 >= k);
        self.kroots.insert(key, blocks.clone());
        Ok(blocks)
    }

    /// One emission per satellite, PRNs `1..=satellites`.
    pub fn emit(&mut self, tick: u32) -> Result<Vec<Emission>, SimError> {
        let tl = self.setup.timeline;
        let k = tl.chain_of(tick);
        let nma = self.header(tick);
        let kroot_chain = if tl.in_lead(tick) { k + 1 } else { k };
        let kroot = self.kroot_blocks(kroot_chain, nma)?;
        let index = tl.key_index(tick);
        let mode = self.setup.mode;
        let n = self.setup.satellites;
        let pkr_window = tl.in_pkr_window(tick);
        let mut out = Vec::with_capacity(usize::from(n));
        for i in 0..n {
            let prn = i + 1;
            let pkr_slot = pkr_window && if n == 1 { tick % 2 == 0 } else { i % 2 == 0 };
            let blocks = if pkr_slot { &self.pkr_blocks } else { &kroot };
            // Satellites sharing a DSM send consecutive blocks.
            let (slot, width, round) = match (pkr_window, n) {
                (false, _) => (i, n, tick),
                (true, 1) => (0, 1, tick / 2),
                (true, _) if pkr_slot => (i / 2, n.div_ceil(2), tick),
                (true, _) => (i / 2, n / 2, tick),
            };
            let at = round as usize * usize::from(width) + usize::from(slot);
            let block = blocks[at % blocks.len()].clone();
            let hkroot = HkrootMessage { nma, block }.to_bits(mode)?;
            let nav = nav_data(self.setup.nav_seed, prn, tick);
            let chain = self.chain(k)?;
            let req = MackRequest {
                subframe_index: index,
                transmitter: prn,
                tag0_data: nav.ephemeris.clone(),
                entries: vec![TagRequest {
                    info: TagInfo::new(prn, Adkd::Timing, 0)?,
                    data: nav.timing.clone(),
                }],
                disclosure_delay: 1,
            };
            let mack = build_mack(chain, &req)?.to_bits(chain.params())?;
            let payload = SubframePayload::from_bits(&hkroot, &mack)?;
            out.push(Emission {
                prn,
                nav,
                pages: payload.disassemble(),
            });
        }
        Ok(out)
    }
}
