use std::fmt;

use sha2::{Digest, Sha256};

use crate::bitgrid::GstTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Actor {
    Broadcaster,
    Channel,
    Adversary,
    Receiver,
}

impl Actor {
    pub fn name(self) -> &'static str {
        match self {
            Actor::Broadcaster => "broadcaster",
            Actor::Channel => "channel",
            Actor::Adversary => "adversary",
            Actor::Receiver => "receiver",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Phase,
    Pkr,
    Kroot,
    Dsm,
    Key,
    Mack,
    Tag { origin: u32, prn: u8, adkd: u8 },
    Loss { prn: u8, pages: u8 },
    Spoof { prn: u8 },
    BruteForce { prn: u8, attempts: u32 },
    Takeover,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Phase => f.write_str("phase"),
            EventKind::Pkr => f.write_str("dsm-pkr"),
            EventKind::Kroot => f.write_str("dsm-kroot"),
            EventKind::Dsm => f.write_str("dsm"),
            EventKind::Key => f.write_str("key"),
            EventKind::Mack => f.write_str("mack"),
            EventKind::Tag { origin, prn, adkd } => write!(f, "tag sf={origin} prn={prn} adkd={adkd}"),
            EventKind::Loss { prn, pages } => write!(f, "loss prn={prn} pages={pages}"),
            EventKind::Spoof { prn } => write!(f, "spoof prn={prn}"),
            EventKind::BruteForce { prn, attempts } => write!(f, "brute-force prn={prn} attempts={attempts}"),
            EventKind::Takeover => f.write_str("takeover"),
        }
    }
}

/// One log record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub tick: u32,
    pub gst: GstTime,
    pub actor: Actor,
    pub kind: EventKind,
    /// First 8 bytes of SHA-256 over the payload, hex.
    pub digest: String,
    pub verdict: String,
}

/// Short payload fingerprint for log records.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn push(
        &mut self,
        tick: u32,
        gst: GstTime,
        actor: Actor,
        kind: EventKind,
        digest: impl Into<String>,
        verdict: impl Into<String>,
    ) {
        self.events.push(Event {
            tick,
            gst,
            actor,
            kind,
            digest: digest.into(),
            verdict: verdict.into(),
        });
    }

    /// `gst  actor  kind  digest  verdict`, tab separated, one record per
    /// line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.gst,
                e.actor.name(),
                e.kind,
                e.digest,
                e.verdict
            ));
        }
        out
    }

    /// Safety checks over a finished log.
    ///
    /// Every `Authentic` tag verdict needs an accepted DSM-KROOT and a key
    /// accepted after the tag arrived, both no later than the verdict.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut kroot_at: Option<u32> = None;
        let mut keys: Vec<u32> = Vec::new();
        for e in self.events.iter().filter(|e| e.actor == Actor::Receiver) {
            match (&e.kind, e.verdict.as_str()) {
                (EventKind::Kroot, "Accepted") => {
                    kroot_at.get_or_insert(e.tick);
                }
                (EventKind::Key, "Accepted") => keys.push(e.tick),
                (EventKind::Tag { origin, .. }, "Authentic") => {
                    if kroot_at.is_none() {
                        problems.push(format!("{}: authentic tag before any DSM-KROOT", e.gst));
                    }
                    if e.tick <= *origin {
                        problems.push(format!("{}: tag of subframe {origin} authenticated too early", e.gst));
                    }
                    if !keys.iter().any(|&k| k > *origin && k <= e.tick) {
                        problems.push(format!("{}: no key accepted for subframe {origin}", e.gst));
                    }
                }
                _ => {}
            }
        }
        problems
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gst(t: u32) -> GstTime {
        GstTime::new(1, 30 * t).unwrap()
    }

    #[test]
    fn tsv_layout() {
        let mut log = EventLog::default();
        log.push(0, gst(0), Actor::Receiver, EventKind::Tag { origin: 3, prn: 2, adkd: 4 }, digest(b"x"), "Forged");
        let line = log.to_tsv();
        assert_eq!(line.trim_end().split('\t').count(), 5);
        assert!(line.starts_with("1:0\treceiver\ttag sf=3 prn=2 adkd=4\t"));
    }

    #[test]
    fn audit_flags_unanchored_verdicts() {
        let mut log = EventLog::default();
        let tag = EventKind::Tag { origin: 1, prn: 1, adkd: 0 };
        log.push(2, gst(2), Actor::Receiver, tag.clone(), "-", "Authentic");
        assert_eq!(log.audit().len(), 2);
        let mut ok = EventLog::default();
        ok.push(0, gst(0), Actor::Receiver, EventKind::Kroot, "-", "Accepted");
        ok.push(2, gst(2), Actor::Receiver, EventKind::Key, "-", "Accepted");
        ok.push(2, gst(2), Actor::Receiver, tag, "-", "Authentic");
        assert!(ok.audit().is_empty());
    }
}
