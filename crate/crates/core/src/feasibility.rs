//! Closed-form message geometry and scheme fit analysis.
//!
//! ```text
//! l_DP = 104 * ceil((1040 + l_NPK) / 104)        l_PDP = l_DP - 1040 - l_NPK
//! l_DK = 104 * ceil(1 + (l_K + l_DS) / 104)      l_PDK = l_DK - 104 - l_K - l_DS
//! n_t  = floor((480 - l_K) / (l_T + 16))
//! ```
//!
//! Block counts in reports are in 104-bit units. Whether a message fits is
//! decided by the dsm codec limits, where extended mode carries 101 net bits
//! per block.

use std::fmt::Write as _;

use crate::bitgrid::SUBFRAME_PERIOD_S;
use crate::dsm::{BidMode, DsmKroot, DsmPkr, DSM_BLOCK_BITS, KROOT_PREAMBLE_BITS, PKR_FIXED_BITS};
use crate::sigscheme::{normalize_name, Registry, SchemeCharacterization, SchemeError};

const BLOCK: u64 = DSM_BLOCK_BITS as u64;
const MACK_BITS: u64 = 480;
const TAG_INFO_BITS: u64 = 16;
/// Default TESLA sizes for fit reports: the largest key, the largest tag.
pub const DEFAULT_KEY_BITS: u64 = 256;
pub const DEFAULT_TAG_BITS: u64 = 40;

/// Documented range of each geometry input and output.
const RANGES: [(&str, u64, u64); 7] = [
    ("l_NPK", 264, 536),
    ("l_K", 96, 256),
    ("l_T", 20, 40),
    ("l_DS", 512, 1056),
    ("l_DP", 1352, 1664),
    ("l_DK", 728, 1456),
    ("n_t", 4, 10),
];

/// A value outside its documented range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RangeFlag {
    pub field: &'static str,
    pub value: u64,
    pub min: u64,
    pub max: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OsnmaGeometry {
    pub l_npk: u64,
    pub l_k: u64,
    pub l_t: u64,
    pub l_ds: u64,
    pub l_dp: u64,
    pub l_pdp: u64,
    pub l_dk: u64,
    pub l_pdk: u64,
    pub n_t: u64,
    pub flags: Vec<RangeFlag>,
}

impl OsnmaGeometry {
    pub fn pkr_blocks(&self) -> u64 {
        self.l_dp / BLOCK
    }

    pub fn kroot_blocks(&self) -> u64 {
        self.l_dk / BLOCK
    }

    pub fn in_range(&self) -> bool {
        self.flags.is_empty()
    }
}

pub fn geometry(l_npk: u64, l_k: u64, l_t: u64, l_ds: u64) -> OsnmaGeometry {
    let fixed = PKR_FIXED_BITS as u64;
    let l_dp = BLOCK * (fixed + l_npk).div_ceil(BLOCK);
    let l_dk = BLOCK * (1 + (l_k + l_ds).div_ceil(BLOCK));
    let n_t = MACK_BITS.saturating_sub(l_k) / (l_t + TAG_INFO_BITS);
    let mut g = OsnmaGeometry {
        l_npk,
        l_k,
        l_t,
        l_ds,
        l_dp,
        l_pdp: l_dp - fixed - l_npk,
        l_dk,
        l_pdk: l_dk - KROOT_PREAMBLE_BITS as u64 - l_k - l_ds,
        n_t,
        flags: Vec::new(),
    };
    let values = [l_npk, l_k, l_t, l_ds, l_dp, l_dk, n_t];
    for ((field, min, max), value) in RANGES.into_iter().zip(values) {
        if !(min..=max).contains(&value) {
            g.flags.push(RangeFlag {
                field,
                value,
                min,
                max,
            });
        }
    }
    g
}

/// Blocks for `payload_bits` in `mode`, or `None` past the block limit.
pub fn blocks_needed(payload_bits: u64, mode: BidMode) -> Option<u64> {
    let bits = usize::try_from(payload_bits).ok()?;
    mode.blocks_needed(bits).map(|n| n as u64)
}

/// Smallest BID mode a message fits in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fit {
    Nominal,
    Extended,
    Infeasible,
}

impl Fit {
    pub fn name(self) -> &'static str {
        match self {
            Fit::Nominal => "nominal",
            Fit::Extended => "extended",
            Fit::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for Fit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One DSM type evaluated for one scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UseCase {
    /// Formula length in 104-bit blocks.
    pub blocks: u64,
    /// Net 101-bit blocks under the 7-bit BID, if that fits.
    pub extended_blocks: Option<u64>,
    pub fit: Fit,
    /// One block per subframe.
    pub airtime_s: u64,
}

impl UseCase {
    fn new(blocks: u64, nominal_ok: bool, extended_len: Option<usize>) -> UseCase {
        let extended_blocks = extended_len.map(|l| (l / BidMode::Extended.block_bits()) as u64);
        let fit = if nominal_ok {
            Fit::Nominal
        } else if extended_blocks.is_some() {
            Fit::Extended
        } else {
            Fit::Infeasible
        };
        UseCase {
            blocks,
            extended_blocks,
            fit,
            airtime_s: blocks * u64::from(SUBFRAME_PERIOD_S),
        }
    }
}

/// Block counts printed for a scheme, with the value they should have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClaimedBlocks {
    pub pkr: u64,
    pub kroot: u64,
}

const CLAIMED_BLOCKS: [(&str, ClaimedBlocks); 1] = [("falcon512", ClaimedBlocks { pkr: 71, kroot: 67 })];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitReport {
    pub scheme: String,
    pub pk_bits: u64,
    pub sig_bits: u64,
    pub geometry: OsnmaGeometry,
    pub pkr: UseCase,
    pub kroot: UseCase,
    pub claimed: Option<ClaimedBlocks>,
}

impl FitReport {
    /// The worse of the two use cases.
    pub fn mode(&self) -> Fit {
        self.pkr.fit.max(self.kroot.fit)
    }

    pub fn agrees(&self) -> Option<bool> {
        self.claimed
            .map(|c| c.pkr == self.pkr.blocks && c.kroot == self.kroot.blocks)
    }
}

pub fn fit_report(scheme: &SchemeCharacterization, key_bits: u64, tag_bits: u64) -> FitReport {
    let g = geometry(scheme.pk_bits, key_bits, tag_bits, scheme.sig_bits);
    let (npk, k, ds) = (
        usize::try_from(scheme.pk_bits).unwrap_or(usize::MAX / 2),
        key_bits as usize,
        usize::try_from(scheme.sig_bits).unwrap_or(usize::MAX / 2),
    );
    let pkr = UseCase::new(
        g.pkr_blocks(),
        DsmPkr::length_in(BidMode::Nominal, npk).is_ok(),
        DsmPkr::length_in(BidMode::Extended, npk).ok(),
    );
    let kroot = UseCase::new(
        g.kroot_blocks(),
        DsmKroot::length_in(BidMode::Nominal, k, ds).is_ok(),
        DsmKroot::length_in(BidMode::Extended, k, ds).ok(),
    );
    let wanted = normalize_name(&scheme.name);
    FitReport {
        scheme: scheme.name.clone(),
        pk_bits: scheme.pk_bits,
        sig_bits: scheme.sig_bits,
        geometry: g,
        pkr,
        kroot,
        claimed: CLAIMED_BLOCKS
            .iter()
            .find(|(n, _)| *n == wanted)
            .map(|(_, c)| *c),
    }
}

/// Fit reports for the named schemes, or the whole table when `names` is
/// empty.
pub fn analyze(
    registry: &Registry,
    names: &[String],
    key_bits: u64,
    tag_bits: u64,
) -> Result<Vec<FitReport>, SchemeError> {
    let rows = if names.is_empty() {
        registry.table()
    } else {
        names
            .iter()
            .map(|n| registry.characterize(n))
            .collect::<Result<_, _>>()?
    };
    Ok(rows.iter().map(|c| fit_report(c, key_bits, tag_bits)).collect())
}

fn claim_cells(r: &FitReport) -> (String, String) {
    match (r.claimed, r.agrees()) {
        (Some(c), Some(ok)) => (
            format!("{}/{}", c.pkr, c.kroot),
            if ok { "agree" } else { "disagree" }.to_string(),
        ),
        _ => (String::new(), String::new()),
    }
}

const ANALYZE_COLUMNS: [&str; 9] = [
    "scheme",
    "pk_bits",
    "sig_bits",
    "pkr_blocks",
    "kroot_blocks",
    "mode",
    "airtime_s",
    "paper_claim",
    "agreement",
];

fn analyze_rows(reports: &[FitReport], extended: bool) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ANALYZE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if extended {
        header.push("pkr_blocks_ext".into());
        header.push("kroot_blocks_ext".into());
    }
    let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |n| n.to_string());
    let rows = reports
        .iter()
        .map(|r| {
            let (claim, agreement) = claim_cells(r);
            let mut row = vec![
                r.scheme.clone(),
                r.pk_bits.to_string(),
                r.sig_bits.to_string(),
                r.pkr.blocks.to_string(),
                r.kroot.blocks.to_string(),
                r.mode().to_string(),
                format!("{}/{}", r.pkr.airtime_s, r.kroot.airtime_s),
                claim,
                agreement,
            ];
            if extended {
                row.push(opt(r.pkr.extended_blocks));
                row.push(opt(r.kroot.extended_blocks));
            }
            row
        })
        .collect();
    (header, rows)
}

/// Fit reports as CSV. `extended` adds the net 101-bit block counts.
pub fn analyze_csv(reports: &[FitReport], extended: bool) -> String {
    let (header, rows) = analyze_rows(reports, extended);
    write_csv(&header, &rows)
}

/// Fit reports as an aligned text table.
pub fn analyze_table(reports: &[FitReport], extended: bool) -> String {
    let (header, rows) = analyze_rows(reports, extended);
    text_table(&header, &rows)
}

/// A size ratio against a classical baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratio {
    pub quantity: String,
    pub numerator_bits: u64,
    pub baseline: &'static str,
    pub baseline_bits: u64,
    pub ratio: f64,
    /// Printed phrase and the whole number it states.
    pub claim: Option<(&'static str, u64)>,
}

impl Ratio {
    /// Agreement when the ratio floors or rounds to the stated number.
    pub fn agrees(&self) -> Option<bool> {
        self.claim
            .map(|(_, n)| self.ratio.floor() as u64 == n || self.ratio.round() as u64 == n)
    }
}

pub fn ratio_report() -> Vec<Ratio> {
    let size = |name: &str, sig: bool| {
        let c = crate::sigscheme::characterize(name).expect("built-in row");
        if sig {
            c.sig_bits
        } else {
            c.pk_bits
        }
    };
    let p256_pk = size("ECDSA-P256", false);
    let p521_pk = size("ECDSA-P521", false);
    let p521_sig = size("ECDSA-P521", true);
    let rows: [(&str, u64, &'static str, u64, Option<(&'static str, u64)>); 8] = [
        ("Falcon-512 sig", size("Falcon-512", true), "ECDSA-P521 sig", p521_sig, Some(("nearly 5 times", 5))),
        ("Falcon-512 pk", size("Falcon-512", false), "ECDSA-P521 pk (encoded)", p521_pk, Some(("approximately 13 to one", 13))),
        ("Falcon-512 pk", size("Falcon-512", false), "P-521 field size", 521, Some(("approximately 13 to one", 13))),
        ("SPHINCS+-128s sig", size("SPHINCS+-128s", true), "ECDSA-P256 pk (encoded)", p256_pk, Some(("around 238 times", 238))),
        ("ECDSA-P256 pk", p256_pk, "ECDSA-P256 pk (encoded)", p256_pk, None),
        ("Dilithium2 pk", size("Dilithium2", false), "ECDSA-P521 pk (encoded)", p521_pk, None),
        ("Dilithium2 sig", size("Dilithium2", true), "ECDSA-P521 sig", p521_sig, None),
        ("SPHINCS+-128s pk", size("SPHINCS+-128s", false), "ECDSA-P521 pk (encoded)", p521_pk, None),
    ];
    rows.into_iter()
        .map(|(quantity, num, baseline, base, claim)| Ratio {
            quantity: quantity.to_string(),
            numerator_bits: num,
            baseline,
            baseline_bits: base,
            ratio: num as f64 / base as f64,
            claim,
        })
        .collect()
}

fn agreement_cell(a: Option<bool>) -> String {
    match a {
        Some(true) => "agree".into(),
        Some(false) => "disagree".into(),
        None => String::new(),
    }
}

fn ratio_rows(rows: &[Ratio]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["quantity", "bits", "baseline", "baseline_bits", "ratio", "paper_claim", "agreement"]
        .map(String::from)
        .to_vec();
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.quantity.clone(),
                r.numerator_bits.to_string(),
                r.baseline.to_string(),
                r.baseline_bits.to_string(),
                format!("{:.3}", r.ratio),
                r.claim.map(|(p, _)| p.to_string()).unwrap_or_default(),
                agreement_cell(r.agrees()),
            ]
        })
        .collect();
    (header, body)
}

pub fn ratio_csv(rows: &[Ratio]) -> String {
    let (h, b) = ratio_rows(rows);
    write_csv(&h, &b)
}

pub fn ratio_table(rows: &[Ratio]) -> String {
    let (h, b) = ratio_rows(rows);
    text_table(&h, &b)
}

/// A printed figure next to the value the formulas give.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub quantity: &'static str,
    pub printed: &'static str,
    pub derived: String,
    pub agrees: bool,
}

/// Every printed use-case number checked against the formulas.
pub fn claims_ledger() -> Vec<Claim> {
    let nominal = BidMode::Nominal;
    let extended = BidMode::Extended;
    let falcon = crate::sigscheme::characterize("Falcon-512").expect("built-in row");
    let g = geometry(falcon.pk_bits, DEFAULT_KEY_BITS, DEFAULT_TAG_BITS, falcon.sig_bits);
    let pkr_total = nominal.gross_capacity_bits() as u64;
    let metadata = crate::dsm::PKR_METADATA_BITS as u64;
    let path = (PKR_FIXED_BITS - crate::dsm::PKR_METADATA_BITS) as u64;
    let crypto = pkr_total - metadata;
    let key_space = crypto - path;
    let max_blocks = nominal.max_blocks() as u64;
    let ds_space = pkr_total - KROOT_PREAMBLE_BITS as u64 - DEFAULT_KEY_BITS;
    let bid_growth = u64::from(extended.bid_bits() - nominal.bid_bits());
    let full_extended_s = extended.max_blocks() as u64 * u64::from(SUBFRAME_PERIOD_S);

    let per_block = |bits: u64| {
        if bits % max_blocks == 0 {
            (bits / max_blocks).to_string()
        } else {
            format!("{:.1}", bits as f64 / max_blocks as f64)
        }
    };
    let entry = |quantity, printed: &'static str, derived: String| Claim {
        quantity,
        printed,
        agrees: printed == derived,
        derived,
    };
    vec![
        entry("DSM-PKR bits in 16 blocks", "1664", pkr_total.to_string()),
        entry("DSM-PKR bits after metadata", "1632", crypto.to_string()),
        entry("DSM-PKR bits left for the key", "608", key_space.to_string()),
        entry("key bits per DSM-PKR block", "32", per_block(key_space)),
        entry("DSM-PKR blocks for Falcon-512", "71", g.pkr_blocks().to_string()),
        entry("DS bits in 16 blocks with a 256-bit key", "1727", ds_space.to_string()),
        entry("DS bits per DSM-KROOT block", "79", per_block(ds_space)),
        entry("DSM-KROOT blocks for Falcon-512", "67", g.kroot_blocks().to_string()),
        entry("DSM bits with a 7-bit BID", "13312", extended.gross_capacity_bits().to_string()),
        entry("bits added to BID", "4", bid_growth.to_string()),
        entry("seconds to send a full 7-bit-BID DSM", "142", full_extended_s.to_string()),
    ]
}

fn claims_rows(rows: &[Claim]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["quantity", "paper_claim", "derived", "agreement"].map(String::from).to_vec();
    let body = rows
        .iter()
        .map(|c| {
            vec![
                c.quantity.to_string(),
                c.printed.to_string(),
                c.derived.clone(),
                agreement_cell(Some(c.agrees)),
            ]
        })
        .collect();
    (header, body)
}

pub fn claims_csv(rows: &[Claim]) -> String {
    let (h, b) = claims_rows(rows);
    write_csv(&h, &b)
}

pub fn claims_table(rows: &[Claim]) -> String {
    let (h, b) = claims_rows(rows);
    text_table(&h, &b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dissemination {
    /// One block every subframe.
    Continuous,
    /// 30-minute windows every 6 hours.
    PkrWindow,
}

/// PKR broadcast window and spacing.
pub const PKR_WINDOW_S: u64 = 1800;
pub const PKR_PERIOD_S: u64 = 21_600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Airtime {
    /// Time on air, `blocks * 30`.
    pub transmit_s: u64,
    /// Windows used; 1 for continuous transmission.
    pub windows: u64,
    /// From the first block to the last.
    pub latency_s: u64,
}

pub fn airtime(blocks: u64, dissemination: Dissemination) -> Airtime {
    let sf = u64::from(SUBFRAME_PERIOD_S);
    let transmit_s = blocks * sf;
    match dissemination {
        Dissemination::Continuous => Airtime {
            transmit_s,
            windows: 1,
            latency_s: transmit_s,
        },
        Dissemination::PkrWindow => {
            let per_window = PKR_WINDOW_S / sf;
            let windows = blocks.div_ceil(per_window).max(1);
            let last = blocks - (windows - 1) * per_window;
            Airtime {
                transmit_s,
                windows,
                latency_s: (windows - 1) * PKR_PERIOD_S + last * sf,
            }
        }
    }
}

/// Which figure a size CSV reproduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    PublicKeys,
    Signatures,
}

const FIGURE_SCHEMES: [&str; 5] = ["ECDSA-P256", "ECDSA-P521", "Dilithium2", "Falcon-512", "SPHINCS+-128s"];

/// Bar data: `algorithm,bits,classical_or_pqc`. SPHINCS+ signatures are left
/// out unless asked for.
pub fn figure_csv(figure: Figure, include_sphincs: bool) -> String {
    let rows: Vec<Vec<String>> = FIGURE_SCHEMES
        .iter()
        .map(|n| crate::sigscheme::characterize(n).expect("built-in row"))
        .filter(|c| {
            figure == Figure::PublicKeys
                || include_sphincs
                || c.family != crate::sigscheme::Family::HashStateless
        })
        .map(|c| {
            let bits = match figure {
                Figure::PublicKeys => c.pk_bits,
                Figure::Signatures => c.sig_bits,
            };
            let kind = if c.quantum_resistant { "pqc" } else { "classical" };
            vec![c.name, bits.to_string(), kind.to_string()]
        })
        .collect();
    let header = ["algorithm", "bits", "classical_or_pqc"].map(String::from).to_vec();
    write_csv(&header, &rows)
}

fn write_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header);
    line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for r in rows {
        line(r);
    }
    out
}
