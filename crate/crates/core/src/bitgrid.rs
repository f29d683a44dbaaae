//! Bit-exact framing of the OSNMA data channel.
//!
//! OSNMA rides in a 40-bit field of every odd I/NAV page. Fifteen pages make a
//! 30 s subframe, and the 600 bits collected over a subframe split into a
//! 120-bit HKROOT message and a 480-bit MACK message. Each page contributes
//! its first 8 bits to HKROOT and its remaining 32 bits to MACK, in page
//! order.
//!
//! Bit order is most-significant-bit first everywhere in this crate. The
//! [`BitWriter`] and [`BitReader`] cursors are the only way the other modules
//! touch individual bits.

use bitvec::prelude::*;
use std::fmt;
use thiserror::Error;

/// Bit slice with MSB-first ordering.
pub type BitSlice = bitvec::slice::BitSlice<u8, Msb0>;
/// Owned bit string with MSB-first ordering.
pub type BitString = BitVec<u8, Msb0>;

/// Bits of OSNMA data carried by one odd page.
pub const PAGE_FIELD_BITS: usize = 40;
/// Odd pages per subframe.
pub const PAGES_PER_SUBFRAME: usize = 15;
/// HKROOT bits carried by one page.
pub const HKROOT_PAGE_BITS: usize = 8;
/// MACK bits carried by one page.
pub const MACK_PAGE_BITS: usize = 32;
/// Length of the HKROOT message.
pub const HKROOT_BITS: usize = HKROOT_PAGE_BITS * PAGES_PER_SUBFRAME;
/// Length of the MACK message.
pub const MACK_BITS: usize = MACK_PAGE_BITS * PAGES_PER_SUBFRAME;

/// Page period in seconds.
pub const PAGE_PERIOD_S: u32 = 2;
/// Subframe period in seconds.
pub const SUBFRAME_PERIOD_S: u32 = 30;
/// Frame period in seconds (24 subframes).
pub const FRAME_PERIOD_S: u32 = 720;
/// Seconds in a GST week.
pub const SECONDS_PER_WEEK: u32 = 604_800;
/// GST week numbers are 12 bits wide.
pub const MAX_WEEK: u16 = 4095;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitError {
    #[error("bit width {0} is outside 1..=64")]
    BadWidth(u32),
    #[error("value {value:#x} does not fit in {width} bits")]
    Overflow { value: u64, width: u32 },
    #[error("read of {requested} bits with only {remaining} remaining")]
    Underrun { requested: usize, remaining: usize },
    #[error("a subframe needs exactly 15 page fields, got {0}")]
    WrongPageCount(usize),
    #[error("time of week {0} s is not inside the week")]
    TowOutOfRange(u32),
    #[error("week number {0} does not fit in 12 bits")]
    WeekOutOfRange(u64),
    #[error("vector file line {line}: {reason}")]
    Vector { line: usize, reason: String },
}

/// Galileo System Time: week number and time of week.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GstTime {
    week: u16,
    tow: u32,
}

impl GstTime {
    pub fn new(week: u16, tow_seconds: u32) -> Result<GstTime, BitError> {
        if week > MAX_WEEK {
            return Err(BitError::WeekOutOfRange(week.into()));
        }
        if tow_seconds >= SECONDS_PER_WEEK {
            return Err(BitError::TowOutOfRange(tow_seconds));
        }
        Ok(GstTime {
            week,
            tow: tow_seconds,
        })
    }

    pub fn week(&self) -> u16 {
        self.week
    }

    pub fn tow(&self) -> u32 {
        self.tow
    }

    /// Index of the subframe containing this instant, counted from the start
    /// of the week.
    pub fn subframe_index(&self) -> u32 {
        self.tow / SUBFRAME_PERIOD_S
    }

    pub fn is_subframe_boundary(&self) -> bool {
        self.tow % SUBFRAME_PERIOD_S == 0
    }

    /// Seconds elapsed since the start of week 0.
    pub fn to_seconds(&self) -> u64 {
        u64::from(self.week) * u64::from(SECONDS_PER_WEEK) + u64::from(self.tow)
    }

    pub fn from_seconds(seconds: u64) -> Result<GstTime, BitError> {
        let week = seconds / u64::from(SECONDS_PER_WEEK);
        if week > u64::from(MAX_WEEK) {
            return Err(BitError::WeekOutOfRange(week));
        }
        Ok(GstTime {
            week: week as u16,
            tow: (seconds % u64::from(SECONDS_PER_WEEK)) as u32,
        })
    }

    /// Shifts the time by a signed number of seconds.
    pub fn offset(&self, seconds: i64) -> Result<GstTime, BitError> {
        let total = self.to_seconds() as i64 + seconds;
        if total < 0 {
            return Err(BitError::WeekOutOfRange(0));
        }
        GstTime::from_seconds(total as u64)
    }

    /// Shifts the time by whole subframes.
    pub fn add_subframes(&self, subframes: i64) -> Result<GstTime, BitError> {
        self.offset(subframes * i64::from(SUBFRAME_PERIOD_S))
    }

    /// 32-bit GST word: 12-bit week number followed by 20-bit time of week.
    pub fn packed(&self) -> u32 {
        (u32::from(self.week) << 20) | self.tow
    }

    pub fn from_packed(word: u32) -> Result<GstTime, BitError> {
        GstTime::new((word >> 20) as u16, word & 0xF_FFFF)
    }
}

impl fmt::Display for GstTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.week, self.tow)
    }
}

/// The 40-bit OSNMA field of one odd page.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OsnmaPageField([u8; 5]);

impl OsnmaPageField {
    pub const ZERO: OsnmaPageField = OsnmaPageField([0; 5]);

    pub fn from_bytes(bytes: [u8; 5]) -> OsnmaPageField {
        OsnmaPageField(bytes)
    }

    pub fn from_u64(value: u64) -> Result<OsnmaPageField, BitError> {
        if value >> PAGE_FIELD_BITS != 0 {
            return Err(BitError::Overflow {
                value,
                width: PAGE_FIELD_BITS as u32,
            });
        }
        let b = value.to_be_bytes();
        Ok(OsnmaPageField([b[3], b[4], b[5], b[6], b[7]]))
    }

    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 8) | u64::from(b))
    }

    pub fn bytes(&self) -> &[u8; 5] {
        &self.0
    }

    pub fn bits(&self) -> &BitSlice {
        self.0.view_bits()
    }

    /// Splits the field into its 8 HKROOT bits and 32 MACK bits.
    pub fn split(&self) -> (u8, u32) {
        (
            self.0[0],
            u32::from_be_bytes([self.0[1], self.0[2], self.0[3], self.0[4]]),
        )
    }

    /// Inverse of [`split`](Self::split).
    pub fn join(hkroot_part: u8, mack_part: u32) -> OsnmaPageField {
        let m = mack_part.to_be_bytes();
        OsnmaPageField([hkroot_part, m[0], m[1], m[2], m[3]])
    }
}

impl fmt::Debug for OsnmaPageField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OsnmaPageField({})", hex::encode_upper(self.0))
    }
}

/// HKROOT and MACK messages of one subframe.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubframePayload {
    hkroot: [u8; HKROOT_BITS / 8],
    mack: [u8; MACK_BITS / 8],
}

impl SubframePayload {
    pub fn from_sections(hkroot: [u8; HKROOT_BITS / 8], mack: [u8; MACK_BITS / 8]) -> Self {
        SubframePayload { hkroot, mack }
    }

    /// Builds a payload from bit strings of exactly 120 and 480 bits.
    pub fn from_bits(hkroot: &BitSlice, mack: &BitSlice) -> Result<Self, BitError> {
        if hkroot.len() != HKROOT_BITS {
            return Err(BitError::Underrun {
                requested: HKROOT_BITS,
                remaining: hkroot.len(),
            });
        }
        if mack.len() != MACK_BITS {
            return Err(BitError::Underrun {
                requested: MACK_BITS,
                remaining: mack.len(),
            });
        }
        let mut out = SubframePayload {
            hkroot: [0; HKROOT_BITS / 8],
            mack: [0; MACK_BITS / 8],
        };
        out.hkroot.view_bits_mut::<Msb0>().copy_from_bitslice(hkroot);
        out.mack.view_bits_mut::<Msb0>().copy_from_bitslice(mack);
        Ok(out)
    }

    /// Collects the 15 page fields of a subframe, in page order.
    pub fn assemble(fields: &[OsnmaPageField]) -> Result<SubframePayload, BitError> {
        if fields.len() != PAGES_PER_SUBFRAME {
            return Err(BitError::WrongPageCount(fields.len()));
        }
        let mut hkroot = [0u8; HKROOT_BITS / 8];
        let mut mack = [0u8; MACK_BITS / 8];
        for (i, field) in fields.iter().enumerate() {
            let (h, m) = field.split();
            hkroot[i] = h;
            mack[4 * i..4 * i + 4].copy_from_slice(&m.to_be_bytes());
        }
        Ok(SubframePayload { hkroot, mack })
    }

    pub fn disassemble(&self) -> [OsnmaPageField; PAGES_PER_SUBFRAME] {
        std::array::from_fn(|i| {
            let m = &self.mack[4 * i..4 * i + 4];
            OsnmaPageField::join(self.hkroot[i], u32::from_be_bytes([m[0], m[1], m[2], m[3]]))
        })
    }

    pub fn hkroot_bits(&self) -> &BitSlice {
        self.hkroot.view_bits()
    }

    pub fn mack_bits(&self) -> &BitSlice {
        self.mack.view_bits()
    }

    pub fn hkroot_bytes(&self) -> &[u8; HKROOT_BITS / 8] {
        &self.hkroot
    }

    pub fn mack_bytes(&self) -> &[u8; MACK_BITS / 8] {
        &self.mack
    }
}

impl fmt::Debug for SubframePayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubframePayload")
            .field("hkroot", &hex::encode_upper(self.hkroot))
            .field("mack", &hex::encode_upper(self.mack))
            .finish()
    }
}

/// Append-only MSB-first bit writer.
#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bits: BitString,
}

impl BitWriter {
    pub fn new() -> BitWriter {
        BitWriter::default()
    }

    pub fn with_capacity(bits: usize) -> BitWriter {
        BitWriter {
            bits: BitString::with_capacity(bits),
        }
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) -> Result<(), BitError> {
        if width == 0 || width > 64 {
            return Err(BitError::BadWidth(width));
        }
        if width < 64 && value >> width != 0 {
            return Err(BitError::Overflow { value, width });
        }
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
        Ok(())
    }

    pub fn write_bits(&mut self, bits: &BitSlice) {
        self.bits.extend_from_bitslice(bits);
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        self.bits.extend_from_bitslice(bytes.view_bits::<Msb0>());
    }

    /// Zero-fills up to `len` bits. Does nothing if already that long.
    pub fn pad_to(&mut self, len: usize) {
        if self.bits.len() < len {
            self.bits.resize(len, false);
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn finish(self) -> BitString {
        self.bits
    }
}

/// MSB-first bit reader over a borrowed slice.
#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    bits: &'a BitSlice,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitSlice) -> BitReader<'a> {
        BitReader { bits, pos: 0 }
    }

    pub fn read(&mut self, width: u32) -> Result<u64, BitError> {
        if width == 0 || width > 64 {
            return Err(BitError::BadWidth(width));
        }
        let field = self.read_bits(width as usize)?;
        Ok(field.iter().by_vals().fold(0u64, |acc, b| (acc << 1) | u64::from(b)))
    }

    pub fn read_bits(&mut self, len: usize) -> Result<&'a BitSlice, BitError> {
        if self.remaining() < len {
            return Err(BitError::Underrun {
                requested: len,
                remaining: self.remaining(),
            });
        }
        let out = &self.bits[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    /// Reads `len` bytes worth of bits (not necessarily byte aligned).
    pub fn read_bytes(&mut self, len: usize) -> Result<Vec<u8>, BitError> {
        Ok(to_bytes(self.read_bits(8 * len)?))
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn rest(&self) -> &'a BitSlice {
        &self.bits[self.pos..]
    }
}

/// Packs a bit slice into bytes, zero-padding the final byte.
pub fn to_bytes(bits: &BitSlice) -> Vec<u8> {
    let mut v: BitString = bits.to_bitvec();
    v.force_align();
    v.set_uninitialized(false);
    let len = bits.len().div_ceil(8);
    let mut bytes = v.into_vec();
    bytes.truncate(len);
    bytes
}

pub fn from_bytes(bytes: &[u8]) -> BitString {
    BitString::from_slice(bytes)
}

/// Renders page vectors: one 10-digit hex field per line, 15 lines per
/// subframe, subframes separated by a blank line.
pub fn format_page_vectors(subframes: &[[OsnmaPageField; PAGES_PER_SUBFRAME]]) -> String {
    let mut out = String::new();
    for (i, sf) in subframes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for field in sf {
            out.push_str(&hex::encode_upper(field.bytes()));
            out.push('\n');
        }
    }
    out
}

/// Parses the format written by [`format_page_vectors`]. Lines starting with
/// `#` are comments.
pub fn parse_page_vectors(
    text: &str,
) -> Result<Vec<[OsnmaPageField; PAGES_PER_SUBFRAME]>, BitError> {
    let mut out = Vec::new();
    let mut block: Vec<OsnmaPageField> = Vec::new();
    let flush = |block: &mut Vec<OsnmaPageField>,
                 out: &mut Vec<[OsnmaPageField; PAGES_PER_SUBFRAME]>,
                 line: usize|
     -> Result<(), BitError> {
        if block.is_empty() {
            return Ok(());
        }
        let arr: [OsnmaPageField; PAGES_PER_SUBFRAME] =
            block.as_slice().try_into().map_err(|_| BitError::Vector {
                line,
                reason: format!("subframe block has {} lines, expected 15", block.len()),
            })?;
        out.push(arr);
        block.clear();
        Ok(())
    };
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut block, &mut out, n + 1)?;
            continue;
        }
        let bytes = hex::decode(line).map_err(|e| BitError::Vector {
            line: n + 1,
            reason: e.to_string(),
        })?;
        let arr: [u8; 5] = bytes.try_into().map_err(|_| BitError::Vector {
            line: n + 1,
            reason: "page field must be exactly 10 hex digits".into(),
        })?;
        block.push(OsnmaPageField::from_bytes(arr));
    }
    flush(&mut block, &mut out, text.lines().count())?;
    Ok(out)
}
