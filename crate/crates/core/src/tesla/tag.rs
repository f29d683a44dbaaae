use super::{Key, TeslaError, TeslaParams};

/// Width of the tag-info field: PRN(8) ADKD(4) COP(4).
pub const TAG_INFO_BITS: u32 = 16;

/// Authentication data and key delay strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Adkd {
    /// Ephemeris, clock and status data.
    EphemerisClock,
    /// Timing parameters.
    Timing,
    /// Ephemeris and clock, verified with the slow key.
    SlowMac,
}

impl Adkd {
    pub fn code(self) -> u8 {
        match self {
            Adkd::EphemerisClock => 0,
            Adkd::Timing => 4,
            Adkd::SlowMac => 12,
        }
    }

    pub fn from_code(code: u8) -> Result<Adkd, TeslaError> {
        match code {
            0 => Ok(Adkd::EphemerisClock),
            4 => Ok(Adkd::Timing),
            12 => Ok(Adkd::SlowMac),
            other => Err(TeslaError::UnknownAdkd(other)),
        }
    }

    /// Subframes between a tag and the disclosure of its key.
    pub fn disclosure_delay(self) -> u32 {
        match self {
            Adkd::SlowMac => 10,
            _ => 1,
        }
    }
}

/// PRN, ADKD and cut-off point identifying what a tag authenticates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TagInfo {
    pub prn: u8,
    pub adkd: Adkd,
    pub cop: u8,
}

impl TagInfo {
    pub fn new(prn: u8, adkd: Adkd, cop: u8) -> Result<TagInfo, TeslaError> {
        if cop > 15 {
            return Err(TeslaError::BadCop(cop));
        }
        Ok(TagInfo { prn, adkd, cop })
    }

    pub fn to_u16(self) -> u16 {
        (u16::from(self.prn) << 8) | (u16::from(self.adkd.code()) << 4) | u16::from(self.cop)
    }

    pub fn from_u16(word: u16) -> Result<TagInfo, TeslaError> {
        TagInfo::new(
            (word >> 8) as u8,
            Adkd::from_code(((word >> 4) & 0xF) as u8)?,
            (word & 0xF) as u8,
        )
    }

    pub fn to_bytes(self) -> [u8; 2] {
        self.to_u16().to_be_bytes()
    }
}

/// The leading `width` bits of a MAC output, right-aligned in a `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TagBits {
    value: u64,
    width: u32,
}

impl TagBits {
    pub fn new(value: u64, width: u32) -> Result<TagBits, TeslaError> {
        if !(1..=64).contains(&width) {
            return Err(TeslaError::BadTagWidth(width));
        }
        if width < 64 && value >> width != 0 {
            return Err(TeslaError::BadTagWidth(width));
        }
        Ok(TagBits { value, width })
    }

    /// Truncates a MAC output to its most significant `width` bits.
    pub fn from_mac(mac: &[u8], width: u32) -> Result<TagBits, TeslaError> {
        if !(1..=64).contains(&width) || mac.len() * 8 < width as usize {
            return Err(TeslaError::BadTagWidth(width));
        }
        let mut head = [0u8; 8];
        let n = mac.len().min(8);
        head[..n].copy_from_slice(&mac[..n]);
        let value = u64::from_be_bytes(head) >> (64 - width);
        Ok(TagBits { value, width })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }
}

/// A truncated MAC together with its tag-info field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tag {
    pub bits: TagBits,
    pub info: TagInfo,
}

/// MAC input: tag info (2 bytes) followed by the authenticated data.
fn mac_input(info: TagInfo, data: &[u8]) -> Vec<u8> {
    let mut input = Vec::with_capacity(data.len() + 2);
    input.extend_from_slice(&info.to_bytes());
    input.extend_from_slice(data);
    input
}

/// Truncated MAC over `info || data` without wrapping it in a [`Tag`].
pub fn compute_tag(
    key: &Key,
    data: &[u8],
    params: &TeslaParams,
    info: TagInfo,
) -> Result<TagBits, TeslaError> {
    if key.bit_len() != params.key_bits() as usize {
        return Err(TeslaError::BadKeyLength {
            got: key.bit_len(),
            expected: params.key_bits(),
        });
    }
    let mac = params.mac().compute(key.as_bytes(), &mac_input(info, data))?;
    TagBits::from_mac(&mac, params.tag_bits())
}

pub fn make_tag(
    key: &Key,
    data: &[u8],
    params: &TeslaParams,
    info: TagInfo,
) -> Result<Tag, TeslaError> {
    Ok(Tag {
        bits: compute_tag(key, data, params, info)?,
        info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn info_packing() {
        let info = TagInfo::new(0x1A, Adkd::SlowMac, 3).unwrap();
        assert_eq!(info.to_u16(), 0x1AC3);
        assert_eq!(TagInfo::from_u16(0x1AC3).unwrap(), info);
        assert_eq!(TagInfo::from_u16(0x1A53), Err(TeslaError::UnknownAdkd(5)));
        assert!(TagInfo::new(1, Adkd::Timing, 16).is_err());
    }

    #[test]
    fn truncation_is_msb_first() {
        let mac = [0xAB, 0xCD, 0xEF, 0x01, 0x23, 0x45, 0x67, 0x89, 0xFF];
        assert_eq!(TagBits::from_mac(&mac, 40).unwrap().value(), 0xABCD_EF01_23);
        assert_eq!(TagBits::from_mac(&mac, 20).unwrap().value(), 0xABCDE);
        assert_eq!(TagBits::from_mac(&mac, 1).unwrap().value(), 1);
        assert_eq!(
            TagBits::from_mac(&mac, 64).unwrap().value(),
            0xABCD_EF01_2345_6789
        );
        assert!(TagBits::from_mac(&mac[..2], 20).is_err());
    }

    proptest! {
        #[test]
        fn tag_bits_never_exceed_width(mac in proptest::collection::vec(any::<u8>(), 8..32), w in 1u32..=64) {
            let t = TagBits::from_mac(&mac, w).unwrap();
            prop_assert!(w == 64 || t.value() >> w == 0);
            prop_assert_eq!(TagBits::new(t.value(), w).unwrap(), t);
        }
    }
}
