//! Hash and MAC primitives selected by the HF and MF fields.

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::{Aes128, Aes192, Aes256, Block};
use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256};
use sha3::Sha3_256;
use std::fmt;

use super::TeslaError;

/// Hash function used to build the key chain (HF field).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HashFunction {
    /// HF = 0.
    Sha256,
    /// HF = 2.
    Sha3_256,
}

impl HashFunction {
    pub fn code(self) -> u8 {
        match self {
            HashFunction::Sha256 => 0,
            HashFunction::Sha3_256 => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<HashFunction, TeslaError> {
        match code {
            0 => Ok(HashFunction::Sha256),
            2 => Ok(HashFunction::Sha3_256),
            _ => Err(TeslaError::UnsupportedHash(format!("HF={code}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HashFunction::Sha256 => "SHA-256",
            HashFunction::Sha3_256 => "SHA3-256",
        }
    }

    pub fn from_name(name: &str) -> Result<HashFunction, TeslaError> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sha256" => Ok(HashFunction::Sha256),
            "sha3256" => Ok(HashFunction::Sha3_256),
            _ => Err(TeslaError::UnsupportedHash(name.to_string())),
        }
    }

    pub fn digest(self, data: &[u8]) -> [u8; 32] {
        match self {
            HashFunction::Sha256 => Sha256::digest(data).into(),
            HashFunction::Sha3_256 => Sha3_256::digest(data).into(),
        }
    }
}

impl fmt::Display for HashFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// MAC function used for tags (MF field).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MacFunction {
    /// MF = 0.
    HmacSha256,
    /// MF = 1. Needs a 128, 192 or 256-bit key.
    CmacAes,
}

impl MacFunction {
    pub fn code(self) -> u8 {
        match self {
            MacFunction::HmacSha256 => 0,
            MacFunction::CmacAes => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<MacFunction, TeslaError> {
        match code {
            0 => Ok(MacFunction::HmacSha256),
            1 => Ok(MacFunction::CmacAes),
            _ => Err(TeslaError::ReservedCode {
                field: "MF",
                value: code,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MacFunction::HmacSha256 => "HMAC-SHA-256",
            MacFunction::CmacAes => "CMAC-AES",
        }
    }

    pub fn from_name(name: &str) -> Result<MacFunction, TeslaError> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "hmacsha256" => Ok(MacFunction::HmacSha256),
            "cmacaes" => Ok(MacFunction::CmacAes),
            _ => Err(TeslaError::ReservedCode {
                field: "MF",
                value: u8::MAX,
            }),
        }
    }

    /// Output width in bits.
    pub fn output_bits(self) -> u32 {
        match self {
            MacFunction::HmacSha256 => 256,
            MacFunction::CmacAes => 128,
        }
    }

    pub fn supports_key_bytes(self, len: usize) -> bool {
        match self {
            MacFunction::HmacSha256 => true,
            MacFunction::CmacAes => matches!(len, 16 | 24 | 32),
        }
    }

    pub fn compute(self, key: &[u8], data: &[u8]) -> Result<Vec<u8>, TeslaError> {
        match self {
            MacFunction::HmacSha256 => {
                let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key)
                    .expect("HMAC accepts keys of any length");
                mac.update(data);
                Ok(mac.finalize().into_bytes().to_vec())
            }
            MacFunction::CmacAes => cmac_aes(key, data)
                .map(|t| t.to_vec())
                .ok_or(TeslaError::UnsupportedMacFunction(self, key.len() * 8)),
        }
    }
}

impl fmt::Display for MacFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// AES-CMAC (RFC 4493). Returns `None` for key lengths AES does not take.
pub fn cmac_aes(key: &[u8], data: &[u8]) -> Option<[u8; 16]> {
    match key.len() {
        16 => Some(cmac_with(&Aes128::new_from_slice(key).ok()?, data)),
        24 => Some(cmac_with(&Aes192::new_from_slice(key).ok()?, data)),
        32 => Some(cmac_with(&Aes256::new_from_slice(key).ok()?, data)),
        _ => None,
    }
}

fn cmac_with<C: BlockEncrypt<BlockSize = aes::cipher::consts::U16>>(cipher: &C, data: &[u8]) -> [u8; 16] {
    let encrypt = |block: [u8; 16]| -> [u8; 16] {
        let mut b = Block::from(block);
        cipher.encrypt_block(&mut b);
        b.into()
    };
    let double = |b: [u8; 16]| -> [u8; 16] {
        let v = u128::from_be_bytes(b);
        let mut out = v << 1;
        if v >> 127 == 1 {
            out ^= 0x87;
        }
        out.to_be_bytes()
    };
    let k1 = double(encrypt([0; 16]));
    let k2 = double(k1);

    let n = data.len().div_ceil(16).max(1);
    let complete = !data.is_empty() && data.len() % 16 == 0;
    let mut last = [0u8; 16];
    let tail = &data[16 * (n - 1)..];
    last[..tail.len()].copy_from_slice(tail);
    let subkey = if complete {
        k1
    } else {
        last[tail.len()] = 0x80;
        k2
    };
    for (l, k) in last.iter_mut().zip(subkey) {
        *l ^= k;
    }

    let mut x = [0u8; 16];
    for chunk in data[..16 * (n - 1)].chunks(16) {
        for (xi, m) in x.iter_mut().zip(chunk) {
            *xi ^= m;
        }
        x = encrypt(x);
    }
    for (xi, m) in x.iter_mut().zip(last) {
        *xi ^= m;
    }
    encrypt(x)
}
