use std::fmt;

use super::{normalize_name, SchemeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    EllipticCurve,
    Lattice,
    HashStateless,
    HashStateful,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::EllipticCurve => "EllipticCurve",
            Family::Lattice => "Lattice",
            Family::HashStateless => "HashStateless",
            Family::HashStateful => "HashStateful",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Published sizes of a signature scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeCharacterization {
    pub name: String,
    /// NPKT code when the scheme has an assigned one.
    pub npkt: Option<u8>,
    pub pk_bits: u64,
    pub sig_bits: u64,
    pub family: Family,
    pub quantum_resistant: bool,
    /// Printed public-key entry kept verbatim when it is not self-consistent.
    pub printed_pk: Option<&'static str>,
    /// Why the row is flagged, if it is.
    pub flag: Option<&'static str>,
}

impl SchemeCharacterization {
    fn row(
        name: &str,
        npkt: Option<u8>,
        pk_bits: u64,
        sig_bits: u64,
        family: Family,
    ) -> SchemeCharacterization {
        SchemeCharacterization {
            name: name.to_string(),
            npkt,
            pk_bits,
            sig_bits,
            family,
            quantum_resistant: family != Family::EllipticCurve,
            printed_pk: None,
            flag: None,
        }
    }

    /// True for schemes that can only be characterized, never signed with.
    pub fn is_stateful(&self) -> bool {
        self.family == Family::HashStateful
    }
}

/// The built-in rows, classical baselines first.
pub fn builtin_table() -> Vec<SchemeCharacterization> {
    use Family::*;
    let mut xmss = SchemeCharacterization::row("XMSS-w32-h8", None, 256_000_000_000, 2560, HashStateful);
    xmss.printed_pk = Some("256×10^9 / 2^35");
    xmss.flag = Some("printed public key size is inconsistent: 2^35 bytes is not 256×10^9 bits");
    vec![
        SchemeCharacterization::row("ECDSA-P256", Some(1), 264, 512, EllipticCurve),
        SchemeCharacterization::row("ECDSA-P521", Some(3), 536, 1056, EllipticCurve),
        SchemeCharacterization::row("Dilithium2", None, 10496, 19360, Lattice),
        SchemeCharacterization::row("Falcon-512", None, 7176, 5328, Lattice),
        SchemeCharacterization::row("SPHINCS+-128s", None, 256, 62848, HashStateless),
        xmss,
        SchemeCharacterization::row("LMS-h512", None, 1 << 12, 131072, HashStateful),
    ]
}

/// Looks up a built-in row by name, ignoring case and punctuation.
pub fn characterize(name: &str) -> Result<SchemeCharacterization, SchemeError> {
    let wanted = normalize_name(name);
    builtin_table()
        .into_iter()
        .find(|c| normalize_name(&c.name) == wanted)
        .ok_or_else(|| SchemeError::UnknownScheme(name.to_string()))
}

/// CSV with columns name, pk_bits, sig_bits, family, quantum_resistant.
pub fn characterization_csv(rows: &[SchemeCharacterization]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "pk_bits", "sig_bits", "family", "quantum_resistant"])
        .expect("in-memory write");
    for c in rows {
        w.write_record([
            c.name.clone(),
            c.pk_bits.to_string(),
            c.sig_bits.to_string(),
            c.family.to_string(),
            c.quantum_resistant.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_match_published_sizes() {
        let expect = [
            ("ECDSA-P256", 264, 512),
            ("ECDSA-P521", 536, 1056),
            ("Dilithium2", 10496, 19360),
            ("Falcon-512", 7176, 5328),
            ("SPHINCS+-128s", 256, 62848),
            ("XMSS-w32-h8", 256_000_000_000, 2560),
            ("LMS-h512", 4096, 131072),
        ];
        for (name, pk, sig) in expect {
            let c = characterize(name).unwrap();
            assert_eq!((c.pk_bits, c.sig_bits), (pk, sig), "{name}");
        }
        // Byte columns of the printed tables.
        assert_eq!(characterize("Dilithium2").unwrap().sig_bits / 8, 2420);
        assert_eq!(characterize("Falcon-512").unwrap().sig_bits / 8, 666);
        assert_eq!(characterize("SPHINCS+-128s").unwrap().sig_bits / 8, 7856);
        assert_eq!(characterize("xmss w32 h8").unwrap().sig_bits / 8, 320);
        assert!(characterize("XMSS-w32-h8").unwrap().flag.is_some());
        assert_eq!(
            characterize("RSA-2048"),
            Err(SchemeError::UnknownScheme("RSA-2048".into()))
        );
    }

    #[test]
    fn csv_export() {
        let text = characterization_csv(&builtin_table());
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "name,pk_bits,sig_bits,family,quantum_resistant"
        );
        assert_eq!(lines.next().unwrap(), "ECDSA-P256,264,512,EllipticCurve,false");
        assert_eq!(text.lines().count(), 8);
        assert!(text.contains("Falcon-512,7176,5328,Lattice,true"));
    }
}
