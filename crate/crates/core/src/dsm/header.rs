use super::DsmError;

/// NMA status field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NmaStatus {
    Reserved,
    Test,
    Operational,
    DontUse,
}

impl NmaStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> NmaStatus {
        match code & 0b11 {
            0 => NmaStatus::Reserved,
            1 => NmaStatus::Test,
            2 => NmaStatus::Operational,
            _ => NmaStatus::DontUse,
        }
    }
}

/// Chain and public key status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cpks {
    Reserved0,
    Nominal,
    EndOfChain,
    ChainRevoked,
    NewPublicKey,
    PublicKeyRevoked,
    NewMerkleTree,
    Reserved7,
}

impl Cpks {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Cpks {
        match code & 0b111 {
            0 => Cpks::Reserved0,
            1 => Cpks::Nominal,
            2 => Cpks::EndOfChain,
            3 => Cpks::ChainRevoked,
            4 => Cpks::NewPublicKey,
            5 => Cpks::PublicKeyRevoked,
            6 => Cpks::NewMerkleTree,
            _ => Cpks::Reserved7,
        }
    }

    pub fn is_reserved(self) -> bool {
        matches!(self, Cpks::Reserved0 | Cpks::Reserved7)
    }
}

/// 8-bit NMA header: status (2), CID (2), CPKS (3), reserved (1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NmaHeader {
    pub status: NmaStatus,
    pub cid: u8,
    pub cpks: Cpks,
}

impl NmaHeader {
    pub fn operational(cid: u8) -> NmaHeader {
        NmaHeader {
            status: NmaStatus::Operational,
            cid: cid & 0b11,
            cpks: Cpks::Nominal,
        }
    }

    pub fn to_u8(self) -> u8 {
        (self.status.code() << 6) | ((self.cid & 0b11) << 4) | (self.cpks.code() << 1)
    }

    pub fn from_u8(byte: u8) -> Result<NmaHeader, DsmError> {
        if byte & 1 != 0 {
            return Err(DsmError::ReservedBits);
        }
        Ok(NmaHeader {
            status: NmaStatus::from_code(byte >> 6),
            cid: (byte >> 4) & 0b11,
            cpks: Cpks::from_code(byte >> 1),
        })
    }
}

/// Events that drive the CPKS field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LifecycleEvent {
    ChainRenewal,
    ChainRevocation,
    NewPublicKey,
    PublicKeyRevocation,
    NewMerkleTree,
    Nominal,
}

/// Applies a lifecycle event to the header.
///
/// | event               | result | CID  | undefined from        |
/// |---------------------|--------|------|-----------------------|
/// | ChainRenewal        | EOC    | +1   | EOC, PKREV            |
/// | ChainRevocation     | CREV   | +1   | CREV                  |
/// | NewPublicKey        | NPK    | same |                       |
/// | PublicKeyRevocation | PKREV  | same | PKREV                 |
/// | NewMerkleTree       | NMT    | same |                       |
/// | Nominal             | Nominal| same |                       |
///
/// From the reserved values only `Nominal` is defined. CID arithmetic is
/// modulo 4.
pub fn cpks_transition(current: NmaHeader, event: LifecycleEvent) -> Result<NmaHeader, DsmError> {
    use Cpks::*;
    use LifecycleEvent as E;
    let from = current.cpks;
    let invalid = Err(DsmError::InvalidTransition { from, event });
    if from.is_reserved() && event != E::Nominal {
        return invalid;
    }
    let next_cid = (current.cid + 1) & 0b11;
    let (cpks, cid) = match (event, from) {
        (E::ChainRenewal, EndOfChain | PublicKeyRevoked) => return invalid,
        (E::ChainRenewal, _) => (EndOfChain, next_cid),
        (E::ChainRevocation, ChainRevoked) => return invalid,
        (E::ChainRevocation, _) => (ChainRevoked, next_cid),
        (E::NewPublicKey, _) => (NewPublicKey, current.cid),
        (E::PublicKeyRevocation, PublicKeyRevoked) => return invalid,
        (E::PublicKeyRevocation, _) => (PublicKeyRevoked, current.cid),
        (E::NewMerkleTree, _) => (NewMerkleTree, current.cid),
        (E::Nominal, _) => (Nominal, current.cid),
    };
    Ok(NmaHeader {
        status: current.status,
        cid,
        cpks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_byte_round_trip() {
        for byte in (0u8..=255).filter(|b| b & 1 == 0) {
            assert_eq!(NmaHeader::from_u8(byte).unwrap().to_u8(), byte);
        }
        assert_eq!(NmaHeader::from_u8(1), Err(DsmError::ReservedBits));
        assert_eq!(NmaHeader::operational(2).to_u8(), 0b1010_0010);
    }

    #[test]
    fn table_examples() {
        let h = NmaHeader::operational(3);
        let eoc = cpks_transition(h, LifecycleEvent::ChainRenewal).unwrap();
        assert_eq!((eoc.cpks, eoc.cid), (Cpks::EndOfChain, 0));
        assert_eq!(cpks_transition(h, LifecycleEvent::Nominal).unwrap(), h);
        let crev = cpks_transition(eoc, LifecycleEvent::ChainRevocation).unwrap();
        assert_eq!(crev.cpks, Cpks::ChainRevoked);
        assert!(cpks_transition(eoc, LifecycleEvent::ChainRenewal).is_err());
        assert!(cpks_transition(crev, LifecycleEvent::ChainRevocation).is_err());
        let reserved = NmaHeader {
            cpks: Cpks::Reserved7,
            ..h
        };
        assert!(cpks_transition(reserved, LifecycleEvent::NewPublicKey).is_err());
        assert_eq!(
            cpks_transition(reserved, LifecycleEvent::Nominal).unwrap().cpks,
            Cpks::Nominal
        );
    }

    #[test]
    fn transitions_are_total_or_explicitly_invalid() {
        use LifecycleEvent::*;
        let events = [
            ChainRenewal,
            ChainRevocation,
            NewPublicKey,
            PublicKeyRevocation,
            NewMerkleTree,
            Nominal,
        ];
        for code in 0..8 {
            for cid in 0..4 {
                let h = NmaHeader {
                    status: NmaStatus::Operational,
                    cid,
                    cpks: Cpks::from_code(code),
                };
                for e in events {
                    // Deterministic, and never lands in a reserved state.
                    let a = cpks_transition(h, e);
                    assert_eq!(a, cpks_transition(h, e));
                    if let Ok(next) = a {
                        assert!(!next.cpks.is_reserved());
                        assert!(next.cid < 4);
                    }
                }
            }
        }
    }
}
