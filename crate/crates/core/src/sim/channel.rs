use rand::Rng;

use super::broadcaster::{Emission, NavData};
use crate::bitgrid::{SubframePayload, PAGES_PER_SUBFRAME};

/// One satellite subframe as seen by the receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reception {
    pub prn: u8,
    pub pages_lost: u8,
    /// Present only when all 15 pages arrived.
    pub complete: Option<(SubframePayload, NavData)>,
}

/// Independent page erasures with probability `page_loss`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossyChannel {
    pub page_loss: f64,
}

impl LossyChannel {
    pub fn transmit(&self, emission: &Emission, rng: &mut impl Rng) -> Reception {
        let pages_lost = (0..PAGES_PER_SUBFRAME)
            .filter(|_| rng.gen_bool(self.page_loss))
            .count() as u8;
        Reception {
            prn: emission.prn,
            pages_lost,
            complete: (pages_lost == 0).then(|| (emission.payload(), emission.nav.clone())),
        }
    }
}
