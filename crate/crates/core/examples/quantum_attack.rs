//! Runs the quantum-forger scenario against an ECDSA deployment and against a
//! Falcon-512 deployment.

use osnma_lab::dsm::BidMode;
use osnma_lab::sim::{self, AdversaryKind, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ec = ScenarioConfig {
        duration_subframes: 120,
        satellites: 4,
        start_offset: 0,
        adversary: AdversaryKind::QuantumForger,
        ..ScenarioConfig::default()
    };
    let pqc = ScenarioConfig {
        npkt: 7,
        extensions: vec![(7, "Falcon-512".into())],
        bid_mode: BidMode::Extended,
        ..ec.clone()
    };
    for (label, cfg) in [("ECDSA-P256", ec), ("Falcon-512", pqc)] {
        let s = sim::run(&cfg)?.summary;
        println!(
            "{label}: forged accepted {}, forged PKRs rejected {}, forged KROOTs rejected {}",
            s.forged_accepted, s.pkr_rejected, s.kroot_rejected
        );
    }
    Ok(())
}
