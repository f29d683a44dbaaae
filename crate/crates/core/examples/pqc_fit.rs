//! Block counts and BID-mode fit of each characterized scheme, with airtime
//! inside the DSM-PKR windows.

use osnma_lab::feasibility::{airtime, fit_report, Dissemination, Fit};
use osnma_lab::sigscheme::builtin_table;

fn main() {
    println!("{:<22} {:>6} {:>7} {:>10} {:>10}  pkr windows", "scheme", "pkr", "kroot", "fit", "kroot s");
    for scheme in builtin_table() {
        let r = fit_report(&scheme, 128, 40);
        let windows = match r.pkr.fit {
            Fit::Infeasible => "-".to_string(),
            _ => {
                let a = airtime(r.pkr.blocks, Dissemination::PkrWindow);
                format!("{} ({} h)", a.windows, a.latency_s / 3600)
            }
        };
        println!(
            "{:<22} {:>6} {:>7} {:>10} {:>10}  {}",
            scheme.name,
            r.pkr.blocks,
            r.kroot.blocks,
            r.mode().name(),
            r.kroot.airtime_s,
            windows,
        );
    }
}
