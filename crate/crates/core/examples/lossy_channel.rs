//! Time to first authentication for increasing page loss, over a few seeds.

use osnma_lab::sim::{self, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for loss in [0.0, 0.05, 0.1, 0.2] {
        let mut firsts = Vec::new();
        for seed in 1..=5 {
            let cfg = ScenarioConfig { duration_subframes: 400, satellites: 8, seed, page_loss: loss, ..ScenarioConfig::default() };
            let s = sim::run(&cfg)?.summary;
            firsts.push(s.first_auth_tick.map_or("-".to_string(), |t| t.to_string()));
        }
        println!("loss {loss:.2}: first authentication at subframe {}", firsts.join(" "));
    }
    Ok(())
}
