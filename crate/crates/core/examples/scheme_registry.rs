//! Lists the NPKT assignments, registers Falcon-512 under a spare code and
//! signs with both a real and a size-faithful surrogate provider.

use osnma_lab::sigscheme::{builtin_table, characterization_csv, Registry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = Registry::new();
    registry.assign(7, "Falcon-512")?;
    for (npkt, name) in registry.assignments() {
        println!("NPKT {npkt:2} -> {name}");
    }

    for npkt in [1, 7] {
        let scheme = registry.lookup(npkt)?;
        let keys = scheme.keygen([npkt; 32]);
        let sig = scheme.sign(&keys.secret, b"root key")?;
        println!(
            "{}: pk {} bits, signature {} bits, surrogate {}, verifies {}, rejects other message {}",
            scheme.name(),
            keys.public.len() * 8,
            sig.len() * 8,
            scheme.is_surrogate(),
            scheme.verify(&keys.public, b"root key", &sig),
            !scheme.verify(&keys.public, b"other", &sig),
        );
    }

    println!("config:\n{}", registry.to_config());
    print!("{}", characterization_csv(&builtin_table()));
    match registry.lookup(9) {
        Ok(_) => println!("NPKT 9 resolved"),
        Err(e) => println!("NPKT 9: {e}"),
    }
    Ok(())
}
