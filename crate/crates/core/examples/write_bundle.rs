//! Regenerates the bundled synthetic benchmark under `data/` (or the
//! directory given as the first argument).
//!
//! ```text
//! cargo run -p reign --example write_bundle [DIR]
//! ```

use std::path::PathBuf;

use reign::synth::{bundled_data_dir, SynthWorld};

fn main() -> reign::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(bundled_data_dir);
    let world = SynthWorld::bundled()?;
    world.write(&dir)?;
    println!(
        "wrote {} items, {} facts, {}/{}/{} conversations to {}",
        world.kg.items().count(),
        world.kg.facts().len(),
        world.train.len(),
        world.dev.len(),
        world.test.len(),
        dir.display()
    );
    Ok(())
}
