//! Runs the whole pipeline on the bundled benchmark and compares QA_orig
//! with QA_robust.
//!
//! ```text
//! cargo run -p reign --release --example end_to_end -- [config.toml] [seed]
//! ```

use std::path::Path;

use reign::pipeline::{run_e2e, PipelineConfig};

fn main() -> reign::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = match args.next() {
        Some(path) => PipelineConfig::load(Path::new(&path))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().expect("seed is an integer");
    }
    cfg.paths.out_dir = std::env::temp_dir().join(format!("reign-e2e-{}", cfg.seed));
    let out = run_e2e(&cfg)?;

    println!(
        "{:<10} {:>6} {:>6} {:>6} {:>7}",
        "model", "P@1", "MRR", "Hit@5", "Robust"
    );
    for (name, r) in [("QA_orig", &out.orig), ("QA_robust", &out.robust)] {
        println!(
            "{name:<10} {:>6.3} {:>6.3} {:>6.3} {:>7.3}",
            r.p_at_1,
            r.mrr,
            r.hit_at_5,
            r.robust.unwrap_or(f64::NAN)
        );
    }
    println!("\nP@1 by domain");
    for (d, b) in &out.robust.by_domain {
        println!("  {d:<8} {:.3} -> {:.3}", out.orig.by_domain[d].p_at_1, b.p_at_1);
    }
    println!(
        "\n{} reformulations, {} training pairs",
        out.n_reformulations, out.n_augmented_pairs
    );
    for s in &out.manifest.stages {
        println!("  {:<13} {:?} {:>8.1} ms", s.name, s.status, s.wall_ms);
    }
    println!("artifacts in {}", cfg.paths.out_dir.display());
    Ok(())
}
