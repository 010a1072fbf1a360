//! Trains the category selector on dev with rewards from QA_orig, saves the
//! checkpoint, reloads it and prints top-k categories for train questions.

use reign::pipeline::{self, PipelineConfig};
use reign::rcs::Selector;
use reign::taxonomy::valid_actions;

fn main() -> reign::Result<()> {
    let mut cfg = PipelineConfig::default();
    cfg.paths.out_dir = std::env::temp_dir().join("reign-selector");
    cfg.dqn.alpha = 1e-3;
    let (selector, manifest) = pipeline::run_train_rcs(&cfg)?;
    for s in &manifest.stages {
        println!("stage {:<10} {:>8.1} ms", s.name, s.wall_ms);
    }
    let path = cfg.paths.out_dir.join(pipeline::RCS_FILE);
    let reloaded = Selector::load(&path)?;
    assert_eq!(reloaded, selector);
    println!(
        "checkpoint {} (d = {}, h = {})",
        path.display(),
        selector.net.d(),
        selector.net.h()
    );

    let inputs = pipeline::Inputs::load(&cfg)?;
    for aq in inputs.train_questions.iter().take(6) {
        let mask = valid_actions(aq, &inputs.kg);
        let picks: Vec<&str> = reloaded
            .top_k(aq, &mask, cfg.k)?
            .into_iter()
            .map(|c| c.name())
            .collect();
        println!("{:<55} {}", aq.text(), picks.join(", "));
    }
    Ok(())
}
