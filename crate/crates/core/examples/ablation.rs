//! Replaces the selector with each alternative selection strategy and
//! compares augmentation size and paraphrase-test scores.

use reign::pipeline::{run_e2e_with, PipelineConfig, RunOptions, SelectionMode};

fn main() -> reign::Result<()> {
    println!("{:<12} {:>8} {:>6} {:>7}", "mode", "#reform", "P@1", "Robust");
    for mode in SelectionMode::ALL
        .into_iter()
        .filter(|m| *m != SelectionMode::CompletionFile)
    {
        let mut cfg = PipelineConfig::default();
        cfg.paths.out_dir = std::env::temp_dir().join(format!("reign-ablation-{mode}"));
        let out = run_e2e_with(
            &cfg,
            &RunOptions {
                mode,
                rcs_checkpoint: None,
            },
        )?;
        println!(
            "{:<12} {:>8} {:>6.3} {:>7.3}",
            mode.name(),
            out.n_reformulations,
            out.robust.p_at_1,
            out.robust.robust.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
