//! Ranking metrics and rewards on hand-made lists, then a full report for
//! the untrained QA model on the bundled test split.

use std::sync::Arc;

use reign::eval::{evaluate, hit_at_5, mrr, precision_at_1, reciprocal_rank, reward_extrinsic};
use reign::qa::{OverlapQaModel, RankedAnswerList};
use reign::synth::SynthWorld;

fn list(ids: &[&str]) -> RankedAnswerList {
    RankedAnswerList::from_scores(ids.iter().enumerate().map(|(i, id)| (id.to_string(), 10.0 - i as f64)))
}

fn main() -> reign::Result<()> {
    let gold = vec!["b".to_owned()];
    let first = list(&["b", "a"]);
    let third = list(&["a", "c", "b"]);
    for (name, l) in [("first", &first), ("third", &third)] {
        println!(
            "{name}: P@1 {} RR {:.3} Hit@5 {}",
            precision_at_1(l, &gold)?,
            reciprocal_rank(l, &gold)?,
            hit_at_5(l, &gold)?
        );
    }
    println!("MRR of [1, 0.5, 0] = {}", mrr(&[1.0, 0.5, 0.0]));
    println!(
        "reward(first over third) = {:+.3}",
        reward_extrinsic(&first, &third, &gold)?
    );

    let world = SynthWorld::bundled()?;
    let qa = OverlapQaModel::new(Arc::new(world.kg.clone()));
    print!("{}", evaluate(&qa, &world.kg, &world.test, true)?.to_json());
    Ok(())
}
