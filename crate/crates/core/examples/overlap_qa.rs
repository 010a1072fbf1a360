//! Trains the lexical QA model on the train split and answers follow-up
//! questions with and without their conversation history.

use std::sync::Arc;

use reign::corpus::annotate_all;
use reign::qa::{exchanges, ConvQa, OverlapQaModel, QaPair};
use reign::synth::SynthWorld;

fn main() -> reign::Result<()> {
    let world = SynthWorld::bundled()?;
    let kg = Arc::new(world.kg.clone());
    let train = annotate_all(&kg, &world.train)?;
    let mut qa = OverlapQaModel::new(kg.clone());
    qa.train(&train.iter().map(QaPair::from_annotated).collect::<Vec<_>>())?;
    println!("{} learned token-predicate weights", qa.weights().len());

    for aq in annotate_all(&kg, &world.test[..2])? {
        let with = qa.answer(&exchanges(&aq), &aq.question)?;
        let without = qa.answer(&[], &aq.question)?;
        let show = |l: &reign::qa::RankedAnswerList| l.ids().take(3).collect::<Vec<_>>().join(", ");
        println!("{}  gold {:?}", aq.text(), aq.gold_answers);
        println!(
            "    with history    [{}] p(top) {:.2}",
            show(&with),
            with.top1_probability()
        );
        println!("    without history [{}]", show(&without));
    }
    Ok(())
}
