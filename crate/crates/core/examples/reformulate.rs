//! Applies every valid category to a few questions with the rule generator,
//! then once more through the noisy wrapper.

use rand::SeedableRng;
use reign::corpus::annotate_all;
use reign::reformulator::{Generator, NoisyGenerator, RuleGenerator};
use reign::synth::SynthWorld;
use reign::taxonomy::valid_actions;
use reign::SeededRng;

fn main() -> reign::Result<()> {
    let world = SynthWorld::bundled()?;
    let kg = &world.kg;
    let rule = RuleGenerator::new(kg);
    let noisy = NoisyGenerator::new(rule, kg, 0.2)?;
    let mut rng = SeededRng::seed_from_u64(1);
    for aq in annotate_all(kg, &world.train[..2])? {
        println!("{}", aq.text());
        for c in valid_actions(&aq, kg).valid_categories() {
            let r = rule.generate(&aq, c, &mut rng).expect("valid categories always apply");
            let n = noisy.generate(&aq, c, &mut rng).expect("valid categories always apply");
            println!("  {:<28} {:<45} noisy: {}", c.name(), r.text(), n.text());
        }
    }
    Ok(())
}
