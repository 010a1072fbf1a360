//! Annotates the turns of a bundled conversation: linked mentions with
//! their roles, and the categories valid for each question.

use reign::corpus::annotate_all;
use reign::synth::SynthWorld;
use reign::taxonomy::valid_actions;

fn main() -> reign::Result<()> {
    let world = SynthWorld::bundled()?;
    let conv = &world.train[1..2];
    for aq in annotate_all(&world.kg, conv)? {
        println!("{}#{}: {}", aq.conversation_id, aq.turn_index, aq.text());
        for m in &aq.mentions {
            println!(
                "    [{}..{}) {:?} -> {} ({:?})",
                m.start,
                m.end,
                m.surface.join(" "),
                m.item,
                m.role
            );
        }
        let mask = valid_actions(&aq, &world.kg);
        let valid: Vec<String> = mask.valid_categories().map(|c| c.name().to_owned()).collect();
        println!("    valid: {}", valid.join(", "));
    }
    Ok(())
}
