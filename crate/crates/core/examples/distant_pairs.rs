//! Builds distant-supervision pairs from the dev split and writes them as
//! `distant_pairs.jsonl` to the given directory (default: a temp dir).

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use reign::corpus::annotate_all;
use reign::reformulator::{generate_distant_pairs, write_distant_pairs, RuleGenerator};
use reign::synth::SynthWorld;
use reign::SeededRng;

fn main() -> reign::Result<()> {
    let world = SynthWorld::bundled()?;
    let dev = annotate_all(&world.kg, &world.dev)?;
    let mut rng = SeededRng::seed_from_u64(0);
    let pairs = generate_distant_pairs(&world.kg, &dev, &RuleGenerator::new(&world.kg), &mut rng, 5)?;

    let mut per: BTreeMap<String, usize> = BTreeMap::new();
    for p in &pairs {
        *per.entry(p.category.name().to_owned()).or_default() += 1;
    }
    for (c, n) in &per {
        println!("{c:<28} {n}");
    }
    let p = &pairs[0];
    println!(
        "\nhistory:       {}\nquestion:      {}\ncategory:      {}\nreformulation: {}",
        p.history, p.question, p.category, p.reformulation
    );

    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let path = dir.join("distant_pairs.jsonl");
    write_distant_pairs(&path, &pairs)?;
    println!("\nwrote {} pairs to {}", pairs.len(), path.display());
    Ok(())
}
