//! Loads the bundled KG and resolves surface forms to items.
//!
//! ```text
//! cargo run -p reign --example kg_lookup -- "TROP" "airing on"
//! ```

use reign::kg::KnowledgeGraph;
use reign::synth::{bundled_data_dir, FACTS_FILE, ITEMS_FILE};

fn main() -> reign::Result<()> {
    let dir = bundled_data_dir();
    let kg = KnowledgeGraph::load(&dir.join(ITEMS_FILE), &dir.join(FACTS_FILE))?;
    println!("{} items, {} facts", kg.items().count(), kg.facts().len());

    let mut queries: Vec<String> = std::env::args().skip(1).collect();
    if queries.is_empty() {
        queries = ["TROP", "airing on", "the band", "Frodo Baggins"]
            .map(String::from)
            .to_vec();
    }
    for q in &queries {
        let ids = kg.lookup_surface(q);
        if ids.is_empty() {
            println!("{q:>16} -> (no match)");
            continue;
        }
        for id in ids {
            let item = kg.item(id)?;
            let types = kg.types_of(id).map(|t| t.join(", ")).unwrap_or_default();
            println!(
                "{q:>16} -> {id} [{:?}] label `{}` types [{types}]",
                item.kind, item.label
            );
            for f in kg.facts_with_subject(id).take(4) {
                println!("{:>20}{} {} {}", "", f.subject, f.predicate, f.object);
            }
        }
    }
    Ok(())
}
