//! Compares empirical Boltzmann sampling frequencies with the closed form
//! at several temperatures, and shows greedy top-k under the same mask.

use rand::SeedableRng;
use reign::rcs::{boltzmann_probabilities, sample_action, top_k};
use reign::taxonomy::{ActionMask, Category, NUM_CATEGORIES};
use reign::SeededRng;

fn main() -> reign::Result<()> {
    let q: [f64; NUM_CATEGORIES] = std::array::from_fn(|i| (i as f64 * 0.7).sin());
    let mut mask = ActionMask::all();
    for i in [1, 4, 9] {
        mask.set(Category::from_index(i).expect("index < 15"), false);
    }
    let mut rng = SeededRng::seed_from_u64(0);
    for tau in [0.1, 0.3, 1.0] {
        let p = boltzmann_probabilities(&q, &mask, tau)?;
        let mut counts = [0usize; NUM_CATEGORIES];
        let n = 50_000;
        for _ in 0..n {
            counts[sample_action(&q, &mask, tau, &mut rng)?.index()] += 1;
        }
        println!("tau = {tau}");
        for a in 0..NUM_CATEGORIES {
            println!(
                "  {:<28} q {:+.3}  p {:.4}  freq {:.4}",
                Category::from_index(a).unwrap().name(),
                q[a],
                p[a],
                counts[a] as f64 / n as f64
            );
        }
    }
    let best: Vec<&str> = top_k(&q, &mask, 5).into_iter().map(Category::name).collect();
    println!("top-5: {}", best.join(", "));
    Ok(())
}
