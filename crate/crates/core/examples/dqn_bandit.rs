//! Trains the Q-network on a one-step synthetic bandit and reports how
//! often the greedy policy finds each state's best valid category.
//!
//! ```text
//! cargo run -p reign --release --example dqn_bandit -- [alpha] [epochs]
//! ```

use rand::SeedableRng;
use reign::rcs::{train_dqn, BanditEnvironment, DqnConfig, QNetwork};
use reign::SeededRng;

fn main() -> reign::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().map_or(0.5, |a| a.parse().expect("alpha is a number"));
    let epochs: usize = args.next().map_or(300, |a| a.parse().expect("epochs is an integer"));
    let cfg = DqnConfig {
        alpha,
        gamma: 0.0,
        epochs,
        h: 32,
        ..Default::default()
    };

    let mut env = BanditEnvironment::random(50, cfg.d, 4, 1)?;
    let mut rng = SeededRng::seed_from_u64(cfg.seed);
    let mut net = QNetwork::random(cfg.d, cfg.h, &mut rng)?;
    println!("before: greedy accuracy {:.2}", env.greedy_accuracy(&net)?);
    let stats = train_dqn(&mut env, &mut net, &cfg, &mut rng)?;
    let first = stats.losses.first().copied().unwrap_or(f64::NAN);
    let last = stats.losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "{} steps, {} updates, loss {first:.4} -> {last:.4}",
        stats.steps, stats.updates
    );
    println!("after:  greedy accuracy {:.2}", env.greedy_accuracy(&net)?);
    Ok(())
}
