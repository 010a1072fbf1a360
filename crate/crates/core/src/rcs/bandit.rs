use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::encoder::{Encoder, HashedBowEncoder};
use super::network::QNetwork;
use super::policy::greedy;
use super::train::{Environment, Transition};
use crate::error::{Error, Result};
use crate::taxonomy::{ActionMask, Category, NUM_CATEGORIES};
use crate::SeededRng;

/// One-step environment with fixed rewards per (state, category), used to
/// check that training finds the best valid category of every state.
#[derive(Debug, Clone)]
pub struct BanditEnvironment {
    states: Vec<Vec<f64>>,
    masks: Vec<ActionMask>,
    rewards: Vec<[f64; NUM_CATEGORIES]>,
}

impl BanditEnvironment {
    /// `n_states` states encoded from distinct synthetic questions; each
    /// mask keeps a random subset of at least `min_valid` categories and
    /// rewards are drawn once, uniformly in [-1, 1].
    pub fn random(n_states: usize, d: usize, min_valid: usize, seed: u64) -> Result<Self> {
        if !(1..=NUM_CATEGORIES).contains(&min_valid) {
            return Err(Error::Validation(format!(
                "min_valid must lie in 1..=15, got {min_valid}"
            )));
        }
        let encoder = HashedBowEncoder::new(d)?;
        let mut rng = SeededRng::seed_from_u64(seed);
        let mut states = Vec::with_capacity(n_states);
        let mut masks = Vec::with_capacity(n_states);
        let mut rewards = Vec::with_capacity(n_states);
        for i in 0..n_states {
            let question = vec![format!("state{i}"), format!("token{i}")];
            states.push(encoder.encode(&question, &[]));
            let n_valid = rng.gen_range(min_valid..=NUM_CATEGORIES);
            let mut order: Vec<usize> = (0..NUM_CATEGORIES).collect();
            order.shuffle(&mut rng);
            let mut bits = [false; NUM_CATEGORIES];
            order[..n_valid].iter().for_each(|&a| bits[a] = true);
            masks.push(ActionMask::from_bits(bits).expect("non-empty"));
            rewards.push(std::array::from_fn(|_| rng.gen_range(-1.0..=1.0)));
        }
        Ok(Self { states, masks, rewards })
    }

    pub fn mask(&self, state: usize) -> &ActionMask {
        &self.masks[state]
    }

    pub fn state(&self, state: usize) -> &[f64] {
        &self.states[state]
    }

    pub fn reward(&self, state: usize, action: Category) -> f64 {
        self.rewards[state][action.index()]
    }

    /// Brute-force best valid category of a state.
    pub fn best_action(&self, state: usize) -> Category {
        self.masks[state]
            .valid_categories()
            .fold(None::<Category>, |best, c| match best {
                Some(b) if self.reward(state, b) >= self.reward(state, c) => Some(b),
                _ => Some(c),
            })
            .expect("at least one valid action")
    }

    /// Fraction of states where the greedy policy picks the best category.
    pub fn greedy_accuracy(&self, net: &QNetwork) -> Result<f64> {
        let mut hits = 0;
        for i in 0..self.states.len() {
            let q = net.q_values(&self.states[i], &self.masks[i])?;
            hits += usize::from(greedy(&q, &self.masks[i]) == Some(self.best_action(i)));
        }
        Ok(hits as f64 / self.states.len().max(1) as f64)
    }
}

impl Environment for BanditEnvironment {
    fn len(&self) -> usize {
        self.states.len()
    }

    fn observe(&mut self, index: usize) -> Result<(Vec<f64>, ActionMask)> {
        Ok((self.states[index].clone(), self.masks[index]))
    }

    fn step(&mut self, index: usize, action: Category, _: &mut SeededRng) -> Result<Transition> {
        Ok(Transition {
            s_next: self.states[index].clone(),
            next_mask: self.masks[index],
            r: self.reward(index, action),
            terminal: true,
        })
    }
}
