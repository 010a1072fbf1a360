use rand::distributions::{Distribution, WeightedIndex};

use crate::error::{Error, Result};
use crate::taxonomy::{ActionMask, Category, NUM_CATEGORIES};
use crate::SeededRng;

/// Boltzmann distribution at temperature `tau` over the valid actions;
/// masked actions get probability exactly 0.
pub fn boltzmann_probabilities(
    q: &[f64; NUM_CATEGORIES],
    mask: &ActionMask,
    tau: f64,
) -> Result<[f64; NUM_CATEGORIES]> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Contract(format!("temperature must be positive, got {tau}")));
    }
    let max = (0..NUM_CATEGORIES)
        .filter(|&i| mask.get(i))
        .map(|i| q[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Contract("no valid action to sample".into()));
    }
    let mut p = [0.0; NUM_CATEGORIES];
    for i in (0..NUM_CATEGORIES).filter(|&i| mask.get(i)) {
        p[i] = ((q[i] - max) / tau).exp();
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

pub fn sample_action(q: &[f64; NUM_CATEGORIES], mask: &ActionMask, tau: f64, rng: &mut SeededRng) -> Result<Category> {
    let p = boltzmann_probabilities(q, mask, tau)?;
    let dist = WeightedIndex::new(p).map_err(|e| Error::Numeric(format!("sampling weights: {e}")))?;
    Ok(Category::from_index(dist.sample(rng)).expect("index below 15"))
}

/// Valid actions by descending Q, ties to the smaller index, at most `k`.
pub fn top_k(q: &[f64; NUM_CATEGORIES], mask: &ActionMask, k: usize) -> Vec<Category> {
    let mut valid: Vec<usize> = (0..NUM_CATEGORIES).filter(|&i| mask.get(i)).collect();
    valid.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    valid
        .into_iter()
        .take(k)
        .map(|i| Category::from_index(i).expect("index below 15"))
        .collect()
}

pub fn greedy(q: &[f64; NUM_CATEGORIES], mask: &ActionMask) -> Option<Category> {
    top_k(q, mask, 1).into_iter().next()
}
