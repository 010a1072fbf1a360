use ndarray::{Array1, Array2, ArrayView1};
use rand::distributions::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::taxonomy::{ActionMask, NUM_CATEGORIES};
use crate::SeededRng;

/// Q-value reported for masked actions; below every finite Q.
pub const MASKED_Q: f64 = f64::MIN;

/// Two-layer value network `Q(s) = W2 · ReLU(W1 · s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    w1: Array2<f64>,
    w2: Array2<f64>,
}

/// Parameter gradients, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Array2<f64> {
    let bound = 1.0 / (cols as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl QNetwork {
    /// Uniform ±1/√fan_in initialisation.
    pub fn random(d: usize, h: usize, rng: &mut SeededRng) -> Result<Self> {
        check_dims(d, h)?;
        let w1 = uniform_matrix(h, d, rng);
        let w2 = uniform_matrix(NUM_CATEGORIES, h, rng);
        Ok(Self { w1, w2 })
    }

    pub fn zeros(d: usize, h: usize) -> Result<Self> {
        check_dims(d, h)?;
        Ok(Self {
            w1: Array2::zeros((h, d)),
            w2: Array2::zeros((NUM_CATEGORIES, h)),
        })
    }

    /// Builds a network from explicit `h×d` and `15×h` matrices.
    pub fn from_parts(w1: Array2<f64>, w2: Array2<f64>) -> Result<Self> {
        let (h, d) = w1.dim();
        check_dims(d, h)?;
        if w2.dim() != (NUM_CATEGORIES, h) {
            return Err(Error::Contract(format!(
                "W2 is {:?}, expected ({NUM_CATEGORIES}, {h})",
                w2.dim()
            )));
        }
        if !w1.iter().chain(w2.iter()).all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite network parameter".into()));
        }
        Ok(Self { w1, w2 })
    }

    /// Builds from row-major parameter vectors.
    pub fn from_row_major(d: usize, h: usize, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        let shape_err = |e: ndarray::ShapeError| Error::Validation(format!("parameter shape: {e}"));
        Self::from_parts(
            Array2::from_shape_vec((h, d), w1).map_err(shape_err)?,
            Array2::from_shape_vec((NUM_CATEGORIES, h), w2).map_err(shape_err)?,
        )
    }

    pub fn d(&self) -> usize {
        self.w1.ncols()
    }

    pub fn h(&self) -> usize {
        self.w1.nrows()
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn w1_mut(&mut self) -> &mut Array2<f64> {
        &mut self.w1
    }

    pub fn w2_mut(&mut self) -> &mut Array2<f64> {
        &mut self.w2
    }

    fn check_state(&self, s: &[f64]) -> Result<()> {
        if s.len() == self.d() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "state has dimension {}, network expects {}",
                s.len(),
                self.d()
            )))
        }
    }

    /// Hidden pre-activations, hidden activations and unmasked outputs.
    fn forward(&self, s: &[f64]) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
        let z = self.w1.dot(&ArrayView1::from(s));
        let hidden = z.mapv(|v| v.max(0.0));
        let raw = self.w2.dot(&hidden);
        (z, hidden, raw)
    }

    pub fn raw_q_values(&self, s: &[f64]) -> Result<[f64; NUM_CATEGORIES]> {
        self.check_state(s)?;
        let (_, _, raw) = self.forward(s);
        Ok(std::array::from_fn(|i| raw[i]))
    }

    /// Raw Q-values with masked entries replaced by [`MASKED_Q`].
    pub fn q_values(&self, s: &[f64], mask: &ActionMask) -> Result<[f64; NUM_CATEGORIES]> {
        let raw = self.raw_q_values(s)?;
        Ok(std::array::from_fn(|i| if mask.get(i) { raw[i] } else { MASKED_Q }))
    }

    /// Batch MSE on the taken actions and its exact gradient.
    pub fn loss_and_gradient(&self, batch: &[(&[f64], usize)], targets: &[f64]) -> Result<(f64, Gradient)> {
        if batch.is_empty() || batch.len() != targets.len() {
            return Err(Error::Contract(format!(
                "{} experiences but {} targets",
                batch.len(),
                targets.len()
            )));
        }
        let n = batch.len() as f64;
        let mut g1 = Array2::zeros(self.w1.raw_dim());
        let mut g2 = Array2::zeros(self.w2.raw_dim());
        let mut loss = 0.0;
        for (&(s, a), &y) in batch.iter().zip(targets) {
            self.check_state(s)?;
            if a >= NUM_CATEGORIES {
                return Err(Error::Contract(format!("action index {a} out of range")));
            }
            let (z, hidden, raw) = self.forward(s);
            let err = raw[a] - y;
            loss += err * err / n;
            let coef = 2.0 * err / n;
            g2.row_mut(a).scaled_add(coef, &hidden);
            let delta: Array1<f64> =
                Array1::from_shape_fn(self.h(), |j| if z[j] > 0.0 { coef * self.w2[[a, j]] } else { 0.0 });
            for (j, &dj) in delta.iter().enumerate() {
                if dj != 0.0 {
                    g1.row_mut(j).scaled_add(dj, &ArrayView1::from(s));
                }
            }
        }
        if !loss.is_finite() || !g1.iter().chain(g2.iter()).all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite loss or gradient (loss = {loss})")));
        }
        Ok((loss, Gradient { w1: g1, w2: g2 }))
    }

    /// One plain gradient-descent step; returns the pre-update loss.
    pub fn update(&mut self, batch: &[(&[f64], usize)], targets: &[f64], alpha: f64) -> Result<f64> {
        let (loss, grad) = self.loss_and_gradient(batch, targets)?;
        self.w1.scaled_add(-alpha, &grad.w1);
        self.w2.scaled_add(-alpha, &grad.w2);
        Ok(loss)
    }
}

fn check_dims(d: usize, h: usize) -> Result<()> {
    if d == 0 || h == 0 {
        Err(Error::Validation(format!(
            "network dimensions must be positive (d = {d}, h = {h})"
        )))
    } else {
        Ok(())
    }
}
