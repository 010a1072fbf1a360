use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::{Encoder, EncoderInfo, HashedBowEncoder, ENCODER_KIND, ENCODER_VERSION};
use super::network::QNetwork;
use super::policy::top_k;
use super::train::DqnConfig;
use crate::corpus::AnnotatedQuestion;
use crate::error::{Error, Result};
use crate::taxonomy::{ActionMask, Category, NUM_CATEGORIES};

/// On-disk form of a trained selector (`rcs.ckpt.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcsCheckpoint {
    pub d: usize,
    pub h: usize,
    pub actions: usize,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub encoder: EncoderInfo,
    pub config: DqnConfig,
    pub seed: u64,
}

/// A network paired with the encoder it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub net: QNetwork,
    pub encoder: HashedBowEncoder,
    pub config: DqnConfig,
}

/// Greedy top-k valid categories for an annotated question.
pub fn top_k_categories<En: Encoder + ?Sized>(
    net: &QNetwork,
    encoder: &En,
    aq: &AnnotatedQuestion,
    mask: &ActionMask,
    k: usize,
) -> Result<Vec<Category>> {
    let q = net.q_values(&encoder.encode_annotated(aq), mask)?;
    Ok(top_k(&q, mask, k))
}

impl Selector {
    pub fn new(net: QNetwork, config: DqnConfig) -> Result<Self> {
        let encoder = HashedBowEncoder::new(net.d())?;
        Ok(Self { net, encoder, config })
    }

    pub fn top_k(&self, aq: &AnnotatedQuestion, mask: &ActionMask, k: usize) -> Result<Vec<Category>> {
        top_k_categories(&self.net, &self.encoder, aq, mask, k)
    }

    pub fn to_checkpoint(&self) -> RcsCheckpoint {
        RcsCheckpoint {
            d: self.net.d(),
            h: self.net.h(),
            actions: NUM_CATEGORIES,
            w1: self.net.w1().iter().copied().collect(),
            w2: self.net.w2().iter().copied().collect(),
            encoder: self.encoder.info(),
            config: self.config.clone(),
            seed: self.config.seed,
        }
    }

    pub fn from_checkpoint(ckpt: RcsCheckpoint) -> Result<Self> {
        if ckpt.actions != NUM_CATEGORIES {
            return Err(Error::Validation(format!(
                "checkpoint has {} actions, expected {NUM_CATEGORIES}",
                ckpt.actions
            )));
        }
        if ckpt.encoder.kind != ENCODER_KIND || ckpt.encoder.version != ENCODER_VERSION {
            return Err(Error::Validation(format!(
                "checkpoint encoder {}/{} is not {ENCODER_KIND}/{ENCODER_VERSION}",
                ckpt.encoder.kind, ckpt.encoder.version
            )));
        }
        let net = QNetwork::from_row_major(ckpt.d, ckpt.h, ckpt.w1, ckpt.w2)?;
        Self::new(net, ckpt.config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: RcsCheckpoint = serde_json::from_str(&text).map_err(|e| Error::Load {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_checkpoint(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SeededRng;
    use rand::SeedableRng;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let cfg = DqnConfig {
            d: 16,
            h: 6,
            seed: 4,
            ..Default::default()
        };
        let net = QNetwork::random(16, 6, &mut SeededRng::seed_from_u64(4)).unwrap();
        let sel = Selector::new(net, cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rcs.ckpt.json");
        sel.save(&path).unwrap();
        let back = Selector::load(&path).unwrap();
        assert_eq!(back, sel);
        let json: serde_json::Value = serde_json::from_str(&sel.to_json()).unwrap();
        assert_eq!(json["actions"], 15);
        assert_eq!(json["w1"].as_array().unwrap().len(), 96);
        assert_eq!(json["w2"].as_array().unwrap().len(), 90);
        assert_eq!(json["encoder"]["kind"], "hashed_bow");
        assert_eq!(json["seed"], 4);
        // Row-major: second stored value is W1[0][1].
        assert_eq!(json["w1"][1].as_f64().unwrap(), sel.net.w1()[[0, 1]]);
    }

    #[test]
    fn rejects_foreign_checkpoints() {
        let sel = Selector::new(QNetwork::zeros(16, 2).unwrap(), DqnConfig::default()).unwrap();
        let mut c = sel.to_checkpoint();
        c.actions = 14;
        assert!(Selector::from_checkpoint(c).is_err());
        let mut c = sel.to_checkpoint();
        c.encoder.version = "other".into();
        assert!(Selector::from_checkpoint(c).is_err());
        let mut c = sel.to_checkpoint();
        c.w1.pop();
        assert!(Selector::from_checkpoint(c).is_err());
    }
}
