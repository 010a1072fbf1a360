use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedQuestion;
use crate::error::{Error, Result};

pub const ENCODER_KIND: &str = "hashed_bow";
pub const ENCODER_VERSION: &str = "fnv1a-v1";
pub const HISTORY_TOKEN_WEIGHT: f64 = 0.25;
pub const MIN_DIM: usize = 16;

/// Maps a question and its context to a fixed-size state vector.
pub trait Encoder {
    fn dim(&self) -> usize;
    fn encode(&self, question: &[String], history: &[&str]) -> Vec<f64>;
    fn info(&self) -> EncoderInfo;

    /// Encodes the question with its short history.
    fn encode_annotated(&self, aq: &AnnotatedQuestion) -> Vec<f64> {
        let history: Vec<&str> = aq.short_history().into_iter().flat_map(|h| h.tokens()).collect();
        self.encode(&aq.question, &history)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderInfo {
    pub kind: String,
    pub version: String,
}

fn fnv1a(bytes: &[u8], salt: u8) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    std::iter::once(salt)
        .chain(bytes.iter().copied())
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Signed feature hashing of lowercased tokens, two buckets per token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBowEncoder {
    d: usize,
}

impl HashedBowEncoder {
    pub fn new(d: usize) -> Result<Self> {
        if d < MIN_DIM {
            return Err(Error::Validation(format!("encoder dimension {d} < {MIN_DIM}")));
        }
        Ok(Self { d })
    }

    fn add(&self, v: &mut [f64], token: &str, weight: f64) {
        let token = token.to_lowercase();
        for salt in 0..2u8 {
            let h = fnv1a(token.as_bytes(), salt);
            let bucket = (h % self.d as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign * weight;
        }
    }
}

impl Encoder for HashedBowEncoder {
    fn dim(&self) -> usize {
        self.d
    }

    fn encode(&self, question: &[String], history: &[&str]) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        for t in question {
            self.add(&mut v, t, 1.0);
        }
        for t in history {
            self.add(&mut v, t, HISTORY_TOKEN_WEIGHT);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    fn info(&self) -> EncoderInfo {
        EncoderInfo {
            kind: ENCODER_KIND.into(),
            version: ENCODER_VERSION.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn empty_input_is_zero() {
        let e = HashedBowEncoder::new(32).unwrap();
        assert!(e.encode(&[], &[]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_and_unit_norm() {
        let e = HashedBowEncoder::new(256).unwrap();
        let q = tokenize("Who played Frodo Baggins?");
        let a = e.encode(&q, &["the", "hobbit"]);
        assert_eq!(a, e.encode(&q, &["the", "hobbit"]));
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
        assert!(a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn partial_overlap_is_partial_similarity() {
        let e = HashedBowEncoder::new(256).unwrap();
        let a = e.encode(&tokenize("TROP airing on?"), &[]);
        let b = e.encode(&tokenize("TROP on?"), &[]);
        let c = cosine(&a, &b);
        assert!(c > 0.0 && c < 1.0, "{c}");
    }

    #[test]
    fn history_counts_less() {
        let e = HashedBowEncoder::new(256).unwrap();
        let q = tokenize("cast?");
        let with = e.encode(&q, &["ozark"]);
        let only = e.encode(&[], &["ozark"]);
        assert!(cosine(&with, &e.encode(&q, &[])) > cosine(&with, &only));
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(HashedBowEncoder::new(15).is_err());
    }

    #[test]
    fn hash_is_pinned() {
        // Changing these values changes the encoder version.
        assert_eq!(fnv1a(b"", 0), 0xaf63_bd4c_8601_b7df);
        assert_eq!(fnv1a(b"a", 0), fnv1a(b"a", 0));
        assert_ne!(fnv1a(b"a", 0), fnv1a(b"a", 1));
    }
}
