//! Hashed bag-of-words sentence embedding.

use serde::{Deserialize, Serialize};

pub const DEFAULT_EMBED_DIM: usize = 256;
pub const DEFAULT_EMBED_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEmbedding {
    values: Vec<f64>,
}

impl QueryEmbedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Seeded FNV-1a followed by a splitmix64 finalizer.
fn token_hash(token: &str, seed: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Bucket and sign a token is hashed to.
pub fn token_slot(token: &str, dim: usize, seed: u64) -> (usize, f64) {
    let h = token_hash(token, seed);
    let bucket = (h % dim as u64) as usize;
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    (bucket, sign)
}

/// Signed token counts hashed into `dim` buckets, L2-normalized. Text
/// without tokens maps to the zero vector.
pub fn embed_text(text: &str, dim: usize, seed: u64) -> QueryEmbedding {
    assert!(dim >= 1, "embedding dim must be positive");
    let mut values = vec![0.0; dim];
    for token in tokenize(text) {
        let (bucket, sign) = token_slot(&token, dim, seed);
        values[bucket] += sign;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    QueryEmbedding { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for TextEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_EMBED_DIM, seed: DEFAULT_EMBED_SEED }
    }
}

impl TextEmbedder {
    pub fn embed(&self, text: &str) -> QueryEmbedding {
        embed_text(text, self.dim, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn deterministic() {
        assert_eq!(embed_text("fried the meat", 64, 3), embed_text("fried the meat", 64, 3));
    }

    #[test]
    fn empty_is_zero() {
        let e = embed_text("", 16, 0);
        assert_eq!(e.dim(), 16);
        assert!(e.values().iter().all(|v| *v == 0.0));
        assert!(embed_text(" ?! ", 16, 0).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn repeated_token_is_parallel() {
        let a = embed_text("meat meat", 32, 0);
        let b = embed_text("meat", 32, 0);
        assert!((cosine(a.values(), b.values()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_norm_and_case_insensitive() {
        let a = embed_text("The Cooker, the PAN", 128, 1);
        let n: f64 = a.values().iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(a, embed_text("the cooker the pan", 128, 1));
    }

    #[test]
    fn seed_changes_layout() {
        let slots: Vec<_> = (0..8).map(|s| token_slot("cooker", 1 << 20, s)).collect();
        assert!(slots.windows(2).any(|w| w[0] != w[1]));
    }
}
