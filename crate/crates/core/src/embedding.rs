//! Packed binary embeddings `h ∈ {0,1}^m`.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// An `m`-bit binary embedding, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding {
    len: usize,
    words: Vec<u64>,
}

impl Embedding {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Builds an embedding from booleans.
    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { len, words }
    }

    /// Builds an embedding from 0/1 values; `None` if any value is not 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Option<Self> {
        if bits.iter().any(|&b| b > 1) {
            return None;
        }
        Some(Self::from_bools(bits.iter().map(|&b| b == 1)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit index {j} out of range {}", self.len);
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j < self.len, "bit index {j} out of range {}", self.len);
        if value {
            self.words[j / 64] |= 1 << (j % 64);
        } else {
            self.words[j / 64] &= !(1 << (j % 64));
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Raw inner product `hᵀh'` (number of shared ones).
    #[inline]
    pub fn dot(&self, other: &Embedding) -> u32 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Normalised inner product `h̃ᵀh̃' = hᵀh' / m`.
    #[inline]
    pub fn similarity(&self, other: &Embedding) -> f64 {
        if self.len == 0 {
            return 0.0;
        }
        f64::from(self.dot(other)) / self.len as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    /// Normalised real vector `h / √m`.
    pub fn normalized(&self) -> Vec<f64> {
        let scale = if self.len == 0 {
            0.0
        } else {
            1.0 / (self.len as f64).sqrt()
        };
        self.iter().map(|b| if b { scale } else { 0.0 }).collect()
    }
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        write!(f, "Embedding({s})")
    }
}

impl Serialize for Embedding {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_bits().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(deserializer)?;
        Embedding::from_bits(&bits).ok_or_else(|| de::Error::custom("embedding bits must be 0 or 1"))
    }
}
