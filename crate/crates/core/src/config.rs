//! Run configuration, read from TOML.
//!
//! ```toml
//! k = 8
//! max_steps = 50000000
//! hash_constant = 157
//!
//! [heap]
//! permutation = "seeded"
//! seed = 1
//! algorithm = "chacha8-fy-v1"
//! sections = [{ block_words = 1, count = 16 }, { block_words = 4, count = 8 }]
//! ```

use serde::{Deserialize, Serialize};

use crate::boson::{Heap, HeapError, PermutationSource, SectionSpec, PRNG_ALGORITHM};
use crate::interp::RunOptions;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("word size {0} is outside 4..=16")]
    WordSize(u32),
    #[error("unknown permutation algorithm `{0}`")]
    Algorithm(String),
    #[error("seeded permutation needs a `seed`")]
    MissingSeed,
    #[error(transparent)]
    Heap(#[from] HeapError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermutationKind {
    #[default]
    Identity,
    Seeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeapConfig {
    pub sections: Vec<SectionSpec>,
    pub permutation: PermutationKind,
    pub seed: Option<u64>,
    pub algorithm: String,
}

impl Default for HeapConfig {
    fn default() -> Self {
        HeapConfig {
            sections: vec![SectionSpec { block_words: 1, count: 16 }, SectionSpec { block_words: 4, count: 8 }],
            permutation: PermutationKind::Identity,
            seed: None,
            algorithm: PRNG_ALGORITHM.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub k: u32,
    pub max_steps: u64,
    /// Odd multiplier of the hash-table set's bucket function.
    pub hash_constant: u64,
    pub heap: HeapConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config { k: 8, max_steps: 50_000_000, hash_constant: 157, heap: HeapConfig::default() }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Config, ConfigError> {
        Config::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(4..=16).contains(&self.k) {
            return Err(ConfigError::WordSize(self.k));
        }
        if self.heap.algorithm != PRNG_ALGORITHM {
            return Err(ConfigError::Algorithm(self.heap.algorithm.clone()));
        }
        self.permutation_source()?;
        Ok(())
    }

    pub fn permutation_source(&self) -> Result<PermutationSource, ConfigError> {
        match self.heap.permutation {
            PermutationKind::Identity => Ok(PermutationSource::Identity),
            PermutationKind::Seeded => self.heap.seed.map(PermutationSource::Seeded).ok_or(ConfigError::MissingSeed),
        }
    }

    pub fn heap(&self) -> Result<Heap, ConfigError> {
        Ok(Heap::new(self.k, &self.heap.sections, &self.permutation_source()?)?)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { k: self.k, max_steps: self.max_steps, check_validity: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_layout() {
        let c = Config::default();
        assert_eq!(c.k, 8);
        assert_eq!(c.heap().unwrap().total_blocks(), 24);
    }

    #[test]
    fn parses_seeded_heap() {
        let c = Config::from_toml("k = 6\n[heap]\npermutation = \"seeded\"\nseed = 3\n").unwrap();
        assert_eq!(c.permutation_source().unwrap(), PermutationSource::Seeded(3));
        assert!(Config::from_toml("[heap]\npermutation = \"seeded\"\n").is_err());
        assert!(Config::from_toml("k = 40").is_err());
        assert!(Config::from_toml("[heap]\nalgorithm = \"mt\"\n").is_err());
    }
}
