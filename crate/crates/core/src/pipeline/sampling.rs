//! Sampling lists for mixed original/diffused training sets.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceWeight {
    /// Dataset tree the image is drawn from, e.g. `original` or `P_mild/2896`.
    pub source: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub path: String,
    pub source: String,
}

/// 80% original images, 5% from each of four diffused variants.
pub fn random_eed_sources() -> Vec<SourceWeight> {
    [
        ("original", 0.80),
        ("P_mild/2896", 0.05),
        ("P_mild/8192", 0.05),
        ("P_strong/1024", 0.05),
        ("P_strong/5792", 0.05),
    ]
    .into_iter()
    .map(|(source, weight)| SourceWeight {
        source: source.into(),
        weight,
    })
    .collect()
}

/// Draws one source per path, reproducibly for a given seed.
pub fn sampling_list(paths: &[String], sources: &[SourceWeight], seed: u64) -> Result<Vec<SampleEntry>> {
    if sources.iter().any(|s| !(s.weight.is_finite() && s.weight >= 0.0)) {
        return Err(Error::param("weights", "weights must be finite and non-negative"));
    }
    let dist = WeightedIndex::new(sources.iter().map(|s| s.weight))
        .map_err(|e| Error::param("weights", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(paths
        .iter()
        .map(|p| SampleEntry {
            path: p.clone(),
            source: sources[dist.sample(&mut rng)].source.clone(),
        })
        .collect())
}
