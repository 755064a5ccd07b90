//! Scene -> paths -> channel -> beam sweep -> labeled sample.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{beam_sweep, build_channel, ArrayConfig, ChannelConfig, Codebook};
use crate::dataset::{linear_to_dbm, Sample};
use crate::error::Result;
use crate::features::{encode, EncoderConfig};
use crate::raytracer::{trace, PathRecord, RaytraceConfig};
use crate::scene::{generate_scene, Scene, SceneConfig};

/// Everything needed to turn a seed into a labeled sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scene: SceneConfig,
    pub raytrace: RaytraceConfig,
    pub array: ArrayConfig,
    pub channel: ChannelConfig,
    pub encoder: EncoderConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.raytrace.validate()?;
        self.array.validate()?;
        self.channel.validate()?;
        self.encoder.validate()
    }
}

/// Per-sample seed; SplitMix64 finalizer over the base seed and index so
/// neighbouring samples get unrelated streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scene and traced paths for one sample.
pub fn trace_sample(cfg: &SimConfig, seed: u64) -> Result<(Scene, Vec<PathRecord>)> {
    let scene = generate_scene(&cfg.scene, seed)?;
    let paths = trace(&scene, &cfg.raytrace);
    Ok((scene, paths))
}

pub fn simulate_sample(cfg: &SimConfig, codebook: &Codebook<f64>, scene_id: u64, seed: u64) -> Result<Sample> {
    let (scene, paths) = trace_sample(cfg, seed)?;
    let h = build_channel::<f64>(&paths, &cfg.array, &cfg.channel);
    let label = beam_sweep(&h, codebook)?;
    Ok(Sample {
        scene_id,
        seed,
        features: encode(&scene, &cfg.encoder),
        y_dbm: label.y.iter().map(|&y| linear_to_dbm(y)).collect(),
        s: label.s,
    })
}

/// Simulates samples `ids` in parallel. Output order follows `ids` and does
/// not depend on the thread count.
pub fn simulate_range(cfg: &SimConfig, ids: Range<u64>, base_seed: u64) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let codebook = Codebook::dft(&cfg.array);
    ids.into_par_iter()
        .map(|id| simulate_sample(cfg, &codebook, id, derive_seed(base_seed, id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::OUTAGE_DBM;

    #[test]
    fn samples_are_well_formed() {
        let cfg = SimConfig::default();
        let samples = simulate_range(&cfg, 0..40, 1).unwrap();
        for s in &samples {
            assert_eq!(s.y_dbm.len(), 64);
            assert_eq!(s.features.len(), 18);
            assert!(s.y_dbm.iter().all(|v| v.is_finite() && *v >= OUTAGE_DBM));
            assert_eq!(crate::metrics::argmax(&s.y_dbm).unwrap() + 1, s.s);
        }
        assert_eq!(samples, simulate_range(&cfg, 0..40, 1).unwrap());
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
