//! Fixed-length location features `[r, t1, t2, c1, c2]` in the receiver frame.
//!
//! Each vehicle group (lane-1 trucks, lane-2 trucks, lane-1 cars, lane-2
//! cars) contributes exactly `max_per_group` `(x, y)` pairs, nearest first by
//! `|x|`. Missing vehicles are padded with virtual ones far down the road.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Lane, Scene, VehicleKind};

/// Vehicle groups in feature order.
pub const GROUPS: [(VehicleKind, Lane); 4] = [
    (VehicleKind::Truck, Lane::One),
    (VehicleKind::Truck, Lane::Two),
    (VehicleKind::Car, Lane::One),
    (VehicleKind::Car, Lane::Two),
];

const GROUP_NAMES: [&str; 4] = ["t1", "t2", "c1", "c2"];

pub const MAX_AWARENESS: usize = GROUPS.len() + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub max_per_group: usize,
    pub virtual_x: f64,
    /// 1 = RSU only, then one more group per level up to 5.
    pub awareness_level: usize,
    /// When set, keep the RSU plus only the first `k` vehicle slots of the
    /// full layout instead of whole groups.
    pub vehicle_prefix: Option<usize>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            max_per_group: 2,
            virtual_x: 1e4,
            awareness_level: MAX_AWARENESS,
            vehicle_prefix: None,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_per_group == 0 {
            return Err(Error::Config("max_per_group must be at least 1".into()));
        }
        if !(1..=MAX_AWARENESS).contains(&self.awareness_level) {
            return Err(Error::Config(format!("awareness_level must be in [1, {MAX_AWARENESS}]")));
        }
        Ok(())
    }

    fn vehicle_slots(&self) -> usize {
        let by_level = (self.awareness_level - 1) * self.max_per_group;
        match self.vehicle_prefix {
            Some(k) => k.min(GROUPS.len() * self.max_per_group),
            None => by_level,
        }
    }
}

/// Number of reals produced by [`encode`].
pub fn feature_length(cfg: &EncoderConfig) -> usize {
    2 + 2 * cfg.vehicle_slots()
}

/// Column names matching [`encode`] output.
pub fn feature_names(cfg: &EncoderConfig) -> Vec<String> {
    let mut names = vec!["r_x".to_string(), "r_y".to_string()];
    'outer: for group in GROUP_NAMES {
        for k in 0..cfg.max_per_group {
            if names.len() >= feature_length(cfg) {
                break 'outer;
            }
            names.push(format!("{group}_{k}_x"));
            names.push(format!("{group}_{k}_y"));
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First `len` entries; used to derive lower awareness levels from a
    /// full encoding.
    pub fn prefix(&self, len: usize) -> FeatureVector {
        FeatureVector { values: self.values[..len.min(self.values.len())].to_vec() }
    }
}

pub fn encode(scene: &Scene, cfg: &EncoderConfig) -> FeatureVector {
    let ox = scene.receiver.center.x;
    let oy = scene.receiver.center.y;
    let mut values = vec![scene.rsu.x - ox, scene.rsu.y - oy];
    for (kind, lane) in GROUPS {
        let mut xs: Vec<(f64, f64)> = scene
            .vehicles
            .iter()
            .filter(|v| v.kind == kind && v.lane == lane)
            .map(|v| (v.center.x - ox, v.center.y - oy))
            .collect();
        xs.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
        xs.truncate(cfg.max_per_group);
        let pad = (cfg.virtual_x, scene.lane_y(lane) - oy);
        xs.resize(cfg.max_per_group, pad);
        values.extend(xs.into_iter().flat_map(|(x, y)| [x, y]));
    }
    values.truncate(feature_length(cfg));
    FeatureVector { values }
}
