//! First-order image-method tracer.
//!
//! Candidate paths are the direct path plus one specular bounce off each wall
//! plane, the ground plane (optional) and the two long side faces of every
//! truck. A candidate survives if its specular point lies on the reflecting
//! face and no vehicle box (other than the receiver's own box and the
//! reflector) touches either leg.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::scene::{receiver_antenna, Scene, Vehicle, VehicleKind};
use crate::Vec3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// What a path bounced off, if anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "index", rename_all = "lowercase")]
pub enum Interaction {
    Los,
    Wall(usize),
    Ground,
    /// Index into `Scene::vehicles`.
    Truck(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Complex amplitude; `|gain|^2` is received power in mW.
    pub gain: Complex64,
    pub via: Interaction,
}

impl PathRecord {
    pub fn power_dbm(&self) -> f64 {
        20.0 * self.gain.norm().log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RaytraceConfig {
    pub carrier_freq: f64,
    pub max_paths: usize,
    pub reflection_loss_db: f64,
    pub include_ground: bool,
    pub tx_power_dbm: f64,
}

impl Default for RaytraceConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 28e9,
            max_paths: 10,
            reflection_loss_db: 6.0,
            include_ground: true,
            tx_power_dbm: 30.0,
        }
    }
}

impl RaytraceConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.max_paths == 0 {
            return Err(crate::Error::Config("max_paths must be at least 1".into()));
        }
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0) {
            return Err(crate::Error::Config("carrier_freq must be positive".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }
}

/// Free-space path loss `20 log10(4 pi d / lambda)` in dB.
pub fn free_space_path_loss_db(distance: f64, carrier_freq: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / carrier_freq;
    20.0 * (4.0 * std::f64::consts::PI * distance / lambda).log10()
}

/// True iff the closed segment touches the vehicle's closed box.
pub fn segment_hits_box(p0: Vec3, p1: Vec3, vehicle: &Vehicle) -> bool {
    vehicle.bounds().intersects_segment(p0, p1)
}

fn occluded(scene: &Scene, p0: Vec3, p1: Vec3, skip: Option<usize>) -> bool {
    scene
        .vehicles
        .iter()
        .enumerate()
        .any(|(i, v)| Some(i) != skip && segment_hits_box(p0, p1, v))
}

/// A reflecting plane `normal_axis = offset`, bounded by `face` on the two
/// other axes when finite.
struct Reflector {
    axis: usize,
    offset: f64,
    /// (axis, lo, hi) limits the specular point must satisfy.
    limits: Vec<(usize, f64, f64)>,
    via: Interaction,
    skip: Option<usize>,
}

fn set_component(mut v: Vec3, axis: usize, value: f64) -> Vec3 {
    match axis {
        0 => v.x = value,
        1 => v.y = value,
        _ => v.z = value,
    }
    v
}

impl Reflector {
    fn specular_point(&self, tx: Vec3, rx: Vec3) -> Option<Vec3> {
        let side_tx = tx.component(self.axis) - self.offset;
        let side_rx = rx.component(self.axis) - self.offset;
        // both ends strictly on the same side
        if side_tx * side_rx <= 0.0 {
            return None;
        }
        let image = set_component(tx, self.axis, 2.0 * self.offset - tx.component(self.axis));
        let denom = rx.component(self.axis) - image.component(self.axis);
        let t = (self.offset - image.component(self.axis)) / denom;
        let p = image + (rx - image) * t;
        let p = set_component(p, self.axis, self.offset);
        let on_face = self
            .limits
            .iter()
            .all(|&(a, lo, hi)| p.component(a) >= lo && p.component(a) <= hi);
        on_face.then_some(p)
    }
}

fn reflectors(scene: &Scene, cfg: &RaytraceConfig) -> Vec<Reflector> {
    let mut out: Vec<Reflector> = scene
        .walls
        .iter()
        .enumerate()
        .map(|(i, w)| Reflector {
            axis: 1,
            offset: w.y,
            limits: vec![(2, 0.0, f64::INFINITY)],
            via: Interaction::Wall(i),
            skip: None,
        })
        .collect();
    if cfg.include_ground {
        out.push(Reflector {
            axis: 2,
            offset: 0.0,
            limits: vec![],
            via: Interaction::Ground,
            skip: None,
        });
    }
    for (i, v) in scene.vehicles.iter().enumerate() {
        if v.kind != VehicleKind::Truck {
            continue;
        }
        let b = v.bounds();
        for y in [b.min.y, b.max.y] {
            out.push(Reflector {
                axis: 1,
                offset: y,
                limits: vec![(0, b.min.x, b.max.x), (2, b.min.z, b.max.z)],
                via: Interaction::Truck(i),
                skip: Some(i),
            });
        }
    }
    out
}

fn make_path(cfg: &RaytraceConfig, tx: Vec3, rx: Vec3, bounce: Option<Vec3>, via: Interaction) -> PathRecord {
    let (first, last, length) = match bounce {
        None => (rx, tx, tx.distance(rx)),
        Some(p) => (p, p, tx.distance(p) + p.distance(rx)),
    };
    let bounces = bounce.is_some() as i32;
    let lambda = cfg.wavelength();
    let amplitude = 10f64.powf(cfg.tx_power_dbm / 20.0)
        * lambda
        / (4.0 * std::f64::consts::PI * length)
        * 10f64.powf(-cfg.reflection_loss_db * bounces as f64 / 20.0);
    let delay = length / SPEED_OF_LIGHT;
    let phase = -2.0 * std::f64::consts::PI * (cfg.carrier_freq * delay).fract();
    let depart = first - tx;
    let arrive = last - rx;
    PathRecord {
        aoa_az: arrive.azimuth(),
        aoa_el: arrive.elevation(),
        aod_az: depart.azimuth(),
        aod_el: depart.elevation(),
        delay,
        gain: Complex64::from_polar(amplitude, phase),
        via,
    }
}

/// Traces the scene and returns at most `cfg.max_paths` paths, strongest
/// first. An empty list means outage.
pub fn trace(scene: &Scene, cfg: &RaytraceConfig) -> Vec<PathRecord> {
    let tx = scene.rsu;
    let rx = receiver_antenna(scene);
    let mut paths = Vec::new();
    if !occluded(scene, tx, rx, None) {
        paths.push(make_path(cfg, tx, rx, None, Interaction::Los));
    }
    for r in reflectors(scene, cfg) {
        let Some(p) = r.specular_point(tx, rx) else {
            continue;
        };
        if occluded(scene, tx, p, r.skip) || occluded(scene, p, rx, r.skip) {
            continue;
        }
        paths.push(make_path(cfg, tx, rx, Some(p), r.via));
    }
    paths.sort_by(|a, b| b.gain.norm().total_cmp(&a.gain.norm()));
    paths.truncate(cfg.max_paths);
    paths
}
