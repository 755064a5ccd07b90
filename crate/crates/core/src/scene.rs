//! Random two-lane urban-canyon scenes.
//!
//! The canyon runs along x over `[-length/2, length/2]`. Building facades are
//! infinite vertical planes `y = const`. Vehicles are axis-aligned boxes
//! resting on the ground plane `z = 0`; the receiver antenna sits at the roof
//! center of one randomly chosen car.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    Truck,
    Car,
}

/// Lane index. Lane 1 is the one nearer the RSU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Lane {
    One,
    Two,
}

impl Lane {
    pub const BOTH: [Lane; 2] = [Lane::One, Lane::Two];

    pub fn index(self) -> usize {
        match self {
            Lane::One => 0,
            Lane::Two => 1,
        }
    }
}

impl From<Lane> for u8 {
    fn from(l: Lane) -> u8 {
        l.index() as u8 + 1
    }
}

impl TryFrom<u8> for Lane {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Lane::One),
            2 => Ok(Lane::Two),
            other => Err(format!("lane must be 1 or 2, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    pub length: f64,
    pub height: f64,
    pub width: f64,
}

impl VehicleDims {
    pub fn new(length: f64, height: f64, width: f64) -> Self {
        Self { length, height, width }
    }

    fn is_valid(&self) -> bool {
        [self.length, self.height, self.width]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub kind: VehicleKind,
    pub lane: Lane,
    /// Box center; `z` is half the height.
    pub center: Vec3,
    pub dims: VehicleDims,
}

impl Vehicle {
    /// Vehicle resting on the ground with its center at `(x, y)`.
    pub fn on_ground(kind: VehicleKind, lane: Lane, x: f64, y: f64, dims: VehicleDims) -> Self {
        Self {
            kind,
            lane,
            center: Vec3::new(x, y, dims.height / 2.0),
            dims,
        }
    }

    pub fn bounds(&self) -> Aabb<f64> {
        let half = Vec3::new(self.dims.length / 2.0, self.dims.width / 2.0, self.dims.height / 2.0);
        Aabb::from_center_half_extents(self.center, half)
    }

    /// Closed x-interval covered by the vehicle.
    pub fn x_span(&self) -> (f64, f64) {
        let h = self.dims.length / 2.0;
        (self.center.x - h, self.center.x + h)
    }
}

/// Infinite vertical reflecting plane `y = const`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub rsu: Vec3,
    pub receiver: Vehicle,
    pub vehicles: Vec<Vehicle>,
    pub walls: Vec<Wall>,
    /// Lane centerlines (lane 1, lane 2).
    pub lanes: [f64; 2],
    pub seed: u64,
}

impl Scene {
    pub fn lane_y(&self, lane: Lane) -> f64 {
        self.lanes[lane.index()]
    }

    /// Copy of the scene shifted in the horizontal plane.
    pub fn translated(&self, dx: f64, dy: f64) -> Scene {
        let shift = Vec3::new(dx, dy, 0.0);
        let mv = |v: &Vehicle| Vehicle { center: v.center + shift, ..*v };
        Scene {
            rsu: self.rsu + shift,
            receiver: mv(&self.receiver),
            vehicles: self.vehicles.iter().map(mv).collect(),
            walls: self.walls.iter().map(|w| Wall { y: w.y + dy }).collect(),
            lanes: [self.lanes[0] + dy, self.lanes[1] + dy],
            seed: self.seed,
        }
    }

    /// Copy of the scene with every coordinate and dimension multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Scene {
        let sv = |v: &Vehicle| Vehicle {
            center: v.center * k,
            dims: VehicleDims::new(v.dims.length * k, v.dims.height * k, v.dims.width * k),
            ..*v
        };
        Scene {
            rsu: self.rsu * k,
            receiver: sv(&self.receiver),
            vehicles: self.vehicles.iter().map(sv).collect(),
            walls: self.walls.iter().map(|w| Wall { y: w.y * k }).collect(),
            lanes: [self.lanes[0] * k, self.lanes[1] * k],
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Canyon length along x, meters.
    pub length: f64,
    pub lanes: [f64; 2],
    pub walls: [f64; 2],
    pub rsu: Vec3,
    pub truck: VehicleDims,
    pub car: VehicleDims,
    /// Vehicles per lane per 100 m.
    pub density: f64,
    pub truck_ratio: f64,
    /// Minimum bumper-to-bumper gap, meters.
    pub min_gap: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            length: 200.0,
            lanes: [6.0, 10.0],
            walls: [0.0, 20.0],
            rsu: Vec3::new(0.0, 1.0, 5.0),
            truck: VehicleDims::new(12.0, 3.5, 2.6),
            car: VehicleDims::new(5.0, 1.5, 1.9),
            density: 8.0,
            truck_ratio: 0.4,
            min_gap: 2.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad("canyon length must be positive");
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return bad("vehicle density must be positive");
        }
        if !(0.0..1.0).contains(&self.truck_ratio) {
            return bad("truck_ratio must be in [0, 1) so that a receiver car can exist");
        }
        if !(self.min_gap.is_finite() && self.min_gap >= 0.0) {
            return bad("min_gap must be non-negative");
        }
        if !self.truck.is_valid() || !self.car.is_valid() {
            return bad("vehicle dimensions must be positive");
        }
        if !self.rsu.is_finite() {
            return bad("rsu position must be finite");
        }
        let (lo, hi) = (self.walls[0].min(self.walls[1]), self.walls[0].max(self.walls[1]));
        let half_w = self.truck.width.max(self.car.width) / 2.0;
        for lane in self.lanes {
            if !(lane - half_w > lo && lane + half_w < hi) {
                return bad("lanes (including vehicle width) must lie strictly between the walls");
            }
        }
        Ok(())
    }

    fn dims(&self, kind: VehicleKind) -> VehicleDims {
        match kind {
            VehicleKind::Truck => self.truck,
            VehicleKind::Car => self.car,
        }
    }

    /// Drops vehicles along one lane as a renewal process: each vehicle is
    /// followed by `min_gap` plus an exponential gap sized so that the mean
    /// spacing matches the configured density.
    fn drop_lane<R: Rng>(&self, lane: Lane, rng: &mut R, out: &mut Vec<Vehicle>) {
        let spacing = 100.0 / self.density;
        let tr = self.truck_ratio;
        let mean_footprint = tr * self.truck.length + (1.0 - tr) * self.car.length + self.min_gap;
        let extra = (spacing - mean_footprint).max(0.0);
        let gap = (extra > 0.0).then(|| Exp::new(1.0 / extra).expect("positive rate"));

        let end = self.length / 2.0;
        let mut cursor = -end + rng.random::<f64>() * spacing;
        loop {
            let kind = if rng.random_bool(tr) {
                VehicleKind::Truck
            } else {
                VehicleKind::Car
            };
            let dims = self.dims(kind);
            if cursor + dims.length > end {
                break;
            }
            let y = self.lanes[lane.index()];
            out.push(Vehicle::on_ground(kind, lane, cursor + dims.length / 2.0, y, dims));
            cursor += dims.length + self.min_gap + gap.map_or(0.0, |g| g.sample(rng));
        }
    }
}

const MAX_ATTEMPTS: usize = 10_000;

/// Builds a random scene. Pure function of `(cfg, seed)`.
pub fn generate_scene(cfg: &SceneConfig, seed: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut vehicles = Vec::new();
        for lane in Lane::BOTH {
            cfg.drop_lane(lane, &mut rng, &mut vehicles);
        }
        let cars: Vec<usize> = vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VehicleKind::Car)
            .map(|(i, _)| i)
            .collect();
        if cars.is_empty() {
            continue;
        }
        let pick = cars[rng.random_range(0..cars.len())];
        let receiver = vehicles.remove(pick);
        return Ok(Scene {
            rsu: cfg.rsu,
            receiver,
            vehicles,
            walls: cfg.walls.iter().map(|&y| Wall { y }).collect(),
            lanes: cfg.lanes,
            seed,
        });
    }
    Err(Error::Config(format!(
        "no car generated after {MAX_ATTEMPTS} attempts; lower truck_ratio or raise density"
    )))
}

/// Receiver antenna position: roof center of the receiver car.
pub fn receiver_antenna(scene: &Scene) -> Vec3 {
    let rx = &scene.receiver;
    Vec3::new(rx.center.x, rx.center.y, rx.dims.height)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_vehicles(s: &Scene) -> Vec<Vehicle> {
        let mut v = s.vehicles.clone();
        v.push(s.receiver);
        v
    }

    #[test]
    fn deterministic() {
        let cfg = SceneConfig::default();
        assert_eq!(generate_scene(&cfg, 7).unwrap(), generate_scene(&cfg, 7).unwrap());
        assert_ne!(generate_scene(&cfg, 7).unwrap(), generate_scene(&cfg, 8).unwrap());
    }

    #[test]
    fn no_trucks_when_ratio_zero() {
        let cfg = SceneConfig { truck_ratio: 0.0, ..Default::default() };
        for seed in 0..50 {
            let s = generate_scene(&cfg, seed).unwrap();
            assert!(all_vehicles(&s).iter().all(|v| v.kind == VehicleKind::Car));
        }
    }

    #[test]
    fn lanes_outside_walls_rejected() {
        let cfg = SceneConfig { lanes: [6.0, 25.0], ..Default::default() };
        assert!(matches!(generate_scene(&cfg, 1), Err(Error::Config(_))));
        let cfg = SceneConfig { density: 0.0, ..Default::default() };
        assert!(generate_scene(&cfg, 1).is_err());
    }

    #[test]
    fn mean_count_matches_density() {
        let cfg = SceneConfig { density: 10.0, length: 200.0, ..Default::default() };
        let seeds = 1000;
        let mut total = 0usize;
        for seed in 0..seeds {
            total += all_vehicles(&generate_scene(&cfg, seed).unwrap()).len();
        }
        let per_lane = total as f64 / (2.0 * seeds as f64);
        assert!((per_lane - 20.0).abs() <= 0.15 * 20.0, "mean per lane {per_lane}");
    }

    #[test]
    fn truck_fraction_converges() {
        let cfg = SceneConfig::default();
        let (mut trucks, mut n) = (0usize, 0usize);
        for seed in 0..400 {
            let s = generate_scene(&cfg, seed).unwrap();
            for v in all_vehicles(&s) {
                n += 1;
                trucks += (v.kind == VehicleKind::Truck) as usize;
            }
        }
        // Vehicles that do not fit at the canyon end bias slightly toward
        // cars; the receiver draw is conditioned on at least one car.
        let p = cfg.truck_ratio;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let frac = trucks as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * sigma + 0.01, "truck fraction {frac}, n {n}");
    }

    #[test]
    fn antenna_on_roof() {
        let dims = VehicleDims::new(5.0, 1.5, 1.9);
        let mut scene = Scene {
            rsu: Vec3::new(0.0, 1.0, 5.0),
            receiver: Vehicle::on_ground(VehicleKind::Car, Lane::One, 0.0, 3.0, dims),
            vehicles: vec![],
            walls: vec![],
            lanes: [3.0, 7.0],
            seed: 0,
        };
        assert_eq!(scene.receiver.center, Vec3::new(0.0, 3.0, 0.75));
        assert_eq!(receiver_antenna(&scene), Vec3::new(0.0, 3.0, 1.5));
        scene.receiver.center.x += 5.0;
        assert_eq!(receiver_antenna(&scene).x, 5.0);
    }

    #[test]
    fn json_schema_fields() {
        let s = generate_scene(&SceneConfig::default(), 3).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in ["rsu", "receiver", "vehicles", "walls", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["receiver"]["lane"].is_u64());
        let back: Scene = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
