//! Beam-power prediction for mmWave vehicle-to-infrastructure links from
//! vehicle locations.
//!
//! The pipeline: random urban-canyon [`scene`]s are traced with a first-order
//! image method ([`raytracer`]), turned into a wideband UPA channel and swept
//! with a DFT codebook ([`channel`]), labeled in dBm with optional CQI
//! quantization ([`quantizer`], [`dataset`]), encoded as ordered vehicle
//! locations ([`features`]) and learned with OLS, random forests or gradient
//! boosting ([`learn`]). [`metrics`] scores predictions.
//!
//! Numeric kernels are generic over [`Real`] (`f32`/`f64`); the aliases at
//! the crate root fix them to `f64`, which the scene and dataset code uses.

pub mod channel;
pub mod dataset;
pub mod error;
pub mod features;
pub mod geometry;
pub mod learn;
pub mod metrics;
pub mod pipeline;
pub mod quantizer;
pub mod raytracer;
pub mod real;
pub mod scene;

pub use error::{Error, Result};
pub use real::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type Aabb = geometry::Aabb<f64>;
pub type Codebook = channel::Codebook<f64>;
pub type ChannelTaps = channel::ChannelTaps<f64>;
pub type BeamPowerLabel = channel::BeamPowerLabel<f64>;
pub type CqiParams = quantizer::CqiParams<f64>;
pub type Quantization = quantizer::Quantization<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;
pub type TrainedModel = learn::TrainedModel<f64>;
pub type TrainedClassifier = learn::TrainedClassifier<f64>;

pub use dataset::{Dataset, LabelKind, Sample};
pub use features::{EncoderConfig, FeatureVector};
pub use pipeline::SimConfig;
pub use raytracer::{PathRecord, RaytraceConfig};
pub use scene::{Scene, SceneConfig};
