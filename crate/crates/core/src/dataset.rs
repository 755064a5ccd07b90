//! Labeled samples, label variants, splitting and JSONL/CSV persistence.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_names, FeatureVector};
use crate::pipeline::SimConfig;
use crate::quantizer::{CqiParams, Quantization};

pub const SCHEMA_VERSION: u32 = 1;

/// Stored in place of `10 log10(0)`.
pub const OUTAGE_DBM: f64 = -250.0;

/// Linear power in mW to dBm, floored at [`OUTAGE_DBM`].
pub fn linear_to_dbm(mw: f64) -> f64 {
    if mw > 0.0 {
        (10.0 * mw.log10()).max(OUTAGE_DBM)
    } else {
        OUTAGE_DBM
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub scene_id: u64,
    pub seed: u64,
    pub features: FeatureVector,
    /// Received power per beam pair, dBm.
    pub y_dbm: Vec<f64>,
    /// 1-based best beam pair.
    pub s: usize,
}

impl Sample {
    /// No beam pair received any power.
    pub fn is_outage(&self) -> bool {
        self.y_dbm.iter().all(|&v| v <= OUTAGE_DBM)
    }

    pub fn strongest_dbm(&self) -> f64 {
        self.y_dbm[self.s - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelKind {
    Original,
    Cqi(CqiParams<f64>),
    Reconstructed(CqiParams<f64>),
    OrderedTopM { m: usize, quant: Quantization<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValues {
    Power(Vec<f64>),
    Index(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVariant {
    pub kind: LabelKind,
    pub values: LabelValues,
}

impl LabelVariant {
    pub fn powers(&self) -> Option<&[f64]> {
        match &self.values {
            LabelValues::Power(v) => Some(v),
            LabelValues::Index(_) => None,
        }
    }
}

/// Beam powers in decreasing order; equal powers keep index order.
pub fn ordered_powers(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
}

pub fn make_label(sample: &Sample, kind: LabelKind) -> LabelVariant {
    let y = &sample.y_dbm;
    let values = match kind {
        LabelKind::Original => LabelValues::Power(y.clone()),
        LabelKind::Cqi(c) => LabelValues::Index(y.iter().map(|&p| c.quantize(p)).collect()),
        LabelKind::Reconstructed(c) => {
            LabelValues::Power(y.iter().map(|&p| c.dequantize(c.quantize(p))).collect())
        }
        LabelKind::OrderedTopM { m, quant } => LabelValues::Power(
            ordered_powers(y).into_iter().take(m).map(|p| quant.reconstruct(p)).collect(),
        ),
    };
    LabelVariant { kind, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub base_seed: u64,
    pub config: SimConfig,
    pub samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u32,
    base_seed: u64,
    n_samples: usize,
    config: SimConfig,
}

impl Dataset {
    pub fn new(config: SimConfig, base_seed: u64, samples: Vec<Sample>) -> Self {
        Self { schema_version: SCHEMA_VERSION, base_seed, config, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset { samples, ..self.clone() }
    }

    /// Drops samples where every beam is in outage.
    pub fn without_outages(&self) -> Dataset {
        self.with_samples(self.samples.iter().filter(|s| !s.is_outage()).cloned().collect())
    }

    /// Shuffled split into `(train, test)`; each part keeps the original
    /// sample order.
    pub fn split(&self, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if self.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if !(train_frac > 0.0 && train_frac < 1.0) {
            return Err(Error::Config(format!("train_frac must be in (0, 1), got {train_frac}")));
        }
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((n as f64 * train_frac).round() as usize).min(n);
        let (a, b) = idx.split_at(n_train);
        let pick = |part: &[usize]| {
            let mut part = part.to_vec();
            part.sort_unstable();
            self.with_samples(part.into_iter().map(|i| self.samples[i].clone()).collect())
        };
        Ok((pick(a), pick(b)))
    }

    fn validate_sample(&self, s: &Sample, feature_len: usize) -> std::result::Result<(), String> {
        let n_beams = self.config.array.n_beams();
        if s.y_dbm.len() != n_beams {
            return Err(format!("expected {n_beams} beam powers, got {}", s.y_dbm.len()));
        }
        if s.features.len() != feature_len {
            return Err(format!("expected {feature_len} features, got {}", s.features.len()));
        }
        if !(1..=n_beams).contains(&s.s) {
            return Err(format!("best beam index {} out of range", s.s));
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            schema_version: self.schema_version,
            base_seed: self.base_seed,
            n_samples: self.len(),
            config: self.config.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Dataset> {
        let mut lines = r.lines().enumerate();
        let schema = |line: usize, msg: String| Error::Schema { line, msg };
        let (_, first) = lines.next().ok_or_else(|| schema(1, "missing header".into()))?;
        let first = first?;
        let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| schema(1, e.to_string()))?;
        let version = raw.get("schema_version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(Error::Version { found: v as u32, expected: SCHEMA_VERSION }),
            None => return Err(schema(1, "header lacks schema_version".into())),
        }
        let header: Header = serde_json::from_value(raw).map_err(|e| schema(1, e.to_string()))?;
        let mut ds = Dataset::new(header.config, header.base_seed, Vec::with_capacity(header.n_samples));
        let feature_len = crate::features::feature_length(&ds.config.encoder);
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let sample: Sample = serde_json::from_str(&line).map_err(|e| schema(line_no, e.to_string()))?;
            ds.validate_sample(&sample, feature_len).map_err(|m| schema(line_no, m))?;
            ds.samples.push(sample);
        }
        if ds.len() != header.n_samples {
            return Err(schema(
                ds.len() + 2,
                format!("header announces {} samples, file holds {}", header.n_samples, ds.len()),
            ));
        }
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_jsonl(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }

    /// CSV with one column per feature and per beam pair.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut cols = vec!["scene_id".to_string(), "seed".into(), "s".into()];
        cols.extend(feature_names(&self.config.encoder));
        cols.extend((1..=self.config.array.n_beams()).map(|i| format!("y_{i}")));
        writeln!(w, "{}", cols.join(","))?;
        for s in &self.samples {
            let mut row = vec![s.scene_id.to_string(), s.seed.to_string(), s.s.to_string()];
            row.extend(s.features.values.iter().map(f64::to_string));
            row.extend(s.y_dbm.iter().map(f64::to_string));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn scene_ids(&self) -> HashSet<u64> {
        self.samples.iter().map(|s| s.scene_id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::simulate_range;

    fn sample(y: Vec<f64>) -> Sample {
        let s = crate::metrics::argmax(&y).unwrap() + 1;
        Sample { scene_id: 0, seed: 0, features: FeatureVector { values: vec![0.0, 1.0] }, y_dbm: y, s }
    }

    fn small() -> Dataset {
        let cfg = SimConfig::default();
        Dataset::new(cfg.clone(), 5, simulate_range(&cfg, 0..30, 5).unwrap())
    }

    #[test]
    fn strongest_beam_label() {
        let s = sample(vec![3.0, 1.0, 7.5, 2.0]);
        let l = make_label(&s, LabelKind::OrderedTopM { m: 1, quant: Quantization::Off });
        assert_eq!(l.powers().unwrap(), &[7.5]);
        let c = CqiParams::new(45.0, 0.0, 1.0).unwrap();
        let l = make_label(&s, LabelKind::OrderedTopM { m: 1, quant: Quantization::Cqi(c) });
        assert_eq!(l.powers().unwrap(), &[8.0]);
    }

    #[test]
    fn ordered_labels() {
        let s = sample(vec![4.0; 10]);
        let l = make_label(&s, LabelKind::OrderedTopM { m: 3, quant: Quantization::Off });
        assert_eq!(l.powers().unwrap(), &[4.0, 4.0, 4.0]);
        let mut y = vec![3.0, 1.0, 2.0];
        y.extend(vec![-5.0; 61]);
        let l = make_label(&sample(y), LabelKind::OrderedTopM { m: 2, quant: Quantization::Off });
        assert_eq!(l.powers().unwrap(), &[3.0, 2.0]);
    }

    #[test]
    fn cqi_and_reconstructed() {
        let s = sample(vec![-3.0, 0.5, 44.23, 60.0]);
        let c = CqiParams::new(45.0, 0.0, 1.0).unwrap();
        assert_eq!(make_label(&s, LabelKind::Cqi(c)).values, LabelValues::Index(vec![0, 1, 45, 45]));
        assert_eq!(
            make_label(&s, LabelKind::Reconstructed(c)).powers().unwrap(),
            &[0.0, 1.0, 45.0, 45.0]
        );
        assert_eq!(make_label(&s, LabelKind::Original).powers().unwrap(), &s.y_dbm[..]);
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let cfg = SimConfig::default();
        let samples: Vec<Sample> = (0..100)
            .map(|i| Sample { scene_id: i, ..sample(vec![0.0; 64]) })
            .collect();
        let ds = Dataset::new(cfg, 0, samples);
        let (a, b) = ds.split(0.8, 9).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        let (a2, b2) = ds.split(0.8, 9).unwrap();
        assert_eq!((&a, &b), (&a2, &b2));
        assert!(a.scene_ids().is_disjoint(&b.scene_ids()));
        let union: HashSet<u64> = a.scene_ids().union(&b.scene_ids()).copied().collect();
        assert_eq!(union, ds.scene_ids());
        assert!(Dataset::new(SimConfig::default(), 0, vec![]).split(0.8, 1).is_err());
        assert!(ds.split(1.0, 1).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let ds = small();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let back = Dataset::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, ds);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        ds.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let ds = small();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // drop the last full line
        let cut: Vec<&str> = text.lines().collect();
        let shorter = cut[..cut.len() - 1].join("\n");
        assert!(matches!(Dataset::read_jsonl(shorter.as_bytes()), Err(Error::Schema { .. })));
        // cut mid-line
        let half = &text[..text.len() / 2];
        match Dataset::read_jsonl(half.as_bytes()) {
            Err(Error::Schema { line, .. }) => assert!(line > 1),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let ds = small();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("\"schema_version\":1", "\"schema_version\":7", 1);
        assert!(matches!(
            Dataset::read_jsonl(text.as_bytes()),
            Err(Error::Version { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn csv_shape() {
        let ds = small();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 3 + 18 + 64);
        assert_eq!(header[3], "r_x");
        assert_eq!(header[84], "y_64");
        assert_eq!(lines.count(), ds.len());
    }

    #[test]
    fn outage_sentinel() {
        assert_eq!(linear_to_dbm(0.0), OUTAGE_DBM);
        assert_eq!(linear_to_dbm(1.0), 0.0);
        assert!((linear_to_dbm(1000.0) - 30.0).abs() < 1e-12);
    }
}
