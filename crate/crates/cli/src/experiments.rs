//! Experiment drivers behind the CLI subcommands. Each returns typed rows so
//! tests can check them directly; `csv` renders them.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::{bail, Context};
use beampred::dataset::Dataset;
use beampred::features::{feature_length, GROUPS, MAX_AWARENESS};
use beampred::learn::{self, ClassifierSpec, RegressorKind, RegressorSpec, Target};
use beampred::metrics::{alignment_probability, db_to_linear, error_cdf, fraction_below, rmse, throughput_ratio};
use beampred::pipeline::{self, simulate_range};
use beampred::{CqiParams, MetricsReport, PathRecord, Quantization, Scene};
use serde::Serialize;

use crate::config::RunConfig;

/// Samples simulated between progress reports.
const CHUNK: u64 = 250;

pub fn generate(cfg: &RunConfig, progress: bool) -> anyhow::Result<Dataset> {
    cfg.validate()?;
    let n = cfg.run.n_samples as u64;
    if n == 0 {
        bail!("n_samples must be positive");
    }
    let sim = cfg.sim();
    let mut samples = Vec::with_capacity(n as usize);
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        samples.extend(simulate_range(&sim, start..end, cfg.run.seed)?);
        if progress {
            eprintln!("generated {end}/{n}");
        }
        start = end;
    }
    Ok(Dataset::new(sim, cfg.run.seed, samples))
}

#[derive(Debug, Serialize)]
pub struct DumpedScene {
    pub scene_id: u64,
    pub seed: u64,
    pub scene: Scene,
    pub paths: Vec<PathRecord>,
}

pub fn dump_paths(cfg: &RunConfig, scene_id: u64) -> anyhow::Result<DumpedScene> {
    let sim = cfg.sim();
    sim.validate()?;
    let seed = pipeline::derive_seed(cfg.run.seed, scene_id);
    let (scene, paths) = pipeline::trace_sample(&sim, seed)?;
    Ok(DumpedScene { scene_id, seed, scene, paths })
}

/// Train/test split of the non-outage samples.
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub n_outages: usize,
}

pub fn prepare(ds: &Dataset, cfg: &RunConfig) -> anyhow::Result<Prepared> {
    let kept = ds.without_outages();
    let n_outages = ds.len() - kept.len();
    if kept.len() < 4 {
        bail!("only {} non-outage samples; need at least 4", kept.len());
    }
    let (train, test) = kept.split(cfg.run.train_frac, cfg.run.seed)?;
    if train.len() < 2 || test.is_empty() {
        bail!("split left {} train and {} test samples", train.len(), test.len());
    }
    Ok(Prepared { train, test, n_outages })
}

fn features(ds: &Dataset, len: usize) -> Vec<Vec<f64>> {
    ds.samples.iter().map(|s| s.features.values[..len].to_vec()).collect()
}

fn full_len(ds: &Dataset) -> usize {
    feature_length(&ds.config.encoder)
}

fn strongest(ds: &Dataset, q: &Quantization) -> Vec<Vec<f64>> {
    ds.samples.iter().map(|s| vec![q.reconstruct(s.strongest_dbm())]).collect()
}

fn all_beams(ds: &Dataset, q: &Quantization) -> Vec<Vec<f64>> {
    ds.samples
        .iter()
        .map(|s| s.y_dbm.iter().map(|&p| q.reconstruct(p)).collect())
        .collect()
}

fn flatten(rows: Vec<Vec<f64>>) -> Vec<f64> {
    rows.into_iter().flatten().collect()
}

/// Linear SNR per beam for the throughput ratio.
fn snr(ds: &Dataset, noise_floor_dbm: f64) -> Vec<Vec<f64>> {
    ds.samples
        .iter()
        .map(|s| s.y_dbm.iter().map(|&p| db_to_linear(p - noise_floor_dbm)).collect())
        .collect()
}

fn strongest_rmse(prep: &Prepared, kind: RegressorKind, len: usize, q: &Quantization) -> anyhow::Result<(f64, Vec<f64>)> {
    let spec = RegressorSpec { kind, target: Target::StrongestBeam };
    let pred = flatten(learn::fit_predict(
        &spec,
        &features(&prep.train, len),
        &strongest(&prep.train, q),
        &features(&prep.test, len),
    )?);
    let truth = flatten(strongest(&prep.test, &Quantization::Off));
    Ok((rmse(&truth, &pred)?, error_cdf(&truth, &pred)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRow {
    pub model: String,
    pub rmse_db: f64,
}

/// Strongest-beam RMSE of OLS, random forest and gradient boosting.
pub fn table2(cfg: &RunConfig, prep: &Prepared) -> anyhow::Result<Vec<ModelRow>> {
    let len = full_len(&prep.train);
    [RegressorKind::Ols, RegressorKind::RandomForest(cfg.forest), RegressorKind::GradientBoosting(cfg.boosting)]
        .into_iter()
        .map(|kind| {
            let (rmse_db, _) = strongest_rmse(prep, kind, len, &Quantization::Off)?;
            Ok(ModelRow { model: kind.name().to_string(), rmse_db })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AwarenessMode {
    /// Whole vehicle groups: levels 1 to 5.
    Level,
    /// One vehicle slot at a time.
    Vehicle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AwarenessRow {
    /// Awareness level, or the number of vehicle slots in vehicle mode.
    pub step: usize,
    pub n_features: usize,
    pub rmse_db: f64,
}

/// Random-forest strongest-beam RMSE as location information is added.
pub fn awareness_sweep(cfg: &RunConfig, prep: &Prepared, mode: AwarenessMode) -> anyhow::Result<Vec<AwarenessRow>> {
    let per_group = prep.train.config.encoder.max_per_group;
    let full = full_len(&prep.train);
    let steps: Vec<(usize, usize)> = match mode {
        AwarenessMode::Level => (1..=MAX_AWARENESS).map(|l| (l, 2 + 2 * (l - 1) * per_group)).collect(),
        AwarenessMode::Vehicle => (0..=GROUPS.len() * per_group).map(|k| (k, 2 + 2 * k)).collect(),
    };
    if steps.iter().any(|&(_, len)| len > full) {
        bail!("dataset was encoded with fewer features ({full}) than the sweep needs");
    }
    steps
        .into_iter()
        .map(|(step, len)| {
            let (rmse_db, _) = strongest_rmse(prep, RegressorKind::RandomForest(cfg.forest), len, &Quantization::Off)?;
            Ok(AwarenessRow { step, n_features: len, rmse_db })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantRow {
    /// `None` for the unquantized baseline.
    pub cqi: Option<CqiParams>,
    pub rmse_db: f64,
    /// Fraction of test samples with error under 1 dB.
    pub frac_below_1db: f64,
    pub error_cdf: Vec<f64>,
    pub p_align: Option<f64>,
    pub r_throughput: Option<f64>,
}

fn sweep_grid(cfg: &RunConfig) -> anyhow::Result<Vec<Quantization>> {
    let mut grid = vec![Quantization::Off];
    for &u in &cfg.sweep.p_upper {
        for &l in &cfg.sweep.p_lower {
            for &r in &cfg.sweep.granularities {
                grid.push(Quantization::Cqi(CqiParams::new(u, l, r)?));
            }
        }
    }
    Ok(grid)
}

fn cqi_of(q: &Quantization) -> Option<CqiParams> {
    match q {
        Quantization::Off => None,
        Quantization::Cqi(c) => Some(*c),
    }
}

/// Random forest trained on reconstructed CQI labels, scored against the
/// unquantized powers. The first row is the unquantized baseline. With
/// `all_beams` one forest per beam pair is trained and the alignment and
/// throughput metrics are filled in.
pub fn quantization_sweep(cfg: &RunConfig, prep: &Prepared, all_beams_mode: bool) -> anyhow::Result<Vec<QuantRow>> {
    let len = full_len(&prep.train);
    let kind = RegressorKind::RandomForest(cfg.forest);
    sweep_grid(cfg)?
        .iter()
        .map(|q| {
            if all_beams_mode {
                let r = all_beam_regression(cfg, prep, q)?;
                Ok(QuantRow {
                    cqi: cqi_of(q),
                    rmse_db: r.rmse_db,
                    frac_below_1db: fraction_below(&r.error_cdf, 1.0),
                    error_cdf: r.error_cdf,
                    p_align: r.p_align,
                    r_throughput: r.r_throughput,
                })
            } else {
                let (rmse_db, cdf) = strongest_rmse(prep, kind, len, q)?;
                Ok(QuantRow {
                    cqi: cqi_of(q),
                    rmse_db,
                    frac_below_1db: fraction_below(&cdf, 1.0),
                    error_cdf: cdf,
                    p_align: None,
                    r_throughput: None,
                })
            }
        })
        .collect()
}

/// All-beam forest regression. The report's RMSE and error CDF are over the
/// predicted power of each test sample's true best beam.
pub fn all_beam_regression(cfg: &RunConfig, prep: &Prepared, q: &Quantization) -> anyhow::Result<MetricsReport> {
    let len = full_len(&prep.train);
    let spec = RegressorSpec { kind: RegressorKind::RandomForest(cfg.forest), target: Target::AllBeams };
    let pred = learn::fit_predict(
        &spec,
        &features(&prep.train, len),
        &all_beams(&prep.train, q),
        &features(&prep.test, len),
    )?;
    report_for(cfg, prep, &pred)
}

fn report_for(cfg: &RunConfig, prep: &Prepared, pred: &[Vec<f64>]) -> anyhow::Result<MetricsReport> {
    let truth = all_beams(&prep.test, &Quantization::Off);
    let best_true: Vec<f64> = prep.test.samples.iter().map(|s| s.strongest_dbm()).collect();
    let best_pred: Vec<f64> = prep.test.samples.iter().zip(pred).map(|(s, p)| p[s.s - 1]).collect();
    let noise = cfg.metrics.noise_floor_dbm;
    Ok(MetricsReport {
        rmse_db: rmse(&best_true, &best_pred)?,
        p_align: Some(alignment_probability(&truth, pred)?),
        r_throughput: Some(throughput_ratio(&snr(&prep.test, noise), pred)?),
        error_cdf: error_cdf(&best_true, &best_pred)?,
        m: truth[0].len(),
        noise_floor_dbm: noise,
    })
}

/// Random-forest classifier over the best beam index. Alignment and
/// throughput only; it predicts no powers.
pub fn classifier_baseline(cfg: &RunConfig, prep: &Prepared) -> anyhow::Result<(f64, f64)> {
    let len = full_len(&prep.train);
    let spec = ClassifierSpec { forest: cfg.classifier.forest, n_classes: prep.train.config.array.n_beams() };
    let labels: Vec<usize> = prep.train.samples.iter().map(|s| s.s).collect();
    let model = learn::fit_classifier(&spec, &features(&prep.train, len), &labels)?;
    let chosen = model.predict(&features(&prep.test, len))?;
    let one_hot: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&c| (1..=spec.n_classes).map(|k| if k == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let truth = all_beams(&prep.test, &Quantization::Off);
    let p_align = alignment_probability(&truth, &one_hot)?;
    let r_t = throughput_ratio(&snr(&prep.test, cfg.metrics.noise_floor_dbm), &one_hot)?;
    Ok((p_align, r_t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllBeamRow {
    pub model: String,
    pub cqi: Option<CqiParams>,
    pub p_align: f64,
    pub r_throughput: f64,
    /// Absent for the classifier.
    pub report: Option<MetricsReport>,
}

/// Classifier baseline, unquantized all-beam regression, and all-beam
/// regression on each configured CQI granularity.
pub fn eval_allbeams(cfg: &RunConfig, prep: &Prepared) -> anyhow::Result<Vec<AllBeamRow>> {
    let (p_align, r_throughput) = classifier_baseline(cfg, prep)?;
    let mut rows = vec![AllBeamRow { model: "classifier".into(), cqi: None, p_align, r_throughput, report: None }];
    let mut variants = vec![Quantization::Off];
    for &r in &cfg.cqi.granularities {
        variants.push(Quantization::Cqi(cfg.cqi.params(r)?));
    }
    for q in variants {
        let report = all_beam_regression(cfg, prep, &q)?;
        rows.push(AllBeamRow {
            model: "regression".into(),
            cqi: cqi_of(&q),
            p_align: report.p_align.unwrap_or(f64::NAN),
            r_throughput: report.r_throughput.unwrap_or(f64::NAN),
            report: Some(report),
        });
    }
    Ok(rows)
}

/// Distribution of the strongest-beam power, for picking CQI bounds.
pub fn power_summary(ds: &Dataset) -> Vec<(String, f64)> {
    let mut p: Vec<f64> = ds.without_outages().samples.iter().map(|s| s.strongest_dbm()).collect();
    p.sort_by(f64::total_cmp);
    if p.is_empty() {
        return Vec::new();
    }
    let q = |f: f64| p[((p.len() - 1) as f64 * f).round() as usize];
    vec![
        ("min".into(), p[0]),
        ("p01".into(), q(0.01)),
        ("p50".into(), q(0.5)),
        ("p99".into(), q(0.99)),
        ("max".into(), p[p.len() - 1]),
    ]
}

// ---- CSV rendering ----

fn header(out: &mut String, command: &str, cfg: &RunConfig, extra: &[(&str, String)]) {
    let _ = writeln!(out, "# beampred {command}");
    for (k, v) in extra {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "# config={}", cfg.snapshot());
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cqi_cols(c: &Option<CqiParams>) -> String {
    match c {
        Some(c) => format!("{},{},{}", c.p_upper, c.p_lower, c.granularity),
        None => ",,".into(),
    }
}

fn dataset_info(prep: &Prepared) -> Vec<(&'static str, String)> {
    vec![
        ("n_train", prep.train.len().to_string()),
        ("n_test", prep.test.len().to_string()),
        ("n_outages_dropped", prep.n_outages.to_string()),
    ]
}

pub fn table2_csv(cfg: &RunConfig, prep: &Prepared, rows: &[ModelRow]) -> String {
    let mut out = String::new();
    header(&mut out, "table2", cfg, &dataset_info(prep));
    out.push_str("model,rmse_db\n");
    for r in rows {
        let _ = writeln!(out, "{},{}", r.model, r.rmse_db);
    }
    out
}

pub fn awareness_csv(cfg: &RunConfig, prep: &Prepared, mode: AwarenessMode, rows: &[AwarenessRow]) -> String {
    let mut out = String::new();
    header(&mut out, "awareness-sweep", cfg, &dataset_info(prep));
    let step = match mode {
        AwarenessMode::Level => "awareness_level",
        AwarenessMode::Vehicle => "n_vehicles",
    };
    let _ = writeln!(out, "{step},n_features,rmse_db");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.step, r.n_features, r.rmse_db);
    }
    out
}

pub fn quant_csv(cfg: &RunConfig, prep: &Prepared, rows: &[QuantRow]) -> String {
    let mut out = String::new();
    header(&mut out, "quant-sweep", cfg, &dataset_info(prep));
    out.push_str("p_upper,p_lower,r_cqi,rmse_db,frac_below_1db,p_align,r_throughput\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            cqi_cols(&r.cqi),
            r.rmse_db,
            r.frac_below_1db,
            opt(r.p_align),
            opt(r.r_throughput)
        );
    }
    out
}

/// Long-format error CDF of every sweep row.
pub fn quant_cdf_csv(rows: &[QuantRow]) -> String {
    let mut out = String::from("p_upper,p_lower,r_cqi,abs_error_db,cdf\n");
    for r in rows {
        let n = r.error_cdf.len() as f64;
        for (i, e) in r.error_cdf.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", cqi_cols(&r.cqi), e, (i + 1) as f64 / n);
        }
    }
    out
}

pub fn allbeams_csv(cfg: &RunConfig, prep: &Prepared, rows: &[AllBeamRow]) -> String {
    let mut out = String::new();
    header(&mut out, "eval-allbeams", cfg, &dataset_info(prep));
    out.push_str("model,p_upper,p_lower,r_cqi,p_align,r_throughput,rmse_db\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.model,
            cqi_cols(&r.cqi),
            r.p_align,
            r.r_throughput,
            opt(r.report.as_ref().map(|m| m.rmse_db))
        );
    }
    out
}

pub fn write_output(path: Option<&std::path::Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
