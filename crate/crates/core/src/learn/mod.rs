//! Regressors and the beam-index classifier.
//!
//! All learners work on row-major feature matrices (`&[Vec<T>]`). Multi-output
//! targets are fitted as independent single-output models sharing one set of
//! hyperparameters.

pub mod boosting;
pub mod forest;
pub mod ols;
pub mod tree;

use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

pub use boosting::{BoostParams, Boosted};
pub use forest::{Forest, ForestParams};
pub use ols::LinearModel;
pub use tree::{Node, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RegressorKind {
    Ols,
    RandomForest(ForestParams),
    GradientBoosting(BoostParams),
}

impl RegressorKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegressorKind::Ols => "ols",
            RegressorKind::RandomForest(_) => "random_forest",
            RegressorKind::GradientBoosting(_) => "gradient_boosting",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RegressorKind::Ols => Ok(()),
            RegressorKind::RandomForest(p) => p.validate(),
            RegressorKind::GradientBoosting(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// One output: the strongest beam power.
    StrongestBeam,
    /// One output per beam pair.
    AllBeams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "model", rename_all = "snake_case")]
pub enum OutputModel<T> {
    Linear(LinearModel<T>),
    Forest(Forest<T>),
    Boosted(Boosted<T>),
}

impl<T: Real> OutputModel<T> {
    pub fn predict(&self, x: &[T]) -> T {
        match self {
            OutputModel::Linear(m) => m.predict(x),
            OutputModel::Forest(f) => f.predict_mean(x),
            OutputModel::Boosted(b) => b.predict(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainedModel<T> {
    pub spec: RegressorSpec,
    pub feature_len: usize,
    pub target_dim: usize,
    pub outputs: Vec<OutputModel<T>>,
}

fn check_features<T>(x: &[Vec<T>], feature_len: usize) -> Result<()> {
    match x.iter().find(|r| r.len() != feature_len) {
        Some(r) => Err(Error::Dimension { expected: feature_len, got: r.len() }),
        None => Ok(()),
    }
}

fn check_training<T: Real>(x: &[Vec<T>], n_targets: usize) -> Result<usize> {
    if x.len() != n_targets {
        return Err(Error::Dimension { expected: x.len(), got: n_targets });
    }
    if x.len() < 2 {
        return Err(Error::Empty("training needs at least two samples"));
    }
    let d = x[0].len();
    check_features(x, d)?;
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite feature value".into()));
    }
    Ok(d)
}

fn fit_output<T: Real>(kind: &RegressorKind, x: &[Vec<T>], cols: &[Vec<T>], y: &[T]) -> OutputModel<T> {
    match kind {
        RegressorKind::Ols => OutputModel::Linear(ols::fit_ols(x, y)),
        RegressorKind::RandomForest(p) => {
            OutputModel::Forest(forest::grow_forest(cols, y, p, tree::Impurity::Variance))
        }
        RegressorKind::GradientBoosting(p) => OutputModel::Boosted(boosting::fit_boosted(x, cols, y, p)),
    }
}

fn target_column<T: Real>(y: &[Vec<T>], j: usize) -> Vec<T> {
    y.iter().map(|r| r[j]).collect()
}

fn check_targets<T: Real>(spec: &RegressorSpec, y: &[Vec<T>]) -> Result<usize> {
    let dim = y.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::Empty("target rows"));
    }
    if spec.target == Target::StrongestBeam && dim != 1 {
        return Err(Error::Dimension { expected: 1, got: dim });
    }
    if let Some(r) = y.iter().find(|r| r.len() != dim) {
        return Err(Error::Dimension { expected: dim, got: r.len() });
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite target value".into()));
    }
    Ok(dim)
}

/// Fits one model per target column. Deterministic for a fixed spec.
pub fn fit<T: Real>(spec: &RegressorSpec, x: &[Vec<T>], y: &[Vec<T>]) -> Result<TrainedModel<T>> {
    spec.kind.validate()?;
    let feature_len = check_training(x, y.len())?;
    let target_dim = check_targets(spec, y)?;
    let cols = tree::columns(x);
    let outputs = (0..target_dim)
        .into_par_iter()
        .map(|j| fit_output(&spec.kind, x, &cols, &target_column(y, j)))
        .collect();
    Ok(TrainedModel { spec: *spec, feature_len, target_dim, outputs })
}

/// Fits and predicts one output at a time, so only one output's model is
/// alive per worker. Same predictions as `fit(..)?.predict(x_test)`.
pub fn fit_predict<T: Real>(spec: &RegressorSpec, x: &[Vec<T>], y: &[Vec<T>], x_test: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    spec.kind.validate()?;
    let feature_len = check_training(x, y.len())?;
    let target_dim = check_targets(spec, y)?;
    check_features(x_test, feature_len)?;
    let cols = tree::columns(x);
    let per_output: Vec<Vec<T>> = (0..target_dim)
        .into_par_iter()
        .map(|j| {
            let model = fit_output(&spec.kind, x, &cols, &target_column(y, j));
            x_test.iter().map(|row| model.predict(row)).collect()
        })
        .collect();
    Ok((0..x_test.len()).map(|i| per_output.iter().map(|c| c[i]).collect()).collect())
}

impl<T: Real> TrainedModel<T> {
    pub fn predict(&self, x: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        check_features(x, self.feature_len)?;
        Ok(x.iter()
            .map(|row| self.outputs.iter().map(|m| m.predict(row)).collect())
            .collect())
    }

    pub fn predict_one(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.feature_len {
            return Err(Error::Dimension { expected: self.feature_len, got: x.len() });
        }
        Ok(self.outputs.iter().map(|m| m.predict(x)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSpec {
    pub forest: ForestParams,
    pub n_classes: usize,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self { forest: ForestParams::default(), n_classes: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainedClassifier<T> {
    pub spec: ClassifierSpec,
    pub feature_len: usize,
    pub forest: Forest<T>,
}

/// Random-forest classifier over 1-based class labels in `1..=n_classes`.
pub fn fit_classifier<T: Real>(spec: &ClassifierSpec, x: &[Vec<T>], labels: &[usize]) -> Result<TrainedClassifier<T>> {
    spec.forest.validate()?;
    let feature_len = check_training(x, labels.len())?;
    if let Some(&bad) = labels.iter().find(|&&c| c == 0 || c > spec.n_classes) {
        return Err(Error::Config(format!("class label {bad} outside 1..={}", spec.n_classes)));
    }
    let y: Vec<T> = labels.iter().map(|&c| T::from_count(c - 1)).collect();
    let cols = tree::columns(x);
    let impurity = tree::Impurity::Gini { n_classes: spec.n_classes };
    let forest = forest::grow_forest(&cols, &y, &spec.forest, impurity);
    Ok(TrainedClassifier { spec: *spec, feature_len, forest })
}

impl<T: Real> TrainedClassifier<T> {
    /// Predicted 1-based labels.
    pub fn predict(&self, x: &[Vec<T>]) -> Result<Vec<usize>> {
        check_features(x, self.feature_len)?;
        Ok(x.iter().map(|row| self.forest.predict_vote(row, self.spec.n_classes) + 1).collect())
    }
}

pub fn save_json<M: Serialize>(model: &M, path: impl AsRef<Path>) -> Result<()> {
    let w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(w, model)?;
    Ok(())
}

pub fn load_json<M: DeserializeOwned>(path: impl AsRef<Path>) -> Result<M> {
    let r = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_x(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
    }

    fn single(y: &[f64]) -> Vec<Vec<f64>> {
        y.iter().map(|&v| vec![v]).collect()
    }

    fn spec(kind: RegressorKind) -> RegressorSpec {
        RegressorSpec { kind, target: Target::StrongestBeam }
    }

    fn nonlinear(x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| r[0].sin() * 3.0 + r[1] * r[1] - r[2]).collect()
    }

    #[test]
    fn ols_line() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.37 - 4.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = fit(&spec(RegressorKind::Ols), &x, &single(&y)).unwrap();
        let OutputModel::Linear(lm) = &m.outputs[0] else { panic!() };
        assert!((lm.coefficients[0] - 2.0).abs() < 1e-8);
        assert!((lm.intercept - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ols_normal_equations() {
        let x = random_x(200, 4, 1);
        let y = nonlinear(&x);
        let m = fit(&spec(RegressorKind::Ols), &x, &single(&y)).unwrap();
        let pred = m.predict(&x).unwrap();
        for j in 0..4 {
            let dot: f64 = x.iter().zip(&y).zip(&pred).map(|((r, yi), p)| r[j] * (yi - p[0])).sum();
            assert!(dot.abs() < 1e-6, "column {j}: {dot}");
        }
        let resid_sum: f64 = y.iter().zip(&pred).map(|(a, p)| a - p[0]).sum();
        assert!(resid_sum.abs() < 1e-6);
    }

    #[test]
    fn single_cart_memorizes() {
        let x = random_x(50, 3, 2);
        let y = nonlinear(&x);
        let params = ForestParams { n_trees: 1, min_leaf: 1, feature_frac: 1.0, bootstrap: false, ..Default::default() };
        let m = fit(&spec(RegressorKind::RandomForest(params)), &x, &single(&y)).unwrap();
        let pred = m.predict(&x).unwrap();
        let rmse = crate::metrics::rmse(&y, &pred.iter().map(|p| p[0]).collect::<Vec<_>>()).unwrap();
        assert_eq!(rmse, 0.0);
    }

    #[test]
    fn one_stage_boosting_is_cart() {
        let x = random_x(80, 3, 3);
        let y = nonlinear(&x);
        let boost = BoostParams { n_trees: 1, max_depth: None, learning_rate: 1.0, min_leaf: 1, ..Default::default() };
        let cart = ForestParams { n_trees: 1, min_leaf: 1, feature_frac: 1.0, bootstrap: false, ..Default::default() };
        let gb = fit(&spec(RegressorKind::GradientBoosting(boost)), &x, &single(&y)).unwrap();
        let rf = fit(&spec(RegressorKind::RandomForest(cart)), &x, &single(&y)).unwrap();
        let (OutputModel::Boosted(b), OutputModel::Forest(f)) = (&gb.outputs[0], &rf.outputs[0]) else { panic!() };
        assert!(b.stages[0].same_structure(&f.trees[0]));
        let probe = random_x(200, 3, 4);
        for row in probe.iter().chain(&x) {
            let (p, q) = (b.predict(row), f.predict_mean(row));
            assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0));
        }
    }

    #[test]
    fn forest_is_mean_of_trees_and_bounded() {
        let x = random_x(120, 4, 5);
        let y = nonlinear(&x);
        let params = ForestParams { n_trees: 15, seed: 9, ..Default::default() };
        let m = fit(&spec(RegressorKind::RandomForest(params)), &x, &single(&y)).unwrap();
        let OutputModel::Forest(f) = &m.outputs[0] else { panic!() };
        let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        for row in random_x(50, 4, 6) {
            let trees = f.tree_predictions(&row);
            let mean = trees.iter().sum::<f64>() / trees.len() as f64;
            let p = m.predict_one(&row).unwrap()[0];
            assert_eq!(p, mean);
            assert!(p >= lo && p <= hi);
        }
    }

    #[test]
    fn deterministic_fits() {
        let x = random_x(100, 4, 7);
        let y = nonlinear(&x);
        for kind in [
            RegressorKind::RandomForest(ForestParams { n_trees: 10, seed: 3, ..Default::default() }),
            RegressorKind::GradientBoosting(BoostParams { n_trees: 20, subsample: 0.7, seed: 3, ..Default::default() }),
        ] {
            let a = fit(&spec(kind), &x, &single(&y)).unwrap();
            let b = fit(&spec(kind), &x, &single(&y)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn constant_target() {
        let x = random_x(40, 3, 8);
        let y = vec![-42.5; 40];
        for kind in [
            RegressorKind::Ols,
            RegressorKind::RandomForest(ForestParams { n_trees: 5, ..Default::default() }),
            RegressorKind::GradientBoosting(BoostParams { n_trees: 5, ..Default::default() }),
        ] {
            let m = fit(&spec(kind), &x, &single(&y)).unwrap();
            for row in random_x(10, 3, 9) {
                assert!((m.predict_one(&row).unwrap()[0] + 42.5).abs() < 1e-9, "{}", kind.name());
            }
        }
    }

    #[test]
    fn boosting_reduces_training_error() {
        let x = random_x(150, 3, 10);
        let y = nonlinear(&x);
        let fit_rmse = |n_trees| {
            let p = BoostParams { n_trees, ..Default::default() };
            let m = fit(&spec(RegressorKind::GradientBoosting(p)), &x, &single(&y)).unwrap();
            let pred: Vec<f64> = m.predict(&x).unwrap().into_iter().map(|r| r[0]).collect();
            crate::metrics::rmse(&y, &pred).unwrap()
        };
        assert!(fit_rmse(50) < fit_rmse(5));
    }

    #[test]
    fn rejects_bad_shapes() {
        let x = random_x(10, 3, 11);
        let y = single(&[1.0; 10]);
        let m = fit(&spec(RegressorKind::Ols), &x, &y).unwrap();
        assert!(matches!(m.predict(&[vec![1.0, 2.0]]), Err(Error::Dimension { expected: 3, got: 2 })));
        assert!(fit(&spec(RegressorKind::Ols), &x[..1], &y[..1]).is_err());
        assert!(fit(&spec(RegressorKind::Ols), &x, &y[..5]).is_err());
        let multi: Vec<Vec<f64>> = (0..10).map(|_| vec![1.0, 2.0]).collect();
        assert!(fit(&spec(RegressorKind::Ols), &x, &multi).is_err());
    }

    #[test]
    fn multi_output_and_fit_predict_agree() {
        let x = random_x(60, 3, 12);
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0], r[1] * 2.0, r[2] - r[0]]).collect();
        let s = RegressorSpec {
            kind: RegressorKind::RandomForest(ForestParams { n_trees: 8, ..Default::default() }),
            target: Target::AllBeams,
        };
        let probe = random_x(20, 3, 13);
        let m = fit(&s, &x, &y).unwrap();
        assert_eq!(m.target_dim, 3);
        assert_eq!(m.predict(&probe).unwrap(), fit_predict(&s, &x, &y, &probe).unwrap());
    }

    #[test]
    fn classifier_learns_regions() {
        let x = random_x(300, 2, 14);
        let labels: Vec<usize> = x.iter().map(|r| if r[0] > 0.0 { 3 } else { 17 }).collect();
        let spec = ClassifierSpec { forest: ForestParams { n_trees: 10, ..Default::default() }, n_classes: 64 };
        let c = fit_classifier(&spec, &x, &labels).unwrap();
        let pred = c.predict(&x).unwrap();
        let acc = pred.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / 300.0;
        assert!(acc > 0.95);
        assert!(pred.iter().all(|p| (1..=64).contains(p)));
        assert!(fit_classifier(&spec, &x, &vec![0; 300]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = random_x(40, 3, 15);
        let y = nonlinear(&x);
        let m = fit(&spec(RegressorKind::RandomForest(ForestParams { n_trees: 3, ..Default::default() })), &x, &single(&y)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_json(&m, &path).unwrap();
        let back: TrainedModel<f64> = load_json(&path).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        let node = &v["outputs"][0]["trees"][0]["nodes"][0];
        for key in ["feature_idx", "threshold", "left", "right", "leaf_value"] {
            assert!(node.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn f32_learners() {
        let x: Vec<Vec<f32>> = (0..40).map(|i| vec![i as f32 * 0.25]).collect();
        let y: Vec<Vec<f32>> = x.iter().map(|r| vec![3.0 * r[0] - 1.0]).collect();
        let m = fit(&spec(RegressorKind::Ols), &x, &y).unwrap();
        assert!((m.predict_one(&[2.0]).unwrap()[0] - 5.0).abs() < 1e-3);
    }
}
