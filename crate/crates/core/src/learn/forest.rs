//! Bagged CART ensembles for regression and classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Impurity, Tree, TreeParams};
use crate::pipeline::derive_seed;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Fraction of features examined per split.
    pub feature_frac: f64,
    /// Draw a bootstrap resample per tree. Turning this off (with one tree
    /// and `feature_frac = 1`) yields a plain CART fit.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 2,
            feature_frac: 1.0 / 3.0,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> crate::Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.max_depth == Some(0) {
            return Err(crate::Error::Config("forest needs n_trees, min_leaf and max_depth >= 1".into()));
        }
        if !(self.feature_frac > 0.0 && self.feature_frac <= 1.0) {
            return Err(crate::Error::Config("feature_frac must be in (0, 1]".into()));
        }
        Ok(())
    }

    fn tree_params(&self, n_features: usize) -> TreeParams {
        let k = (self.feature_frac * n_features as f64).round() as usize;
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            max_features: Some(k.clamp(1, n_features.max(1))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Forest<T> {
    pub trees: Vec<Tree<T>>,
}

/// Grows `params.n_trees` trees in parallel; tree `t` draws from its own
/// seeded stream so the result does not depend on scheduling.
pub(crate) fn grow_forest<T: Real>(cols: &[Vec<T>], y: &[T], params: &ForestParams, impurity: Impurity) -> Forest<T> {
    let n = y.len();
    let tree_params = params.tree_params(cols.len());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(cols, y, &rows, &tree_params, impurity, &mut rng)
        })
        .collect();
    Forest { trees }
}

impl<T: Real> Forest<T> {
    pub fn tree_predictions(&self, x: &[T]) -> Vec<T> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    /// Mean of the tree outputs.
    pub fn predict_mean(&self, x: &[T]) -> T {
        self.tree_predictions(x).into_iter().sum::<T>() / T::from_count(self.trees.len())
    }

    /// Majority vote over tree classes, lowest class on ties.
    pub fn predict_vote(&self, x: &[T], n_classes: usize) -> usize {
        let mut votes = vec![0usize; n_classes];
        for t in &self.trees {
            votes[t.predict(x).to_usize().expect("class leaf")] += 1;
        }
        crate::metrics::argmax(&votes).unwrap_or(0)
    }
}
