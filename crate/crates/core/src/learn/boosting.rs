//! Stagewise gradient boosting with squared loss.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Impurity, Tree, TreeParams};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Row fraction drawn without replacement per stage.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: Some(3),
            learning_rate: 0.1,
            min_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> crate::Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.max_depth == Some(0) {
            return Err(crate::Error::Config("boosting needs n_trees, min_leaf and depth >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(crate::Error::Config("learning_rate must be in (0, 1]".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(crate::Error::Config("subsample must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Boosted<T> {
    pub base: T,
    pub learning_rate: T,
    pub stages: Vec<Tree<T>>,
}

impl<T: Real> Boosted<T> {
    pub fn predict(&self, x: &[T]) -> T {
        self.stages
            .iter()
            .fold(self.base, |acc, t| acc + self.learning_rate * t.predict(x))
    }
}

pub(crate) fn fit_boosted<T: Real>(x: &[Vec<T>], cols: &[Vec<T>], y: &[T], params: &BoostParams) -> Boosted<T> {
    let n = y.len();
    let base = y.iter().copied().sum::<T>() / T::from_count(n);
    let lr = T::lit(params.learning_rate);
    let tree_params = TreeParams { max_depth: params.max_depth, min_leaf: params.min_leaf, max_features: None };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let mut fitted = vec![base; n];
    let mut stages = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let residual: Vec<T> = y.iter().zip(&fitted).map(|(a, b)| *a - *b).collect();
        let rows: Vec<usize> = if n_sub < n {
            let mut r = sample(&mut rng, n, n_sub).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let tree = grow_tree(cols, &residual, &rows, &tree_params, Impurity::Variance, &mut rng);
        for (f, row) in fitted.iter_mut().zip(x) {
            *f = *f + lr * tree.predict(row);
        }
        stages.push(tree);
    }
    Boosted { base, learning_rate: lr, stages }
}
