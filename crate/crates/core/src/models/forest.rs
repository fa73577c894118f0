//! Random forest of Gini-criterion decision trees over integer count
//! features.
//!
//! Splits test `count <= threshold`, where thresholds are floor midpoints
//! between adjacent observed values. Each split considers a shuffled sample
//! of features, counting only features that vary within the node until the
//! `max(1, floor(sqrt(V)))` quota is reached. Every split node records its
//! impurity-decrease contribution at build time, weighted by the fraction
//! of the tree's training rows that reached it.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeding;

use super::{validate_predict_input, validate_training_input};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        prediction: u8,
    },
    Split {
        feature: usize,
        /// Rows with `count <= threshold` go to `left`.
        threshold: u32,
        left: usize,
        right: usize,
        /// `(n_node / n_root) * gini_decrease`, summed later for importances.
        contribution: f64,
    },
}

/// One decision tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, row: &[(u32, u32)]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { prediction } => return *prediction,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    let value = row
                        .binary_search_by_key(&(*feature as u32), |&(j, _)| j)
                        .map(|idx| row[idx].1)
                        .unwrap_or(0);
                    at = if value <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomForestConfig {
    pub n_estimators: usize,
    /// `None` grows trees until nodes are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Draw each tree's rows with replacement; when false every tree sees
    /// the full training set.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        RandomForestConfig {
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub config: RandomForestConfig,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    decrease: f64,
    feature: usize,
    threshold: u32,
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    quota: usize,
    min_samples_split: usize,
    max_depth: Option<usize>,
    n_root: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, pos: usize, total: usize) -> usize {
        let prediction = u8::from(2 * pos > total);
        self.nodes.push(TreeNode::Leaf { prediction });
        self.nodes.len() - 1
    }

    /// Features that are nonzero in at least one of the rows, sorted. Any
    /// feature outside this set is zero everywhere in the node, hence
    /// constant.
    fn support(&self, rows: &[usize]) -> Vec<u32> {
        let mut support: Vec<u32> = rows
            .iter()
            .flat_map(|&i| self.x.row(i).iter().map(|&(j, _)| j))
            .collect();
        support.sort_unstable();
        support.dedup();
        support
    }

    fn best_split_for_feature(&self, rows: &[usize], feature: u32) -> Option<BestSplit> {
        let mut pairs: Vec<(u32, u8)> = rows
            .iter()
            .map(|&i| (self.x.get(i, feature as usize), self.y[i]))
            .collect();
        pairs.sort_unstable_by_key(|&(value, _)| value);
        if pairs.first().map(|p| p.0) == pairs.last().map(|p| p.0) {
            return None;
        }
        let total = pairs.len();
        let total_pos = pairs.iter().filter(|&&(_, l)| l == 1).count();
        let parent = gini(total_pos, total);

        let mut best: Option<BestSplit> = None;
        let mut left_n = 0usize;
        let mut left_pos = 0usize;
        let mut i = 0;
        while i < total {
            let value = pairs[i].0;
            while i < total && pairs[i].0 == value {
                left_n += 1;
                left_pos += usize::from(pairs[i].1 == 1);
                i += 1;
            }
            if i == total {
                break;
            }
            let threshold = value + (pairs[i].0 - value) / 2;
            let right_n = total - left_n;
            let right_pos = total_pos - left_pos;
            let weighted = (left_n as f64 * gini(left_pos, left_n)
                + right_n as f64 * gini(right_pos, right_n))
                / total as f64;
            let decrease = parent - weighted;
            let candidate = BestSplit { decrease, feature: feature as usize, threshold };
            let better = match &best {
                None => true,
                Some(b) => {
                    decrease > b.decrease
                        || (decrease == b.decrease
                            && (candidate.feature < b.feature
                                || (candidate.feature == b.feature
                                    && candidate.threshold < b.threshold)))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut impl Rng) -> usize {
        let total = rows.len();
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if pos == 0 || pos == total || total < self.min_samples_split || depth_capped {
            return self.leaf(pos, total);
        }

        let mut candidates = self.support(&rows);
        candidates.shuffle(rng);
        let mut best: Option<BestSplit> = None;
        let mut varying_seen = 0usize;
        for &feature in &candidates {
            let Some(split) = self.best_split_for_feature(&rows, feature) else {
                continue;
            };
            varying_seen += 1;
            let better = match &best {
                None => true,
                Some(b) => {
                    split.decrease > b.decrease
                        || (split.decrease == b.decrease
                            && (split.feature < b.feature
                                || (split.feature == b.feature && split.threshold < b.threshold)))
                }
            };
            if better {
                best = Some(split);
            }
            if varying_seen == self.quota {
                break;
            }
        }
        let Some(split) = best else {
            return self.leaf(pos, total);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x.get(i, split.feature) <= split.threshold);
        let contribution = total as f64 / self.n_root as f64 * split.decrease;

        let here = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { prediction: 0 });
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[here] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            contribution,
        };
        here
    }
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn fit(x: &FeatureMatrix, y: &[u8], config: RandomForestConfig) -> Result<Self> {
        validate_training_input(x, y)?;
        if config.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        if config.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        let v = x.n_cols();
        let n = x.n_rows();
        let quota = ((v as f64).sqrt().floor() as usize).max(1);
        let trees: Vec<Tree> = (0..config.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeding::stream_rng(config.seed, t as u64);
                let rows: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut builder = TreeBuilder {
                    x,
                    y,
                    quota,
                    min_samples_split: config.min_samples_split,
                    max_depth: config.max_depth,
                    n_root: rows.len(),
                    nodes: Vec::new(),
                };
                builder.build(rows, 0, &mut rng);
                Tree { nodes: builder.nodes }
            })
            .collect();
        Ok(RandomForest { config, n_features: v, trees })
    }

    pub fn config_string(&self) -> String {
        format!(
            "n_estimators={},max_depth={},min_samples_split={}",
            self.config.n_estimators,
            self.config.max_depth.map_or_else(|| "none".to_string(), |d| d.to_string()),
            self.config.min_samples_split
        )
    }

    /// Majority vote over the trees; ties go to class 0.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>> {
        validate_predict_input(self.n_features, x)?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let votes: usize =
                    self.trees.iter().map(|t| t.predict_row(row) as usize).sum();
                u8::from(2 * votes > self.trees.len())
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consistent_data() -> (FeatureMatrix, Vec<u8>) {
        let rows = vec![
            vec![(0, 2), (2, 1)],
            vec![(0, 2)],
            vec![(0, 1), (1, 1)],
            vec![(1, 3)],
            vec![(1, 1), (2, 2)],
            vec![(0, 3), (1, 1)],
            vec![(2, 4)],
            vec![],
            vec![(0, 1), (2, 3)],
            vec![(1, 2), (2, 2)],
        ];
        let y = vec![1, 1, 0, 0, 1, 1, 1, 0, 1, 0];
        (FeatureMatrix::from_rows(rows, 3), y)
    }

    fn single_tree_config(seed: u64) -> RandomForestConfig {
        RandomForestConfig {
            n_estimators: 1,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: false,
            seed,
        }
    }

    #[test]
    fn single_unpruned_tree_fits_consistent_data_perfectly() {
        let (x, y) = consistent_data();
        for seed in 0..20 {
            let forest = RandomForest::fit(&x, &y, single_tree_config(seed)).unwrap();
            assert_eq!(forest.predict(&x).unwrap(), y, "seed {seed}");
        }
    }

    #[test]
    fn fitting_is_deterministic_per_seed() {
        let (x, y) = consistent_data();
        let config = RandomForestConfig { n_estimators: 5, seed: 9, ..Default::default() };
        let a = RandomForest::fit(&x, &y, config).unwrap();
        let b = RandomForest::fit(&x, &y, config).unwrap();
        assert_eq!(a.trees, b.trees);
    }

    #[test]
    fn different_seeds_grow_different_trees() {
        let (x, y) = consistent_data();
        let grow = |seed| {
            RandomForest::fit(
                &x,
                &y,
                RandomForestConfig { n_estimators: 3, seed, ..Default::default() },
            )
            .unwrap()
            .trees
        };
        let baseline = grow(0);
        assert!((1..20).any(|seed| grow(seed) != baseline));
    }

    #[test]
    fn thresholds_are_floor_midpoints() {
        let rows = vec![vec![], vec![(0, 3)], vec![], vec![(0, 3)]];
        let y = vec![0, 1, 0, 1];
        let forest =
            RandomForest::fit(&FeatureMatrix::from_rows(rows, 1), &y, single_tree_config(0))
                .unwrap();
        match &forest.trees[0].nodes[0] {
            TreeNode::Split { feature, threshold, contribution, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1, "midpoint of 0 and 3 floors to 1");
                assert!((contribution - 0.5).abs() < 1e-12);
            }
            other => panic!("expected a root split, found {other:?}"),
        }
    }

    #[test]
    fn depth_zero_gives_a_majority_leaf() {
        let (x, y) = consistent_data();
        let config = RandomForestConfig {
            n_estimators: 1,
            max_depth: Some(0),
            bootstrap: false,
            ..Default::default()
        };
        let forest = RandomForest::fit(&x, &y, config).unwrap();
        assert_eq!(forest.trees[0].nodes.len(), 1);
        assert_eq!(forest.predict(&x).unwrap(), vec![1; 10], "6 of 10 labels are positive");
    }

    #[test]
    fn tied_votes_choose_class_zero() {
        let forest = RandomForest {
            config: RandomForestConfig { n_estimators: 2, ..Default::default() },
            n_features: 1,
            trees: vec![
                Tree { nodes: vec![TreeNode::Leaf { prediction: 1 }] },
                Tree { nodes: vec![TreeNode::Leaf { prediction: 0 }] },
            ],
        };
        let x = FeatureMatrix::from_rows(vec![vec![(0, 1)]], 1);
        assert_eq!(forest.predict(&x).unwrap(), vec![0]);
    }

    #[test]
    fn min_samples_split_caps_tree_growth() {
        let (x, y) = consistent_data();
        let config = RandomForestConfig {
            n_estimators: 1,
            min_samples_split: 11,
            bootstrap: false,
            ..Default::default()
        };
        let forest = RandomForest::fit(&x, &y, config).unwrap();
        assert_eq!(forest.trees[0].nodes.len(), 1, "root is smaller than min_samples_split");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (x, y) = consistent_data();
        let zero_trees = RandomForestConfig { n_estimators: 0, ..Default::default() };
        assert!(RandomForest::fit(&x, &y, zero_trees).is_err());
        let tiny_split = RandomForestConfig { min_samples_split: 1, ..Default::default() };
        assert!(RandomForest::fit(&x, &y, tiny_split).is_err());
    }

    #[test]
    fn predict_rejects_mismatched_width() {
        let (x, y) = consistent_data();
        let forest = RandomForest::fit(&x, &y, single_tree_config(0)).unwrap();
        let wrong = FeatureMatrix::from_rows(vec![vec![(0, 1)]], 5);
        assert!(forest.predict(&wrong).is_err());
    }
}
