//! Random forest of CART classification trees grown on Gini impurity.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

use super::Dataset;

/// Two decreases closer than this are treated as a tie.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features searched per split, capped at the column count; `None`
    /// means ceil(sqrt(n_features)).
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 300,
            max_features: Some(4),
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestConfig {
    /// One unbootstrapped tree searching every feature: plain CART.
    pub fn single_cart(seed: u64) -> Self {
        ForestConfig {
            n_trees: 1,
            max_features: Some(usize::MAX),
            bootstrap: false,
            seed,
            ..ForestConfig::default()
        }
    }

    pub fn resolved_max_features(&self, n_features: usize) -> usize {
        let default = (n_features as f64).sqrt().ceil() as usize;
        self.max_features.unwrap_or(default).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training rows reaching the leaf, `[HC, AD]`.
    Leaf { counts: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Majority class of the leaf; a tied leaf votes AD.
    pub fn vote(&self, x: &[f64]) -> Label {
        let [hc, ad] = self.leaf_counts(x);
        if ad >= hc {
            Label::Ad
        } else {
            Label::Hc
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Fraction of trees voting AD.
    pub prob_ad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub max_features: usize,
    pub feature_names: Vec<String>,
    /// Mean decrease in Gini impurity per feature, normalized to sum to 1
    /// (all zeros if no tree ever split).
    pub importance: Vec<f64>,
    pub trees: Vec<Tree>,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

fn class_counts(rows: &[usize], y: &[Label]) -> [usize; 2] {
    let mut c = [0; 2];
    for &r in rows {
        c[y[r].index()] += 1;
    }
    c
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Split {
    /// Larger decrease wins; ties go to the lower feature, then the lower threshold.
    fn beats(&self, other: &Split) -> bool {
        if (self.decrease - other.decrease).abs() > TIE_EPS {
            return self.decrease > other.decrease;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Label],
    config: &'a ForestConfig,
    max_features: usize,
    n_root: f64,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Builder<'_> {
    fn best_split_on(&self, rows: &[usize], feature: usize, parent: [usize; 2]) -> Option<Split> {
        let mut sorted: Vec<(f64, Label)> = rows.iter().map(|&r| (self.x[r][feature], self.y[r])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let min_leaf = self.config.min_samples_leaf.max(1);
        let parent_gini = gini(parent);
        let mut left = [0usize; 2];
        let mut best: Option<Split> = None;
        for k in 1..n {
            left[sorted[k - 1].1.index()] += 1;
            let (lo, hi) = (sorted[k - 1].0, sorted[k].0);
            if lo == hi || k < min_leaf || n - k < min_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let children = (k as f64 * gini(left) + (n - k) as f64 * gini(right)) / n as f64;
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let candidate = Split {
                feature,
                threshold,
                decrease: parent_gini - children,
            };
            if best.is_none_or(|b| candidate.beats(&b)) {
                best = Some(candidate);
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = class_counts(&rows, self.y);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });

        let pure = counts[0] == 0 || counts[1] == 0;
        let too_small = rows.len() < 2 * self.config.min_samples_leaf.max(1);
        let too_deep = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || too_small || too_deep {
            return id;
        }

        // Visit features in random order until `max_features` of them have
        // offered a valid split (or every feature has been tried).
        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(rng);
        let mut best: Option<Split> = None;
        let mut usable = 0;
        for &f in &order {
            if usable >= self.max_features {
                break;
            }
            if let Some(s) = self.best_split_on(&rows, f, counts) {
                usable += 1;
                if best.is_none_or(|b| s.beats(&b)) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else { return id };

        self.importance[split.feature] += rows.len() as f64 / self.n_root * split.decrease;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][split.feature] <= split.threshold);
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

fn train_tree(data: &Dataset, config: &ForestConfig, max_features: usize, index: usize) -> (Tree, Vec<f64>) {
    let mut rng = tree_rng(config.seed, index);
    let n = data.len();
    let rows: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = Builder {
        x: &data.x,
        y: &data.y,
        config,
        max_features,
        n_root: n as f64,
        nodes: Vec::new(),
        importance: vec![0.0; data.n_features()],
    };
    builder.grow(rows, 0, &mut rng);
    (Tree { nodes: builder.nodes }, builder.importance)
}

impl ForestModel {
    /// Trains on `data`. Trees are grown in parallel from per-tree RNG
    /// streams, so the result does not depend on the thread count.
    pub fn train(data: &Dataset, config: &ForestConfig) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::invalid("need at least two training rows"));
        }
        if data.n_features() == 0 {
            return Err(Error::invalid("need at least one feature"));
        }
        if data.class_counts().contains(&0) {
            return Err(Error::SingleClass);
        }
        if config.n_trees == 0 {
            return Err(Error::invalid("n_trees must be positive"));
        }
        let max_features = config.resolved_max_features(data.n_features());
        let grown: Vec<(Tree, Vec<f64>)> = (0..config.n_trees)
            .into_par_iter()
            .map(|t| train_tree(data, config, max_features, t))
            .collect();

        let mut importance = vec![0.0; data.n_features()];
        for (_, imp) in &grown {
            for (acc, v) in importance.iter_mut().zip(imp) {
                *acc += v;
            }
        }
        importance.iter_mut().for_each(|v| *v /= config.n_trees as f64);
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            importance.iter_mut().for_each(|v| *v /= total);
        }

        Ok(ForestModel {
            config: *config,
            max_features,
            feature_names: data.feature_names.clone(),
            importance,
            trees: grown.into_iter().map(|(t, _)| t).collect(),
        })
    }

    /// Majority vote; ties go to AD.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let ad_votes = self.trees.iter().filter(|t| t.vote(x) == Label::Ad).count();
        let prob_ad = ad_votes as f64 / self.trees.len() as f64;
        Prediction {
            label: if prob_ad >= 0.5 { Label::Ad } else { Label::Hc },
            prob_ad,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(text)?;
        let p = model.feature_names.len();
        if model.importance.len() != p {
            return Err(Error::invalid("importance length differs from feature count"));
        }
        for tree in &model.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, left, right, .. } = node {
                    if *feature >= p || *left >= tree.nodes.len() || *right >= tree.nodes.len() {
                        return Err(Error::invalid("forest JSON has an out-of-range node reference"));
                    }
                }
            }
        }
        if model.trees.is_empty() {
            return Err(Error::invalid("forest JSON has no trees"));
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}
