use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{evaluate, Dataset, ForestConfig, ForestModel};

/// Hyperparameters searched by [`grid_search`]; the seed and bootstrap flag
/// come from the base configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
}

impl GridPoint {
    pub fn apply(&self, base: &ForestConfig) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            max_features: self.max_features,
            min_samples_leaf: self.min_samples_leaf,
            ..*base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridPoint,
    pub best_accuracy: f64,
    /// Mean cross-validated accuracy per distinct grid point, in grid order.
    pub scores: Vec<(GridPoint, f64)>,
}

/// Fold index per row. Each class is shuffled with `seed` and dealt round
/// robin so every fold gets its share of both classes.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid("need at least two folds"));
    }
    let counts = data.class_counts();
    let minority = counts[0].min(counts[1]);
    if folds > minority {
        return Err(Error::invalid(format!(
            "{folds} folds but the smaller class has only {minority} samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; data.len()];
    for class in 0..2 {
        let mut rows: Vec<usize> = (0..data.len()).filter(|&r| data.y[r].index() == class).collect();
        rows.shuffle(&mut rng);
        for (i, r) in rows.into_iter().enumerate() {
            assignment[r] = i % folds;
        }
    }
    Ok(assignment)
}

fn cv_accuracy(data: &Dataset, assignment: &[usize], folds: usize, config: &ForestConfig) -> Result<f64> {
    let mut total = 0.0;
    for fold in 0..folds {
        let (test_rows, train_rows): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&r| assignment[r] == fold);
        let model = ForestModel::train(&data.select_rows(&train_rows), config)?;
        total += evaluate(&model, &data.select_rows(&test_rows)).accuracy;
    }
    Ok(total / folds as f64)
}

/// Stratified k-fold search. The best point has the highest mean accuracy;
/// ties prefer fewer trees, then a shallower depth limit, then grid order.
pub fn grid_search(train: &Dataset, grid: &[GridPoint], folds: usize, base: &ForestConfig) -> Result<GridResult> {
    let mut points: Vec<GridPoint> = Vec::new();
    for p in grid {
        if !points.contains(p) {
            points.push(*p);
        }
    }
    if points.is_empty() {
        return Err(Error::invalid("grid is empty"));
    }
    let assignment = stratified_folds(train, folds, base.seed)?;
    let scores: Vec<(GridPoint, f64)> = points
        .par_iter()
        .map(|p| cv_accuracy(train, &assignment, folds, &p.apply(base)).map(|acc| (*p, acc)))
        .collect::<Result<_>>()?;

    let depth_key = |d: Option<usize>| d.unwrap_or(usize::MAX);
    let mut best = 0;
    for (i, (p, acc)) in scores.iter().enumerate().skip(1) {
        let (bp, bacc) = &scores[best];
        let better = if (acc - bacc).abs() > 1e-12 {
            acc > bacc
        } else {
            (p.n_trees, depth_key(p.max_depth)) < (bp.n_trees, depth_key(bp.max_depth))
        };
        if better {
            best = i;
        }
    }
    Ok(GridResult {
        best: scores[best].0,
        best_accuracy: scores[best].1,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;

    fn data() -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let ad = i % 3 == 0;
            x.push(vec![i as f64 * 0.1 + if ad { 5.0 } else { 0.0 }, (i % 7) as f64]);
            y.push(if ad { Label::Ad } else { Label::Hc });
        }
        Dataset::new(vec!["a".into(), "b".into()], x, y).unwrap()
    }

    fn point(n_trees: usize, max_depth: Option<usize>) -> GridPoint {
        GridPoint { n_trees, max_depth, max_features: None, min_samples_leaf: 1 }
    }

    #[test]
    fn single_point_is_returned() {
        let r = grid_search(&data(), &[point(5, None)], 3, &ForestConfig::default()).unwrap();
        assert_eq!(r.best, point(5, None));
        assert_eq!(r.scores.len(), 1);
    }

    #[test]
    fn duplicates_do_not_change_the_result() {
        let grid = [point(5, None), point(3, Some(2))];
        let dup = [point(5, None), point(3, Some(2)), point(5, None)];
        let a = grid_search(&data(), &grid, 3, &ForestConfig::default()).unwrap();
        let b = grid_search(&data(), &dup, 3, &ForestConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ties_prefer_fewer_trees_then_shallower() {
        // perfectly separable: every point scores 1.0
        let grid = [point(9, None), point(3, None), point(3, Some(4)), point(7, Some(1))];
        let r = grid_search(&data(), &grid, 3, &ForestConfig::default()).unwrap();
        assert!(r.scores.iter().all(|(_, acc)| *acc == 1.0));
        assert_eq!(r.best, point(3, Some(4)));
    }

    #[test]
    fn fold_constraints() {
        assert!(grid_search(&data(), &[], 3, &ForestConfig::default()).is_err());
        // 10 AD rows
        assert!(stratified_folds(&data(), 11, 0).is_err());
        assert!(stratified_folds(&data(), 1, 0).is_err());
        let folds = stratified_folds(&data(), 5, 0).unwrap();
        for f in 0..5 {
            let ad = (0..30).filter(|&r| folds[r] == f && data().y[r] == Label::Ad).count();
            assert_eq!(ad, 2);
        }
    }
}
