use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{anova_f, evaluate, Dataset, ForestConfig, ForestModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub n_features: usize,
    /// The feature added at this step.
    pub added: String,
    pub f_value: f64,
    pub accuracy: f64,
}

/// Column indices by descending F value; infinite F ranks first and ties
/// keep column order.
pub fn rank_by_f(f_values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..f_values.len()).collect();
    order.sort_by(|&a, &b| f_values[b].total_cmp(&f_values[a]).then(a.cmp(&b)));
    order
}

/// Adds features one at a time in training-set F-value order and records
/// test accuracy of a forest trained on each prefix.
///
/// Every step trains with a fresh RNG seeded from `config.seed`, and the
/// selected columns keep their original order, so the last step equals a
/// forest trained on the full matrix.
pub fn ablation_sweep(train: &Dataset, test: &Dataset, config: &ForestConfig) -> Result<Vec<AblationPoint>> {
    if train.n_features() == 0 {
        return Err(Error::invalid("ablation needs at least one feature"));
    }
    if train.feature_names != test.feature_names {
        return Err(Error::invalid("train and test feature columns differ"));
    }
    let f_values = anova_f(&train.x, &train.y)?;
    let ranking = rank_by_f(&f_values);
    let mut points = Vec::with_capacity(ranking.len());
    for n in 1..=ranking.len() {
        let mut columns = ranking[..n].to_vec();
        columns.sort_unstable();
        let model = ForestModel::train(&train.select_columns(&columns), config)?;
        let report = evaluate(&model, &test.select_columns(&columns));
        let added = ranking[n - 1];
        points.push(AblationPoint {
            n_features: n,
            added: train.feature_names[added].clone(),
            f_value: f_values[added],
            accuracy: report.accuracy,
        });
    }
    Ok(points)
}
