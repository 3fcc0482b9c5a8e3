//! Random forest screening model and the analyses built on it.

mod ablation;
mod anova;
mod forest;
mod grid;
mod metrics;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::taskfeat::{FeatureVector, FEATURE_NAMES};

pub use ablation::{ablation_sweep, rank_by_f, AblationPoint};
pub use anova::anova_f;
pub use forest::{ForestConfig, ForestModel, Node, Prediction, Tree};
pub use grid::{grid_search, stratified_folds, GridPoint, GridResult};
pub use metrics::{evaluate, EvalReport};

/// A labelled feature matrix, one row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub subject_ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<Label>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
        }
        if let Some(r) = x.iter().position(|row| row.len() != feature_names.len()) {
            return Err(Error::invalid(format!(
                "row {r} has {} values, expected {}",
                x[r].len(),
                feature_names.len()
            )));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix contains non-finite values"));
        }
        let subject_ids = (0..x.len()).map(|i| format!("row{i}")).collect();
        Ok(Dataset { feature_names, subject_ids, x, y })
    }

    /// Builds a dataset from feature rows; every row must carry a label.
    pub fn from_rows(rows: &[FeatureVector]) -> Result<Self> {
        let mut y = Vec::with_capacity(rows.len());
        for r in rows {
            y.push(r.label.ok_or_else(|| Error::invalid(format!("subject {} has no label", r.subject_id)))?);
        }
        let mut ds = Dataset::new(
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|r| r.values.to_vec()).collect(),
            y,
        )?;
        ds.subject_ids = rows.iter().map(|r| r.subject_id.clone()).collect();
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        Dataset {
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            subject_ids: self.subject_ids.clone(),
            x: self.x.iter().map(|row| columns.iter().map(|&c| row[c]).collect()).collect(),
            y: self.y.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            subject_ids: rows.iter().map(|&r| self.subject_ids[r].clone()).collect(),
            x: rows.iter().map(|&r| self.x[r].clone()).collect(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
        }
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for l in &self.y {
            counts[l.index()] += 1;
        }
        counts
    }
}
