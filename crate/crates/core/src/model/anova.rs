use crate::error::{Error, Result};
use crate::label::Label;

/// One-way ANOVA F statistic of each column across the HC and AD groups.
///
/// A column with zero within-group variance but different group means gets
/// `f64::INFINITY`; a column that is constant overall gets 0.
pub fn anova_f(x: &[Vec<f64>], y: &[Label]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let mut sizes = [0usize; 2];
    for l in y {
        sizes[l.index()] += 1;
    }
    if sizes.iter().any(|&n| n < 2) {
        return Err(Error::invalid(format!(
            "ANOVA needs at least two samples per class (HC={}, AD={})",
            sizes[0], sizes[1]
        )));
    }
    let n_features = x.first().map_or(0, Vec::len);
    let n = x.len() as f64;
    let k = 2.0;

    let f_values = (0..n_features)
        .map(|f| {
            let mut sums = [0.0; 2];
            for (row, l) in x.iter().zip(y) {
                sums[l.index()] += row[f];
            }
            let means = [sums[0] / sizes[0] as f64, sums[1] / sizes[1] as f64];
            let grand = (sums[0] + sums[1]) / n;
            let between: f64 = (0..2).map(|g| sizes[g] as f64 * (means[g] - grand).powi(2)).sum();
            let within: f64 = x.iter().zip(y).map(|(row, l)| (row[f] - means[l.index()]).powi(2)).sum();
            if within == 0.0 {
                if between == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (between / (k - 1.0)) / (within / (n - k))
            }
        })
        .collect();
    Ok(f_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn examples() {
        let y = [Hc, Hc, Ad, Ad];
        assert!((anova_f(&column(&[1.0, 2.0, 3.0, 4.0]), &y).unwrap()[0] - 8.0).abs() < 1e-9);
        assert_eq!(anova_f(&column(&[1.0, 2.0, 1.0, 2.0]), &y).unwrap()[0], 0.0);
        assert_eq!(anova_f(&column(&[1.0, 1.0, 2.0, 2.0]), &y).unwrap()[0], f64::INFINITY);
        assert_eq!(anova_f(&column(&[3.0, 3.0, 3.0, 3.0]), &y).unwrap()[0], 0.0);
    }

    #[test]
    fn tiny_class_rejected() {
        assert!(anova_f(&column(&[1.0, 2.0, 3.0]), &[Hc, Hc, Ad]).is_err());
    }
}
