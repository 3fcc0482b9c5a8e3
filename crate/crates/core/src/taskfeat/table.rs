//! Feature matrix CSV: `subject_id,label,<15 features>` with six decimals.

use std::io::Write;

use crate::error::{Error, Result};
use crate::label::Label;

use super::{FeatureVector, FEATURE_NAMES, N_FEATURES};

pub fn features_header() -> Vec<&'static str> {
    let mut h = vec!["subject_id", "label"];
    h.extend(FEATURE_NAMES);
    h
}

/// The header line, comma separated.
pub static FEATURES_HEADER: std::sync::LazyLock<String> = std::sync::LazyLock::new(|| features_header().join(","));

pub fn write_features_csv<W: Write>(rows: &[FeatureVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(features_header())?;
    for row in rows {
        let mut record = vec![row.subject_id.clone(), row.label.map(|l| l.to_string()).unwrap_or_default()];
        record.extend(row.values.iter().map(|v| format!("{v:.6}")));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<features csv>", e))?;
    Ok(())
}

pub fn read_features_csv(text: &str, source: &str) -> Result<Vec<FeatureVector>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != features_header() {
        return Err(Error::format(
            source,
            format!("feature header mismatch: expected `{}`, found `{}`", *FEATURES_HEADER, found.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let mut values = [0.0; N_FEATURES];
        for (k, slot) in values.iter_mut().enumerate() {
            let cell = record.get(k + 2).unwrap_or("");
            *slot = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(source, format!("line {line}: {} = {cell:?} is not a finite number", FEATURE_NAMES[k])))?;
        }
        rows.push(FeatureVector {
            subject_id: record.get(0).unwrap_or("").to_string(),
            label: Label::parse_optional(record.get(1).unwrap_or(""))?,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_formatting() {
        let mut values = [0.0; N_FEATURES];
        values[0] = 1.0 / 3.0;
        values[12] = 4.0;
        let row = FeatureVector { subject_id: "S1".into(), label: Some(Label::Ad), values };
        let mut buf = Vec::new();
        write_features_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "subject_id,label,topic1_hit_rate,topic2_hit_rate,topic3_hit_rate,bleu1,bleu2,bleu3,bleu4,meteor,tfidf_sim_hc,tfidf_sim_ad,tfidf_kw_hit_rate,avg_depth,filled_pauses,filled_pauses_ratio,wer"
        );
        let data = lines.next().unwrap();
        assert!(data.starts_with("S1,AD,0.333333,0.000000,"));
        assert!(data.contains(",4.000000,"));

        let back = read_features_csv(&text, "mem").unwrap();
        assert_eq!(back[0].values[12], 4.0);
        assert_eq!(back[0].label, Some(Label::Ad));
    }

    #[test]
    fn wrong_header_quotes_both() {
        let err = read_features_csv("subject_id,label,x\nS,AD,1\n", "f.csv").unwrap_err().to_string();
        assert!(err.contains("expected `subject_id,label,topic1_hit_rate"));
        assert!(err.contains("found `subject_id,label,x`"));
    }

    #[test]
    fn non_numeric_cell_rejected() {
        let mut text = FEATURES_HEADER.clone();
        text.push_str("\nS,HC");
        text.push_str(&",0".repeat(14));
        text.push_str(",nan\n");
        assert!(read_features_csv(&text, "f.csv").is_err());
    }
}
