//! Frozen outputs of independent reference implementations.

use cookiefeat::refscore::{bleu_n, BleuOptions};
use cookiefeat::textproc::{stem, TokenizedDoc};

#[test]
fn porter_matches_reference_stemmer() {
    let fixture = include_str!("data/porter_oracle.tsv");
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in fixture.lines().filter(|l| !l.starts_with('#')) {
        let (word, expected) = line.split_once('\t').unwrap();
        n += 1;
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: {got} != {expected}"));
        }
    }
    assert!(n > 1000);
    assert!(mismatches.is_empty(), "{} of {n} differ:\n{}", mismatches.len(), mismatches.join("\n"));
}

#[test]
fn bleu_matches_reference_implementation() {
    let fixture: serde_json::Value = serde_json::from_str(include_str!("data/bleu_oracle.json")).unwrap();
    let plain = BleuOptions { smoothing: false, ..BleuOptions::default() };
    for case in fixture["cases"].as_array().unwrap() {
        let toks = |k: &str| -> Vec<String> {
            case[k].as_array().unwrap().iter().map(|t| t.as_str().unwrap().to_string()).collect()
        };
        let cand = TokenizedDoc::from_tokens("c", toks("candidate"));
        let reference = TokenizedDoc::from_tokens("r", toks("reference"));
        for n in 1..=4 {
            let want = case["bleu"][n - 1].as_f64().unwrap();
            let got = bleu_n(&cand, &reference, n, plain).unwrap();
            assert!((got - want).abs() < 1e-9, "BLEU-{n} {got} vs {want}");
            // every order has matches, so smoothing must not change the score
            assert_eq!(bleu_n(&cand, &reference, n, BleuOptions::default()).unwrap(), got);
        }
    }
}
