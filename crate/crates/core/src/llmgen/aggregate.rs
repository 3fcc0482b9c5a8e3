use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskfeat::keywords::keyword_stems;
use crate::taskfeat::{KeywordSet, Topic};
use crate::textproc::tokenize;

use super::{GenerationKind, GenerationRun};

pub const DEFAULT_MIN_FREQUENCY: f64 = 0.1;

/// A keyword proposed by a generation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    /// Most common lowercased surface form.
    pub keyword: String,
    /// Space-joined stems; the identity used for counting.
    pub stem: String,
    /// Number of responses mentioning it.
    pub frequency: usize,
}

/// Counts, for every keyword stem, how many responses mention it, and keeps
/// those reaching `min_frequency` of all responses. Sorted by descending
/// frequency, then keyword.
pub fn aggregate_keywords(run: &GenerationRun, min_frequency: f64) -> Result<Vec<Candidate>> {
    if run.kind != GenerationKind::Keywords {
        return Err(Error::invalid("aggregation needs a keyword run"));
    }
    if run.responses.is_empty() {
        return Err(Error::invalid("run has no responses"));
    }
    if !(min_frequency > 0.0 && min_frequency <= 1.0) {
        return Err(Error::invalid(format!("min_frequency must be in (0, 1], got {min_frequency}")));
    }
    let mut frequency: HashMap<String, usize> = HashMap::new();
    let mut surfaces: HashMap<String, BTreeMap<String, usize>> = HashMap::new();
    for response in &run.responses {
        let mut seen = HashSet::new();
        for piece in response.split([',', '\n', ';']) {
            let tokens = tokenize(piece);
            if tokens.is_empty() {
                continue;
            }
            let surface = tokens.join(" ");
            let key = keyword_stems(&surface).join(" ");
            *surfaces.entry(key.clone()).or_default().entry(surface).or_default() += 1;
            if seen.insert(key.clone()) {
                *frequency.entry(key).or_default() += 1;
            }
        }
    }
    let threshold = min_frequency * run.responses.len() as f64;
    let mut out: Vec<Candidate> = frequency
        .into_iter()
        .filter(|(_, f)| *f as f64 >= threshold - 1e-9)
        .map(|(stem, frequency)| {
            // BTreeMap iteration is ordered, so ties go to the smallest form
            let forms = &surfaces[&stem];
            let best = forms.values().max().copied().unwrap_or(0);
            let keyword = forms.iter().find(|(_, &n)| n == best).map(|(s, _)| s.clone()).unwrap_or_default();
            Candidate { keyword, stem, frequency }
        })
        .collect();
    out.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.keyword.cmp(&b.keyword)));
    Ok(out)
}

pub fn write_candidates(candidates: &[Candidate]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in candidates {
        w.serialize(c)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_candidates(text: &str, source: &str) -> Result<Vec<Candidate>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    r.deserialize()
        .collect::<std::result::Result<Vec<Candidate>, _>>()
        .map_err(|e| Error::format(source, e.to_string()))
}

/// Applies a human `keyword,decision` file (accept or reject) to the
/// candidates. Every candidate must be decided; a keyword is matched by its
/// stems, so any inflection may be written in the file.
pub fn curate(candidates: &[Candidate], decisions: &str, source: &str, id: u32, topic: Option<Topic>) -> Result<KeywordSet> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(decisions.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_lowercase).collect();
    if header != ["keyword", "decision"] {
        return Err(Error::format(source, format!("expected header `keyword,decision`, found `{}`", header.join(","))));
    }
    let mut decided: HashMap<String, bool> = HashMap::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let keyword = record.get(0).unwrap_or("");
        let accept = match record.get(1).unwrap_or("").to_ascii_lowercase().as_str() {
            "accept" => true,
            "reject" => false,
            "" => continue,
            other => {
                return Err(Error::format(source, format!("line {}: decision {other:?} is not accept or reject", i + 2)));
            }
        };
        decided.insert(keyword_stems(keyword).join(" "), accept);
    }
    let undecided: Vec<&str> = candidates
        .iter()
        .filter(|c| !decided.contains_key(&c.stem))
        .map(|c| c.keyword.as_str())
        .collect();
    if !undecided.is_empty() {
        return Err(Error::invalid(format!("undecided candidates: {}", undecided.join(", "))));
    }
    let words: Vec<String> = candidates
        .iter()
        .filter(|c| decided[&c.stem])
        .map(|c| c.keyword.clone())
        .collect();
    if words.is_empty() {
        return Err(Error::invalid("empty keyword set"));
    }
    KeywordSet::new(id, topic, words)
}

/// A reference file with one description per line, whitespace collapsed.
pub fn references_text(run: &GenerationRun) -> String {
    let mut out = format!(
        "# {} descriptions from {} ({}), {}\n",
        run.responses.len(),
        run.model_name,
        run.prompt_template_id,
        run.timestamp
    );
    for r in &run.responses {
        let line = r.split_whitespace().collect::<Vec<_>>().join(" ");
        if !line.is_empty() {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}
