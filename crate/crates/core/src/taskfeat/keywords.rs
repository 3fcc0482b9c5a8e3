//! Topic keyword sets and their hit rates.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{stem, tokenize, TokenizedDoc};

/// The bundled keyword sets, one per picture region.
pub const DEFAULT_KEYWORDS_JSON: &str = include_str!("../../data/keywords.json");

/// Picture regions: the children at the cookie jar, the mother at the sink,
/// and the window with the outdoors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topic {
    T1,
    T2,
    T3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<Topic>,
    pub words: Vec<String>,
}

/// Stem sequence of a keyword; multi-word keywords have several stems.
pub(crate) fn keyword_stems(word: &str) -> Vec<String> {
    tokenize(word).iter().map(|t| stem(t)).collect()
}

impl KeywordSet {
    pub fn new(id: u32, topic: Option<Topic>, words: Vec<String>) -> Result<Self> {
        let set = KeywordSet { id, topic, words };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.words.is_empty() {
            return Err(Error::invalid(format!("keyword set {} is empty", self.id)));
        }
        let mut seen = HashSet::new();
        for w in &self.words {
            let stems = keyword_stems(w);
            if stems.is_empty() {
                return Err(Error::invalid(format!("keyword set {}: {w:?} has no word characters", self.id)));
            }
            if !seen.insert(stems) {
                return Err(Error::invalid(format!(
                    "keyword set {}: {w:?} duplicates another keyword after stemming",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Union of several sets, dropping words whose stems repeat an earlier word.
    pub fn merge(id: u32, topic: Option<Topic>, sets: &[&KeywordSet]) -> Result<Self> {
        let mut seen = HashSet::new();
        let words = sets
            .iter()
            .flat_map(|s| s.words.iter())
            .filter(|w| seen.insert(keyword_stems(w)))
            .cloned()
            .collect();
        KeywordSet::new(id, topic, words)
    }
}

/// Fraction of keywords whose stems occur in the document. A multi-word
/// keyword must occur as a contiguous stem sequence.
pub fn topic_hit_rate(doc: &TokenizedDoc, set: &KeywordSet) -> f64 {
    if set.words.is_empty() {
        return 0.0;
    }
    let single: HashSet<&str> = doc.stems.iter().map(String::as_str).collect();
    let hits = set
        .words
        .iter()
        .filter(|w| {
            let stems = keyword_stems(w);
            match stems.len() {
                0 => false,
                1 => single.contains(stems[0].as_str()),
                _ => doc.stems.windows(stems.len()).any(|win| win == stems.as_slice()),
            }
        })
        .count();
    hits as f64 / set.words.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordFile {
    pub sets: Vec<KeywordSet>,
}

impl KeywordFile {
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_KEYWORDS_JSON).expect("bundled keyword file is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: KeywordFile = serde_json::from_str(text)?;
        let mut ids = HashSet::new();
        for set in &file.sets {
            set.validate()?;
            if !ids.insert(set.id) {
                return Err(Error::invalid(format!("keyword set id {} appears twice", set.id)));
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("keyword file serializes")
    }

    pub fn get(&self, id: u32) -> Option<&KeywordSet> {
        self.sets.iter().find(|s| s.id == id)
    }

    /// Inserts `set`, replacing any existing set with the same id.
    pub fn upsert(&mut self, set: KeywordSet) {
        match self.sets.iter_mut().find(|s| s.id == set.id) {
            Some(slot) => *slot = set,
            None => {
                self.sets.push(set);
                self.sets.sort_by_key(|s| s.id);
            }
        }
    }

    /// Builds the three topic keyword sets selected by `mapping`.
    pub fn topic_sets(&self, mapping: &TopicMapping) -> Result<[KeywordSet; 3]> {
        let build = |topic: Topic, ids: &[u32]| -> Result<KeywordSet> {
            let sets = ids
                .iter()
                .map(|id| {
                    self.get(*id)
                        .ok_or_else(|| Error::invalid(format!("topic mapping references missing keyword set {id}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if sets.is_empty() {
                return Err(Error::invalid(format!("topic {topic:?} maps to no keyword sets")));
            }
            KeywordSet::merge(ids[0], Some(topic), &sets)
        };
        Ok([
            build(Topic::T1, &mapping.topic1)?,
            build(Topic::T2, &mapping.topic2)?,
            build(Topic::T3, &mapping.topic3)?,
        ])
    }
}

/// Which keyword sets feed each of the three topic features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMapping {
    pub topic1: Vec<u32>,
    pub topic2: Vec<u32>,
    pub topic3: Vec<u32>,
}

impl TopicMapping {
    /// Sets 0+1 (children), 2+3 (mother and sink), 4 (window).
    pub fn union() -> Self {
        TopicMapping {
            topic1: vec![0, 1],
            topic2: vec![2, 3],
            topic3: vec![4],
        }
    }

    /// Sets 1, 2 and 3 taken one per topic.
    pub fn literal() -> Self {
        TopicMapping {
            topic1: vec![1],
            topic2: vec![2],
            topic3: vec![3],
        }
    }

    /// `union`, `literal`, or an explicit `0+1;2+3;4` list.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "union" => return Ok(Self::union()),
            "literal" => return Ok(Self::literal()),
            _ => {}
        }
        let groups: Vec<Vec<u32>> = s
            .split(';')
            .map(|g| {
                g.split('+')
                    .map(|id| {
                        id.trim()
                            .parse::<u32>()
                            .map_err(|_| Error::invalid(format!("bad topic mapping {s:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        match <[Vec<u32>; 3]>::try_from(groups) {
            Ok([topic1, topic2, topic3]) => Ok(TopicMapping { topic1, topic2, topic3 }),
            Err(_) => Err(Error::invalid(format!("topic mapping {s:?} must list exactly three groups"))),
        }
    }

    pub fn describe(&self) -> String {
        let join = |ids: &[u32]| ids.iter().map(u32::to_string).collect::<Vec<_>>().join("+");
        format!("{};{};{}", join(&self.topic1), join(&self.topic2), join(&self.topic3))
    }
}

impl Default for TopicMapping {
    fn default() -> Self {
        Self::union()
    }
}
