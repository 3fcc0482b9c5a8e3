//! Dataset manifests and transcript parsing (a CHAT `.cha` subset and plain text).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::textproc::tokenize;

pub const MANIFEST_HEADER: [&str; 5] = ["subject_id", "label", "transcript", "asr", "trees"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub label: Option<Label>,
    pub transcript_path: PathBuf,
    pub asr_transcript_path: Option<PathBuf>,
    pub parse_trees_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceFormat {
    Chat,
    Plain,
}

/// One subject's participant speech after markup removal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub subject_id: String,
    pub utterances: Vec<String>,
    /// Indices into the token stream of `utterances` (as produced by
    /// [`tokenize`] over each utterance in order) that were CHAT-coded fillers.
    pub fillers_marked: Vec<usize>,
    pub raw_source: SourceFormat,
}

impl Transcript {
    pub fn tokens(&self) -> Vec<String> {
        self.utterances.iter().flat_map(|u| tokenize(u)).collect()
    }
}

/// Reads a manifest CSV. Relative paths are resolved against the manifest's
/// directory and every referenced file must exist.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base).map_err(|e| match e {
        Error::Csv(err) => Error::format(path, err.to_string()),
        other => other,
    })
}

/// Parses manifest CSV text, resolving paths against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != MANIFEST_HEADER {
        return Err(Error::format(
            base,
            format!(
                "manifest header must be `{}`, found `{}`",
                MANIFEST_HEADER.join(","),
                header.join(",")
            ),
        ));
    }

    let resolve = |cell: &str, required: bool, row: usize| -> Result<Option<PathBuf>> {
        if cell.is_empty() {
            return if required {
                Err(Error::format(base, format!("row {row}: transcript path is empty")))
            } else {
                Ok(None)
            };
        }
        let p = base.join(cell);
        if !p.is_file() {
            return Err(Error::format(&p, format!("row {row}: referenced file not found")));
        }
        Ok(Some(p))
    };

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let cell = |k: usize| record.get(k).unwrap_or("");
        let subject_id = cell(0).to_string();
        if subject_id.is_empty() {
            return Err(Error::format(base, format!("row {row}: empty subject_id")));
        }
        if !seen.insert(subject_id.clone()) {
            return Err(Error::DuplicateSubject(subject_id));
        }
        entries.push(ManifestEntry {
            label: Label::parse_optional(cell(1))?,
            transcript_path: resolve(cell(2), true, row)?.expect("required"),
            asr_transcript_path: resolve(cell(3), false, row)?,
            parse_trees_path: resolve(cell(4), false, row)?,
            subject_id,
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatOptions {
    /// Speaker codes whose main tiers are kept, without `*` and `:`.
    pub speakers: Vec<String>,
}

impl Default for ChatOptions {
    fn default() -> Self {
        ChatOptions {
            speakers: vec!["PAR".to_string()],
        }
    }
}

/// Loads the manual transcript of a manifest entry; `.cha` files are parsed as CHAT.
pub fn load_transcript(entry: &ManifestEntry, options: &ChatOptions) -> Result<Transcript> {
    read_transcript(&entry.transcript_path, &entry.subject_id, options)
}

pub fn read_transcript(path: &Path, subject_id: &str, options: &ChatOptions) -> Result<Transcript> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_chat = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("cha"));
    if is_chat {
        parse_chat_with(&text, subject_id, options)
    } else {
        parse_plain(&text, subject_id)
    }
}

pub fn parse_chat(text: &str, subject_id: &str) -> Result<Transcript> {
    parse_chat_with(text, subject_id, &ChatOptions::default())
}

pub fn parse_chat_with(text: &str, subject_id: &str, options: &ChatOptions) -> Result<Transcript> {
    let mut tiers: Vec<String> = Vec::new();
    // Some(true) while inside a kept main tier, Some(false) inside any other tier.
    let mut in_kept: Option<bool> = None;
    for line in text.trim_start_matches('\u{feff}').lines() {
        let line = line.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix('*') {
            let (code, content) = rest.split_once(':').unwrap_or((rest, ""));
            let keep = options.speakers.iter().any(|s| s == code.trim());
            if keep {
                tiers.push(content.to_string());
            }
            in_kept = Some(keep);
        } else if line.starts_with('%') || line.starts_with('@') {
            in_kept = Some(false);
        } else if line.starts_with([' ', '\t']) && in_kept == Some(true) {
            let last = tiers.last_mut().expect("kept tier");
            last.push(' ');
            last.push_str(line);
        }
    }

    let mut utterances = Vec::new();
    let mut fillers_marked = Vec::new();
    let mut token_offset = 0;
    for tier in &tiers {
        let mut words = Vec::new();
        for raw in strip_chat_spans(tier).split_whitespace() {
            let Some(word) = clean_chat_word(raw) else { continue };
            let n_tokens = tokenize(&word.text).len();
            if word.filler {
                fillers_marked.extend(token_offset..token_offset + n_tokens);
            }
            token_offset += n_tokens;
            words.push(word.text);
        }
        // drop utterances that carry no speech at all, e.g. a lone terminator
        if words.iter().any(|w| w.chars().any(char::is_alphanumeric)) {
            utterances.push(words.join(" "));
        }
    }

    if utterances.is_empty() {
        return Err(Error::EmptySpeech(subject_id.to_string()));
    }
    Ok(Transcript {
        subject_id: subject_id.to_string(),
        utterances,
        fillers_marked,
        raw_source: SourceFormat::Chat,
    })
}

/// Removes `\x15...\x15` media bullets, `[...]` codes and `<`/`>` scope markers.
/// The content of a `<...>` scope is kept.
fn strip_chat_spans(tier: &str) -> String {
    let mut out = String::with_capacity(tier.len());
    let mut chars = tier.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\u{15}' => {
                for d in chars.by_ref() {
                    if d == '\u{15}' {
                        break;
                    }
                }
                out.push(' ');
            }
            '[' => {
                for d in chars.by_ref() {
                    if d == ']' {
                        break;
                    }
                }
                out.push(' ');
            }
            '<' | '>' | ']' => out.push(' '),
            _ => out.push(c),
        }
    }
    out
}

struct ChatWord {
    text: String,
    filler: bool,
}

const TERMINATORS: [&str; 3] = [".", "?", "!"];
const UNINTELLIGIBLE: [&str; 3] = ["xxx", "yyy", "www"];

fn clean_chat_word(raw: &str) -> Option<ChatWord> {
    // pause markers: (.) (..) (...)
    if raw.starts_with('(') && raw.chars().all(|c| matches!(c, '(' | ')' | '.')) {
        return None;
    }
    let mut filler = false;
    let body = if let Some(rest) = raw.strip_prefix("&-") {
        filler = true;
        rest
    } else if raw.starts_with("&=") || raw.starts_with("&+") || raw.starts_with("&*") {
        return None;
    } else if let Some(rest) = raw.strip_prefix('&') {
        // older transcripts mark fillers as `&uh`
        filler = true;
        rest
    } else if raw.starts_with('+') {
        return None;
    } else {
        raw
    };

    if body.starts_with('0') && body.chars().nth(1).is_some_and(char::is_alphabetic) {
        return None;
    }
    let body = body.split('@').next().unwrap_or("");
    let text: String = body
        .chars()
        .filter(|c| !matches!(c, '(' | ')' | ':' | '^' | '&' | '\u{15}'))
        .collect();
    if UNINTELLIGIBLE.contains(&text.to_lowercase().as_str()) {
        return None;
    }
    if text.chars().any(char::is_alphanumeric) || TERMINATORS.contains(&text.as_str()) {
        Some(ChatWord { text, filler })
    } else {
        None
    }
}

/// One utterance per non-empty line.
pub fn parse_plain(text: &str, subject_id: &str) -> Result<Transcript> {
    let utterances: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if utterances.is_empty() {
        return Err(Error::EmptySpeech(subject_id.to_string()));
    }
    Ok(Transcript {
        subject_id: subject_id.to_string(),
        utterances,
        fillers_marked: Vec::new(),
        raw_source: SourceFormat::Plain,
    })
}
