//! Optional client that asks a multimodal chat model for picture keywords
//! and reference descriptions, keeps every raw response in an append-only
//! JSONL log, and turns keyword runs into curated keyword sets.

mod aggregate;
mod transport;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aggregate::{
    aggregate_keywords, curate, read_candidates, references_text, write_candidates, Candidate, DEFAULT_MIN_FREQUENCY,
};
pub use transport::{extract_content, ChatRequest, ChatTransport, EndpointConfig, HttpTransport, ImagePart};

pub const KEYWORD_PROMPT: &str = "Imagine you are an expert on cognitive assessment using Cookie Theft picture description task. You have the knowledge of the Cookie Theft picture and the key point to assess the AD. Now I will provide you with a sub-picture of the Cookie Theft picture, please give me some key content words related to that part. These words should be helpful for people to distinguish AD patients that the missing of the words may indicate potential cognitive impairment. Please only give the keywords list separated by comma without any further explanation.";

pub const DESCRIPTION_PROMPT: &str = "This is the picture of the Cookie Theft description task which is widely used for cognitive assessment. Now imagine that you are an elderly people with healthy cognitive state. Please give me a verbal description of this picture to cover as much content as possible in the picture.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationKind {
    Keywords,
    Descriptions,
}

impl GenerationKind {
    pub fn prompt(self) -> &'static str {
        match self {
            GenerationKind::Keywords => KEYWORD_PROMPT,
            GenerationKind::Descriptions => DESCRIPTION_PROMPT,
        }
    }

    pub fn prompt_template_id(self) -> &'static str {
        match self {
            GenerationKind::Keywords => "keywords-v1",
            GenerationKind::Descriptions => "descriptions-v1",
        }
    }
}

/// A completed generation run. `responses` are verbatim and ordered by
/// iteration; failed iterations are listed in `failures`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRun {
    pub kind: GenerationKind,
    pub prompt_template_id: String,
    pub image_path: Option<PathBuf>,
    pub iterations: usize,
    pub responses: Vec<String>,
    pub failures: Vec<(usize, String)>,
    pub timestamp: String,
    pub endpoint_url: String,
    pub model_name: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LogRecord {
    Run {
        kind: GenerationKind,
        prompt_template_id: String,
        image_path: Option<PathBuf>,
        iterations: usize,
        timestamp: String,
        endpoint_url: String,
        model_name: String,
    },
    Response {
        iteration: usize,
        content: String,
    },
    Failure {
        iteration: usize,
        error: String,
    },
}

fn write_record<W: Write>(log: &mut W, record: &LogRecord) -> Result<()> {
    let line = serde_json::to_string(record)?;
    writeln!(log, "{line}")
        .and_then(|_| log.flush())
        .map_err(|e| Error::io("<run log>", e))
}

fn request_with_retries(transport: &dyn ChatTransport, request: &ChatRequest, config: &EndpointConfig) -> std::result::Result<String, String> {
    let mut attempt = 0;
    loop {
        match transport.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if attempt >= config.retries => return Err(format!("{e} (after {} attempts)", attempt + 1)),
            Err(_) => {
                let delay = config.backoff_ms.saturating_mul(1 << attempt.min(16));
                std::thread::sleep(Duration::from_millis(delay));
                attempt += 1;
            }
        }
    }
}

/// Issues `iterations` independent requests with the fixed prompt for `kind`.
///
/// Requests run on up to `config.parallelism` worker threads; this thread is
/// the only writer of `log` and appends each outcome as it arrives. A keyword
/// run needs a sub-picture image. The run fails only if no request succeeds.
pub fn generate<W: Write>(
    kind: GenerationKind,
    image_path: Option<&Path>,
    iterations: usize,
    config: &EndpointConfig,
    transport: &dyn ChatTransport,
    log: &mut W,
) -> Result<GenerationRun> {
    if iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    if kind == GenerationKind::Keywords && image_path.is_none() {
        return Err(Error::invalid("keyword generation needs a sub-picture image"));
    }
    let image = image_path.map(ImagePart::load).transpose()?;
    let request = ChatRequest {
        model: config.model.clone(),
        temperature: config.temperature,
        prompt: kind.prompt().to_string(),
        image,
    };
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    write_record(
        log,
        &LogRecord::Run {
            kind,
            prompt_template_id: kind.prompt_template_id().into(),
            image_path: image_path.map(Path::to_path_buf),
            iterations,
            timestamp: timestamp.clone(),
            endpoint_url: config.url.clone(),
            model_name: config.model.clone(),
        },
    )?;

    let mut outcomes: Vec<Option<std::result::Result<String, String>>> = vec![None; iterations];
    let next = AtomicUsize::new(0);
    let workers = config.parallelism.clamp(1, iterations);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, request) = (&next, &request);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= iterations {
                    break;
                }
                if tx.send((i, request_with_retries(transport, request, config))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, outcome) in rx {
            let record = match &outcome {
                Ok(content) => LogRecord::Response { iteration: i, content: content.clone() },
                Err(error) => LogRecord::Failure { iteration: i, error: error.clone() },
            };
            write_record(log, &record)?;
            outcomes[i] = Some(outcome);
        }
        Ok(())
    })?;

    let mut responses = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Some(Ok(text)) => responses.push(text),
            Some(Err(e)) => failures.push((i, e)),
            None => failures.push((i, "no outcome recorded".into())),
        }
    }
    if responses.is_empty() {
        let last = failures.last().map(|(_, e)| e.as_str()).unwrap_or("");
        return Err(Error::Generation(format!("0 of {iterations} requests succeeded; last error: {last}")));
    }
    Ok(GenerationRun {
        kind,
        prompt_template_id: kind.prompt_template_id().into(),
        image_path: image_path.map(Path::to_path_buf),
        iterations,
        responses,
        failures,
        timestamp,
        endpoint_url: config.url.clone(),
        model_name: config.model.clone(),
    })
}

impl GenerationRun {
    /// Rebuilds a run from its JSONL log without touching the network.
    pub fn read_log<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut run: Option<GenerationRun> = None;
        let mut responses = Vec::new();
        let mut failures = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: LogRecord = serde_json::from_str(&line)
                .map_err(|e| Error::format(source, format!("line {}: {e}", n + 1)))?;
            match record {
                LogRecord::Run { kind, prompt_template_id, image_path, iterations, timestamp, endpoint_url, model_name } => {
                    if run.is_some() {
                        return Err(Error::format(source, format!("line {}: second run header", n + 1)));
                    }
                    run = Some(GenerationRun {
                        kind,
                        prompt_template_id,
                        image_path,
                        iterations,
                        responses: Vec::new(),
                        failures: Vec::new(),
                        timestamp,
                        endpoint_url,
                        model_name,
                    });
                }
                LogRecord::Response { iteration, content } => responses.push((iteration, content)),
                LogRecord::Failure { iteration, error } => failures.push((iteration, error)),
            }
        }
        let mut run = run.ok_or_else(|| Error::format(source, "run log has no header line"))?;
        responses.sort_by_key(|(i, _)| *i);
        failures.sort_by_key(|(i, _)| *i);
        if responses.len() > run.iterations {
            return Err(Error::format(source, "more responses than iterations"));
        }
        run.responses = responses.into_iter().map(|(_, c)| c).collect();
        run.failures = failures;
        Ok(run)
    }

    pub fn load_log(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_log(std::io::BufReader::new(file), &path.display().to_string())
    }
}
