use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Where and how to send chat-completion requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    pub temperature: f64,
    /// Extra attempts after a failed request.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
    /// Concurrent requests.
    pub parallelism: usize,
    pub timeout_secs: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            temperature: 1.0,
            retries: 2,
            backoff_ms: 500,
            parallelism: 4,
            timeout_secs: 120,
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

/// An image attached to the prompt, already base64 encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePart {
    pub mime: &'static str,
    pub base64: String,
}

impl ImagePart {
    pub fn load(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let mime = match ext.as_str() {
            "png" => "image/png",
            "jpg" | "jpeg" => "image/jpeg",
            "gif" => "image/gif",
            "webp" => "image/webp",
            _ => return Err(Error::format(path, "unsupported image type (png, jpeg, gif or webp)")),
        };
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(ImagePart {
            mime,
            base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        })
    }

    fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.mime, self.base64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    pub image: Option<ImagePart>,
}

impl ChatRequest {
    /// Request body in the chat-completions wire format.
    pub fn body(&self) -> Value {
        let content = match &self.image {
            None => json!(self.prompt),
            Some(img) => json!([
                { "type": "text", "text": self.prompt },
                { "type": "image_url", "image_url": { "url": img.data_url() } },
            ]),
        };
        json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{ "role": "user", "content": content }],
        })
    }
}

/// Sends one request and returns the assistant text, or a description of
/// what went wrong.
pub trait ChatTransport: Sync {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, String>;
}

/// Pulls the assistant text out of a chat-completions response.
pub fn extract_content(response: &Value) -> std::result::Result<String, String> {
    let content = response
        .pointer("/choices/0/message/content")
        .ok_or_else(|| format!("response has no choices[0].message.content: {response}"))?;
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        other => Err(format!("unexpected content {other}")),
    }
}

pub struct HttpTransport {
    url: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    /// Reads the API key from the configured environment variable; a missing
    /// or empty key is an error.
    pub fn from_config(config: &EndpointConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| Error::Generation(format!("API key variable {} is not set", config.api_key_env)))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpTransport {
            url: config.url.clone(),
            api_key,
            agent,
        })
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, String> {
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(request.body())
            .map_err(|e| e.to_string())?;
        let status = response.status();
        let text = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!("HTTP {status}: {}", text.trim()));
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| format!("invalid JSON response: {e}"))?;
        extract_content(&value)
    }
}
