use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variable holding the bearer token for [`HttpEndpoint`].
pub const API_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Body of a chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn user(model: &str, prompt: String, temperature: f64) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt,
            }],
            temperature,
        }
    }

    pub fn prompt(&self) -> &str {
        self.messages.first().map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EndpointError {
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unusable response: {0}")]
    BadResponse(String),
}

/// A chat-completion service. Implementations must be callable from several
/// threads at once.
pub trait ChatEndpoint: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError>;
}

/// Answers every request with the same text.
#[derive(Debug, Clone)]
pub struct FixedEndpoint(pub String);

impl ChatEndpoint for FixedEndpoint {
    fn complete(&self, _request: &ChatRequest) -> Result<String, EndpointError> {
        Ok(self.0.clone())
    }
}

const BODY_EXCERPT: usize = 200;

fn excerpt(body: &str) -> String {
    body.chars().take(BODY_EXCERPT).collect()
}

/// Extracts the first choice's message text from a chat-completion response.
pub fn parse_completion(body: &str) -> Result<String, EndpointError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| EndpointError::BadResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| EndpointError::BadResponse(format!("no message text in {}", excerpt(body))))
}

/// Chat-completion endpoint reached over HTTP(S) with a JSON POST.
pub struct HttpEndpoint {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            api_key,
            agent,
        }
    }

    /// Reads the key from [`API_KEY_ENV`]; a missing variable means no
    /// `Authorization` header.
    pub fn from_env(url: impl Into<String>, timeout: Duration) -> Self {
        Self::new(url, std::env::var(API_KEY_ENV).ok(), timeout)
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError> {
        let mut req = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(request).map_err(|e| match e {
            ureq::Error::Timeout(_) => EndpointError::Timeout,
            other => EndpointError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => EndpointError::Timeout,
            other => EndpointError::Transport(other.to_string()),
        })?;
        if !(200..300).contains(&status) {
            return Err(EndpointError::Status {
                status,
                body: excerpt(&body),
            });
        }
        parse_completion(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_body_shape() {
        let r = ChatRequest::user("gpt-3.5-turbo-0301", "hi\nTl;dr:".into(), 0.0);
        let v: Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["model"], "gpt-3.5-turbo-0301");
        assert_eq!(v["messages"][0]["role"], "user");
        assert_eq!(v["messages"][0]["content"], "hi\nTl;dr:");
        assert_eq!(v["temperature"], 0.0);
    }

    #[test]
    fn completion_parsing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"A summary."}}]}"#;
        assert_eq!(parse_completion(body).unwrap(), "A summary.");
        assert!(matches!(
            parse_completion(r#"{"choices":[]}"#),
            Err(EndpointError::BadResponse(_))
        ));
        assert!(parse_completion("not json").is_err());
    }
}
