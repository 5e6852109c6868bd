use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{check_history, ChatProvider, ProviderError, ProviderInfo, ProviderSource};
use crate::mission::{DialogueHistory, Message};
use crate::secret::Secret;

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    /// Root of a chat-completion API, e.g. `https://api.example.com/v1`.
    pub base_url: String,
    pub model_name: String,
    pub api_key: Secret,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub temperature: f64,
    /// First backoff delay; doubles per retry.
    pub retry_base_delay: Duration,
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>, api_key: Secret) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key,
            request_timeout: Duration::from_secs(120),
            max_retries: 3,
            temperature: 0.0,
            retry_base_delay: Duration::from_millis(500),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let url = url::Url::parse(&self.base_url)
            .map_err(|e| ProviderError::InvalidConfig(format!("base_url: {e}")))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(ProviderError::InvalidConfig(format!(
                "base_url scheme must be http(s), got {}",
                url.scheme()
            )));
        }
        if self.max_retries > 10 {
            return Err(ProviderError::InvalidConfig("max_retries must be <= 10".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidConfig("temperature must be in [0, 2]".into()));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub message: Message,
    pub retries: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

enum Attempt {
    Done(Message),
    Retry(String),
    Fatal(ProviderError),
}

fn attempt(agent: &ureq::Agent, config: &ProviderConfig, body: &str) -> Attempt {
    let result = agent
        .post(&config.endpoint())
        .header("Content-Type", "application/json")
        .header(
            "Authorization",
            &format!("Bearer {}", config.api_key.expose()),
        )
        .send(body);
    let mut response = match result {
        Ok(r) => r,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    let status = response.status().as_u16();
    let text = match response.body_mut().read_to_string() {
        Ok(t) => t,
        Err(e) => return Attempt::Retry(format!("reading body: {e}")),
    };
    match status {
        200..=299 => match serde_json::from_str::<CompletionResponse>(&text) {
            Ok(parsed) => match parsed.choices.into_iter().next() {
                Some(Choice {
                    message: ChoiceMessage { content: Some(c) },
                }) => Attempt::Done(Message::assistant(c)),
                _ => Attempt::Fatal(ProviderError::MalformedResponse(
                    "no choices[0].message.content".into(),
                )),
            },
            Err(e) => Attempt::Fatal(ProviderError::MalformedResponse(e.to_string())),
        },
        401 | 403 => Attempt::Fatal(ProviderError::AuthError { status }),
        408 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
        _ => Attempt::Fatal(ProviderError::Rejected {
            status,
            body: text.chars().take(500).collect(),
        }),
    }
}

fn build_agent(config: &ProviderConfig) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(config.request_timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn request_body(config: &ProviderConfig, history: &DialogueHistory) -> String {
    let messages: Vec<_> = history
        .messages()
        .iter()
        .map(|m| json!({ "role": m.role.as_str(), "content": m.content }))
        .collect();
    json!({
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
    })
    .to_string()
}

fn send_with(
    agent: &ureq::Agent,
    config: &ProviderConfig,
    history: &DialogueHistory,
) -> Result<ChatReply, ProviderError> {
    check_history(history)?;
    let body = request_body(config, history);
    let mut retries = 0;
    loop {
        match attempt(agent, config, &body) {
            Attempt::Done(message) => return Ok(ChatReply { message, retries }),
            Attempt::Fatal(e) => return Err(e),
            Attempt::Retry(reason) => {
                if retries >= config.max_retries {
                    return Err(ProviderError::NetworkError {
                        retries,
                        message: reason,
                    });
                }
                let delay = config.retry_base_delay.saturating_mul(1 << retries.min(16));
                log::warn!("chat request failed ({reason}); retry {} in {delay:?}", retries + 1);
                thread::sleep(delay);
                retries += 1;
            }
        }
    }
}

/// Sends the whole history and returns the assistant reply. Transient
/// failures (transport errors, 408, 429, 5xx) are retried with exponential
/// backoff; 401/403 fail immediately.
pub fn send_chat(
    config: &ProviderConfig,
    history: &DialogueHistory,
) -> Result<ChatReply, ProviderError> {
    config.validate()?;
    send_with(&build_agent(config), config, history)
}

/// Live chat-completion client. Cloning shares the connection pool and the
/// retry counter.
#[derive(Clone)]
pub struct LiveProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
    retries: Arc<AtomicU32>,
}

impl LiveProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        Ok(Self {
            agent: build_agent(&config),
            config,
            retries: Arc::new(AtomicU32::new(0)),
        })
    }

    pub fn send_chat(&self, history: &DialogueHistory) -> Result<ChatReply, ProviderError> {
        let reply = send_with(&self.agent, &self.config, history)?;
        self.retries.fetch_add(reply.retries, Ordering::Relaxed);
        Ok(reply)
    }

    /// Retries spent by successful calls so far.
    pub fn total_retries(&self) -> u32 {
        self.retries.load(Ordering::Relaxed)
    }
}

impl ChatProvider for LiveProvider {
    fn complete(&mut self, history: &DialogueHistory) -> Result<Message, ProviderError> {
        self.send_chat(history).map(|r| r.message)
    }

    fn info(&self) -> ProviderInfo {
        ProviderInfo {
            mode: "live".into(),
            model: self.config.model_name.clone(),
            temperature: Some(self.config.temperature),
        }
    }
}

/// Every mission gets a clone of the same client.
pub struct LiveSource(pub LiveProvider);

impl ProviderSource for LiveSource {
    fn open(&self, _mission: &str) -> Result<Box<dyn ChatProvider>, ProviderError> {
        Ok(Box::new(self.0.clone()))
    }
}
