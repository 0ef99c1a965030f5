// SPDX-License-Identifier: Apache-2.0

//! Completion clients: where repair prompts go and fixed RTL comes from.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClientError {
    #[error("scripted client has no response left for prompt {0}")]
    Exhausted(usize),
    #[error("completion request failed: {0}")]
    Transport(String),
    #[error("completion timed out after {0} ms")]
    Timeout(u64),
    #[error("malformed completion response: {0}")]
    Malformed(String),
}

pub trait CompletionClient {
    fn complete(&mut self, prompt: &str) -> Result<String, ClientError>;
}

/// Replays a fixed list of responses in order and keeps every prompt it saw.
#[derive(Debug, Clone, Default)]
pub struct MockClient {
    responses: VecDeque<String>,
    pub prompts: Vec<String>,
}

impl MockClient {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        MockClient { responses: responses.into_iter().map(Into::into).collect(), prompts: Vec::new() }
    }

    /// Reads a JSON array of response strings.
    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError::Transport(format!("{}: {e}", path.display())))?;
        let list: Vec<String> = serde_json::from_str(&text).map_err(|e| ClientError::Malformed(e.to_string()))?;
        Ok(MockClient::new(list))
    }

    pub fn remaining(&self) -> usize {
        self.responses.len()
    }
}

impl CompletionClient for MockClient {
    fn complete(&mut self, prompt: &str) -> Result<String, ClientError> {
        self.prompts.push(prompt.to_string());
        self.responses.pop_front().ok_or(ClientError::Exhausted(self.prompts.len()))
    }
}

/// POSTs `{"prompt": ...}` and reads `{"text": ...}` back.
#[derive(Debug, Clone)]
pub struct HttpClient {
    pub url: String,
    pub timeout: Duration,
}

impl CompletionClient for HttpClient {
    fn complete(&mut self, prompt: &str) -> Result<String, ClientError> {
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let resp = agent.post(&self.url).send_json(serde_json::json!({ "prompt": prompt })).map_err(|e| match e {
            ureq::Error::Transport(t) if t.kind() == ureq::ErrorKind::Io && t.to_string().contains("timed out") => {
                ClientError::Timeout(self.timeout.as_millis() as u64)
            }
            other => ClientError::Transport(other.to_string()),
        })?;
        let body: serde_json::Value = resp.into_json().map_err(|e| ClientError::Malformed(e.to_string()))?;
        body.get("text")
            .and_then(|t| t.as_str())
            .map(str::to_string)
            .ok_or_else(|| ClientError::Malformed("no string field `text`".into()))
    }
}

/// Runs a command per prompt: prompt on stdin, response on stdout.
#[derive(Debug, Clone)]
pub struct CommandClient {
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl CompletionClient for CommandClient {
    fn complete(&mut self, prompt: &str) -> Result<String, ClientError> {
        let (prog, args) = self.command.split_first().ok_or_else(|| ClientError::Transport("empty command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ClientError::Transport(format!("cannot launch `{prog}`: {e}")))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let text = prompt.to_string();
        // Write on a thread so a child that never reads cannot block us.
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        });
        let mut out = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = out.read_to_end(&mut buf);
            buf
        });
        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(s)) => break s,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ClientError::Timeout(self.timeout.as_millis() as u64));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(2)),
                Err(e) => return Err(ClientError::Transport(e.to_string())),
            }
        };
        let _ = writer.join();
        let buf = reader.join().unwrap_or_default();
        if !status.success() {
            let mut err = String::new();
            if let Some(mut e) = child.stderr.take() {
                let _ = e.read_to_string(&mut err);
            }
            return Err(ClientError::Transport(format!("`{prog}` exited with {status}: {}", err.trim())));
        }
        String::from_utf8(buf).map_err(|e| ClientError::Malformed(e.to_string()))
    }
}

/// Client configuration as it appears in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ClientSpec {
    /// A JSON array of responses.
    Mock { responses: std::path::PathBuf },
    Http {
        url: String,
        #[serde(default = "default_client_timeout")]
        timeout_ms: u64,
    },
    Command {
        command: Vec<String>,
        #[serde(default = "default_client_timeout")]
        timeout_ms: u64,
    },
}

fn default_client_timeout() -> u64 {
    120_000
}

impl ClientSpec {
    pub fn build(&self) -> Result<Box<dyn CompletionClient>, ClientError> {
        Ok(match self {
            ClientSpec::Mock { responses } => Box::new(MockClient::from_file(responses)?),
            ClientSpec::Http { url, timeout_ms } => {
                Box::new(HttpClient { url: url.clone(), timeout: Duration::from_millis(*timeout_ms) })
            }
            ClientSpec::Command { command, timeout_ms } => {
                Box::new(CommandClient { command: command.clone(), timeout: Duration::from_millis(*timeout_ms) })
            }
        })
    }
}

/// Pulls module text out of a response. Fenced code wins when present;
/// otherwise the span from `module` to the last `endmodule`; otherwise the
/// response as is.
pub fn extract_module(response: &str) -> String {
    let mut fenced = String::new();
    let mut inside = false;
    let mut found = false;
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            if inside && found {
                break;
            }
            inside = !inside;
            continue;
        }
        if inside {
            fenced.push_str(line);
            fenced.push('\n');
            found = true;
        }
    }
    if found && fenced.contains("module") {
        return fenced;
    }
    if let (Some(a), Some(b)) = (find_word(response, "module"), response.rfind("endmodule")) {
        if a <= b {
            return format!("{}\n", &response[a..b + "endmodule".len()]);
        }
    }
    response.to_string()
}

fn find_word(s: &str, w: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    s.match_indices(w).map(|(i, _)| i).find(|&i| {
        let before = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        let j = i + w.len();
        let after = j >= bytes.len() || !(bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_');
        before && after
    })
}
