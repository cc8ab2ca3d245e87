//! Adapter for a real masked language model running out of process.
//!
//! The backend talks line-delimited JSON to a server subprocess (by default
//! `python3 scripts/mlm_server.py`). The server announces itself with
//! `{"ready": true, "mask_literal": "[MASK]"}` on startup, then answers each
//! `{"id": n, "sentence": ..., "words": [...]}` request with
//! `{"id": n, "logits": [..]}`, using `null` for words it cannot score as a
//! single token.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{MaskBackend, ScoreError};

/// Configuration of the adapter: which model to serve and how to launch the
/// server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainedConfig {
    /// Model identifier, e.g. `bert-large-uncased` or a local weights dir.
    pub model: String,
    #[serde(default = "default_device")]
    pub device: String,
    /// Server launch command; defaults to `python3 scripts/mlm_server.py`.
    /// `--model` and `--device` are appended.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// Overrides the mask literal announced by the server.
    #[serde(default)]
    pub mask_literal: Option<String>,
}

fn default_device() -> String {
    "cpu".to_string()
}

impl PretrainedConfig {
    pub fn new(model: impl Into<String>) -> Self {
        PretrainedConfig {
            model: model.into(),
            device: default_device(),
            command: None,
            mask_literal: None,
        }
    }

    fn launch_command(&self) -> Vec<String> {
        let mut cmd = self.command.clone().unwrap_or_else(|| {
            vec!["python3".to_string(), "scripts/mlm_server.py".to_string()]
        });
        cmd.push("--model".to_string());
        cmd.push(self.model.clone());
        cmd.push("--device".to_string());
        cmd.push(self.device.clone());
        cmd
    }
}

#[derive(Deserialize)]
struct Handshake {
    ready: bool,
    mask_literal: String,
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    sentence: &'a str,
    words: &'a [String],
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    #[serde(default)]
    logits: Option<Vec<Option<f64>>>,
    #[serde(default)]
    error: Option<String>,
}

struct ServerIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

pub(super) struct PretrainedBackend {
    io: Mutex<ServerIo>,
    server_mask_literal: String,
}

impl PretrainedBackend {
    pub(super) fn spawn(config: &PretrainedConfig) -> Result<Self, ScoreError> {
        if config.model.is_empty() {
            return Err(ScoreError::EmptyIdentifier);
        }
        let cmd = config.launch_command();
        let mut child = Command::new(&cmd[0])
            .args(&cmd[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ScoreError::Backend(format!("failed to launch `{}`: {e}", cmd[0])))?;
        let stdin = child.stdin.take().expect("stdin piped");
        let mut stdout = BufReader::new(child.stdout.take().expect("stdout piped"));

        let mut line = String::new();
        stdout
            .read_line(&mut line)
            .map_err(|e| ScoreError::Backend(format!("no handshake from server: {e}")))?;
        let handshake: Handshake = serde_json::from_str(line.trim()).map_err(|e| {
            ScoreError::Backend(format!("bad handshake `{}`: {e}", line.trim()))
        })?;
        if !handshake.ready {
            return Err(ScoreError::Backend("server reported not ready".into()));
        }

        Ok(PretrainedBackend {
            io: Mutex::new(ServerIo {
                child,
                stdin,
                stdout,
                next_id: 0,
            }),
            server_mask_literal: handshake.mask_literal,
        })
    }

    pub(super) fn server_mask_literal(&self) -> &str {
        &self.server_mask_literal
    }
}

impl MaskBackend for PretrainedBackend {
    fn mask_logits(
        &self,
        sentence: &str,
        words: &[String],
    ) -> Result<Vec<Option<f64>>, ScoreError> {
        let mut io = self.io.lock().expect("server mutex poisoned");
        io.next_id += 1;
        let id = io.next_id;
        let request = serde_json::to_string(&Request {
            id,
            sentence,
            words,
        })
        .expect("request serializes");
        writeln!(io.stdin, "{request}")
            .and_then(|()| io.stdin.flush())
            .map_err(|e| ScoreError::Backend(format!("server write failed: {e}")))?;

        let mut line = String::new();
        let n = io
            .stdout
            .read_line(&mut line)
            .map_err(|e| ScoreError::Backend(format!("server read failed: {e}")))?;
        if n == 0 {
            return Err(ScoreError::Backend("server closed the connection".into()));
        }
        let response: Response = serde_json::from_str(line.trim())
            .map_err(|e| ScoreError::Backend(format!("bad response `{}`: {e}", line.trim())))?;
        if response.id != id {
            return Err(ScoreError::Backend(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        if let Some(message) = response.error {
            return Err(ScoreError::Backend(message));
        }
        let logits = response
            .logits
            .ok_or_else(|| ScoreError::Backend("response carries neither logits nor error".into()))?;
        if logits.len() != words.len() {
            return Err(ScoreError::Backend(format!(
                "expected {} logits, got {}",
                words.len(),
                logits.len()
            )));
        }
        Ok(logits)
    }
}

impl Drop for PretrainedBackend {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            // closing stdin asks the server to exit; kill as a fallback
            let _ = io.stdin.flush();
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}
