//! Model querying: an OpenAI-compatible chat-completions client with retry
//! and backoff, mock predictors for offline runs, and the cached batch
//! driver.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use statecheck_core::chess::fen::format_fen;
use statecheck_core::chess::random::perturb_pieces;

use crate::prompt::{build_prompt, DEFAULT_TEMPLATE_ID};
use crate::records::{append_line, open_append, read_lines, EvalRecord, RecordLine};
use crate::task::EvalTask;

/// Connection settings for the model under evaluation. The credential is
/// read from the `LLM_API_KEY` environment variable, never from files.
#[derive(Clone, Debug)]
pub struct LlmConfig {
    pub api_base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub request_timeout: Duration,
    pub max_concurrency: usize,
    pub prompt_template_id: String,
}

impl Default for LlmConfig {
    fn default() -> LlmConfig {
        LlmConfig {
            api_base_url: "https://api.openai.com/v1".to_string(),
            model_name: "gpt-4o".to_string(),
            // Reconstruction is a deterministic task; sampling noise would
            // only confound the metric comparison.
            temperature: 0.0,
            max_retries: 3,
            request_timeout: Duration::from_secs(60),
            max_concurrency: 4,
            prompt_template_id: DEFAULT_TEMPLATE_ID.to_string(),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum PredictError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("prompt construction failed: {0}")]
    Prompt(String),
    #[error("record persistence failed: {0}")]
    Persistence(String),
}

/// Anything that can answer a prompt. Implementations must be safe to call
/// from several threads at once.
pub trait Predictor: Sync {
    fn complete(&self, prompt: &str) -> Result<String, PredictError>;
}

/// HTTP predictor for OpenAI-compatible chat-completions endpoints.
/// Retries rate limits and server errors with exponential backoff; fails
/// fast on authentication errors.
pub struct HttpPredictor {
    config: LlmConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpPredictor {
    pub const API_KEY_VAR: &'static str = "LLM_API_KEY";

    pub fn new(config: LlmConfig) -> Result<HttpPredictor, PredictError> {
        let api_key = std::env::var(Self::API_KEY_VAR)
            .map_err(|_| PredictError::Auth(format!("{} is not set", Self::API_KEY_VAR)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| PredictError::Transport(e.to_string()))?;
        Ok(HttpPredictor {
            config,
            api_key,
            client,
        })
    }

    fn attempt(&self, prompt: &str) -> Result<String, PredictError> {
        let url = format!(
            "{}/chat/completions",
            self.config.api_base_url.trim_end_matches('/')
        );
        let body = json!({
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| PredictError::Transport(e.to_string()))?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(PredictError::Auth(format!("endpoint returned {status}")));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(PredictError::Transport(format!("retryable status {status}")));
        }
        if !status.is_success() {
            return Err(PredictError::BadResponse(format!("status {status}")));
        }
        let text = response
            .text()
            .map_err(|e| PredictError::Transport(e.to_string()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| PredictError::BadResponse(format!("bad JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| PredictError::BadResponse("missing message content".into()))
    }
}

impl Predictor for HttpPredictor {
    fn complete(&self, prompt: &str) -> Result<String, PredictError> {
        let mut delay = Duration::from_millis(200);
        let mut last = None;
        for _ in 0..=self.config.max_retries {
            match self.attempt(prompt) {
                Ok(answer) => return Ok(answer),
                Err(e @ PredictError::Auth(_)) => return Err(e),
                Err(e @ PredictError::BadResponse(_)) => return Err(e),
                Err(e) => {
                    last = Some(e);
                    std::thread::sleep(delay);
                    delay = (delay * 2).min(Duration::from_secs(5));
                }
            }
        }
        Err(last.unwrap_or_else(|| PredictError::Transport("no attempts made".into())))
    }
}

/// Scripted predictor for tests and offline runs: answers by prompt text.
pub struct MockPredictor {
    responses: HashMap<String, String>,
    calls: AtomicUsize,
}

impl MockPredictor {
    pub fn new(responses: HashMap<String, String>) -> MockPredictor {
        MockPredictor {
            responses,
            calls: AtomicUsize::new(0),
        }
    }

    /// Network calls this mock has served; lets tests assert cache hits.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Predictor for MockPredictor {
    fn complete(&self, prompt: &str) -> Result<String, PredictError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.responses
            .get(prompt)
            .cloned()
            .ok_or_else(|| PredictError::BadResponse("unscripted prompt".into()))
    }
}

/// Build a mock that answers every task with configurable fidelity:
/// `perturbations == 0` echoes the true FEN, otherwise it relocates that
/// many pieces before answering, wrapped in a bit of prose like a chat
/// model would.
pub struct EchoPredictor;

impl EchoPredictor {
    pub fn mock(tasks: &[EvalTask], template_id: &str, perturbations: usize, seed: u64) -> MockPredictor {
        let mut responses = HashMap::new();
        for (index, task) in tasks.iter().enumerate() {
            let prompt = build_prompt(task, template_id)
                .expect("template id was validated by the caller");
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let state = if perturbations == 0 {
                task.true_state
            } else {
                perturb_pieces(&task.true_state, perturbations, &mut rng)
            };
            let response = format!("The final position is: {}", format_fen(&state));
            responses.insert(prompt.text, response);
        }
        MockPredictor::new(responses)
    }
}

/// Query every task, reusing cached answers. Records are keyed by
/// `(prompt_fingerprint, model_name)`; cached pairs cost no network call.
/// Completed answers are appended to `cache_path` as they arrive. A task
/// whose query still fails after retries yields a record with an empty
/// response (scored as no FEN found) and is NOT cached, so the next run
/// retries it; authentication errors abort the whole batch immediately.
pub fn predict_states(
    tasks: &[EvalTask],
    predictor: &dyn Predictor,
    config: &LlmConfig,
    cache_path: &Path,
) -> Result<Vec<EvalRecord>, PredictError> {
    let cached = read_lines(cache_path).map_err(|e| PredictError::Persistence(e.to_string()))?;
    let mut cache: HashMap<(String, String), String> = HashMap::new();
    for line in cached {
        cache.insert(
            (line.prompt_fingerprint.clone(), line.model_name.clone()),
            line.raw_response,
        );
    }

    // Render prompts up front; results slot back in task order.
    let mut prompts = Vec::with_capacity(tasks.len());
    for task in tasks {
        prompts.push(
            build_prompt(task, &config.prompt_template_id)
                .map_err(|e| PredictError::Prompt(e.to_string()))?,
        );
    }

    let mut records: Vec<Option<EvalRecord>> = Vec::with_capacity(tasks.len());
    let mut pending: Vec<usize> = Vec::new();
    for (index, (task, prompt)) in tasks.iter().zip(&prompts).enumerate() {
        let key = (prompt.fingerprint.clone(), config.model_name.clone());
        match cache.get(&key) {
            Some(raw) => records.push(Some(EvalRecord::from_response(
                task.clone(),
                raw.clone(),
                &config.model_name,
                &prompt.fingerprint,
            ))),
            None => {
                records.push(None);
                pending.push(index);
            }
        }
    }

    if !pending.is_empty() {
        let file = open_append(cache_path).map_err(|e| PredictError::Persistence(e.to_string()))?;
        let appender = Mutex::new(file);
        let queue = Mutex::new(pending.into_iter());
        let results: Mutex<Vec<(usize, Result<String, PredictError>)>> = Mutex::new(Vec::new());
        let abort = AtomicBool::new(false);

        let workers = config.max_concurrency.max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        return;
                    }
                    let index = match queue.lock().unwrap().next() {
                        Some(index) => index,
                        None => return,
                    };
                    let outcome = predictor.complete(&prompts[index].text);
                    if matches!(outcome, Err(PredictError::Auth(_))) {
                        abort.store(true, Ordering::SeqCst);
                    }
                    if let Ok(raw) = &outcome {
                        let record = EvalRecord::from_response(
                            tasks[index].clone(),
                            raw.clone(),
                            &config.model_name,
                            &prompts[index].fingerprint,
                        );
                        let line = RecordLine::from_record(&record);
                        let mut file = appender.lock().unwrap();
                        // Persistence failures surface after the scope.
                        if let Err(e) = append_line(&mut file, &line) {
                            results
                                .lock()
                                .unwrap()
                                .push((index, Err(PredictError::Persistence(e.to_string()))));
                            return;
                        }
                    }
                    results.lock().unwrap().push((index, outcome));
                });
            }
        });

        for (index, outcome) in results.into_inner().unwrap() {
            match outcome {
                Ok(raw) => {
                    records[index] = Some(EvalRecord::from_response(
                        tasks[index].clone(),
                        raw,
                        &config.model_name,
                        &prompts[index].fingerprint,
                    ));
                }
                Err(e @ PredictError::Auth(_)) => return Err(e),
                Err(e @ PredictError::Persistence(_)) => return Err(e),
                Err(_) => {
                    // Transport failure after retries: keep the task with an
                    // empty response so the batch completes; not cached.
                    records[index] = Some(EvalRecord::from_response(
                        tasks[index].clone(),
                        String::new(),
                        &config.model_name,
                        &prompts[index].fingerprint,
                    ));
                }
            }
        }
    }

    Ok(records
        .into_iter()
        .map(|r| r.expect("every task resolved"))
        .collect())
}
