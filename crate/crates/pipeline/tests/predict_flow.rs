//! End-to-end prediction flow: caching, cache-key invalidation, and the
//! HTTP client's retry behavior against a local server.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use statecheck_core::chess::fen::format_fen;
use statecheck_core::chess::pgn::parse_pgn;
use statecheck_pipeline::records::read_lines;
use statecheck_pipeline::{
    ingest_corpus, predict_states, EchoPredictor, HttpPredictor, IngestConfig, LlmConfig,
    MockPredictor, ParseStatus, Predictor,
};

fn small_tasks(n: usize) -> Vec<statecheck_pipeline::EvalTask> {
    let text = "\
[Event \"a\"]\n\n1. e4 e5 2. Nf3 Nc6 3. Bb5 a6 *\n
[Event \"b\"]\n\n1. d4 d5 2. c4 e6 3. Nc3 Nf6 *\n
[Event \"c\"]\n\n1. c4 e5 2. Nc3 Nf6 3. Nf3 Nc6 *\n
[Event \"d\"]\n\n1. Nf3 d5 2. g3 c5 3. Bg2 Nc6 *\n";
    let corpus = parse_pgn(text);
    assert!(corpus.skipped.is_empty());
    let outcome = ingest_corpus(
        &corpus.games,
        &IngestConfig {
            group_lengths: vec![4],
            group_size: n,
            min_length_guard: 1,
            seed: 1,
            dedup: false,
        },
    );
    assert_eq!(outcome.tasks.len(), n);
    outcome.tasks
}

#[test]
fn echo_mock_closes_the_loop_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("records.jsonl");
    let tasks = small_tasks(3);
    let config = LlmConfig {
        model_name: "mock-echo".into(),
        ..LlmConfig::default()
    };
    let mock = EchoPredictor::mock(&tasks, &config.prompt_template_id, 0, 0);

    let records = predict_states(&tasks, &mock, &config, &cache).unwrap();
    assert_eq!(mock.calls(), 3);
    for record in &records {
        assert_eq!(record.parse_status, ParseStatus::Ok);
        assert_eq!(
            record.predicted_state.as_ref().map(format_fen),
            Some(format_fen(&record.task.true_state))
        );
    }
    let persisted_once = std::fs::read(&cache).unwrap();

    // Rerun over the fully cached set: zero new calls, file untouched.
    let rerun = predict_states(&tasks, &mock, &config, &cache).unwrap();
    assert_eq!(mock.calls(), 3);
    assert_eq!(rerun.len(), 3);
    assert_eq!(std::fs::read(&cache).unwrap(), persisted_once);

    // Records come back in task order with the documented fields.
    let lines = read_lines(&cache).unwrap();
    assert_eq!(lines.len(), 3);
    for line in lines {
        assert_eq!(line.model_name, "mock-echo");
        assert_eq!(line.moves.len(), 4);
    }
}

#[test]
fn changing_model_or_template_invalidates_exactly_those_records() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("records.jsonl");
    let tasks = small_tasks(2);
    let config = LlmConfig {
        model_name: "model-one".into(),
        ..LlmConfig::default()
    };
    let mock = EchoPredictor::mock(&tasks, &config.prompt_template_id, 0, 0);
    predict_states(&tasks, &mock, &config, &cache).unwrap();
    assert_eq!(mock.calls(), 2);

    // Same tasks under another model name: full re-query.
    let other_model = LlmConfig {
        model_name: "model-two".into(),
        ..config.clone()
    };
    predict_states(&tasks, &mock, &other_model, &cache).unwrap();
    assert_eq!(mock.calls(), 4);

    // Back to the first model: everything cached again, and one extra task
    // queries exactly once.
    let tasks3 = small_tasks(3);
    let mock3 = EchoPredictor::mock(&tasks3, &config.prompt_template_id, 0, 0);
    predict_states(&tasks3, &mock3, &config, &cache).unwrap();
    assert_eq!(mock3.calls(), 1);
}

#[test]
fn corrupting_mock_degrades_without_breaking_parse() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = small_tasks(3);
    let config = LlmConfig {
        model_name: "mock-corrupt".into(),
        ..LlmConfig::default()
    };
    let mock = EchoPredictor::mock(&tasks, &config.prompt_template_id, 2, 7);
    let records =
        predict_states(&tasks, &mock, &config, &dir.path().join("r.jsonl")).unwrap();
    for record in &records {
        assert_eq!(record.parse_status, ParseStatus::Ok, "{}", record.raw_response);
        assert_ne!(
            record.predicted_state.as_ref().map(format_fen),
            Some(format_fen(&record.task.true_state))
        );
    }
}

struct FailingPredictor;

impl Predictor for FailingPredictor {
    fn complete(&self, _prompt: &str) -> Result<String, statecheck_pipeline::PredictError> {
        Err(statecheck_pipeline::PredictError::Transport("down".into()))
    }
}

#[test]
fn transport_failures_keep_the_batch_alive_and_are_not_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("records.jsonl");
    let tasks = small_tasks(2);
    let config = LlmConfig::default();
    let records = predict_states(&tasks, &FailingPredictor, &config, &cache).unwrap();
    assert_eq!(records.len(), 2);
    for record in &records {
        assert_eq!(record.raw_response, "");
        assert_eq!(record.parse_status, ParseStatus::NoFenFound);
    }
    assert!(read_lines(&cache).unwrap().is_empty());
}

/// Minimal scripted HTTP server: each connection gets the next canned
/// (status, body) response.
fn spawn_server(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_clone = hits.clone();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = match listener.accept() {
                Ok(pair) => pair,
                Err(_) => return,
            };
            hits_clone.fetch_add(1, Ordering::SeqCst);
            // Drain the request headers and body far enough to respond.
            let mut buffer = [0u8; 65536];
            let _ = stream.read(&mut buffer);
            let reason = match status {
                200 => "OK",
                401 => "Unauthorized",
                429 => "Too Many Requests",
                _ => "Internal Server Error",
            };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (format!("http://{addr}"), hits)
}

/// Serializes tests that touch the shared API-key environment variable.
fn env_lock() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    match LOCK.get_or_init(|| Mutex::new(())).lock() {
        Ok(guard) => guard,
        Err(poisoned) => poisoned.into_inner(),
    }
}

fn chat_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

#[test]
fn http_predictor_parses_chat_completions() {
    let _guard = env_lock();
    let fen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
    let (base, hits) = spawn_server(vec![(200, chat_body(fen))]);
    std::env::set_var(HttpPredictor::API_KEY_VAR, "test-key");
    let predictor = HttpPredictor::new(LlmConfig {
        api_base_url: base,
        max_retries: 0,
        ..LlmConfig::default()
    })
    .unwrap();
    assert_eq!(predictor.complete("hello").unwrap(), fen);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn http_predictor_retries_rate_limits_then_succeeds() {
    let _guard = env_lock();
    let (base, hits) = spawn_server(vec![
        (429, "{}".into()),
        (500, "{}".into()),
        (200, chat_body("answer")),
    ]);
    std::env::set_var(HttpPredictor::API_KEY_VAR, "test-key");
    let predictor = HttpPredictor::new(LlmConfig {
        api_base_url: base,
        max_retries: 3,
        ..LlmConfig::default()
    })
    .unwrap();
    assert_eq!(predictor.complete("hello").unwrap(), "answer");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn http_predictor_fails_fast_on_auth_errors() {
    let _guard = env_lock();
    let (base, hits) = spawn_server(vec![(401, "{}".into()), (200, chat_body("never"))]);
    std::env::set_var(HttpPredictor::API_KEY_VAR, "test-key");
    let predictor = HttpPredictor::new(LlmConfig {
        api_base_url: base,
        max_retries: 5,
        ..LlmConfig::default()
    })
    .unwrap();
    match predictor.complete("hello") {
        Err(statecheck_pipeline::PredictError::Auth(_)) => {}
        other => panic!("expected auth error, got {other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn missing_api_key_is_an_auth_error() {
    let _guard = env_lock();
    std::env::remove_var(HttpPredictor::API_KEY_VAR);
    match HttpPredictor::new(LlmConfig::default()) {
        Err(statecheck_pipeline::PredictError::Auth(message)) => {
            assert!(message.contains("LLM_API_KEY"));
        }
        other => panic!("expected auth error, got {:?}", other.map(|_| ())),
    }
}

/// A mock that needs no scripting because it always answers the same thing.
struct ConstantPredictor(String);

impl Predictor for ConstantPredictor {
    fn complete(&self, _prompt: &str) -> Result<String, statecheck_pipeline::PredictError> {
        Ok(self.0.clone())
    }
}

#[test]
fn unscripted_mock_reports_bad_response() {
    let mock = MockPredictor::new(HashMap::new());
    assert!(mock.complete("anything").is_err());
    let constant = ConstantPredictor("no fen".into());
    assert_eq!(constant.complete("x").unwrap(), "no fen");
}
