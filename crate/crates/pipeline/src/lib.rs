//! End-to-end experiment pipeline: cut PGN games into length-grouped
//! prefixes, prompt a model for the FEN after each prefix, parse and persist
//! its answers, and score every record with the string and affordance
//! metrics.
//!
//! Records are append-only line-delimited JSON keyed by
//! `(prompt_fingerprint, model_name)`, so interrupted runs resume without
//! re-querying anything already answered.

pub mod evaluate;
pub mod parse;
pub mod predict;
pub mod prompt;
pub mod records;
pub mod task;

pub use evaluate::{evaluate_records, EvaluatedRecord};
pub use parse::{extract_fen_span, parse_prediction};
pub use predict::{predict_states, EchoPredictor, HttpPredictor, LlmConfig, MockPredictor, PredictError, Predictor};
pub use prompt::{build_prompt, RenderedPrompt};
pub use records::{EvalRecord, ParseStatus};
pub use task::{ingest_corpus, read_tasks, write_tasks, EvalTask, IngestConfig, IngestOutcome, Shortfall, TaskLine};

/// Order-preserving map over an index range, parallel with the `parallel`
/// feature. Only order-independent work may be submitted.
pub(crate) fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
