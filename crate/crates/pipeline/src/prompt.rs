//! Versioned prompt templates and deterministic prompt construction.

use sha2::{Digest, Sha256};
use thiserror::Error;

use statecheck_core::chess::san::render_movetext;
use statecheck_core::chess::ChessState;

use crate::task::EvalTask;

/// The default template. Keeping templates versioned in one place means a
/// wording change shows up as a new id and never silently reuses a cache.
pub const DEFAULT_TEMPLATE_ID: &str = "fen-reconstruction-v1";

const FEN_RECONSTRUCTION_V1: &str = "\
You are given the moves of a chess game in standard algebraic notation, \
starting from the usual initial position.

Moves: {moves}

Reply with the resulting position encoded as a single FEN string \
(piece placement, side to move, castling rights, en passant target, \
halfmove clock, fullmove number) and nothing else.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown prompt template `{0}`")]
pub struct UnknownTemplate(pub String);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    /// SHA-256 over the template id and rendered text; the cache key half
    /// that, together with the model name, identifies an answer.
    pub fingerprint: String,
}

fn template_body(template_id: &str) -> Result<&'static str, UnknownTemplate> {
    match template_id {
        DEFAULT_TEMPLATE_ID => Ok(FEN_RECONSTRUCTION_V1),
        other => Err(UnknownTemplate(other.to_string())),
    }
}

pub fn fingerprint(template_id: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(template_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

/// Render the prompt for a task. Deterministic: the same task and template
/// always produce the same text and fingerprint.
pub fn build_prompt(task: &EvalTask, template_id: &str) -> Result<RenderedPrompt, UnknownTemplate> {
    let body = template_body(template_id)?;
    let movetext = if task.moves.is_empty() {
        "(no moves have been played; the game is still in the initial position)".to_string()
    } else {
        render_movetext(&ChessState::initial(), &task.moves)
            .expect("task prefixes replay from the initial position")
    };
    let text = body.replace("{moves}", &movetext);
    let fingerprint = fingerprint(template_id, &text);
    Ok(RenderedPrompt { text, fingerprint })
}
