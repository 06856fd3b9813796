//! Evaluation records and their line-delimited JSON persistence.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use statecheck_core::chess::fen::{format_fen, parse_fen};
use statecheck_core::chess::ChessState;

use crate::parse::parse_prediction;
use crate::task::EvalTask;

/// Outcome of turning a raw model response into a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    MalformedFen,
    IllegalPosition,
    NoFenFound,
}

/// One (task, response) unit flowing through the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub task: EvalTask,
    pub raw_response: String,
    /// Present iff `parse_status` is `Ok`.
    pub predicted_state: Option<ChessState>,
    pub parse_status: ParseStatus,
    pub model_name: String,
    pub prompt_fingerprint: String,
}

impl EvalRecord {
    /// Build a record by parsing a raw response for a task.
    pub fn from_response(
        task: EvalTask,
        raw_response: String,
        model_name: &str,
        prompt_fingerprint: &str,
    ) -> EvalRecord {
        let (predicted_state, parse_status) = parse_prediction(&raw_response);
        EvalRecord {
            task,
            raw_response,
            predicted_state,
            parse_status,
            model_name: model_name.to_string(),
            prompt_fingerprint: prompt_fingerprint.to_string(),
        }
    }
}

/// The on-disk shape: one JSON object per line, exactly these fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub game_id: String,
    pub group_label: usize,
    pub truncation_length: usize,
    pub moves: Vec<String>,
    pub true_fen: String,
    pub raw_response: String,
    pub predicted_fen: Option<String>,
    pub parse_status: ParseStatus,
    pub model_name: String,
    pub prompt_fingerprint: String,
}

impl RecordLine {
    pub fn from_record(record: &EvalRecord) -> RecordLine {
        RecordLine {
            game_id: record.task.game_id.clone(),
            group_label: record.task.group_label,
            truncation_length: record.task.truncation_length,
            moves: record.task.moves.iter().map(|m| m.to_string()).collect(),
            true_fen: format_fen(&record.task.true_state),
            raw_response: record.raw_response.clone(),
            predicted_fen: record.predicted_state.as_ref().map(format_fen),
            parse_status: record.parse_status,
            model_name: record.model_name.clone(),
            prompt_fingerprint: record.prompt_fingerprint.clone(),
        }
    }

    /// Rebuild the in-memory record, replaying the stored fields.
    pub fn into_record(self) -> Result<EvalRecord, RecordError> {
        let moves = self
            .moves
            .iter()
            .map(|m| m.parse().map_err(|_| RecordError::BadMove(m.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let true_state =
            parse_fen(&self.true_fen).map_err(|e| RecordError::BadFen(e.to_string()))?;
        let task = EvalTask {
            game_id: self.game_id,
            moves,
            truncation_length: self.truncation_length,
            group_label: self.group_label,
            true_state,
        };
        // Re-parse the raw response rather than trusting the stored state,
        // so parser fixes apply to cached records on the next run.
        let (predicted_state, parse_status) = parse_prediction(&self.raw_response);
        Ok(EvalRecord {
            task,
            raw_response: self.raw_response,
            predicted_state,
            parse_status,
            model_name: self.model_name,
            prompt_fingerprint: self.prompt_fingerprint,
        })
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("unparseable stored move `{0}`")]
    BadMove(String),
    #[error("unparseable stored FEN: {0}")]
    BadFen(String),
    #[error("line {line}: {source}")]
    BadLine {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Append one record as a JSON line, flushing immediately so interrupted
/// runs keep everything completed so far.
pub fn append_line(file: &mut File, line: &RecordLine) -> Result<(), RecordError> {
    let mut text = serde_json::to_string(line).expect("record lines serialize");
    text.push('\n');
    file.write_all(text.as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn open_append(path: &Path) -> Result<File, RecordError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(OpenOptions::new().create(true).append(true).open(path)?)
}

/// Read every record line from a file; missing file is an empty list.
pub fn read_lines(path: &Path) -> Result<Vec<RecordLine>, RecordError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&line)
            .map_err(|source| RecordError::BadLine {
                line: index + 1,
                source,
            })?;
        lines.push(parsed);
    }
    Ok(lines)
}
