//! Corpus ingestion: assign games to length groups and truncate them into
//! evaluation tasks with replayed true states.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use statecheck_core::chess::pgn::GameRecord;
use statecheck_core::chess::{ChessState, UciMove};
use statecheck_core::chess::movegen::apply_move;

/// One evaluation unit: a truncated game prefix plus the state it reaches.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTask {
    pub game_id: String,
    /// The truncated prefix, exactly `truncation_length` plies.
    pub moves: Vec<UciMove>,
    /// Prefix length in plies (half-moves). The CLI reports both plies and
    /// full moves since corpora are usually described in the latter.
    pub truncation_length: usize,
    pub group_label: usize,
    pub true_state: ChessState,
}

#[derive(Clone, Debug)]
pub struct IngestConfig {
    /// Truncation lengths in plies, one group per entry.
    pub group_lengths: Vec<usize>,
    /// Target number of tasks per group.
    pub group_size: usize,
    /// A game must be at least `length + min_length_guard` plies long to
    /// join a group; 1 keeps only games strictly longer than the prefix.
    pub min_length_guard: usize,
    pub seed: u64,
    /// Drop exact duplicate move sequences before grouping.
    pub dedup: bool,
}

impl Default for IngestConfig {
    fn default() -> IngestConfig {
        IngestConfig {
            group_lengths: vec![5, 15, 25, 35, 50],
            group_size: 2000,
            min_length_guard: 1,
            seed: 0,
            dedup: false,
        }
    }
}

/// A group the corpus could not fill.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("group {group_label}: wanted {requested} tasks, corpus only provided {filled}")]
pub struct Shortfall {
    pub group_label: usize,
    pub requested: usize,
    pub filled: usize,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOutcome {
    pub tasks: Vec<EvalTask>,
    pub shortfalls: Vec<Shortfall>,
}

/// On-disk form of a task: one JSON object per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskLine {
    pub game_id: String,
    pub group_label: usize,
    pub truncation_length: usize,
    pub moves: Vec<String>,
    pub true_fen: String,
}

impl TaskLine {
    pub fn from_task(task: &EvalTask) -> TaskLine {
        TaskLine {
            game_id: task.game_id.clone(),
            group_label: task.group_label,
            truncation_length: task.truncation_length,
            moves: task.moves.iter().map(|m| m.to_string()).collect(),
            true_fen: statecheck_core::chess::fen::format_fen(&task.true_state),
        }
    }

    pub fn into_task(self) -> Result<EvalTask, String> {
        let moves: Vec<UciMove> = self
            .moves
            .iter()
            .map(|m| m.parse().map_err(|_| format!("bad move `{m}`")))
            .collect::<Result<_, String>>()?;
        let true_state = statecheck_core::chess::fen::parse_fen(&self.true_fen)
            .map_err(|e| e.to_string())?;
        Ok(EvalTask {
            game_id: self.game_id,
            moves,
            truncation_length: self.truncation_length,
            group_label: self.group_label,
            true_state,
        })
    }
}

/// Write tasks as line-delimited JSON.
pub fn write_tasks(path: &std::path::Path, tasks: &[EvalTask]) -> std::io::Result<()> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    for task in tasks {
        let line = serde_json::to_string(&TaskLine::from_task(task)).expect("tasks serialize");
        writeln!(file, "{line}")?;
    }
    file.flush()
}

/// Read tasks back from line-delimited JSON.
pub fn read_tasks(path: &std::path::Path) -> Result<Vec<EvalTask>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut tasks = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TaskLine = serde_json::from_str(line)
            .map_err(|e| format!("tasks line {}: {e}", index + 1))?;
        tasks.push(parsed.into_task().map_err(|e| format!("tasks line {}: {e}", index + 1))?);
    }
    Ok(tasks)
}

fn replay_prefix(moves: &[UciMove]) -> Option<ChessState> {
    let mut state = ChessState::initial();
    for &mv in moves {
        state = apply_move(&state, mv)?;
    }
    Some(state)
}

/// Partition games into length groups and truncate. Each game is used at
/// most once; assignment order is a seeded shuffle, so the same corpus,
/// config, and seed always select the same tasks. Groups that cannot be
/// filled are reported in `shortfalls` and filled as far as possible.
pub fn ingest_corpus(games: &[GameRecord], config: &IngestConfig) -> IngestOutcome {
    let mut order: Vec<usize> = (0..games.len()).collect();
    if config.dedup {
        let mut seen = std::collections::HashSet::new();
        order.retain(|&i| seen.insert(games[i].moves.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    order.shuffle(&mut rng);

    let mut used = vec![false; games.len()];
    let mut outcome = IngestOutcome::default();
    for &length in &config.group_lengths {
        let mut filled = 0;
        for &index in &order {
            if filled == config.group_size {
                break;
            }
            if used[index] {
                continue;
            }
            let game = &games[index];
            if game.moves.len() < length + config.min_length_guard {
                continue;
            }
            let prefix = &game.moves[..length];
            // The parser guarantees replayability for its own records;
            // guard anyway so hand-built records cannot poison a run.
            let Some(true_state) = replay_prefix(prefix) else {
                continue;
            };
            used[index] = true;
            filled += 1;
            outcome.tasks.push(EvalTask {
                game_id: game.game_id.clone(),
                moves: prefix.to_vec(),
                truncation_length: length,
                group_label: length,
                true_state,
            });
        }
        if filled < config.group_size {
            outcome.shortfalls.push(Shortfall {
                group_label: length,
                requested: config.group_size,
                filled,
            });
        }
    }
    outcome
}
