//! State-comparison metrics: exact match, Levenshtein distance with an
//! exponential kernel, per-square board accuracy, and exact affordance
//! overlap by full enumeration at small depths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::{fen, ChessState, Piece};
use crate::exec;
use crate::fsa::Automaton;

/// Which FEN fields string metrics compare.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditDistanceFields {
    /// Placement, side to move, castling, en passant. The default: the move
    /// counters carry no affordance content under position-local legality.
    #[default]
    FirstFourFields,
    FullFen,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Decay rate of the edit-distance kernel; must be positive.
    pub kernel_lambda: f64,
    pub edit_distance_fields: EditDistanceFields,
}

impl Default for MetricConfig {
    fn default() -> MetricConfig {
        MetricConfig {
            kernel_lambda: 0.1,
            edit_distance_fields: EditDistanceFields::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("kernel lambda must be positive, got {0}")]
pub struct InvalidLambda(pub String);

impl MetricConfig {
    pub fn with_lambda(lambda: f64) -> Result<MetricConfig, InvalidLambda> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(MetricConfig {
                kernel_lambda: lambda,
                ..MetricConfig::default()
            })
        } else {
            Err(InvalidLambda(lambda.to_string()))
        }
    }

    /// Render a state as the text the string metrics compare.
    pub fn comparison_text(&self, state: &ChessState) -> String {
        match self.edit_distance_fields {
            EditDistanceFields::FirstFourFields => fen::format_fen_prefix(state),
            EditDistanceFields::FullFen => fen::format_fen(state),
        }
    }
}

/// Per-record metric scores. `precision_m`/`recall_m` are present once an
/// estimator has run for the record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub exact_match: bool,
    pub edit_distance: usize,
    pub edit_kernel: f64,
    pub board_accuracy: f64,
    pub precision_m: Option<f64>,
    pub recall_m: Option<f64>,
    pub depth_m: usize,
}

/// Structural equality under the configured comparison fields.
pub fn exact_match(config: &MetricConfig, truth: &ChessState, predicted: &ChessState) -> bool {
    match config.edit_distance_fields {
        EditDistanceFields::FullFen => truth == predicted,
        EditDistanceFields::FirstFourFields => {
            truth.placement() == predicted.placement()
                && truth.side_to_move == predicted.side_to_move
                && truth.castling == predicted.castling
                && truth.en_passant == predicted.en_passant
        }
    }
}

/// Levenshtein distance with unit insert/delete/substitute costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1)
                .min(row[j] + 1)
                .min(diagonal + usize::from(ca != cb));
            diagonal = up;
        }
    }
    row[b.len()]
}

/// Exponential kernel `exp(-lambda * distance)`, mapping distances into
/// `(0, 1]`.
pub fn edit_kernel(distance: usize, lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0);
    (-lambda * distance as f64).exp()
}

/// Fraction of the 64 squares whose contents agree.
pub fn board_accuracy(truth: &ChessState, predicted: &ChessState) -> f64 {
    board_accuracy_placements(truth.placement(), predicted.placement())
}

/// Square agreement over raw placements; lets invalid predictions still get
/// a board score when their placement field parses.
pub fn board_accuracy_placements(a: &[Option<Piece>; 64], b: &[Option<Piece>; 64]) -> f64 {
    let matching = a.iter().zip(b.iter()).filter(|(x, y)| x == y).count();
    matching as f64 / 64.0
}

/// Exact affordance overlap as a ratio of counted sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactOverlap {
    /// Sequences valid from the source that the acceptor also accepts.
    pub accepted: u64,
    /// All maximal source sequences of length at most `m` (shorter only when
    /// a branch ends in a terminal state).
    pub total: u64,
}

impl ExactOverlap {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.accepted as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("enumeration budget of {budget} nodes exceeded at depth {level}")]
pub struct BudgetExceeded {
    pub budget: u64,
    pub level: usize,
}

/// Exhaustively enumerate source-valid sequences of length `depth_m`,
/// counting how many the acceptor also accepts. A branch that reaches a
/// terminal source state early counts as accepted iff the paired acceptor
/// state is terminal at the same point, mirroring the sampling estimators.
///
/// The leaf count is exponential in `depth_m`; callers set `budget` to bound
/// the enumerated nodes and fall back to sampling on [`BudgetExceeded`].
pub fn exact_affordance_overlap<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    depth_m: usize,
    budget: u64,
) -> Result<ExactOverlap, BudgetExceeded> {
    // (source, acceptor-if-still-valid) pairs, expanded level by level.
    let mut frontier: Vec<(A::State, Option<A::State>)> =
        vec![(source.clone(), Some(acceptor.clone()))];
    let mut accepted = 0u64;
    let mut total = 0u64;
    let mut visited = 1u64;

    for level in 0..depth_m {
        let expanded = exec::map_frontier(&frontier, |(src, acc)| {
            let children = fsa.successors(src);
            if children.is_empty() {
                let acc_terminal = acc
                    .as_ref()
                    .map(|a| fsa.legal_actions(a).is_empty())
                    .unwrap_or(false);
                return (Vec::new(), true, acc_terminal);
            }
            let acceptor_succ: Option<Vec<(A::Action, A::State)>> =
                acc.as_ref().map(|a| fsa.successors(a));
            let next: Vec<(A::State, Option<A::State>)> = children
                .into_iter()
                .map(|(action, child)| {
                    let acc_child = acceptor_succ.as_ref().and_then(|succ| {
                        succ.iter().find(|(a, _)| *a == action).map(|(_, s)| s.clone())
                    });
                    (child, acc_child)
                })
                .collect();
            (next, false, false)
        });

        let mut next_frontier = Vec::new();
        for (children, settled, settled_accepted) in expanded {
            if settled {
                total += 1;
                if settled_accepted {
                    accepted += 1;
                }
            } else {
                visited += children.len() as u64;
                next_frontier.extend(children);
            }
        }
        if visited > budget {
            return Err(BudgetExceeded { budget, level });
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }

    total += frontier.len() as u64;
    accepted += frontier.iter().filter(|(_, acc)| acc.is_some()).count() as u64;
    Ok(ExactOverlap { accepted, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::fen::parse_fen;
    use crate::chess::{Chess, ChessState, UciMove};
    use crate::fsa::{is_valid_sequence, FsaState};

    const KNIGHTLESS: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/R1BQKBNR w KQkq - 0 1";

    /// Independent oracle: enumerate all maximal source sequences up to
    /// depth m as explicit action lists, then test each against the
    /// acceptor with `is_valid_sequence`. Exponential and only for tiny m.
    fn brute_force_overlap(
        source: &ChessState,
        acceptor: &ChessState,
        m: usize,
    ) -> (u64, u64) {
        let chess = Chess;
        fn walk(
            state: &ChessState,
            prefix: &mut Vec<UciMove>,
            depth_left: usize,
            out: &mut Vec<(Vec<UciMove>, bool)>,
        ) {
            let moves = crate::chess::movegen::legal_moves(state);
            if depth_left == 0 || moves.is_empty() {
                out.push((prefix.clone(), moves.is_empty() && depth_left > 0));
                return;
            }
            for mv in moves {
                let next = crate::chess::movegen::apply_move(state, mv).unwrap();
                prefix.push(mv);
                walk(&next, prefix, depth_left - 1, out);
                prefix.pop();
            }
        }
        let mut sequences = Vec::new();
        walk(source, &mut Vec::new(), m, &mut sequences);
        let total = sequences.len() as u64;
        let accepted = sequences
            .iter()
            .filter(|(seq, ended_early)| {
                let live = FsaState::Live(*acceptor);
                if !is_valid_sequence(&chess, &live, seq) {
                    return false;
                }
                if *ended_early {
                    // Maximal short sequences only count when the acceptor
                    // is also terminal at that point.
                    match crate::fsa::apply_sequence(&chess, &live, seq) {
                        FsaState::Live(end) => {
                            crate::chess::movegen::legal_moves(&end).is_empty()
                        }
                        FsaState::Sink => false,
                    }
                }
                else {
                    true
                }
            })
            .count() as u64;
        (accepted, total)
    }

    #[test]
    fn exact_match_respects_field_config() {
        let config = MetricConfig::default();
        let initial = ChessState::initial();
        assert!(exact_match(&config, &initial, &initial));

        let mut clock_differs = initial;
        clock_differs.halfmove_clock = 7;
        assert!(exact_match(&config, &initial, &clock_differs));
        let full = MetricConfig {
            edit_distance_fields: EditDistanceFields::FullFen,
            ..config
        };
        assert!(!exact_match(&full, &initial, &clock_differs));

        let mut side_differs = initial;
        side_differs.side_to_move = crate::chess::Color::Black;
        assert!(!exact_match(&config, &initial, &side_differs));
    }

    #[test]
    fn levenshtein_reference_values() {
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("flaw", "lawn"), 2);
    }

    #[test]
    fn kernel_values_and_monotonicity() {
        assert_eq!(edit_kernel(0, 0.1), 1.0);
        assert!((edit_kernel(1, 0.1) - 0.9048374180359595).abs() < 1e-12);
        let mut previous = 1.0;
        for d in 1..50 {
            let k = edit_kernel(d, 0.1);
            assert!(k < previous && k > 0.0);
            previous = k;
        }
        assert!(edit_kernel(3, 0.5) < edit_kernel(3, 0.1));
    }

    #[test]
    fn board_accuracy_counts_squares() {
        let initial = ChessState::initial();
        assert_eq!(board_accuracy(&initial, &initial), 1.0);

        let knightless = parse_fen(KNIGHTLESS).unwrap();
        let acc = board_accuracy(&initial, &knightless);
        assert!((acc - 63.0 / 64.0).abs() < 1e-12);
        assert!(acc > 0.98);

        // Empty board with both kings on their home squares: 32 empty
        // squares in the middle plus the two kings agree.
        let kings_only = parse_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        assert!((board_accuracy(&initial, &kings_only) - 34.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_one_on_identical_states() {
        let chess = Chess;
        let initial = ChessState::initial();
        for m in 1..=3 {
            let overlap =
                exact_affordance_overlap(&chess, &initial, &initial, m, 10_000_000).unwrap();
            assert_eq!(overlap.accepted, overlap.total);
            assert_eq!(overlap.ratio(), 1.0);
        }
    }

    #[test]
    fn knight_deletion_overlap_matches_brute_force() {
        let chess = Chess;
        let initial = ChessState::initial();
        let knightless = parse_fen(KNIGHTLESS).unwrap();

        // Precision direction: sample from the (knightless) prediction. Its
        // freed rook move Ra1-b1 is illegal in the true state: 18/19.
        let precision =
            exact_affordance_overlap(&chess, &knightless, &initial, 1, 1_000_000).unwrap();
        assert_eq!((precision.accepted, precision.total), (18, 19));
        assert_eq!(brute_force_overlap(&knightless, &initial, 1), (18, 19));

        // Recall direction: the two knight moves vanish, 18/20.
        let recall =
            exact_affordance_overlap(&chess, &initial, &knightless, 1, 1_000_000).unwrap();
        assert_eq!((recall.accepted, recall.total), (18, 20));
        assert_eq!(recall.ratio(), 0.9);
        assert_eq!(brute_force_overlap(&initial, &knightless, 1), (18, 20));
    }

    #[test]
    fn overlap_matches_brute_force_at_depth_two() {
        let chess = Chess;
        let initial = ChessState::initial();
        let knightless = parse_fen(KNIGHTLESS).unwrap();
        for (source, acceptor) in [(&initial, &knightless), (&knightless, &initial)] {
            let fast = exact_affordance_overlap(&chess, source, acceptor, 2, 10_000_000).unwrap();
            let (accepted, total) = brute_force_overlap(source, acceptor, 2);
            assert_eq!((fast.accepted, fast.total), (accepted, total));
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let chess = Chess;
        let initial = ChessState::initial();
        let knightless = parse_fen(KNIGHTLESS).unwrap();
        let a = exact_affordance_overlap(&chess, &knightless, &initial, 2, 10_000_000).unwrap();
        let b = exact_affordance_overlap(&chess, &knightless, &initial, 2, 10_000_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_ratio_is_non_increasing_in_depth() {
        let chess = Chess;
        let initial = ChessState::initial();
        let knightless = parse_fen(KNIGHTLESS).unwrap();
        let mut previous = 1.0f64;
        for m in 1..=3 {
            let overlap =
                exact_affordance_overlap(&chess, &initial, &knightless, m, 10_000_000).unwrap();
            assert!(overlap.ratio() <= previous + 1e-12);
            previous = overlap.ratio();
        }
    }

    #[test]
    fn budget_guard_trips_on_deep_enumeration() {
        let chess = Chess;
        let initial = ChessState::initial();
        match exact_affordance_overlap(&chess, &initial, &initial, 6, 10_000) {
            Err(BudgetExceeded { budget: 10_000, .. }) => {}
            other => panic!("expected budget exceeded, got {other:?}"),
        }
    }

    #[test]
    fn mutilated_king_state_is_surfaced_as_illegal_not_scored() {
        // Board accuracy alone would call this prediction 98%+ correct; the
        // affordance path must reject it at validation instead.
        let text = "rnbq1bnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
        assert!(matches!(
            parse_fen(text),
            Err(crate::chess::fen::FenError::Illegal(_))
        ));
        let placement = crate::chess::fen::parse_placement(
            text.split_whitespace().next().unwrap(),
        )
        .unwrap();
        let acc = board_accuracy_placements(ChessState::initial().placement(), &placement);
        assert!(acc > 0.98);
    }
}
