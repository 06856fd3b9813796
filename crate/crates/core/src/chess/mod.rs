//! Chess as a finite state automaton: full rules engine plus FEN, SAN, and
//! PGN notation support.
//!
//! The action alphabet is coordinate (UCI) moves rather than SAN tokens: a
//! coordinate move means the same thing from any position, which is what
//! lets the affordance metrics intersect action sets of two different
//! states. Legality deliberately ignores the repetition and 50-move draw
//! rules; those depend on game history that a single predicted position
//! cannot encode.

pub mod fen;
pub mod movegen;
pub mod pgn;
pub mod random;
pub mod san;
mod state;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fsa::{Automaton, FsaState};

pub use state::{
    CastlingRights, ChessState, Color, InvalidSquare, Piece, PieceKind, PositionError, Square,
};

/// Coordinate move: from-square, to-square, optional promotion piece.
/// Castling is encoded as the two-file king move (`e1g1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UciMove {
    pub from: Square,
    pub to: Square,
    pub promotion: Option<PieceKind>,
}

impl UciMove {
    pub fn new(from: Square, to: Square, promotion: Option<PieceKind>) -> UciMove {
        debug_assert!(from != to);
        UciMove {
            from,
            to,
            promotion,
        }
    }
}

impl fmt::Display for UciMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.from, self.to)?;
        if let Some(kind) = self.promotion {
            write!(f, "{}", kind.to_char())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid coordinate move `{0}`")]
pub struct InvalidUciMove(pub String);

impl FromStr for UciMove {
    type Err = InvalidUciMove;

    fn from_str(s: &str) -> Result<UciMove, InvalidUciMove> {
        if s.len() != 4 && s.len() != 5 {
            return Err(InvalidUciMove(s.to_string()));
        }
        let from: Square = s[0..2].parse().map_err(|_| InvalidUciMove(s.to_string()))?;
        let to: Square = s[2..4].parse().map_err(|_| InvalidUciMove(s.to_string()))?;
        let promotion = match s.as_bytes().get(4) {
            None => None,
            Some(&c) => {
                let kind = PieceKind::from_char(c as char)
                    .filter(|k| !matches!(k, PieceKind::Pawn | PieceKind::King))
                    .ok_or_else(|| InvalidUciMove(s.to_string()))?;
                if !(c as char).is_ascii_lowercase() {
                    return Err(InvalidUciMove(s.to_string()));
                }
                Some(kind)
            }
        };
        if from == to {
            return Err(InvalidUciMove(s.to_string()));
        }
        Ok(UciMove {
            from,
            to,
            promotion,
        })
    }
}

/// The chess automaton. Stateless; all state lives in [`ChessState`].
#[derive(Clone, Copy, Debug, Default)]
pub struct Chess;

impl Automaton for Chess {
    type State = ChessState;
    type Action = UciMove;

    fn initial(&self) -> ChessState {
        ChessState::initial()
    }

    fn legal_actions(&self, state: &ChessState) -> Vec<UciMove> {
        movegen::legal_moves(state)
    }

    fn apply(&self, state: &ChessState, action: &UciMove) -> FsaState<ChessState> {
        match movegen::apply_move(state, *action) {
            Some(next) => FsaState::Live(next),
            None => FsaState::Sink,
        }
    }

    fn successors(&self, state: &ChessState) -> Vec<(UciMove, ChessState)> {
        movegen::successor_states(state)
    }
}
