//! FEN parsing and serialization.
//!
//! Parsing distinguishes syntax errors ([`MalformedFen`]) from positions that
//! are well-formed text but violate the state invariants
//! ([`PositionError`]); the evaluation pipeline maps the two to different
//! record statuses. Model-produced FENs are often sloppy about the trailing
//! counters, so fields 5 and 6 are optional and default to `0` and `1`.

use thiserror::Error;

use super::state::{
    CastlingRights, ChessState, Color, Piece, PieceKind, PositionError, Square,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedFen {
    #[error("missing {0} field")]
    MissingField(&'static str),
    #[error("bad placement field: {0}")]
    BadPlacement(String),
    #[error("bad side-to-move field `{0}`")]
    BadSide(String),
    #[error("bad castling field `{0}`")]
    BadCastling(String),
    #[error("bad en passant field `{0}`")]
    BadEnPassant(String),
    #[error("bad counter field `{0}`")]
    BadCounter(String),
    #[error("unexpected trailing field `{0}`")]
    TrailingField(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FenError {
    #[error("malformed FEN: {0}")]
    Malformed(#[from] MalformedFen),
    #[error("illegal position: {0}")]
    Illegal(#[from] PositionError),
}

/// Parse the placement field alone (first FEN field), with no invariant
/// checks. Lets the pipeline score board accuracy for positions that fail
/// full validation.
pub fn parse_placement(field: &str) -> Option<[Option<Piece>; 64]> {
    let mut board = [None; 64];
    let ranks: Vec<&str> = field.split('/').collect();
    if ranks.len() != 8 {
        return None;
    }
    for (i, rank_text) in ranks.iter().enumerate() {
        let rank = 7 - i as u8; // FEN lists rank 8 first
        let mut file = 0u8;
        for c in rank_text.chars() {
            if let Some(skip) = c.to_digit(10) {
                if skip == 0 || skip == 9 {
                    return None;
                }
                file += skip as u8;
            } else {
                let piece = Piece::from_fen_char(c)?;
                if file >= 8 {
                    return None;
                }
                board[Square::new(file, rank).index()] = Some(piece);
                file += 1;
            }
            if file > 8 {
                return None;
            }
        }
        if file != 8 {
            return None;
        }
    }
    Some(board)
}

fn parse_castling(field: &str) -> Result<CastlingRights, MalformedFen> {
    let mut rights = CastlingRights::none();
    if field == "-" {
        return Ok(rights);
    }
    for c in field.chars() {
        let flag = match c {
            'K' => &mut rights.white_kingside,
            'Q' => &mut rights.white_queenside,
            'k' => &mut rights.black_kingside,
            'q' => &mut rights.black_queenside,
            _ => return Err(MalformedFen::BadCastling(field.to_string())),
        };
        if *flag {
            return Err(MalformedFen::BadCastling(field.to_string()));
        }
        *flag = true;
    }
    Ok(rights)
}

/// Drop castling flags whose king or rook is no longer on its home square.
/// Predicted FENs frequently carry stale rights; treating those as illegal
/// would conflate notation noise with state-tracking failure.
fn clean_castling(board: &[Option<Piece>; 64], rights: CastlingRights) -> CastlingRights {
    let at = |file: u8, rank: u8| board[Square::new(file, rank).index()];
    let white_king = at(4, 0) == Some(Piece::new(Color::White, PieceKind::King));
    let black_king = at(4, 7) == Some(Piece::new(Color::Black, PieceKind::King));
    let rook = |color, file, rank| at(file, rank) == Some(Piece::new(color, PieceKind::Rook));
    CastlingRights {
        white_kingside: rights.white_kingside && white_king && rook(Color::White, 7, 0),
        white_queenside: rights.white_queenside && white_king && rook(Color::White, 0, 0),
        black_kingside: rights.black_kingside && black_king && rook(Color::Black, 7, 7),
        black_queenside: rights.black_queenside && black_king && rook(Color::Black, 0, 7),
    }
}

/// Clear an en passant target that no double-pushed pawn backs up. The rank
/// itself is still validated later; this only removes vacuous targets.
fn clean_en_passant(
    board: &[Option<Piece>; 64],
    side_to_move: Color,
    ep: Option<Square>,
) -> Option<Square> {
    let ep = ep?;
    if board[ep.index()].is_some() {
        return None;
    }
    // The pawn that just double-pushed sits one square beyond the target,
    // from the mover's point of view.
    let pawn_square = ep.offset(0, -side_to_move.forward())?;
    let expected = Piece::new(side_to_move.opposite(), PieceKind::Pawn);
    if board[pawn_square.index()] == Some(expected) {
        Some(ep)
    } else {
        None
    }
}

pub fn parse_fen(text: &str) -> Result<ChessState, FenError> {
    let mut fields = text.split_whitespace();

    let placement_field = fields.next().ok_or(MalformedFen::MissingField("placement"))?;
    let board = parse_placement(placement_field)
        .ok_or_else(|| MalformedFen::BadPlacement(placement_field.to_string()))?;

    let side_field = fields.next().ok_or(MalformedFen::MissingField("side to move"))?;
    let side_to_move = match side_field {
        "w" => Color::White,
        "b" => Color::Black,
        other => return Err(MalformedFen::BadSide(other.to_string()).into()),
    };

    let castling_field = fields.next().ok_or(MalformedFen::MissingField("castling"))?;
    let castling = clean_castling(&board, parse_castling(castling_field)?);

    let ep_field = fields.next().ok_or(MalformedFen::MissingField("en passant"))?;
    let en_passant = match ep_field {
        "-" => None,
        square => Some(
            square
                .parse::<Square>()
                .map_err(|_| MalformedFen::BadEnPassant(square.to_string()))?,
        ),
    };

    let halfmove_clock = match fields.next() {
        None => 0,
        Some(field) => field
            .parse::<u32>()
            .map_err(|_| MalformedFen::BadCounter(field.to_string()))?,
    };
    let fullmove_number = match fields.next() {
        None => 1,
        Some(field) => {
            let n = field
                .parse::<u32>()
                .map_err(|_| MalformedFen::BadCounter(field.to_string()))?;
            n.max(1)
        }
    };
    if let Some(extra) = fields.next() {
        return Err(MalformedFen::TrailingField(extra.to_string()).into());
    }

    let mut state = ChessState {
        board,
        side_to_move,
        castling,
        en_passant,
        halfmove_clock,
        fullmove_number,
    };
    // Validate the en passant rank before clearing vacuous targets, so a
    // target on a nonsense rank is reported rather than silently dropped.
    if let Some(ep) = state.en_passant {
        let expected_rank = match side_to_move {
            Color::Black => 2,
            Color::White => 5,
        };
        if ep.rank() != expected_rank {
            return Err(PositionError::EnPassantRank(ep).into());
        }
    }
    state.en_passant = clean_en_passant(&state.board, side_to_move, state.en_passant);
    state.validate()?;
    Ok(state)
}

/// Canonical 6-field FEN: `parse_fen(format_fen(s))` reproduces `s` exactly.
pub fn format_fen(state: &ChessState) -> String {
    let mut out = String::with_capacity(80);
    for rank in (0..8).rev() {
        let mut empty = 0;
        for file in 0..8 {
            match state.piece_at(Square::new(file, rank)) {
                Some(piece) => {
                    if empty > 0 {
                        out.push(char::from_digit(empty, 10).unwrap());
                        empty = 0;
                    }
                    out.push(piece.fen_char());
                }
                None => empty += 1,
            }
        }
        if empty > 0 {
            out.push(char::from_digit(empty, 10).unwrap());
        }
        if rank > 0 {
            out.push('/');
        }
    }
    out.push(' ');
    out.push(match state.side_to_move {
        Color::White => 'w',
        Color::Black => 'b',
    });
    out.push(' ');
    if state.castling.any() {
        if state.castling.white_kingside {
            out.push('K');
        }
        if state.castling.white_queenside {
            out.push('Q');
        }
        if state.castling.black_kingside {
            out.push('k');
        }
        if state.castling.black_queenside {
            out.push('q');
        }
    } else {
        out.push('-');
    }
    out.push(' ');
    match state.en_passant {
        Some(sq) => out.push_str(&sq.to_string()),
        None => out.push('-'),
    }
    out.push_str(&format!(" {} {}", state.halfmove_clock, state.fullmove_number));
    out
}

/// First four FEN fields (placement, side, castling, en passant): the part
/// of the notation that determines the legal action set.
pub fn format_fen_prefix(state: &ChessState) -> String {
    let full = format_fen(state);
    let mut end = full.len();
    let mut seen = 0;
    for (i, c) in full.char_indices() {
        if c == ' ' {
            seen += 1;
            if seen == 4 {
                end = i;
                break;
            }
        }
    }
    full[..end].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::movegen::apply_move;

    const INITIAL: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

    #[test]
    fn initial_round_trip() {
        let state = parse_fen(INITIAL).unwrap();
        assert_eq!(state, ChessState::initial());
        assert_eq!(format_fen(&state), INITIAL);
    }

    #[test]
    fn e4_sets_en_passant_target() {
        let after_e4 = apply_move(&ChessState::initial(), "e2e4".parse().unwrap()).unwrap();
        assert_eq!(
            format_fen(&after_e4),
            "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1"
        );
        let reparsed =
            parse_fen("rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1").unwrap();
        assert_eq!(reparsed, after_e4);
    }

    #[test]
    fn kingless_board_is_illegal_not_malformed() {
        match parse_fen("8/8/8/8/8/8/8/8 w - - 0 1") {
            Err(FenError::Illegal(PositionError::KingCount(..))) => {}
            other => panic!("expected illegal position, got {other:?}"),
        }
    }

    #[test]
    fn one_missing_king_is_illegal() {
        // Initial position minus the black king.
        match parse_fen("rnbq1bnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1") {
            Err(FenError::Illegal(PositionError::KingCount(Color::Black, 0))) => {}
            other => panic!("expected missing black king, got {other:?}"),
        }
    }

    #[test]
    fn pawn_on_back_rank_is_illegal() {
        match parse_fen("P3k3/8/8/8/8/8/8/4K3 w - - 0 1") {
            Err(FenError::Illegal(PositionError::PawnOnBackRank(_))) => {}
            other => panic!("expected back-rank pawn error, got {other:?}"),
        }
    }

    #[test]
    fn side_not_to_move_in_check_is_illegal() {
        // White queen gives check but it is white to move.
        match parse_fen("4k3/4Q3/8/8/8/8/8/4K3 w - - 0 1") {
            Err(FenError::Illegal(PositionError::OppositeKingInCheck)) => {}
            other => panic!("expected opposite-check error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_are_malformed() {
        assert!(matches!(
            parse_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP w KQkq - 0 1"),
            Err(FenError::Malformed(MalformedFen::BadPlacement(_)))
        ));
        assert!(matches!(
            parse_fen("8/8/8/8/8/8/8/9 w - - 0 1"),
            Err(FenError::Malformed(MalformedFen::BadPlacement(_)))
        ));
        assert!(matches!(
            parse_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR x KQkq - 0 1"),
            Err(FenError::Malformed(MalformedFen::BadSide(_)))
        ));
        assert!(matches!(
            parse_fen(""),
            Err(FenError::Malformed(MalformedFen::MissingField(_)))
        ));
    }

    #[test]
    fn missing_counters_default_to_zero_and_one() {
        let state = parse_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -").unwrap();
        assert_eq!(state.halfmove_clock, 0);
        assert_eq!(state.fullmove_number, 1);
        let partial =
            parse_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 7").unwrap();
        assert_eq!(partial.halfmove_clock, 7);
        assert_eq!(partial.fullmove_number, 1);
    }

    #[test]
    fn stale_castling_rights_are_dropped() {
        // Kings off their home squares: every flag must clear.
        let state = parse_fen("rnbq1bnr/ppppkppp/8/4p3/4P3/8/PPPPKPPP/RNBQ1BNR w KQkq - 2 3")
            .unwrap();
        assert!(!state.castling.any());
        assert_eq!(format_fen(&state).split(' ').nth(2), Some("-"));
    }

    #[test]
    fn vacuous_en_passant_target_is_cleared() {
        // Target square set but no double-pushed pawn behind it.
        let state =
            parse_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR b KQkq e3 0 1").unwrap();
        assert_eq!(state.en_passant, None);
    }

    #[test]
    fn en_passant_on_wrong_rank_is_illegal() {
        match parse_fen("rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e4 0 1") {
            Err(FenError::Illegal(PositionError::EnPassantRank(_))) => {}
            other => panic!("expected en passant rank error, got {other:?}"),
        }
    }

    #[test]
    fn placement_parses_alone() {
        let placement = parse_placement("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR").unwrap();
        assert_eq!(&placement, ChessState::initial().placement());
        assert!(parse_placement("rnbqkbnr/pppppppp/8/8").is_none());
    }

    #[test]
    fn prefix_takes_first_four_fields() {
        assert_eq!(
            format_fen_prefix(&ChessState::initial()),
            "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -"
        );
    }
}
