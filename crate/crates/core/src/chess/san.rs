//! Standard Algebraic Notation, resolved against a concrete position.
//!
//! SAN spelling depends on the board ("Nf3" only names a move once you know
//! which knights can reach f3), so both directions here take the position as
//! an argument and work in terms of the position's legal move list.

use thiserror::Error;

use super::movegen::{in_check, legal_moves, make_move_unchecked, successor_states};
use super::state::{ChessState, PieceKind, Square};
use super::UciMove;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SanError {
    #[error("`{0}` does not match any legal move in this position")]
    NoLegalInterpretation(String),
    #[error("`{0}` is ambiguous in this position")]
    Ambiguous(String),
    #[error("cannot render illegal move {0}")]
    IllegalMove(String),
}

fn is_capture(state: &ChessState, mv: UciMove, kind: PieceKind) -> bool {
    state.piece_at(mv.to).is_some()
        || (kind == PieceKind::Pawn && state.en_passant == Some(mv.to))
}

fn suffix(state: &ChessState, mv: UciMove) -> &'static str {
    let next = make_move_unchecked(state, mv);
    if !in_check(&next) {
        return "";
    }
    if legal_moves(&next).is_empty() {
        "#"
    } else {
        "+"
    }
}

/// Render a legal move as a SAN token, with disambiguation and check/mate
/// suffix.
pub fn move_to_san(state: &ChessState, mv: UciMove) -> Result<String, SanError> {
    let legal = legal_moves(state);
    if !legal.contains(&mv) {
        return Err(SanError::IllegalMove(mv.to_string()));
    }
    let piece = state.piece_at(mv.from).expect("legal move has a mover");

    if piece.kind == PieceKind::King && mv.from.file() == 4 && mv.from.rank() == mv.to.rank() {
        if mv.to.file() == 6 {
            return Ok(format!("O-O{}", suffix(state, mv)));
        }
        if mv.to.file() == 2 {
            return Ok(format!("O-O-O{}", suffix(state, mv)));
        }
    }

    let capture = is_capture(state, mv, piece.kind);
    let mut out = String::new();
    if piece.kind == PieceKind::Pawn {
        if capture {
            out.push((b'a' + mv.from.file()) as char);
            out.push('x');
        }
        out.push_str(&mv.to.to_string());
        if let Some(kind) = mv.promotion {
            out.push('=');
            out.push(kind.san_letter());
        }
    } else {
        out.push(piece.kind.san_letter());
        // Disambiguate against other same-kind pieces that can legally reach
        // the same square: file first, rank if the file is shared, both if
        // neither is unique.
        let rivals: Vec<Square> = legal
            .iter()
            .filter(|m| {
                m.to == mv.to
                    && m.from != mv.from
                    && state.piece_at(m.from).map(|p| p.kind) == Some(piece.kind)
            })
            .map(|m| m.from)
            .collect();
        if !rivals.is_empty() {
            let file_unique = rivals.iter().all(|sq| sq.file() != mv.from.file());
            let rank_unique = rivals.iter().all(|sq| sq.rank() != mv.from.rank());
            if file_unique {
                out.push((b'a' + mv.from.file()) as char);
            } else if rank_unique {
                out.push((b'1' + mv.from.rank()) as char);
            } else {
                out.push_str(&mv.from.to_string());
            }
        }
        if capture {
            out.push('x');
        }
        out.push_str(&mv.to.to_string());
    }
    out.push_str(suffix(state, mv));
    Ok(out)
}

struct SanPattern {
    kind: PieceKind,
    from_file: Option<u8>,
    from_rank: Option<u8>,
    capture: bool,
    to: Square,
    promotion: Option<PieceKind>,
}

fn parse_pattern(token: &str) -> Option<SanPattern> {
    let mut chars: Vec<char> = token.chars().collect();

    let mut promotion = None;
    if chars.len() >= 2 {
        if let Some(kind) = PieceKind::from_char(*chars.last().unwrap()) {
            let last = *chars.last().unwrap();
            if last.is_ascii_uppercase() && kind != PieceKind::Pawn && kind != PieceKind::King {
                promotion = Some(kind);
                chars.pop();
                if chars.last() == Some(&'=') {
                    chars.pop();
                }
            }
        }
    }

    if chars.len() < 2 {
        return None;
    }
    let rank_char = chars.pop()?;
    let file_char = chars.pop()?;
    if !('a'..='h').contains(&file_char) || !('1'..='8').contains(&rank_char) {
        return None;
    }
    let to = Square::new(file_char as u8 - b'a', rank_char as u8 - b'1');

    let mut capture = false;
    if chars.last() == Some(&'x') {
        capture = true;
        chars.pop();
    }

    let mut kind = PieceKind::Pawn;
    let mut from_file = None;
    let mut from_rank = None;
    let mut iter = chars.into_iter().peekable();
    if let Some(&c) = iter.peek() {
        if c.is_ascii_uppercase() {
            kind = PieceKind::from_char(c)?;
            if kind == PieceKind::Pawn {
                return None;
            }
            iter.next();
        }
    }
    for c in iter {
        match c {
            'a'..='h' if from_file.is_none() => from_file = Some(c as u8 - b'a'),
            '1'..='8' if from_rank.is_none() => from_rank = Some(c as u8 - b'1'),
            _ => return None,
        }
    }
    if promotion.is_some() && kind != PieceKind::Pawn {
        return None;
    }
    Some(SanPattern {
        kind,
        from_file,
        from_rank,
        capture,
        to,
        promotion,
    })
}

/// Resolve a SAN token to the unique legal move it names.
pub fn san_to_move(state: &ChessState, token: &str) -> Result<UciMove, SanError> {
    let stripped: String = token
        .trim()
        .trim_end_matches(['+', '#', '!', '?'])
        .to_string();
    if stripped.is_empty() {
        return Err(SanError::NoLegalInterpretation(token.to_string()));
    }

    let legal = legal_moves(state);

    // Castling, accepting both the letter O and the digit 0 spellings.
    let normalized = stripped.replace('0', "O");
    if normalized == "O-O" || normalized == "O-O-O" {
        let target_file = if normalized == "O-O" { 6 } else { 2 };
        for &mv in &legal {
            let piece = state.piece_at(mv.from).unwrap();
            if piece.kind == PieceKind::King
                && mv.from.file() == 4
                && mv.to.file() == target_file
                && mv.from.rank() == mv.to.rank()
            {
                return Ok(mv);
            }
        }
        return Err(SanError::NoLegalInterpretation(token.to_string()));
    }

    let pattern = parse_pattern(&stripped)
        .ok_or_else(|| SanError::NoLegalInterpretation(token.to_string()))?;

    let mut matches = legal.iter().filter(|mv| {
        let piece = state.piece_at(mv.from).unwrap();
        piece.kind == pattern.kind
            && mv.to == pattern.to
            && mv.promotion == pattern.promotion
            && pattern.from_file.is_none_or(|f| mv.from.file() == f)
            && pattern.from_rank.is_none_or(|r| mv.from.rank() == r)
            && is_capture(state, **mv, piece.kind) == pattern.capture
            // A castling king move is never a plain SAN king move.
            && !(piece.kind == PieceKind::King
                && mv.from.file() == 4
                && (mv.to.file() as i8 - 4).abs() == 2)
    });
    match (matches.next(), matches.next()) {
        (Some(&mv), None) => Ok(mv),
        (Some(_), Some(_)) => Err(SanError::Ambiguous(token.to_string())),
        (None, _) => Err(SanError::NoLegalInterpretation(token.to_string())),
    }
}

/// Render a move list as numbered PGN-style movetext, e.g. `1. e4 e5 2. Nf3`.
pub fn render_movetext(start: &ChessState, moves: &[UciMove]) -> Result<String, SanError> {
    let mut out = String::new();
    let mut state = *start;
    for &mv in moves {
        match state.side_to_move {
            super::Color::White => {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(&format!("{}. ", state.fullmove_number));
            }
            super::Color::Black => {
                if out.is_empty() {
                    out.push_str(&format!("{}... ", state.fullmove_number));
                } else {
                    out.push(' ');
                }
            }
        }
        out.push_str(&move_to_san(&state, mv)?);
        state = successor_states(&state)
            .into_iter()
            .find(|(m, _)| *m == mv)
            .map(|(_, s)| s)
            .ok_or_else(|| SanError::IllegalMove(mv.to_string()))?;
    }
    Ok(out)
}
