//! Legal move generation, move application, and perft.
//!
//! Plain mailbox generator: pseudo-legal moves per piece, then a
//! make-and-test filter that rejects anything leaving the mover's king
//! attacked. Castling transit squares are checked during generation, en
//! passant pins and every other discovered-check case fall out of the
//! make-and-test filter.

use super::state::{ChessState, Color, Piece, PieceKind, Square};
use super::UciMove;

const KNIGHT_OFFSETS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];
const KING_OFFSETS: [(i8, i8); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
const ROOK_DIRS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Is `target` attacked by any piece of color `by`?
pub fn is_square_attacked(state: &ChessState, target: Square, by: Color) -> bool {
    // A pawn of color `by` attacks `target` from one rank behind it.
    let back = -by.forward();
    for df in [-1i8, 1] {
        if let Some(sq) = target.offset(df, back) {
            if state.piece_at(sq) == Some(Piece::new(by, PieceKind::Pawn)) {
                return true;
            }
        }
    }
    for (df, dr) in KNIGHT_OFFSETS {
        if let Some(sq) = target.offset(df, dr) {
            if state.piece_at(sq) == Some(Piece::new(by, PieceKind::Knight)) {
                return true;
            }
        }
    }
    for (df, dr) in KING_OFFSETS {
        if let Some(sq) = target.offset(df, dr) {
            if state.piece_at(sq) == Some(Piece::new(by, PieceKind::King)) {
                return true;
            }
        }
    }
    for (dirs, slider) in [(BISHOP_DIRS, PieceKind::Bishop), (ROOK_DIRS, PieceKind::Rook)] {
        for (df, dr) in dirs {
            let mut sq = target;
            while let Some(next) = sq.offset(df, dr) {
                sq = next;
                if let Some(p) = state.piece_at(sq) {
                    if p.color == by && (p.kind == slider || p.kind == PieceKind::Queen) {
                        return true;
                    }
                    break;
                }
            }
        }
    }
    false
}

/// Is the side to move in check?
pub fn in_check(state: &ChessState) -> bool {
    match state.king_square(state.side_to_move) {
        Some(king) => is_square_attacked(state, king, state.side_to_move.opposite()),
        None => false,
    }
}

fn push_pawn_move(out: &mut Vec<UciMove>, from: Square, to: Square, promo_rank: u8) {
    if to.rank() == promo_rank {
        for kind in [
            PieceKind::Queen,
            PieceKind::Rook,
            PieceKind::Bishop,
            PieceKind::Knight,
        ] {
            out.push(UciMove::new(from, to, Some(kind)));
        }
    } else {
        out.push(UciMove::new(from, to, None));
    }
}

fn pawn_moves(state: &ChessState, from: Square, us: Color, out: &mut Vec<UciMove>) {
    let dir = us.forward();
    let start_rank = match us {
        Color::White => 1,
        Color::Black => 6,
    };
    let promo_rank = match us {
        Color::White => 7,
        Color::Black => 0,
    };
    if let Some(one) = from.offset(0, dir) {
        if state.piece_at(one).is_none() {
            push_pawn_move(out, from, one, promo_rank);
            if from.rank() == start_rank {
                let two = from.offset(0, 2 * dir).unwrap();
                if state.piece_at(two).is_none() {
                    out.push(UciMove::new(from, two, None));
                }
            }
        }
    }
    for df in [-1i8, 1] {
        if let Some(to) = from.offset(df, dir) {
            let takes_piece = state
                .piece_at(to)
                .map(|p| p.color != us)
                .unwrap_or(false);
            let takes_en_passant = state.en_passant == Some(to);
            if takes_piece || takes_en_passant {
                push_pawn_move(out, from, to, promo_rank);
            }
        }
    }
}

fn leaper_moves(
    state: &ChessState,
    from: Square,
    us: Color,
    offsets: &[(i8, i8)],
    out: &mut Vec<UciMove>,
) {
    for &(df, dr) in offsets {
        if let Some(to) = from.offset(df, dr) {
            if state.piece_at(to).map(|p| p.color != us).unwrap_or(true) {
                out.push(UciMove::new(from, to, None));
            }
        }
    }
}

fn slider_moves(
    state: &ChessState,
    from: Square,
    us: Color,
    dirs: &[(i8, i8)],
    out: &mut Vec<UciMove>,
) {
    for &(df, dr) in dirs {
        let mut sq = from;
        while let Some(to) = sq.offset(df, dr) {
            sq = to;
            match state.piece_at(to) {
                None => out.push(UciMove::new(from, to, None)),
                Some(p) => {
                    if p.color != us {
                        out.push(UciMove::new(from, to, None));
                    }
                    break;
                }
            }
        }
    }
}

fn castling_moves(state: &ChessState, out: &mut Vec<UciMove>) {
    let us = state.side_to_move;
    let them = us.opposite();
    let rank = match us {
        Color::White => 0,
        Color::Black => 7,
    };
    let king_from = Square::new(4, rank);
    // Rights imply king and rook presence: the FEN parser drops stale flags
    // and make_move clears them on any king/rook move or rook capture.
    if state.castling.kingside(us) {
        let f = Square::new(5, rank);
        let g = Square::new(6, rank);
        if state.piece_at(f).is_none()
            && state.piece_at(g).is_none()
            && !is_square_attacked(state, king_from, them)
            && !is_square_attacked(state, f, them)
            && !is_square_attacked(state, g, them)
        {
            out.push(UciMove::new(king_from, g, None));
        }
    }
    if state.castling.queenside(us) {
        let d = Square::new(3, rank);
        let c = Square::new(2, rank);
        let b = Square::new(1, rank);
        if state.piece_at(d).is_none()
            && state.piece_at(c).is_none()
            && state.piece_at(b).is_none()
            && !is_square_attacked(state, king_from, them)
            && !is_square_attacked(state, d, them)
            && !is_square_attacked(state, c, them)
        {
            out.push(UciMove::new(king_from, c, None));
        }
    }
}

fn pseudo_moves(state: &ChessState) -> Vec<UciMove> {
    let us = state.side_to_move;
    let mut moves = Vec::with_capacity(48);
    for from in Square::all() {
        let piece = match state.piece_at(from) {
            Some(p) if p.color == us => p,
            _ => continue,
        };
        match piece.kind {
            PieceKind::Pawn => pawn_moves(state, from, us, &mut moves),
            PieceKind::Knight => leaper_moves(state, from, us, &KNIGHT_OFFSETS, &mut moves),
            PieceKind::King => leaper_moves(state, from, us, &KING_OFFSETS, &mut moves),
            PieceKind::Bishop => slider_moves(state, from, us, &BISHOP_DIRS, &mut moves),
            PieceKind::Rook => slider_moves(state, from, us, &ROOK_DIRS, &mut moves),
            PieceKind::Queen => {
                slider_moves(state, from, us, &BISHOP_DIRS, &mut moves);
                slider_moves(state, from, us, &ROOK_DIRS, &mut moves);
            }
        }
    }
    castling_moves(state, &mut moves);
    moves
}

/// Apply a pseudo-legal move without the king-safety check.
pub(crate) fn make_move_unchecked(state: &ChessState, mv: UciMove) -> ChessState {
    let mut next = *state;
    let us = state.side_to_move;
    let piece = state
        .piece_at(mv.from)
        .expect("make_move_unchecked: no piece on from-square");
    let mut is_capture = state.piece_at(mv.to).is_some();

    // En passant removes the pawn one rank behind the landing square.
    if piece.kind == PieceKind::Pawn && state.en_passant == Some(mv.to) && !is_capture {
        let captured = mv.to.offset(0, -us.forward()).unwrap();
        next.set_piece(captured, None);
        is_capture = true;
    }

    let landed = match mv.promotion {
        Some(kind) => Piece::new(us, kind),
        None => piece,
    };
    next.set_piece(mv.from, None);
    next.set_piece(mv.to, Some(landed));

    // A legal two-file king move is castling; hop the rook.
    if piece.kind == PieceKind::King && mv.from.file() == 4 && mv.from.rank() == mv.to.rank() {
        let rank = mv.from.rank();
        if mv.to.file() == 6 {
            next.set_piece(Square::new(7, rank), None);
            next.set_piece(Square::new(5, rank), Some(Piece::new(us, PieceKind::Rook)));
        } else if mv.to.file() == 2 {
            next.set_piece(Square::new(0, rank), None);
            next.set_piece(Square::new(3, rank), Some(Piece::new(us, PieceKind::Rook)));
        }
    }

    if piece.kind == PieceKind::King {
        match us {
            Color::White => {
                next.castling.white_kingside = false;
                next.castling.white_queenside = false;
            }
            Color::Black => {
                next.castling.black_kingside = false;
                next.castling.black_queenside = false;
            }
        }
    }
    // Any move from or to a rook home square kills that flag (covers both
    // rook moves and rook captures).
    let corners = [
        (Square::new(0, 0), false, Color::White),
        (Square::new(7, 0), true, Color::White),
        (Square::new(0, 7), false, Color::Black),
        (Square::new(7, 7), true, Color::Black),
    ];
    for (corner, kingside, color) in corners {
        if mv.from == corner || mv.to == corner {
            match (color, kingside) {
                (Color::White, true) => next.castling.white_kingside = false,
                (Color::White, false) => next.castling.white_queenside = false,
                (Color::Black, true) => next.castling.black_kingside = false,
                (Color::Black, false) => next.castling.black_queenside = false,
            }
        }
    }

    next.en_passant = if piece.kind == PieceKind::Pawn
        && (mv.from.rank() as i8 - mv.to.rank() as i8).abs() == 2
    {
        Some(mv.from.offset(0, us.forward()).unwrap())
    } else {
        None
    };

    next.halfmove_clock = if piece.kind == PieceKind::Pawn || is_capture {
        0
    } else {
        state.halfmove_clock + 1
    };
    if us == Color::Black {
        next.fullmove_number += 1;
    }
    next.side_to_move = us.opposite();
    next
}

/// All legal moves paired with their successor states.
pub fn successor_states(state: &ChessState) -> Vec<(UciMove, ChessState)> {
    let us = state.side_to_move;
    let them = us.opposite();
    pseudo_moves(state)
        .into_iter()
        .filter_map(|mv| {
            let next = make_move_unchecked(state, mv);
            let king = next.king_square(us)?;
            if is_square_attacked(&next, king, them) {
                None
            } else {
                Some((mv, next))
            }
        })
        .collect()
}

/// Exactly the legal moves; empty for checkmate and stalemate.
pub fn legal_moves(state: &ChessState) -> Vec<UciMove> {
    successor_states(state).into_iter().map(|(mv, _)| mv).collect()
}

/// Apply a move if legal; `None` otherwise. Illegality is not an error at
/// this layer, it is the automaton's sink.
pub fn apply_move(state: &ChessState, mv: UciMove) -> Option<ChessState> {
    successor_states(state)
        .into_iter()
        .find(|(m, _)| *m == mv)
        .map(|(_, s)| s)
}

/// Sequential node count of the legal move tree at exactly `depth` plies.
pub fn perft_serial(state: &ChessState, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let successors = successor_states(state);
    if depth == 1 {
        return successors.len() as u64;
    }
    successors
        .iter()
        .map(|(_, s)| perft_serial(s, depth - 1))
        .sum()
}

/// Perft, splitting across first-ply moves when built with `parallel`.
/// The result is a sum, so it is identical either way.
pub fn perft(state: &ChessState, depth: u32) -> u64 {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if depth >= 3 {
            return successor_states(state)
                .par_iter()
                .map(|(_, s)| perft_serial(s, depth - 1))
                .sum();
        }
    }
    perft_serial(state, depth)
}
