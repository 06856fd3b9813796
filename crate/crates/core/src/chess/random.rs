//! Randomized position generators: playouts for reachable states, a scatter
//! sampler for arbitrary boards, and piece perturbations for building
//! near-miss predictions.

use rand::seq::SliceRandom;
use rand::Rng;

use super::movegen::{legal_moves, make_move_unchecked};
use super::state::{ChessState, Color, Piece, PieceKind, Square};

/// Play up to `plies` uniformly random legal moves from the initial
/// position; stops early at checkmate or stalemate.
pub fn random_playout(rng: &mut impl Rng, plies: usize) -> ChessState {
    let mut state = ChessState::initial();
    for _ in 0..plies {
        let moves = legal_moves(&state);
        if moves.is_empty() {
            break;
        }
        let mv = *moves.choose(rng).unwrap();
        state = make_move_unchecked(&state, mv);
    }
    state
}

/// Uniformly random legal game of up to `plies` half-moves, as a move list.
pub fn random_game(rng: &mut impl Rng, plies: usize) -> Vec<super::UciMove> {
    let mut state = ChessState::initial();
    let mut moves = Vec::with_capacity(plies);
    for _ in 0..plies {
        let legal = legal_moves(&state);
        if legal.is_empty() {
            break;
        }
        let mv = *legal.choose(rng).unwrap();
        state = make_move_unchecked(&state, mv);
        moves.push(mv);
    }
    moves
}

/// As [`random_playout`], returning every state along the way (including the
/// start). Gives `plies + 1` states when no early termination occurs.
pub fn random_playout_states(rng: &mut impl Rng, plies: usize) -> Vec<ChessState> {
    let mut state = ChessState::initial();
    let mut states = vec![state];
    for _ in 0..plies {
        let moves = legal_moves(&state);
        if moves.is_empty() {
            break;
        }
        let mv = *moves.choose(rng).unwrap();
        state = make_move_unchecked(&state, mv);
        states.push(state);
    }
    states
}

/// Scatter sampler for "random boards": both kings plus up to
/// `max_extra_pieces` non-king pieces dropped uniformly on distinct squares,
/// subject to the state invariants (no pawns on back ranks, side not to move
/// not in check). No castling rights, no en passant target. This is one
/// reasonable reading of a uniform random-board distribution, not the only
/// one.
pub fn scatter_state(rng: &mut impl Rng, max_extra_pieces: usize) -> ChessState {
    const KINDS: [PieceKind; 5] = [
        PieceKind::Pawn,
        PieceKind::Knight,
        PieceKind::Bishop,
        PieceKind::Rook,
        PieceKind::Queen,
    ];
    loop {
        let mut state = ChessState {
            board: [None; 64],
            side_to_move: if rng.gen_bool(0.5) {
                Color::White
            } else {
                Color::Black
            },
            castling: super::CastlingRights::none(),
            en_passant: None,
            halfmove_clock: 0,
            fullmove_number: 1,
        };
        let mut order: Vec<Square> = Square::all().collect();
        order.shuffle(rng);
        let mut free = order.into_iter();

        state.set_piece(
            free.next().unwrap(),
            Some(Piece::new(Color::White, PieceKind::King)),
        );
        state.set_piece(
            free.next().unwrap(),
            Some(Piece::new(Color::Black, PieceKind::King)),
        );
        let extra = rng.gen_range(0..=max_extra_pieces);
        for square in free.take(extra) {
            let kind = KINDS[rng.gen_range(0..KINDS.len())];
            let color = if rng.gen_bool(0.5) {
                Color::White
            } else {
                Color::Black
            };
            if kind == PieceKind::Pawn && (square.rank() == 0 || square.rank() == 7) {
                continue;
            }
            state.set_piece(square, Some(Piece::new(color, kind)));
        }
        if state.validate().is_ok() {
            return state;
        }
    }
}

/// Relocate one random non-king piece to a random empty square, keeping the
/// result a valid state. Returns `None` if no valid perturbation was found
/// within the attempt budget (essentially impossible on real positions).
pub fn perturb_one(state: &ChessState, rng: &mut impl Rng) -> Option<ChessState> {
    for _ in 0..200 {
        let movable: Vec<Square> = Square::all()
            .filter(|&sq| {
                state
                    .piece_at(sq)
                    .map(|p| p.kind != PieceKind::King)
                    .unwrap_or(false)
            })
            .collect();
        let empty: Vec<Square> = Square::all()
            .filter(|&sq| state.piece_at(sq).is_none())
            .collect();
        if movable.is_empty() || empty.is_empty() {
            return None;
        }
        let from = *movable.choose(rng).unwrap();
        let to = *empty.choose(rng).unwrap();
        let piece = state.piece_at(from).unwrap();
        if piece.kind == PieceKind::Pawn && (to.rank() == 0 || to.rank() == 7) {
            continue;
        }
        let mut next = *state;
        next.set_piece(from, None);
        next.set_piece(to, Some(piece));
        // Relocating a piece can strand a castling flag or the en passant
        // target; a FEN round trip applies the same cleanup the parser does
        // and rejects anything invalid.
        let fen = super::fen::format_fen(&next);
        if let Ok(cleaned) = super::fen::parse_fen(&fen) {
            return Some(cleaned);
        }
    }
    None
}

/// Apply `count` successive piece perturbations. Retries when the
/// composition happens to undo itself (the second move can put a piece
/// back), so a nonzero count always returns a state different from the
/// input when any perturbation exists at all.
pub fn perturb_pieces(state: &ChessState, count: usize, rng: &mut impl Rng) -> ChessState {
    if count == 0 {
        return *state;
    }
    for _ in 0..50 {
        let mut current = *state;
        for _ in 0..count {
            match perturb_one(&current, rng) {
                Some(next) => current = next,
                None => break,
            }
        }
        if current != *state {
            return current;
        }
    }
    *state
}
