//! Board state for standard chess.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }

    /// Pawn push direction as a rank delta.
    pub fn forward(self) -> i8 {
        match self {
            Color::White => 1,
            Color::Black => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceKind {
    Pawn,
    Knight,
    Bishop,
    Rook,
    Queen,
    King,
}

impl PieceKind {
    pub fn from_char(c: char) -> Option<PieceKind> {
        Some(match c.to_ascii_lowercase() {
            'p' => PieceKind::Pawn,
            'n' => PieceKind::Knight,
            'b' => PieceKind::Bishop,
            'r' => PieceKind::Rook,
            'q' => PieceKind::Queen,
            'k' => PieceKind::King,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            PieceKind::Pawn => 'p',
            PieceKind::Knight => 'n',
            PieceKind::Bishop => 'b',
            PieceKind::Rook => 'r',
            PieceKind::Queen => 'q',
            PieceKind::King => 'k',
        }
    }

    /// Uppercase letter used in SAN for non-pawn pieces.
    pub fn san_letter(self) -> char {
        self.to_char().to_ascii_uppercase()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Piece {
    pub color: Color,
    pub kind: PieceKind,
}

impl Piece {
    pub fn new(color: Color, kind: PieceKind) -> Piece {
        Piece { color, kind }
    }

    /// FEN letter: uppercase for white, lowercase for black.
    pub fn fen_char(self) -> char {
        let c = self.kind.to_char();
        match self.color {
            Color::White => c.to_ascii_uppercase(),
            Color::Black => c,
        }
    }

    pub fn from_fen_char(c: char) -> Option<Piece> {
        let kind = PieceKind::from_char(c)?;
        let color = if c.is_ascii_uppercase() {
            Color::White
        } else {
            Color::Black
        };
        Some(Piece { color, kind })
    }
}

/// Board square, index 0 = a1 through 63 = h8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square(u8);

impl Square {
    /// From 0-based file and rank.
    pub fn new(file: u8, rank: u8) -> Square {
        debug_assert!(file < 8 && rank < 8);
        Square(rank * 8 + file)
    }

    pub fn from_index(index: u8) -> Square {
        debug_assert!(index < 64);
        Square(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 0-based file (a = 0).
    pub fn file(self) -> u8 {
        self.0 % 8
    }

    /// 0-based rank (rank 1 = 0).
    pub fn rank(self) -> u8 {
        self.0 / 8
    }

    /// Offset by file/rank deltas, `None` when it leaves the board.
    pub fn offset(self, df: i8, dr: i8) -> Option<Square> {
        let file = self.file() as i8 + df;
        let rank = self.rank() as i8 + dr;
        if (0..8).contains(&file) && (0..8).contains(&rank) {
            Some(Square::new(file as u8, rank as u8))
        } else {
            None
        }
    }

    pub fn all() -> impl Iterator<Item = Square> {
        (0..64).map(Square)
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            (b'a' + self.file()) as char,
            (b'1' + self.rank()) as char
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid square `{0}`")]
pub struct InvalidSquare(pub String);

impl FromStr for Square {
    type Err = InvalidSquare;

    fn from_str(s: &str) -> Result<Square, InvalidSquare> {
        let bytes = s.as_bytes();
        if bytes.len() != 2 {
            return Err(InvalidSquare(s.to_string()));
        }
        let file = bytes[0].wrapping_sub(b'a');
        let rank = bytes[1].wrapping_sub(b'1');
        if file < 8 && rank < 8 {
            Ok(Square::new(file, rank))
        } else {
            Err(InvalidSquare(s.to_string()))
        }
    }
}

/// Castling availability, one flag per side and wing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CastlingRights {
    pub white_kingside: bool,
    pub white_queenside: bool,
    pub black_kingside: bool,
    pub black_queenside: bool,
}

impl CastlingRights {
    pub fn all() -> CastlingRights {
        CastlingRights {
            white_kingside: true,
            white_queenside: true,
            black_kingside: true,
            black_queenside: true,
        }
    }

    pub fn none() -> CastlingRights {
        CastlingRights::default()
    }

    pub fn any(self) -> bool {
        self.white_kingside || self.white_queenside || self.black_kingside || self.black_queenside
    }

    pub fn kingside(self, color: Color) -> bool {
        match color {
            Color::White => self.white_kingside,
            Color::Black => self.black_kingside,
        }
    }

    pub fn queenside(self, color: Color) -> bool {
        match color {
            Color::White => self.white_queenside,
            Color::Black => self.black_queenside,
        }
    }
}

/// Reasons a syntactically well-formed position is not a legal chess state.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PositionError {
    #[error("expected exactly one {0:?} king, found {1}")]
    KingCount(Color, usize),
    #[error("pawn on back rank at {0}")]
    PawnOnBackRank(Square),
    #[error("en passant target {0} is on the wrong rank for the side to move")]
    EnPassantRank(Square),
    #[error("the side not to move is in check")]
    OppositeKingInCheck,
}

/// Full game state: placement, side to move, castling rights, en passant
/// target, and the two move counters.
///
/// Values of this type always satisfy the position invariants (one king per
/// color, no pawns on the back ranks, en passant target on the correct rank,
/// side not to move not in check): construction goes through FEN parsing or
/// legal move application, both of which maintain them.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChessState {
    pub(crate) board: [Option<Piece>; 64],
    pub side_to_move: Color,
    pub castling: CastlingRights,
    pub en_passant: Option<Square>,
    pub halfmove_clock: u32,
    pub fullmove_number: u32,
}

impl ChessState {
    /// The standard initial position.
    pub fn initial() -> ChessState {
        use PieceKind::*;
        let mut board = [None; 64];
        let back = [Rook, Knight, Bishop, Queen, King, Bishop, Knight, Rook];
        for (file, &kind) in back.iter().enumerate() {
            board[Square::new(file as u8, 0).index()] = Some(Piece::new(Color::White, kind));
            board[Square::new(file as u8, 7).index()] = Some(Piece::new(Color::Black, kind));
            board[Square::new(file as u8, 1).index()] = Some(Piece::new(Color::White, Pawn));
            board[Square::new(file as u8, 6).index()] = Some(Piece::new(Color::Black, Pawn));
        }
        ChessState {
            board,
            side_to_move: Color::White,
            castling: CastlingRights::all(),
            en_passant: None,
            halfmove_clock: 0,
            fullmove_number: 1,
        }
    }

    pub fn piece_at(&self, square: Square) -> Option<Piece> {
        self.board[square.index()]
    }

    pub(crate) fn set_piece(&mut self, square: Square, piece: Option<Piece>) {
        self.board[square.index()] = piece;
    }

    /// Raw placement array, indexed by [`Square::index`].
    pub fn placement(&self) -> &[Option<Piece>; 64] {
        &self.board
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        Square::all().find(|&sq| {
            self.board[sq.index()]
                .map(|p| p.kind == PieceKind::King && p.color == color)
                .unwrap_or(false)
        })
    }

    /// Check the position invariants. Used by the FEN parser; reachable
    /// states maintain them by construction.
    pub fn validate(&self) -> Result<(), PositionError> {
        for color in [Color::White, Color::Black] {
            let kings = Square::all()
                .filter(|&sq| self.piece_at(sq) == Some(Piece::new(color, PieceKind::King)))
                .count();
            if kings != 1 {
                return Err(PositionError::KingCount(color, kings));
            }
        }
        for sq in Square::all() {
            if let Some(p) = self.piece_at(sq) {
                if p.kind == PieceKind::Pawn && (sq.rank() == 0 || sq.rank() == 7) {
                    return Err(PositionError::PawnOnBackRank(sq));
                }
            }
        }
        if let Some(ep) = self.en_passant {
            // After white's double push (black to move) the target is on rank
            // 3; after black's (white to move) it is on rank 6.
            let expected_rank = match self.side_to_move {
                Color::Black => 2,
                Color::White => 5,
            };
            if ep.rank() != expected_rank {
                return Err(PositionError::EnPassantRank(ep));
            }
        }
        let opponent = self.side_to_move.opposite();
        if let Some(king) = self.king_square(opponent) {
            if crate::chess::movegen::is_square_attacked(self, king, self.side_to_move) {
                return Err(PositionError::OppositeKingInCheck);
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ChessState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChessState({})", crate::chess::fen::format_fen(self))
    }
}
