//! Extract a FEN from free-form model output.
//!
//! Chat models restate context, apologize, and wrap answers in prose; the
//! extractor scans for FEN-shaped spans (a well-formed 8-rank placement
//! field followed by as many further fields as match) and keeps the LAST
//! one, on the convention that the final statement is the answer. The strict
//! parser then decides between a usable state, malformed syntax, and an
//! illegal position.

use statecheck_core::chess::fen::{parse_fen, FenError};
use statecheck_core::chess::ChessState;

use crate::records::ParseStatus;

fn is_placement_char(c: char) -> bool {
    matches!(c, 'p' | 'n' | 'b' | 'r' | 'q' | 'k')
        || matches!(c, 'P' | 'N' | 'B' | 'R' | 'Q' | 'K')
        || c.is_ascii_digit()
        || c == '/'
}

fn looks_like_placement(s: &str) -> bool {
    let ranks: Vec<&str> = s.split('/').collect();
    // Ranks a little over 8 wide still count as an attempted FEN (a model
    // hallucinating a ninth piece); the strict parser sorts those out.
    ranks.len() == 8 && ranks.iter().all(|r| !r.is_empty() && r.len() <= 10)
}

fn is_side_token(s: &str) -> bool {
    s == "w" || s == "b"
}

fn is_castling_token(s: &str) -> bool {
    s == "-" || (!s.is_empty() && s.len() <= 4 && s.chars().all(|c| "KQkq".contains(c)))
}

fn is_ep_token(s: &str) -> bool {
    s == "-"
        || (s.len() == 2
            && s.as_bytes()[0].is_ascii_lowercase()
            && ('a'..='h').contains(&(s.as_bytes()[0] as char))
            && ('1'..='8').contains(&(s.as_bytes()[1] as char)))
}

fn is_counter_token(s: &str) -> bool {
    !s.is_empty() && s.len() <= 4 && s.chars().all(|c| c.is_ascii_digit())
}

/// The last FEN-shaped span in the text, if any. A bare placement field
/// counts as a span (it is clearly an attempted FEN), so that malformed
/// attempts are distinguishable from responses with no FEN at all.
pub fn extract_fen_span(raw: &str) -> Option<&str> {
    let bytes = raw.as_bytes();
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < bytes.len() {
        if !is_placement_char(bytes[i] as char) {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && is_placement_char(bytes[i] as char) {
            i += 1;
        }
        let candidate = &raw[start..i];
        if !looks_like_placement(candidate) {
            continue;
        }
        // Greedily consume following whitespace-separated fields while they
        // keep matching the FEN field shapes, in order. A placement alone
        // (or any prefix of the six fields) still counts as a span; the
        // strict parser reports what is missing.
        let mut end = i;
        let mut rest = raw[i..].split_whitespace();
        let checks: [&dyn Fn(&str) -> bool; 5] = [
            &is_side_token,
            &is_castling_token,
            &is_ep_token,
            &is_counter_token,
            &is_counter_token,
        ];
        let mut cursor = i;
        for check in checks {
            match rest.next() {
                Some(token) if check(token) => {
                    // The next token starts at its first occurrence past
                    // `cursor`; only whitespace sits in between.
                    let offset = raw[cursor..].find(token).unwrap();
                    cursor = cursor + offset + token.len();
                    end = cursor;
                }
                _ => break,
            }
        }
        best = Some((start, end));
    }
    best.map(|(start, end)| raw[start..end].trim_end())
}

/// Extract the last FEN-shaped span and parse it strictly.
pub fn parse_prediction(raw: &str) -> (Option<ChessState>, ParseStatus) {
    let Some(span) = extract_fen_span(raw) else {
        return (None, ParseStatus::NoFenFound);
    };
    match parse_fen(span) {
        Ok(state) => (Some(state), ParseStatus::Ok),
        Err(FenError::Malformed(_)) => (None, ParseStatus::MalformedFen),
        Err(FenError::Illegal(_)) => (None, ParseStatus::IllegalPosition),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statecheck_core::chess::fen::format_fen;
    use statecheck_core::chess::ChessState;

    const INITIAL: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

    #[test]
    fn bare_fen_parses_ok() {
        let (state, status) = parse_prediction(INITIAL);
        assert_eq!(status, ParseStatus::Ok);
        assert_eq!(format_fen(&state.unwrap()), INITIAL);
    }

    #[test]
    fn fen_inside_prose_is_extracted() {
        let raw = format!("Sure! I think the board is: {INITIAL} — hope that helps.");
        let (state, status) = parse_prediction(&raw);
        assert_eq!(status, ParseStatus::Ok);
        assert_eq!(state.unwrap(), ChessState::initial());
    }

    #[test]
    fn the_last_span_wins() {
        let raw = format!(
            "The starting position is {INITIAL}. After 1. e4 it becomes \
             rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1"
        );
        let (state, status) = parse_prediction(&raw);
        assert_eq!(status, ParseStatus::Ok);
        assert_eq!(state.unwrap().side_to_move, statecheck_core::chess::Color::Black);
    }

    #[test]
    fn missing_counters_still_parse() {
        let (state, status) =
            parse_prediction("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -");
        assert_eq!(status, ParseStatus::Ok);
        let state = state.unwrap();
        assert_eq!(state.halfmove_clock, 0);
        assert_eq!(state.fullmove_number, 1);
    }

    #[test]
    fn kingless_board_is_illegal_position() {
        let (state, status) = parse_prediction("here: 8/8/8/8/8/8/8/8 w - - 0 1");
        assert_eq!(status, ParseStatus::IllegalPosition);
        assert!(state.is_none());
    }

    #[test]
    fn fen_shaped_garbage_is_malformed() {
        // Nine files in one rank: shaped like a FEN, rejected by the parser.
        let (state, status) = parse_prediction("maybe 9/8/8/8/8/8/8/8 w - - 0 1");
        assert_eq!(status, ParseStatus::MalformedFen);
        assert!(state.is_none());
    }

    #[test]
    fn no_fen_at_all() {
        for raw in ["no idea", "", "the answer is 42", "https://a/b/c 2024/05/06"] {
            let (state, status) = parse_prediction(raw);
            assert_eq!(status, ParseStatus::NoFenFound, "{raw}");
            assert!(state.is_none());
        }
    }

    #[test]
    fn trailing_punctuation_is_not_swallowed() {
        let raw = format!("{INITIAL}.");
        let (_, status) = parse_prediction(&raw);
        assert_eq!(status, ParseStatus::Ok);
    }

    #[test]
    fn span_extraction_returns_text() {
        assert_eq!(extract_fen_span(&format!("x {INITIAL} y")), Some(INITIAL));
        assert_eq!(extract_fen_span("nothing"), None);
    }
}
