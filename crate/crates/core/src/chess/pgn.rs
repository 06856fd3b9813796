//! PGN import: headers plus mainline moves.
//!
//! Comments (`{...}` and `;`), nested variations, and NAGs are skipped. A
//! game whose movetext cannot be resolved is reported and dropped without
//! failing the rest of the corpus.

use super::san::san_to_move;
use super::state::ChessState;
use super::movegen::apply_move;
use super::UciMove;

/// One imported game: resolved coordinate moves plus the raw tag pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct GameRecord {
    pub game_id: String,
    pub moves: Vec<UciMove>,
    pub headers: Vec<(String, String)>,
}

/// A game that failed to import, with enough context to find it again.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedGame {
    pub index: usize,
    pub game_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PgnCorpus {
    pub games: Vec<GameRecord>,
    pub skipped: Vec<SkippedGame>,
}

struct RawGame {
    headers: Vec<(String, String)>,
    movetext: String,
}

fn parse_header_line(line: &str) -> Option<(String, String)> {
    let inner = line.trim().strip_prefix('[')?.strip_suffix(']')?;
    let (tag, rest) = inner.split_once(char::is_whitespace)?;
    let value = rest.trim().strip_prefix('"')?.strip_suffix('"')?;
    Some((tag.to_string(), value.to_string()))
}

/// Does this movetext line end the game, i.e. carry a result token outside
/// any comment or variation? Depth state persists across lines because
/// comments may span them.
fn line_has_result(line: &str, brace_depth: &mut usize, paren_depth: &mut usize) -> bool {
    let mut found = false;
    for token in line.split_whitespace() {
        let mut cleaned = String::new();
        for c in token.chars() {
            if *brace_depth > 0 {
                if c == '}' {
                    *brace_depth -= 1;
                }
                continue;
            }
            match c {
                '{' => *brace_depth += 1,
                '(' => *paren_depth += 1,
                ')' => *paren_depth = paren_depth.saturating_sub(1),
                ';' => return found, // rest of the line is a comment
                _ if *paren_depth == 0 => cleaned.push(c),
                _ => {}
            }
        }
        if is_result(&cleaned) {
            found = true;
        }
    }
    found
}

/// Split raw text into (headers, movetext) chunks. A game ends at its
/// result token or at the next header line, whichever comes first, so
/// headerless multi-game files still split correctly.
fn split_games(text: &str) -> Vec<RawGame> {
    let mut games = Vec::new();
    let mut headers = Vec::new();
    let mut movetext = String::new();
    let mut in_movetext = false;
    let mut brace_depth = 0usize;
    let mut paren_depth = 0usize;

    let mut close = |headers: &mut Vec<(String, String)>, movetext: &mut String| {
        games.push(RawGame {
            headers: std::mem::take(headers),
            movetext: std::mem::take(movetext),
        });
    };

    for line in text.lines() {
        let trimmed = line.trim();
        let at_top_level = brace_depth == 0 && paren_depth == 0;
        if at_top_level && trimmed.starts_with('[') && parse_header_line(trimmed).is_some() {
            if in_movetext {
                close(&mut headers, &mut movetext);
                in_movetext = false;
            }
            headers.push(parse_header_line(trimmed).unwrap());
        } else if !trimmed.is_empty() {
            in_movetext = true;
            movetext.push_str(line);
            movetext.push('\n');
            if line_has_result(line, &mut brace_depth, &mut paren_depth) {
                close(&mut headers, &mut movetext);
                in_movetext = false;
            }
        }
    }
    if in_movetext || !headers.is_empty() {
        close(&mut headers, &mut movetext);
    }
    games
}

/// Strip comments, variations, and line comments from movetext, returning
/// bare tokens.
fn movetext_tokens(text: &str) -> Vec<&str> {
    fn flush<'a>(text: &'a str, start: &mut Option<usize>, end: usize, tokens: &mut Vec<&'a str>) {
        if let Some(s) = start.take() {
            tokens.push(&text[s..end]);
        }
    }

    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut start: Option<usize> = None;
    let mut brace_depth = 0usize;
    let mut paren_depth = 0usize;

    while i < bytes.len() {
        let c = bytes[i] as char;
        if brace_depth > 0 {
            if c == '}' {
                brace_depth -= 1;
            }
            i += 1;
            continue;
        }
        if paren_depth > 0 {
            match c {
                '(' => paren_depth += 1,
                ')' => paren_depth -= 1,
                '{' => brace_depth += 1,
                _ => {}
            }
            i += 1;
            continue;
        }
        match c {
            '{' => {
                flush(text, &mut start, i, &mut tokens);
                brace_depth = 1;
            }
            '(' => {
                flush(text, &mut start, i, &mut tokens);
                paren_depth = 1;
            }
            ';' => {
                flush(text, &mut start, i, &mut tokens);
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            _ if c.is_whitespace() => flush(text, &mut start, i, &mut tokens),
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
        i += 1;
    }
    flush(text, &mut start, bytes.len(), &mut tokens);
    tokens
}

fn is_move_number(token: &str) -> bool {
    let trimmed = token.trim_end_matches('.');
    !trimmed.is_empty() && trimmed.chars().all(|c| c.is_ascii_digit())
}

fn is_result(token: &str) -> bool {
    matches!(token, "1-0" | "0-1" | "1/2-1/2" | "*")
}

fn resolve_moves(movetext: &str) -> Result<Vec<UciMove>, String> {
    let mut state = ChessState::initial();
    let mut moves = Vec::new();
    for token in movetext_tokens(movetext) {
        if is_move_number(token) || is_result(token) || token.starts_with('$') {
            continue;
        }
        // Move numbers glued to the move ("1.e4") show up in the wild.
        let token = token.trim_start_matches(|c: char| c.is_ascii_digit() || c == '.');
        if token.is_empty() {
            continue;
        }
        let mv = san_to_move(&state, token).map_err(|e| e.to_string())?;
        state = apply_move(&state, mv).expect("resolved SAN move is legal");
        moves.push(mv);
    }
    Ok(moves)
}

fn header_value<'a>(headers: &'a [(String, String)], tag: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(t, _)| t == tag)
        .map(|(_, v)| v.as_str())
}

/// Parse a PGN string that may hold any number of games. Unresolvable games
/// land in `skipped`; empty input yields an empty corpus.
pub fn parse_pgn(text: &str) -> PgnCorpus {
    let mut corpus = PgnCorpus::default();
    for (index, raw) in split_games(text).into_iter().enumerate() {
        if raw.headers.is_empty() && raw.movetext.trim().is_empty() {
            continue;
        }
        let game_id = header_value(&raw.headers, "Site")
            .or_else(|| header_value(&raw.headers, "Event"))
            .map(|v| format!("{v}#{index}"))
            .unwrap_or_else(|| format!("game-{index}"));
        match resolve_moves(&raw.movetext) {
            Ok(moves) => corpus.games.push(GameRecord {
                game_id,
                moves,
                headers: raw.headers,
            }),
            Err(reason) => corpus.skipped.push(SkippedGame {
                index,
                game_id,
                reason,
            }),
        }
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_game_resolves_to_coordinate_moves() {
        let corpus = parse_pgn("1. e4 e5 2. Nf3 *");
        assert!(corpus.skipped.is_empty());
        assert_eq!(corpus.games.len(), 1);
        let expected: Vec<UciMove> = ["e2e4", "e7e5", "g1f3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(corpus.games[0].moves, expected);
    }

    #[test]
    fn empty_input_is_an_empty_corpus() {
        let corpus = parse_pgn("");
        assert!(corpus.games.is_empty());
        assert!(corpus.skipped.is_empty());
    }

    #[test]
    fn illegal_san_skips_only_that_game() {
        let text = "[Event \"a\"]\n\n1. e5 *\n\n[Event \"b\"]\n\n1. e4 *\n";
        let corpus = parse_pgn(text);
        assert_eq!(corpus.games.len(), 1);
        assert_eq!(corpus.skipped.len(), 1);
        assert_eq!(corpus.skipped[0].index, 0);
        assert!(corpus.skipped[0].reason.contains("e5"));
    }

    #[test]
    fn headers_are_preserved() {
        let text = "[Event \"Test Match\"]\n[Site \"nowhere\"]\n\n1. d4 d5 1/2-1/2\n";
        let corpus = parse_pgn(text);
        assert_eq!(corpus.games.len(), 1);
        let game = &corpus.games[0];
        assert_eq!(
            game.headers,
            vec![
                ("Event".to_string(), "Test Match".to_string()),
                ("Site".to_string(), "nowhere".to_string())
            ]
        );
        assert!(game.game_id.starts_with("nowhere"));
    }

    #[test]
    fn comments_variations_and_nags_are_skipped() {
        let text = "1. e4 {king pawn (the usual)} e5 $1 (1... c5 2. Nf3 {sicilian}) 2. Nf3 ; aside\n2... Nc6 *";
        let corpus = parse_pgn(text);
        assert!(corpus.skipped.is_empty(), "{:?}", corpus.skipped);
        let expected: Vec<UciMove> = ["e2e4", "e7e5", "g1f3", "b8c6"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(corpus.games[0].moves, expected);
    }

    #[test]
    fn multiple_games_split_on_headers() {
        let text = "\
[Event \"one\"]

1. e4 e5 2. Nf3 Nc6 1-0

[Event \"two\"]

1. d4 d5 2. c4 0-1
";
        let corpus = parse_pgn(text);
        assert_eq!(corpus.games.len(), 2);
        assert_eq!(corpus.games[0].moves.len(), 4);
        assert_eq!(corpus.games[1].moves.len(), 3);
    }

    #[test]
    fn headerless_games_split_on_result_tokens() {
        let text = "1. e4 e5 2. Nf3 1-0\n\n1. d4 d5 0-1\n\n1. c4 *\n";
        let corpus = parse_pgn(text);
        assert!(corpus.skipped.is_empty(), "{:?}", corpus.skipped);
        assert_eq!(corpus.games.len(), 3);
        assert_eq!(corpus.games[0].moves.len(), 3);
        assert_eq!(corpus.games[1].moves.len(), 2);
        assert_eq!(corpus.games[2].moves.len(), 1);
    }

    #[test]
    fn result_tokens_inside_comments_do_not_split() {
        let text = "1. e4 {planning 1-0} e5 2. Nf3 {spans\nthe result 0-1\nlines} Nc6 1/2-1/2\n";
        let corpus = parse_pgn(text);
        assert!(corpus.skipped.is_empty(), "{:?}", corpus.skipped);
        assert_eq!(corpus.games.len(), 1);
        assert_eq!(corpus.games[0].moves.len(), 4);
    }

    #[test]
    fn glued_move_numbers_are_tolerated() {
        let corpus = parse_pgn("1.e4 e5 2.Nf3 *");
        assert_eq!(corpus.games[0].moves.len(), 3);
    }

    #[test]
    fn replaying_moves_never_sinks() {
        let text = "[Event \"x\"]\n\n1. e4 c5 2. Nf3 d6 3. d4 cxd4 4. Nxd4 Nf6 5. Nc3 a6 *\n";
        let corpus = parse_pgn(text);
        assert!(corpus.skipped.is_empty());
        let game = &corpus.games[0];
        let mut state = ChessState::initial();
        for &mv in &game.moves {
            state = apply_move(&state, mv).expect("PGN moves replay legally");
        }
        assert_eq!(game.moves.len(), 10);
    }
}
