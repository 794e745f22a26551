use crate::error::{PddlError, PddlErrorKind};
use crate::pddl::ast::SourceText;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    LParen,
    RParen,
    /// Any maximal run of non-delimiter characters, lowercased.
    /// `:keyword`, `?variable`, `-`, and plain names all arrive as words;
    /// the parser decides what shape it expected.
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == ';'
}

/// Tokenize s-expression text. `;` starts a comment running to end of line.
/// Identifiers are case-insensitive in PDDL; words are normalized to
/// lowercase here so every later stage compares them directly.
pub fn tokenize(src: &SourceText) -> Result<Vec<Token>, PddlError> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.content.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                tokens.push(Token { kind: TokenKind::LParen, line, col });
                chars.next();
                col += 1;
            }
            ')' => {
                tokens.push(Token { kind: TokenKind::RParen, line, col });
                chars.next();
                col += 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            c if c.is_control() => {
                return Err(PddlError::new(
                    &src.origin,
                    line,
                    col,
                    PddlErrorKind::Lex(format!("control character U+{:04X}", c as u32)),
                ));
            }
            _ => {
                let (start_line, start_col) = (line, col);
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if is_delim(c) {
                        break;
                    }
                    word.extend(c.to_lowercase());
                    chars.next();
                    col += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Word(word),
                    line: start_line,
                    col: start_col,
                });
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(text: &str) -> Vec<String> {
        let src = SourceText::inline(text);
        tokenize(&src)
            .unwrap()
            .into_iter()
            .filter_map(|t| match t.kind {
                TokenKind::Word(w) => Some(w),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn splits_on_parens_without_spaces() {
        let src = SourceText::inline("(at ?obj ?loc)");
        let toks = tokenize(&src).unwrap();
        assert_eq!(toks.len(), 5);
        assert_eq!(toks[0].kind, TokenKind::LParen);
        assert_eq!(toks[1].kind, TokenKind::Word("at".into()));
        assert_eq!(toks[4].kind, TokenKind::RParen);
    }

    #[test]
    fn lowercases_identifiers() {
        assert_eq!(words("Franka ?Rob :STRIPS"), vec!["franka", "?rob", ":strips"]);
    }

    #[test]
    fn dash_is_a_word() {
        assert_eq!(words("beaker vial - glassware"), vec!["beaker", "vial", "-", "glassware"]);
    }

    #[test]
    fn comments_run_to_eol() {
        assert_eq!(words("a ; comment (ignored\nb"), vec!["a", "b"]);
    }

    #[test]
    fn tracks_line_and_col() {
        let src = SourceText::inline("(a\n  b)");
        let toks = tokenize(&src).unwrap();
        let b = &toks[2];
        assert_eq!((b.line, b.col), (2, 3));
    }

    #[test]
    fn colon_inside_identifier_is_kept() {
        assert_eq!(words("wash:start"), vec!["wash:start"]);
    }
}
