use num_bigint::BigInt;

use crate::error::{ParseError, ParseErrorKind, SourcePos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    /// Postfix `*` marking an antifield (`u*`, `A*[mu]`).
    AntiStar,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Equals,
    DotDot,
    Colon,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("number `{n}`"),
            Tok::AntiStar => "`*` (antifield)".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Equals => "`=`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: SourcePos,
}

/// Tokenizes `src`, numbering positions from (`line`, `column`).
///
/// A `*` directly after an identifier is an antifield marker when the next
/// character is `[`, `^`, `)`, `,`, `;`, whitespace or the end of input;
/// otherwise it is multiplication (`m*u`).
pub fn tokenize(src: &str, line: usize, column: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut ln, mut col) = (line, column);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = SourcePos { line: ln, column: col };
        if c == '\n' {
            ln += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(name), pos });
            if i < chars.len() && chars[i] == '*' {
                let next = chars.get(i + 1).copied();
                let marker = match next {
                    None => true,
                    Some(n) => n.is_whitespace() || matches!(n, '[' | '^' | ')' | ',' | ';'),
                };
                if marker {
                    out.push(Spanned { tok: Tok::AntiStar, pos: SourcePos { line: ln, column: col } });
                    i += 1;
                    col += 1;
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Int(digits.parse().expect("digits")), pos });
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '=' => Tok::Equals,
            ':' => Tok::Colon,
            '.' if chars.get(i + 1) == Some(&'.') => {
                i += 1;
                col += 1;
                Tok::DotDot
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    ParseErrorKind::Syntax {
                        expected: vec!["expression".into()],
                        found: format!("character `{other}`"),
                    },
                ))
            }
        };
        out.push(Spanned { tok, pos });
        i += 1;
        col += 1;
    }
    out.push(Spanned { tok: Tok::Eof, pos: SourcePos { line: ln, column: col } });
    Ok(out)
}
