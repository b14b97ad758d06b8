//! Tokenizer for `.twr` sources.

use super::{ParseError, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    // keywords
    Fun,
    Return,
    Let,
    If,
    Else,
    With,
    Do,
    Skip,
    Type,
    Alloc,
    Default,
    Null,
    True,
    False,
    Not,
    Test,
    UInt,
    Bool,
    Ptr,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Underscore,
    LArrow,
    RArrow,
    SwapArrow,
    Star,
    Plus,
    Minus,
    Amp,
    AmpAmp,
    Pipe,
    PipePipe,
    Caret,
    EqEq,
    BangEq,
    Assign,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Fun => "fun",
            Tok::Return => "return",
            Tok::Let => "let",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::With => "with",
            Tok::Do => "do",
            Tok::Skip => "skip",
            Tok::Type => "type",
            Tok::Alloc => "alloc",
            Tok::Default => "default",
            Tok::Null => "null",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Not => "not",
            Tok::Test => "test",
            Tok::UInt => "uint",
            Tok::Bool => "bool",
            Tok::Ptr => "ptr",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Underscore => "_",
            Tok::LArrow => "<-",
            Tok::RArrow => "->",
            Tok::SwapArrow => "<->",
            Tok::Star => "*",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Amp => "&",
            Tok::AmpAmp => "&&",
            Tok::Pipe => "|",
            Tok::PipePipe => "||",
            Tok::Caret => "^",
            Tok::EqEq => "==",
            Tok::BangEq => "!=",
            Tok::Assign => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Shl => "<<",
            Tok::Shr => ">>",
            Tok::Ident(_) | Tok::Num(_) | Tok::Eof => "",
        }
    }
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "fun" => Tok::Fun,
        "return" => Tok::Return,
        "let" => Tok::Let,
        "if" => Tok::If,
        "else" => Tok::Else,
        "with" => Tok::With,
        "do" => Tok::Do,
        "skip" => Tok::Skip,
        "type" => Tok::Type,
        "alloc" => Tok::Alloc,
        "default" => Tok::Default,
        "null" => Tok::Null,
        "true" => Tok::True,
        "false" => Tok::False,
        "not" => Tok::Not,
        "test" => Tok::Test,
        "uint" => Tok::UInt,
        "bool" => Tok::Bool,
        "ptr" => Tok::Ptr,
        "_" => Tok::Underscore,
        _ => return None,
    })
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(ParseError::new(span, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            if !text.chars().all(|c| c.is_ascii_digit()) {
                return Err(ParseError::new(span, format!("malformed number `{text}`")));
            }
            let n = text
                .parse::<u64>()
                .map_err(|_| ParseError::new(span, format!("number `{text}` is too large")))?;
            out.push((Tok::Num(n), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            out.push((keyword(&text).unwrap_or(Tok::Ident(text)), span));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let (tok, len) = match (c, next, next2) {
            ('<', Some('-'), Some('>')) => (Tok::SwapArrow, 3),
            ('<', Some('-'), _) => (Tok::LArrow, 2),
            ('<', Some('<'), _) => (Tok::Shl, 2),
            ('<', Some('='), _) => (Tok::Le, 2),
            ('<', _, _) => (Tok::Lt, 1),
            ('-', Some('>'), _) => (Tok::RArrow, 2),
            ('-', _, _) => (Tok::Minus, 1),
            ('>', Some('>'), _) => (Tok::Shr, 2),
            ('>', Some('='), _) => (Tok::Ge, 2),
            ('>', _, _) => (Tok::Gt, 1),
            ('=', Some('='), _) => (Tok::EqEq, 2),
            ('=', _, _) => (Tok::Assign, 1),
            ('!', Some('='), _) => (Tok::BangEq, 2),
            ('&', Some('&'), _) => (Tok::AmpAmp, 2),
            ('&', _, _) => (Tok::Amp, 1),
            ('|', Some('|'), _) => (Tok::PipePipe, 2),
            ('|', _, _) => (Tok::Pipe, 1),
            ('^', _, _) => (Tok::Caret, 1),
            ('*', _, _) => (Tok::Star, 1),
            ('+', _, _) => (Tok::Plus, 1),
            ('(', _, _) => (Tok::LParen, 1),
            (')', _, _) => (Tok::RParen, 1),
            ('{', _, _) => (Tok::LBrace, 1),
            ('}', _, _) => (Tok::RBrace, 1),
            ('[', _, _) => (Tok::LBracket, 1),
            (']', _, _) => (Tok::RBracket, 1),
            (',', _, _) => (Tok::Comma, 1),
            (';', _, _) => (Tok::Semi, 1),
            (':', _, _) => (Tok::Colon, 1),
            ('.', _, _) => (Tok::Dot, 1),
            _ => return Err(ParseError::new(span, format!("unexpected character `{c}`"))),
        };
        out.push((tok, span));
        advance(&mut i, &mut line, &mut col, len);
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn arrows_take_longest_match() {
        assert_eq!(toks("a <-> b"), vec![Tok::Ident("a".into()), Tok::SwapArrow, Tok::Ident("b".into()), Tok::Eof]);
        assert_eq!(toks("<- ->"), vec![Tok::LArrow, Tok::RArrow, Tok::Eof]);
    }

    #[test]
    fn comments_are_skipped_and_positions_tracked() {
        let t = tokenize("/* a\n b */ let").unwrap();
        assert_eq!(t[0].0, Tok::Let);
        assert_eq!((t[0].1.line, t[0].1.col), (2, 7));
    }

    #[test]
    fn hex_literals_are_rejected() {
        assert!(tokenize("0x10").is_err());
    }

    #[test]
    fn projection_lexes_as_dot_number() {
        assert_eq!(toks("t.1"), vec![Tok::Ident("t".into()), Tok::Dot, Tok::Num(1), Tok::Eof]);
    }
}
