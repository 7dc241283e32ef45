//! Hand-rolled lexer shared by the RTL parser and the assertion parser.
//! Comments are skipped; every token records its byte position.

use crate::hdl::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// System identifier like `$past` (dollar included in the name).
    SysIdent(String),
    /// Raw number text, e.g. `3'b101`, `8'hFF`, `42`.
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Dot,
    At,
    Hash,
    DoubleHash,
    Question,
    Assign,       // =
    NonBlocking,  // <= (also less-or-equal in expression position)
    EqEq,
    NotEq,
    Lt,
    Ge,
    Gt,
    AndAnd,
    OrOr,
    Not,
    Tilde,
    Amp,
    Pipe,
    Caret,
    Plus,
    Minus,
    Star,
    Shl,
    Shr,
    OverlapImpl,    // |->
    NonOverlapImpl, // |=>
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::SysIdent(s) => format!("`{}`", s),
            Tok::Number(s) => format!("number `{}`", s),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::At => "@",
            Tok::Hash => "#",
            Tok::DoubleHash => "##",
            Tok::Question => "?",
            Tok::Assign => "=",
            Tok::NonBlocking => "<=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Not => "!",
            Tok::Tilde => "~",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Caret => "^",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Shl => "<<",
            Tok::Shr => ">>",
            Tok::OverlapImpl => "|->",
            Tok::NonOverlapImpl => "|=>",
            _ => "",
        }
    }
}

/// A token with its byte span within the lexed text.
#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

pub fn lex(text: &str, file: u32) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        // whitespace
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // comments
        if b == b'/' && i + 1 < bytes.len() {
            if bytes[i + 1] == b'/' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            if bytes[i + 1] == b'*' {
                let close = text[i + 2..].find("*/").map(|p| i + 2 + p);
                match close {
                    Some(p) => {
                        i = p + 2;
                        continue;
                    }
                    None => {
                        return Err(ParseError::syntax(file, i, "unterminated block comment"));
                    }
                }
            }
        }
        let start = i;
        // identifiers and keywords
        if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$')
            {
                i += 1;
            }
            toks.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        // system identifiers
        if b == b'$' {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push(Token {
                tok: Tok::SysIdent(text[start..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        // numbers, including based literals like 3'b101 and 8'hFF
        if b.is_ascii_digit() || b == b'\'' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'\'' {
                i += 1;
                if i < bytes.len() && matches!(bytes[i], b'b' | b'B' | b'o' | b'O' | b'd' | b'D' | b'h' | b'H') {
                    i += 1;
                }
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
            }
            toks.push(Token {
                tok: Tok::Number(text[start..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        // operators and punctuation
        let rest = &text[i..];
        let (tok, len) = if rest.starts_with("|->") {
            (Tok::OverlapImpl, 3)
        } else if rest.starts_with("|=>") {
            (Tok::NonOverlapImpl, 3)
        } else if rest.starts_with("##") {
            (Tok::DoubleHash, 2)
        } else if rest.starts_with("==") {
            (Tok::EqEq, 2)
        } else if rest.starts_with("!=") {
            (Tok::NotEq, 2)
        } else if rest.starts_with("<=") {
            (Tok::NonBlocking, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("<<") {
            (Tok::Shl, 2)
        } else if rest.starts_with(">>") {
            (Tok::Shr, 2)
        } else if rest.starts_with("&&") {
            (Tok::AndAnd, 2)
        } else if rest.starts_with("||") {
            (Tok::OrOr, 2)
        } else {
            let t = match b {
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b';' => Tok::Semi,
                b':' => Tok::Colon,
                b',' => Tok::Comma,
                b'.' => Tok::Dot,
                b'@' => Tok::At,
                b'#' => Tok::Hash,
                b'?' => Tok::Question,
                b'=' => Tok::Assign,
                b'<' => Tok::Lt,
                b'>' => Tok::Gt,
                b'!' => Tok::Not,
                b'~' => Tok::Tilde,
                b'&' => Tok::Amp,
                b'|' => Tok::Pipe,
                b'^' => Tok::Caret,
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                _ => {
                    return Err(ParseError::syntax(
                        file,
                        i,
                        format!("unexpected character `{}`", b as char),
                    ));
                }
            };
            (t, 1)
        };
        i += len;
        toks.push(Token { tok, start, end: i });
    }
    toks.push(Token {
        tok: Tok::Eof,
        start: text.len(),
        end: text.len(),
    });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        lex(s, 0).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_numbers() {
        let ts = kinds("a |-> ##1 b == 3'b101;");
        assert_eq!(
            ts,
            vec![
                Tok::Ident("a".into()),
                Tok::OverlapImpl,
                Tok::DoubleHash,
                Tok::Number("1".into()),
                Tok::Ident("b".into()),
                Tok::EqEq,
                Tok::Number("3'b101".into()),
                Tok::Semi,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_skipped() {
        let ts = kinds("a // line\n/* block\n */ b");
        assert_eq!(
            ts,
            vec![Tok::Ident("a".into()), Tok::Ident("b".into()), Tok::Eof]
        );
    }

    #[test]
    fn nonblocking_vs_le_is_one_token() {
        // context decides; the lexer always emits NonBlocking for `<=`
        let ts = kinds("q <= d");
        assert_eq!(ts[1], Tok::NonBlocking);
    }

    #[test]
    fn sys_idents() {
        let ts = kinds("$past(x, 2)");
        assert_eq!(ts[0], Tok::SysIdent("$past".into()));
    }
}
