use super::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Caret,
    Assign,
    Colon,
    Plus,
    Star,
    Lt,
    Le,
    EqEq,
    Ge,
    Gt,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Star => "`*`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub(crate) tok: Tok,
    pub(crate) span: SourceSpan,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: (usize, usize, usize)) -> SourceSpan {
        SourceSpan {
            start: start.0,
            end: self.pos,
            line: start.1,
            column: start.2,
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let start = (cur.pos, cur.line, cur.column);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                span: cur.span_from(start),
            });
            return Ok(out);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '^' => Tok::Caret,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '=' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::EqEq
            }
            '=' => Tok::Assign,
            '<' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Le
            }
            '<' => Tok::Lt,
            '>' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Ge
            }
            '>' => Tok::Gt,
            c if c.is_ascii_digit() => {
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
                let span = cur.span_from(start);
                let text = &src[span.start..span.end];
                match text.parse::<u64>() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => return Err(ParseDiagnostic::error(format!("integer `{text}` is too large"), span)),
                }
            }
            c if c.is_ascii_alphabetic() => {
                while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    cur.bump();
                }
                let span = cur.span_from(start);
                Tok::Ident(src[span.start..span.end].to_string())
            }
            other => {
                let hint = if other == '_' && cur.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    " (identifiers must start with a letter)"
                } else {
                    ""
                };
                return Err(ParseDiagnostic::error(
                    format!("unexpected character `{other}`{hint}"),
                    cur.span_from(start),
                ));
            }
        };
        out.push(Token {
            tok,
            span: cur.span_from(start),
        });
    }
}
