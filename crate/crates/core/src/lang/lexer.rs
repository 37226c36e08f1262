use super::{Diagnostic, Span};
use crate::rational::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq)]
pub(super) enum Tok {
    Ident(String),
    Number(Rational),
    SubjectTo,
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Plus,
    Minus,
    Star,
    Colon,
    Semi,
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_) => "a number".into(),
            Tok::SubjectTo => "`s.t.`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(super) struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    rest: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest.chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub(super) fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        rest: text,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let single = |len| Span::new(line, column, len);

        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == 's' && cur.rest.starts_with("s.t.") {
            for _ in 0..4 {
                cur.bump();
            }
            tokens.push(Token {
                tok: Tok::SubjectTo,
                span: single(4),
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    ident.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let len = ident.len();
            tokens.push(Token {
                tok: Tok::Ident(ident),
                span: single(len),
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && cur.peek_nth(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut text = String::new();
            take_digits(&mut cur, &mut text);
            if cur.peek() == Some('.') && cur.peek_nth(1).is_some_and(|d| d.is_ascii_digit()) {
                text.push('.');
                cur.bump();
                take_digits(&mut cur, &mut text);
            }
            if cur.peek() == Some('/') && cur.peek_nth(1).is_some_and(|d| d.is_ascii_digit()) {
                text.push('/');
                cur.bump();
                take_digits(&mut cur, &mut text);
            }
            let span = single(text.chars().count());
            match parse_rational(&text) {
                Some(v) => tokens.push(Token {
                    tok: Tok::Number(v),
                    span,
                }),
                None => diags.push(Diagnostic::error(format!("invalid number `{text}`"), span)),
            }
            continue;
        }

        let two = |cur: &Cursor, second: char| cur.peek_nth(1) == Some(second);
        let (tok, len) = match c {
            '<' if two(&cur, '=') => (Tok::Le, 2),
            '>' if two(&cur, '=') => (Tok::Ge, 2),
            '<' => (Tok::Lt, 1),
            '>' => (Tok::Gt, 1),
            '=' => (Tok::Eq, 1),
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            ':' => (Tok::Colon, 1),
            ';' => (Tok::Semi, 1),
            other => {
                cur.bump();
                diags.push(Diagnostic::error(
                    format!("unexpected character {other:?}"),
                    single(1),
                ));
                continue;
            }
        };
        for _ in 0..len {
            cur.bump();
        }
        tokens.push(Token {
            tok,
            span: single(len),
        });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: Span::new(cur.line, cur.column, 0),
    });
    (tokens, diags)
}

fn take_digits(cur: &mut Cursor, out: &mut String) {
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() {
            out.push(c);
            cur.bump();
        } else {
            break;
        }
    }
}
