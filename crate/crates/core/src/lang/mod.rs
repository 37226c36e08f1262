//! MiniAPL: a small AMPL-flavoured modeling language.
//!
//! ```text
//! program    := { statement } ;
//! statement  := vardecl | paramdecl | objective | constraint ;
//! vardecl    := "var" IDENT [ "integer" | "binary" ] { bound } ";" ;
//! bound      := (">=" | "<=") NUMBER ;
//! paramdecl  := "param" IDENT [ "=" NUMBER ] ";" ;
//! objective  := ("maximize" | "minimize") IDENT ":" expr ";" ;
//! constraint := "s.t." IDENT ":" expr ("<=" | ">=" | "=" | "<" | ">") expr ";" ;
//! expr       := term { ("+" | "-") term } ;
//! term       := [NUMBER "*"] IDENT | NUMBER ;
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Accepted on top of
//! the core grammar: a leading sign on an expression and on bound/param
//! numbers, `inf` as a bound value, and exact fractions such as `1/3` as
//! numbers (the printer emits these for non-terminating decimals).

mod lexer;
mod parser;
mod printer;

use serde::{Deserialize, Serialize};

pub use parser::parse;
pub use printer::{print, PrintError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Generated,
    UserEdited,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub text: String,
    pub origin: Origin,
}

impl SourceFile {
    pub fn generated(text: impl Into<String>) -> Self {
        SourceFile {
            text: text.into(),
            origin: Origin::Generated,
        }
    }

    pub fn user_edited(text: impl Into<String>) -> Self {
        SourceFile {
            text: text.into(),
            origin: Origin::UserEdited,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// 1-based line and column (in characters) plus a length in characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl Span {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        Span {
            line,
            column,
            length,
        }
    }

    /// Zero-length span just past this one.
    pub fn end(self) -> Span {
        Span::new(self.line, self.column + self.length, 0)
    }

    /// True when the span addresses characters (or the end) of an existing
    /// line of `text`.
    pub fn is_within(&self, text: &str) -> bool {
        if self.line == 0 || self.column == 0 {
            return false;
        }
        let line_len = match text.split('\n').nth(self.line - 1) {
            Some(l) => l.chars().count(),
            None => return false,
        };
        self.column + self.length <= line_len + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Span) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
            suggestion: None,
        }
    }

    pub fn with_suggestion(mut self, suggestion: impl Into<String>) -> Self {
        self.suggestion = Some(suggestion.into());
        self
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {level}: {}",
            self.span.line, self.span.column, self.message
        )?;
        if let Some(s) = &self.suggestion {
            write!(f, " (did you mean `{s}`?)")?;
        }
        Ok(())
    }
}

/// Parse plus semantic validation in one pass; empty means the source is
/// ready to solve.
pub fn grammar_check(src: &SourceFile) -> Vec<Diagnostic> {
    match parse(src) {
        Ok(_) => Vec::new(),
        Err(diags) => diags,
    }
}
