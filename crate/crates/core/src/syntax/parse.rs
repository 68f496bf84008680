//! Recursive-descent parser for the surface syntax.
//!
//! ```text
//! par   := unary ('|' unary)*
//! unary := '!' label? unary
//!        | '0'
//!        | '(' 'nu' IDENT ')' unary
//!        | '(' par ')'
//!        | IDENT '(' IDENT ')' label? cont
//!        | IDENT '<' IDENT '>' label? cont
//!        | ('w' | 'omega') label? cont
//! cont  := ('.' unary)?
//! label := '@' [01]* ',' DIGITS
//! ```
//!
//! Prefixes bind tighter than `!`, which binds tighter than `|`; `#` starts
//! a comment running to the end of the line. Labels are only accepted by
//! [`parse_labeled`].

use std::sync::Arc;

use thiserror::Error;

use super::{Name, Process};
use crate::labeling::{Label, LabeledTerm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("success prefix at offset {offset} is only allowed in observers")]
    SuccessInProcess { offset: usize },
    #[error("missing label at offset {offset}: labeled terms label every prefix and replication")]
    MissingLabel { offset: usize },
    #[error("unexpected label at offset {offset} in an unlabeled term")]
    UnexpectedLabel { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::SuccessInProcess { offset }
            | ParseError::MissingLabel { offset }
            | ParseError::UnexpectedLabel { offset } => *offset,
        }
    }
}

/// Parse a process; success prefixes are rejected.
pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    let raw = Parser::new(text).parse_all()?;
    to_process(&raw, false)
}

/// Parse an observer or experiment; success prefixes are allowed.
pub fn parse_observer(text: &str) -> Result<Process, ParseError> {
    let raw = Parser::new(text).parse_all()?;
    to_process(&raw, true)
}

/// Parse a labeled term in the `a<b>@0,0.P` / `!@1,2 P` notation.
pub fn parse_labeled(text: &str) -> Result<LabeledTerm, ParseError> {
    let raw = Parser::new(text).parse_all()?;
    to_labeled(&raw)
}

#[derive(Debug)]
enum Raw {
    Nil,
    Input {
        chan: Name,
        binder: Name,
        label: Option<Label>,
        at: usize,
        body: Box<Raw>,
    },
    Output {
        chan: Name,
        object: Name,
        label: Option<Label>,
        at: usize,
        body: Box<Raw>,
    },
    Par(Box<Raw>, Box<Raw>),
    Res {
        binder: Name,
        body: Box<Raw>,
    },
    Rep {
        label: Option<Label>,
        at: usize,
        body: Box<Raw>,
    },
    Success {
        seed: Option<Label>,
        at: usize,
        body: Box<Raw>,
    },
}

fn to_process(raw: &Raw, allow_success: bool) -> Result<Process, ParseError> {
    let conv = |r: &Raw| to_process(r, allow_success).map(Arc::new);
    let no_label = |label: &Option<Label>, at: usize| match label {
        Some(_) => Err(ParseError::UnexpectedLabel { offset: at }),
        None => Ok(()),
    };
    Ok(match raw {
        Raw::Nil => Process::Nil,
        Raw::Input {
            chan,
            binder,
            label,
            at,
            body,
        } => {
            no_label(label, *at)?;
            Process::Input {
                chan: chan.clone(),
                binder: binder.clone(),
                body: conv(body)?,
            }
        }
        Raw::Output {
            chan,
            object,
            label,
            at,
            body,
        } => {
            no_label(label, *at)?;
            Process::Output {
                chan: chan.clone(),
                object: object.clone(),
                body: conv(body)?,
            }
        }
        Raw::Par(l, r) => Process::Par(conv(l)?, conv(r)?),
        Raw::Res { binder, body } => Process::Res {
            binder: binder.clone(),
            body: conv(body)?,
        },
        Raw::Rep { label, at, body } => {
            no_label(label, *at)?;
            Process::Rep(conv(body)?)
        }
        Raw::Success { seed, at, body } => {
            if !allow_success {
                return Err(ParseError::SuccessInProcess { offset: *at });
            }
            no_label(seed, *at)?;
            Process::Success(conv(body)?)
        }
    })
}

fn to_labeled(raw: &Raw) -> Result<LabeledTerm, ParseError> {
    let need = |label: &Option<Label>, at: usize| {
        label.clone().ok_or(ParseError::MissingLabel { offset: at })
    };
    Ok(match raw {
        Raw::Nil => LabeledTerm::Nil,
        Raw::Input {
            chan,
            binder,
            label,
            at,
            body,
        } => LabeledTerm::Input {
            chan: chan.clone(),
            binder: binder.clone(),
            label: need(label, *at)?,
            body: Arc::new(to_labeled(body)?),
        },
        Raw::Output {
            chan,
            object,
            label,
            at,
            body,
        } => LabeledTerm::Output {
            chan: chan.clone(),
            object: object.clone(),
            label: need(label, *at)?,
            body: Arc::new(to_labeled(body)?),
        },
        Raw::Par(l, r) => LabeledTerm::Par(Arc::new(to_labeled(l)?), Arc::new(to_labeled(r)?)),
        Raw::Res { binder, body } => LabeledTerm::Res {
            binder: binder.clone(),
            body: Arc::new(to_labeled(body)?),
        },
        Raw::Rep { label, at, body } => LabeledTerm::Rep {
            label: need(label, *at)?,
            body: Arc::new(to_process(body, true)?),
        },
        Raw::Success { seed, at, body } => LabeledTerm::Success {
            seed: need(seed, *at)?,
            body: Arc::new(to_process(body, true)?),
        },
    })
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self.describe_here();
            self.error(self.pos, format!("expected '{}', found {found}", c as char))
        }
    }

    fn describe_here(&self) -> String {
        match self.src[self.pos..].chars().next() {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        }
    }

    fn ident(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let first = *self.bytes.get(start)?;
        if !(first.is_ascii_alphabetic() || first == b'_') {
            return None;
        }
        let mut end = start + 1;
        while end < self.bytes.len()
            && (self.bytes[end].is_ascii_alphanumeric()
                || self.bytes[end] == b'_'
                || self.bytes[end] == b'\'')
        {
            end += 1;
        }
        self.pos = end;
        Some((start, &self.src[start..end]))
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        match self.ident() {
            Some((at, "w" | "omega")) => self.error(at, "'w'/'omega' is reserved for success"),
            Some((_, id)) => Ok(Name::new(id)),
            None => {
                let found = self.describe_here();
                self.error(self.pos, format!("expected a name, found {found}"))
            }
        }
    }

    fn parse_all(mut self) -> Result<Raw, ParseError> {
        let term = self.par()?;
        if self.peek().is_some() {
            let found = self.describe_here();
            return self.error(self.pos, format!("unexpected {found}"));
        }
        Ok(term)
    }

    fn par(&mut self) -> Result<Raw, ParseError> {
        let mut left = self.unary()?;
        while self.eat(b'|') {
            let right = self.unary()?;
            left = Raw::Par(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn label(&mut self) -> Result<Option<Label>, ParseError> {
        if !self.eat(b'@') {
            return Ok(None);
        }
        let mut path = Vec::new();
        while let Some(&b) = self.bytes.get(self.pos) {
            match b {
                b'0' => path.push(false),
                b'1' => path.push(true),
                _ => break,
            }
            self.pos += 1;
        }
        if self.bytes.get(self.pos) != Some(&b',') {
            let found = self.describe_here();
            return self.error(self.pos, format!("expected ',' in label, found {found}"));
        }
        self.pos += 1;
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        match self.src[start..self.pos].parse::<u32>() {
            Ok(depth) => Ok(Some(Label::new(path, depth))),
            Err(_) => self.error(start, "expected a label depth"),
        }
    }

    fn cont(&mut self) -> Result<Raw, ParseError> {
        if self.eat(b'.') {
            self.unary()
        } else {
            Ok(Raw::Nil)
        }
    }

    fn unary(&mut self) -> Result<Raw, ParseError> {
        let at = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                let label = self.label()?;
                let body = self.unary()?;
                Ok(Raw::Rep {
                    label,
                    at,
                    body: Box::new(body),
                })
            }
            Some(b'0') => {
                self.pos += 1;
                Ok(Raw::Nil)
            }
            Some(b'(') => {
                self.pos += 1;
                if let Some(binder) = self.try_restriction() {
                    let body = self.unary()?;
                    return Ok(Raw::Res {
                        binder,
                        body: Box::new(body),
                    });
                }
                let inner = self.par()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(_) => {
                let Some((at, id)) = self.ident() else {
                    let found = self.describe_here();
                    return self.error(self.pos, format!("expected a process, found {found}"));
                };
                if id == "w" || id == "omega" {
                    let seed = self.label()?;
                    let body = self.cont()?;
                    return Ok(Raw::Success {
                        seed,
                        at,
                        body: Box::new(body),
                    });
                }
                let chan = Name::new(id);
                if self.eat(b'(') {
                    let binder = self.name()?;
                    self.expect(b')')?;
                    let label = self.label()?;
                    let body = self.cont()?;
                    Ok(Raw::Input {
                        chan,
                        binder,
                        label,
                        at,
                        body: Box::new(body),
                    })
                } else if self.eat(b'<') {
                    let object = self.name()?;
                    self.expect(b'>')?;
                    let label = self.label()?;
                    let body = self.cont()?;
                    Ok(Raw::Output {
                        chan,
                        object,
                        label,
                        at,
                        body: Box::new(body),
                    })
                } else {
                    let found = self.describe_here();
                    self.error(
                        self.pos,
                        format!("expected '(' or '<' after channel, found {found}"),
                    )
                }
            }
            None => self.error(self.pos, "expected a process, found end of input"),
        }
    }

    /// After an opening parenthesis, recognise `nu x)`; restores the
    /// position and returns `None` otherwise.
    fn try_restriction(&mut self) -> Option<Name> {
        let save = self.pos;
        let result = (|| {
            let (_, kw) = self.ident()?;
            if kw != "nu" {
                return None;
            }
            let (_, id) = self.ident()?;
            if id == "w" || id == "omega" {
                return None;
            }
            self.eat(b')').then(|| Name::new(id))
        })();
        if result.is_none() {
            self.pos = save;
        }
        result
    }
}
