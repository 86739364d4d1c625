//! Indentation-structured parser for the EO fragment.

use std::collections::HashSet;
use std::sync::Arc;

use num_rational::BigRational;
use thiserror::Error;

use super::ast::*;
use crate::num::parse_decimal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxErrorKind {
    #[error("tab characters are not allowed; indent with two spaces")]
    Tab,
    #[error("bad indentation: {0}")]
    BadIndentation(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: String },
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("attribute `{0}` is defined more than once")]
    DuplicateAttribute(String),
    #[error("`@` is bound more than once")]
    DecorateeBoundTwice,
    #[error("`self` may only be a void attribute")]
    SelfAttached,
    #[error("`@` cannot be a void attribute")]
    VoidDecoratee,
    #[error("a locator must be followed by an attribute name")]
    BareLocator,
    #[error("top-level binding `{0}` must be an object")]
    TopLevelNotObject(String),
    #[error("top-level object `{0}` is defined more than once")]
    DuplicateTopLevel(String),
    #[error("`{decorator}` decorates `{decorated}`, which is not an earlier top-level object")]
    ForwardDecoration {
        decorator: String,
        decorated: String,
    },
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct SyntaxError {
    pub kind: SyntaxErrorKind,
    pub span: SourceSpan,
}

type PResult<T> = Result<T, SyntaxError>;

/// Parses a program. Locators are left as written; see [`crate::locators`].
pub fn parse(source: &str) -> PResult<Program> {
    Parser::new(source, None).program()
}

/// Like [`parse`], recording `file` in every span.
pub fn parse_file(source: &str, file: &str) -> PResult<Program> {
    Parser::new(source, Some(Arc::from(file))).program()
}

/// Parses a single inline term, e.g. an entry expression for the interpreter.
pub fn parse_term(source: &str) -> PResult<Term> {
    let parser = Parser::new(source, None);
    let lines = parser.lex_lines()?;
    let [line] = lines.as_slice() else {
        return Err(SyntaxError {
            kind: SyntaxErrorKind::Other("expected exactly one line".into()),
            span: parser.span(1, 1, 1),
        });
    };
    let mut cursor = Cursor::new(&line.tokens, &parser, line.number);
    let term = cursor.application()?;
    cursor.expect_end()?;
    Ok(term)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    Gt,
    Dot,
    Dollar,
    Caret,
    At,
    Ident(String),
    Num(BigRational),
    Str(String),
    Bool(bool),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Dollar => "`$`".into(),
            Tok::Caret => "`^`".into(),
            Tok::At => "`@`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(_) => "number".into(),
            Tok::Str(_) => "string".into(),
            Tok::Bool(_) => "boolean".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: u32,
    end: u32,
}

#[derive(Debug)]
struct Line {
    number: u32,
    level: usize,
    tokens: Vec<Token>,
    width: u32,
}

/// A line together with the lines nested under it.
#[derive(Debug)]
struct Node<'a> {
    line: &'a Line,
    children: Vec<Node<'a>>,
}

/// Content of one line: either an object header or an expression, optionally named.
enum LineHead {
    Object { voids: Vec<Ident>, span: SourceSpan },
    Expr(Term),
}

struct Parser<'s> {
    source: &'s str,
    file: Option<Arc<str>>,
}

impl<'s> Parser<'s> {
    fn new(source: &'s str, file: Option<Arc<str>>) -> Self {
        Parser { source, file }
    }

    fn span(&self, line: u32, start: u32, end: u32) -> SourceSpan {
        SourceSpan::new(
            self.file.clone(),
            Position::new(line, start),
            Position::new(line, end.max(start)),
        )
    }

    fn err<T>(&self, kind: SyntaxErrorKind, span: SourceSpan) -> PResult<T> {
        Err(SyntaxError { kind, span })
    }

    fn lex_lines(&self) -> PResult<Vec<Line>> {
        let mut lines = Vec::new();
        for (i, raw) in self.source.split('\n').enumerate() {
            let number = i as u32 + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            let trimmed = raw.trim_start_matches(' ');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                if let Some(col) = raw.find('\t') {
                    let col = col as u32 + 1;
                    return self.err(SyntaxErrorKind::Tab, self.span(number, col, col));
                }
                continue;
            }
            let indent = raw.len() - trimmed.len();
            if trimmed.starts_with('\t') {
                let col = indent as u32 + 1;
                return self.err(SyntaxErrorKind::Tab, self.span(number, col, col));
            }
            if indent % 2 != 0 {
                return self.err(
                    SyntaxErrorKind::BadIndentation(format!(
                        "{indent} spaces is not a multiple of two"
                    )),
                    self.span(number, 1, indent as u32 + 1),
                );
            }
            let tokens = self.lex(raw, indent, number)?;
            lines.push(Line {
                number,
                level: indent / 2,
                tokens,
                width: raw.chars().count() as u32,
            });
        }
        Ok(lines)
    }

    fn lex(&self, raw: &str, offset: usize, line: u32) -> PResult<Vec<Token>> {
        let chars: Vec<char> = raw.chars().collect();
        let mut tokens = Vec::new();
        let mut i = offset;
        while i < chars.len() {
            let c = chars[i];
            let start = i as u32 + 1;
            let simple = match c {
                ' ' => {
                    i += 1;
                    continue;
                }
                '\t' => return self.err(SyntaxErrorKind::Tab, self.span(line, start, start)),
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '>' => Some(Tok::Gt),
                '.' => Some(Tok::Dot),
                '$' => Some(Tok::Dollar),
                '^' => Some(Tok::Caret),
                '@' => Some(Tok::At),
                _ => None,
            };
            if let Some(tok) = simple {
                tokens.push(Token {
                    tok,
                    start,
                    end: start,
                });
                i += 1;
                continue;
            }
            let negative = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
            if c.is_ascii_digit() || negative {
                let begin = i;
                if negative {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[begin..i].iter().collect();
                let value = parse_decimal(text.trim_start_matches('-'))
                    .map(|v| if negative { -v } else { v })
                    .ok_or_else(|| SyntaxError {
                        kind: SyntaxErrorKind::UnknownToken(text.clone()),
                        span: self.span(line, start, i as u32),
                    })?;
                tokens.push(Token {
                    tok: Tok::Num(value),
                    start,
                    end: i as u32,
                });
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let begin = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[begin..i].iter().collect();
                let tok = match text.as_str() {
                    "true" | "TRUE" => Tok::Bool(true),
                    "false" | "FALSE" => Tok::Bool(false),
                    _ => Tok::Ident(text),
                };
                tokens.push(Token {
                    tok,
                    start,
                    end: i as u32,
                });
                continue;
            }
            if c == '"' {
                let begin = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i >= chars.len() {
                    return self.err(
                        SyntaxErrorKind::UnterminatedString,
                        self.span(line, start, i as u32),
                    );
                }
                let text: String = chars[begin..i].iter().collect();
                i += 1;
                tokens.push(Token {
                    tok: Tok::Str(text),
                    start,
                    end: i as u32,
                });
                continue;
            }
            return self.err(
                SyntaxErrorKind::UnknownToken(c.to_string()),
                self.span(line, start, start),
            );
        }
        Ok(tokens)
    }

    fn program(&self) -> PResult<Program> {
        let lines = self.lex_lines()?;
        let nodes = self.nest(&lines)?;
        let mut program = Program::default();
        let mut seen = HashSet::new();
        for node in &nodes {
            let (head, name) = self.line_head(node.line)?;
            let line_span = self.line_span(node.line);
            let Some(name) = name else {
                return self.err(
                    SyntaxErrorKind::Other("top-level object needs a name (`> name`)".into()),
                    line_span,
                );
            };
            let LineHead::Object { voids, span } = head else {
                return self.err(SyntaxErrorKind::TopLevelNotObject(name), line_span);
            };
            if !seen.insert(name.clone()) {
                return self.err(SyntaxErrorKind::DuplicateTopLevel(name), line_span);
            }
            let body = self.object(voids, span, node)?;
            if let Some(dec) = body.decoratee() {
                if let TermKind::Locator { depth: 1, path } = &dec.kind {
                    if let [target] = path.as_slice() {
                        if !program.objects.iter().any(|o| &o.name == target) {
                            return self.err(
                                SyntaxErrorKind::ForwardDecoration {
                                    decorator: name,
                                    decorated: target.clone(),
                                },
                                dec.span.clone(),
                            );
                        }
                    }
                }
            }
            let span = body.span.clone();
            program.objects.push(TopObject { name, body, span });
        }
        Ok(program)
    }

    fn line_span(&self, line: &Line) -> SourceSpan {
        let start = line.level as u32 * 2 + 1;
        self.span(line.number, start, line.width.max(start))
    }

    fn node_span(&self, node: &Node) -> SourceSpan {
        let mut span = self.line_span(node.line);
        if let Some(last) = node.children.last() {
            span = span.to(&self.node_span(last));
        }
        span
    }

    fn nest<'a>(&self, lines: &'a [Line]) -> PResult<Vec<Node<'a>>> {
        let mut pos = 0;
        let nodes = self.block(lines, &mut pos, 0)?;
        debug_assert_eq!(pos, lines.len());
        Ok(nodes)
    }

    fn block<'a>(
        &self,
        lines: &'a [Line],
        pos: &mut usize,
        level: usize,
    ) -> PResult<Vec<Node<'a>>> {
        let mut nodes: Vec<Node<'a>> = Vec::new();
        while let Some(line) = lines.get(*pos) {
            if line.level < level {
                break;
            }
            if line.level > level {
                let message = if nodes.is_empty() {
                    "unexpected indentation".to_string()
                } else {
                    format!(
                        "expected {} spaces, found {}",
                        (level + 1) * 2,
                        line.level * 2
                    )
                };
                return self.err(
                    SyntaxErrorKind::BadIndentation(message),
                    self.span(line.number, 1, line.level as u32 * 2 + 1),
                );
            }
            *pos += 1;
            let children = self.block(lines, pos, level + 1)?;
            nodes.push(Node { line, children });
        }
        Ok(nodes)
    }

    fn line_head(&self, line: &Line) -> PResult<(LineHead, Option<Ident>)> {
        let mut cursor = Cursor::new(&line.tokens, self, line.number);
        let head = if cursor.peek() == Some(&Tok::LBracket) {
            let open = cursor.next_token().expect("peeked");
            let mut voids = Vec::new();
            loop {
                match cursor.next_token() {
                    Some(Token {
                        tok: Tok::Ident(name),
                        ..
                    }) => voids.push(name.clone()),
                    Some(Token {
                        tok: Tok::At,
                        start,
                        end,
                    }) => {
                        return self.err(
                            SyntaxErrorKind::VoidDecoratee,
                            self.span(line.number, *start, *end),
                        )
                    }
                    Some(Token {
                        tok: Tok::RBracket,
                        end,
                        ..
                    }) => {
                        let span = self.span(line.number, open.start, *end);
                        break LineHead::Object { voids, span };
                    }
                    other => return cursor.unexpected(other, "void attribute name or `]`"),
                }
            }
        } else {
            LineHead::Expr(cursor.application()?)
        };
        let name = if cursor.peek() == Some(&Tok::Gt) {
            cursor.next_token();
            match cursor.next_token() {
                Some(Token {
                    tok: Tok::Ident(name),
                    ..
                }) => Some(name.clone()),
                Some(Token { tok: Tok::At, .. }) => Some(DECORATEE.to_string()),
                other => return cursor.unexpected(other, "attribute name after `>`"),
            }
        } else {
            None
        };
        cursor.expect_end()?;
        Ok((head, name))
    }

    fn object(&self, voids: Vec<Ident>, header: SourceSpan, node: &Node) -> PResult<ObjectTerm> {
        let mut names: HashSet<String> = HashSet::new();
        for v in &voids {
            if !names.insert(v.clone()) {
                return self.err(
                    SyntaxErrorKind::DuplicateAttribute(v.clone()),
                    header.clone(),
                );
            }
        }
        let mut attrs = Vec::new();
        for child in &node.children {
            let (head, name) = self.line_head(child.line)?;
            let span = self.node_span(child);
            let Some(name) = name else {
                return self.err(
                    SyntaxErrorKind::Other("attribute needs a name (`> name`)".into()),
                    self.line_span(child.line),
                );
            };
            if name == SELF {
                return self.err(SyntaxErrorKind::SelfAttached, self.line_span(child.line));
            }
            if !names.insert(name.clone()) {
                let kind = if name == DECORATEE {
                    SyntaxErrorKind::DecorateeBoundTwice
                } else {
                    SyntaxErrorKind::DuplicateAttribute(name)
                };
                return self.err(kind, self.line_span(child.line));
            }
            let value = self.node_value(head, child)?;
            attrs.push(Binding { name, value, span });
        }
        Ok(ObjectTerm {
            voids,
            attrs,
            span: self.node_span(node).to(&header),
        })
    }

    /// The term denoted by a line and its nested lines.
    fn node_value(&self, head: LineHead, node: &Node) -> PResult<Term> {
        match head {
            LineHead::Object { voids, span } => {
                let obj = self.object(voids, span, node)?;
                let span = obj.span.clone();
                Ok(Term::new(TermKind::Object(obj), span))
            }
            LineHead::Expr(term) if node.children.is_empty() => Ok(term),
            LineHead::Expr(term) => {
                let mut extra = Vec::new();
                for child in &node.children {
                    let (head, name) = self.line_head(child.line)?;
                    if name.is_some() {
                        return self.err(
                            SyntaxErrorKind::Other("named arguments are not supported".into()),
                            self.line_span(child.line),
                        );
                    }
                    extra.push(self.node_value(head, child)?);
                }
                let span = self.node_span(node);
                Ok(match term.kind {
                    TermKind::Application { head, mut args } => {
                        args.extend(extra);
                        Term::new(TermKind::Application { head, args }, span)
                    }
                    kind => Term::app(Term::new(kind, term.span), extra, span),
                })
            }
        }
    }
}

struct Cursor<'t, 'p, 's> {
    tokens: &'t [Token],
    pos: usize,
    parser: &'p Parser<'s>,
    line: u32,
}

impl<'t, 'p, 's> Cursor<'t, 'p, 's> {
    fn new(tokens: &'t [Token], parser: &'p Parser<'s>, line: u32) -> Self {
        Cursor {
            tokens,
            pos: 0,
            parser,
            line,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn next_token(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn span(&self, start: u32, end: u32) -> SourceSpan {
        self.parser.span(self.line, start, end)
    }

    fn end_col(&self) -> u32 {
        self.tokens.last().map_or(1, |t| t.end + 1)
    }

    fn unexpected<T>(&self, found: Option<&Token>, expected: &str) -> PResult<T> {
        let (found, span) = match found {
            Some(t) => (t.tok.describe(), self.span(t.start, t.end)),
            None => (
                "end of line".to_string(),
                self.span(self.end_col(), self.end_col()),
            ),
        };
        Err(SyntaxError {
            kind: SyntaxErrorKind::Unexpected {
                found,
                expected: expected.to_string(),
            },
            span,
        })
    }

    fn expect_end(&mut self) -> PResult<()> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(t) => self.unexpected(Some(t), "end of line"),
        }
    }

    fn starts_primary(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Tok::LParen
                    | Tok::Num(_)
                    | Tok::Bool(_)
                    | Tok::Str(_)
                    | Tok::Dollar
                    | Tok::Caret
                    | Tok::Ident(_)
                    | Tok::At
            )
        )
    }

    /// `primary primary*`: juxtaposition is application.
    fn application(&mut self) -> PResult<Term> {
        let head = self.primary()?;
        let mut args = Vec::new();
        while self.starts_primary() {
            args.push(self.primary()?);
        }
        if args.is_empty() {
            return Ok(head);
        }
        let span = head.span.to(&args.last().expect("nonempty").span);
        Ok(Term::app(head, args, span))
    }

    fn attr_name(&mut self) -> PResult<(Ident, u32)> {
        match self.next_token() {
            Some(Token {
                tok: Tok::Ident(name),
                end,
                ..
            }) => Ok((name.clone(), *end)),
            Some(Token {
                tok: Tok::At, end, ..
            }) => Ok((DECORATEE.to_string(), *end)),
            other => self.unexpected(other, "attribute name"),
        }
    }

    fn primary(&mut self) -> PResult<Term> {
        let Some(first) = self.next_token() else {
            return self.unexpected(None, "a term");
        };
        let start = first.start;
        let mut end = first.end;
        let mut term = match &first.tok {
            Tok::LParen => {
                let inner = self.application()?;
                match self.next_token() {
                    Some(Token {
                        tok: Tok::RParen,
                        end: close,
                        ..
                    }) => end = *close,
                    other => return self.unexpected(other, "`)`"),
                }
                inner
            }
            Tok::Num(v) => Term::new(TermKind::Num(v.clone()), self.span(start, end)),
            Tok::Bool(b) => Term::new(TermKind::Bool(*b), self.span(start, end)),
            Tok::Str(s) => Term::new(TermKind::Str(s.clone()), self.span(start, end)),
            Tok::Dollar | Tok::Caret => {
                let mut depth = u32::from(first.tok == Tok::Caret);
                if first.tok == Tok::Caret {
                    while self.peek() == Some(&Tok::Dot) && self.peek_at(1) == Some(&Tok::Caret) {
                        self.pos += 2;
                        depth += 1;
                        end = self.tokens[self.pos - 1].end;
                    }
                }
                if self.peek() != Some(&Tok::Dot) {
                    return Err(SyntaxError {
                        kind: SyntaxErrorKind::BareLocator,
                        span: self.span(start, end),
                    });
                }
                self.pos += 1;
                let (name, e) = self.attr_name()?;
                end = e;
                Term::locator(depth, vec![name], self.span(start, end))
            }
            Tok::Ident(name) => {
                Term::new(TermKind::Name(vec![name.clone()]), self.span(start, end))
            }
            Tok::At => Term::new(
                TermKind::Name(vec![DECORATEE.to_string()]),
                self.span(start, end),
            ),
            _ => return self.unexpected(Some(first), "a term"),
        };
        let mut path = Vec::new();
        while self.peek() == Some(&Tok::Dot) {
            self.pos += 1;
            let (name, e) = self.attr_name()?;
            path.push(name);
            end = e;
        }
        if !path.is_empty() {
            term = term.access(&path);
        }
        term.span = self.span(start, end);
        Ok(term)
    }
}
