//! Tokenizer for `.mc` sources.
//!
//! Ordinary comments are dropped. Annotation comments (`//@ ...` and
//! `/*@ ... @*/`) are kept: their contents are tokenized like code and
//! bracketed by [`Tok::AnnotStart`] / [`Tok::AnnotEnd`]. Inside a block
//! annotation every `@` is margin decoration and is skipped.

use std::sync::Arc;

use super::span::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Backslash keyword such as `\old` or `\result` (stored with the backslash).
    BsIdent(String),
    Int(i64),
    Real(f64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    ColonColon,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    AndAnd,
    OrOr,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Assign,
    Implies,
    Equiv,
    Amp,
    PlusAssign,
    MinusAssign,
    PlusPlus,
    MinusMinus,
    AnnotStart,
    AnnotEnd,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::BsIdent(s) => format!("`{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Real(v) => format!("real `{v:?}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::AnnotStart => "start of annotation".into(),
            Tok::AnnotEnd => "end of annotation".into(),
            Tok::Eof => "end of file".into(),
            other => format!("`{}`", punct_text(other)),
        }
    }
}

fn punct_text(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Colon => ":",
        Tok::ColonColon => "::",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Percent => "%",
        Tok::Bang => "!",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::Assign => "=",
        Tok::Implies => "==>",
        Tok::Equiv => "<==>",
        Tok::Amp => "&",
        Tok::PlusAssign => "+=",
        Tok::MinusAssign => "-=",
        Tok::PlusPlus => "++",
        Tok::MinusMinus => "--",
        _ => "?",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Code,
    LineAnnot,
    BlockAnnot,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
    mode: Mode,
    last: (u32, u32),
    out: Vec<Token>,
}

pub fn tokenize(src: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file: Arc::from(file),
        mode: Mode::Code,
        last: (1, 1),
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.last = (self.line, self.col);
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn span_from(&self, start: (u32, u32)) -> Span {
        // end is inclusive: the position of the last consumed char
        let end = if self.last < start { start } else { self.last };
        Span::new(self.file.clone(), start.0, start.1, end.0, end.1)
    }

    fn error(&self, start: (u32, u32), message: impl Into<String>) -> ParseError {
        ParseError {
            span: Span::new(self.file.clone(), start.0, start.1, start.0, start.1),
            message: message.into(),
        }
    }

    fn push(&mut self, tok: Tok, start: (u32, u32)) {
        let span = self.span_from(start);
        self.out.push(Token { tok, span });
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let mut annot_start = (0, 0);
        while let Some(c) = self.peek() {
            let start = self.here();
            match self.mode {
                Mode::LineAnnot if c == '\n' => {
                    self.push(Tok::AnnotEnd, start);
                    self.bump();
                    self.mode = Mode::Code;
                    continue;
                }
                Mode::BlockAnnot => {
                    if self.starts_with("*/") {
                        self.bump();
                        self.bump();
                        self.push(Tok::AnnotEnd, start);
                        self.mode = Mode::Code;
                        continue;
                    }
                    if c == '@' {
                        self.bump();
                        continue;
                    }
                }
                _ => {}
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if self.starts_with("//@") && self.mode == Mode::Code {
                self.bump();
                self.bump();
                self.bump();
                self.push(Tok::AnnotStart, start);
                self.mode = Mode::LineAnnot;
                continue;
            }
            if self.starts_with("/*@") && self.mode == Mode::Code {
                self.bump();
                self.bump();
                self.bump();
                self.push(Tok::AnnotStart, start);
                self.mode = Mode::BlockAnnot;
                annot_start = start;
                continue;
            }
            if self.starts_with("//") {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if self.starts_with("/*") {
                if self.mode == Mode::BlockAnnot {
                    return Err(self.error(start, "nested comment inside annotation block"));
                }
                self.bump();
                self.bump();
                loop {
                    if self.peek().is_none() {
                        return Err(self.error(start, "unterminated comment"));
                    }
                    if self.starts_with("*/") {
                        self.bump();
                        self.bump();
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c.is_ascii_digit() {
                self.number(start)?;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let ident = self.ident();
                self.push(Tok::Ident(ident), start);
                continue;
            }
            if c == '\\' {
                self.bump();
                if !self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                    return Err(self.error(start, "expected keyword after `\\`"));
                }
                let ident = self.ident();
                self.push(Tok::BsIdent(format!("\\{ident}")), start);
                continue;
            }
            if c == '"' {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => {
                            return Err(self.error(start, "unterminated string literal"))
                        }
                        Some('"') => break,
                        Some(c) => s.push(c),
                    }
                }
                self.push(Tok::Str(s), start);
                continue;
            }
            let tok = self
                .punct()
                .ok_or_else(|| self.error(start, format!("unexpected character `{c}`")))?;
            self.push(tok, start);
        }
        match self.mode {
            Mode::BlockAnnot => {
                return Err(self.error(annot_start, "unterminated `/*@` annotation block"))
            }
            Mode::LineAnnot => {
                let here = self.here();
                self.push(Tok::AnnotEnd, here);
            }
            Mode::Code => {}
        }
        let here = self.here();
        self.out.push(Token {
            tok: Tok::Eof,
            span: Span::new(self.file.clone(), here.0, here.1, here.0, here.1),
        });
        Ok(())
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, start: (u32, u32)) -> Result<(), ParseError> {
        if self.starts_with("0x") || self.starts_with("0X") {
            self.bump();
            self.bump();
            let mut digits = String::new();
            while let Some(c) = self.peek().filter(|c| c.is_ascii_hexdigit()) {
                digits.push(c);
                self.bump();
            }
            self.int_suffix();
            let v = i64::from_str_radix(&digits, 16)
                .map_err(|_| self.error(start, "invalid hex literal"))?;
            self.push(Tok::Int(v), start);
            return Ok(());
        }
        let mut text = String::new();
        let mut is_real = false;
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            text.push(c);
            self.bump();
        }
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            is_real = true;
            text.push('.');
            self.bump();
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E'))
            && (self.peek_at(1).is_some_and(|c| c.is_ascii_digit())
                || (matches!(self.peek_at(1), Some('+' | '-'))
                    && self.peek_at(2).is_some_and(|c| c.is_ascii_digit())))
        {
            is_real = true;
            text.push('e');
            self.bump();
            if let Some(sign @ ('+' | '-')) = self.peek() {
                text.push(sign);
                self.bump();
            }
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.bump();
            }
        }
        if is_real {
            let v: f64 = text
                .parse()
                .map_err(|_| self.error(start, "invalid real literal"))?;
            self.push(Tok::Real(v), start);
        } else {
            self.int_suffix();
            let v: i64 = text
                .parse()
                .map_err(|_| self.error(start, "integer literal out of range"))?;
            self.push(Tok::Int(v), start);
        }
        Ok(())
    }

    fn int_suffix(&mut self) {
        while matches!(self.peek(), Some('u' | 'U' | 'l' | 'L')) {
            self.bump();
        }
    }

    fn punct(&mut self) -> Option<Tok> {
        const TABLE: &[(&str, Tok)] = &[
            ("<==>", Tok::Equiv),
            ("==>", Tok::Implies),
            ("::", Tok::ColonColon),
            ("&&", Tok::AndAnd),
            ("||", Tok::OrOr),
            ("==", Tok::EqEq),
            ("!=", Tok::NotEq),
            ("<=", Tok::Le),
            (">=", Tok::Ge),
            ("+=", Tok::PlusAssign),
            ("-=", Tok::MinusAssign),
            ("++", Tok::PlusPlus),
            ("--", Tok::MinusMinus),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            ("[", Tok::LBracket),
            ("]", Tok::RBracket),
            (";", Tok::Semi),
            (",", Tok::Comma),
            (":", Tok::Colon),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
            ("/", Tok::Slash),
            ("%", Tok::Percent),
            ("!", Tok::Bang),
            ("<", Tok::Lt),
            (">", Tok::Gt),
            ("=", Tok::Assign),
            ("&", Tok::Amp),
        ];
        for (text, tok) in TABLE {
            if self.starts_with(text) {
                for _ in 0..text.len() {
                    self.bump();
                }
                return Some(tok.clone());
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src, "t.mc")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn plain_comments_are_dropped() {
        assert_eq!(
            kinds("// hi\n/* there */ x"),
            vec![Tok::Ident("x".into()), Tok::Eof]
        );
    }

    #[test]
    fn line_annotation_is_bracketed() {
        let toks = kinds("//@ assert x == 1;\ny");
        assert_eq!(toks[0], Tok::AnnotStart);
        assert_eq!(toks[6], Tok::AnnotEnd);
        assert_eq!(toks[7], Tok::Ident("y".into()));
    }

    #[test]
    fn block_annotation_skips_margins() {
        let toks = kinds("/*@\n  @ requires \\abs(a) > 0;\n  @*/");
        assert_eq!(
            toks,
            vec![
                Tok::AnnotStart,
                Tok::Ident("requires".into()),
                Tok::BsIdent("\\abs".into()),
                Tok::LParen,
                Tok::Ident("a".into()),
                Tok::RParen,
                Tok::Gt,
                Tok::Int(0),
                Tok::Semi,
                Tok::AnnotEnd,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unterminated_block_annotation() {
        let err = tokenize("int x;\n/*@ requires x > 0;", "t.mc").unwrap_err();
        assert_eq!(err.span.line_start, 2);
        assert!(err.message.contains("unterminated"));
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds("273.15 1e3 0x10 65535U"),
            vec![
                Tok::Real(273.15),
                Tok::Real(1000.0),
                Tok::Int(16),
                Tok::Int(65535),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn spans_are_inclusive() {
        let toks = tokenize("ab ==> c", "t.mc").unwrap();
        assert_eq!((toks[0].span.col_start, toks[0].span.col_end), (1, 2));
        assert_eq!((toks[1].span.col_start, toks[1].span.col_end), (4, 6));
    }
}
