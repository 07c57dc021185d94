//! Tokenizer and recursive-descent parser for the rule, query and mapping
//! languages. All three share one lexical grammar.

use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

use crate::rule::{Atom, Clause, Comparison, Literal};
use crate::term::{CmpOp, Constant, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Dec(Decimal),
    Text(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
    LeftArrow,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("name `{s}`"),
            Tok::Var(s) => format!("variable `?{s}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Dec(d) => format!("decimal `{d}`"),
            Tok::Text(_) => "quoted text".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Implies => "`:-`".to_string(),
            Tok::LeftArrow => "`<-`".to_string(),
            Tok::Cmp(op) => format!("`{op}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

// `$` is accepted after the first character so generated program listings
// (which use `$` for internal predicates) read back in.
fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;

    let err = |line: usize, col: usize, msg: String| ParseError {
        line,
        column: col,
        message: msg,
    };

    while i < chars.len() {
        let (pos, c) = chars[i];
        let column = src[line_start..pos].chars().count() + 1;
        if c == '\n' {
            i += 1;
            line += 1;
            line_start = pos + 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let peek = |k: usize| chars.get(i + k).map(|&(_, c)| c);
        let end_of = |k: usize| chars.get(i + k).map(|&(p, _)| p).unwrap_or(src.len());

        let (tok, len) = if is_name_start(c) {
            let mut k = 1;
            while peek(k).is_some_and(is_name_char) {
                k += 1;
            }
            (Tok::Ident(src[pos..end_of(k)].to_string()), k)
        } else if c == '?' {
            if !peek(1).is_some_and(is_name_start) {
                return Err(err(line, column, "expected a variable name after `?`".into()));
            }
            let mut k = 2;
            while peek(k).is_some_and(is_name_char) {
                k += 1;
            }
            (Tok::Var(src[chars[i + 1].0..end_of(k)].to_string()), k)
        } else if c.is_ascii_digit() || (c == '-' && peek(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut k = 1;
            while peek(k).is_some_and(|d| d.is_ascii_digit()) {
                k += 1;
            }
            let is_dec = peek(k) == Some('.') && peek(k + 1).is_some_and(|d| d.is_ascii_digit());
            if is_dec {
                k += 1;
                while peek(k).is_some_and(|d| d.is_ascii_digit()) {
                    k += 1;
                }
                let text = &src[pos..end_of(k)];
                let d = Decimal::from_str(text)
                    .map_err(|e| err(line, column, format!("bad decimal `{text}`: {e}")))?;
                (Tok::Dec(d), k)
            } else {
                let text = &src[pos..end_of(k)];
                let n = text
                    .parse::<i64>()
                    .map_err(|_| err(line, column, format!("integer `{text}` out of range")))?;
                (Tok::Int(n), k)
            }
        } else if c == '\'' {
            let mut k = 1;
            let mut s = String::new();
            loop {
                match peek(k) {
                    None | Some('\n') => {
                        return Err(err(line, column, "unterminated quoted text".into()))
                    }
                    Some('\'') => {
                        k += 1;
                        break;
                    }
                    Some('\\') => {
                        let escaped = match peek(k + 1) {
                            Some('\'') => '\'',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => return Err(err(line, column, "bad escape in quoted text".into())),
                        };
                        s.push(escaped);
                        k += 2;
                    }
                    Some(ch) => {
                        s.push(ch);
                        k += 1;
                    }
                }
            }
            (Tok::Text(s), k)
        } else {
            let two = (c, peek(1));
            match two {
                (':', Some('-')) => (Tok::Implies, 2),
                ('<', Some('-')) => (Tok::LeftArrow, 2),
                ('<', Some('=')) => (Tok::Cmp(CmpOp::Le), 2),
                ('>', Some('=')) => (Tok::Cmp(CmpOp::Ge), 2),
                ('!', Some('=')) => (Tok::Cmp(CmpOp::Ne), 2),
                ('<', _) => (Tok::Cmp(CmpOp::Lt), 1),
                ('>', _) => (Tok::Cmp(CmpOp::Gt), 1),
                ('=', _) => (Tok::Cmp(CmpOp::Eq), 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                _ => return Err(err(line, column, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token {
            tok,
            line,
            column,
            start: pos,
            end: end_of(len),
        });
        i += len;
    }
    let column = src[line_start..].chars().count() + 1;
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
        start: src.len(),
        end: src.len(),
    });
    Ok(out)
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(src)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    pub fn token(&self) -> &Token {
        &self.tokens[self.pos]
    }

    /// True when the current and next tokens touch with no whitespace between.
    pub fn adjacent_to_next(&self) -> bool {
        match self.tokens.get(self.pos + 1) {
            Some(next) => self.tokens[self.pos].end == next.start,
            None => false,
        }
    }

    /// True when the current token starts exactly where the previous one ended.
    pub fn touches_previous(&self) -> bool {
        self.pos > 0 && self.tokens[self.pos - 1].end == self.tokens[self.pos].start
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.token();
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    pub fn unexpected(&self, expected: &str) -> ParseError {
        self.error_here(format!(
            "expected {expected}, found {}",
            self.peek().describe()
        ))
    }

    pub fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.advance();
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn constant(&mut self) -> Result<Constant, ParseError> {
        let c = match self.peek().clone() {
            Tok::Ident(s) => Constant::Symbol(s.into()),
            Tok::Int(i) => Constant::Integer(i),
            Tok::Dec(d) => Constant::decimal(d),
            Tok::Text(s) => Constant::Text(s.into()),
            _ => return Err(self.unexpected("a constant")),
        };
        self.advance();
        Ok(c)
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        if let Tok::Var(v) = self.peek().clone() {
            self.advance();
            return Ok(Term::Variable(v.into()));
        }
        self.constant().map(Term::Constant).map_err(|_| self.unexpected("a term"))
    }

    pub fn atom(&mut self) -> Result<Atom, ParseError> {
        let predicate = self.name("a predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            if args.len() == 2 {
                return Err(self.error_here(format!(
                    "predicate `{predicate}` has more than two arguments; only unary and binary predicates are supported"
                )));
            }
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        Ok(Atom::new(predicate, args))
    }

    pub fn literal(&mut self) -> Result<Literal, ParseError> {
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LParen {
            return self.atom().map(Literal::Atom);
        }
        let left = self.term()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.advance();
        let right = self.term()?;
        Ok(Literal::Comparison(Comparison { left, op, right }))
    }

    pub fn literals(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut lits = vec![self.literal()?];
        while self.eat(&Tok::Comma) {
            lits.push(self.literal()?);
        }
        Ok(lits)
    }

    pub fn clause(&mut self) -> Result<Clause, ParseError> {
        let line = self.token().line;
        let mut heads = vec![self.atom()?];
        while self.eat(&Tok::Comma) {
            heads.push(self.atom()?);
        }
        let body = if self.eat(&Tok::Implies) {
            self.literals()?
        } else {
            if heads.len() > 1 {
                return Err(self.unexpected("`:-`"));
            }
            Vec::new()
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(Clause { heads, body, line })
    }
}

/// Parses rule-language source into clauses, without normalization.
pub fn parse_clauses(src: &str) -> Result<Vec<Clause>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.clause()?);
    }
    Ok(out)
}

/// Parses a comma-separated list of literals (the query language). A single
/// trailing `.` is tolerated.
pub fn parse_literals(src: &str) -> Result<Vec<Literal>, ParseError> {
    let mut p = Parser::new(src)?;
    if p.at_eof() {
        return Err(p.error_here("empty query"));
    }
    let lits = p.literals()?;
    p.eat(&Tok::Dot);
    if !p.at_eof() {
        return Err(p.unexpected("`,` or end of query"));
    }
    Ok(lits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rule_with_comparison() {
        let cs = parse_clauses("Adult(?x) :- Person(?x), hasAge(?x,?a), ?a > 21.").unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].body.len(), 3);
        assert_eq!(
            cs[0].to_string(),
            "Adult(?x) :- Person(?x), hasAge(?x,?a), ?a > 21."
        );
    }

    #[test]
    fn comments_and_multiline() {
        let src = "% header\nA(?x),\n  B(?x) :- % trailing\n C(?x).\nfoo(a, 'b c').";
        let cs = parse_clauses(src).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].heads.len(), 2);
        assert_eq!(cs[1].line, 5);
    }

    #[test]
    fn literals_of_every_type() {
        let lits = parse_literals("p(a, -3), q(1.25, 'x\\'y'), ?z != 4").unwrap();
        assert_eq!(lits.len(), 3);
        assert_eq!(lits[1].to_string(), "q(1.25,'x\\'y')");
    }

    #[test]
    fn reports_position() {
        let err = parse_clauses("p(?x) :- q(?x)\nr(a).").unwrap_err();
        assert_eq!((err.line, err.column), (2, 1));
        let err = parse_clauses("p(a,b,c).").unwrap_err();
        assert!(err.message.contains("more than two"), "{err}");
        let err = parse_clauses("p().").unwrap_err();
        assert_eq!(err.column, 3);
    }

    #[test]
    fn decimal_versus_terminator() {
        let cs = parse_clauses("p(21).q(2.5).").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].heads[0].args[0], Term::Constant(Constant::decimal(Decimal::new(25, 1))));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_clauses("p(?x) :- .").is_err());
        assert!(parse_clauses("p(?) .").is_err());
        assert!(parse_clauses("p('abc).").is_err());
        assert!(parse_clauses("p(a) # q(b).").is_err());
        assert!(parse_literals("").is_err());
    }
}
