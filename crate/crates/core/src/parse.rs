//! Lexer and recursive-descent parser for the statement grammar
//!
//! ```text
//! thm <name> (<var>:<lo>..<hi>)* (<hyp>: <rel>)* : <rel>
//! rel  := term (= | <= | <) term
//! term := sum;  sum := prod (('+' | '-') prod)*;  prod := unary ('*' unary)*
//! unary := 'neg' unary | '-' INT | power;  power := atom ('^' INT)*
//! atom := INT | IDENT | '(' term ')'
//! ```
//!
//! Rule lines reuse the same expression parser with `?name` holes.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::statement::{Hypothesis, Limits, RelKind, Relation, Statement, ValidationError, VarDecl};
use crate::term::{Atom, Node, Term};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

impl ParseError {
    fn at(tok: &Spanned, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: tok.line, col: tok.col, msg: msg.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Token {
    Ident(String),
    Hole(String),
    Int(u64),
    LParen,
    RParen,
    Colon,
    DotDot,
    Plus,
    Minus,
    Star,
    Caret,
    Eq,
    Le,
    Lt,
    Iff,
    Imp,
    Neg,
    Thm,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => f.write_str(s),
            Token::Hole(s) => write!(f, "?{s}"),
            Token::Int(v) => write!(f, "{v}"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
            Token::Colon => f.write_str(":"),
            Token::DotDot => f.write_str(".."),
            Token::Plus => f.write_str("+"),
            Token::Minus => f.write_str("-"),
            Token::Star => f.write_str("*"),
            Token::Caret => f.write_str("^"),
            Token::Eq => f.write_str("="),
            Token::Le => f.write_str("<="),
            Token::Lt => f.write_str("<"),
            Token::Iff => f.write_str("<->"),
            Token::Imp => f.write_str("->"),
            Token::Neg => f.write_str("neg"),
            Token::Thm => f.write_str("thm"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Token,
    pub line: usize,
    pub col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_lowercase()
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let err = |msg: String| ParseError::Syntax { line: l0, col: c0, msg };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let take_word = |start: usize| {
            let mut j = start;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            j
        };
        let (tok, len) = if is_ident_start(c) {
            let j = take_word(i);
            let word: String = chars[i..j].iter().collect();
            let tok = match word.as_str() {
                "neg" => Token::Neg,
                "thm" => Token::Thm,
                _ => Token::Ident(word),
            };
            (tok, j - i)
        } else if c == '?' {
            if i + 1 >= chars.len() || !is_ident_start(chars[i + 1]) {
                return Err(err("expected a hole name after `?`".into()));
            }
            let j = take_word(i + 1);
            (Token::Hole(chars[i + 1..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[i..j].iter().collect();
            let v = digits.parse::<u64>().map_err(|_| err(alloc::format!("integer `{digits}` is too large")))?;
            (Token::Int(v), j - i)
        } else {
            let next = chars.get(i + 1).copied();
            match (c, next) {
                ('(', _) => (Token::LParen, 1),
                (')', _) => (Token::RParen, 1),
                (':', _) => (Token::Colon, 1),
                ('.', Some('.')) => (Token::DotDot, 2),
                ('+', _) => (Token::Plus, 1),
                ('-', Some('>')) => (Token::Imp, 2),
                ('-', _) => (Token::Minus, 1),
                ('*', _) => (Token::Star, 1),
                ('^', _) => (Token::Caret, 1),
                ('=', _) => (Token::Eq, 1),
                ('<', Some('=')) => (Token::Le, 2),
                ('<', Some('-')) if chars.get(i + 2) == Some(&'>') => (Token::Iff, 3),
                ('<', _) => (Token::Lt, 1),
                ('≤', _) => (Token::Le, 1),
                _ => return Err(err(alloc::format!("unexpected character `{c}`"))),
            }
        };
        out.push(Spanned { tok, line: l0, col: c0 });
        i += len;
        col += len;
    }
    out.push(Spanned { tok: Token::Eof, line, col });
    Ok(out)
}

/// Leaf produced by the generic expression parser.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum RawLeaf {
    Lit(i64),
    Var(String),
    Hole(String),
}

pub(crate) type RawTerm = Node<RawLeaf>;

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    limits: Limits,
}

impl Parser {
    pub(crate) fn new(text: &str, limits: Limits) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0, limits })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::at(self.here(), alloc::format!("expected `{want}`, found `{}`", self.peek())))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Token::Eof {
            Ok(())
        } else {
            Err(ParseError::at(self.here(), alloc::format!("unexpected `{}`", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Token::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(ParseError::at(self.here(), alloc::format!("expected an identifier, found `{t}`"))),
        }
    }

    fn literal(&mut self, negative: bool) -> Result<i64, ParseError> {
        let here = self.here().clone();
        match self.bump() {
            Token::Int(v) => {
                let v = i64::try_from(v).map_err(|_| ParseError::at(&here, "integer literal out of range"))?;
                let v = if negative { -v } else { v };
                if v < self.limits.literal_min || v > self.limits.literal_max {
                    return Err(ValidationError::LiteralOutOfRange(v).into());
                }
                Ok(v)
            }
            t => Err(ParseError::at(&here, alloc::format!("expected an integer, found `{t}`"))),
        }
    }

    pub(crate) fn term(&mut self) -> Result<RawTerm, ParseError> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    acc = Node::add(acc, self.product()?);
                }
                Token::Minus => {
                    self.bump();
                    acc = Node::sub(acc, self.product()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<RawTerm, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Token::Star {
            self.bump();
            acc = Node::mul(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RawTerm, ParseError> {
        match self.peek() {
            Token::Neg => {
                self.bump();
                Ok(Node::neg(self.unary()?))
            }
            Token::Minus => {
                self.bump();
                if !matches!(self.peek(), Token::Int(_)) {
                    return Err(ParseError::at(self.here(), "`-` in prefix position must precede an integer; use `neg`"));
                }
                Ok(Node::Leaf(RawLeaf::Lit(self.literal(true)?)))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RawTerm, ParseError> {
        let mut base = self.atom()?;
        while *self.peek() == Token::Caret {
            self.bump();
            let here = self.here().clone();
            let e = match self.bump() {
                Token::Int(v) => v,
                t => return Err(ParseError::at(&here, alloc::format!("exponent must be a natural literal, found `{t}`"))),
            };
            if e > self.limits.max_exponent as u64 {
                let shown = e.min(u8::MAX as u64) as u8;
                return Err(ValidationError::ExponentTooLarge(shown, self.limits.max_exponent).into());
            }
            base = Node::pow(base, e as u8);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RawTerm, ParseError> {
        let here = self.here().clone();
        match self.peek().clone() {
            Token::Int(_) => Ok(Node::Leaf(RawLeaf::Lit(self.literal(false)?))),
            Token::Ident(s) => {
                self.bump();
                Ok(Node::Leaf(RawLeaf::Var(s)))
            }
            Token::Hole(s) => {
                self.bump();
                Ok(Node::Leaf(RawLeaf::Hole(s)))
            }
            Token::LParen => {
                self.bump();
                let inner = self.term()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            t => Err(ParseError::at(&here, alloc::format!("expected a term, found `{t}`"))),
        }
    }

    pub(crate) fn rel_kind(&mut self) -> Option<RelKind> {
        let k = match self.peek() {
            Token::Eq => RelKind::Eq,
            Token::Le => RelKind::Le,
            Token::Lt => RelKind::Lt,
            _ => return None,
        };
        self.bump();
        Some(k)
    }

    fn relation(&mut self) -> Result<(RelKind, RawTerm, RawTerm), ParseError> {
        let lhs = self.term()?;
        let Some(kind) = self.rel_kind() else {
            return Err(ParseError::at(self.here(), alloc::format!("expected `=`, `<=` or `<`, found `{}`", self.peek())));
        };
        let rhs = self.term()?;
        Ok((kind, lhs, rhs))
    }

    fn concrete_relation(&mut self) -> Result<Relation, ParseError> {
        let here = self.here().clone();
        let (kind, l, r) = self.relation()?;
        Ok(Relation::new(kind, to_term(l, &here)?, to_term(r, &here)?))
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        self.expect(Token::Thm)?;
        let name = match self.peek() {
            Token::Ident(_) => self.ident()?,
            _ => "anon".to_string(),
        };
        let mut vars = Vec::new();
        let mut hyps = Vec::new();
        while *self.peek() == Token::LParen {
            self.bump();
            if *self.peek() == Token::RParen {
                self.bump();
                continue;
            }
            let item = self.ident()?;
            self.expect(Token::Colon)?;
            let is_domain = matches!((self.peek(), self.peek_at(1)), (Token::Int(_), Token::DotDot))
                || matches!((self.peek(), self.peek_at(1), self.peek_at(2)), (Token::Minus, Token::Int(_), Token::DotDot));
            if is_domain {
                let lo = self.signed_literal()?;
                self.expect(Token::DotDot)?;
                let hi = self.signed_literal()?;
                vars.push(VarDecl { name: item, lo, hi });
            } else {
                hyps.push(Hypothesis { name: item, rel: self.concrete_relation()? });
            }
            self.expect(Token::RParen)?;
        }
        self.expect(Token::Colon)?;
        let goal = self.concrete_relation()?;
        self.expect_eof()?;
        let stmt = Statement { name, vars, hyps, goal };
        self.limits.check_statement(&stmt)?;
        Ok(stmt)
    }

    fn signed_literal(&mut self) -> Result<i64, ParseError> {
        if *self.peek() == Token::Minus {
            self.bump();
            self.literal(true)
        } else {
            self.literal(false)
        }
    }

    /// One side of a rule line: a term pattern or a relation pattern.
    pub(crate) fn rule_side(&mut self) -> Result<RawSide, ParseError> {
        let lhs = self.term()?;
        match self.rel_kind() {
            Some(kind) => Ok(RawSide::Relation(kind, lhs, self.term()?)),
            None => Ok(RawSide::Term(lhs)),
        }
    }

    /// `id: side (<->|->) side`
    pub(crate) fn rule_line(&mut self) -> Result<RawRule, ParseError> {
        let id = self.ident()?;
        self.expect(Token::Colon)?;
        let lhs = self.rule_side()?;
        let here = self.here().clone();
        let bidirectional = match self.bump() {
            Token::Iff => true,
            Token::Imp => false,
            t => return Err(ParseError::at(&here, alloc::format!("expected `<->` or `->`, found `{t}`"))),
        };
        let rhs = self.rule_side()?;
        self.expect_eof()?;
        Ok(RawRule { id, lhs, rhs, bidirectional })
    }
}

pub(crate) enum RawSide {
    Term(RawTerm),
    Relation(RelKind, RawTerm, RawTerm),
}

pub(crate) struct RawRule {
    pub id: String,
    pub lhs: RawSide,
    pub rhs: RawSide,
    pub bidirectional: bool,
}

fn to_term(raw: RawTerm, at: &Spanned) -> Result<Term, ParseError> {
    Ok(match raw {
        Node::Leaf(RawLeaf::Lit(v)) => Node::Leaf(Atom::Lit(v)),
        Node::Leaf(RawLeaf::Var(v)) => Node::Leaf(Atom::Var(v)),
        Node::Leaf(RawLeaf::Hole(h)) => return Err(ParseError::at(at, alloc::format!("hole `?{h}` is only allowed in rules"))),
        Node::Add(a, b) => Node::Add(Box::new(to_term(*a, at)?), Box::new(to_term(*b, at)?)),
        Node::Sub(a, b) => Node::Sub(Box::new(to_term(*a, at)?), Box::new(to_term(*b, at)?)),
        Node::Mul(a, b) => Node::Mul(Box::new(to_term(*a, at)?), Box::new(to_term(*b, at)?)),
        Node::Neg(a) => Node::Neg(Box::new(to_term(*a, at)?)),
        Node::Pow(a, e) => Node::Pow(Box::new(to_term(*a, at)?), e),
    })
}

pub fn parse_statement(text: &str) -> Result<Statement, ParseError> {
    parse_statement_with(text, &Limits::default())
}

pub fn parse_statement_with(text: &str, limits: &Limits) -> Result<Statement, ParseError> {
    Parser::new(text, *limits)?.statement()
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, Limits::default())?;
    let here = p.here().clone();
    let raw = p.term()?;
    p.expect_eof()?;
    let t = to_term(raw, &here)?;
    Limits::default().check_term(&t)?;
    Ok(t)
}

pub fn parse_relation(text: &str) -> Result<Relation, ParseError> {
    let mut p = Parser::new(text, Limits::default())?;
    let r = p.concrete_relation()?;
    p.expect_eof()?;
    Limits::default().check_relation(&r)?;
    Ok(r)
}

/// Split a statement's canonical text into tokens, with the theorem name
/// replaced by `<name>`.
pub fn statement_tokens(stmt: &Statement) -> Vec<String> {
    let toks = lex(&stmt.canonical()).expect("canonical text always lexes");
    toks.iter()
        .enumerate()
        .filter(|(_, t)| t.tok != Token::Eof)
        .map(|(i, t)| if i == 1 { "<name>".to_string() } else { t.tok.to_string() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parses_the_worked_statement() {
        let s = parse_statement("thm a (x:0..3) (h0: x + 1 = 3) : 3 = x + 1").unwrap();
        assert_eq!(s.name, "a");
        assert_eq!(s.vars, vec![VarDecl::new("x", 0, 3)]);
        assert_eq!(s.hyps.len(), 1);
        assert_eq!(s.hyps[0].rel, Relation::eq(Term::add(Term::var("x"), Term::lit(1)), Term::lit(3)));
        assert_eq!(s.goal, Relation::eq(Term::lit(3), Term::add(Term::var("x"), Term::lit(1))));
        assert_eq!(s.canonical(), "thm a (x:0..3) (h0: x + 1 = 3) : 3 = x + 1");
    }

    #[test]
    fn ground_statement_with_empty_group() {
        let s = parse_statement("thm b () : 2 * 3 = 6").unwrap();
        assert!(s.vars.is_empty() && s.hyps.is_empty());
        assert_eq!(s.canonical(), "thm b : 2 * 3 = 6");
    }

    #[test]
    fn dangling_operator_is_a_syntax_error() {
        let err = parse_statement("thm c (x:0..3) : x +").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => assert_eq!((line, col), (1, 21)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn domain_violations() {
        assert!(matches!(
            parse_statement("thm d (x:0..3) : y = 1"),
            Err(ParseError::Invalid(ValidationError::Undeclared(_)))
        ));
        assert!(matches!(
            parse_statement("thm d (x:0..3) : x ^ 5 = 1"),
            Err(ParseError::Invalid(ValidationError::ExponentTooLarge(5, 4)))
        ));
        assert!(matches!(
            parse_statement("thm d (x:3..0) : x = 1"),
            Err(ParseError::Invalid(ValidationError::EmptyDomain(_)))
        ));
        assert!(matches!(
            parse_statement("thm d : 2000000 = 1"),
            Err(ParseError::Invalid(ValidationError::LiteralOutOfRange(2000000)))
        ));
    }

    #[test]
    fn unnamed_statement_and_unicode_le() {
        let s = parse_statement("thm (x:0..3) () : x ≤ 2").unwrap();
        assert_eq!(s.name, "anon");
        assert_eq!(s.goal.kind, RelKind::Le);
        assert_eq!(s.canonical(), "thm anon (x:0..3) : x <= 2");
    }

    #[test]
    fn negative_literals_and_domains() {
        let s = parse_statement("thm n (y:-2..2) : y - -3 = neg (-3) ^ 2 + y").unwrap();
        assert_eq!(s.vars[0].lo, -2);
        let again = parse_statement(&s.canonical()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn prefix_minus_requires_literal() {
        assert!(parse_term("-x").is_err());
        assert_eq!(parse_term("neg x").unwrap(), Term::neg(Term::var("x")));
    }

    #[test]
    fn multiline_errors_report_line() {
        let err = lex("thm a\n  : 1 = $").unwrap_err();
        assert_eq!(err, ParseError::Syntax { line: 2, col: 9, msg: "unexpected character `$`".into() });
    }

    #[test]
    fn tokens_hide_name() {
        let s = parse_statement("thm foo (x:0..1) : x = 1").unwrap();
        let t = statement_tokens(&s);
        assert_eq!(t[0], "thm");
        assert_eq!(t[1], "<name>");
        assert_eq!(t.last().unwrap(), "1");
    }
}
