//! Hand-rolled scanner and recursive-descent parser for the axiom format.
//!
//! Statements end with `.`; `#` comments run to end of line. Errors carry
//! 1-based line and column.

use crate::error::{Error, Result};

use super::{Atom, KnowledgeBase, Rule, Term};

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Period,
    Turnstile,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

fn scan(source: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = source.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_alphanumeric() || c == '_' {
            let mut name = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    name.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Ident(name),
                line,
                col: start_col,
            });
            continue;
        }
        let kind = match c {
            '(' => {
                chars.next();
                col += 1;
                TokenKind::LParen
            }
            ')' => {
                chars.next();
                col += 1;
                TokenKind::RParen
            }
            ',' => {
                chars.next();
                col += 1;
                TokenKind::Comma
            }
            '.' => {
                chars.next();
                col += 1;
                TokenKind::Period
            }
            ':' => {
                chars.next();
                col += 1;
                match chars.peek() {
                    Some('-') => {
                        chars.next();
                        col += 1;
                        TokenKind::Turnstile
                    }
                    _ => {
                        return Err(Error::KbParse {
                            line,
                            col: start_col,
                            message: "expected `:-`".to_string(),
                        })
                    }
                }
            }
            other => {
                return Err(Error::KbParse {
                    line,
                    col: start_col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push(Token {
            kind,
            line,
            col: start_col,
        });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.peek().map(|t| (t.line, t.col)).unwrap_or_else(|| {
            self.tokens
                .last()
                .map(|t| (t.line, t.col + 1))
                .unwrap_or((1, 1))
        });
        Error::KbParse {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize)> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Ident(name),
                line,
                col,
            }) => Ok((name, line, col)),
            Some(t) => Err(Error::KbParse {
                line: t.line,
                col: t.col,
                message: format!("expected {what}"),
            }),
            None => Err(self.error_at(format!("expected {what}, found end of input"))),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<()> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(Error::KbParse {
                line: t.line,
                col: t.col,
                message: format!("expected {what}"),
            }),
            None => Err(self.error_at(format!("expected {what}, found end of input"))),
        }
    }

    /// `pred(term)` or `pred(term,term)`.
    fn atom(&mut self) -> Result<(Atom, usize, usize)> {
        let (predicate, line, col) = self.expect_ident("a predicate name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        let (first, _, _) = self.expect_ident("a term")?;
        args.push(Term::from_name(&first));
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
            self.next();
            let (next, tline, tcol) = self.expect_ident("a term")?;
            if args.len() == 2 {
                return Err(Error::KbParse {
                    line: tline,
                    col: tcol,
                    message: "atoms take at most two arguments".to_string(),
                });
            }
            args.push(Term::from_name(&next));
        }
        self.expect(TokenKind::RParen, "`)`")?;
        Ok((Atom::new(predicate, args), line, col))
    }

    /// One statement ending in `.`: a ground fact, a rule, or
    /// `A subClassOf B` sugar.
    fn statement(&mut self) -> Result<Statement> {
        let checkpoint = self.pos;
        let (first, _, _) = self.expect_ident("a statement")?;

        // `A subClassOf B.` has no parenthesis after the first identifier.
        if let Some(Token {
            kind: TokenKind::Ident(keyword),
            ..
        }) = self.peek()
        {
            if keyword == "subClassOf" {
                self.next();
                let (super_concept, _, _) = self.expect_ident("a concept name")?;
                self.expect(TokenKind::Period, "`.`")?;
                let variable = Term::Variable("X".to_string());
                return Ok(Statement::Rule(Rule {
                    head: Atom::new(super_concept, vec![variable.clone()]),
                    body: vec![Atom::new(first, vec![variable])],
                }));
            }
        }

        self.pos = checkpoint;
        let (head, hline, hcol) = self.atom()?;
        match self.next() {
            Some(Token {
                kind: TokenKind::Period,
                ..
            }) => {
                if !head.is_ground() {
                    return Err(Error::KbParse {
                        line: hline,
                        col: hcol,
                        message: format!("fact {head} contains a variable"),
                    });
                }
                Ok(Statement::Fact(head))
            }
            Some(Token {
                kind: TokenKind::Turnstile,
                ..
            }) => {
                let mut body = vec![self.atom().map(|(a, _, _)| a).map_err(|e| match e {
                    Error::KbParse { line, col, .. } => Error::KbParse {
                        line,
                        col,
                        message: "rule body must contain at least one atom".to_string(),
                    },
                    other => other,
                })?];
                while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
                    self.next();
                    body.push(self.atom()?.0);
                }
                self.expect(TokenKind::Period, "`.`")?;
                let rule = Rule { head, body };
                for head_arg in &rule.head.args {
                    if let Term::Variable(v) = head_arg {
                        let in_body = rule
                            .body
                            .iter()
                            .any(|atom| atom.args.iter().any(|t| t == head_arg));
                        if !in_body {
                            return Err(Error::KbParse {
                                line: hline,
                                col: hcol,
                                message: format!(
                                    "unsafe rule: head variable {v} does not occur in the body"
                                ),
                            });
                        }
                    }
                }
                Ok(Statement::Rule(rule))
            }
            Some(t) => Err(Error::KbParse {
                line: t.line,
                col: t.col,
                message: "expected `.` or `:-`".to_string(),
            }),
            None => Err(self.error_at("expected `.` or `:-`, found end of input")),
        }
    }
}

enum Statement {
    Fact(Atom),
    Rule(Rule),
}

pub(super) fn parse_kb(source: &str) -> Result<KnowledgeBase> {
    let tokens = scan(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut rules = Vec::new();
    let mut facts = Vec::new();
    while parser.peek().is_some() {
        match parser.statement()? {
            Statement::Fact(atom) => facts.push(atom),
            Statement::Rule(rule) => rules.push(rule),
        }
    }
    KnowledgeBase::from_parts(rules, facts)
}

/// A single ground atom, no trailing period required.
pub(super) fn parse_goal(source: &str) -> Result<Atom> {
    let tokens = scan(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let (atom, line, col) = parser.atom()?;
    if matches!(parser.peek().map(|t| &t.kind), Some(TokenKind::Period)) {
        parser.next();
    }
    if parser.peek().is_some() {
        return Err(parser.error_at("trailing input after goal"));
    }
    if !atom.is_ground() {
        return Err(Error::KbParse {
            line,
            col,
            message: format!("goal {atom} contains a variable"),
        });
    }
    Ok(atom)
}
