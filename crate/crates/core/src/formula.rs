//! Temporal-logic formulas: abstract syntax, the prefix S-expression surface
//! syntax, fragment membership and negation normal form.
//!
//! The concrete syntax is our own; formulas are written as prefix
//! S-expressions over the operator tokens `top not and or U X F G`:
//!
//! ```text
//! formula := "top" | ident
//!          | "(" "not" formula ")"
//!          | "(" ("and" | "or" | "U") formula formula ")"
//!          | "(" ("X" | "F" | "G") formula ")"
//! ```
//!
//! Derived operators (`or`, `F`, `G`) are kept as first-class variants. Backends
//! assign them different operational semantics, so nothing here desugars or
//! simplifies what the user wrote.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

/// Syntactic fragment a formula may be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fragment {
    #[serde(rename = "LTL")]
    Ltl,
    /// LTL without the next operator; the fragment continuous-time backends support.
    #[serde(rename = "LTL_NO_NEXT")]
    LtlNoNext,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fragment::Ltl => f.write_str("LTL"),
            Fragment::LtlNoNext => f.write_str("LTL_NO_NEXT"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnfError {
    #[error("negation above `U` has no normal form without a release operator: {0}")]
    NnfUnsupported(String),
}

const OPERATORS: [&str; 8] = ["top", "not", "and", "or", "U", "X", "F", "G"];

/// Returns true for names matching `[A-Za-z_][A-Za-z0-9_]*` that are not operator tokens.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !OPERATORS.contains(&name)
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Formula {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Prop(_) => vec![],
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => {
                vec![a]
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => vec![a, b],
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            Formula::Until(..) | Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_)
        )
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Canonical prefix rendering; `parse(&f.render())` returns `f`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write_to(&mut out);
        out
    }

    fn write_to(&self, out: &mut String) {
        let (op, args): (&str, Vec<&Formula>) = match self {
            Formula::Top => {
                out.push_str("top");
                return;
            }
            Formula::Prop(p) => {
                out.push_str(p);
                return;
            }
            Formula::Not(a) => ("not", vec![a]),
            Formula::And(a, b) => ("and", vec![a, b]),
            Formula::Or(a, b) => ("or", vec![a, b]),
            Formula::Until(a, b) => ("U", vec![a, b]),
            Formula::Next(a) => ("X", vec![a]),
            Formula::Eventually(a) => ("F", vec![a]),
            Formula::Always(a) => ("G", vec![a]),
        };
        out.push('(');
        out.push_str(op);
        for a in args {
            out.push(' ');
            a.write_to(out);
        }
        out.push(')');
    }

    /// True iff no connective forbidden by `frag` occurs anywhere in the formula.
    pub fn in_fragment(&self, frag: Fragment) -> bool {
        self.first_outside(frag).is_none()
    }

    /// First subformula (pre-order) whose top connective is forbidden by `frag`.
    pub fn first_outside(&self, frag: Fragment) -> Option<&Formula> {
        if frag == Fragment::LtlNoNext && matches!(self, Formula::Next(_)) {
            return Some(self);
        }
        self.children().into_iter().find_map(|c| c.first_outside(frag))
    }

    pub fn free_propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        if let Formula::Prop(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_props(out);
        }
    }

    /// Pushes negations down to atoms using the standard dualities.
    ///
    /// Fails when a negation sits above `U`: the dual (release) is not part of
    /// the grammar.
    pub fn to_nnf(&self) -> Result<Formula, NnfError> {
        Ok(match self {
            Formula::Top | Formula::Prop(_) => self.clone(),
            Formula::Not(inner) => negate(inner)?,
            Formula::And(a, b) => Formula::and(a.to_nnf()?, b.to_nnf()?),
            Formula::Or(a, b) => Formula::or(a.to_nnf()?, b.to_nnf()?),
            Formula::Until(a, b) => Formula::until(a.to_nnf()?, b.to_nnf()?),
            Formula::Next(a) => Formula::next(a.to_nnf()?),
            Formula::Eventually(a) => Formula::eventually(a.to_nnf()?),
            Formula::Always(a) => Formula::always(a.to_nnf()?),
        })
    }
}

/// NNF of `¬f`.
fn negate(f: &Formula) -> Result<Formula, NnfError> {
    Ok(match f {
        Formula::Top | Formula::Prop(_) => Formula::not(f.clone()),
        Formula::Not(inner) => inner.to_nnf()?,
        Formula::And(a, b) => Formula::or(negate(a)?, negate(b)?),
        Formula::Or(a, b) => Formula::and(negate(a)?, negate(b)?),
        Formula::Next(a) => Formula::next(negate(a)?),
        Formula::Eventually(a) => Formula::always(negate(a)?),
        Formula::Always(a) => Formula::eventually(negate(a)?),
        Formula::Until(..) => return Err(NnfError::NnfUnsupported(f.render())),
    })
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for Formula {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

#[derive(Debug, Clone)]
struct Token<'a> {
    tok: Tok<'a>,
    line: usize,
    column: usize,
}

fn tokenize<'a>(text: &'a str) -> Vec<Token<'a>> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut start: Option<(usize, usize, usize)> = None;
    let flush = |tokens: &mut Vec<Token<'a>>, start: &mut Option<(usize, usize, usize)>, end| {
        if let Some((s, l, c)) = start.take() {
            tokens.push(Token {
                tok: Tok::Atom(&text[s..end]),
                line: l,
                column: c,
            });
        }
    };
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | ')' => {
                flush(&mut tokens, &mut start, i);
                tokens.push(Token {
                    tok: if ch == '(' { Tok::Open } else { Tok::Close },
                    line,
                    column,
                });
            }
            c if c.is_whitespace() => flush(&mut tokens, &mut start, i),
            _ => {
                if start.is_none() {
                    start = Some((i, line, column));
                }
            }
        }
        if ch == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    flush(&mut tokens, &mut start, text.len());
    tokens
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn err<T>(&self, at: Option<&Token<'_>>, message: impl Into<String>) -> Result<T, SyntaxError> {
        let (line, column) = at.map(|t| (t.line, t.column)).unwrap_or(self.end);
        Err(SyntaxError {
            line,
            column,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let Some(tok) = self.next() else {
            return self.err(None, "unexpected end of input");
        };
        match tok.tok {
            Tok::Close => self.err(Some(&tok), "unbalanced `)`"),
            Tok::Atom("top") => Ok(Formula::Top),
            Tok::Atom(a) if is_identifier(a) => Ok(Formula::Prop(a.to_string())),
            Tok::Atom(a) if OPERATORS.contains(&a) => {
                self.err(Some(&tok), format!("operator `{a}` must appear after `(`"))
            }
            Tok::Atom(a) => self.err(Some(&tok), format!("invalid identifier `{a}`")),
            Tok::Open => {
                let Some(op) = self.next() else {
                    return self.err(None, "unbalanced `(`");
                };
                let name = match op.tok {
                    Tok::Atom(a) => a,
                    _ => return self.err(Some(&op), "expected an operator after `(`"),
                };
                let arity = match name {
                    "not" | "X" | "F" | "G" => 1,
                    "and" | "or" | "U" => 2,
                    "top" => return self.err(Some(&op), "`top` takes no arguments"),
                    other => return self.err(Some(&op), format!("unknown operator `{other}`")),
                };
                let mut args = Vec::with_capacity(arity);
                loop {
                    match self.tokens.get(self.pos) {
                        None => return self.err(None, "unbalanced `(`"),
                        Some(t) if t.tok == Tok::Close => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => args.push(self.formula()?),
                    }
                }
                if args.len() != arity {
                    let plural = if arity == 1 { "argument" } else { "arguments" };
                    return self.err(
                        Some(&op),
                        format!("`{name}` requires {arity} {plural}, got {}", args.len()),
                    );
                }
                let mut it = args.into_iter();
                let mut take = || it.next().expect("arity checked");
                Ok(match name {
                    "not" => Formula::not(take()),
                    "X" => Formula::next(take()),
                    "F" => Formula::eventually(take()),
                    "G" => Formula::always(take()),
                    "and" => {
                        let a = take();
                        Formula::and(a, take())
                    }
                    "or" => {
                        let a = take();
                        Formula::or(a, take())
                    }
                    _ => {
                        let a = take();
                        Formula::until(a, take())
                    }
                })
            }
        }
    }
}

/// Parses a prefix S-expression formula.
pub fn parse(text: &str) -> Result<Formula, SyntaxError> {
    let tokens = tokenize(text);
    let end = text.lines().enumerate().last().map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = Parser {
        tokens,
        pos: 0,
        end,
    };
    let f = p.formula()?;
    if let Some(extra) = p.tokens.get(p.pos).cloned() {
        let msg = if extra.tok == Tok::Close {
            "unbalanced `)`"
        } else {
            "trailing input after formula"
        };
        return p.err(Some(&extra), msg);
    }
    Ok(f)
}
