//! The supported PCTL fragment: `P=? [ SF U SF ]` and `P=? [ SF U<=t SF ]`
//! over boolean state formulas.

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dtmc::{Dtmc, StateSet, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("nested probability operators are not supported (column {column})")]
    UnsupportedNesting { column: usize },
    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateFormula {
    True,
    False,
    Atom(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    pub fn atom(name: &str) -> Self {
        StateFormula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        StateFormula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        StateFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        StateFormula::Or(Box::new(self), Box::new(other))
    }

    /// Resolves atom names against `model`'s propositions.
    pub fn resolve(&self, model: &Dtmc) -> Result<Resolved, FormulaError> {
        Ok(match self {
            StateFormula::True => Resolved::Const(true),
            StateFormula::False => Resolved::Const(false),
            StateFormula::Atom(name) => Resolved::Atom(
                model
                    .ap_index(name)
                    .ok_or_else(|| FormulaError::UnknownProposition(name.clone()))?,
            ),
            StateFormula::Not(f) => Resolved::Not(Box::new(f.resolve(model)?)),
            StateFormula::And(l, r) => Resolved::And(Box::new(l.resolve(model)?), Box::new(r.resolve(model)?)),
            StateFormula::Or(l, r) => Resolved::Or(Box::new(l.resolve(model)?), Box::new(r.resolve(model)?)),
        })
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => f.write_str("true"),
            StateFormula::False => f.write_str("false"),
            StateFormula::Atom(name) => f.write_str(name),
            StateFormula::Not(inner) => write!(f, "!{inner}"),
            StateFormula::And(l, r) => write!(f, "({l} & {r})"),
            StateFormula::Or(l, r) => write!(f, "({l} | {r})"),
        }
    }
}

/// A state formula with propositions resolved to indices of one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolved {
    Const(bool),
    Atom(usize),
    Not(Box<Resolved>),
    And(Box<Resolved>, Box<Resolved>),
    Or(Box<Resolved>, Box<Resolved>),
}

impl Resolved {
    pub fn holds(&self, model: &Dtmc, state: usize) -> bool {
        match self {
            Resolved::Const(b) => *b,
            Resolved::Atom(ap) => model.has_label(state, *ap),
            Resolved::Not(f) => !f.holds(model, state),
            Resolved::And(l, r) => l.holds(model, state) && r.holds(model, state),
            Resolved::Or(l, r) => l.holds(model, state) || r.holds(model, state),
        }
    }

    pub fn sat(&self, model: &Dtmc) -> StateSet {
        StateSet::from_mask((0..model.n()).map(|s| self.holds(model, s)).collect())
    }
}

/// `s ⊨ f` under the labeling of `model`.
pub fn eval_state(model: &Dtmc, f: &StateFormula, state: usize) -> Result<bool, FormulaError> {
    if state >= model.n() {
        return Err(FormulaError::StateOutOfRange { state, n: model.n() });
    }
    Ok(f.resolve(model)?.holds(model, state))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UntilQuery {
    pub left: StateFormula,
    pub right: StateFormula,
    pub bound: Option<u64>,
}

impl UntilQuery {
    pub fn unbounded(left: StateFormula, right: StateFormula) -> Self {
        UntilQuery {
            left,
            right,
            bound: None,
        }
    }

    pub fn bounded(left: StateFormula, right: StateFormula, bound: u64) -> Self {
        UntilQuery {
            left,
            right,
            bound: Some(bound),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.bound.is_none()
    }

    /// SHA-256 over the canonical rendering.
    pub fn fingerprint(&self) -> FormulaFingerprint {
        FormulaFingerprint(Sha256::digest(self.to_string().as_bytes()).into())
    }

    pub fn resolve(&self, model: &Dtmc) -> Result<ResolvedQuery, FormulaError> {
        Ok(ResolvedQuery {
            left: self.left.resolve(model)?.sat(model),
            right: self.right.resolve(model)?.sat(model),
            bound: self.bound,
        })
    }
}

impl fmt::Display for UntilQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bound {
            None => write!(f, "P=? [ {} U {} ]", self.left, self.right),
            Some(t) => write!(f, "P=? [ {} U<={} {} ]", self.left, t, self.right),
        }
    }
}

impl std::str::FromStr for UntilQuery {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormulaFingerprint(pub [u8; 32]);

impl FormulaFingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        let bytes = hex::decode(text).ok()?;
        Some(FormulaFingerprint(bytes.try_into().ok()?))
    }
}

impl fmt::Display for FormulaFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Satisfaction sets of both until operands on one model.
#[derive(Debug, Clone)]
pub struct ResolvedQuery {
    pub left: StateSet,
    pub right: StateSet,
    pub bound: Option<u64>,
}

impl ResolvedQuery {
    /// Verdict decided at `state` in trace position `index`, if any.
    ///
    /// Φ₂ is checked first, so a Φ₂ state resolves to true even when it also
    /// violates Φ₁.
    pub fn step(&self, state: usize, index: usize) -> Option<TraceVerdict> {
        if self.right.contains(state) {
            Some(TraceVerdict::True)
        } else if !self.left.contains(state) || self.bound.is_some_and(|t| index as u64 >= t) {
            Some(TraceVerdict::False)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceVerdict {
    True,
    False,
    Inconclusive,
}

/// Evaluates `q` on a finite trace. A trace that ends undecided is
/// inconclusive whether or not it was marked truncated.
pub fn eval_trace(model: &Dtmc, q: &UntilQuery, trace: &Trace) -> Result<TraceVerdict, FormulaError> {
    if trace.states.is_empty() {
        return Err(FormulaError::EmptyTrace);
    }
    if let Some(&state) = trace.states.iter().find(|&&s| s >= model.n()) {
        return Err(FormulaError::StateOutOfRange { state, n: model.n() });
    }
    let left = q.left.resolve(model)?;
    let right = q.right.resolve(model)?;
    for (i, &s) in trace.states.iter().enumerate() {
        if right.holds(model, s) {
            return Ok(TraceVerdict::True);
        }
        if !left.holds(model, s) {
            return Ok(TraceVerdict::False);
        }
        if q.bound.is_some_and(|t| i as u64 >= t) {
            return Ok(TraceVerdict::False);
        }
    }
    Ok(TraceVerdict::Inconclusive)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Prob,
    Query,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Until,
    Le,
    Int(u64),
    True,
    False,
    Ident(String),
    Not,
    And,
    Or,
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let column = |i: usize| chars.get(i).map_or(text.chars().count() + 1, |_| i + 1);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        let start = i;
        let token = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '[' => Token::LBracket,
            ']' => Token::RBracket,
            '(' => Token::LParen,
            ')' => Token::RParen,
            '!' => Token::Not,
            '&' => Token::And,
            '|' => Token::Or,
            '=' if chars.get(i + 1).map(|c| c.1) == Some('?') => {
                i += 1;
                Token::Query
            }
            '<' if chars.get(i + 1).map(|c| c.1) == Some('=') => {
                i += 1;
                Token::Le
            }
            c if c.is_ascii_digit() => {
                while chars.get(i + 1).is_some_and(|c| c.1.is_ascii_digit()) {
                    i += 1;
                }
                let digits: String = chars[start..=i].iter().map(|c| c.1).collect();
                Token::Int(digits.parse().map_err(|_| FormulaError::Syntax {
                    column: column(start),
                    message: format!("integer `{digits}` out of range"),
                })?)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while chars
                    .get(i + 1)
                    .is_some_and(|c| c.1.is_ascii_alphanumeric() || c.1 == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..=i].iter().map(|c| c.1).collect();
                match word.as_str() {
                    "P" => Token::Prob,
                    "U" => Token::Until,
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => Token::Ident(word),
                }
            }
            other => {
                return Err(FormulaError::Syntax {
                    column: column(start),
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push((column(start), token));
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |t| t.0)
    }

    fn error(&self, message: impl Into<String>) -> FormulaError {
        FormulaError::Syntax {
            column: self.column(),
            message: message.into(),
        }
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn query(&mut self) -> Result<UntilQuery, FormulaError> {
        self.expect(Token::Prob, "`P`")?;
        self.expect(Token::Query, "`=?`")?;
        self.expect(Token::LBracket, "`[`")?;
        let left = self.disjunction()?;
        self.expect(Token::Until, "`U`")?;
        let bound = if self.peek() == Some(&Token::Le) {
            self.pos += 1;
            match self.peek() {
                Some(&Token::Int(t)) => {
                    self.pos += 1;
                    Some(t)
                }
                _ => return Err(self.error("expected step bound after `<=`")),
            }
        } else {
            None
        };
        let right = self.disjunction()?;
        self.expect(Token::RBracket, "`]`")?;
        if self.pos != self.tokens.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(UntilQuery { left, right, bound })
    }

    fn disjunction(&mut self) -> Result<StateFormula, FormulaError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            f = f.or(self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<StateFormula, FormulaError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            f = f.and(self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<StateFormula, FormulaError> {
        let column = self.column();
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let f = self.disjunction()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(f)
            }
            Some(Token::True) => {
                self.pos += 1;
                Ok(StateFormula::True)
            }
            Some(Token::False) => {
                self.pos += 1;
                Ok(StateFormula::False)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(StateFormula::Atom(name))
            }
            Some(Token::Prob) => Err(FormulaError::UnsupportedNesting { column }),
            _ => Err(self.error("expected a state formula")),
        }
    }
}

/// Parses `P=? [ SF U SF ]` or `P=? [ SF U<=t SF ]`. `!` binds tightest and
/// `&` binds tighter than `|`.
pub fn parse_formula(text: &str) -> Result<UntilQuery, FormulaError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    parser.query()
}
