use std::collections::BTreeSet;
use std::fmt;

use super::{LangError, Language};

/// Propositional formula over named atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `True` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Left-nested disjunction; `False` for an empty iterator.
    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::False)
    }

    /// Atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.as_str());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True iff every atom is a variable of `lang`.
    pub fn is_over(&self, lang: &Language) -> bool {
        self.atoms().iter().all(|a| lang.contains(a))
    }

    /// Evaluates under an assignment given as a lookup function.
    pub fn eval(&self, value: &impl Fn(&str) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => value(a),
            Formula::Not(f) => !f.eval(value),
            Formula::And(a, b) => a.eval(value) && b.eval(value),
            Formula::Or(a, b) => a.eval(value) || b.eval(value),
            Formula::Implies(a, b) => !a.eval(value) || b.eval(value),
            Formula::Iff(a, b) => a.eval(value) == b.eval(value),
        }
    }

    /// Resolves atoms to bit positions of a packed two-valued model code.
    /// Variable `i` of an `n`-variable language lives at bit `n - 1 - i`.
    pub fn compile(&self, lang: &Language) -> Result<Compiled, LangError> {
        let n = lang.len();
        let node = match self {
            Formula::True => Compiled::Const(true),
            Formula::False => Compiled::Const(false),
            Formula::Atom(a) => {
                let i = lang
                    .position(a)
                    .ok_or_else(|| LangError::UnknownVariable {
                        name: a.clone(),
                        position: None,
                    })?;
                Compiled::Bit(n - 1 - i)
            }
            Formula::Not(f) => Compiled::Not(Box::new(f.compile(lang)?)),
            Formula::And(a, b) => {
                Compiled::And(Box::new(a.compile(lang)?), Box::new(b.compile(lang)?))
            }
            Formula::Or(a, b) => {
                Compiled::Or(Box::new(a.compile(lang)?), Box::new(b.compile(lang)?))
            }
            Formula::Implies(a, b) => Compiled::Or(
                Box::new(Compiled::Not(Box::new(a.compile(lang)?))),
                Box::new(b.compile(lang)?),
            ),
            Formula::Iff(a, b) => {
                Compiled::Iff(Box::new(a.compile(lang)?), Box::new(b.compile(lang)?))
            }
        };
        Ok(node)
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(..) => 5,
            _ => 6,
        }
    }
}

/// Formula with atoms resolved to bit positions.
#[derive(Clone, Debug)]
pub enum Compiled {
    Const(bool),
    Bit(usize),
    Not(Box<Compiled>),
    And(Box<Compiled>, Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
    Iff(Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    pub fn eval(&self, code: u64) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Bit(i) => code >> i & 1 == 1,
            Compiled::Not(f) => !f.eval(code),
            Compiled::And(a, b) => a.eval(code) && b.eval(code),
            Compiled::Or(a, b) => a.eval(code) || b.eval(code),
            Compiled::Iff(a, b) => a.eval(code) == b.eval(code),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary arrows are right-associative, `&` and `|` left-associative.
        fn side(
            out: &mut fmt::Formatter<'_>,
            child: &Formula,
            parent: u8,
            needs_strict: bool,
        ) -> fmt::Result {
            let p = child.precedence();
            if p < parent || (needs_strict && p == parent) {
                write!(out, "({child})")
            } else {
                write!(out, "{child}")
            }
        }
        let p = self.precedence();
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(inner) => {
                write!(f, "!")?;
                side(f, inner, p, false)
            }
            Formula::And(a, b) => {
                side(f, a, p, false)?;
                write!(f, " & ")?;
                side(f, b, p, true)
            }
            Formula::Or(a, b) => {
                side(f, a, p, false)?;
                write!(f, " | ")?;
                side(f, b, p, true)
            }
            Formula::Implies(a, b) => {
                side(f, a, p, true)?;
                write!(f, " -> ")?;
                side(f, b, p, false)
            }
            Formula::Iff(a, b) => {
                side(f, a, p, true)?;
                write!(f, " <-> ")?;
                side(f, b, p, false)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, LangError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '!' => {
                i += 1;
                Token::Not
            }
            '&' => {
                i += 1;
                Token::And
            }
            '|' => {
                i += 1;
                Token::Or
            }
            '(' => {
                i += 1;
                Token::LParen
            }
            ')' => {
                i += 1;
                Token::RParen
            }
            '-' if text[i..].starts_with("->") => {
                i += 2;
                Token::Implies
            }
            '<' if text[i..].starts_with("<->") => {
                i += 3;
                Token::Iff
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                match &text[start..i] {
                    "true" => Token::True,
                    "false" => Token::False,
                    name => Token::Ident(name.to_string()),
                }
            }
            other => {
                return Err(LangError::Syntax {
                    position: start,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    lang: &'a Language,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula, LangError> {
        let lhs = self.implies()?;
        if self.eat(&Token::Iff) {
            let rhs = self.iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, LangError> {
        let lhs = self.or()?;
        if self.eat(&Token::Implies) {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LangError> {
        let mut acc = self.and()?;
        while self.eat(&Token::Or) {
            acc = Formula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, LangError> {
        let mut acc = self.unary()?;
        while self.eat(&Token::And) {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, LangError> {
        let at = self.offset();
        match self.tokens.get(self.pos).cloned() {
            Some((_, Token::Not)) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some((_, Token::True)) => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some((_, Token::False)) => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some((_, Token::Ident(name))) => {
                if !self.lang.contains(&name) {
                    return Err(LangError::UnknownVariable {
                        name,
                        position: Some(at),
                    });
                }
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            Some((_, Token::LParen)) => {
                self.pos += 1;
                let inner = self.iff()?;
                if !self.eat(&Token::RParen) {
                    return Err(LangError::Syntax {
                        position: self.offset(),
                        message: format!("unclosed parenthesis opened at {at}"),
                    });
                }
                Ok(inner)
            }
            Some((_, tok)) => Err(LangError::Syntax {
                position: at,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(LangError::Syntax {
                position: at,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parses `text` against the grammar
/// `iff := imp ("<->" iff)?`, `imp := or ("->" imp)?`, `or := and ("|" and)*`,
/// `and := un ("&" un)*`, `un := "!" un | atom | "true" | "false" | "(" iff ")"`.
pub fn parse_formula(text: &str, lang: &Language) -> Result<Formula, LangError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        lang,
    };
    let f = parser.iff()?;
    if parser.pos != parser.tokens.len() {
        return Err(LangError::Syntax {
            position: parser.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(f)
}
