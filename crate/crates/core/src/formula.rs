//! Formulas of the ⊤/∧/⇒ fragment and sequents over them.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::id::Atom;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Formula {
    Top,
    Atom(Atom),
    /// At least two conjuncts, none of which is itself a conjunction.
    Conj(Vec<Formula>),
    Impl(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Atom::new(name))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Impl(Box::new(a), Box::new(b))
    }

    /// Conjunction of `items`, flattened. No items gives ⊤, one item gives itself.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut flat = Vec::new();
        for f in items {
            match f {
                Formula::Conj(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::Top,
            1 => flat.pop().unwrap(),
            _ => Formula::Conj(flat),
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::conj([a, b])
    }

    /// Normal form modulo associativity, commutativity and unit of ∧.
    pub fn canonical(&self) -> Formula {
        match self {
            Formula::Top | Formula::Atom(_) => self.clone(),
            Formula::Impl(a, b) => Formula::imp(a.canonical(), b.canonical()),
            Formula::Conj(items) => {
                let mut flat: Vec<Formula> = Vec::new();
                for f in items {
                    match f.canonical() {
                        Formula::Top => {}
                        Formula::Conj(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                Formula::conj(flat)
            }
        }
    }

    /// Number of binary connectives, counting an n-ary conjunction as n - 1.
    pub fn connectives(&self) -> usize {
        match self {
            Formula::Top | Formula::Atom(_) => 0,
            Formula::Impl(a, b) => 1 + a.connectives() + b.connectives(),
            Formula::Conj(items) => items.len() - 1 + items.iter().map(Formula::connectives).sum::<usize>(),
        }
    }

    pub fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::Top => {}
            Formula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone())
                }
            }
            Formula::Impl(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            Formula::Conj(items) => items.iter().for_each(|f| f.atoms(out)),
        }
    }

    pub fn parse(src: &str) -> Result<Formula> {
        let mut p = Parser::new(src);
        let f = p.implication()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(g: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match g {
                Formula::Top | Formula::Atom(_) => write!(f, "{g}"),
                _ => write!(f, "({g})"),
            }
        }
        match self {
            Formula::Top => f.write_str("T"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Conj(items) => {
                for (i, g) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    operand(g, f)?;
                }
                Ok(())
            }
            Formula::Impl(a, b) => {
                operand(a, f)?;
                f.write_str(" => ")?;
                match **b {
                    Formula::Impl(..) => write!(f, "{b}"),
                    _ => operand(b, f),
                }
            }
        }
    }
}

/// `hypotheses ⊢ goal`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Sequent {
    pub hypotheses: Vec<Formula>,
    pub goal: Formula,
}

impl Sequent {
    pub fn new(hypotheses: Vec<Formula>, goal: Formula) -> Self {
        Sequent { hypotheses, goal }
    }

    /// Parses `h1, h2, ... |- goal`. `⊢` is accepted for `|-`; the left side may be empty.
    pub fn parse(src: &str) -> Result<Sequent> {
        let (lhs, rhs, offset) = if let Some(i) = src.find("|-") {
            (&src[..i], &src[i + 2..], i + 2)
        } else if let Some(i) = src.find('⊢') {
            (&src[..i], &src[i + '⊢'.len_utf8()..], i + '⊢'.len_utf8())
        } else {
            return Err(Error::Syntax { pos: 0, msg: "expected `|-`".into() });
        };
        let mut hypotheses = Vec::new();
        if !lhs.trim().is_empty() {
            let mut start = 0;
            for part in lhs.split(',') {
                let f = Formula::parse(part).map_err(|e| shift(e, start))?;
                hypotheses.push(f);
                start += part.len() + 1;
            }
        }
        let goal = Formula::parse(rhs).map_err(|e| shift(e, offset))?;
        Ok(Sequent { hypotheses, goal })
    }
}

fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Syntax { pos, msg } => Error::Syntax { pos: pos + by, msg },
        other => other,
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.hypotheses.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{h}")?;
        }
        if !self.hypotheses.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "|- {}", self.goal)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src: src.as_bytes(), pos: 0 }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.conjunction()?;
        if self.eat("=>") {
            let rhs = self.implication()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut items = vec![self.primary()?];
        while self.eat("&") {
            items.push(self.primary()?);
        }
        Ok(Formula::conj(items))
    }

    fn primary(&mut self) -> Result<Formula> {
        self.skip_ws();
        if self.eat("(") {
            let f = self.implication()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`"));
            }
            return Ok(f);
        }
        if self.eat("⊤") {
            return Ok(Formula::Top);
        }
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if word == "T" {
            Ok(Formula::Top)
        } else if crate::id::is_atom_name(word) {
            Ok(Formula::atom(word))
        } else {
            self.pos = start;
            Err(self.err("expected a formula"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        let f = Formula::parse("a & (a => b)").unwrap();
        assert_eq!(f.to_string(), "a & (a => b)");
        let g = Formula::parse("a => b => c").unwrap();
        assert_eq!(g, Formula::imp(Formula::atom("a"), Formula::imp(Formula::atom("b"), Formula::atom("c"))));
        assert_eq!(Formula::parse(&g.to_string()).unwrap(), g);
        let h = Formula::parse("a & b => c").unwrap();
        assert_eq!(h.to_string(), "(a & b) => c");
    }

    #[test]
    fn conj_flattens() {
        let f = Formula::parse("(a & b) & c").unwrap();
        assert_eq!(f, Formula::Conj(vec![Formula::atom("a"), Formula::atom("b"), Formula::atom("c")]));
        assert_eq!(Formula::conj([]), Formula::Top);
    }

    #[test]
    fn canonical_is_ac() {
        let f = Formula::parse("b & (T & a)").unwrap().canonical();
        let g = Formula::parse("a & b").unwrap().canonical();
        assert_eq!(f, g);
    }

    #[test]
    fn sequent_parse() {
        let s = Sequent::parse("a, a=>b |- b").unwrap();
        assert_eq!(s.hypotheses.len(), 2);
        assert_eq!(s.goal, Formula::atom("b"));
        let t = Sequent::parse("|- a => a").unwrap();
        assert!(t.hypotheses.is_empty());
        assert!(Sequent::parse("a b").is_err());
        assert!(matches!(Sequent::parse("a |- (b"), Err(Error::Syntax { .. })));
    }
}
