//! Normal forms in free products of cyclic groups.
//!
//! A word is a sequence of syllables `(generator, exponent)` with adjacent
//! syllables on distinct generators. Exponents of infinite-order generators
//! are nonzero integers; for a generator of order `m` they lie in `1..m`.

use std::fmt;

use crate::error::{Error, Result};
use crate::models::spec::GeneratorSymbol;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    orders: Vec<u32>,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Word(Vec<(u8, i32)>);

impl Alphabet {
    pub fn new(symbols: &[GeneratorSymbol]) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Spec("at least one generator is required".into()));
        }
        if symbols.len() > 64 {
            return Err(Error::Unsupported("at most 64 generators".into()));
        }
        let mut names: Vec<String> = Vec::new();
        for s in symbols {
            if names.contains(&s.name) {
                return Err(Error::Spec(format!("duplicate generator `{}`", s.name)));
            }
            names.push(s.name.clone());
        }
        Ok(Alphabet { names, orders: symbols.iter().map(|s| s.order).collect() })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn order(&self, gen: u8) -> u32 {
        self.orders[gen as usize]
    }

    pub fn name(&self, gen: u8) -> &str {
        &self.names[gen as usize]
    }

    pub fn index(&self, name: &str) -> Option<u8> {
        self.names.iter().position(|n| n == name).map(|i| i as u8)
    }

    fn normalize_exp(&self, gen: u8, e: i64) -> i32 {
        match self.order(gen) {
            0 => e as i32,
            m => e.rem_euclid(m as i64) as i32,
        }
    }

    /// Word length of a single syllable.
    pub fn syllable_length(&self, gen: u8, e: i32) -> u32 {
        match self.order(gen) {
            0 => e.unsigned_abs(),
            m => (e as u32).min(m - e as u32),
        }
    }

    /// Letters `(gen, ±1)` in the symmetric generating set.
    pub fn letters(&self) -> Vec<(u8, i32)> {
        let mut out = Vec::new();
        for g in 0..self.len() as u8 {
            out.push((g, 1));
            if self.order(g) != 2 {
                out.push((g, -1));
            }
        }
        out
    }

    pub fn identity(&self) -> Word {
        Word(Vec::new())
    }

    pub fn letter(&self, gen: u8, sign: i32) -> Word {
        let mut w = Word::default();
        self.push(&mut w, gen, sign as i64);
        w
    }

    /// Right-multiply in place by `gen^e`.
    pub fn push(&self, w: &mut Word, gen: u8, e: i64) {
        let e = self.normalize_exp(gen, e) as i64;
        if e == 0 {
            return;
        }
        if let Some(last) = w.0.last_mut() {
            if last.0 == gen {
                let merged = self.normalize_exp(gen, last.1 as i64 + e);
                if merged == 0 {
                    w.0.pop();
                } else {
                    last.1 = merged;
                }
                return;
            }
        }
        w.0.push((gen, e as i32));
    }

    pub fn mul(&self, x: &Word, y: &Word) -> Word {
        let mut out = x.clone();
        for &(g, e) in &y.0 {
            self.push(&mut out, g, e as i64);
        }
        out
    }

    pub fn inverse(&self, w: &Word) -> Word {
        let mut out = Word::default();
        for &(g, e) in w.0.iter().rev() {
            self.push(&mut out, g, -(e as i64));
        }
        out
    }

    pub fn power(&self, gen: u8, e: i64) -> Word {
        let mut w = Word::default();
        self.push(&mut w, gen, e);
        w
    }

    /// Word length in the symmetric generating set.
    pub fn length(&self, w: &Word) -> u32 {
        w.0.iter().map(|&(g, e)| self.syllable_length(g, e)).sum()
    }

    /// A geodesic spelling of `w` as single letters.
    pub fn spell(&self, w: &Word) -> Vec<(u8, i32)> {
        let mut out = Vec::new();
        for &(g, e) in &w.0 {
            let (count, sign) = match self.order(g) {
                0 => (e.unsigned_abs(), e.signum()),
                m => {
                    let e = e as u32;
                    if e <= m - e {
                        (e, 1)
                    } else {
                        (m - e, -1)
                    }
                }
            };
            out.extend(std::iter::repeat((g, sign)).take(count as usize));
        }
        out
    }

    /// Strips a trailing syllable on `gen`: the shortest representative of `w ⟨gen⟩`.
    pub fn coset_rep(&self, w: &Word, gen: u8) -> (Word, i32) {
        match w.0.last() {
            Some(&(g, e)) if g == gen => (Word(w.0[..w.0.len() - 1].to_vec()), e),
            _ => (w.clone(), 0),
        }
    }

    pub fn parse(&self, text: &str) -> Result<Word> {
        let mut w = Word::default();
        let text = text.trim();
        if text.is_empty() || text == "e" {
            return Ok(w);
        }
        for token in text.split_whitespace() {
            let (name, e) = match token.split_once('^') {
                None => (token, 1i64),
                Some((name, e)) => {
                    (name, e.parse().map_err(|_| Error::Spec(format!("bad exponent in `{token}`")))?)
                }
            };
            let gen = self.index(name).ok_or_else(|| Error::Spec(format!("unknown generator `{name}`")))?;
            self.push(&mut w, gen, e);
        }
        Ok(w)
    }

    pub fn display<'a>(&'a self, w: &'a Word) -> WordDisplay<'a> {
        WordDisplay { alphabet: self, word: w }
    }
}

impl Word {
    pub fn syllables(&self) -> &[(u8, i32)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }
}

pub struct WordDisplay<'a> {
    alphabet: &'a Alphabet,
    word: &'a Word,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.0.is_empty() {
            return f.write_str("e");
        }
        for (i, &(g, e)) in self.word.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(self.alphabet.name(g))?;
            if e != 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}
