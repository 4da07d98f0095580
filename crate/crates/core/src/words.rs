//! Words over a finite generating alphabet.
//!
//! A generator is a single lowercase ASCII letter; its inverse is written as
//! the corresponding uppercase letter, so `abA` parses as a * b * a^-1.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter {
    pub gen: u16,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize, inv: bool) -> Self {
        Letter { gen: gen as u16, inv }
    }

    pub fn inverse(self) -> Self {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(gen: usize, inv: bool) -> Self {
        Word(vec![Letter::new(gen, inv)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    /// Free reduction: cancel adjacent inverse pairs until none remain.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if let Some(&top) = out.last() {
                if top == l.inverse() {
                    out.pop();
                    continue;
                }
            }
            out.push(l);
        }
        Word(out)
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    /// Cyclic reduction of an already freely reduced word.
    pub fn cyclic_reduce(&self) -> Word {
        let mut w = self.0.clone();
        while w.len() >= 2 && w[0] == w[w.len() - 1].inverse() {
            w.remove(0);
            w.pop();
        }
        Word(w)
    }

    /// Net exponent vector, one slot per generator.
    pub fn exponents(&self, n_gens: usize) -> Vec<i64> {
        let mut e = vec![0i64; n_gens];
        for l in &self.0 {
            e[l.gen as usize] += if l.inv { -1 } else { 1 };
        }
        e
    }

    pub fn parse(s: &str, symbols: &[char]) -> Result<Word> {
        let mut letters = Vec::new();
        for ch in s.chars() {
            if ch.is_whitespace() {
                continue;
            }
            let lower = ch.to_ascii_lowercase();
            let inv = ch.is_ascii_uppercase();
            match symbols.iter().position(|&g| g == lower) {
                Some(i) => letters.push(Letter::new(i, inv)),
                None => {
                    return Err(Error::Input(format!(
                        "unknown generator letter {ch:?} in word {s:?}"
                    )))
                }
            }
        }
        Ok(Word(letters))
    }

    pub fn display(&self, symbols: &[char]) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        self.0
            .iter()
            .map(|l| {
                let c = symbols[l.gen as usize];
                if l.inv {
                    c.to_ascii_uppercase()
                } else {
                    c
                }
            })
            .collect()
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let syms: Vec<char> = (0..26).map(|i| (b'a' + i) as char).collect();
        write!(f, "Word({})", self.display(&syms))
    }
}

/// Shortlex comparison with letter order (gen, plain-before-inverse).
pub fn shortlex_lt(a: &Word, b: &Word) -> bool {
    (a.len(), &a.0) < (b.len(), &b.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms() -> Vec<char> {
        vec!['a', 'b']
    }

    #[test]
    fn parse_and_display() {
        let w = Word::parse("abA", &syms()).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.display(&syms()), "abA");
        assert_eq!(Word::empty().display(&syms()), "1");
    }

    #[test]
    fn reduction_cancels_pairs() {
        let w = Word::parse("abBA", &syms()).unwrap();
        assert!(w.free_reduce().is_empty());
        let w = Word::parse("aabBA", &syms()).unwrap();
        assert_eq!(w.free_reduce().display(&syms()), "a");
    }

    #[test]
    fn inverse_reverses_and_flips() {
        let w = Word::parse("abA", &syms()).unwrap();
        assert_eq!(w.inverse().display(&syms()), "aBA");
        assert!(w.concat(&w.inverse()).free_reduce().is_empty());
    }

    #[test]
    fn cyclic_reduction() {
        let w = Word::parse("Aba", &syms()).unwrap();
        assert_eq!(w.cyclic_reduce().display(&syms()), "b");
    }

    #[test]
    fn shortlex_order() {
        let a = Word::parse("a", &syms()).unwrap();
        let ainv = Word::parse("A", &syms()).unwrap();
        let b = Word::parse("b", &syms()).unwrap();
        let aa = Word::parse("aa", &syms()).unwrap();
        assert!(shortlex_lt(&a, &ainv));
        assert!(shortlex_lt(&ainv, &b));
        assert!(shortlex_lt(&b, &aa));
    }
}
