//! Sparse rational 1-chains over graph edges.
//!
//! Coefficients are stored once per unoriented edge, on the orientation
//! low id -> high id; the reverse orientation carries the negated value.
//! Zero coefficients are never stored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{One, Zero};

use crate::rat::{rat_abs, rat_display, Rat};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain1 {
    coeffs: BTreeMap<(u32, u32), Rat>,
}

impl Chain1 {
    pub fn new() -> Self {
        Chain1::default()
    }

    /// Unit flow along consecutive path vertices.
    pub fn from_path(path: &[u32]) -> Self {
        let mut c = Chain1::new();
        for w in path.windows(2) {
            c.add_edge(w[0], w[1], Rat::one());
        }
        c
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Adds `c` to the coefficient of the oriented edge u -> v.
    pub fn add_edge(&mut self, u: u32, v: u32, c: Rat) {
        assert_ne!(u, v, "chain edge endpoints must differ");
        if c.is_zero() {
            return;
        }
        let (key, signed) = if u < v { ((u, v), c) } else { ((v, u), -c) };
        let entry = self.coeffs.entry(key).or_insert_with(Rat::zero);
        *entry += signed;
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    /// Signed coefficient of the oriented edge u -> v.
    pub fn coefficient(&self, u: u32, v: u32) -> Rat {
        let (key, flip) = if u < v { ((u, v), false) } else { ((v, u), true) };
        match self.coeffs.get(&key) {
            None => Rat::zero(),
            Some(c) if flip => -c.clone(),
            Some(c) => c.clone(),
        }
    }

    /// Iterates (low, high) edges with their stored coefficients.
    pub fn support(&self) -> impl Iterator<Item = (&(u32, u32), &Rat)> {
        self.coeffs.iter()
    }

    pub fn add(&mut self, other: &Chain1) {
        for (&(u, v), c) in &other.coeffs {
            self.add_edge(u, v, c.clone());
        }
    }

    pub fn neg(&self) -> Chain1 {
        Chain1 { coeffs: self.coeffs.iter().map(|(k, c)| (*k, -c.clone())).collect() }
    }

    pub fn scale(&self, s: &Rat) -> Chain1 {
        if s.is_zero() {
            return Chain1::new();
        }
        Chain1 { coeffs: self.coeffs.iter().map(|(k, c)| (*k, c.clone() * s)).collect() }
    }

    pub fn l1(&self) -> Rat {
        self.coeffs.values().map(rat_abs).fold(Rat::zero(), |a, b| a + b)
    }

    pub fn linf(&self) -> Rat {
        self.coeffs.values().map(rat_abs).fold(Rat::zero(), |a, b| a.max(b))
    }

    pub fn boundary(&self) -> BTreeMap<u32, Rat> {
        let mut b: BTreeMap<u32, Rat> = BTreeMap::new();
        for (&(u, v), c) in &self.coeffs {
            *b.entry(v).or_insert_with(Rat::zero) += c;
            *b.entry(u).or_insert_with(Rat::zero) -= c;
        }
        b.retain(|_, c| !c.is_zero());
        b
    }

    pub fn restrict<F: Fn(u32, u32) -> bool>(&self, keep: F) -> Chain1 {
        Chain1 {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&(u, v), _)| keep(u, v))
                .map(|(k, c)| (*k, c.clone()))
                .collect(),
        }
    }

    /// Pushes the chain through a vertex map; None if any support vertex
    /// has no image.
    pub fn translate<F: Fn(u32) -> Option<u32>>(&self, map: F) -> Option<Chain1> {
        let mut out = Chain1::new();
        for (&(u, v), c) in &self.coeffs {
            out.add_edge(map(u)?, map(v)?, c.clone());
        }
        Some(out)
    }
}

pub fn chain_csv(c: &Chain1) -> String {
    let mut s = String::from("edge,num,den\n");
    for (&(u, v), coeff) in c.support() {
        let _ = writeln!(
            s,
            "{u}-{v},{},{}",
            coeff.numer(),
            coeff.denom()
        );
    }
    s
}

pub fn boundary_display(b: &BTreeMap<u32, Rat>) -> String {
    let parts: Vec<String> =
        b.iter().map(|(v, c)| format!("{v}:{}", rat_display(c))).collect();
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn single_edge_boundary() {
        let mut c = Chain1::new();
        c.add_edge(3, 7, rat_int(1));
        let b = c.boundary();
        assert_eq!(b.get(&7), Some(&rat_int(1)));
        assert_eq!(b.get(&3), Some(&rat_int(-1)));
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn zero_chain_boundary() {
        assert!(Chain1::new().boundary().is_empty());
    }

    #[test]
    fn orientation_cancels() {
        let mut c = Chain1::new();
        c.add_edge(1, 2, rat(1, 2));
        c.add_edge(2, 1, rat(1, 2));
        assert!(c.is_zero());
    }

    #[test]
    fn path_chain_telescopes() {
        let c = Chain1::from_path(&[4, 2, 9, 5]);
        let b = c.boundary();
        assert_eq!(b.get(&5), Some(&rat_int(1)));
        assert_eq!(b.get(&4), Some(&rat_int(-1)));
        assert_eq!(b.len(), 2);
        assert_eq!(c.l1(), rat_int(3));
        assert_eq!(c.linf(), rat_int(1));
    }

    #[test]
    fn coefficient_signs() {
        let mut c = Chain1::new();
        c.add_edge(5, 2, rat(3, 4));
        assert_eq!(c.coefficient(5, 2), rat(3, 4));
        assert_eq!(c.coefficient(2, 5), rat(-3, 4));
        assert_eq!(c.coefficient(0, 1), rat_int(0));
    }

    #[test]
    fn norms_and_scale() {
        let mut c = Chain1::new();
        c.add_edge(0, 1, rat(1, 2));
        c.add_edge(1, 2, rat(-1, 3));
        assert_eq!(c.l1(), rat(5, 6));
        assert_eq!(c.linf(), rat(1, 2));
        let d = c.scale(&rat_int(-6));
        assert_eq!(d.coefficient(0, 1), rat_int(-3));
        assert_eq!(d.coefficient(1, 2), rat_int(2));
        assert!(c.scale(&rat_int(0)).is_zero());
    }

    #[test]
    fn add_and_neg_are_inverse() {
        let mut c = Chain1::new();
        c.add_edge(0, 1, rat(2, 7));
        c.add_edge(3, 1, rat(5, 7));
        let mut sum = c.clone();
        sum.add(&c.neg());
        assert!(sum.is_zero());
    }

    #[test]
    fn restrict_filters_support() {
        let c = Chain1::from_path(&[0, 1, 2, 3]);
        let r = c.restrict(|u, _| u >= 1);
        assert_eq!(r.len(), 2);
        assert_eq!(r.coefficient(0, 1), rat_int(0));
    }

    #[test]
    fn translate_relabels_support() {
        let c = Chain1::from_path(&[0, 1, 2]);
        let t = c.translate(|v| Some(v + 10)).unwrap();
        assert_eq!(t.coefficient(10, 11), rat_int(1));
        assert!(c.translate(|v| (v != 1).then_some(v)).is_none());
    }

    #[test]
    fn csv_lists_canonical_edges() {
        let mut c = Chain1::new();
        c.add_edge(2, 0, rat(1, 2));
        let csv = chain_csv(&c);
        assert_eq!(csv, "edge,num,den\n0-2,-1,2\n");
    }
}
