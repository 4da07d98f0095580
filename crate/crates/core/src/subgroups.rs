//! Finite-index subgroups via low-index coset table search.
//!
//! Tables are canonical: cosets are numbered by first appearance in the
//! row-major scan, so each subgroup of the target index is produced exactly
//! once, up to equality rather than conjugacy.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::group::GroupPair;
use crate::words::{shortlex_lt, Letter, Word};

#[derive(Clone, Debug)]
pub struct SubgroupRecord {
    pub index: u32,
    /// table[coset][2*gen + inv] = image coset.
    pub table: Vec<Vec<u32>>,
    /// Shortlex-least word carrying the identity coset to each coset.
    pub rep_words: Vec<Word>,
}

impl SubgroupRecord {
    pub fn act_letter(&self, c: u32, l: Letter) -> u32 {
        self.table[c as usize][l.gen as usize * 2 + usize::from(l.inv)]
    }

    pub fn act_word(&self, c: u32, w: &Word) -> u32 {
        w.0.iter().fold(c, |c, &l| self.act_letter(c, l))
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.act_word(0, w) == 0
    }

    /// Rank of a finite-index subgroup of a free group, read off the
    /// Schreier graph.
    pub fn free_rank(&self, n_gens: usize) -> u64 {
        let k = self.index as u64;
        k * (n_gens as u64 - 1) + 1
    }
}

struct Search<'a> {
    n_letters: usize,
    max_cosets: usize,
    relators: &'a [Word],
    table: Vec<Vec<Option<u32>>>,
    nodes: u64,
    budget: u64,
    found: Vec<Vec<Vec<u32>>>,
}

impl<'a> Search<'a> {
    fn inverse_letter(l: usize) -> usize {
        l ^ 1
    }

    fn set(&mut self, c: u32, l: usize, d: u32) -> bool {
        match self.table[c as usize][l] {
            Some(existing) => return existing == d,
            None => self.table[c as usize][l] = Some(d),
        }
        match self.table[d as usize][Self::inverse_letter(l)] {
            Some(existing) if existing != c => false,
            _ => {
                self.table[d as usize][Self::inverse_letter(l)] = Some(c);
                true
            }
        }
    }

    /// Traces every relator at every coset, filling forced entries, until a
    /// fixpoint or a contradiction.
    fn deduce(&mut self) -> bool {
        loop {
            let mut progressed = false;
            for c in 0..self.table.len() as u32 {
                for r in self.relators {
                    let m = r.len();
                    let mut fwd = vec![None; m + 1];
                    fwd[0] = Some(c);
                    let mut i = 0;
                    while i < m {
                        let cur = fwd[i].unwrap();
                        let l = letter_index(r.0[i]);
                        match self.table[cur as usize][l] {
                            Some(next) => {
                                fwd[i + 1] = Some(next);
                                i += 1;
                            }
                            None => break,
                        }
                    }
                    let mut bwd = vec![None; m + 1];
                    bwd[m] = Some(c);
                    let mut j = m;
                    while j > 0 {
                        let cur = bwd[j].unwrap();
                        let l = Self::inverse_letter(letter_index(r.0[j - 1]));
                        match self.table[cur as usize][l] {
                            Some(prev) => {
                                bwd[j - 1] = Some(prev);
                                j -= 1;
                            }
                            None => break,
                        }
                    }
                    if j <= i {
                        if fwd[j] != bwd[j] {
                            return false;
                        }
                    } else if j == i + 1 {
                        let l = letter_index(r.0[i]);
                        if !self.set(fwd[i].unwrap(), l, bwd[j].unwrap()) {
                            return false;
                        }
                        progressed = true;
                    }
                }
            }
            if !progressed {
                return true;
            }
        }
    }

    fn first_hole(&self) -> Option<(u32, usize)> {
        for c in 0..self.table.len() {
            for l in 0..self.n_letters {
                if self.table[c][l].is_none() {
                    return Some((c as u32, l));
                }
            }
        }
        None
    }

    fn run(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget(String::new()));
        }
        let (c, l) = match self.first_hole() {
            None => {
                if self.table.len() == self.max_cosets && self.relators_close() {
                    let done: Vec<Vec<u32>> = self
                        .table
                        .iter()
                        .map(|row| row.iter().map(|e| e.unwrap()).collect())
                        .collect();
                    self.found.push(done);
                }
                return Ok(());
            }
            Some(hole) => hole,
        };
        let mut candidates: Vec<u32> = (0..self.table.len() as u32).collect();
        if self.table.len() < self.max_cosets {
            candidates.push(self.table.len() as u32);
        }
        for d in candidates {
            let snapshot = self.table.clone();
            if d as usize == self.table.len() {
                self.table.push(vec![None; self.n_letters]);
            }
            if self.set(c, l, d) && self.deduce() {
                self.run()?;
            }
            self.table = snapshot;
        }
        Ok(())
    }

    fn relators_close(&self) -> bool {
        for c in 0..self.table.len() as u32 {
            for r in self.relators {
                let mut cur = c;
                for &letter in &r.0 {
                    match self.table[cur as usize][letter_index(letter)] {
                        Some(next) => cur = next,
                        None => return false,
                    }
                }
                if cur != c {
                    return false;
                }
            }
        }
        true
    }
}

fn letter_index(l: Letter) -> usize {
    l.gen as usize * 2 + usize::from(l.inv)
}

/// All subgroups of index <= max_index, each exactly once. The search runs
/// one exhaustive pass per index; blowing the node budget reports which
/// indices finished.
pub fn enumerate_subgroups(
    pair: &GroupPair,
    max_index: u32,
    budget: u64,
) -> Result<Vec<SubgroupRecord>> {
    if max_index < 1 {
        return Err(Error::Input("max index must be at least 1".into()));
    }
    let n_gens = pair.presentation.n_gens();
    let mut out = Vec::new();
    let mut spent = 0u64;
    for n in 1..=max_index {
        let mut search = Search {
            n_letters: 2 * n_gens,
            max_cosets: n as usize,
            relators: &pair.presentation.relators,
            table: vec![vec![None; 2 * n_gens]],
            nodes: 0,
            budget: budget.saturating_sub(spent),
            found: Vec::new(),
        };
        let res = search.run();
        spent += search.nodes;
        if res.is_err() {
            return Err(Error::Budget(format!(
                "subgroup search exceeded {budget} nodes at index {n}; completed indices 1..={}",
                n - 1
            )));
        }
        for table in search.found {
            let rep_words = coset_rep_words(&table, n_gens);
            out.push(SubgroupRecord { index: n, table, rep_words });
        }
    }
    Ok(out)
}

/// Shortlex-least representative per coset, by BFS with letters in order
/// a < a^-1 < b < b^-1.
fn coset_rep_words(table: &[Vec<u32>], n_gens: usize) -> Vec<Word> {
    let mut reps: Vec<Option<Word>> = vec![None; table.len()];
    reps[0] = Some(Word::empty());
    let mut queue = VecDeque::from([0u32]);
    while let Some(c) = queue.pop_front() {
        let base = reps[c as usize].clone().unwrap();
        for l in 0..2 * n_gens {
            let d = table[c as usize][l];
            if reps[d as usize].is_none() {
                let mut w = base.clone();
                w.push(Letter::new(l / 2, l % 2 == 1));
                reps[d as usize] = Some(w.free_reduce());
                queue.push_back(d);
            }
        }
    }
    reps.into_iter().map(|r| r.expect("coset table is transitive")).collect()
}

#[derive(Clone, Debug)]
pub struct InducedPeripheral {
    pub peripheral: usize,
    /// Shortlex-least double coset representative.
    pub rep: Word,
    pub orbit_size: u32,
    /// Generators of H ∩ rep·P·rep^-1 in the ambient alphabet.
    pub gens: Vec<Word>,
}

/// Decomposes cosets into orbits of each peripheral subgroup and reads off
/// stabilizer generators, one record per double coset.
pub fn induced_peripherals(
    rec: &SubgroupRecord,
    pair: &GroupPair,
    ball_radius: u32,
) -> Result<Vec<InducedPeripheral>> {
    let mut out = Vec::new();
    for (pi, pgens) in pair.peripherals.iter().enumerate() {
        let mut seen = vec![false; rec.index as usize];
        let mut orbits: Vec<Vec<u32>> = Vec::new();
        for start in 0..rec.index {
            if seen[start as usize] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start as usize] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                for w in pgens {
                    for step in [w.clone(), w.inverse()] {
                        let d = rec.act_word(c, &step);
                        if !seen[d as usize] {
                            seen[d as usize] = true;
                            orbit.push(d);
                            queue.push_back(d);
                        }
                    }
                }
            }
            orbits.push(orbit);
        }

        let total: u32 = orbits.iter().map(|o| o.len() as u32).sum();
        debug_assert_eq!(total, rec.index);

        for orbit in orbits {
            let base = *orbit
                .iter()
                .min_by(|&&a, &&b| {
                    let (wa, wb) = (&rec.rep_words[a as usize], &rec.rep_words[b as usize]);
                    if shortlex_lt(wa, wb) {
                        std::cmp::Ordering::Less
                    } else if shortlex_lt(wb, wa) {
                        std::cmp::Ordering::Greater
                    } else {
                        std::cmp::Ordering::Equal
                    }
                })
                .unwrap();
            let rep = rec.rep_words[base as usize].clone();
            if rep.len() as u32 > ball_radius {
                return Err(Error::Input(format!(
                    "double coset representative {:?} lies outside the radius-{ball_radius} ball",
                    rep
                )));
            }

            // Schreier generators of the stabilizer of `base` inside the
            // peripheral subgroup, via a spanning tree of the orbit.
            let mut tree: Vec<Option<Word>> = vec![None; rec.index as usize];
            tree[base as usize] = Some(Word::empty());
            let mut queue = VecDeque::from([base]);
            let mut order = vec![base];
            while let Some(c) = queue.pop_front() {
                let t = tree[c as usize].clone().unwrap();
                for w in pgens {
                    for step in [w.clone(), w.inverse()] {
                        let d = rec.act_word(c, &step);
                        if tree[d as usize].is_none() {
                            tree[d as usize] = Some(t.concat(&step).free_reduce());
                            queue.push_back(d);
                            order.push(d);
                        }
                    }
                }
            }

            let mut gens: Vec<Word> = Vec::new();
            for &c in &order {
                let t = tree[c as usize].clone().unwrap();
                for w in pgens {
                    let d = rec.act_word(c, w);
                    let td = tree[d as usize].clone().unwrap();
                    let s = t.concat(w).concat(&td.inverse()).free_reduce();
                    if s.is_empty() {
                        continue;
                    }
                    let conj = rep.concat(&s).concat(&rep.inverse()).free_reduce();
                    if !gens.contains(&conj) && !gens.contains(&conj.inverse()) {
                        gens.push(conj);
                    }
                }
            }
            out.push(InducedPeripheral {
                peripheral: pi,
                rep,
                orbit_size: orbit.len() as u32,
                gens,
            });
        }
    }
    Ok(out)
}

pub fn coset_table_csv(rec: &SubgroupRecord, pair: &GroupPair) -> String {
    let mut s = String::from("coset");
    for sym in &pair.presentation.symbols {
        let _ = write!(s, ",{sym}");
    }
    s.push('\n');
    for c in 0..rec.index as usize {
        let _ = write!(s, "{c}");
        for g in 0..pair.presentation.n_gens() {
            let _ = write!(s, ",{}", rec.table[c][2 * g]);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_pair_json;

    fn f2() -> GroupPair {
        parse_pair_json(r#"{"generators":["a","b"],"peripherals":[["a"]]}"#).unwrap()
    }

    const BUDGET: u64 = 1_000_000;

    /// Oracle: pointed transitive tuples of permutations with canonical
    /// BFS numbering, counted independently of the table search.
    fn count_pointed_actions(n_gens: usize, n: usize) -> usize {
        fn perms(n: usize) -> Vec<Vec<u32>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for slot in 0..n {
                    let mut q: Vec<u32> = p.clone();
                    q.insert(slot, (n - 1) as u32);
                    out.push(q);
                }
            }
            out
        }
        let all = perms(n);
        let mut choice = vec![0usize; n_gens];
        let mut count = 0;
        loop {
            let tuple: Vec<&Vec<u32>> = choice.iter().map(|&i| &all[i]).collect();
            if is_canonical_pointed(&tuple, n) {
                count += 1;
            }
            let mut i = 0;
            loop {
                if i == n_gens {
                    return count;
                }
                choice[i] += 1;
                if choice[i] < all.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    /// The action is transitive and BFS from 0 (letters a, a^-1, b, b^-1)
    /// discovers points in increasing order.
    fn is_canonical_pointed(tuple: &[&Vec<u32>], n: usize) -> bool {
        let mut inv: Vec<Vec<u32>> = Vec::new();
        for p in tuple {
            let mut q = vec![0u32; n];
            for (i, &v) in p.iter().enumerate() {
                q[v as usize] = i as u32;
            }
            inv.push(q);
        }
        let mut next_expected = 1u32;
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0u32]);
        while let Some(c) = queue.pop_front() {
            for g in 0..tuple.len() {
                for image in [tuple[g][c as usize], inv[g][c as usize]] {
                    if !seen[image as usize] {
                        if image != next_expected {
                            return false;
                        }
                        next_expected += 1;
                        seen[image as usize] = true;
                        queue.push_back(image);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    #[test]
    fn whole_group_only_at_index_one() {
        let recs = enumerate_subgroups(&f2(), 1, BUDGET).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].table, vec![vec![0, 0, 0, 0]]);
    }

    #[test]
    fn free_group_counts_match_pointed_action_oracle() {
        let pair = f2();
        let recs = enumerate_subgroups(&pair, 4, BUDGET).unwrap();
        for n in 1..=4usize {
            let got = recs.iter().filter(|r| r.index == n as u32).count();
            assert_eq!(got, count_pointed_actions(2, n), "index {n}");
        }
        let by_index: Vec<usize> =
            (1..=4).map(|n| recs.iter().filter(|r| r.index == n).count()).collect();
        assert_eq!(by_index, vec![1, 3, 13, 71]);
    }

    #[test]
    fn tables_are_permutation_actions() {
        let recs = enumerate_subgroups(&f2(), 3, BUDGET).unwrap();
        for rec in &recs {
            for l in 0..4 {
                let mut hit = vec![false; rec.index as usize];
                for c in 0..rec.index as usize {
                    let d = rec.table[c][l] as usize;
                    assert!(!hit[d]);
                    hit[d] = true;
                }
            }
        }
    }

    #[test]
    fn line_subgroups() {
        let z = parse_pair_json(r#"{"generators":["a"],"peripherals":[["a"]]}"#).unwrap();
        let recs = enumerate_subgroups(&z, 4, BUDGET).unwrap();
        assert_eq!(recs.len(), 4);
        for (n, rec) in recs.iter().enumerate() {
            assert_eq!(rec.index as usize, n + 1);
            let a_pow = Word(vec![Letter::new(0, false); n + 1]);
            assert!(rec.contains(&a_pow));
        }
    }

    #[test]
    fn plane_subgroups_with_relator_pruning() {
        let z2 = parse_pair_json(
            r#"{"generators":["a","b"],"relators":["abAB"],"peripherals":[["a"]]}"#,
        )
        .unwrap();
        let recs = enumerate_subgroups(&z2, 3, BUDGET).unwrap();
        let by_index: Vec<usize> =
            (1..=3).map(|n| recs.iter().filter(|r| r.index == n).count()).collect();
        // Sublattice counts of the integer plane: sum of divisors of n.
        assert_eq!(by_index, vec![1, 3, 4]);
    }

    #[test]
    fn rank_formula_up_to_index_five() {
        let recs = enumerate_subgroups(&f2(), 5, BUDGET).unwrap();
        assert_eq!(recs.iter().filter(|r| r.index == 5).count(), 461);
        for rec in &recs {
            assert_eq!(rec.free_rank(2) - 1, rec.index as u64 * (2 - 1));
        }
    }

    #[test]
    fn budget_error_reports_completed_indices() {
        match enumerate_subgroups(&f2(), 4, 40) {
            Err(Error::Budget(msg)) => assert!(msg.contains("completed indices")),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn rep_words_are_shortlex_least() {
        let recs = enumerate_subgroups(&f2(), 3, BUDGET).unwrap();
        for rec in &recs {
            for (c, rep) in rec.rep_words.iter().enumerate() {
                assert_eq!(rec.act_word(0, rep), c as u32);
                assert!(rep.len() < rec.index as usize);
            }
        }
    }

    fn kernel_record(pair: &GroupPair, a_bit: u32, b_bit: u32) -> SubgroupRecord {
        let recs = enumerate_subgroups(pair, 2, BUDGET).unwrap();
        recs.into_iter()
            .find(|r| {
                r.index == 2
                    && r.table[0][0] == a_bit
                    && r.table[0][2] == b_bit
            })
            .unwrap()
    }

    #[test]
    fn induced_peripherals_split_double_cosets() {
        let pair = f2();
        let rec = kernel_record(&pair, 0, 1);
        let ind = induced_peripherals(&rec, &pair, 4).unwrap();
        assert_eq!(ind.len(), 2);
        let syms = &pair.presentation.symbols;
        assert_eq!(ind[0].rep.display(syms), "1");
        assert_eq!(ind[0].gens.len(), 1);
        assert_eq!(ind[0].gens[0].display(syms), "a");
        assert_eq!(ind[1].rep.display(syms), "b");
        assert_eq!(ind[1].gens.len(), 1);
        assert_eq!(ind[1].gens[0].display(syms), "baB");
    }

    #[test]
    fn induced_peripherals_merged_orbit() {
        let pair = f2();
        let rec = kernel_record(&pair, 1, 1);
        let ind = induced_peripherals(&rec, &pair, 4).unwrap();
        assert_eq!(ind.len(), 1);
        let syms = &pair.presentation.symbols;
        assert_eq!(ind[0].rep.display(syms), "1");
        assert_eq!(ind[0].orbit_size, 2);
        assert_eq!(ind[0].gens.len(), 1);
        assert_eq!(ind[0].gens[0].display(syms), "aa");
    }

    #[test]
    fn orbit_sizes_partition_index() {
        let pair = f2();
        let recs = enumerate_subgroups(&pair, 3, BUDGET).unwrap();
        for rec in &recs {
            let ind = induced_peripherals(&rec, &pair, 4).unwrap();
            let total: u32 = ind.iter().map(|r| r.orbit_size).sum();
            assert_eq!(total, rec.index);
        }
    }

    #[test]
    fn whole_group_induces_original_peripherals() {
        let pair = f2();
        let recs = enumerate_subgroups(&pair, 1, BUDGET).unwrap();
        let ind = induced_peripherals(&recs[0], &pair, 4).unwrap();
        assert_eq!(ind.len(), 1);
        assert!(ind[0].rep.is_empty());
        assert_eq!(ind[0].gens, pair.peripherals[0]);
    }

    #[test]
    fn csv_has_one_row_per_coset() {
        let pair = f2();
        let recs = enumerate_subgroups(&pair, 2, BUDGET).unwrap();
        let rec = recs.iter().find(|r| r.index == 2).unwrap();
        let csv = coset_table_csv(rec, &pair);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("coset,a,b\n"));
    }
}
