//! Finitely presented group pairs and their Cayley balls.
//!
//! A pair couples a presentation with a list of peripheral generating sets.
//! Exact normal forms are available for free and free-abelian presentations
//! out of the box; any other presentation must ship its own rewriting system,
//! which is checked for termination and local confluence before use.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::words::{shortlex_lt, Letter, Word};

#[derive(Clone, Debug)]
pub struct Presentation {
    pub symbols: Vec<char>,
    pub relators: Vec<Word>,
    pub rewrites: Vec<(Word, Word)>,
}

impl Presentation {
    pub fn new(
        symbols: Vec<char>,
        relators: Vec<Word>,
        rewrites: Vec<(Word, Word)>,
    ) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Input("presentation needs at least one generator".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if !s.is_ascii_lowercase() {
                return Err(Error::Input(format!(
                    "generator symbol {s:?} is not a lowercase ascii letter"
                )));
            }
            if symbols[..i].contains(s) {
                return Err(Error::Input(format!("duplicate generator symbol {s:?}")));
            }
        }
        for r in &relators {
            if r.is_empty() {
                return Err(Error::Input("empty relator".into()));
            }
            if !r.is_freely_reduced() {
                return Err(Error::Input(format!(
                    "relator {:?} is not freely reduced",
                    r
                )));
            }
        }
        for (lhs, _) in &rewrites {
            if lhs.is_empty() {
                return Err(Error::Input("rewrite rule with empty left side".into()));
            }
        }
        Ok(Presentation { symbols, relators, rewrites })
    }

    pub fn n_gens(&self) -> usize {
        self.symbols.len()
    }

    pub fn parse_word(&self, s: &str) -> Result<Word> {
        Word::parse(s, &self.symbols)
    }

    pub fn word_string(&self, w: &Word) -> String {
        w.display(&self.symbols)
    }

    /// Picks the normal-form engine this presentation supports, rejecting
    /// anything whose word problem we cannot decide exactly.
    pub fn normal_form_engine(&self) -> Result<NormalForm> {
        if !self.rewrites.is_empty() {
            let engine = Rewriting::new(&self.rewrites, self.n_gens())?;
            for r in &self.relators {
                let nf = engine.reduce(r);
                if !nf.is_empty() {
                    return Err(Error::NotDeskDecidable(format!(
                        "relator {} does not rewrite to the identity (got {})",
                        self.word_string(r),
                        self.word_string(&nf)
                    )));
                }
            }
            return Ok(NormalForm::Rewriting(engine));
        }
        if self.relators.is_empty() {
            return Ok(NormalForm::Free);
        }
        if self.is_free_abelian() {
            return Ok(NormalForm::FreeAbelian { n_gens: self.n_gens() });
        }
        Err(Error::NotDeskDecidable(
            "relators are neither absent nor a full commutator family; supply rewrite rules"
                .into(),
        ))
    }

    /// True when the relators are exactly the commutators of all generator
    /// pairs, up to rotation and inversion.
    fn is_free_abelian(&self) -> bool {
        let n = self.n_gens();
        if n < 2 {
            return false;
        }
        let mut covered = vec![false; n * n];
        for r in &self.relators {
            let c = r.cyclic_reduce();
            if c.len() != 4 {
                return false;
            }
            let mut matched = None;
            for rot in 0..4 {
                let at = |k: usize| c.0[(rot + k) % 4];
                let (p, q) = (at(0), at(1));
                if p.gen != q.gen && at(2) == p.inverse() && at(3) == q.inverse() {
                    matched = Some((p.gen as usize, q.gen as usize));
                    break;
                }
            }
            match matched {
                Some((i, j)) => {
                    covered[i * n + j] = true;
                    covered[j * n + i] = true;
                }
                None => return false,
            }
        }
        (0..n).all(|i| (0..n).all(|j| i == j || covered[i * n + j]))
    }
}

#[derive(Clone, Debug)]
pub enum NormalForm {
    Free,
    FreeAbelian { n_gens: usize },
    Rewriting(Rewriting),
}

impl NormalForm {
    pub fn nf(&self, w: &Word) -> Word {
        match self {
            NormalForm::Free => w.free_reduce(),
            NormalForm::FreeAbelian { n_gens } => {
                abelian_word(&w.exponents(*n_gens))
            }
            NormalForm::Rewriting(rw) => rw.reduce(w),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NormalForm::Free => "free",
            NormalForm::FreeAbelian { .. } => "free-abelian",
            NormalForm::Rewriting(_) => "rewriting",
        }
    }
}

pub fn abelian_word(exponents: &[i64]) -> Word {
    let mut w = Word::empty();
    for (g, &e) in exponents.iter().enumerate() {
        for _ in 0..e.unsigned_abs() {
            w.0.push(Letter::new(g, e < 0));
        }
    }
    w
}

/// A terminating, locally confluent string rewriting system over the group
/// alphabet. Free cancellation rules are always included.
#[derive(Clone, Debug)]
pub struct Rewriting {
    rules: Vec<(Word, Word)>,
}

impl Rewriting {
    pub fn new(user_rules: &[(Word, Word)], n_gens: usize) -> Result<Self> {
        let mut rules: Vec<(Word, Word)> = Vec::new();
        for g in 0..n_gens {
            let x = Letter::new(g, false);
            let ix = x.inverse();
            rules.push((Word(vec![x, ix]), Word::empty()));
            rules.push((Word(vec![ix, x]), Word::empty()));
        }
        rules.extend(user_rules.iter().cloned());
        rules.sort();
        rules.dedup();

        let weights = find_reducing_weights(&rules, n_gens).ok_or_else(|| {
            Error::NotDeskDecidable(
                "no letter weighting makes every rewrite rule reducing".into(),
            )
        })?;
        let rw = Rewriting { rules };
        rw.check_local_confluence()?;
        let _ = weights;
        Ok(rw)
    }

    /// Rewrites to the unique normal form: leftmost match, first rule in
    /// canonical order.
    pub fn reduce(&self, w: &Word) -> Word {
        let mut cur = w.0.clone();
        'outer: loop {
            for pos in 0..=cur.len() {
                for (lhs, rhs) in &self.rules {
                    let l = lhs.0.len();
                    if pos + l <= cur.len() && cur[pos..pos + l] == lhs.0[..] {
                        let mut next = Vec::with_capacity(cur.len());
                        next.extend_from_slice(&cur[..pos]);
                        next.extend_from_slice(&rhs.0);
                        next.extend_from_slice(&cur[pos + l..]);
                        cur = next;
                        continue 'outer;
                    }
                }
            }
            return Word(cur);
        }
    }

    /// Knuth-Bendix critical pair check. With termination already
    /// established, joinable critical pairs give global confluence.
    fn check_local_confluence(&self) -> Result<()> {
        for (l1, r1) in &self.rules {
            for (l2, r2) in &self.rules {
                // Proper overlap: a suffix of l1 equals a prefix of l2.
                for k in 1..l1.0.len().min(l2.0.len()) {
                    if l1.0[l1.0.len() - k..] == l2.0[..k] {
                        let mut w1 = r1.0.clone();
                        w1.extend_from_slice(&l2.0[k..]);
                        let mut w2 = l1.0[..l1.0.len() - k].to_vec();
                        w2.extend_from_slice(&r2.0);
                        self.require_joinable(&Word(w1), &Word(w2))?;
                    }
                }
                // Containment: l2 occurs inside l1.
                if l2.0.len() < l1.0.len() {
                    for pos in 0..=l1.0.len() - l2.0.len() {
                        if l1.0[pos..pos + l2.0.len()] == l2.0[..] {
                            let mut w2 = l1.0[..pos].to_vec();
                            w2.extend_from_slice(&r2.0);
                            w2.extend_from_slice(&l1.0[pos + l2.0.len()..]);
                            self.require_joinable(r1, &Word(w2))?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn require_joinable(&self, a: &Word, b: &Word) -> Result<()> {
        let (na, nb) = (self.reduce(a), self.reduce(b));
        if na != nb {
            return Err(Error::NotDeskDecidable(format!(
                "rewriting system is not confluent: critical pair reduces to {:?} and {:?}",
                na, nb
            )));
        }
        Ok(())
    }
}

/// Searches for per-letter weights >= 1 under which every rule strictly
/// decreases (weight, then lex at equal weight and length). Such weights
/// prove the system terminating.
fn find_reducing_weights(rules: &[(Word, Word)], n_gens: usize) -> Option<Vec<u64>> {
    let letters = 2 * n_gens;
    let weight = |w: &Word, ws: &[u64]| -> u64 {
        w.0.iter()
            .map(|l| ws[l.gen as usize * 2 + usize::from(l.inv)])
            .sum()
    };
    let ok = |ws: &[u64]| {
        rules.iter().all(|(l, r)| {
            let (wl, wr) = (weight(l, ws), weight(r, ws));
            wl > wr || (wl == wr && l.0.len() == r.0.len() && l.0 > r.0)
        })
    };
    if letters > 10 {
        let uniform = vec![1; letters];
        return ok(&uniform).then_some(uniform);
    }
    let mut ws = vec![1u64; letters];
    loop {
        if ok(&ws) {
            return Some(ws);
        }
        let mut i = 0;
        loop {
            if i == letters {
                return None;
            }
            if ws[i] < 3 {
                ws[i] += 1;
                break;
            }
            ws[i] = 1;
            i += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroupPair {
    pub presentation: Presentation,
    pub peripherals: Vec<Vec<Word>>,
}

impl GroupPair {
    pub fn new(presentation: Presentation, peripherals: Vec<Vec<Word>>) -> Result<Self> {
        for (i, p) in peripherals.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::Input(format!(
                    "peripheral {i} has an empty generating set"
                )));
            }
            for w in p {
                if w.is_empty() {
                    return Err(Error::Input(format!(
                        "peripheral {i} contains the trivial word"
                    )));
                }
            }
        }
        Ok(GroupPair { presentation, peripherals })
    }

    /// Generator indices of peripheral `i`, when every generating word is a
    /// single plain letter. Coset and horoball support needs this shape.
    pub fn peripheral_letters(&self, i: usize) -> Option<Vec<u16>> {
        let mut gens = Vec::new();
        for w in &self.peripherals[i] {
            match w.0.as_slice() {
                [l] if !l.inv => gens.push(l.gen),
                _ => return None,
            }
        }
        gens.sort_unstable();
        gens.dedup();
        Some(gens)
    }
}

#[derive(Deserialize)]
struct PresentationDoc {
    generators: Vec<String>,
    #[serde(default)]
    relators: Vec<String>,
    #[serde(default)]
    peripherals: Vec<Vec<String>>,
    #[serde(default)]
    rewrites: Vec<(String, String)>,
}

pub fn parse_pair_json(text: &str) -> Result<GroupPair> {
    let doc: PresentationDoc = serde_json::from_str(text)?;
    let mut symbols = Vec::new();
    for g in &doc.generators {
        let mut chars = g.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => symbols.push(c),
            _ => {
                return Err(Error::Input(format!(
                    "generator {g:?} must be a single character"
                )))
            }
        }
    }
    let relators = doc
        .relators
        .iter()
        .map(|r| Word::parse(r, &symbols).map(|w| w.free_reduce()))
        .collect::<Result<Vec<_>>>()?;
    let rewrites = doc
        .rewrites
        .iter()
        .map(|(l, r)| Ok((Word::parse(l, &symbols)?, Word::parse(r, &symbols)?)))
        .collect::<Result<Vec<_>>>()?;
    let presentation = Presentation::new(symbols.clone(), relators, rewrites)?;
    let peripherals = doc
        .peripherals
        .iter()
        .map(|p| p.iter().map(|w| Word::parse(w, &symbols)).collect())
        .collect::<Result<Vec<_>>>()?;
    GroupPair::new(presentation, peripherals)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeLabel {
    pub gen: u16,
    /// Reading the plain generator letter moves from the lower vertex id to
    /// the higher one.
    pub from_lo: bool,
}

#[derive(Clone, Debug)]
pub struct CayleyBall {
    pub radius: u32,
    pub graph: Graph,
    pub origin: u32,
    pub words: Vec<Word>,
    pub index: BTreeMap<Word, u32>,
    pub sphere_sizes: Vec<usize>,
    pub labels: BTreeMap<(u32, u32), Vec<EdgeLabel>>,
    pub engine: NormalForm,
}

impl CayleyBall {
    pub fn word_of(&self, v: u32) -> &Word {
        &self.words[v as usize]
    }

    pub fn id_of(&self, w: &Word) -> Option<u32> {
        self.index.get(w).copied()
    }

    pub fn depth_of(&self, v: u32) -> u32 {
        let mut r = 0;
        for (layer, &size) in self.sphere_sizes.iter().enumerate() {
            r += size;
            if (v as usize) < r {
                return layer as u32;
            }
        }
        unreachable!("vertex id outside ball")
    }
}

pub fn cayley_ball(pair: &GroupPair, radius: u32) -> Result<CayleyBall> {
    let pres = &pair.presentation;
    let engine = pres.normal_form_engine()?;
    let n = pres.n_gens();

    let mut words: Vec<Word> = vec![Word::empty()];
    let mut index: BTreeMap<Word, u32> = BTreeMap::new();
    index.insert(Word::empty(), 0);
    let mut sphere_sizes = vec![1usize];
    let mut frontier: Vec<u32> = vec![0];

    for _ in 0..radius {
        let mut next = Vec::new();
        for &u in &frontier {
            let base = words[u as usize].clone();
            for g in 0..n {
                for inv in [false, true] {
                    let mut w = base.clone();
                    w.push(Letter::new(g, inv));
                    let w = engine.nf(&w);
                    if !index.contains_key(&w) {
                        let id = words.len() as u32;
                        index.insert(w.clone(), id);
                        words.push(w);
                        next.push(id);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        sphere_sizes.push(next.len());
        frontier = next;
    }

    let mut graph = Graph::new(words.len());
    let mut labels: BTreeMap<(u32, u32), Vec<EdgeLabel>> = BTreeMap::new();
    for u in 0..words.len() as u32 {
        for g in 0..n {
            let mut w = words[u as usize].clone();
            w.push(Letter::new(g, false));
            let w = engine.nf(&w);
            if let Some(v) = index.get(&w).copied() {
                if v == u {
                    continue;
                }
                let key = (u.min(v), u.max(v));
                if !graph.has_edge(u, v) {
                    graph.add_edge(u, v)?;
                }
                let label = EdgeLabel { gen: g as u16, from_lo: u < v };
                let slot = labels.entry(key).or_default();
                if !slot.contains(&label) {
                    slot.push(label);
                }
            }
        }
    }
    graph.set_vertex_labels(words.iter().map(|w| w.display(&pres.symbols)).collect());
    graph.normalize();

    Ok(CayleyBall { radius, graph, origin: 0, words, index, sphere_sizes, labels, engine })
}

/// One left coset of a peripheral subgroup, intersected with the ball.
#[derive(Clone, Debug)]
pub struct CosetPiece {
    pub peripheral: usize,
    /// Complete coset invariant: the vertex word with its peripheral tail
    /// removed (free case) or peripheral exponents zeroed (abelian case).
    pub key: Word,
    pub vertices: Vec<u32>,
    /// Per vertex, the peripheral element carrying the key to it.
    pub suffixes: Vec<Word>,
    pub clipped: bool,
}

impl CosetPiece {
    /// Distance inside the peripheral subgroup's own Cayley graph, exact
    /// even where the ball clips the coset.
    pub fn distance(&self, i: usize, j: usize, metric: &CosetMetric) -> u64 {
        metric.distance(&self.suffixes[i], &self.suffixes[j])
    }
}

#[derive(Clone, Debug)]
pub enum CosetMetric {
    Free,
    Abelian { gens: Vec<u16>, n_gens: usize },
}

impl CosetMetric {
    pub fn distance(&self, a: &Word, b: &Word) -> u64 {
        match self {
            CosetMetric::Free => a.inverse().concat(b).free_reduce().len() as u64,
            CosetMetric::Abelian { gens, n_gens } => {
                let (ea, eb) = (a.exponents(*n_gens), b.exponents(*n_gens));
                gens.iter()
                    .map(|&g| ea[g as usize].abs_diff(eb[g as usize]))
                    .sum()
            }
        }
    }
}

pub fn coset_metric(ball: &CayleyBall, pair: &GroupPair, peripheral: usize) -> Result<CosetMetric> {
    let gens = pair.peripheral_letters(peripheral).ok_or_else(|| {
        Error::Input(format!(
            "peripheral {peripheral} is not generated by single letters"
        ))
    })?;
    match ball.engine {
        NormalForm::Free => Ok(CosetMetric::Free),
        NormalForm::FreeAbelian { n_gens } => Ok(CosetMetric::Abelian { gens, n_gens }),
        NormalForm::Rewriting(_) => Err(Error::Input(
            "peripheral cosets need a free or free-abelian presentation".into(),
        )),
    }
}

/// Splits a vertex word as key * suffix with the suffix inside the
/// peripheral subgroup generated by `gens`.
fn coset_split(engine: &NormalForm, w: &Word, gens: &[u16]) -> Result<(Word, Word)> {
    match engine {
        NormalForm::Free => {
            let mut cut = w.0.len();
            while cut > 0 && gens.contains(&w.0[cut - 1].gen) {
                cut -= 1;
            }
            Ok((Word(w.0[..cut].to_vec()), Word(w.0[cut..].to_vec())))
        }
        NormalForm::FreeAbelian { n_gens } => {
            let mut key = w.exponents(*n_gens);
            let mut suffix = vec![0i64; *n_gens];
            for &g in gens {
                suffix[g as usize] = key[g as usize];
                key[g as usize] = 0;
            }
            Ok((abelian_word(&key), abelian_word(&suffix)))
        }
        NormalForm::Rewriting(_) => Err(Error::Input(
            "peripheral cosets need a free or free-abelian presentation".into(),
        )),
    }
}

pub fn peripheral_cosets(ball: &CayleyBall, pair: &GroupPair) -> Result<Vec<CosetPiece>> {
    let mut out = Vec::new();
    for p in 0..pair.peripherals.len() {
        let gens = pair.peripheral_letters(p).ok_or_else(|| {
            Error::Input(format!("peripheral {p} is not generated by single letters"))
        })?;
        let mut by_key: BTreeMap<Word, Vec<(u32, Word)>> = BTreeMap::new();
        for (v, w) in ball.words.iter().enumerate() {
            let (key, suffix) = coset_split(&ball.engine, w, &gens)?;
            by_key.entry(key).or_default().push((v as u32, suffix));
        }
        for (key, members) in by_key {
            let mut clipped = false;
            'scan: for (v, _) in &members {
                for &g in &gens {
                    for inv in [false, true] {
                        let mut w = ball.words[*v as usize].clone();
                        w.push(Letter::new(g as usize, inv));
                        if ball.id_of(&ball.engine.nf(&w)).is_none() {
                            clipped = true;
                            break 'scan;
                        }
                    }
                }
            }
            let (vertices, suffixes) = members.into_iter().unzip();
            out.push(CosetPiece { peripheral: p, key, vertices, suffixes, clipped });
        }
    }
    Ok(out)
}

pub fn coset_census(ball: &CayleyBall, pair: &GroupPair) -> Result<String> {
    let pieces = peripheral_cosets(ball, pair)?;
    let mut s = String::from("peripheral,key,size,clipped\n");
    for p in &pieces {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.peripheral,
            p.key.display(&pair.presentation.symbols),
            p.vertices.len(),
            p.clipped
        );
    }
    Ok(s)
}

/// Shortlex-least representative words for ball vertices, letter order
/// a < a^-1 < b < b^-1.
pub fn shortlex_reps(ball: &CayleyBall) -> Vec<Word> {
    let n = match &ball.engine {
        NormalForm::FreeAbelian { n_gens } => *n_gens,
        _ => {
            return ball.words.clone();
        }
    };
    // Abelian normal forms are already shortlex-least among same-length
    // words with sorted letters; recompute by BFS for safety.
    let mut reps: Vec<Option<Word>> = vec![None; ball.words.len()];
    reps[0] = Some(Word::empty());
    let mut queue = std::collections::VecDeque::from([0u32]);
    while let Some(u) = queue.pop_front() {
        let base = reps[u as usize].clone().unwrap();
        for g in 0..n {
            for inv in [false, true] {
                let mut w = base.clone();
                w.push(Letter::new(g, inv));
                let nf = ball.engine.nf(&w);
                if let Some(v) = ball.id_of(&nf) {
                    let cand = w.free_reduce();
                    match &reps[v as usize] {
                        Some(old) if !shortlex_lt(&cand, old) => {}
                        _ => {
                            if reps[v as usize].is_none() {
                                queue.push_back(v);
                            }
                            reps[v as usize] = Some(cand);
                        }
                    }
                }
            }
        }
    }
    reps.into_iter().map(|r| r.expect("ball is connected")).collect()
}
