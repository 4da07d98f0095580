//! Finite 2-complexes: oriented half-edges paired by reversal, triangles as
//! head-to-tail boundary triples, and holonomy labels that record deck
//! translations on quotient complexes.
//!
//! Oriented edge `2k` runs along unoriented edge `k`, `2k+1` runs against
//! it. Parallel edges are allowed. The three sides of a triangle must be
//! pairwise distinct unoriented edges, so the boundary chain e + e' + e'' is
//! honest and per-triangle side bookkeeping never aliases.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::group::{CayleyBall, GroupPair, Presentation};
use crate::subgroups::SubgroupRecord;
use crate::words::{Letter, Word};

#[derive(Clone, Debug)]
pub struct TwoComplex {
    n_vertices: u32,
    /// (tail, head, holonomy) of each even half-edge.
    edges: Vec<(u32, u32, Word)>,
    /// Oriented side triples.
    triangles: Vec<[u32; 3]>,
    /// Per unoriented edge: (triangle, side slot) incidences.
    edge_tris: Vec<Vec<(u32, u8)>>,
}

impl TwoComplex {
    pub fn new(
        n_vertices: u32,
        edges: Vec<(u32, u32, Word)>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self> {
        for (k, &(u, v, _)) in edges.iter().enumerate() {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::Input(format!("edge {k} endpoint outside vertex range")));
            }
        }
        let n_oriented = 2 * edges.len() as u32;
        let mut edge_tris = vec![Vec::new(); edges.len()];
        for (t, sides) in triangles.iter().enumerate() {
            for (slot, &o) in sides.iter().enumerate() {
                if o >= n_oriented {
                    return Err(Error::Input(format!("triangle {t} side {slot} is not an edge")));
                }
                edge_tris[(o >> 1) as usize].push((t as u32, slot as u8));
            }
            let k: Vec<u32> = sides.iter().map(|&o| o >> 1).collect();
            if k[0] == k[1] || k[1] == k[2] || k[0] == k[2] {
                return Err(Error::Input(format!("triangle {t} repeats a side")));
            }
            for i in 0..3 {
                let (a, b) = (sides[i], sides[(i + 1) % 3]);
                let head = &edges[(a >> 1) as usize];
                let tail = &edges[(b >> 1) as usize];
                let head_v = if a & 1 == 0 { head.1 } else { head.0 };
                let tail_v = if b & 1 == 0 { tail.0 } else { tail.1 };
                if head_v != tail_v {
                    return Err(Error::Input(format!(
                        "triangle {t} does not close between sides {i} and {}",
                        (i + 1) % 3
                    )));
                }
            }
        }
        Ok(TwoComplex { n_vertices, edges, triangles, edge_tris })
    }

    pub fn n_vertices(&self) -> u32 {
        self.n_vertices
    }

    pub fn n_edges(&self) -> u32 {
        self.edges.len() as u32
    }

    pub fn n_oriented(&self) -> u32 {
        2 * self.edges.len() as u32
    }

    pub fn n_triangles(&self) -> u32 {
        self.triangles.len() as u32
    }

    pub fn rev(o: u32) -> u32 {
        o ^ 1
    }

    pub fn unoriented(o: u32) -> u32 {
        o >> 1
    }

    pub fn forward(k: u32) -> u32 {
        2 * k
    }

    pub fn tail(&self, o: u32) -> u32 {
        let (u, v, _) = &self.edges[(o >> 1) as usize];
        if o & 1 == 0 {
            *u
        } else {
            *v
        }
    }

    pub fn head(&self, o: u32) -> u32 {
        self.tail(o ^ 1)
    }

    pub fn holonomy(&self, o: u32) -> Word {
        let w = &self.edges[(o >> 1) as usize].2;
        if o & 1 == 0 {
            w.clone()
        } else {
            w.inverse()
        }
    }

    pub fn sides(&self, t: u32) -> [u32; 3] {
        self.triangles[t as usize]
    }

    pub fn triangles_of(&self, k: u32) -> &[(u32, u8)] {
        &self.edge_tris[k as usize]
    }

    pub fn vol(&self) -> u64 {
        self.n_vertices as u64 + self.edges.len() as u64 + self.triangles.len() as u64
    }
}

/// Rose on `n_gens` petals with every petal subdivided into four edges, so
/// no edge is a loop and triangle sides stay distinct in any later coning.
/// The petal for generator `s` runs 0 -> p_s -> m_s -> q_s -> 0 and only the
/// closing edge carries the letter.
pub fn subdivided_wedge(n_gens: usize) -> TwoComplex {
    let mut edges = Vec::with_capacity(4 * n_gens);
    for s in 0..n_gens {
        let (p, m, q) = (1 + 3 * s as u32, 2 + 3 * s as u32, 3 + 3 * s as u32);
        edges.push((0, p, Word::empty()));
        edges.push((p, m, Word::empty()));
        edges.push((m, q, Word::empty()));
        edges.push((q, 0, Word::letter(s, false)));
    }
    TwoComplex::new(1 + 3 * n_gens as u32, edges, Vec::new())
        .expect("wedge construction is closed")
}

/// Oriented sub-edges traversed by one letter around its petal.
fn petal_traversal(l: Letter) -> [u32; 4] {
    let base = 4 * l.gen as u32;
    if l.inv {
        [2 * (base + 3) + 1, 2 * (base + 2) + 1, 2 * (base + 1) + 1, 2 * base + 1]
    } else {
        [2 * base, 2 * (base + 1), 2 * (base + 2), 2 * (base + 3)]
    }
}

/// Presentation 2-complex: the subdivided wedge plus, per relator, a cone
/// vertex joined by one spoke to every corner of the relator's boundary
/// walk. Spoke holonomies are boundary prefixes, so every triangle's
/// holonomy product is trivial in the group (the last one equals the
/// relator itself).
pub fn presentation_complex(pres: &Presentation) -> Result<TwoComplex> {
    let engine = pres.normal_form_engine()?;
    let wedge = subdivided_wedge(pres.n_gens());
    let mut n_vertices = wedge.n_vertices;
    let mut edges = wedge.edges.clone();
    let mut triangles = Vec::new();

    for relator in &pres.relators {
        let mut boundary = Vec::with_capacity(4 * relator.len());
        for &l in &relator.0 {
            boundary.extend_from_slice(&petal_traversal(l));
        }
        let n = boundary.len() as u32;
        let cone = n_vertices;
        n_vertices += 1;

        let spoke_base = edges.len() as u32;
        let mut corner = 0u32;
        let mut prefix = Word::empty();
        for &o in &boundary {
            edges.push((cone, corner, prefix.clone()));
            corner = wedge.head(o);
            prefix = engine.nf(&prefix.concat(&wedge.holonomy(o)));
        }
        for j in 0..n {
            let s0 = 2 * (spoke_base + j);
            let s2 = 2 * (spoke_base + (j + 1) % n) + 1;
            triangles.push([s0, boundary[j as usize], s2]);
        }
    }

    TwoComplex::new(n_vertices, edges, triangles)
}

/// Finite cover of a quotient complex, built from a coset table. Vertex
/// `(c, v)` has id `c * base.n_vertices() + v`; edge `(c, k)` has unoriented
/// id `c * base.n_edges() + k` and starts at coset `c` along the even
/// half-edge.
#[derive(Clone, Debug)]
pub struct CoverComplex {
    pub complex: TwoComplex,
    pub index: u32,
    base_vertices: u32,
}

impl CoverComplex {
    pub fn vertex_id(&self, coset: u32, v: u32) -> u32 {
        coset * self.base_vertices + v
    }

    pub fn coset_of(&self, id: u32) -> u32 {
        id / self.base_vertices
    }

    pub fn base_vertex_of(&self, id: u32) -> u32 {
        id % self.base_vertices
    }
}

pub fn cover(base: &TwoComplex, rec: &SubgroupRecord, pair: &GroupPair) -> Result<CoverComplex> {
    let engine = pair.presentation.normal_form_engine()?;
    let k = rec.index;
    let nb = base.n_vertices();
    let m = base.n_edges();

    let mut edges = Vec::with_capacity((k * m) as usize);
    for c in 0..k {
        for e in 0..m {
            let o = TwoComplex::forward(e);
            let g = base.holonomy(o);
            let c2 = rec.act_word(c, &g);
            let hol = engine.nf(&rec.rep_words[c as usize].concat(&g).concat(
                &rec.rep_words[c2 as usize].inverse(),
            ));
            edges.push((c * nb + base.tail(o), c2 * nb + base.head(o), hol));
        }
    }

    let lift = |o: u32, c: u32| -> u32 {
        let e = TwoComplex::unoriented(o);
        if o & 1 == 0 {
            2 * (c * m + e)
        } else {
            let back = rec.act_word(c, &base.holonomy(o));
            2 * (back * m + e) + 1
        }
    };

    let mut triangles = Vec::with_capacity((k * base.n_triangles()) as usize);
    for t in 0..base.n_triangles() {
        let sides = base.sides(t);
        for c in 0..k {
            let c0 = c;
            let c1 = rec.act_word(c0, &base.holonomy(sides[0]));
            let c2 = rec.act_word(c1, &base.holonomy(sides[1]));
            if rec.act_word(c2, &base.holonomy(sides[2])) != c0 {
                return Err(Error::Input(format!(
                    "triangle {t} holonomy does not close over coset {c}"
                )));
            }
            triangles.push([lift(sides[0], c0), lift(sides[1], c1), lift(sides[2], c2)]);
        }
    }

    let complex = TwoComplex::new(k * nb, edges, triangles)?;
    Ok(CoverComplex { complex, index: k, base_vertices: nb })
}

/// Places every cover vertex of coset `c` at the ball vertex of the coset's
/// representative word. The usual seed for displacement minimization.
pub fn rep_vertex_map(
    cov: &CoverComplex,
    rec: &SubgroupRecord,
    ball: &CayleyBall,
) -> Result<Vec<u32>> {
    let mut images = Vec::with_capacity(cov.complex.n_vertices() as usize);
    for v in 0..cov.complex.n_vertices() {
        let rep = &rec.rep_words[cov.coset_of(v) as usize];
        let id = ball.id_of(rep).ok_or_else(|| {
            Error::BallMargin(format!(
                "coset representative of length {} lies outside the radius-{} ball",
                rep.len(),
                ball.radius
            ))
        })?;
        images.push(id);
    }
    Ok(images)
}

/// Vertex-boundary of a triangle's oriented sides, for sanity checks: head
/// minus tail summed over the triple.
pub fn triangle_vertex_boundary(cx: &TwoComplex, t: u32) -> BTreeMap<u32, i64> {
    let mut b: BTreeMap<u32, i64> = BTreeMap::new();
    for o in cx.sides(t) {
        *b.entry(cx.head(o)).or_insert(0) += 1;
        *b.entry(cx.tail(o)).or_insert(0) -= 1;
    }
    b.retain(|_, c| *c != 0);
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::cayley_ball;
    use crate::subgroups::enumerate_subgroups;

    fn free_pair(n: usize) -> GroupPair {
        let symbols: Vec<char> = "abcd".chars().take(n).collect();
        let pres = Presentation::new(symbols.clone(), vec![], vec![]).unwrap();
        let periph = vec![vec![Word::letter(0, false)]];
        GroupPair::new(pres, periph).unwrap()
    }

    #[test]
    fn wedge_counts_and_holonomy() {
        let w = subdivided_wedge(2);
        assert_eq!(w.n_vertices(), 7);
        assert_eq!(w.n_edges(), 8);
        assert_eq!(w.n_triangles(), 0);
        assert_eq!(w.vol(), 15);
        for s in 0..2u32 {
            for j in 0..3 {
                assert!(w.holonomy(2 * (4 * s + j)).is_empty());
            }
            assert_eq!(w.holonomy(2 * (4 * s + 3)), Word::letter(s as usize, false));
        }
    }

    #[test]
    fn reversal_swaps_endpoints_and_inverts_holonomy() {
        let w = subdivided_wedge(1);
        for o in 0..w.n_oriented() {
            assert_ne!(TwoComplex::rev(o), o);
            assert_eq!(TwoComplex::rev(TwoComplex::rev(o)), o);
            assert_eq!(w.tail(o), w.head(TwoComplex::rev(o)));
            assert_eq!(w.holonomy(o).inverse(), w.holonomy(TwoComplex::rev(o)));
        }
    }

    #[test]
    fn wedge_petals_traverse_back_to_base() {
        let w = subdivided_wedge(3);
        for g in 0..3 {
            for inv in [false, true] {
                let walk = petal_traversal(Letter::new(g, inv));
                assert_eq!(w.tail(walk[0]), 0);
                for i in 0..3 {
                    assert_eq!(w.head(walk[i]), w.tail(walk[i + 1]));
                }
                assert_eq!(w.head(walk[3]), 0);
            }
        }
    }

    #[test]
    fn open_triangle_rejected() {
        let e = vec![
            (0, 1, Word::empty()),
            (1, 2, Word::empty()),
            (2, 3, Word::empty()),
        ];
        let err = TwoComplex::new(4, e, vec![[0, 2, 4]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn repeated_side_rejected() {
        let e = vec![(0, 1, Word::empty()), (1, 0, Word::empty())];
        let err = TwoComplex::new(2, e, vec![[0, 2, 1]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn closed_triangle_accepted_with_incidences() {
        let e = vec![
            (0, 1, Word::empty()),
            (1, 2, Word::empty()),
            (2, 0, Word::empty()),
        ];
        let cx = TwoComplex::new(3, e, vec![[0, 2, 4]]).unwrap();
        assert_eq!(cx.vol(), 3 + 3 + 1);
        assert_eq!(cx.triangles_of(0), &[(0, 0)]);
        assert_eq!(cx.triangles_of(2), &[(0, 2)]);
        assert!(triangle_vertex_boundary(&cx, 0).is_empty());
    }

    #[test]
    fn commutator_presentation_complex() {
        let pres = Presentation::new(
            vec!['a', 'b'],
            vec![Word::parse("abAB", &['a', 'b']).unwrap()],
            vec![],
        )
        .unwrap();
        let cx = presentation_complex(&pres).unwrap();
        assert_eq!(cx.n_vertices(), 8);
        assert_eq!(cx.n_edges(), 8 + 16);
        assert_eq!(cx.n_triangles(), 16);
        assert_eq!(cx.vol(), 48);
        for t in 0..cx.n_triangles() {
            assert!(triangle_vertex_boundary(&cx, t).is_empty());
        }
    }

    #[test]
    fn spoke_holonomies_are_boundary_prefixes() {
        let pres = Presentation::new(
            vec!['a', 'b'],
            vec![Word::parse("abAB", &['a', 'b']).unwrap()],
            vec![],
        )
        .unwrap();
        let cx = presentation_complex(&pres).unwrap();
        let spoke = |j: u32| cx.holonomy(2 * (8 + j));
        assert!(spoke(0).is_empty());
        assert_eq!(spoke(4), Word::parse("a", &['a', 'b']).unwrap());
        assert_eq!(spoke(8), Word::parse("ab", &['a', 'b']).unwrap());
        assert_eq!(spoke(12), Word::parse("b", &['a', 'b']).unwrap());
    }

    fn cyclic_three() -> Presentation {
        Presentation::new(
            vec!['a'],
            vec![Word::parse("aaa", &['a']).unwrap()],
            vec![
                (Word::parse("A", &['a']).unwrap(), Word::parse("aa", &['a']).unwrap()),
                (Word::parse("aaa", &['a']).unwrap(), Word::empty()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn triangle_holonomy_products_die_in_the_group() {
        let pres = cyclic_three();
        let cx = presentation_complex(&pres).unwrap();
        assert_eq!(cx.n_triangles(), 12);
        let engine = pres.normal_form_engine().unwrap();
        for t in 0..cx.n_triangles() {
            let [a, b, c] = cx.sides(t);
            let prod = cx.holonomy(a).concat(&cx.holonomy(b)).concat(&cx.holonomy(c));
            assert!(engine.nf(&prod).is_empty(), "triangle {t} holonomy survives");
        }
    }

    #[test]
    fn identity_cover_matches_base() {
        let pair = free_pair(2);
        let recs = enumerate_subgroups(&pair, 1, 1 << 20).unwrap();
        let base = subdivided_wedge(2);
        let cov = cover(&base, &recs[0], &pair).unwrap();
        assert_eq!(cov.index, 1);
        assert_eq!(cov.complex.n_vertices(), base.n_vertices());
        assert_eq!(cov.complex.vol(), base.vol());
        for e in 0..base.n_edges() {
            let o = TwoComplex::forward(e);
            assert_eq!(cov.complex.holonomy(o), base.holonomy(o));
        }
    }

    #[test]
    fn covers_multiply_volume_and_land_in_the_subgroup() {
        let pair = free_pair(2);
        let base = subdivided_wedge(2);
        for rec in enumerate_subgroups(&pair, 3, 1 << 22).unwrap() {
            let cov = cover(&base, &rec, &pair).unwrap();
            assert_eq!(cov.complex.vol(), base.vol() * rec.index as u64);
            for e in 0..cov.complex.n_edges() {
                let hol = cov.complex.holonomy(TwoComplex::forward(e));
                assert!(rec.contains(&hol), "cover holonomy escapes the subgroup");
            }
        }
    }

    #[test]
    fn cyclic_cover_closes_triangles() {
        let pres = cyclic_three();
        let pair = GroupPair::new(pres.clone(), vec![]).unwrap();
        let base = presentation_complex(&pres).unwrap();
        let recs = enumerate_subgroups(&pair, 3, 1 << 20).unwrap();
        let trivial = recs.iter().find(|r| r.index == 3).unwrap();
        let cov = cover(&base, trivial, &pair).unwrap();
        assert_eq!(cov.complex.n_triangles(), 36);
        assert_eq!(cov.complex.vol(), base.vol() * 3);
        for t in 0..cov.complex.n_triangles() {
            assert!(triangle_vertex_boundary(&cov.complex, t).is_empty());
        }
    }

    #[test]
    fn rep_map_places_cosets_at_their_representatives() {
        let pair = free_pair(2);
        let ball = cayley_ball(&pair, 3).unwrap();
        let base = subdivided_wedge(2);
        let recs = enumerate_subgroups(&pair, 2, 1 << 20).unwrap();
        let rec = recs.iter().find(|r| r.index == 2).unwrap();
        let cov = cover(&base, rec, &pair).unwrap();
        let phi = rep_vertex_map(&cov, rec, &ball).unwrap();
        for v in 0..cov.complex.n_vertices() {
            let c = cov.coset_of(v);
            assert_eq!(ball.word_of(phi[v as usize]), &rec.rep_words[c as usize]);
        }
    }
}
