//! Resolving a vertex map to a pattern. Each complex edge transports to a
//! bicombing chain in the cusped space; chain supports become weighted
//! connectors, and per-triangle frame comparison turns coincident supports
//! into segments. On top of that: consistency checks, the track-depth
//! filter, displacement minimization, coverage, a lower-bound certificate,
//! and the survey over low-index covers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num::Signed;

use crate::bicombing::{
    axiom_suite, lambda_constant, Bicombing, BicombingConstants, GeodesicBicombing, Sampler,
    TranslationContext,
};
use crate::chain::Chain1;
use crate::complex2::{cover, presentation_complex, rep_vertex_map, subdivided_wedge, TwoComplex};
use crate::cusped::{cusped_from_pair, CuspedSpace};
use crate::error::{Error, Result};
use crate::pattern::{self, Connector, ConnectorHost, Pattern, Segment};
use crate::rat::{rat, rat_abs, rat_display, rat_int, rat_one, Rat};
use crate::subgroups::{enumerate_subgroups, induced_peripherals, SubgroupRecord};
use crate::words::Word;

/// Images of complex vertices among depth-0 vertices of a cusped space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexMap {
    pub images: Vec<u32>,
}

impl VertexMap {
    pub fn new(images: Vec<u32>, space: &CuspedSpace) -> Result<Self> {
        for (v, &img) in images.iter().enumerate() {
            if img >= space.graph.n_vertices() as u32 {
                return Err(Error::Input(format!("image of vertex {v} is not in the space")));
            }
            if space.depth[img as usize] != 0 {
                return Err(Error::Input(format!(
                    "image of vertex {v} has depth {}; vertex maps land at depth 0",
                    space.depth[img as usize]
                )));
            }
        }
        Ok(VertexMap { images })
    }
}

fn transport(
    space: &CuspedSpace,
    ball: Option<&CayleyBallRef<'_>>,
    w: &Word,
    v: u32,
) -> Result<Option<u32>> {
    if w.is_empty() {
        return Ok(Some(v));
    }
    match ball {
        Some(b) => Ok(space.translate_vertex(b.0, w, v)),
        None => Err(Error::Input(
            "nontrivial holonomy needs a Cayley ball to act through".into(),
        )),
    }
}

/// Thin wrapper so call sites can pass `Option<&CayleyBall>` ergonomically.
struct CayleyBallRef<'a>(&'a crate::group::CayleyBall);

fn ball_ref<'a>(b: Option<&'a crate::group::CayleyBall>) -> Option<CayleyBallRef<'a>> {
    b.map(CayleyBallRef)
}

fn nf_word(ball: Option<&crate::group::CayleyBall>, w: &Word) -> Word {
    match ball {
        Some(b) => b.engine.nf(w),
        None => w.free_reduce(),
    }
}

/// Distance from every space vertex to the unreliable boundary: the base
/// sphere, truncation-depth layers, clipped columns over sphere vertices,
/// and every vertex of a piece with an approximate metric.
pub fn boundary_distances(
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
) -> Vec<u32> {
    let n = space.graph.n_vertices();
    let mut seeds: BTreeSet<u32> = BTreeSet::new();

    if let Some(b) = ball {
        for v in 0..space.base_size {
            if b.depth_of(v) == b.radius {
                seeds.insert(v);
            }
        }
    }

    for piece in &space.pieces {
        let locals = piece.base_ids.len();
        if piece.approximate {
            for m in 0..=space.max_depth {
                for i in 0..locals {
                    seeds.insert(piece.vertex(i, m));
                }
            }
            continue;
        }
        for i in 0..locals {
            seeds.insert(piece.vertex(i, space.max_depth));
        }
        if piece.clipped {
            let cut: Vec<usize> = match ball {
                Some(b) => (0..locals)
                    .filter(|&i| b.depth_of(piece.base_ids[i]) == b.radius)
                    .collect(),
                None => (0..locals).collect(),
            };
            for &i in &cut {
                for m in 0..=space.max_depth {
                    seeds.insert(piece.vertex(i, m));
                }
            }
        }
    }

    if seeds.is_empty() {
        return vec![u32::MAX; n];
    }
    let seed_vec: Vec<u32> = seeds.into_iter().collect();
    space
        .graph
        .bfs_multi(&seed_vec)
        .into_iter()
        .map(|d| d.unwrap_or(u32::MAX))
        .collect()
}

/// A vertex map resolved to a pattern, keeping the transported chains and
/// the connector bookkeeping the checks and the filter consume.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub phi: VertexMap,
    pub pattern: Pattern,
    /// Chain of each unoriented edge, read along the even half-edge.
    pub chains: Vec<Chain1>,
    /// Oriented source edge in the even lift; `None` for singular connectors.
    pub sources: Vec<Option<(u32, u32)>>,
    /// Connector ids per complex edge, ascending along the even half-edge.
    pub on_edge: Vec<Vec<u32>>,
    /// Endpoint depths (min, max) of each source edge.
    pub depth_tags: Vec<Option<(u32, u32)>>,
    pub margin: u32,
}

pub fn resolve(
    cx: &TwoComplex,
    phi: &VertexMap,
    b: &dyn Bicombing,
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
    margin: u32,
) -> Result<Resolution> {
    if phi.images.len() != cx.n_vertices() as usize {
        return Err(Error::Input(format!(
            "vertex map covers {} vertices, complex has {}",
            phi.images.len(),
            cx.n_vertices()
        )));
    }
    if b.graph().n_vertices() != space.graph.n_vertices() {
        return Err(Error::Input("bicombing lives on a different graph than the space".into()));
    }
    let bd = boundary_distances(space, ball);
    let bref = ball_ref(ball);

    let m = cx.n_edges() as usize;
    let mut chains = Vec::with_capacity(m);
    for k in 0..m as u32 {
        let o = TwoComplex::forward(k);
        let x = phi.images[cx.tail(o) as usize];
        let h = cx.holonomy(o);
        let y = transport(space, bref.as_ref(), &h, phi.images[cx.head(o) as usize])?
            .ok_or_else(|| {
                Error::BallMargin(format!(
                    "holonomy of edge {k} pushes a vertex image outside the ball"
                ))
            })?;
        let q = b.chain(x, y)?;
        for (&(lo, hi), _) in q.support() {
            let worst = bd[lo as usize].min(bd[hi as usize]);
            if worst < margin {
                return Err(Error::BallMargin(format!(
                    "support of edge {k} comes within {worst} of the boundary; margin {margin} required"
                )));
            }
        }
        chains.push(q);
    }

    let mut connectors: Vec<Connector> = Vec::new();
    let mut sources: Vec<Option<(u32, u32)>> = Vec::new();
    let mut depth_tags: Vec<Option<(u32, u32)>> = Vec::new();
    let mut on_edge: Vec<Vec<u32>> = vec![Vec::new(); m];

    for k in 0..m {
        if chains[k].is_zero() {
            continue;
        }
        let o = TwoComplex::forward(k as u32);
        let x = phi.images[cx.tail(o) as usize];
        let h = cx.holonomy(o);
        let y = transport(space, bref.as_ref(), &h, phi.images[cx.head(o) as usize])?
            .expect("transported once already");
        let from_x = space.graph.bfs_distances(x)?;
        let from_y = space.graph.bfs_distances(y)?;
        // Near-key ascending, far-key descending: on geodesic supports the
        // two are complementary, so both traversal directions see a
        // distance-consistent order.
        let mut items: Vec<(u32, u32, u32, u32, u32, u32, bool)> = Vec::new();
        for (&(lo, hi), coeff) in chains[k].support() {
            let key = |d: &[Option<u32>]| match (d[lo as usize], d[hi as usize]) {
                (Some(a), Some(b)) => a.min(b),
                _ => u32::MAX,
            };
            let (da, db) = (space.depth[lo as usize], space.depth[hi as usize]);
            items.push((
                key(&from_x),
                u32::MAX - key(&from_y),
                da.min(db),
                da.max(db),
                lo,
                hi,
                coeff.is_positive(),
            ));
        }
        items.sort();
        let count = items.len();
        for (i, (_, _, dmin, dmax, lo, hi, positive)) in items.into_iter().enumerate() {
            let weight = rat_abs(&chains[k].coefficient(lo, hi));
            let id = connectors.len() as u32;
            connectors.push(Connector {
                host: ConnectorHost::Edge {
                    edge: k as u32,
                    position: rat(i as i64 + 1, count as i64 + 1),
                },
                weight,
            });
            sources.push(Some(if positive { (lo, hi) } else { (hi, lo) }));
            depth_tags.push(Some((dmin, dmax)));
            on_edge[k].push(id);
        }
    }

    let mut segments: Vec<Segment> = Vec::new();
    for t in 0..cx.n_triangles() {
        let groups = framed_groups(cx, t, &sources, &on_edge, space, ball)?;
        let mut slot = 0u32;
        for (_, entries) in groups {
            let opposite = entries.len() == 2 && entries[0].1 == reversed(entries[1].1);
            if opposite {
                segments.push(Segment { ends: [entries[0].0, entries[1].0], triangle: t });
                continue;
            }
            for (cid, _) in entries {
                let sid = connectors.len() as u32;
                connectors.push(Connector {
                    host: ConnectorHost::Interior { triangle: t, slot },
                    weight: rat(0, 1),
                });
                sources.push(None);
                depth_tags.push(None);
                slot += 1;
                segments.push(Segment { ends: [cid, sid], triangle: t });
            }
        }
    }

    let pattern = Pattern { connectors, segments, reduced: false };
    let report = pattern::validate(&pattern, cx);
    if !report.valid {
        return Err(Error::Property(format!(
            "resolved pattern failed validation:\n{}",
            report.display()
        )));
    }
    Ok(Resolution { phi: phi.clone(), pattern, chains, sources, on_edge, depth_tags, margin })
}

fn reversed(e: (u32, u32)) -> (u32, u32) {
    (e.1, e.0)
}

/// Frame words of a triangle: the identity, then the partial side-holonomy
/// products. Side `i` transports into the frame by `g_i` (even) or
/// `g_{i+1}` (odd).
fn triangle_frames(
    cx: &TwoComplex,
    t: u32,
    ball: Option<&crate::group::CayleyBall>,
) -> [Word; 4] {
    let sides = cx.sides(t);
    let g0 = Word::empty();
    let g1 = nf_word(ball, &g0.concat(&cx.holonomy(sides[0])));
    let g2 = nf_word(ball, &g1.concat(&cx.holonomy(sides[1])));
    let g3 = nf_word(ball, &g2.concat(&cx.holonomy(sides[2])));
    [g0, g1, g2, g3]
}

type FramedGroups = BTreeMap<(u32, u32), Vec<(u32, (u32, u32))>>;

/// Connectors of a triangle's sides, pushed into the common frame. Keyed by
/// the unoriented framed edge; each value records the frame-oriented source.
fn framed_groups(
    cx: &TwoComplex,
    t: u32,
    sources: &[Option<(u32, u32)>],
    on_edge: &[Vec<u32>],
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
) -> Result<FramedGroups> {
    let sides = cx.sides(t);
    let frames = triangle_frames(cx, t, ball);
    let bref = ball_ref(ball);
    let mut groups: FramedGroups = BTreeMap::new();
    for (i, &o) in sides.iter().enumerate() {
        let against = o & 1 == 1;
        let tau = if against { frames[i + 1].clone() } else { frames[i].clone() };
        let k = TwoComplex::unoriented(o) as usize;
        for &cid in &on_edge[k] {
            let (u, v) = sources[cid as usize].expect("edge connectors carry sources");
            let shift = |z: u32| -> Result<u32> {
                transport(space, bref.as_ref(), &tau, z)?.ok_or_else(|| {
                    Error::BallMargin(format!(
                        "frame of triangle {t} pushes a support vertex outside the ball"
                    ))
                })
            };
            let (fu, fv) = (shift(u)?, shift(v)?);
            let oriented = if against { (fv, fu) } else { (fu, fv) };
            let key = (oriented.0.min(oriented.1), oriented.0.max(oriented.1));
            groups.entry(key).or_default().push((cid, oriented));
        }
    }
    Ok(groups)
}

#[derive(Clone, Debug)]
pub struct ResolutionChecks {
    pub edges_checked: u32,
    pub order_pairs: u64,
    pub framed_groups: u64,
}

/// Recomputes everything the resolution claims: chains match the bicombing
/// in both directions, weights match coefficients, connector order follows
/// distance keys beyond the allowed slack, and segments match the framed
/// support comparison.
pub fn check_resolution(
    res: &Resolution,
    cx: &TwoComplex,
    b: &dyn Bicombing,
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
    slack: u32,
) -> Result<ResolutionChecks> {
    let bref = ball_ref(ball);
    let phi = &res.phi;

    for k in 0..cx.n_edges() {
        let o = TwoComplex::forward(k);
        let x = phi.images[cx.tail(o) as usize];
        let h = cx.holonomy(o);
        let y = transport(space, bref.as_ref(), &h, phi.images[cx.head(o) as usize])?
            .ok_or_else(|| Error::BallMargin(format!("edge {k} left the ball while rechecking")))?;
        if b.chain(x, y)? != res.chains[k as usize] {
            return Err(Error::Property(format!("stored chain of edge {k} is stale")));
        }

        let h_inv = cx.holonomy(TwoComplex::rev(o));
        let x2 = phi.images[cx.head(o) as usize];
        let y2 = transport(space, bref.as_ref(), &h_inv, phi.images[cx.tail(o) as usize])?
            .ok_or_else(|| Error::BallMargin(format!("edge {k} left the ball while rechecking")))?;
        let back = b.chain(x2, y2)?;
        let expected = res.chains[k as usize]
            .translate(|z| {
                transport(space, bref.as_ref(), &h_inv, z).ok().flatten()
            })
            .map(|c| c.neg());
        if expected.as_ref() != Some(&back) {
            return Err(Error::Property(format!(
                "edge {k}: chain along the reversed half-edge is not the translated negative"
            )));
        }
    }

    for (cid, src) in res.sources.iter().enumerate() {
        let Some((u, v)) = src else { continue };
        let ConnectorHost::Edge { edge, .. } = res.pattern.connectors[cid].host else {
            return Err(Error::Property(format!("connector {cid} carries a source but no edge")));
        };
        let c = res.chains[edge as usize].coefficient(*u, *v);
        if !c.is_positive() || c != res.pattern.connectors[cid].weight {
            return Err(Error::Property(format!(
                "connector {cid} weight {} disagrees with coefficient {}",
                rat_display(&res.pattern.connectors[cid].weight),
                rat_display(&c)
            )));
        }
    }

    let mut order_pairs = 0u64;
    for k in 0..cx.n_edges() as usize {
        let ids = &res.on_edge[k];
        if ids.len() < 2 {
            continue;
        }
        for (against, tau) in [
            (false, Word::empty()),
            (true, cx.holonomy(TwoComplex::rev(TwoComplex::forward(k as u32)))),
        ] {
            let o = TwoComplex::forward(k as u32) ^ u32::from(against);
            let x = phi.images[cx.tail(o) as usize];
            let from_x = space.graph.bfs_distances(x)?;
            let mut keys = Vec::with_capacity(ids.len());
            for &cid in ids {
                let (u, v) = res.sources[cid as usize].expect("edge connector");
                let shift = |z: u32| -> Result<u32> {
                    transport(space, bref.as_ref(), &tau, z)?.ok_or_else(|| {
                        Error::BallMargin("support left the ball while rechecking order".into())
                    })
                };
                let (fu, fv) = (shift(u)?, shift(v)?);
                let key = match (from_x[fu as usize], from_x[fv as usize]) {
                    (Some(a), Some(b)) => a.min(b),
                    _ => u32::MAX,
                };
                keys.push(key);
            }
            let pos = |i: usize| if against { ids.len() - 1 - i } else { i };
            for i in 0..keys.len() {
                for j in 0..keys.len() {
                    if keys[i].saturating_add(slack) < keys[j] {
                        order_pairs += 1;
                        if pos(i) >= pos(j) {
                            return Err(Error::Property(format!(
                                "edge {k}: connector order contradicts distance keys \
                                 ({} vs {}, slack {slack})",
                                keys[i], keys[j]
                            )));
                        }
                    }
                }
            }
        }
    }

    let mut framed = 0u64;
    for t in 0..cx.n_triangles() {
        let groups = framed_groups(cx, t, &res.sources, &res.on_edge, space, ball)?;
        framed += groups.len() as u64;

        let mut expect_regular: BTreeSet<(u32, u32)> = BTreeSet::new();
        let mut expect_singular: BTreeMap<u32, usize> = BTreeMap::new();
        for (_, entries) in groups {
            if entries.len() == 2 && entries[0].1 == reversed(entries[1].1) {
                let (a, b) = (entries[0].0, entries[1].0);
                expect_regular.insert((a.min(b), a.max(b)));
            } else {
                for (cid, _) in entries {
                    *expect_singular.entry(cid).or_insert(0) += 1;
                }
            }
        }

        let mut got_regular: BTreeSet<(u32, u32)> = BTreeSet::new();
        let mut got_singular: BTreeMap<u32, usize> = BTreeMap::new();
        for (si, s) in res.pattern.segments.iter().enumerate() {
            if s.triangle != t {
                continue;
            }
            if res.pattern.segment_is_singular(si) {
                let regular_end = s
                    .ends
                    .iter()
                    .copied()
                    .find(|&c| !res.pattern.connectors[c as usize].is_singular())
                    .ok_or_else(|| {
                        Error::Property(format!("segment {si} joins two singular connectors"))
                    })?;
                *got_singular.entry(regular_end).or_insert(0) += 1;
            } else {
                let (a, b) = (s.ends[0], s.ends[1]);
                got_regular.insert((a.min(b), a.max(b)));
            }
        }
        if expect_regular != got_regular || expect_singular != got_singular {
            return Err(Error::Property(format!(
                "triangle {t}: segments disagree with the framed support comparison"
            )));
        }
    }

    Ok(ResolutionChecks { edges_checked: cx.n_edges(), order_pairs, framed_groups: framed })
}

#[derive(Clone, Debug)]
pub struct TrackReport {
    pub n_tracks: usize,
    pub n_connectors: usize,
    pub n_segments: usize,
    pub max_track_len: usize,
    /// Greatest distance between framed source edges of distinct tracks
    /// meeting a common triangle or a common complex edge.
    pub t4_max: Option<u32>,
    pub t4_pairs: u64,
}

/// Hard embeddedness and translation-compatibility checks, plus the
/// finiteness and separation measurements.
pub fn track_checks(
    res: &Resolution,
    cx: &TwoComplex,
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
) -> Result<TrackReport> {
    let tracks = pattern::tracks(&res.pattern);
    let mut track_of = vec![usize::MAX; res.pattern.connectors.len()];
    for (ti, members) in tracks.iter().enumerate() {
        for &c in members {
            track_of[c as usize] = ti;
        }
    }

    for members in &tracks {
        let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
        for &c in members {
            if let ConnectorHost::Edge { edge, .. } = res.pattern.connectors[c as usize].host {
                let hits = seen.entry(edge).or_insert(0);
                *hits += 1;
                if *hits > 1 {
                    return Err(Error::Property(format!(
                        "track of connector {} meets edge {edge} twice; not embedded",
                        members[0]
                    )));
                }
            }
        }
    }

    for (si, s) in res.pattern.segments.iter().enumerate() {
        if res.pattern.segment_is_singular(si) {
            continue;
        }
        let groups = framed_groups(cx, s.triangle, &res.sources, &res.on_edge, space, ball)?;
        let mut key_of = BTreeMap::new();
        for (key, entries) in &groups {
            for (cid, _) in entries {
                key_of.insert(*cid, *key);
            }
        }
        if key_of.get(&s.ends[0]) != key_of.get(&s.ends[1]) {
            return Err(Error::Property(format!(
                "segment {si} joins connectors over different framed edges"
            )));
        }
    }

    for members in &tracks {
        let mut tag: Option<(u32, u32)> = None;
        for &c in members {
            let Some(t) = res.depth_tags[c as usize] else { continue };
            match tag {
                None => tag = Some(t),
                Some(prev) if prev != t => {
                    return Err(Error::Property(format!(
                        "track of connector {} mixes source depths {:?} and {:?}",
                        members[0], prev, t
                    )));
                }
                _ => {}
            }
        }
    }

    let mut cache: BTreeMap<u32, Vec<Option<u32>>> = BTreeMap::new();
    let mut edge_dist = |a: (u32, u32), b: (u32, u32)| -> Result<u32> {
        if !cache.contains_key(&a.0) {
            cache.insert(a.0, space.graph.bfs_distances(a.0)?);
        }
        if !cache.contains_key(&a.1) {
            cache.insert(a.1, space.graph.bfs_distances(a.1)?);
        }
        let mut best = u32::MAX;
        for s in [a.0, a.1] {
            let d = &cache[&s];
            for t in [b.0, b.1] {
                if let Some(x) = d[t as usize] {
                    best = best.min(x);
                }
            }
        }
        Ok(best)
    };

    let mut t4_max: Option<u32> = None;
    let mut t4_pairs = 0u64;
    let mut bump = |d: u32, pairs: &mut u64| {
        *pairs += 1;
        t4_max = Some(t4_max.map_or(d, |m| m.max(d)));
    };

    for t in 0..cx.n_triangles() {
        let groups = framed_groups(cx, t, &res.sources, &res.on_edge, space, ball)?;
        let mut rep: BTreeMap<usize, (u32, u32)> = BTreeMap::new();
        for (key, entries) in &groups {
            for (cid, _) in entries {
                rep.entry(track_of[*cid as usize]).or_insert(*key);
            }
        }
        let reps: Vec<_> = rep.values().copied().collect();
        for i in 0..reps.len() {
            for j in i + 1..reps.len() {
                bump(edge_dist(reps[i], reps[j])?, &mut t4_pairs);
            }
        }
    }
    for ids in &res.on_edge {
        for (ai, &a) in ids.iter().enumerate() {
            for &b in &ids[ai + 1..] {
                if track_of[a as usize] == track_of[b as usize] {
                    continue;
                }
                let (sa, sb) = (res.sources[a as usize].unwrap(), res.sources[b as usize].unwrap());
                let norm = |e: (u32, u32)| (e.0.min(e.1), e.0.max(e.1));
                bump(edge_dist(norm(sa), norm(sb))?, &mut t4_pairs);
            }
        }
    }

    Ok(TrackReport {
        n_tracks: tracks.len(),
        n_connectors: res.pattern.connectors.len(),
        n_segments: res.pattern.segments.len(),
        max_track_len: tracks.iter().map(Vec::len).max().unwrap_or(0),
        t4_max,
        t4_pairs,
    })
}

/// Restricts to the tracks whose source depth stays within `r`. Whole tracks
/// are kept or dropped, so the result is again a valid pattern and its
/// weight is monotone in `r`.
pub fn filter_tracks(res: &Resolution, r: u32) -> Result<(Pattern, Rat)> {
    let tracks = pattern::tracks(&res.pattern);
    let mut keep_connector = vec![false; res.pattern.connectors.len()];
    for members in &tracks {
        let mut depth: Option<(u32, u32)> = None;
        for &c in members {
            let Some(t) = res.depth_tags[c as usize] else { continue };
            match depth {
                None => depth = Some(t),
                Some(prev) if prev != t => {
                    return Err(Error::Property(format!(
                        "track of connector {} has mixed source depths; filter refused",
                        members[0]
                    )));
                }
                _ => {}
            }
        }
        let max_depth = depth.map_or(0, |(_, hi)| hi);
        if max_depth <= r {
            for &c in members {
                keep_connector[c as usize] = true;
            }
        }
    }

    let mut remap = vec![u32::MAX; res.pattern.connectors.len()];
    let mut connectors = Vec::new();
    for (i, c) in res.pattern.connectors.iter().enumerate() {
        if keep_connector[i] {
            remap[i] = connectors.len() as u32;
            connectors.push(c.clone());
        }
    }
    let mut segments = Vec::new();
    for s in &res.pattern.segments {
        let (a, b) = (s.ends[0] as usize, s.ends[1] as usize);
        debug_assert_eq!(keep_connector[a], keep_connector[b]);
        if keep_connector[a] && keep_connector[b] {
            segments.push(Segment { ends: [remap[a], remap[b]], triangle: s.triangle });
        }
    }
    let filtered = Pattern { connectors, segments, reduced: res.pattern.reduced };
    let w = pattern::weight_total(&filtered);
    Ok((filtered, w))
}

#[derive(Clone, Debug)]
pub struct MinimizeOutcome {
    pub phi: VertexMap,
    pub displacement: u64,
    pub sweeps: u64,
    /// True when the last sweep moved nothing: a certified local minimum.
    pub converged: bool,
}

/// Greedy local search over depth-0 images: sweep vertices in id order and
/// take the best strictly improving neighbor move, until stable or out of
/// budget.
pub fn minimize_displacement(
    cx: &TwoComplex,
    phi0: &VertexMap,
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
    budget: u64,
) -> Result<MinimizeOutcome> {
    let bref = ball_ref(ball);
    let n = cx.n_vertices() as usize;
    if phi0.images.len() != n {
        return Err(Error::Input("vertex map does not cover the complex".into()));
    }

    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n];
    for k in 0..cx.n_edges() {
        let o = TwoComplex::forward(k);
        incident[cx.tail(o) as usize].push(k);
        if cx.head(o) != cx.tail(o) {
            incident[cx.head(o) as usize].push(k);
        }
    }

    let mut cache: BTreeMap<u32, Vec<Option<u32>>> = BTreeMap::new();
    let mut dist = |s: u32, t: u32| -> Result<Option<u64>> {
        if !cache.contains_key(&s) {
            cache.insert(s, space.graph.bfs_distances(s)?);
        }
        Ok(cache[&s][t as usize].map(u64::from))
    };

    let mut images = phi0.images.clone();
    let mut edge_term = |images: &[u32], k: u32, at: u32, img: u32| -> Result<Option<u64>> {
        let o = TwoComplex::forward(k);
        let (tl, hd) = (cx.tail(o), cx.head(o));
        let x = if tl == at { img } else { images[tl as usize] };
        let y0 = if hd == at { img } else { images[hd as usize] };
        let h = cx.holonomy(o);
        let Some(y) = transport(space, bref.as_ref(), &h, y0)? else {
            return Ok(None);
        };
        dist(x, y)?.map_or(Ok(None), |d| Ok(Some(d)))
    };

    let mut total = 0u64;
    for k in 0..cx.n_edges() {
        let at = cx.tail(TwoComplex::forward(k));
        total += edge_term(&images, k, at, images[at as usize])?.ok_or_else(|| {
            Error::BallMargin(format!(
                "edge {k} cannot transport its holonomy from the seed map; increase the ball radius"
            ))
        })?;
    }

    let local = |images: &[u32],
                 edge_term: &mut dyn FnMut(&[u32], u32, u32, u32) -> Result<Option<u64>>,
                 v: u32,
                 img: u32|
     -> Result<Option<u64>> {
        let mut sum = 0u64;
        for &k in &incident[v as usize] {
            match edge_term(images, k, v, img)? {
                Some(d) => sum += d,
                None => return Ok(None),
            }
        }
        Ok(Some(sum))
    };

    let mut sweeps = 0u64;
    let mut converged = false;
    while sweeps < budget {
        let mut moved = false;
        for v in 0..n as u32 {
            let cur = images[v as usize];
            let mut best = cur;
            let mut best_cost = local(&images, &mut edge_term, v, cur)?
                .expect("current map stays feasible");
            for &cand in space.graph.neighbors(cur) {
                if space.depth[cand as usize] != 0 {
                    continue;
                }
                if let Some(cost) = local(&images, &mut edge_term, v, cand)? {
                    if cost < best_cost {
                        best = cand;
                        best_cost = cost;
                    }
                }
            }
            if best != cur {
                images[v as usize] = best;
                moved = true;
            }
        }
        sweeps += 1;
        if !moved {
            converged = true;
            break;
        }
    }

    let mut final_total = 0u64;
    for k in 0..cx.n_edges() {
        let at = cx.tail(TwoComplex::forward(k));
        final_total += edge_term(&images, k, at, images[at as usize])?
            .expect("moves preserve feasibility");
    }
    debug_assert!(final_total <= total || budget == 0);

    Ok(MinimizeOutcome {
        phi: VertexMap { images },
        displacement: final_total,
        sweeps,
        converged,
    })
}

#[derive(Clone, Debug)]
pub struct CoverageReport {
    pub radius: u32,
    pub flagged: bool,
    pub tested: usize,
    pub image_size: usize,
}

/// How far the margin-interior base vertices are from the image of the
/// resolved 1-skeleton. A resolution with no connectors is degenerate and
/// reported at the full ball radius.
pub fn coverage_radius(
    res: &Resolution,
    space: &CuspedSpace,
    ball: Option<&crate::group::CayleyBall>,
    margin: u32,
) -> Result<CoverageReport> {
    let mut image: BTreeSet<u32> = res.phi.images.iter().copied().collect();
    let mut have_support = false;
    for src in res.sources.iter().flatten() {
        have_support = true;
        image.insert(src.0);
        image.insert(src.1);
    }

    let bd = boundary_distances(space, ball);
    let tested: Vec<u32> =
        (0..space.base_size).filter(|&v| bd[v as usize] >= margin).collect();

    if !have_support || tested.is_empty() {
        let radius = ball.map_or(space.max_depth, |b| b.radius);
        return Ok(CoverageReport { radius, flagged: true, tested: tested.len(), image_size: image.len() });
    }

    let seeds: Vec<u32> = image.iter().copied().collect();
    let dist = space.graph.bfs_multi(&seeds);
    let mut radius = 0u32;
    for &v in &tested {
        match dist[v as usize] {
            Some(d) => radius = radius.max(d),
            None => {
                return Ok(CoverageReport {
                    radius: ball.map_or(space.max_depth, |b| b.radius),
                    flagged: true,
                    tested: tested.len(),
                    image_size: image.len(),
                })
            }
        }
    }
    Ok(CoverageReport { radius, flagged: false, tested: tested.len(), image_size: image.len() })
}

#[derive(Clone, Debug)]
pub struct UpperBoundRecord {
    pub w: Rat,
    pub vol: u64,
    pub w_over_vol: Rat,
    pub reduced_w: Rat,
    pub defect: Rat,
}

/// Filtered pattern weight against the complex volume, with the reduction
/// inequality exercised on the way.
pub fn upper_bound_check(res: &Resolution, cx: &TwoComplex, r: u32) -> Result<UpperBoundRecord> {
    let (filtered, w) = filter_tracks(res, r)?;
    let defect = pattern::defect_total(&filtered);
    let (_, reduced_w) = pattern::perfect_reduce(&filtered, cx)?;
    let vol = cx.vol();
    if vol == 0 {
        return Err(Error::Input("complex has zero volume".into()));
    }
    let w_over_vol = &w / rat_int(vol as i64);
    Ok(UpperBoundRecord { w, vol, w_over_vol, reduced_w, defect })
}

#[derive(Clone, Debug)]
pub struct LowerBoundCertificate {
    /// Selected pairwise-separated cosets, in selection order.
    pub centers: Vec<u32>,
    /// (coset, track id) pairs of the greedy matching.
    pub matched: Vec<(u32, usize)>,
    pub bound: Rat,
    /// Weight of the pattern filtered at the window depth.
    pub w_window: Rat,
}

/// Greedy packing of separated Schreier balls, each matched to a distinct
/// heavy track nearby; sound counting gives `matched / lambda <= w`.
pub fn lower_bound_certificate(
    rec: &SubgroupRecord,
    res: &Resolution,
    space: &CuspedSpace,
    ball: &crate::group::CayleyBall,
    r0: u32,
    rho: u32,
    lambda: &Rat,
) -> Result<LowerBoundCertificate> {
    if !lambda.is_positive() {
        return Err(Error::Input("lambda must be positive".into()));
    }
    let n = rec.index as usize;
    let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for c in 0..n as u32 {
        for col in &rec.table[c as usize] {
            if *col != c {
                adj[c as usize].insert(*col);
                adj[*col as usize].insert(c);
            }
        }
    }
    let schreier_dist = |src: u32| -> Vec<u32> {
        let mut d = vec![u32::MAX; n];
        d[src as usize] = 0;
        let mut q = std::collections::VecDeque::from([src]);
        while let Some(c) = q.pop_front() {
            for &nb in &adj[c as usize] {
                if d[nb as usize] == u32::MAX {
                    d[nb as usize] = d[c as usize] + 1;
                    q.push_back(nb);
                }
            }
        }
        d
    };

    let mut centers: Vec<u32> = Vec::new();
    let mut dists: Vec<Vec<u32>> = Vec::new();
    for c in 0..rec.index {
        if dists.iter().all(|d| d[c as usize] > 2 * r0) {
            dists.push(schreier_dist(c));
            centers.push(c);
        }
    }

    let mut lift: Vec<Option<u32>> = vec![None; n];
    for v in 0..space.base_size {
        let c = rec.act_word(0, ball.word_of(v)) as usize;
        if lift[c].is_none() {
            lift[c] = Some(v);
        }
    }

    let tracks = pattern::tracks(&res.pattern);
    let threshold = rat_one() / lambda.clone();
    let mut track_info: Vec<Option<(u32, Vec<u32>)>> = Vec::with_capacity(tracks.len());
    for members in &tracks {
        let mut weight = rat_int(0);
        let mut depth_max = 0u32;
        let mut endpoints = Vec::new();
        for &c in members {
            let w = &res.pattern.connectors[c as usize].weight;
            if *w > weight {
                weight = w.clone();
            }
            if let Some((_, hi)) = res.depth_tags[c as usize] {
                depth_max = depth_max.max(hi);
            }
            if let Some((u, v)) = res.sources[c as usize] {
                endpoints.push(u);
                endpoints.push(v);
            }
        }
        if weight >= threshold && depth_max <= r0 {
            track_info.push(Some((depth_max, endpoints)));
        } else {
            track_info.push(None);
        }
    }

    let mut used = vec![false; tracks.len()];
    let mut matched = Vec::new();
    for &c in &centers {
        let Some(center_vertex) = lift[c as usize] else { continue };
        let reach = space.graph.bfs_distances(center_vertex)?;
        let near = |v: u32| matches!(reach[v as usize], Some(d) if d <= r0 + rho);
        let pick = track_info.iter().enumerate().find(|(ti, info)| {
            !used[*ti]
                && info
                    .as_ref()
                    .is_some_and(|(_, endpoints)| endpoints.iter().any(|&v| near(v)))
        });
        if let Some((ti, _)) = pick {
            used[ti] = true;
            matched.push((c, ti));
        }
    }

    let bound = rat_int(matched.len() as i64) / lambda.clone();
    let (_, w_window) = filter_tracks(res, r0)?;
    if bound > w_window {
        return Err(Error::Property(format!(
            "certificate bound {} exceeds the window weight {}; counting is unsound",
            rat_display(&bound),
            rat_display(&w_window)
        )));
    }
    Ok(LowerBoundCertificate { centers, matched, bound, w_window })
}

/// Complex whose edges are exactly the ball's edges with trivial holonomy,
/// together with the identity vertex map. The reference coverage fixture.
pub fn ball_one_skeleton(ball: &crate::group::CayleyBall) -> (TwoComplex, VertexMap) {
    let edges = ball
        .graph
        .edges()
        .iter()
        .map(|&(u, v)| (u, v, Word::empty()))
        .collect();
    let cx = TwoComplex::new(ball.graph.n_vertices() as u32, edges, vec![])
        .expect("ball graph is a simple complex");
    let phi = VertexMap { images: (0..ball.graph.n_vertices() as u32).collect() };
    (cx, phi)
}

#[derive(Clone, Debug)]
pub struct SurveyConfig {
    pub ball_radius: u32,
    pub max_depth: Option<u32>,
    /// Track-depth filter for the reported weight.
    pub filter_r: u32,
    /// Window radius for the lower-bound certificate.
    pub r0: u32,
    /// Mass radius; `None` takes the measured value from the axiom suite.
    pub rho: Option<u32>,
    pub margin: u32,
    pub sweep_budget: u64,
    pub enum_budget: u64,
    /// Sampler caps; zero pairs means exhaustive.
    pub max_pairs: usize,
    pub max_triples: usize,
    pub seed: u64,
    pub jobs: usize,
}

#[derive(Clone, Debug)]
pub struct SurveyRow {
    pub index: u32,
    pub vol: u64,
    pub w_leq_r: Rat,
    pub lower_bound: Rat,
    pub w_over_index: Rat,
    pub vol_over_index: Rat,
    pub coverage_r: u32,
    pub displacement: u64,
    pub converged: bool,
    pub t4_max: Option<u32>,
    pub flags: String,
}

#[derive(Clone, Debug)]
pub struct Survey {
    pub rows: Vec<SurveyRow>,
    pub constants: BicombingConstants,
    pub rho_used: u32,
    pub lambda: Rat,
    /// (min, max) of w/[G:H] over clean rows.
    pub band: Option<(Rat, Rat)>,
    pub vol_over_index_constant: bool,
}

/// Complex a pair resolves against: the subdivided wedge for free
/// presentations, the presentation complex otherwise.
pub fn base_complex(pair: &GroupPair) -> Result<TwoComplex> {
    if pair.presentation.relators.is_empty() {
        Ok(subdivided_wedge(pair.presentation.n_gens()))
    } else {
        presentation_complex(&pair.presentation)
    }
}

/// Resolves every subgroup up to the index bound over one shared cusped
/// space and reports normalized weights, bounds, and coverage per row.
/// Rows that fail are flagged and the survey continues.
pub fn rigidity_survey(pair: &GroupPair, max_index: u32, cfg: &SurveyConfig) -> Result<Survey> {
    let (ball, space) = cusped_from_pair(pair, cfg.ball_radius, cfg.max_depth)?;
    let b = GeodesicBicombing::over(&space);
    let ctx = TranslationContext::new(&space, &ball, pair.presentation.n_gens());
    let sampler = if cfg.max_pairs == 0 {
        Sampler::exhaustive()
    } else {
        Sampler::random(cfg.max_pairs, cfg.max_triples, cfg.seed)
    };
    let constants = axiom_suite(&b, Some(&ctx), &sampler)?;

    let rho_used = cfg.rho.unwrap_or(constants.rho);
    let lambda = if rho_used == constants.rho {
        constants.lambda.clone()
    } else {
        let n = space.graph.n_vertices() as u32;
        let triples: Vec<(u32, u32, u32)> = sampler
            .triples(n)
            .into_iter()
            .filter_map(|(x, y, z)| {
                if x == z || y == z {
                    return None;
                }
                let dx = space.graph.bfs_distances(x).ok()?;
                let dz = space.graph.bfs_distances(z).ok()?;
                let on = dx[z as usize]?.checked_add(dz[y as usize]?)? == dx[y as usize]?;
                on.then_some((x, y, z))
            })
            .collect();
        lambda_constant(&b, rho_used, &triples)?
    };

    let base = base_complex(pair)?;
    let recs = enumerate_subgroups(pair, max_index, cfg.enum_budget)?;

    let slots: Vec<Mutex<Option<SurveyRow>>> = recs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let jobs = cfg.jobs.max(1);

    let row_for = |rec: &SubgroupRecord| -> SurveyRow {
        match survey_row(rec, pair, &base, &b, &space, &ball, cfg, rho_used, &lambda) {
            Ok(row) => row,
            Err(e) => SurveyRow {
                index: rec.index,
                vol: 0,
                w_leq_r: rat_int(0),
                lower_bound: rat_int(0),
                w_over_index: rat_int(0),
                vol_over_index: rat_int(0),
                coverage_r: 0,
                displacement: 0,
                converged: false,
                t4_max: None,
                flags: format!("error: {e}"),
            },
        }
    };

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= recs.len() {
                    break;
                }
                let row = row_for(&recs[i]);
                *slots[i].lock().expect("row slot") = Some(row);
            });
        }
    });

    let rows: Vec<SurveyRow> = slots
        .into_iter()
        .map(|s| s.into_inner().expect("row slot").expect("row computed"))
        .collect();

    let clean: Vec<&SurveyRow> = rows.iter().filter(|r| !r.flags.starts_with("error")).collect();
    let band = clean
        .iter()
        .map(|r| r.w_over_index.clone())
        .fold(None::<(Rat, Rat)>, |acc, w| match acc {
            None => Some((w.clone(), w)),
            Some((lo, hi)) => Some((lo.min(w.clone()), hi.max(w))),
        });
    let vol_over_index_constant = clean
        .windows(2)
        .all(|pair| pair[0].vol_over_index == pair[1].vol_over_index);

    Ok(Survey { rows, constants, rho_used, lambda, band, vol_over_index_constant })
}

#[allow(clippy::too_many_arguments)]
fn survey_row(
    rec: &SubgroupRecord,
    pair: &GroupPair,
    base: &TwoComplex,
    b: &dyn Bicombing,
    space: &CuspedSpace,
    ball: &crate::group::CayleyBall,
    cfg: &SurveyConfig,
    rho: u32,
    lambda: &Rat,
) -> Result<SurveyRow> {
    induced_peripherals(rec, pair, cfg.ball_radius)?;
    let cov = cover(base, rec, pair)?;
    let cx = &cov.complex;
    let phi0 = VertexMap { images: rep_vertex_map(&cov, rec, ball)? };
    let min = minimize_displacement(cx, &phi0, space, Some(ball), cfg.sweep_budget)?;
    let res = resolve(cx, &min.phi, b, space, Some(ball), cfg.margin)?;
    check_resolution(&res, cx, b, space, Some(ball), 0)?;
    let tracks = track_checks(&res, cx, space, Some(ball))?;
    let upper = upper_bound_check(&res, cx, cfg.filter_r)?;
    let cert = lower_bound_certificate(rec, &res, space, ball, cfg.r0, rho, lambda)?;
    let coverage = coverage_radius(&res, space, Some(ball), cfg.margin)?;

    let mut flags = Vec::new();
    if !min.converged {
        flags.push("unconverged".to_string());
    }
    if coverage.flagged {
        flags.push("coverage-degenerate".to_string());
    }

    let idx = rat_int(rec.index as i64);
    Ok(SurveyRow {
        index: rec.index,
        vol: upper.vol,
        w_leq_r: upper.w.clone(),
        lower_bound: cert.bound,
        w_over_index: &upper.w / &idx,
        vol_over_index: rat_int(upper.vol as i64) / idx,
        coverage_r: coverage.radius,
        displacement: min.displacement,
        converged: min.converged,
        t4_max: tracks.t4_max,
        flags: flags.join(";"),
    })
}

pub fn survey_csv(survey: &Survey) -> String {
    let mut out =
        String::from("index,vol,w_leq_R,lower_bound,w_over_index,vol_over_index,coverage_R,flags\n");
    for r in &survey.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.index,
            r.vol,
            rat_display(&r.w_leq_r),
            rat_display(&r.lower_bound),
            rat_display(&r.w_over_index),
            rat_display(&r.vol_over_index),
            r.coverage_r,
            r.flags
        ));
    }
    out
}

use crate::group::GroupPair;
