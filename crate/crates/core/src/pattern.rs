//! Weighted singular patterns on 2-complexes: connectors on edges or in
//! triangle interiors, segments across triangles, tracks as connected
//! components, and the weight/defect functionals with perfect reduction.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex2::TwoComplex;
use crate::error::{Error, Result};
use crate::rat::{rat_abs, rat_display, rat_to_f64, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConnectorHost {
    /// Regular: interior point of an edge, position strictly in (0,1)
    /// measured along the even orientation.
    Edge { edge: u32, position: Rat },
    /// Singular: a point in a triangle's interior. Slots keep several such
    /// points distinct.
    Interior { triangle: u32, slot: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connector {
    pub host: ConnectorHost,
    pub weight: Rat,
}

impl Connector {
    pub fn is_singular(&self) -> bool {
        matches!(self.host, ConnectorHost::Interior { .. })
    }

    pub fn kind(&self) -> &'static str {
        if self.is_singular() {
            "singular"
        } else {
            "regular"
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub ends: [u32; 2],
    pub triangle: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub connectors: Vec<Connector>,
    pub segments: Vec<Segment>,
    /// Reduced patterns may orphan connectors inside triangles; the
    /// one-segment-per-triangle condition is not required of them.
    pub reduced: bool,
}

impl Pattern {
    pub fn empty() -> Pattern {
        Pattern { connectors: Vec::new(), segments: Vec::new(), reduced: false }
    }

    pub fn segment_is_singular(&self, s: usize) -> bool {
        self.segments[s].ends.iter().any(|&c| self.connectors[c as usize].is_singular())
    }

    pub fn scale_weights(&self, s: &Rat) -> Pattern {
        let connectors = self
            .connectors
            .iter()
            .map(|c| Connector { host: c.host.clone(), weight: &c.weight * s })
            .collect();
        Pattern { connectors, segments: self.segments.clone(), reduced: self.reduced }
    }
}

#[derive(Clone, Debug)]
pub struct ValidationItem {
    pub condition: u8,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub items: Vec<ValidationItem>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn display(&self) -> String {
        let mut s = String::new();
        for it in &self.items {
            let _ = writeln!(
                s,
                "condition {}: {} {}",
                it.condition,
                if it.ok { "pass" } else { "FAIL" },
                it.detail
            );
        }
        s
    }
}

fn item(condition: u8, witnesses: Vec<String>, pass_note: &str) -> ValidationItem {
    if witnesses.is_empty() {
        ValidationItem { condition, ok: true, detail: pass_note.to_string() }
    } else {
        ValidationItem { condition, ok: false, detail: witnesses.join("; ") }
    }
}

/// Checks the four pattern conditions against the hosting complex and
/// reports each with witnesses. Never fails; reduced patterns skip the
/// one-segment-per-triangle condition.
pub fn validate(p: &Pattern, cx: &TwoComplex) -> ValidationReport {
    let mut c1 = Vec::new();
    let mut seen_edge: BTreeMap<u32, Vec<&Rat>> = BTreeMap::new();
    let mut seen_slot: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (i, c) in p.connectors.iter().enumerate() {
        if c.weight.is_negative() {
            c1.push(format!("connector {i} has negative weight"));
        }
        match &c.host {
            ConnectorHost::Edge { edge, position } => {
                if *edge >= cx.n_edges() {
                    c1.push(format!("connector {i} sits on missing edge {edge}"));
                    continue;
                }
                if !(position > &Rat::zero() && position < &Rat::from_integer(1.into())) {
                    c1.push(format!(
                        "connector {i} position {} outside (0,1)",
                        rat_display(position)
                    ));
                }
                let ps = seen_edge.entry(*edge).or_default();
                if ps.contains(&position) {
                    c1.push(format!("edge {edge} has two connectors at {}", rat_display(position)));
                }
                ps.push(position);
            }
            ConnectorHost::Interior { triangle, slot } => {
                if *triangle >= cx.n_triangles() {
                    c1.push(format!("connector {i} sits in missing triangle {triangle}"));
                    continue;
                }
                if !c.weight.is_zero() {
                    c1.push(format!("singular connector {i} has nonzero weight"));
                }
                if let Some(j) = seen_slot.insert((*triangle, *slot), i) {
                    c1.push(format!(
                        "connectors {j} and {i} share interior slot {slot} of triangle {triangle}"
                    ));
                }
            }
        }
    }

    let mut c2 = Vec::new();
    for (s, seg) in p.segments.iter().enumerate() {
        if seg.triangle >= cx.n_triangles() {
            c2.push(format!("segment {s} hosted in missing triangle {}", seg.triangle));
            continue;
        }
        if seg.ends[0] == seg.ends[1] {
            c2.push(format!("segment {s} joins a connector to itself"));
        }
        let sides: Vec<u32> = cx.sides(seg.triangle).iter().map(|&o| o >> 1).collect();
        let mut singular_ends = 0;
        for &e in &seg.ends {
            let Some(c) = p.connectors.get(e as usize) else {
                c2.push(format!("segment {s} references missing connector {e}"));
                continue;
            };
            match &c.host {
                ConnectorHost::Edge { edge, .. } => {
                    if !sides.contains(edge) {
                        c2.push(format!(
                            "segment {s} endpoint {e} lies on edge {edge}, not a side of triangle {}",
                            seg.triangle
                        ));
                    }
                }
                ConnectorHost::Interior { triangle, .. } => {
                    singular_ends += 1;
                    if *triangle != seg.triangle {
                        c2.push(format!(
                            "segment {s} endpoint {e} is interior to triangle {triangle}, hosted in {}",
                            seg.triangle
                        ));
                    }
                }
            }
        }
        if singular_ends == 2 {
            c2.push(format!("segment {s} joins two singular connectors"));
        }
    }

    let c3 = ValidationItem {
        condition: 3,
        ok: true,
        detail: format!("{} connectors, {} segments", p.connectors.len(), p.segments.len()),
    };

    let mut c4 = Vec::new();
    if p.reduced {
        // checked only on unreduced patterns
    } else if c1.is_empty() && c2.is_empty() {
        let mut per: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for seg in &p.segments {
            for &e in &seg.ends {
                *per.entry((e, seg.triangle)).or_insert(0) += 1;
            }
        }
        for (i, c) in p.connectors.iter().enumerate() {
            let triangles: Vec<u32> = match &c.host {
                ConnectorHost::Edge { edge, .. } => {
                    cx.triangles_of(*edge).iter().map(|&(t, _)| t).collect()
                }
                ConnectorHost::Interior { triangle, .. } => vec![*triangle],
            };
            for t in triangles {
                let n = per.get(&(i as u32, t)).copied().unwrap_or(0);
                if n != 1 {
                    c4.push(format!(
                        "connector {i} has {n} segments in triangle {t}, wants exactly 1"
                    ));
                }
            }
        }
    } else {
        c4.push("skipped: conditions 1 or 2 already failed".to_string());
    }

    let items = vec![
        item(1, c1, "hosts well formed"),
        item(2, c2, "segments well formed"),
        c3,
        if p.reduced {
            ValidationItem { condition: 4, ok: true, detail: "skipped on reduced pattern".into() }
        } else {
            item(4, c4, "one segment per connector per triangle")
        },
    ];
    let valid = items.iter().all(|i| i.ok);
    ValidationReport { items, valid }
}

/// Connected components of the pattern, each sorted, listed by least
/// connector id. Assumes segment endpoints are in range.
pub fn tracks(p: &Pattern) -> Vec<Vec<u32>> {
    let n = p.connectors.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for seg in &p.segments {
        let (a, b) = (find(&mut parent, seg.ends[0]), find(&mut parent, seg.ends[1]));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi as usize] = lo;
        }
    }
    let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for i in 0..n as u32 {
        groups.entry(find(&mut parent, i)).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Sum over tracks of the largest connector weight in the track.
pub fn weight_total(p: &Pattern) -> Rat {
    tracks(p)
        .iter()
        .map(|t| {
            t.iter().map(|&c| p.connectors[c as usize].weight.clone()).max().unwrap_or_else(Rat::zero)
        })
        .sum()
}

/// Sum over segments of the weight gap between their endpoints.
pub fn defect_total(p: &Pattern) -> Rat {
    p.segments
        .iter()
        .map(|s| {
            rat_abs(
                &(&p.connectors[s.ends[0] as usize].weight
                    - &p.connectors[s.ends[1] as usize].weight),
            )
        })
        .sum()
}

/// Deletes singular connectors with their segments, levels every surviving
/// track at the minimum weight it carried, and renormalizes positions. The
/// weight inequality w <= w' + df is asserted per original track; a
/// violation reports the track as a witness instead of returning a wrong
/// reduction.
pub fn perfect_reduce(p: &Pattern, cx: &TwoComplex) -> Result<(Pattern, Rat)> {
    let w_before = weight_total(p);
    let df_before = defect_total(p);

    let mut keep = Vec::new();
    let mut remap = vec![u32::MAX; p.connectors.len()];
    for (i, c) in p.connectors.iter().enumerate() {
        if !c.is_singular() {
            remap[i] = keep.len() as u32;
            keep.push(i as u32);
        }
    }
    let segments: Vec<Segment> = p
        .segments
        .iter()
        .filter(|s| s.ends.iter().all(|&e| remap[e as usize] != u32::MAX))
        .map(|s| Segment {
            ends: [remap[s.ends[0] as usize], remap[s.ends[1] as usize]],
            triangle: s.triangle,
        })
        .collect();
    let mut connectors: Vec<Connector> =
        keep.iter().map(|&i| p.connectors[i as usize].clone()).collect();

    let mut reduced = Pattern { connectors: connectors.clone(), segments, reduced: true };
    let mut level: Vec<Rat> = vec![Rat::zero(); connectors.len()];
    for track in tracks(&reduced) {
        let min = track
            .iter()
            .map(|&c| p.connectors[keep[c as usize] as usize].weight.clone())
            .min()
            .unwrap_or_else(Rat::zero);
        for &c in &track {
            level[c as usize] = min.clone();
        }
    }
    for (c, w) in connectors.iter_mut().zip(&level) {
        if &c.weight < w {
            return Err(Error::Property(format!(
                "reduction raised a connector weight from {} to {}",
                rat_display(&c.weight),
                rat_display(w)
            )));
        }
        c.weight = w.clone();
    }
    reduced.connectors = connectors;
    renormalize_positions(&mut reduced, cx);

    let w_after = weight_total(&reduced);
    if &w_after + &df_before < w_before {
        let witness = tracks(p)
            .into_iter()
            .find(|t| {
                let max = t
                    .iter()
                    .map(|&c| p.connectors[c as usize].weight.clone())
                    .max()
                    .unwrap_or_else(Rat::zero);
                let survivors: Rat = tracks(&reduced)
                    .iter()
                    .filter(|t2| t2.iter().any(|&c| t.contains(&keep[c as usize])))
                    .map(|t2| level[t2[0] as usize].clone())
                    .sum();
                let df: Rat = p
                    .segments
                    .iter()
                    .filter(|s| t.contains(&s.ends[0]))
                    .map(|s| {
                        rat_abs(
                            &(&p.connectors[s.ends[0] as usize].weight
                                - &p.connectors[s.ends[1] as usize].weight),
                        )
                    })
                    .sum();
                max > survivors + df
            })
            .map(|t| format!("{t:?}"))
            .unwrap_or_else(|| "no single track isolates it".to_string());
        return Err(Error::Property(format!(
            "reduction lost too much weight: {} > {} + {}; witness track {witness}",
            rat_display(&w_before),
            rat_display(&w_after),
            rat_display(&df_before)
        )));
    }

    Ok((reduced, w_after))
}

/// Respaces connectors on every edge to i/(n+1) keeping their order.
fn renormalize_positions(p: &mut Pattern, cx: &TwoComplex) {
    for edge in 0..cx.n_edges() {
        let mut on_edge: Vec<(Rat, usize)> = p
            .connectors
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match &c.host {
                ConnectorHost::Edge { edge: e, position } if *e == edge => {
                    Some((position.clone(), i))
                }
                _ => None,
            })
            .collect();
        on_edge.sort();
        let n = on_edge.len() as i64;
        for (rank, (_, i)) in on_edge.into_iter().enumerate() {
            let fresh = Rat::new((rank as i64 + 1).into(), (n + 1).into());
            if let ConnectorHost::Edge { position, .. } = &mut p.connectors[i].host {
                *position = fresh;
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HostDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    position: Option<(i64, i64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    triangle: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slot: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct ConnectorDoc {
    host: HostDoc,
    weight: (i64, i64),
}

#[derive(Serialize, Deserialize)]
struct SegmentDoc {
    ends: (u32, u32),
    triangle: u32,
}

#[derive(Serialize, Deserialize)]
struct PatternDoc {
    reduced: bool,
    connectors: Vec<ConnectorDoc>,
    segments: Vec<SegmentDoc>,
}

fn rat_pair(r: &Rat) -> Result<(i64, i64)> {
    let wide = num::ToPrimitive::to_i64;
    match (wide(r.numer()), wide(r.denom())) {
        (Some(num), Some(den)) => Ok((num, den)),
        _ => Err(Error::Input(format!(
            "rational {} overflows the pattern schema",
            rat_display(r)
        ))),
    }
}

fn pair_rat(p: (i64, i64)) -> Result<Rat> {
    if p.1 == 0 {
        return Err(Error::Input("zero denominator in pattern".to_string()));
    }
    Ok(Rat::new(p.0.into(), p.1.into()))
}

pub fn to_json(p: &Pattern) -> Result<String> {
    let mut connectors = Vec::with_capacity(p.connectors.len());
    for c in &p.connectors {
        let host = match &c.host {
            ConnectorHost::Edge { edge, position } => HostDoc {
                kind: "edge".into(),
                edge: Some(*edge),
                position: Some(rat_pair(position)?),
                triangle: None,
                slot: None,
            },
            ConnectorHost::Interior { triangle, slot } => HostDoc {
                kind: "interior".into(),
                edge: None,
                position: None,
                triangle: Some(*triangle),
                slot: Some(*slot),
            },
        };
        connectors.push(ConnectorDoc { host, weight: rat_pair(&c.weight)? });
    }
    let segments = p
        .segments
        .iter()
        .map(|s| SegmentDoc { ends: (s.ends[0], s.ends[1]), triangle: s.triangle })
        .collect();
    let doc = PatternDoc { reduced: p.reduced, connectors, segments };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> Result<Pattern> {
    let doc: PatternDoc = serde_json::from_str(text)?;
    let mut connectors = Vec::with_capacity(doc.connectors.len());
    for c in doc.connectors {
        let host = match c.host.kind.as_str() {
            "edge" => {
                let edge = c.host.edge.ok_or_else(|| Error::Input("edge host without edge".into()))?;
                let position = pair_rat(
                    c.host.position.ok_or_else(|| Error::Input("edge host without position".into()))?,
                )?;
                ConnectorHost::Edge { edge, position }
            }
            "interior" => {
                let triangle = c
                    .host
                    .triangle
                    .ok_or_else(|| Error::Input("interior host without triangle".into()))?;
                ConnectorHost::Interior { triangle, slot: c.host.slot.unwrap_or(0) }
            }
            other => return Err(Error::Input(format!("unknown connector host kind {other:?}"))),
        };
        connectors.push(Connector { host, weight: pair_rat(c.weight)? });
    }
    let segments = doc
        .segments
        .into_iter()
        .map(|s| Segment { ends: [s.ends.0, s.ends.1], triangle: s.triangle })
        .collect();
    Ok(Pattern { connectors, segments, reduced: doc.reduced })
}

pub fn to_dot(p: &Pattern) -> String {
    let mut s = String::from("graph pattern {\n  node [shape=circle, fontsize=10];\n");
    for (i, c) in p.connectors.iter().enumerate() {
        let (shape, fill) = if c.is_singular() { ("point", "black") } else { ("circle", "cyan") };
        let label = match &c.host {
            ConnectorHost::Edge { edge, .. } => format!("c{i}\\ne{edge} w={}", rat_display(&c.weight)),
            ConnectorHost::Interior { triangle, .. } => format!("c{i}\\nT{triangle}"),
        };
        let _ = writeln!(
            s,
            "  c{i} [shape={shape}, style=filled, fillcolor=\"{fill}\", label=\"{label}\"];"
        );
    }
    for seg in &p.segments {
        let _ = writeln!(
            s,
            "  c{} -- c{} [label=\"T{}\", color=\"cyan3\"];",
            seg.ends[0], seg.ends[1], seg.triangle
        );
    }
    s.push_str("}\n");
    s
}

/// Per-triangle SVG: triangles in a row of equilateral frames, pattern in
/// cyan, singular connectors as filled dots.
pub fn to_svg(p: &Pattern, cx: &TwoComplex) -> String {
    const W: f64 = 160.0;
    const H: f64 = 150.0;
    let per_row = 5usize;
    let nt = cx.n_triangles() as usize;
    let rows = nt.div_ceil(per_row).max(1);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-size=\"9\">\n",
        W * per_row.min(nt.max(1)) as f64,
        H * rows as f64
    );

    let corner = |t: usize, k: usize| -> (f64, f64) {
        let ox = (t % per_row) as f64 * W + 10.0;
        let oy = (t / per_row) as f64 * H + 10.0;
        match k {
            0 => (ox, oy + 120.0),
            1 => (ox + 140.0, oy + 120.0),
            _ => (ox + 70.0, oy),
        }
    };

    let mut anchors: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for t in 0..nt {
        let sides = cx.sides(t as u32);
        for k in 0..3 {
            let (a, b) = (corner(t, k), corner(t, (k + 1) % 3));
            let _ = writeln!(
                s,
                "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#444\"/>",
                a.0, a.1, b.0, b.1
            );
            for (i, c) in p.connectors.iter().enumerate() {
                if let ConnectorHost::Edge { edge, position } = &c.host {
                    if *edge == sides[k] >> 1 {
                        let mut tpos = rat_to_f64(position);
                        if sides[k] & 1 == 1 {
                            tpos = 1.0 - tpos;
                        }
                        let x = a.0 + (b.0 - a.0) * tpos;
                        let y = a.1 + (b.1 - a.1) * tpos;
                        anchors.insert((i as u32, t as u32), (x, y));
                        let _ = writeln!(
                            s,
                            "  <circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"cyan\" stroke=\"#067\"/>\n  <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                            x + 4.0,
                            y - 4.0,
                            rat_display(&c.weight)
                        );
                    }
                }
            }
        }
        let centroid = {
            let (a, b, c) = (corner(t, 0), corner(t, 1), corner(t, 2));
            ((a.0 + b.0 + c.0) / 3.0, (a.1 + b.1 + c.1) / 3.0)
        };
        for (i, c) in p.connectors.iter().enumerate() {
            if let ConnectorHost::Interior { triangle, slot } = &c.host {
                if *triangle == t as u32 {
                    let x = centroid.0 + 10.0 * *slot as f64;
                    let y = centroid.1;
                    anchors.insert((i as u32, t as u32), (x, y));
                    let _ = writeln!(
                        s,
                        "  <circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2.5\" fill=\"#067\"/>"
                    );
                }
            }
        }
    }
    for seg in &p.segments {
        let (a, b) = (
            anchors.get(&(seg.ends[0], seg.triangle)),
            anchors.get(&(seg.ends[1], seg.triangle)),
        );
        if let (Some(a), Some(b)) = (a, b) {
            let _ = writeln!(
                s,
                "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"cyan\" stroke-width=\"1.6\"/>",
                a.0, a.1, b.0, b.1
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Strip of `n` triangles on vertices 0..n+2: triangle i spans
/// (i, i+1, i+2). Chain edges come first, then the skips.
pub fn triangulated_strip(n: u32) -> TwoComplex {
    use crate::words::Word;
    let mut edges = Vec::new();
    for i in 0..=n {
        edges.push((i, i + 1, Word::empty()));
    }
    for i in 0..n {
        edges.push((i, i + 2, Word::empty()));
    }
    let mut triangles = Vec::new();
    for i in 0..n {
        let chain_a = 2 * i;
        let chain_b = 2 * (i + 1);
        let skip_rev = 2 * (n + 1 + i) + 1;
        triangles.push([chain_a, chain_b, skip_rev]);
    }
    TwoComplex::new(n + 2, edges, triangles).expect("strip construction is closed")
}

/// Seeded valid pattern: random connectors on edges, then a per-triangle
/// matching that pairs side connectors into regular segments or hands them
/// singular partners, so the one-segment condition holds everywhere.
pub fn random_pattern(cx: &TwoComplex, seed: u64) -> Pattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut connectors = Vec::new();
    for edge in 0..cx.n_edges() {
        let n = rng.gen_range(0..=3u32);
        for i in 0..n {
            let num = rng.gen_range(0..=9i64);
            let den = rng.gen_range(1..=8i64);
            connectors.push(Connector {
                host: ConnectorHost::Edge {
                    edge,
                    position: Rat::new((i as i64 + 1).into(), (n as i64 + 1).into()),
                },
                weight: Rat::new(num.into(), den.into()),
            });
        }
    }

    let mut segments = Vec::new();
    for t in 0..cx.n_triangles() {
        let sides: Vec<u32> = cx.sides(t).iter().map(|&o| o >> 1).collect();
        let mut pool: Vec<u32> = connectors
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match &c.host {
                ConnectorHost::Edge { edge, .. } if sides.contains(edge) => Some(i as u32),
                _ => None,
            })
            .collect();
        for i in (1..pool.len()).rev() {
            pool.swap(i, rng.gen_range(0..=i));
        }
        let mut slot = 0;
        while let Some(a) = pool.pop() {
            let solo = pool.is_empty() || rng.gen_range(0..4u32) == 0;
            if solo {
                let singular = connectors.len() as u32;
                connectors.push(Connector {
                    host: ConnectorHost::Interior { triangle: t, slot },
                    weight: Rat::zero(),
                });
                slot += 1;
                segments.push(Segment { ends: [a, singular], triangle: t });
            } else {
                let b = pool.pop().unwrap();
                segments.push(Segment { ends: [a, b], triangle: t });
            }
        }
    }

    Pattern { connectors, segments, reduced: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::words::Word;

    fn one_triangle() -> TwoComplex {
        let e = vec![
            (0, 1, Word::empty()),
            (1, 2, Word::empty()),
            (2, 0, Word::empty()),
        ];
        TwoComplex::new(3, e, vec![[0, 2, 4]]).unwrap()
    }

    fn edge_connector(edge: u32, num: i64, den: i64, w: Rat) -> Connector {
        Connector { host: ConnectorHost::Edge { edge, position: rat(num, den) }, weight: w }
    }

    #[test]
    fn empty_pattern_valid_and_zero() {
        let cx = one_triangle();
        let p = Pattern::empty();
        let report = validate(&p, &cx);
        assert!(report.valid, "{}", report.display());
        assert_eq!(report.items.len(), 4);
        assert!(weight_total(&p).is_zero());
        assert!(defect_total(&p).is_zero());
        assert!(tracks(&p).is_empty());
    }

    #[test]
    fn single_track_weight_and_defect() {
        let cx = one_triangle();
        let p = Pattern {
            connectors: vec![
                edge_connector(0, 1, 2, rat(3, 1)),
                edge_connector(1, 1, 2, rat(1, 1)),
            ],
            segments: vec![Segment { ends: [0, 1], triangle: 0 }],
            reduced: false,
        };
        assert!(validate(&p, &cx).valid);
        assert_eq!(tracks(&p), vec![vec![0, 1]]);
        assert_eq!(weight_total(&p), rat(3, 1));
        assert_eq!(defect_total(&p), rat(2, 1));
    }

    #[test]
    fn reduce_31_track() {
        let cx = one_triangle();
        let p = Pattern {
            connectors: vec![
                edge_connector(0, 1, 2, rat(3, 1)),
                edge_connector(1, 1, 2, rat(1, 1)),
            ],
            segments: vec![Segment { ends: [0, 1], triangle: 0 }],
            reduced: false,
        };
        let (q, w) = perfect_reduce(&p, &cx).unwrap();
        assert_eq!(w, rat(1, 1));
        assert!(q.reduced);
        assert_eq!(q.connectors.len(), 2);
        assert!(q.connectors.iter().all(|c| c.weight == rat(1, 1)));
        assert!(defect_total(&q).is_zero());
        assert!(weight_total(&p) <= w + defect_total(&p));
    }

    #[test]
    fn reduce_deletes_singular_connectors() {
        let cx = one_triangle();
        let p = Pattern {
            connectors: vec![
                edge_connector(0, 1, 2, rat(2, 1)),
                Connector {
                    host: ConnectorHost::Interior { triangle: 0, slot: 0 },
                    weight: Rat::zero(),
                },
            ],
            segments: vec![Segment { ends: [0, 1], triangle: 0 }],
            reduced: false,
        };
        assert!(validate(&p, &cx).valid);
        let (q, w) = perfect_reduce(&p, &cx).unwrap();
        assert_eq!(q.connectors.len(), 1);
        assert!(q.segments.is_empty());
        assert_eq!(w, rat(2, 1));
        let report = validate(&q, &cx);
        assert!(report.valid, "{}", report.display());
    }

    #[test]
    fn condition4_violation_is_witnessed() {
        // Fan: three triangles share edge (0,1).
        let e = vec![
            (0, 1, Word::empty()),
            (1, 2, Word::empty()),
            (2, 0, Word::empty()),
            (1, 3, Word::empty()),
            (3, 0, Word::empty()),
            (1, 4, Word::empty()),
            (4, 0, Word::empty()),
        ];
        let cx = TwoComplex::new(
            5,
            e,
            vec![[0, 2, 4], [0, 6, 8], [0, 10, 12]],
        )
        .unwrap();
        let mut p = Pattern {
            connectors: vec![edge_connector(0, 1, 2, rat(1, 1))],
            segments: vec![],
            reduced: false,
        };
        for t in 0..2 {
            let s = p.connectors.len() as u32;
            p.connectors.push(Connector {
                host: ConnectorHost::Interior { triangle: t, slot: 0 },
                weight: Rat::zero(),
            });
            p.segments.push(Segment { ends: [0, s], triangle: t });
        }
        let report = validate(&p, &cx);
        assert!(!report.valid);
        let c4 = &report.items[3];
        assert!(!c4.ok);
        assert!(c4.detail.contains("triangle 2"), "witness: {}", c4.detail);
    }

    #[test]
    fn two_disjoint_segments_two_tracks() {
        let cx = one_triangle();
        let p = Pattern {
            connectors: vec![
                edge_connector(0, 1, 3, rat(1, 1)),
                edge_connector(1, 1, 3, rat(1, 1)),
                edge_connector(0, 2, 3, rat(1, 1)),
                edge_connector(1, 2, 3, rat(1, 1)),
            ],
            segments: vec![
                Segment { ends: [0, 1], triangle: 0 },
                Segment { ends: [2, 3], triangle: 0 },
            ],
            reduced: false,
        };
        assert!(validate(&p, &cx).valid);
        assert_eq!(tracks(&p).len(), 2);
    }

    #[test]
    fn single_connector_reduced_is_one_track() {
        let cx = one_triangle();
        let p = Pattern {
            connectors: vec![edge_connector(0, 1, 2, rat(5, 2))],
            segments: vec![],
            reduced: true,
        };
        assert!(validate(&p, &cx).valid);
        assert_eq!(tracks(&p).len(), 1);
        assert_eq!(weight_total(&p), rat(5, 2));
    }

    #[test]
    fn tracks_match_flood_fill() {
        let cx = triangulated_strip(10);
        for seed in 0..20u64 {
            let p = random_pattern(&cx, seed);
            let fast = tracks(&p);

            let n = p.connectors.len();
            let mut adj = vec![Vec::new(); n];
            for s in &p.segments {
                adj[s.ends[0] as usize].push(s.ends[1]);
                adj[s.ends[1] as usize].push(s.ends[0]);
            }
            let mut seen = vec![false; n];
            let mut slow = Vec::new();
            for start in 0..n {
                if seen[start] {
                    continue;
                }
                let mut comp = vec![];
                let mut stack = vec![start as u32];
                seen[start] = true;
                while let Some(v) = stack.pop() {
                    comp.push(v);
                    for &w in &adj[v as usize] {
                        if !seen[w as usize] {
                            seen[w as usize] = true;
                            stack.push(w);
                        }
                    }
                }
                comp.sort();
                slow.push(comp);
            }
            slow.sort();
            assert_eq!(fast, slow, "seed {seed}");
        }
    }

    #[test]
    fn totals_add_over_disjoint_unions() {
        let cx = triangulated_strip(10);
        let p = random_pattern(&cx, 3);
        let q_raw = random_pattern(&cx, 4);

        // Shift q to triangles 5.. so supports stay disjoint from p's 0..5.
        let restrict = |pat: &Pattern, lo: u32, hi: u32| -> Pattern {
            let mut keep = Vec::new();
            let mut remap = vec![u32::MAX; pat.connectors.len()];
            for (i, c) in pat.connectors.iter().enumerate() {
                let inside = match &c.host {
                    ConnectorHost::Edge { edge, .. } => {
                        cx.triangles_of(*edge).iter().all(|&(t, _)| t >= lo && t < hi)
                    }
                    ConnectorHost::Interior { triangle, .. } => {
                        *triangle >= lo && *triangle < hi
                    }
                };
                if inside {
                    remap[i] = keep.len() as u32;
                    keep.push(c.clone());
                }
            }
            let segments = pat
                .segments
                .iter()
                .filter(|s| s.ends.iter().all(|&e| remap[e as usize] != u32::MAX))
                .map(|s| Segment {
                    ends: [remap[s.ends[0] as usize], remap[s.ends[1] as usize]],
                    triangle: s.triangle,
                })
                .collect();
            Pattern { connectors: keep, segments, reduced: true }
        };

        let a = restrict(&p, 0, 4);
        let b = restrict(&q_raw, 6, 10);
        let offset = a.connectors.len() as u32;
        let mut union = a.clone();
        union.connectors.extend(b.connectors.iter().cloned());
        union.segments.extend(b.segments.iter().map(|s| Segment {
            ends: [s.ends[0] + offset, s.ends[1] + offset],
            triangle: s.triangle,
        }));

        assert_eq!(weight_total(&union), weight_total(&a) + weight_total(&b));
        assert_eq!(defect_total(&union), defect_total(&a) + defect_total(&b));
        assert_eq!(tracks(&union).len(), tracks(&a).len() + tracks(&b).len());
    }

    #[test]
    fn scaling_scales_everything_but_tracks() {
        let cx = triangulated_strip(10);
        let p = random_pattern(&cx, 9);
        let s = rat(7, 3);
        let q = p.scale_weights(&s);
        assert_eq!(tracks(&q), tracks(&p));
        assert_eq!(weight_total(&q), weight_total(&p) * s.clone());
        assert_eq!(defect_total(&q), defect_total(&p) * s.clone());
        let (_, w_p) = perfect_reduce(&p, &cx).unwrap();
        let (_, w_q) = perfect_reduce(&q, &cx).unwrap();
        assert_eq!(w_q, w_p * s);
    }

    #[test]
    fn reduce_is_idempotent() {
        let cx = triangulated_strip(10);
        for seed in [0u64, 5, 11] {
            let p = random_pattern(&cx, seed);
            let (q, wq) = perfect_reduce(&p, &cx).unwrap();
            let (r, wr) = perfect_reduce(&q, &cx).unwrap();
            assert_eq!(q, r, "seed {seed}");
            assert_eq!(wq, wr);
        }
    }

    #[test]
    fn zero_weight_track_removal_is_neutral() {
        let cx = triangulated_strip(10);
        let p = random_pattern(&cx, 21);
        let mut q = p.clone();
        q.connectors.push(edge_connector(0, 9, 10, Rat::zero()));
        assert_eq!(weight_total(&q), weight_total(&p));
        assert_eq!(defect_total(&q), defect_total(&p));
        let (_, wq) = perfect_reduce(&q, &cx).unwrap();
        let (_, wp) = perfect_reduce(&p, &cx).unwrap();
        assert_eq!(wq, wp);
    }

    #[test]
    fn positions_respaced_in_order() {
        let cx = one_triangle();
        let p = Pattern {
            connectors: vec![
                edge_connector(0, 9, 10, rat(1, 1)),
                edge_connector(0, 1, 10, rat(2, 1)),
                Connector {
                    host: ConnectorHost::Interior { triangle: 0, slot: 0 },
                    weight: Rat::zero(),
                },
                Connector {
                    host: ConnectorHost::Interior { triangle: 0, slot: 1 },
                    weight: Rat::zero(),
                },
            ],
            segments: vec![
                Segment { ends: [0, 2], triangle: 0 },
                Segment { ends: [1, 3], triangle: 0 },
            ],
            reduced: false,
        };
        assert!(validate(&p, &cx).valid);
        let (q, _) = perfect_reduce(&p, &cx).unwrap();
        let pos: Vec<Rat> = q
            .connectors
            .iter()
            .map(|c| match &c.host {
                ConnectorHost::Edge { position, .. } => position.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(pos, vec![rat(2, 3), rat(1, 3)]);
    }

    #[test]
    fn json_round_trip() {
        let cx = triangulated_strip(10);
        let p = random_pattern(&cx, 33);
        let text = to_json(&p).unwrap();
        let q = from_json(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn renderings_cover_every_connector() {
        let cx = triangulated_strip(4);
        let p = random_pattern(&cx, 2);
        let dot = to_dot(&p);
        for i in 0..p.connectors.len() {
            assert!(dot.contains(&format!("c{i} ")));
        }
        let svg = to_svg(&p, &cx);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("cyan"));
    }

    #[test]
    fn random_patterns_hold_the_reduction_inequality() {
        let cx = triangulated_strip(10);
        let mut nontrivial = 0;
        for seed in 0..200u64 {
            let p = random_pattern(&cx, seed);
            let report = validate(&p, &cx);
            assert!(report.valid, "seed {seed}: {}", report.display());
            let w = weight_total(&p);
            let df = defect_total(&p);
            let (q, w2) = perfect_reduce(&p, &cx).unwrap();
            assert!(w <= &w2 + &df, "seed {seed}");
            assert!(w2 <= w, "reduction may not gain weight, seed {seed}");
            assert!(defect_total(&q).is_zero(), "seed {seed}");
            if !p.segments.is_empty() {
                nontrivial += 1;
            }
        }
        assert!(nontrivial >= 150, "generator produced too many empty patterns");
    }
}
