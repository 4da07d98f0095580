//! Combinatorial horoballs and cusped spaces.
//!
//! A horoball over a graph Γ stacks copies of Γ's vertex set at depths
//! 0..=D, with vertical edges between consecutive depths and horizontal
//! edges (v,m)-(w,m) whenever d_Γ(v,w) <= 2^m. A cusped space glues one
//! horoball onto each peripheral coset piece of a Cayley ball, identifying
//! depth 0 with the piece itself.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{thin_triangle_delta, Graph, TriangleSample};
use crate::group::{cayley_ball, coset_metric, peripheral_cosets, CayleyBall, GroupPair};
use crate::words::Word;

/// Standalone horoball, vertex (v,m) stored at id m*base_n + v.
#[derive(Clone, Debug)]
pub struct Horoball {
    pub base_n: u32,
    pub max_depth: u32,
    pub graph: Graph,
    pub approximate: bool,
}

impl Horoball {
    pub fn id(&self, v: u32, m: u32) -> u32 {
        m * self.base_n + v
    }

    pub fn level(&self, id: u32) -> u32 {
        id / self.base_n
    }

    pub fn base_vertex(&self, id: u32) -> u32 {
        id % self.base_n
    }
}

fn pairwise_bfs(g: &Graph) -> Result<Vec<Vec<Option<u32>>>> {
    (0..g.n_vertices() as u32).map(|v| g.bfs_distances(v)).collect()
}

/// Builds a horoball over `base`. Distances come from `oracle` when given,
/// else from BFS inside `base`; the result is flagged approximate in the
/// latter case unless the caller attests the graph metric is exact.
pub fn build_horoball(
    base: &Graph,
    oracle: Option<&dyn Fn(u32, u32) -> u64>,
    max_depth: u32,
    bfs_metric_exact: bool,
) -> Result<Horoball> {
    let n = base.n_vertices() as u32;
    if n == 0 {
        return Err(Error::Input("horoball over an empty graph".into()));
    }
    let dist: Box<dyn Fn(u32, u32) -> Option<u64>> = match oracle {
        Some(f) => Box::new(move |v, w| Some(f(v, w))),
        None => {
            let m = pairwise_bfs(base)?;
            Box::new(move |v, w| m[v as usize][w as usize].map(u64::from))
        }
    };
    let mut graph = Graph::new((n as usize) * (max_depth as usize + 1));
    for m in 0..=max_depth {
        if m > 0 {
            for v in 0..n {
                graph.add_edge((m - 1) * n + v, m * n + v)?;
            }
        }
        let reach = 1u64.checked_shl(m).unwrap_or(u64::MAX);
        for v in 0..n {
            for w in v + 1..n {
                if let Some(d) = dist(v, w) {
                    if d <= reach {
                        graph.add_edge(m * n + v, m * n + w)?;
                    }
                }
            }
        }
    }
    graph.normalize();
    Ok(Horoball { base_n: n, max_depth, graph, approximate: oracle.is_none() && !bfs_metric_exact })
}

#[derive(Clone, Debug)]
pub struct HoroballPiece {
    pub peripheral: usize,
    pub key: Word,
    /// Depth-0 vertices, as global (= base ball) ids.
    pub base_ids: Vec<u32>,
    pub clipped: bool,
    pub approximate: bool,
    /// Start of each depth layer m >= 1 in the global id space.
    level_start: Vec<u32>,
}

impl HoroballPiece {
    pub fn vertex(&self, local: usize, m: u32) -> u32 {
        if m == 0 {
            self.base_ids[local]
        } else {
            self.level_start[m as usize - 1] + local as u32
        }
    }
}

#[derive(Clone, Debug)]
pub struct CuspedSpace {
    pub graph: Graph,
    pub max_depth: u32,
    pub base_size: u32,
    pub depth: Vec<u32>,
    pub pieces: Vec<HoroballPiece>,
    /// For ids >= base_size: (piece, local index, depth).
    pub horo_of: Vec<Option<(u32, u32, u32)>>,
    /// (peripheral, base id) -> (piece, local index).
    pub piece_lookup: BTreeMap<(usize, u32), (u32, u32)>,
    pub approximate: bool,
}

struct PieceSpec {
    peripheral: usize,
    key: Word,
    base_ids: Vec<u32>,
    clipped: bool,
    approximate: bool,
    dist: Vec<Vec<u64>>,
}

fn assemble(base: &Graph, specs: Vec<PieceSpec>, max_depth: u32) -> Result<CuspedSpace> {
    let base_size = base.n_vertices() as u32;
    let mut seen: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    for s in &specs {
        let flags = seen.entry(s.peripheral).or_insert_with(|| vec![false; base_size as usize]);
        for &v in &s.base_ids {
            if v >= base_size {
                return Err(Error::Input(format!("coset vertex {v} outside the base")));
            }
            if flags[v as usize] {
                return Err(Error::Input(format!(
                    "cosets of peripheral {} overlap at base vertex {v}",
                    s.peripheral
                )));
            }
            flags[v as usize] = true;
        }
    }

    let mut total = base_size as usize;
    let mut pieces = Vec::with_capacity(specs.len());
    for s in &specs {
        let mut level_start = Vec::with_capacity(max_depth as usize);
        for _ in 1..=max_depth {
            level_start.push(total as u32);
            total += s.base_ids.len();
        }
        pieces.push(HoroballPiece {
            peripheral: s.peripheral,
            key: s.key.clone(),
            base_ids: s.base_ids.clone(),
            clipped: s.clipped,
            approximate: s.approximate,
            level_start,
        });
    }

    let mut graph = Graph::new(total);
    for &(u, v) in base.edges() {
        graph.add_edge(u, v)?;
    }
    let mut depth = vec![0u32; total];
    let mut horo_of: Vec<Option<(u32, u32, u32)>> = vec![None; total];
    let mut piece_lookup = BTreeMap::new();

    for (h, (piece, spec)) in pieces.iter().zip(&specs).enumerate() {
        let k = piece.base_ids.len();
        for (i, &b) in piece.base_ids.iter().enumerate() {
            piece_lookup.insert((piece.peripheral, b), (h as u32, i as u32));
        }
        for m in 1..=max_depth {
            for i in 0..k {
                let id = piece.vertex(i, m);
                depth[id as usize] = m;
                horo_of[id as usize] = Some((h as u32, i as u32, m));
                graph.add_edge(piece.vertex(i, m - 1), id)?;
            }
            let reach = 1u64.checked_shl(m).unwrap_or(u64::MAX);
            for i in 0..k {
                for j in i + 1..k {
                    if spec.dist[i][j] <= reach {
                        graph.add_edge(piece.vertex(i, m), piece.vertex(j, m))?;
                    }
                }
            }
        }
    }
    graph.normalize();

    let approximate = pieces.iter().any(|p| p.approximate);
    Ok(CuspedSpace {
        graph,
        max_depth,
        base_size,
        depth,
        pieces,
        horo_of,
        piece_lookup,
        approximate,
    })
}

/// Default truncation depth: one past the ball diameter's bit length, deep
/// enough for any horizontal pair to connect in one hop.
pub fn default_max_depth(base: &Graph) -> Result<u32> {
    let mut diameter = 0u32;
    for v in 0..base.n_vertices() as u32 {
        for d in base.bfs_distances(v)?.into_iter().flatten() {
            diameter = diameter.max(d);
        }
    }
    Ok(64 - u64::from(diameter).leading_zeros() + 1)
}

pub fn build_cusped(ball: &CayleyBall, pair: &GroupPair, max_depth: u32) -> Result<CuspedSpace> {
    let cosets = peripheral_cosets(ball, pair)?;
    let mut specs = Vec::with_capacity(cosets.len());
    for c in &cosets {
        let metric = coset_metric(ball, pair, c.peripheral)?;
        let k = c.vertices.len();
        let mut dist = vec![vec![0u64; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                let d = c.distance(i, j, &metric);
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        specs.push(PieceSpec {
            peripheral: c.peripheral,
            key: c.key.clone(),
            base_ids: c.vertices.clone(),
            clipped: c.clipped,
            approximate: false,
            dist,
        });
    }
    assemble(&ball.graph, specs, max_depth)
}

impl CuspedSpace {
    /// Synthetic space over an arbitrary base, horoballs over the given
    /// vertex sets with BFS metric inside each induced piece.
    /// `bfs_metric_exact` attests that piece-internal BFS distances agree
    /// with the intended coset metric.
    pub fn synthetic(
        base: &Graph,
        piece_sets: &[Vec<u32>],
        max_depth: u32,
        bfs_metric_exact: bool,
    ) -> Result<CuspedSpace> {
        let mut specs = Vec::with_capacity(piece_sets.len());
        for set in piece_sets {
            let (sub, ids) = base.induced(set);
            let m = pairwise_bfs(&sub)?;
            let k = ids.len();
            let mut dist = vec![vec![0u64; k]; k];
            for i in 0..k {
                for j in 0..k {
                    dist[i][j] = m[i][j]
                        .ok_or_else(|| Error::Input("disconnected coset piece".into()))?
                        .into();
                }
            }
            specs.push(PieceSpec {
                peripheral: 0,
                key: Word::empty(),
                base_ids: ids,
                clipped: false,
                approximate: !bfs_metric_exact,
                dist,
            });
        }
        assemble(base, specs, max_depth)
    }

    pub fn truncate(&self, r: u32) -> Result<CuspedSpace> {
        if r > self.max_depth {
            return Err(Error::Input(format!(
                "truncation depth {r} exceeds max depth {}",
                self.max_depth
            )));
        }
        let keep: Vec<u32> =
            (0..self.graph.n_vertices() as u32).filter(|&v| self.depth[v as usize] <= r).collect();
        let (graph, old_ids) = self.graph.induced(&keep);
        let mut remap = vec![u32::MAX; self.graph.n_vertices()];
        for (new, &old) in old_ids.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| HoroballPiece {
                peripheral: p.peripheral,
                key: p.key.clone(),
                base_ids: p.base_ids.clone(),
                clipped: p.clipped,
                approximate: p.approximate,
                level_start: p.level_start[..r as usize]
                    .iter()
                    .map(|&s| remap[s as usize])
                    .collect(),
            })
            .collect();
        let depth: Vec<u32> = old_ids.iter().map(|&v| self.depth[v as usize]).collect();
        let horo_of = old_ids
            .iter()
            .map(|&v| self.horo_of[v as usize])
            .collect();
        Ok(CuspedSpace {
            graph,
            max_depth: r,
            base_size: self.base_size,
            depth,
            pieces,
            horo_of,
            piece_lookup: self.piece_lookup.clone(),
            approximate: self.approximate,
        })
    }

    /// Left translation by `g` on the glued space: base vertices move by
    /// the ball symmetry, horoball vertices move with their coset at fixed
    /// depth. None when the image leaves the ball.
    pub fn translate_vertex(
        &self,
        ball: &CayleyBall,
        g: &Word,
        v: u32,
    ) -> Option<u32> {
        match self.horo_of[v as usize] {
            None => {
                let w = g.concat(ball.word_of(v));
                ball.id_of(&ball.engine.nf(&w))
            }
            Some((h, local, m)) => {
                let piece = &self.pieces[h as usize];
                let b = piece.base_ids[local as usize];
                let w = g.concat(ball.word_of(b));
                let b2 = ball.id_of(&ball.engine.nf(&w))?;
                let (h2, local2) = self.piece_lookup.get(&(piece.peripheral, b2)).copied()?;
                let target = &self.pieces[h2 as usize];
                if target.base_ids.len() != piece.base_ids.len() {
                    return None;
                }
                Some(target.vertex(local2 as usize, m))
            }
        }
    }

    pub fn census(&self) -> Census {
        let mut rows: BTreeMap<u32, CensusRow> = BTreeMap::new();
        for d in 0..=self.max_depth {
            rows.insert(d, CensusRow::default());
        }
        for v in 0..self.graph.n_vertices() {
            rows.get_mut(&self.depth[v]).unwrap().vertices += 1;
        }
        for &(u, v) in self.graph.edges() {
            let (du, dv) = (self.depth[u as usize], self.depth[v as usize]);
            if du == dv {
                rows.get_mut(&du).unwrap().horizontal_edges += 1;
            } else {
                rows.get_mut(&du.max(dv)).unwrap().vertical_edges += 1;
            }
        }
        Census { by_depth: rows, approximate: self.approximate }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph cusped {\n  node [style=filled];\n");
        let palette = ["#ffffff", "#cfe8ff", "#9fd0ff", "#6fb8ff", "#3f9fff", "#1f7fdf"];
        for v in 0..self.graph.n_vertices() {
            let d = self.depth[v] as usize;
            let _ = writeln!(
                s,
                "  v{v} [label=\"{v}:d{d}\", fillcolor=\"{}\"];",
                palette[d.min(palette.len() - 1)]
            );
        }
        for &(u, v) in self.graph.edges() {
            let style = if self.depth[u as usize] != self.depth[v as usize] {
                " [style=dashed]"
            } else {
                ""
            };
            let _ = writeln!(s, "  v{u} -- v{v}{style};");
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CensusRow {
    pub vertices: usize,
    #[serde(rename = "verticalEdges")]
    pub vertical_edges: usize,
    #[serde(rename = "horizontalEdges")]
    pub horizontal_edges: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Census {
    #[serde(rename = "byDepth")]
    pub by_depth: BTreeMap<u32, CensusRow>,
    pub approximate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub radius: u32,
    #[serde(rename = "nVertices")]
    pub n_vertices: usize,
    pub delta: u32,
    pub exhaustive: bool,
}

/// Measures thinness on the subgraphs induced by metric balls around the
/// base origin. Exhaustive up to `vertex_cap` vertices, otherwise a seeded
/// sample of triples.
pub fn hyperbolicity_profile(
    cusp: &CuspedSpace,
    radii: &[u32],
    vertex_cap: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<ProfileRow>> {
    let from_origin = cusp.graph.bfs_distances(0)?;
    let mut out = Vec::new();
    for &r in radii {
        let keep: Vec<u32> = (0..cusp.graph.n_vertices() as u32)
            .filter(|&v| matches!(from_origin[v as usize], Some(d) if d <= r))
            .collect();
        let (sub, _) = cusp.graph.induced(&keep);
        let n = sub.n_vertices();
        let exhaustive = n <= vertex_cap;
        let mut triples = Vec::new();
        if !exhaustive {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(r));
            let ids: Vec<u32> = (0..n as u32).collect();
            for _ in 0..samples {
                let mut pick: Vec<u32> = ids.choose_multiple(&mut rng, 3).copied().collect();
                pick.sort_unstable();
                triples.push((pick[0], pick[1], pick[2]));
            }
        }
        let sample = if exhaustive {
            TriangleSample::Exhaustive
        } else {
            TriangleSample::List(&triples)
        };
        let rep = thin_triangle_delta(&sub, sample)?;
        out.push(ProfileRow { radius: r, n_vertices: n, delta: rep.delta, exhaustive });
    }
    Ok(out)
}

/// Convenience: ball, cosets, horoballs in one step.
pub fn cusped_from_pair(pair: &GroupPair, radius: u32, max_depth: Option<u32>) -> Result<(CayleyBall, CuspedSpace)> {
    let ball = cayley_ball(pair, radius)?;
    let d = match max_depth {
        Some(d) => d,
        None => default_max_depth(&ball.graph)?,
    };
    let cusp = build_cusped(&ball, pair, d)?;
    Ok((ball, cusp))
}
