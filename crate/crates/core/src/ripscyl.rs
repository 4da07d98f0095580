//! Rips complexes over finite metrics and warped lengths on cusp cylinders.
//! The length evaluator never returns a float as truth: every value is a
//! rational bracket with directed rounding at 2^-40.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cusped::CuspedSpace;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rat::{rat_display, Nat, Rat};

#[derive(Clone, Debug)]
pub struct RipsComplex {
    pub threshold: u64,
    pub dim_cap: u32,
    /// Simplices per dimension, each a sorted vertex list; downward closed.
    pub simplices: Vec<Vec<Vec<u32>>>,
    pub census: Vec<u64>,
}

/// All subsets of diameter at most `threshold` up to `dim_cap`, i.e. the
/// cliques of the threshold graph. Enumeration shards by least vertex; the
/// shard results are concatenated in vertex order, so the output does not
/// depend on scheduling.
pub fn rips(
    n: u32,
    metric: &(dyn Fn(u32, u32) -> u64 + Sync),
    threshold: u64,
    dim_cap: u32,
    guard: u64,
    jobs: usize,
) -> Result<RipsComplex> {
    if dim_cap == 0 {
        return Err(Error::Input("dimension cap must be at least 1".into()));
    }
    let mut nb: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
    for v in 0..n {
        for w in v + 1..n {
            if metric(v, w) <= threshold {
                nb[v as usize].push(w);
            }
        }
    }

    let count = AtomicU64::new(u64::from(n));
    if count.load(Ordering::SeqCst) > guard {
        return Err(Error::SizeGuard(format!(
            "{n} vertices already exceed the simplex budget {guard}; raise it or shrink the input"
        )));
    }

    type ByDim = Vec<Vec<Vec<u32>>>;
    let shards: Vec<Mutex<Option<ByDim>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let overflow = std::sync::atomic::AtomicBool::new(false);

    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1) {
            scope.spawn(|| loop {
                let v = next.fetch_add(1, Ordering::SeqCst);
                if v >= n as usize || overflow.load(Ordering::SeqCst) {
                    break;
                }
                let mut out: ByDim = vec![Vec::new(); dim_cap as usize];
                let mut face = vec![v as u32];
                let cands = nb[v].clone();
                grow(
                    &nb,
                    metric,
                    threshold,
                    dim_cap,
                    &mut face,
                    &cands,
                    &mut out,
                    &count,
                    guard,
                    &overflow,
                );
                *shards[v].lock().expect("shard slot") = Some(out);
            });
        }
    });

    if overflow.load(Ordering::SeqCst) {
        return Err(Error::SizeGuard(format!(
            "simplex count passed {guard}; use a smaller threshold or dimension cap"
        )));
    }

    let mut simplices: Vec<Vec<Vec<u32>>> = vec![Vec::new(); dim_cap as usize + 1];
    simplices[0] = (0..n).map(|v| vec![v]).collect();
    for slot in shards {
        let Some(by_dim) = slot.into_inner().expect("shard slot") else { continue };
        for (d, mut faces) in by_dim.into_iter().enumerate() {
            simplices[d + 1].append(&mut faces);
        }
    }
    let census: Vec<u64> = simplices.iter().map(|s| s.len() as u64).collect();
    Ok(RipsComplex { threshold, dim_cap, simplices, census })
}

#[allow(clippy::too_many_arguments)]
fn grow(
    nb: &[Vec<u32>],
    metric: &(dyn Fn(u32, u32) -> u64 + Sync),
    threshold: u64,
    dim_cap: u32,
    face: &mut Vec<u32>,
    cands: &[u32],
    out: &mut [Vec<Vec<u32>>],
    count: &AtomicU64,
    guard: u64,
    overflow: &std::sync::atomic::AtomicBool,
) {
    for (i, &c) in cands.iter().enumerate() {
        if overflow.load(Ordering::Relaxed) {
            return;
        }
        face.push(c);
        if count.fetch_add(1, Ordering::SeqCst) + 1 > guard {
            overflow.store(true, Ordering::SeqCst);
            face.pop();
            return;
        }
        out[face.len() - 2].push(face.clone());
        if (face.len() as u32) <= dim_cap {
            let deeper: Vec<u32> = cands[i + 1..]
                .iter()
                .copied()
                .filter(|&w| metric(c, w) <= threshold)
                .collect();
            grow(nb, metric, threshold, dim_cap, face, &deeper, out, count, guard, overflow);
        }
        face.pop();
    }
}

/// BFS metric of a graph as a closure; disconnected pairs are pushed past
/// any finite threshold.
pub fn graph_metric(g: &Graph) -> Result<impl Fn(u32, u32) -> u64 + Sync> {
    let n = g.n_vertices();
    let mut table = vec![u64::MAX; n * n];
    for v in 0..n as u32 {
        let d = g.bfs_distances(v)?;
        for w in 0..n {
            if let Some(x) = d[w] {
                table[v as usize * n + w] = u64::from(x);
            }
        }
    }
    Ok(move |v: u32, w: u32| table[v as usize * n + w as usize])
}

pub fn rips_census_json(r: &RipsComplex) -> serde_json::Value {
    json!({
        "threshold": r.threshold,
        "dimCap": r.dim_cap,
        "census": r.census,
    })
}

const PREC: u32 = 40;
/// Resolution of the dyadic exponent grid for the warp factor.
const GRID: u32 = 20;

fn nat_of(v: &BigInt) -> Nat {
    v.magnitude().clone()
}

/// floor(sqrt(v)) scaled to 2^-PREC; a certified lower bound of sqrt(v).
fn sqrt_down(v: &Rat) -> Rat {
    debug_assert!(!v.is_negative());
    let scaled: BigInt = (v.numer() << (2 * PREC)).div_floor(v.denom());
    Rat::new(BigInt::from(nat_of(&scaled).sqrt()), BigInt::one() << PREC)
}

fn sqrt_up(v: &Rat) -> Rat {
    debug_assert!(!v.is_negative());
    let scaled: BigInt = (v.numer() << (2 * PREC)).div_ceil(v.denom());
    let mag = nat_of(&scaled);
    let mut root = mag.sqrt();
    if &root * &root < mag {
        root += 1u32;
    }
    Rat::new(BigInt::from(root), BigInt::one() << PREC)
}

/// 2^(1/2^j) for j = 1..=GRID, scaled by 2^PREC, rounded both ways.
fn unit_roots() -> Vec<(Nat, Nat)> {
    let one = Nat::one() << PREC;
    let mut lo = &one << 1u32;
    let mut hi = lo.clone();
    let mut out = Vec::with_capacity(GRID as usize);
    for _ in 0..GRID {
        lo = (&lo << PREC).sqrt();
        let target = &hi << PREC;
        hi = target.sqrt();
        if &hi * &hi < target {
            hi += 1u32;
        }
        out.push((lo.clone(), hi.clone()));
    }
    out
}

/// 2^(n / 2^GRID) with directed rounding, via the binary digits of the
/// fractional part and the precomputed unit roots.
fn pow2_dyadic(n: &BigInt, up: bool, roots: &[(Nat, Nat)]) -> Result<Rat> {
    let grid = BigInt::one() << GRID;
    let (ipart, frac) = n.div_mod_floor(&grid);
    let ipart = ipart.to_i64().ok_or_else(|| {
        Error::Input("depth is far out of range for the warp evaluator".into())
    })?;
    if ipart.abs() > 4096 {
        return Err(Error::Input("depth is far out of range for the warp evaluator".into()));
    }

    let mut acc = Nat::one() << PREC;
    let frac = nat_of(&frac);
    for i in 0..GRID {
        if !frac.bit(u64::from(i)) {
            continue;
        }
        let (lo, hi) = &roots[(GRID - 1 - i) as usize];
        let prod = if up { acc * hi } else { acc * lo };
        acc = if up {
            (&prod + ((Nat::one() << PREC) - Nat::one())) >> PREC
        } else {
            prod >> PREC
        };
    }

    let num = BigInt::from(acc);
    let scale = BigInt::one() << PREC;
    Ok(if ipart >= 0 {
        Rat::new(num << (ipart as u32), scale)
    } else {
        Rat::new(num, scale << ((-ipart) as u32))
    })
}

/// Certified bracket of 2^x for any rational x.
fn bracket_pow2(x: &Rat, roots: &[(Nat, Nat)]) -> Result<(Rat, Rat)> {
    let n: BigInt = (x.numer() << GRID).div_floor(x.denom());
    let lo = pow2_dyadic(&n, false, roots)?;
    let hi = pow2_dyadic(&(n + 1), true, roots)?;
    Ok((lo, hi))
}

#[derive(Clone, Debug)]
pub struct LengthBracket {
    pub lo: Rat,
    pub hi: Rat,
    /// Midpoints per refinement level, outermost first.
    pub levels: Vec<Rat>,
    pub refinements: u32,
    pub segments: usize,
}

impl LengthBracket {
    pub fn mid(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(2.into())
    }
}

/// Length of a piecewise-linear path in the warped half-plane, where a
/// segment from (b1, t1) to (b2, t2) measures sqrt(dt^2 + 2^(-2 t2) db^2).
/// Subdivides every segment in half until successive midpoints agree within
/// the tolerance; errs out when the budget runs dry first.
pub fn warped_length(
    path: &[(Rat, Rat)],
    tolerance: &Rat,
    max_refinements: u32,
) -> Result<LengthBracket> {
    if path.len() < 2 {
        return Err(Error::Input("a path needs at least two points".into()));
    }
    if !tolerance.is_positive() {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    let roots = unit_roots();
    let two = Rat::from_integer(2.into());

    let mut pts: Vec<(Rat, Rat)> = path.to_vec();
    let mut levels: Vec<Rat> = Vec::new();
    let mut prev_mid: Option<Rat> = None;

    for level in 0..=max_refinements {
        let mut lo = Rat::zero();
        let mut hi = Rat::zero();
        for pair in pts.windows(2) {
            let (b1, t1) = &pair[0];
            let (b2, t2) = &pair[1];
            let dt = t2 - t1;
            let db = b2 - b1;
            let dt2 = &dt * &dt;
            if db.is_zero() {
                lo += sqrt_down(&dt2);
                hi += sqrt_up(&dt2);
                continue;
            }
            let db2 = &db * &db;
            let (wl, wh) = bracket_pow2(&(t2 * -&two), &roots)?;
            lo += sqrt_down(&(&dt2 + wl * &db2));
            hi += sqrt_up(&(&dt2 + wh * &db2));
        }
        let mid = (&lo + &hi) / &two;
        levels.push(mid.clone());

        if let Some(prev) = &prev_mid {
            if (&mid - prev).abs() < *tolerance {
                return Ok(LengthBracket {
                    lo,
                    hi,
                    levels,
                    refinements: level,
                    segments: pts.len() - 1,
                });
            }
        }
        prev_mid = Some(mid);
        if level == max_refinements {
            break;
        }

        let mut finer = Vec::with_capacity(pts.len() * 2 - 1);
        for pair in pts.windows(2) {
            let (b1, t1) = &pair[0];
            let (b2, t2) = &pair[1];
            finer.push(pair[0].clone());
            finer.push(((b1 + b2) / &two, (t1 + t2) / &two));
        }
        finer.push(pts.last().expect("nonempty").clone());
        pts = finer;
    }

    Err(Error::Budget(format!(
        "warped length did not settle within {} within {max_refinements} refinements",
        rat_display(tolerance)
    )))
}

#[derive(Clone, Debug)]
pub struct DepthCheck {
    /// Greatest value of depth(v) - slack - depth(map(v)); positive fails.
    pub max_violation: i64,
    pub worst_vertex: Option<u32>,
    pub ok: bool,
}

/// A map between depth-graded vertex sets may lower depth by at most the
/// slack.
pub fn depth_nondecreasing_check(
    depth_dom: &[u32],
    depth_img: &[u32],
    map: &[u32],
    slack: u32,
) -> Result<DepthCheck> {
    if map.len() != depth_dom.len() {
        return Err(Error::Input("map and domain depths disagree in length".into()));
    }
    let mut worst: Option<(i64, u32)> = None;
    for (v, &img) in map.iter().enumerate() {
        let img_depth = *depth_img
            .get(img as usize)
            .ok_or_else(|| Error::Input(format!("image vertex {img} has no depth")))?;
        let violation =
            i64::from(depth_dom[v]) - i64::from(slack) - i64::from(img_depth);
        if worst.as_ref().is_none_or(|(w, _)| violation > *w) {
            worst = Some((violation, v as u32));
        }
    }
    let (max_violation, worst_vertex) = match worst {
        Some((v, at)) => (v, Some(at)),
        None => (i64::MIN, None),
    };
    Ok(DepthCheck { max_violation, worst_vertex, ok: max_violation <= 0 })
}

#[derive(Clone, Debug)]
pub struct CylinderReport {
    pub samples: usize,
    /// max and min of (cylinder length) / (comb distance) over the sample.
    pub max_ratio: Option<Rat>,
    pub min_ratio: Option<Rat>,
    pub max_gap: Rat,
}

impl CylinderReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "samples": self.samples,
            "maxRatio": self.max_ratio.as_ref().map(rat_display),
            "minRatio": self.min_ratio.as_ref().map(rat_display),
            "maxGap": rat_display(&self.max_gap),
        })
    }
}

/// Samples vertex pairs inside single horoball pieces and compares the comb
/// metric of the truncated space with the integer-apex cylinder length
/// (T - t1) + (T - t2) + 2^-T db. Purely observational; nothing is asserted
/// about the ratio.
pub fn cylinder_vs_comb(space: &CuspedSpace, max_pairs: usize, seed: u64) -> Result<CylinderReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eligible: Vec<usize> = (0..space.pieces.len())
        .filter(|&p| space.pieces[p].base_ids.len() >= 2)
        .collect();
    if eligible.is_empty() || max_pairs == 0 {
        return Ok(CylinderReport {
            samples: 0,
            max_ratio: None,
            min_ratio: None,
            max_gap: Rat::zero(),
        });
    }

    let mut max_ratio: Option<Rat> = None;
    let mut min_ratio: Option<Rat> = None;
    let mut max_gap = Rat::zero();
    let mut samples = 0usize;

    for _ in 0..max_pairs {
        let piece = &space.pieces[eligible[rng.gen_range(0..eligible.len())]];
        let locals = piece.base_ids.len();
        let i = rng.gen_range(0..locals);
        let j = rng.gen_range(0..locals);
        if i == j {
            continue;
        }
        let mi = rng.gen_range(0..=space.max_depth);
        let mj = rng.gen_range(0..=space.max_depth);
        let (vi, vj) = (piece.vertex(i, mi), piece.vertex(j, mj));

        let comb = space.graph.bfs_distances(vi)?[vj as usize]
            .ok_or_else(|| Error::Property(format!("{vi} and {vj} are disconnected")))?;
        if comb == 0 {
            continue;
        }

        let base_piece: BTreeSet<u32> = piece.base_ids.iter().copied().collect();
        let db = restricted_distance(&space.graph, &base_piece, piece.base_ids[i], piece.base_ids[j])
            .ok_or_else(|| {
                Error::Property("piece base is disconnected in the base graph".into())
            })?;

        let mut cyl: Option<Rat> = None;
        let start = mi.max(mj);
        for apex in start..=start + 40 {
            let vertical = i64::from(apex - mi) + i64::from(apex - mj);
            let len = Rat::from_integer(vertical.into())
                + Rat::new(BigInt::from(db), BigInt::one() << apex);
            if cyl.as_ref().is_none_or(|c| &len < c) {
                cyl = Some(len);
            }
        }
        let cyl = cyl.expect("apex range is nonempty");

        let comb_rat = Rat::from_integer(comb.into());
        let ratio = &cyl / &comb_rat;
        let gap = (&cyl - &comb_rat).abs();
        max_ratio = Some(max_ratio.map_or(ratio.clone(), |m| m.max(ratio.clone())));
        min_ratio = Some(min_ratio.map_or(ratio.clone(), |m| m.min(ratio)));
        max_gap = max_gap.max(gap);
        samples += 1;
    }

    Ok(CylinderReport { samples, max_ratio, min_ratio, max_gap })
}

fn restricted_distance(g: &Graph, keep: &BTreeSet<u32>, from: u32, to: u32) -> Option<u64> {
    if from == to {
        return Some(0);
    }
    let mut dist: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
    dist.insert(from, 0);
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &w in g.neighbors(v) {
            if !keep.contains(&w) || dist.contains_key(&w) {
                continue;
            }
            if w == to {
                return Some(d + 1);
            }
            dist.insert(w, d + 1);
            queue.push_back(w);
        }
    }
    None
}
