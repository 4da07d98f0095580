//! Geodesic-averaging bicombing and its measured constants.
//!
//! The candidate assigns to each vertex pair the chain whose coefficient on
//! a dag edge is the fraction of geodesics using it. Identities that hold
//! exactly (boundary, antisymmetry, equivariance, unit layer flow) are
//! asserted; everything else is measured over a sample and reported.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::chain::Chain1;
use crate::cusped::CuspedSpace;
use crate::error::{Error, Result};
use crate::graph::{canonical_geodesic, edge_geodesic_fractions, Graph};
use crate::group::CayleyBall;
use crate::rat::{rat_display, rat_int, Rat};
use crate::words::Word;

pub trait Bicombing: Sync {
    fn graph(&self) -> &Graph;
    fn chain(&self, x: u32, y: u32) -> Result<Chain1>;
    fn provenance(&self) -> &'static str;
}

/// Memoizing geodesic-average bicombing over any finite graph.
pub struct GeodesicBicombing<'a> {
    graph: &'a Graph,
    memo: Mutex<BTreeMap<(u32, u32), Chain1>>,
}

impl<'a> GeodesicBicombing<'a> {
    pub fn new(graph: &'a Graph) -> Self {
        GeodesicBicombing { graph, memo: Mutex::new(BTreeMap::new()) }
    }

    pub fn over(space: &'a CuspedSpace) -> Self {
        Self::new(&space.graph)
    }
}

impl Bicombing for GeodesicBicombing<'_> {
    fn graph(&self) -> &Graph {
        self.graph
    }

    fn chain(&self, x: u32, y: u32) -> Result<Chain1> {
        if x == y {
            return Ok(Chain1::new());
        }
        let (lo, hi, flip) = if x < y { (x, y, false) } else { (y, x, true) };
        let cached = self.memo.lock().unwrap().get(&(lo, hi)).cloned();
        let base = match cached {
            Some(c) => c,
            None => {
                let fractions = edge_geodesic_fractions(self.graph, lo, hi)?;
                let mut c = Chain1::new();
                for ((u, v), f) in fractions {
                    c.add_edge(u, v, f);
                }
                self.memo.lock().unwrap().insert((lo, hi), c.clone());
                c
            }
        };
        Ok(if flip { base.neg() } else { base })
    }

    fn provenance(&self) -> &'static str {
        "geodesic-average"
    }
}

/// Hand-authored chains for exercising downstream consumers on cases the
/// geodesic average cannot produce. Chains are completed antisymmetrically
/// and validated against the boundary identity at construction.
pub struct FixedBicombing {
    graph: Graph,
    chains: BTreeMap<(u32, u32), Chain1>,
}

impl FixedBicombing {
    pub fn new(graph: Graph, entries: Vec<((u32, u32), Chain1)>) -> Result<Self> {
        let mut chains = BTreeMap::new();
        for ((x, y), c) in entries {
            let b = c.boundary();
            let expected_len = usize::from(x != y) * 2;
            if b.len() != expected_len
                || (x != y
                    && (b.get(&y) != Some(&rat_int(1)) || b.get(&x) != Some(&rat_int(-1))))
            {
                return Err(Error::Input(format!(
                    "fixed chain for ({x},{y}) has boundary != y - x"
                )));
            }
            chains.insert((y, x), c.neg());
            chains.insert((x, y), c);
        }
        Ok(FixedBicombing { graph, chains })
    }
}

impl Bicombing for FixedBicombing {
    fn graph(&self) -> &Graph {
        &self.graph
    }

    fn chain(&self, x: u32, y: u32) -> Result<Chain1> {
        if x == y {
            return Ok(Chain1::new());
        }
        self.chains
            .get(&(x, y))
            .cloned()
            .ok_or_else(|| Error::Input(format!("no fixed chain for pair ({x},{y})")))
    }

    fn provenance(&self) -> &'static str {
        "fixed-table"
    }
}

/// l1 mass of q(x,y) on edges with an endpoint within `rho` of z. The
/// on-geodesic precondition d(x,z) + d(z,y) = d(x,y) is enforced.
pub fn local_mass(b: &dyn Bicombing, x: u32, y: u32, z: u32, rho: u32) -> Result<Rat> {
    let g = b.graph();
    let from_x = g.bfs_distances(x)?;
    let (dxz, dzy, dxy) = on_geodesic_check(g, &from_x, x, y, z)?;
    let _ = (dxz, dzy, dxy);
    let from_z = g.bfs_distances(z)?;
    let q = b.chain(x, y)?;
    let near = |v: u32| matches!(from_z[v as usize], Some(d) if d <= rho);
    Ok(q.restrict(|u, v| near(u) || near(v)).l1())
}

fn on_geodesic_check(
    g: &Graph,
    from_x: &[Option<u32>],
    x: u32,
    y: u32,
    z: u32,
) -> Result<(u32, u32, u32)> {
    let from_y = g.bfs_distances(y)?;
    let (dxz, dzy, dxy) = match (from_x[z as usize], from_y[z as usize], from_x[y as usize]) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::Input(format!("pair ({x},{y},{z}) not connected"))),
    };
    if dxz + dzy != dxy {
        return Err(Error::Input(format!(
            "{z} is not on a geodesic from {x} to {y} ({dxz}+{dzy} != {dxy})"
        )));
    }
    Ok((dxz, dzy, dxy))
}

/// Signed flow of q(x,y) into z across z's distance layer. For the
/// geodesic average this equals the fraction of geodesics through z.
pub fn crossing_mass_at(b: &dyn Bicombing, x: u32, y: u32, z: u32) -> Result<Rat> {
    if z == x {
        return Ok(Rat::one());
    }
    let g = b.graph();
    let from_x = g.bfs_distances(x)?;
    on_geodesic_check(g, &from_x, x, y, z)?;
    let dz = from_x[z as usize].unwrap();
    let q = b.chain(x, y)?;
    let mut mass = Rat::zero();
    for &u in g.neighbors(z) {
        if from_x[u as usize] == Some(dz - 1) {
            mass += q.coefficient(u, z);
        }
    }
    Ok(mass)
}

/// Largest reciprocal coefficient near z, over the given on-geodesic
/// triples: λ = max over triples of 1 / max|coeff| on B_rho(z) edges.
pub fn lambda_constant(
    b: &dyn Bicombing,
    rho: u32,
    triples: &[(u32, u32, u32)],
) -> Result<Rat> {
    let mut lambda = Rat::one();
    for &(x, y, z) in triples {
        let g = b.graph();
        let from_z = g.bfs_distances(z)?;
        let q = b.chain(x, y)?;
        let near = |v: u32| matches!(from_z[v as usize], Some(d) if d <= rho);
        let local = q.restrict(|u, v| near(u) || near(v));
        let m = local.linf();
        if m.is_zero() {
            return Err(Error::Property(format!(
                "no bicombing mass within {rho} of {z} for pair ({x},{y})"
            )));
        }
        lambda = lambda.max(m.recip());
    }
    Ok(lambda)
}

#[derive(Clone, Debug)]
pub struct Sampler {
    pub exhaustive: bool,
    pub max_pairs: usize,
    pub max_triples: usize,
    pub seed: u64,
}

impl Sampler {
    pub fn exhaustive() -> Self {
        Sampler { exhaustive: true, max_pairs: usize::MAX, max_triples: usize::MAX, seed: 0 }
    }

    pub fn random(max_pairs: usize, max_triples: usize, seed: u64) -> Self {
        Sampler { exhaustive: false, max_pairs, max_triples, seed }
    }

    /// Pairs x < y. Random mode draws a prefix-stable stream so enlarging
    /// the sample only appends pairs.
    pub fn pairs(&self, n: u32) -> Vec<(u32, u32)> {
        if self.exhaustive {
            let mut out = Vec::new();
            for x in 0..n {
                for y in x + 1..n {
                    out.push((x, y));
                }
            }
            return out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut seen = std::collections::BTreeSet::new();
        let cap = (u64::from(n) * u64::from(n.saturating_sub(1)) / 2).min(self.max_pairs as u64);
        let mut out = Vec::new();
        while (out.len() as u64) < cap {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let p = (a.min(b), a.max(b));
            if seen.insert(p) {
                out.push(p);
            }
        }
        out
    }

    pub fn triples(&self, n: u32) -> Vec<(u32, u32, u32)> {
        if self.exhaustive {
            let mut out = Vec::new();
            for x in 0..n {
                for y in x + 1..n {
                    for z in y + 1..n {
                        out.push((x, y, z));
                    }
                }
            }
            return out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        let mut seen = std::collections::BTreeSet::new();
        let total = {
            let n = u64::from(n);
            n * n.saturating_sub(1) * n.saturating_sub(2) / 6
        };
        let cap = total.min(self.max_triples as u64);
        let mut out = Vec::new();
        while (out.len() as u64) < cap {
            let mut t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] {
                continue;
            }
            let key = (t[0], t[1], t[2]);
            if seen.insert(key) {
                out.push(key);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BicombingConstants {
    /// Hausdorff spread of the support around the canonical geodesic (B2).
    pub delta_supp: u32,
    /// max ||q(x,y)||_1 / d(x,y); exactly 1 for the geodesic average.
    pub c1_ratio: Rat,
    /// max ||q(x,y)||_inf over tested pairs.
    pub delta_inf: Rat,
    /// max ||q(x,y)+q(y,z)+q(z,x)||_1 over tested triples (B5).
    pub delta_defect: Rat,
    /// least radius giving local mass >= 1 at every tested on-geodesic z.
    pub rho: u32,
    /// max over tested on-geodesic triples of 1 / max coeff near z.
    pub lambda: Rat,
    pub pairs_tested: usize,
    pub triples_tested: usize,
    pub mass_triples_tested: usize,
    pub b3_translations_tested: usize,
    pub metric_mode: &'static str,
    pub provenance: &'static str,
}

impl BicombingConstants {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "deltaSupp": self.delta_supp,
            "c1Ratio": rat_display(&self.c1_ratio),
            "deltaInf": rat_display(&self.delta_inf),
            "deltaDefect": rat_display(&self.delta_defect),
            "rho": self.rho,
            "lambda": rat_display(&self.lambda),
            "pairsTested": self.pairs_tested,
            "triplesTested": self.triples_tested,
            "massTriplesTested": self.mass_triples_tested,
            "b3TranslationsTested": self.b3_translations_tested,
            "metricMode": self.metric_mode,
            "provenance": self.provenance,
        })
    }
}

/// Context for equivariance testing: the group acts on the cusped space by
/// left translation where the ball permits.
pub struct TranslationContext<'a> {
    pub space: &'a CuspedSpace,
    pub ball: &'a CayleyBall,
    pub generators: Vec<Word>,
}

impl<'a> TranslationContext<'a> {
    pub fn new(space: &'a CuspedSpace, ball: &'a CayleyBall, n_gens: usize) -> Self {
        let mut generators = Vec::new();
        for g in 0..n_gens {
            generators.push(Word::letter(g, false));
            generators.push(Word::letter(g, true));
        }
        TranslationContext { space, ball, generators }
    }
}

pub fn axiom_suite(
    b: &dyn Bicombing,
    ctx: Option<&TranslationContext<'_>>,
    sampler: &Sampler,
) -> Result<BicombingConstants> {
    let g = b.graph();
    let n = g.n_vertices() as u32;
    let pairs = sampler.pairs(n);

    // B1 at the diagonal.
    for x in [0, n / 2, n - 1] {
        if !b.chain(x, x)?.is_zero() {
            return Err(Error::Property(format!("q({x},{x}) is not the zero chain")));
        }
    }

    let mut delta_supp = 0u32;
    let mut c1_ratio = Rat::zero();
    let mut delta_inf = Rat::zero();
    let mut b3_tested = 0usize;

    for &(x, y) in &pairs {
        let q = b.chain(x, y)?;
        let from_x = g.bfs_distances(x)?;
        let d = from_x[y as usize]
            .ok_or_else(|| Error::Input(format!("pair ({x},{y}) disconnected")))?;

        // B1: boundary is exactly y - x.
        let bd = q.boundary();
        if bd.len() != 2
            || bd.get(&y) != Some(&rat_int(1))
            || bd.get(&x) != Some(&rat_int(-1))
        {
            return Err(Error::Property(format!(
                "boundary of q({x},{y}) differs from y - x"
            )));
        }

        // B4: exact antisymmetry.
        let mut sum = b.chain(y, x)?;
        sum.add(&q);
        if !sum.is_zero() {
            return Err(Error::Property(format!("q({y},{x}) != -q({x},{y})")));
        }

        // Support spread around the canonical geodesic, and the l1/d ratio.
        let side = canonical_geodesic(g, x, y)?;
        let near = g.bfs_multi(&side);
        for (&(u, v), _) in q.support() {
            for w in [u, v] {
                let spread = near[w as usize].unwrap();
                delta_supp = delta_supp.max(spread);
            }
        }
        let ratio = q.l1() / rat_int(i64::from(d));
        c1_ratio = c1_ratio.max(ratio);
        delta_inf = delta_inf.max(q.linf());

        // Unit signed flow across every distance layer.
        for layer in 0..d {
            let mut flow = Rat::zero();
            for (&(u, v), c) in q.support() {
                let (du, dv) = (from_x[u as usize].unwrap(), from_x[v as usize].unwrap());
                if du == layer && dv == layer + 1 {
                    flow += c;
                } else if dv == layer && du == layer + 1 {
                    flow -= c;
                }
            }
            if flow != Rat::one() {
                return Err(Error::Property(format!(
                    "layer {layer} flow of q({x},{y}) is {} instead of 1",
                    rat_display(&flow)
                )));
            }
        }

        // B3 where a translation is defined on both supports. Forward
        // images of geodesics and backward images of their counterparts
        // are inverse injections, so the geodesic sets and their edge
        // counts correspond and chain equality is forced, not clipped.
        if let Some(ctx) = ctx {
            for t in &ctx.generators {
                let fwd = |v: u32| ctx.space.translate_vertex(ctx.ball, t, v);
                let (tx, ty) = match (fwd(x), fwd(y)) {
                    (Some(a), Some(bb)) => (a, bb),
                    _ => continue,
                };
                let tq = match q.translate(fwd) {
                    Some(tq) => tq,
                    None => continue,
                };
                let direct = b.chain(tx, ty)?;
                let tinv = t.inverse();
                let bwd = |v: u32| ctx.space.translate_vertex(ctx.ball, &tinv, v);
                if direct.translate(bwd).is_none() {
                    continue;
                }
                if direct != tq {
                    return Err(Error::Property(format!(
                        "translate of q({x},{y}) disagrees with q({tx},{ty})"
                    )));
                }
                b3_tested += 1;
            }
        }
    }

    // Defect over arbitrary triples (B5).
    let triples = sampler.triples(n);
    let mut delta_defect = Rat::zero();
    for &(x, y, z) in &triples {
        let mut defect = b.chain(x, y)?;
        defect.add(&b.chain(y, z)?);
        defect.add(&b.chain(z, x)?);
        delta_defect = delta_defect.max(defect.l1());
    }

    // Local mass radius and coefficient floor on on-geodesic triples.
    let mut mass_triples = Vec::new();
    for &(x, y) in &pairs {
        let from_x = g.bfs_distances(x)?;
        let from_y = g.bfs_distances(y)?;
        let d = from_x[y as usize].unwrap();
        for z in 0..n {
            if z == x || z == y {
                continue;
            }
            if let (Some(a), Some(bb)) = (from_x[z as usize], from_y[z as usize]) {
                if a + bb == d {
                    mass_triples.push((x, y, z));
                }
            }
        }
        if !sampler.exhaustive && mass_triples.len() >= sampler.max_triples {
            mass_triples.truncate(sampler.max_triples);
            break;
        }
    }
    let mut rho = 0u32;
    for &(x, y, z) in &mass_triples {
        let mut r = rho;
        loop {
            if local_mass(b, x, y, z, r)? >= Rat::one() {
                break;
            }
            r += 1;
        }
        rho = rho.max(r);
    }
    let lambda = if mass_triples.is_empty() {
        Rat::one()
    } else {
        lambda_constant(b, rho, &mass_triples)?
    };

    Ok(BicombingConstants {
        delta_supp,
        c1_ratio,
        delta_inf,
        delta_defect,
        rho,
        lambda,
        pairs_tested: pairs.len(),
        triples_tested: triples.len(),
        mass_triples_tested: mass_triples.len(),
        b3_translations_tested: b3_tested,
        metric_mode: "truncated",
        provenance: b.provenance(),
    })
}
