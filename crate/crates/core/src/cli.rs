//! Command line front door. Every subcommand reads one manifest, derives
//! everything from it, and writes deterministic artifacts into the manifest's
//! output directory. Flags never influence report bytes; they only pick
//! worker counts and verbosity.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::bicombing::{axiom_suite, GeodesicBicombing, Sampler, TranslationContext};
use crate::complex2::{cover, rep_vertex_map};
use crate::cusped::cusped_from_pair;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::pattern;
use crate::rat::{rat, rat_display, rat_int, Rat};
use crate::resolution::{
    base_complex, check_resolution, coverage_radius, minimize_displacement, resolve,
    rigidity_survey, survey_csv, track_checks, upper_bound_check, SurveyConfig, VertexMap,
};
use crate::ripscyl::{cylinder_vs_comb, graph_metric, rips, rips_census_json, warped_length};
use crate::subgroups::enumerate_subgroups;

pub const CACHE_ENV: &str = "CUSPBENCH_CACHE";

#[derive(Parser, Debug)]
#[command(
    name = "cuspbench",
    version,
    about = "cusped spaces over group pairs: bicombings, patterns, covering surveys"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for survey rows and simplex shards; 0 picks the
    /// machine's parallelism.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Progress notes on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the truncated cusped space; writes its census and a render.
    BuildCusped { manifest: PathBuf },
    /// Run the bicombing axiom suite; writes the constants report.
    CheckBicombing { manifest: PathBuf },
    /// Resolve the base complex through the bicombing; writes the pattern
    /// and its report.
    Resolve { manifest: PathBuf },
    /// Validate a pattern file against the manifest's complex and reduce it
    /// to a perfect pattern.
    Reduce { manifest: PathBuf, pattern: PathBuf },
    /// Resolve every cover up to the index bound; writes the band table.
    Survey { manifest: PathBuf },
    /// Aggregate census, Rips skeleton, cylinder comparison, and warped
    /// path evaluations.
    Report { manifest: PathBuf },
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class().code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let jobs = if cli.jobs > 0 {
        cli.jobs
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    };
    let ctx = Ctx { jobs, verbose: cli.verbose };
    match &cli.command {
        Command::BuildCusped { manifest } => cmd_build_cusped(&load(manifest)?, &ctx),
        Command::CheckBicombing { manifest } => cmd_check_bicombing(&load(manifest)?, &ctx),
        Command::Resolve { manifest } => cmd_resolve(&load(manifest)?, &ctx),
        Command::Reduce { manifest, pattern } => cmd_reduce(&load(manifest)?, pattern, &ctx),
        Command::Survey { manifest } => cmd_survey(&load(manifest)?, &ctx),
        Command::Report { manifest } => cmd_report(&load(manifest)?, &ctx),
    }
}

struct Ctx {
    jobs: usize,
    verbose: bool,
}

impl Ctx {
    fn note(&self, msg: &str) {
        if self.verbose {
            eprintln!("[cuspbench] {msg}");
        }
    }
}

fn load(path: &Path) -> Result<RunManifest> {
    RunManifest::from_path(path)
}

fn write_artifact(m: &RunManifest, name: &str, text: &str, ctx: &Ctx) -> Result<()> {
    let dir = PathBuf::from(&m.output_dir);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    ctx.note(&format!("wrote {}", path.display()));
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn cache_lookup(hash: &str, name: &str) -> Option<String> {
    let dir = std::env::var_os(CACHE_ENV)?;
    std::fs::read_to_string(Path::new(&dir).join(format!("{hash}-{name}"))).ok()
}

fn cache_store(hash: &str, name: &str, text: &str) {
    let Some(dir) = std::env::var_os(CACHE_ENV) else { return };
    let dir = PathBuf::from(dir);
    if std::fs::create_dir_all(&dir).is_ok() {
        let _ = std::fs::write(dir.join(format!("{hash}-{name}")), text);
    }
}

fn sampler_of(m: &RunManifest) -> Sampler {
    if m.sampling.max_pairs == 0 {
        Sampler::exhaustive()
    } else {
        Sampler::random(m.sampling.max_pairs, m.sampling.max_triples, m.seeds.sampler)
    }
}

fn cmd_build_cusped(m: &RunManifest, ctx: &Ctx) -> Result<()> {
    let pair = m.pair()?;
    let (ball, space) = cusped_from_pair(&pair, m.radii.ball, Some(m.radii.depth))?;
    ctx.note(&format!(
        "cusped space: {} vertices, {} edges, {} pieces",
        space.graph.n_vertices(),
        space.graph.n_edges(),
        space.pieces.len()
    ));
    let clipped = space.pieces.iter().filter(|p| p.clipped).count();
    let approximate = space.pieces.iter().filter(|p| p.approximate).count();
    let doc = json!({
        "run": m.stamp(),
        "ball": {
            "radius": ball.radius,
            "vertices": ball.graph.n_vertices(),
            "sphereSizes": ball.sphere_sizes,
        },
        "cusped": {
            "vertices": space.graph.n_vertices(),
            "edges": space.graph.n_edges(),
            "maxDepth": space.max_depth,
            "pieces": space.pieces.len(),
            "clippedPieces": clipped,
            "approximatePieces": approximate,
            "census": space.census(),
        },
    });
    write_artifact(m, "cusped.json", &pretty(&doc), ctx)?;
    write_artifact(m, "cusped.dot", &space.to_dot(), ctx)
}

fn cmd_check_bicombing(m: &RunManifest, ctx: &Ctx) -> Result<()> {
    let hash = m.hash();
    if let Some(text) = cache_lookup(&hash, "constants.json") {
        ctx.note("constants report served from cache");
        return write_artifact(m, "constants.json", &text, ctx);
    }
    let pair = m.pair()?;
    let (ball, space) = cusped_from_pair(&pair, m.radii.ball, Some(m.radii.depth))?;
    let b = GeodesicBicombing::over(&space);
    let tc = TranslationContext::new(&space, &ball, pair.presentation.n_gens());
    let constants = axiom_suite(&b, Some(&tc), &sampler_of(m))?;
    let doc = json!({
        "run": m.stamp(),
        "constants": constants.to_json(),
    });
    let text = pretty(&doc);
    cache_store(&hash, "constants.json", &text);
    write_artifact(m, "constants.json", &text, ctx)
}

fn cmd_resolve(m: &RunManifest, ctx: &Ctx) -> Result<()> {
    let pair = m.pair()?;
    let (ball, space) = cusped_from_pair(&pair, m.radii.ball, Some(m.radii.depth))?;
    let b = GeodesicBicombing::over(&space);
    let base = base_complex(&pair)?;
    let recs = enumerate_subgroups(&pair, 1, m.budgets.enumeration)?;
    let rec = recs
        .first()
        .ok_or_else(|| Error::Property("subgroup enumeration lost the whole group".into()))?;
    let cov = cover(&base, rec, &pair)?;
    let cx = &cov.complex;

    let phi0 = VertexMap { images: rep_vertex_map(&cov, rec, &ball)? };
    let min = minimize_displacement(cx, &phi0, &space, Some(&ball), m.budgets.sweeps)?;
    ctx.note(&format!(
        "vertex map settled at displacement {} after {} sweeps",
        min.displacement, min.sweeps
    ));
    let res = resolve(cx, &min.phi, &b, &space, Some(&ball), m.radii.margin)?;
    let checks = check_resolution(&res, cx, &b, &space, Some(&ball), 0)?;
    let tracks = track_checks(&res, cx, &space, Some(&ball))?;
    let upper = upper_bound_check(&res, cx, m.radii.filter)?;
    let coverage = coverage_radius(&res, &space, Some(&ball), m.radii.margin)?;

    let doc = json!({
        "run": m.stamp(),
        "complex": {
            "vertices": cx.n_vertices(),
            "edges": cx.n_edges(),
            "triangles": cx.n_triangles(),
            "vol": cx.vol(),
        },
        "map": {
            "displacement": min.displacement,
            "sweeps": min.sweeps,
            "converged": min.converged,
            "margin": res.margin,
        },
        "checks": {
            "edgesChecked": checks.edges_checked,
            "orderPairs": checks.order_pairs,
            "framedGroups": checks.framed_groups,
        },
        "tracks": {
            "count": tracks.n_tracks,
            "connectors": tracks.n_connectors,
            "segments": tracks.n_segments,
            "maxTrackLen": tracks.max_track_len,
            "t4Max": tracks.t4_max,
            "t4Pairs": tracks.t4_pairs,
        },
        "weight": {
            "total": rat_display(&pattern::weight_total(&res.pattern)),
            "windowRadius": m.radii.filter,
            "wWindow": rat_display(&upper.w),
            "vol": upper.vol,
            "wOverVol": rat_display(&upper.w_over_vol),
            "reducedW": rat_display(&upper.reduced_w),
            "defect": rat_display(&upper.defect),
        },
        "coverage": {
            "radius": coverage.radius,
            "flagged": coverage.flagged,
            "tested": coverage.tested,
            "imageSize": coverage.image_size,
        },
    });
    write_artifact(m, "resolution.json", &pretty(&doc), ctx)?;
    write_artifact(m, "pattern.json", &pattern::to_json(&res.pattern)?, ctx)?;
    write_artifact(m, "pattern.dot", &pattern::to_dot(&res.pattern), ctx)?;
    write_artifact(m, "pattern.svg", &pattern::to_svg(&res.pattern, cx), ctx)
}

fn cmd_reduce(m: &RunManifest, pattern_path: &Path, ctx: &Ctx) -> Result<()> {
    let pair = m.pair()?;
    let cx = base_complex(&pair)?;
    let text = std::fs::read_to_string(pattern_path).map_err(|e| {
        Error::Input(format!("cannot read pattern {}: {e}", pattern_path.display()))
    })?;
    let p = pattern::from_json(&text)?;
    let report = pattern::validate(&p, &cx);
    if !report.valid {
        return Err(Error::Input(format!(
            "pattern does not fit the manifest's complex:\n{}",
            report.display()
        )));
    }

    let w_before = pattern::weight_total(&p);
    let df_before = pattern::defect_total(&p);
    let (reduced, w_after) = pattern::perfect_reduce(&p, &cx)?;
    let bound = &w_after + &df_before;
    let doc = json!({
        "run": m.stamp(),
        "wBefore": rat_display(&w_before),
        "wAfter": rat_display(&w_after),
        "defectBefore": rat_display(&df_before),
        "defectAfter": rat_display(&pattern::defect_total(&reduced)),
        "wBound": rat_display(&bound),
        "inequalityHolds": w_before <= bound,
    });
    write_artifact(m, "reduction.json", &pretty(&doc), ctx)?;
    write_artifact(m, "reduced.json", &pattern::to_json(&reduced)?, ctx)
}

fn cmd_survey(m: &RunManifest, ctx: &Ctx) -> Result<()> {
    let hash = m.hash();
    if let (Some(csv), Some(js)) =
        (cache_lookup(&hash, "survey.csv"), cache_lookup(&hash, "survey.json"))
    {
        ctx.note("survey served from cache");
        write_artifact(m, "survey.csv", &csv, ctx)?;
        return write_artifact(m, "survey.json", &js, ctx);
    }

    let pair = m.pair()?;
    let cfg = SurveyConfig {
        ball_radius: m.radii.ball,
        max_depth: Some(m.radii.depth),
        filter_r: m.radii.filter,
        r0: m.radii.r0,
        rho: m.radii.rho,
        margin: m.radii.margin,
        sweep_budget: m.budgets.sweeps,
        enum_budget: m.budgets.enumeration,
        max_pairs: m.sampling.max_pairs,
        max_triples: m.sampling.max_triples,
        seed: m.seeds.sampler,
        jobs: ctx.jobs,
    };
    let survey = rigidity_survey(&pair, m.max_index, &cfg)?;
    ctx.note(&format!("{} rows surveyed", survey.rows.len()));

    let rows: Vec<serde_json::Value> = survey
        .rows
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "vol": r.vol,
                "wLeqR": rat_display(&r.w_leq_r),
                "lowerBound": rat_display(&r.lower_bound),
                "wOverIndex": rat_display(&r.w_over_index),
                "volOverIndex": rat_display(&r.vol_over_index),
                "coverageR": r.coverage_r,
                "displacement": r.displacement,
                "converged": r.converged,
                "t4Max": r.t4_max,
                "flags": r.flags,
            })
        })
        .collect();
    let doc = json!({
        "run": m.stamp(),
        "maxIndex": m.max_index,
        "rhoUsed": survey.rho_used,
        "lambda": rat_display(&survey.lambda),
        "band": survey.band.as_ref().map(|(lo, hi)| json!({
            "lo": rat_display(lo),
            "hi": rat_display(hi),
            "ratio": rat_display(&(hi / lo)),
        })),
        "volOverIndexConstant": survey.vol_over_index_constant,
        "constants": survey.constants.to_json(),
        "rows": rows,
    });

    let csv = survey_csv(&survey);
    let js = pretty(&doc);
    cache_store(&hash, "survey.csv", &csv);
    cache_store(&hash, "survey.json", &js);
    write_artifact(m, "survey.csv", &csv, ctx)?;
    write_artifact(m, "survey.json", &js, ctx)
}

fn spot_paths(depth: u32) -> Vec<(&'static str, Vec<(Rat, Rat)>)> {
    let d = rat_int(i64::from(depth));
    vec![
        ("vertical-unit", vec![(rat_int(0), rat_int(0)), (rat_int(0), rat_int(1))]),
        ("horizontal-depth-1", vec![(rat_int(0), rat_int(1)), (rat_int(1), rat_int(1))]),
        (
            "corner",
            vec![
                (rat_int(0), rat_int(0)),
                (rat_int(0), rat_int(1)),
                (rat_int(1), rat_int(1)),
            ],
        ),
        (
            "descend-cross-return",
            vec![
                (rat_int(0), rat_int(0)),
                (rat_int(0), d.clone()),
                (rat_int(1), d),
                (rat_int(1), rat_int(0)),
            ],
        ),
    ]
}

fn cmd_report(m: &RunManifest, ctx: &Ctx) -> Result<()> {
    let pair = m.pair()?;
    let (_ball, space) = cusped_from_pair(&pair, m.radii.ball, Some(m.radii.depth))?;
    let metric = graph_metric(&space.graph)?;
    let n = space.graph.n_vertices() as u32;
    let rc = rips(n, &metric, m.rips.threshold, m.rips.dim_cap, m.budgets.simplices, ctx.jobs)?;
    ctx.note(&format!("rips census {:?}", rc.census));
    let cyl = cylinder_vs_comb(&space, m.sampling.max_pairs, m.seeds.sampler)?;

    let tol = rat(1, 1000);
    let mut path_rows = Vec::new();
    let mut csv = String::from("name,segments,refinements,lo,hi,mid\n");
    for (name, path) in spot_paths(m.radii.depth.max(1)) {
        let out = warped_length(&path, &tol, m.budgets.refinements)?;
        csv.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            out.segments,
            out.refinements,
            rat_display(&out.lo),
            rat_display(&out.hi),
            rat_display(&out.mid()),
        ));
        path_rows.push(json!({
            "name": name,
            "segments": out.segments,
            "refinements": out.refinements,
            "lo": rat_display(&out.lo),
            "hi": rat_display(&out.hi),
            "mid": rat_display(&out.mid()),
        }));
    }

    let doc = json!({
        "run": m.stamp(),
        "cusped": {
            "vertices": space.graph.n_vertices(),
            "edges": space.graph.n_edges(),
            "census": space.census(),
        },
        "rips": rips_census_json(&rc),
        "cylinder": cyl.to_json(),
        "paths": path_rows,
    });
    write_artifact(m, "report.json", &pretty(&doc), ctx)?;
    write_artifact(m, "paths.csv", &csv, ctx)
}
