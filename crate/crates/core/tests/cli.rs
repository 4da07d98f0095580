//! End-to-end runs of the binary: exit codes, artifact contents, and
//! byte-level determinism of the reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cuspbench::rat::{rat, rat_parse};

const SMALL: &str = r#"{
  "presentation": {"generators": ["a", "b"], "peripherals": [["a"]]},
  "radii": {"ball": 3, "depth": 2, "filter": 2, "r0": 1, "margin": 1},
  "seeds": {"sampler": 5},
  "sampling": {"maxPairs": 60, "maxTriples": 24},
  "budgets": {"sweeps": 8},
  "maxIndex": 2,
  "outputDir": "out"
}"#;

const TREE: &str = r#"{
  "presentation": {"generators": ["a", "b"], "peripherals": []},
  "radii": {"ball": 4, "depth": 0, "filter": 0, "r0": 1, "margin": 0},
  "seeds": {"sampler": 3},
  "sampling": {"maxPairs": 120, "maxTriples": 120},
  "maxIndex": 1,
  "outputDir": "out"
}"#;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspbench"))
        .args(args)
        .current_dir(dir)
        .env_remove("CUSPBENCH_CACHE")
        .output()
        .expect("binary runs")
}

fn setup(manifest: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, manifest).unwrap();
    (dir, path)
}

fn read_out(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name))
        .unwrap_or_else(|e| panic!("missing artifact {name}: {e}"))
}

#[test]
fn build_cusped_repeats_byte_for_byte() {
    let (dir, manifest) = setup(SMALL);
    let out = run_in(dir.path(), &["build-cusped", manifest.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let first = read_out(dir.path(), "cusped.json");
    assert!(first.contains("\"census\""));

    let again = run_in(dir.path(), &["build-cusped", manifest.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(first, read_out(dir.path(), "cusped.json"));
}

#[test]
fn malformed_manifests_exit_two_with_a_position() {
    let (dir, manifest) = setup("{\n  \"presentation\": nope\n}");
    let out = run_in(dir.path(), &["build-cusped", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "no position in {err:?}");
}

#[test]
fn resolve_reports_the_wedge_resolution() {
    let (dir, manifest) = setup(SMALL);
    let out = run_in(dir.path(), &["resolve", manifest.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let doc: serde_json::Value =
        serde_json::from_str(&read_out(dir.path(), "resolution.json")).unwrap();
    assert_eq!(doc["complex"]["vol"], 15);
    assert_eq!(doc["weight"]["wWindow"], "2");
    assert_eq!(doc["coverage"]["flagged"], false);
    assert_eq!(doc["map"]["converged"], true);
    assert!(doc["run"]["manifestHash"].as_str().unwrap().len() == 64);

    let pattern = read_out(dir.path(), "pattern.json");
    assert!(pattern.contains("connectors"));
    assert!(read_out(dir.path(), "pattern.svg").contains("<svg"));
}

#[test]
fn reduce_round_trips_the_resolved_pattern() {
    let (dir, manifest) = setup(SMALL);
    let out = run_in(dir.path(), &["resolve", manifest.to_str().unwrap()]);
    assert!(out.status.success());

    let pattern_path = dir.path().join("out").join("pattern.json");
    let out = run_in(
        dir.path(),
        &["reduce", manifest.to_str().unwrap(), pattern_path.to_str().unwrap()],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&read_out(dir.path(), "reduction.json")).unwrap();
    assert_eq!(doc["inequalityHolds"], true);
    assert_eq!(doc["defectAfter"], "0");

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"connectors\": [[1,2,3").unwrap();
    let out = run_in(
        dir.path(),
        &["reduce", manifest.to_str().unwrap(), garbage.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn survey_output_is_cache_stable() {
    let (dir, manifest) = setup(SMALL);
    let fresh = run_in(dir.path(), &["survey", manifest.to_str().unwrap(), "--jobs", "2"]);
    assert!(fresh.status.success(), "stderr: {}", String::from_utf8_lossy(&fresh.stderr));
    let baseline = read_out(dir.path(), "survey.csv");
    let mut lines = baseline.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,vol,w_leq_R,lower_bound,w_over_index,vol_over_index,coverage_R,flags"
    );
    assert_eq!(lines.count(), 4, "index 1 plus three of index 2");

    let cache = dir.path().join("cache");
    for _ in 0..2 {
        let out = Command::new(env!("CARGO_BIN_EXE_cuspbench"))
            .args(["survey", manifest.to_str().unwrap()])
            .current_dir(dir.path())
            .env("CUSPBENCH_CACHE", &cache)
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        assert_eq!(baseline, read_out(dir.path(), "survey.csv"));
    }
    assert!(cache.read_dir().unwrap().count() >= 2, "cache dir stayed empty");
}

#[test]
fn tree_constants_report_zero_defect() {
    let (dir, manifest) = setup(TREE);
    let out = run_in(dir.path(), &["check-bicombing", manifest.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&read_out(dir.path(), "constants.json")).unwrap();
    assert_eq!(doc["constants"]["deltaDefect"], "0");
    assert_eq!(doc["constants"]["deltaInf"], "1");
}

#[test]
fn report_brackets_the_spot_paths() {
    let (dir, manifest) = setup(SMALL);
    let out = run_in(dir.path(), &["report", manifest.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let doc: serde_json::Value =
        serde_json::from_str(&read_out(dir.path(), "report.json")).unwrap();
    let paths = doc["paths"].as_array().unwrap();
    let horizontal = paths
        .iter()
        .find(|p| p["name"] == "horizontal-depth-1")
        .expect("spot path present");
    let lo = rat_parse(horizontal["lo"].as_str().unwrap()).unwrap();
    let hi = rat_parse(horizontal["hi"].as_str().unwrap()).unwrap();
    assert!(lo <= rat(1, 2) && rat(1, 2) <= hi);

    let csv = read_out(dir.path(), "paths.csv");
    assert_eq!(csv.lines().next().unwrap(), "name,segments,refinements,lo,hi,mid");
    assert_eq!(csv.lines().count(), 5);
    assert!(doc["rips"]["census"].as_array().unwrap()[0].as_u64().unwrap() > 0);
}
