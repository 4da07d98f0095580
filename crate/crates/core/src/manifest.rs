//! Run manifests. A single JSON document pins every parameter that can
//! change an output byte; its hash names the run and is embedded in every
//! report. The output directory stays outside the hash so the same run can
//! land anywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{parse_pair_json, GroupPair};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Radii {
    /// Cayley ball radius.
    pub ball: u32,
    /// Horoball truncation depth.
    pub depth: u32,
    /// Depth filter radius for the windowed weight.
    pub filter: u32,
    /// Separation radius for lower-bound centers.
    pub r0: u32,
    /// Mass-capture radius; absent means take it from the constants report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<u32>,
    #[serde(default)]
    pub margin: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub sampler: u64,
    #[serde(default)]
    pub patterns: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { sampler: 0, patterns: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Sampling {
    /// 0 means exhaustive.
    #[serde(default = "default_pairs")]
    pub max_pairs: usize,
    #[serde(default = "default_triples")]
    pub max_triples: usize,
}

fn default_pairs() -> usize {
    600
}
fn default_triples() -> usize {
    240
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { max_pairs: default_pairs(), max_triples: default_triples() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Coset-table cells for subgroup enumeration.
    #[serde(default = "default_enumeration")]
    pub enumeration: u64,
    /// Displacement-minimization sweeps per cover.
    #[serde(default = "default_sweeps")]
    pub sweeps: u64,
    /// Simplex cap for Rips construction.
    #[serde(default = "default_simplices")]
    pub simplices: u64,
    /// Refinement levels for warped-length evaluation.
    #[serde(default = "default_refinements")]
    pub refinements: u32,
}

fn default_enumeration() -> u64 {
    10_000_000
}
fn default_sweeps() -> u64 {
    64
}
fn default_simplices() -> u64 {
    5_000_000
}
fn default_refinements() -> u32 {
    24
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            enumeration: default_enumeration(),
            sweeps: default_sweeps(),
            simplices: default_simplices(),
            refinements: default_refinements(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RipsParams {
    #[serde(default = "default_threshold")]
    pub threshold: u64,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: u32,
}

fn default_threshold() -> u64 {
    1
}
fn default_dim_cap() -> u32 {
    3
}

impl Default for RipsParams {
    fn default() -> Self {
        RipsParams { threshold: default_threshold(), dim_cap: default_dim_cap() }
    }
}

/// Either the presentation document itself or a path to one, relative to
/// the manifest file. Paths are resolved and inlined at load time, so the
/// hash covers the presentation content rather than its location.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum PresentationSource {
    File { file: String },
    Inline(serde_json::Value),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunManifest {
    #[serde(default = "default_version")]
    pub version: String,
    pub presentation: PresentationSource,
    pub radii: Radii,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub rips: RipsParams,
    #[serde(default = "default_max_index")]
    pub max_index: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_version() -> String {
    TOOL_VERSION.to_string()
}
fn default_max_index() -> u32 {
    1
}
fn default_output_dir() -> String {
    "out".to_string()
}

impl RunManifest {
    pub fn from_path(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Input(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        RunManifest::from_text(&text, path.parent())
    }

    pub fn from_text(text: &str, base: Option<&Path>) -> Result<RunManifest> {
        let mut m: RunManifest = serde_json::from_str(text)?;
        m.resolve_presentation(base)?;
        m.check()?;
        Ok(m)
    }

    fn resolve_presentation(&mut self, base: Option<&Path>) -> Result<()> {
        if let PresentationSource::File { file } = &self.presentation {
            let path = match base {
                Some(dir) => dir.join(file),
                None => Path::new(file).to_path_buf(),
            };
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Error::Input(format!("cannot read presentation {}: {e}", path.display()))
            })?;
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            self.presentation = PresentationSource::Inline(doc);
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if self.max_index == 0 {
            return Err(Error::Input("maxIndex must be at least 1".into()));
        }
        if self.rips.dim_cap == 0 {
            return Err(Error::Input("rips.dimCap must be at least 1".into()));
        }
        if self.radii.filter > self.radii.depth {
            return Err(Error::Input(format!(
                "filter radius {} exceeds the truncation depth {}",
                self.radii.filter, self.radii.depth
            )));
        }
        Ok(())
    }

    pub fn pair(&self) -> Result<GroupPair> {
        match &self.presentation {
            PresentationSource::Inline(doc) => parse_pair_json(&doc.to_string()),
            PresentationSource::File { file } => Err(Error::Input(format!(
                "presentation file {file} was never resolved"
            ))),
        }
    }

    /// Sha-256 over the canonical JSON form with the output directory
    /// removed. Key order is sorted by the serializer, so the hash does not
    /// depend on field order in the source file.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        v.as_object_mut().expect("manifest is an object").remove("outputDir");
        let canon = v.to_string();
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Header block embedded in every report.
    pub fn stamp(&self) -> serde_json::Value {
        serde_json::json!({
            "manifestHash": self.hash(),
            "manifestVersion": self.version,
            "toolVersion": TOOL_VERSION,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(output_dir: &str) -> String {
        format!(
            r#"{{
                "presentation": {{"generators": ["a", "b"], "peripherals": [["a"]]}},
                "radii": {{"ball": 4, "depth": 2, "filter": 2, "r0": 1, "margin": 1}},
                "outputDir": "{output_dir}"
            }}"#
        )
    }

    #[test]
    fn the_output_directory_stays_out_of_the_hash() {
        let a = RunManifest::from_text(&minimal("out-a"), None).unwrap();
        let b = RunManifest::from_text(&minimal("out-b"), None).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.output_dir, b.output_dir);

        let mut c = a.clone();
        c.radii.ball = 5;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn defaults_fill_and_unknown_keys_are_rejected() {
        let m = RunManifest::from_text(&minimal("out"), None).unwrap();
        assert_eq!(m.max_index, 1);
        assert_eq!(m.sampling.max_pairs, 600);
        assert_eq!(m.budgets.refinements, 24);
        assert_eq!(m.rips.dim_cap, 3);
        assert_eq!(m.version, TOOL_VERSION);

        let bad = r#"{
            "presentation": {"generators": ["a"], "peripherals": []},
            "radii": {"ball": 2, "depth": 0, "filter": 0, "r0": 0},
            "ballRadius": 9
        }"#;
        assert!(matches!(
            RunManifest::from_text(bad, None),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn file_presentations_inline_to_the_same_hash() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("pres.json"),
            r#"{"generators": ["a", "b"], "peripherals": [["a"]]}"#,
        )
        .unwrap();
        let by_file = format!(
            r#"{{
                "presentation": {{"file": "pres.json"}},
                "radii": {{"ball": 4, "depth": 2, "filter": 2, "r0": 1, "margin": 1}}
            }}"#
        );
        let manifest_path = dir.path().join("run.json");
        std::fs::write(&manifest_path, by_file).unwrap();

        let resolved = RunManifest::from_path(&manifest_path).unwrap();
        let inline = RunManifest::from_text(&minimal("out"), None).unwrap();
        assert_eq!(resolved.hash(), inline.hash());

        let pair = resolved.pair().unwrap();
        assert_eq!(pair.presentation.symbols, vec!['a', 'b']);
        assert_eq!(pair.peripherals.len(), 1);
    }

    #[test]
    fn malformed_json_reports_the_position() {
        let err = RunManifest::from_text("{\n  \"presentation\": nope", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "no position in {msg:?}");
        assert_eq!(err.class().code(), 2);
    }

    #[test]
    fn nonsense_radii_are_refused() {
        let bad = r#"{
            "presentation": {"generators": ["a", "b"], "peripherals": [["a"]]},
            "radii": {"ball": 4, "depth": 1, "filter": 2, "r0": 1}
        }"#;
        let err = RunManifest::from_text(bad, None).unwrap_err();
        assert!(err.to_string().contains("truncation depth"));
    }
}
