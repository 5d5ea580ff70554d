//! Experiment configuration: a JSON document with one section per concern.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forward::{CgOptions, TOL_CG};
use crate::geometry::DomainSpec;
use crate::inverse::{LameValues, Metric};
use crate::material::LameParams;
use crate::probes::{LipschitzConfig, SpheresConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Task {
    Forward,
    Dtn,
    Reconstruct,
    ProbeLipschitz,
    #[serde(rename = "PROBE_3SPHERES")]
    ProbeThreeSpheres,
    ProbeKelvin,
    ProbeReciprocity,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Forward => "FORWARD",
            Task::Dtn => "DTN",
            Task::Reconstruct => "RECONSTRUCT",
            Task::ProbeLipschitz => "PROBE_LIPSCHITZ",
            Task::ProbeThreeSpheres => "PROBE_3SPHERES",
            Task::ProbeKelvin => "PROBE_KELVIN",
            Task::ProbeReciprocity => "PROBE_RECIPROCITY",
        }
    }

    /// Sections that must be present for this task.
    pub fn required_sections(self) -> &'static [&'static str] {
        match self {
            Task::Forward | Task::Dtn | Task::ProbeLipschitz | Task::ProbeReciprocity => &["geometry", "material", "mesh"],
            Task::Reconstruct => &["material", "reconstruct"],
            Task::ProbeThreeSpheres | Task::ProbeKelvin => &[],
        }
    }
}

/// Subdomain moduli `j = 1..N` and the a priori constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSection {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha0: f64,
    pub beta0: f64,
}

impl MaterialSection {
    pub fn params(&self) -> Result<LameParams> {
        LameParams::new(&self.lambda, &self.mu, self.alpha0, self.beta0)
    }

    pub fn with_values(&self, v: &LameValues) -> Result<LameParams> {
        LameParams::new(&v.lambda, &v.mu, self.alpha0, self.beta0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default)]
    pub n: Option<usize>,
    /// External MSH 2.2 file; replaces generation when given.
    #[serde(default)]
    pub path: Option<String>,
    /// Glue the D0 slab on top of the patch (forward and reciprocity tasks only).
    #[serde(default)]
    pub extend_d0: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol_cg: f64,
    pub max_iter: Option<usize>,
    pub parallel: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { tol_cg: TOL_CG, max_iter: None, parallel: true }
    }
}

impl SolverSection {
    pub fn cg(&self) -> CgOptions {
        CgOptions { tol: self.tol_cg, max_iter: self.max_iter }
    }
}

/// Boundary data `x -> M x + c` on the whole boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardSection {
    pub matrix: [[f64; 3]; 3],
    pub offset: [f64; 3],
    pub dump_stiffness: bool,
}

impl Default for ForwardSection {
    fn default() -> Self {
        // uniaxial stretch (0, 0, x3)
        ForwardSection { matrix: [[0.0; 3], [0.0; 3], [0.0, 0.0, 1.0]], offset: [0.0; 3], dump_stiffness: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    /// Path of an observed `dtn.bin`, relative to the config file.
    pub observation: String,
    /// Initial moduli; defaults to the material section.
    #[serde(default)]
    pub init: Option<LameValues>,
    /// Absolute noise level for the discrepancy stop.
    #[serde(default)]
    pub noise_level: Option<f64>,
    /// Relative level of synthetic symmetric noise added to the observation.
    #[serde(default)]
    pub add_noise: Option<f64>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LipschitzSection {
    #[serde(flatten)]
    pub probe: LipschitzConfig,
    /// Relative noise levels for the reconstruction-error sweep (empty: skip).
    pub noise_levels: Vec<f64>,
    /// Start of the noise sweep reconstructions; defaults to the admissible
    /// point nearest to the mean of the polytope corners.
    pub noise_init: Option<LameValues>,
}

impl Default for LipschitzSection {
    fn default() -> Self {
        LipschitzSection { probe: LipschitzConfig::default(), noise_levels: vec![1e-4, 1e-3, 1e-2], noise_init: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KelvinSection {
    pub mu: f64,
    pub nu: f64,
    pub n_points: usize,
    pub shell_points: usize,
    pub fd_step: f64,
}

impl Default for KelvinSection {
    fn default() -> Self {
        KelvinSection { mu: 1.0, nu: 0.25, n_points: 41, shell_points: 20, fd_step: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReciprocitySection {
    pub pairs: usize,
}

impl Default for ReciprocitySection {
    fn default() -> Self {
        ReciprocitySection { pairs: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub geometry: Option<DomainSpec>,
    pub material: Option<MaterialSection>,
    pub mesh: Option<MeshSection>,
    pub solver: SolverSection,
    pub seed: u64,
    pub output: Option<String>,
    pub forward: ForwardSection,
    pub reconstruct: Option<ReconstructSection>,
    pub lipschitz: LipschitzSection,
    pub spheres: SpheresConfig,
    pub kelvin: KelvinSection,
    pub reciprocity: ReciprocitySection,
}

const KNOWN: [&str; 13] = [
    "task",
    "geometry",
    "material",
    "mesh",
    "solver",
    "seed",
    "output",
    "forward",
    "reconstruct",
    "lipschitz",
    "spheres",
    "kelvin",
    "reciprocity",
];

fn section<T: DeserializeOwned>(doc: &Value, name: &str) -> Result<Option<T>> {
    match doc.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| Error::Config(format!("section `{name}`: {e}"))),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let obj = doc.as_object().ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown section `{k}`")));
        }
        let task: Task = section(&doc, "task")?.ok_or_else(|| Error::ConfigMissingSection("task".into()))?;
        for name in task.required_sections() {
            if doc.get(*name).is_none_or(Value::is_null) {
                return Err(Error::ConfigMissingSection((*name).into()));
            }
        }
        Ok(ExperimentConfig {
            task,
            geometry: section(&doc, "geometry")?,
            material: section(&doc, "material")?,
            mesh: section(&doc, "mesh")?,
            solver: section(&doc, "solver")?.unwrap_or_default(),
            seed: section(&doc, "seed")?.unwrap_or(0),
            output: section(&doc, "output")?,
            forward: section(&doc, "forward")?.unwrap_or_default(),
            reconstruct: section(&doc, "reconstruct")?,
            lipschitz: section(&doc, "lipschitz")?.unwrap_or_default(),
            spheres: section(&doc, "spheres")?.unwrap_or_default(),
            kelvin: section(&doc, "kelvin")?.unwrap_or_default(),
            reciprocity: section(&doc, "reciprocity")?.unwrap_or_default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn require_geometry(&self) -> Result<&DomainSpec> {
        self.geometry.as_ref().ok_or_else(|| Error::ConfigMissingSection("geometry".into()))
    }

    pub fn require_material(&self) -> Result<&MaterialSection> {
        self.material.as_ref().ok_or_else(|| Error::ConfigMissingSection("material".into()))
    }

    pub fn require_mesh(&self) -> Result<&MeshSection> {
        self.mesh.as_ref().ok_or_else(|| Error::ConfigMissingSection("mesh".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DTN: &str = r#"{
        "task": "DTN",
        "geometry": {"box": [1, 1, 1], "r0": 1, "interfaces": [{"kind": "flat", "level": 0.5}],
                     "sigma": {"x": [0, 1], "y": [0, 1]}, "L": 2, "alpha": 0.5, "A": 1},
        "material": {"lambda": [1, 2], "mu": [1, 1.5], "alpha0": 0.5, "beta0": 1},
        "mesh": {"n": 4},
        "seed": 3
    }"#;

    #[test]
    fn parses_a_full_document() {
        let c = ExperimentConfig::from_json(DTN).unwrap();
        assert_eq!(c.task, Task::Dtn);
        assert_eq!(c.seed, 3);
        assert_eq!(c.mesh.unwrap().n, Some(4));
        assert_eq!(c.solver, SolverSection::default());
        assert_eq!(c.material.unwrap().params().unwrap().n_sub(), 2);
    }

    #[test]
    fn missing_material_is_reported_by_name() {
        let mut v: Value = serde_json::from_str(DTN).unwrap();
        v.as_object_mut().unwrap().remove("material");
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.code(), "CONFIG_MISSING_SECTION");
        assert!(err.to_string().contains("material"));
    }

    #[test]
    fn rejects_unknown_sections_and_tasks() {
        let mut v: Value = serde_json::from_str(DTN).unwrap();
        v["materials"] = Value::Null;
        assert_eq!(ExperimentConfig::from_json(&v.to_string()).unwrap_err().code(), "CONFIG_ERROR");
        v.as_object_mut().unwrap().remove("materials");
        v["task"] = "SOLVE".into();
        assert_eq!(ExperimentConfig::from_json(&v.to_string()).unwrap_err().code(), "CONFIG_ERROR");
    }

    #[test]
    fn task_names_round_trip() {
        for t in [Task::Forward, Task::ProbeThreeSpheres, Task::ProbeReciprocity] {
            let s = serde_json::to_string(&t).unwrap();
            assert_eq!(s, format!("\"{}\"", t.name()));
        }
    }
}
