//! Instance documents: loading, dotted-path overrides, scenario synthesis and
//! run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::analytics::SizingConfig;
use crate::demo;
use crate::error::{Error, Result};
use crate::model::{InstanceSpec, TimeGrid};
use crate::scenario::{generate_scenarios, GeneratorConfig, RNG_ALGORITHM};
use crate::solver::SolverConfig;

/// Bundled instance names accepted in place of a path.
pub const BUNDLED: [&str; 2] = ["demo_small", "demo_day"];

/// A loaded instance file with its optional sections.
#[derive(Debug, Clone)]
pub struct Document {
    pub source: String,
    /// SHA-256 of the source bytes (bundled: of the canonical JSON).
    pub sha256: String,
    pub spec: InstanceSpec,
    pub generator: Option<GeneratorConfig>,
    pub solver: SolverConfig,
    pub sizing: SizingConfig,
}

fn bundled(name: &str) -> Option<Value> {
    let (spec, gen) = match name {
        "demo_small" => (demo::demo_small(), demo::demo_small_generator()),
        "demo_day" => (demo::demo_day(), demo::demo_day_generator()),
        _ => return None,
    };
    let mut v = serde_json::to_value(&spec).expect("instance serializes");
    let obj = v.as_object_mut().expect("instance is an object");
    obj.remove("scenarios");
    obj.insert("generator".into(), serde_json::to_value(gen).expect("generator serializes"));
    Some(v)
}

/// Read the raw JSON of `source`, a path or a bundled name.
pub fn read_source(source: &str) -> Result<(Value, String)> {
    let path = Path::new(source);
    if !path.exists() {
        if let Some(v) = bundled(source) {
            let text = serde_json::to_string(&v)?;
            return Ok((v, hex::encode(Sha256::digest(text.as_bytes()))));
        }
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let v: Value = serde_json::from_slice(&bytes)?;
    Ok((v, hex::encode(Sha256::digest(&bytes))))
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Apply `key=value` with a dotted key; numeric segments index arrays.
/// Missing object keys along the path are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Override {
        key: assignment.into(),
        message: "expected key=value".into(),
    })?;
    let key = key.trim();
    let err = |message: String| Error::Override {
        key: key.into(),
        message,
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err("empty path segment".into()));
    }
    let mut cur = doc;
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert((*part).into(), parse_value(raw));
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let i: usize = part.parse().map_err(|_| err(format!("`{part}` is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(i).ok_or_else(|| err(format!("index {i} out of range (len {len})")))?;
                if last {
                    *slot = parse_value(raw);
                    return Ok(());
                }
                slot
            }
            _ => return Err(err(format!("`{part}` does not address an object or array"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

fn take<T: serde::de::DeserializeOwned>(obj: &mut Map<String, Value>, key: &str) -> Result<Option<T>> {
    match obj.remove(key) {
        Some(v) => Ok(Some(serde_json::from_value(v)?)),
        None => Ok(None),
    }
}

/// Load `source`, apply overrides and the seed, and synthesize scenarios
/// from the `generator` section when none are supplied.
pub fn load(source: &str, overrides: &[String], seed: Option<u64>) -> Result<Document> {
    let (mut v, sha256) = read_source(source)?;
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::domain("instance document must be a JSON object"))?;
    let mut generator: Option<GeneratorConfig> = take(obj, "generator")?;
    let solver = take(obj, "solver")?.unwrap_or_default();
    let sizing = take(obj, "sizing")?.unwrap_or_default();
    if let (Some(g), Some(s)) = (generator.as_mut(), seed) {
        g.seed = s;
    }
    let mut spec: InstanceSpec = serde_json::from_value(v)?;
    if spec.scenarios.is_empty() {
        if let Some(g) = &generator {
            spec.scenarios = generate_scenarios(g, &spec.grid, spec.dc_power_cap)?;
        }
    }
    Ok(Document {
        source: source.into(),
        sha256,
        spec,
        generator,
        solver,
        sizing,
    })
}

/// A generator-only document: `{"generator": {...}, "dc_power_cap": x}`,
/// optionally with `grid`.
pub fn load_generator(source: &str, overrides: &[String], seed: Option<u64>) -> Result<(GeneratorConfig, TimeGrid, f64, String)> {
    let (mut v, sha) = read_source(source)?;
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::domain("document must be a JSON object"))?;
    let mut g: GeneratorConfig =
        take(obj, "generator")?.ok_or_else(|| Error::domain("document has no `generator` section"))?;
    if let Some(s) = seed {
        g.seed = s;
    }
    let cap: f64 = take(obj, "dc_power_cap")?.ok_or_else(|| Error::domain("document has no `dc_power_cap`"))?;
    let grid: TimeGrid = take(obj, "grid")?.unwrap_or_else(|| TimeGrid::hourly(g.base_load.len()));
    Ok((g, grid, cap, sha))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub source: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine: String,
    pub engine_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub instances: Vec<InstanceRecord>,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub generator_seeds: Vec<Option<u64>>,
    pub rng_algorithm: String,
    pub solver: SolverConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, docs: &[&Document], overrides: &[String], seed: Option<u64>) -> Self {
        RunManifest {
            engine: env!("CARGO_PKG_NAME").into(),
            engine_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            instances: docs
                .iter()
                .map(|d| InstanceRecord {
                    source: d.source.clone(),
                    sha256: d.sha256.clone(),
                })
                .collect(),
            overrides: overrides.to_vec(),
            seed,
            generator_seeds: docs.iter().map(|d| d.generator.as_ref().map(|g| g.seed)).collect(),
            rng_algorithm: RNG_ALGORITHM.into(),
            solver: docs.first().map(|d| d.solver.clone()).unwrap_or_default(),
            outputs: Vec::new(),
        }
    }
}

/// Create `dir` and return a writer for named artifacts.
pub struct OutDir {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        self.written.push(name.into());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(&mut self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = self.written.clone();
        manifest.outputs.push("run_manifest.json".into());
        self.write_json("run_manifest.json", &manifest)
    }
}
