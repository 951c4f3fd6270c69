//! JSON configuration documents and config-error reporting.

use std::fs;
use std::path::{Path, PathBuf};

use fcontact::catalog::{self, CatalogEntry, CatalogParams};
use fcontact::chart::{DEFAULT_SAMPLES, DEFAULT_SEED};
use fcontact::definition::{MapDef, StructureDef};
use fcontact::expr::Params;
use fcontact::torus::SLICE_TOL;
use fcontact::verify::{Level, DEFAULT_TOLERANCE};
use fcontact::{Error, FStructure};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

/// A configuration problem. Reported on standard error with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

/// A JSON document kept together with its text, for locating errors.
pub struct Document<T> {
    pub file: String,
    pub text: String,
    pub root: Value,
    pub value: T,
    /// Leading part of error paths that is not shown, for wrapped roots.
    pub hidden: String,
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<Document<T>, ConfigError> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{file}: {e}")))?;
    parse_document(file, text)
}

pub fn parse_document<T: DeserializeOwned>(file: String, text: String) -> Result<Document<T>, ConfigError> {
    let root: Value = serde_json::from_str(&text).map_err(|e| json_error(&file, &e))?;
    let value = serde_json::from_str(&text).map_err(|e| json_error(&file, &e))?;
    Ok(Document {
        file,
        text,
        root,
        value,
        hidden: String::new(),
    })
}

fn json_error(file: &str, e: &serde_json::Error) -> ConfigError {
    ConfigError(format!("{file}:{}:{}: {e}", e.line(), e.column()))
}

impl<T> Document<T> {
    /// Turns a library error into a config error. Expression errors are
    /// placed in the file by finding the offending string under `prefix`.
    pub fn error(&self, prefix: &str, err: Error) -> ConfigError {
        if let Error::Definition { path, source } = &err {
            let full = format!("{prefix}{path}");
            let shown = full.strip_prefix(self.hidden.as_str()).unwrap_or(&full);
            if let Some((line, column)) = self.position(&full, source.offset) {
                return ConfigError(format!("{}:{line}:{column}: {shown}: {source}", self.file));
            }
            return ConfigError(format!("{}: {shown}: {source}", self.file));
        }
        ConfigError(format!("{}: {err}", self.file))
    }

    fn position(&self, path: &str, offset: usize) -> Option<(usize, usize)> {
        let text = lookup(&self.root, path)?.as_str()?;
        let literal = serde_json::to_string(text).ok()?;
        let start = self.text.find(&literal)?;
        // the offset is exact unless the string contains escapes
        let at = (start + 1 + offset).min(self.text.len());
        let before = &self.text[..at];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Some((line, column))
    }
}

/// Follows a path like `steps[2].type2.theta[0][1]`.
fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    let mut v = root;
    for part in path.split('.') {
        let (key, rest) = part.split_once('[').map_or((part, ""), |(k, r)| (k, r));
        if !key.is_empty() {
            v = v.get(key)?;
        }
        for idx in rest.split('[').filter(|s| !s.is_empty()) {
            v = v.get(idx.trim_end_matches(']').parse::<usize>().ok()?)?;
        }
    }
    Some(v)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSource {
    pub name: String,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub s: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Catalog(CatalogSource),
    /// A structure document; relative paths resolve against the pipeline file.
    File(PathBuf),
    Structure(StructureDef),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            count: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Axiom residual tolerance of `verify` steps.
    pub verify: f64,
    /// Closed-and-basic check on type II θ-forms.
    pub basic: f64,
    /// Leaf check of `slice`.
    pub slice: f64,
    pub deck: f64,
    pub compare: f64,
    /// Residual target of `search-rotation`.
    pub search: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            verify: DEFAULT_TOLERANCE,
            basic: DEFAULT_TOLERANCE,
            slice: SLICE_TOL,
            deck: 1e-10,
            compare: 1e-10,
            search: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyStep {
    #[serde(default = "level_s")]
    pub level: Level,
    #[serde(default)]
    pub fd_check: bool,
}

fn level_s() -> Level {
    Level::S
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixStep {
    /// Rows of the orthogonal matrix.
    pub a: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Type2Step {
    /// One row of component expressions per θᵢ.
    pub theta: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckStep {
    #[serde(default)]
    pub automorphism: Option<String>,
    #[serde(default)]
    pub map: Option<MapDef>,
    pub t0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchStep {
    pub target: Vec<f64>,
    /// Replace the current structure by its anti-rotation by the solution.
    #[serde(default)]
    pub apply: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    Verify(VerifyStep),
    Rotate(MatrixStep),
    Antirotate(MatrixStep),
    Type2(Type2Step),
    Lift,
    Slice,
    CheckDeck(DeckStep),
    SearchRotation(SearchStep),
    CompareToInput,
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Verify(_) => "verify",
            Step::Rotate(_) => "rotate",
            Step::Antirotate(_) => "antirotate",
            Step::Type2(_) => "type2",
            Step::Lift => "lift",
            Step::Slice => "slice",
            Step::CheckDeck(_) => "check-deck",
            Step::SearchRotation(_) => "search-rotation",
            Step::CompareToInput => "compare-to-input",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub source: Source,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerance: Tolerances,
    /// Extra parameters available to step expressions.
    #[serde(default)]
    pub params: Params,
    pub steps: Vec<Step>,
}

/// The starting structure of a pipeline with what is known about it.
pub struct Loaded {
    pub structure: FStructure,
    pub params: Params,
    pub entry: Option<CatalogEntry>,
}

pub fn load_catalog(src: &CatalogSource) -> Result<Loaded, ConfigError> {
    let entry = catalog::get(&src.name, CatalogParams::new(src.n, src.s)).map_err(|e| ConfigError(e.to_string()))?;
    let params = entry.definition.as_ref().map(|d| d.params.clone()).unwrap_or_default();
    Ok(Loaded {
        structure: entry.structure.clone(),
        params,
        entry: Some(entry),
    })
}

pub fn load_structure_file(path: &Path) -> Result<Loaded, ConfigError> {
    let doc: Document<StructureDef> = read_document(path)?;
    build_structure(&doc, &doc.value, "")
}

pub fn build_structure<T>(doc: &Document<T>, def: &StructureDef, prefix: &str) -> Result<Loaded, ConfigError> {
    let structure = def.build().map_err(|e| doc.error(prefix, e))?;
    Ok(Loaded {
        structure,
        params: def.params.clone(),
        entry: None,
    })
}
