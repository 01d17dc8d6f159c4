//! Session manifests: models to load, rules to install and fixture mappings.
//!
//! ```toml
//! include = ["rules.toml"]
//!
//! [[model]]
//! alias = "src"
//! dialect = "MiniProc"
//! file = "source.mproc"
//!
//! [[rule]]
//! name = "CopyReplaceOperator"
//! context = "oo:"
//! params = { OtD = "&", OtR = "+" }
//!
//! [[mapping]]
//! source = "src:@lib.MsgBox"
//! target = "oo:@lib.Logger.log"
//! scope = "oo:"
//! ```
//!
//! Paths are relative to the manifest's directory. Included files contribute
//! their rules and mappings before the including file's own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
    #[error("{path}: {error}")]
    Toml {
        path: PathBuf,
        error: toml::de::Error,
    },
    #[error("{path}: include cycle")]
    Cycle { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub alias: String,
    pub dialect: String,
    /// Source file; an empty model is created when absent.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub name: String,
    /// `global` or a declaration path such as `oo:MyPackage`.
    #[serde(default = "global")]
    pub context: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

fn global() -> String {
    "global".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSpec {
    pub source: String,
    pub target: String,
    pub scope: String,
}

/// Batch migration of every snippet in `dir` into a fresh target model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub dir: PathBuf,
    /// Dialect of the target model, aliased `tgt`; snippets are aliased `src`.
    pub target_dialect: String,
    /// Skeleton text of the target, empty project when absent.
    pub skeleton: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub include: Vec<PathBuf>,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelSpec>,
    #[serde(default, rename = "rule")]
    pub rules: Vec<RuleSpec>,
    #[serde(default, rename = "mapping")]
    pub mappings: Vec<MappingSpec>,
    pub corpus: Option<CorpusSpec>,
    /// Directory the relative paths above are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Manifest, toml::de::Error> {
        let mut m: Manifest = toml::from_str(text)?;
        m.base = base.to_path_buf();
        Ok(m)
    }

    /// Reads `path` and its includes, resolving every file path.
    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        Self::load_inner(path, &mut Vec::new())
    }

    fn load_inner(path: &Path, stack: &mut Vec<PathBuf>) -> Result<Manifest, ManifestError> {
        let canonical = path.canonicalize().map_err(|error| ManifestError::Io {
            path: path.to_path_buf(),
            error,
        })?;
        if stack.contains(&canonical) {
            return Err(ManifestError::Cycle {
                path: path.to_path_buf(),
            });
        }
        stack.push(canonical);
        let text = std::fs::read_to_string(path).map_err(|error| ManifestError::Io {
            path: path.to_path_buf(),
            error,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut own = Manifest::parse(&text, &base).map_err(|error| ManifestError::Toml {
            path: path.to_path_buf(),
            error,
        })?;
        let mut merged = Manifest {
            base: base.clone(),
            ..Manifest::default()
        };
        for inc in std::mem::take(&mut own.include) {
            let sub = Self::load_inner(&base.join(inc), stack)?;
            merged.models.extend(sub.models);
            merged.rules.extend(sub.rules);
            merged.mappings.extend(sub.mappings);
            if merged.corpus.is_none() {
                merged.corpus = sub.corpus;
            }
        }
        for m in &mut own.models {
            m.file = m.file.take().map(|f| base.join(f));
        }
        if let Some(c) = &mut own.corpus {
            c.dir = base.join(&c.dir);
            c.skeleton = c.skeleton.take().map(|s| base.join(s));
        }
        merged.models.extend(own.models);
        merged.rules.extend(own.rules);
        merged.mappings.extend(own.mappings);
        if own.corpus.is_some() {
            merged.corpus = own.corpus;
        }
        stack.pop();
        Ok(merged)
    }
}
