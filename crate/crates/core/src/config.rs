//! SSI configuration files: which sources, device trees and models make up
//! an interpreter, and which commands it offers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::ctype::{self, CType};
use crate::dtsi::{self, DtsiError};
use crate::expr::TypeEnv;
use crate::hooks::{self, SchemaError};
use crate::interp::{BranchPolicy, CommandSpec, Session};
use crate::macros::tokens_of;
use crate::memory::RegionKind;
use crate::value::Pos;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error(transparent)]
    Dtsi(#[from] DtsiError),
    #[error("{path}: {source}")]
    Schema { path: String, source: SchemaError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandConfig {
    pub entry: String,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub setup: Vec<String>,
    /// slot name -> parameter name
    #[serde(default)]
    pub bind: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsiConfig {
    #[serde(default)]
    pub name: String,
    /// Host-language hook set to register, by name.
    pub profile: Option<String>,
    #[serde(default)]
    pub corpus: Vec<PathBuf>,
    #[serde(default)]
    pub dtsi: Vec<PathBuf>,
    #[serde(default)]
    pub models: Vec<PathBuf>,
    /// Profile hooks to drop after registration.
    #[serde(default)]
    pub disable_hooks: Vec<String>,
    pub branch_policy: Option<String>,
    pub max_steps: Option<u64>,
    /// Environment objects: `name = "struct type"` allocates the object
    /// and a global pointer `name` to it.
    #[serde(default)]
    pub objects: BTreeMap<String, String>,
    #[serde(default)]
    pub commands: BTreeMap<String, CommandConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub type ProfileFn<'a> = &'a dyn Fn(&mut Session, &str) -> Result<(), String>;

impl SsiConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: SsiConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            path: base_dir.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = Self::parse(&text, &base).map_err(|e| match e {
            ConfigError::Syntax { message, .. } => ConfigError::Syntax { path: path.display().to_string(), message },
            other => other,
        })?;
        cfg.base_dir = base;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn policy(&self) -> Result<Option<BranchPolicy>, ConfigError> {
        self.branch_policy.as_deref().map(|p| p.parse().map_err(ConfigError::Invalid)).transpose()
    }

    /// Builds a session: corpus, device trees, objects, commands, the
    /// profile's hooks, then declarative models (which win over the profile).
    pub fn instantiate(&self, register_profile: ProfileFn<'_>) -> Result<Session, ConfigError> {
        let mut corpus = Corpus::new();
        for f in &self.corpus {
            let p = self.resolve(f);
            corpus
                .load_file(&p)
                .map_err(|e| ConfigError::Io { path: p.display().to_string(), message: e.to_string() })?;
        }
        let mut s = Session::new(corpus);
        for f in &self.dtsi {
            let p = self.resolve(f);
            let tree = dtsi::parse_dtsi_file(&p)?;
            for d in &tree.diagnostics {
                s.diagnostic(format!("{}: {d}", p.display()));
            }
            s.dtsi.push((f.to_string_lossy().into_owned(), tree));
        }
        for (name, ty) in &self.objects {
            add_object(&mut s, name, ty).map_err(ConfigError::Invalid)?;
        }
        for (name, c) in &self.commands {
            for param in c.bind.values() {
                if !c.params.contains(param) {
                    return Err(ConfigError::Invalid(format!("command {name}: bind uses unknown parameter `{param}`")));
                }
            }
            s.commands.insert(
                name.clone(),
                CommandSpec {
                    entry: c.entry.clone(),
                    params: c.params.clone(),
                    bind: c.bind.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                    setup: c.setup.clone(),
                    args: c.args.clone(),
                },
            );
        }
        if let Some(p) = self.policy()? {
            s.policy = p;
        }
        if let Some(n) = self.max_steps {
            s.max_steps = n;
        }
        if let Some(profile) = &self.profile {
            register_profile(&mut s, profile).map_err(ConfigError::Invalid)?;
        }
        for h in &self.disable_hooks {
            s.unregister_hook(h);
        }
        for m in &self.models {
            let p = self.resolve(m);
            hooks::load_declarative_models_file(&mut s, &p)
                .map_err(|source| ConfigError::Schema { path: p.display().to_string(), source })?;
        }
        Ok(s)
    }

    /// Command names whose entry function is neither defined in the corpus
    /// nor modeled.
    pub fn unresolved_entries(&self, s: &mut Session) -> Vec<String> {
        self.commands
            .iter()
            .filter(|(_, c)| !s.has_hook(&c.entry) && crate::parse::find_function_definition(&s.corpus, &c.entry).is_none())
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// Allocates an environment object of type `ty` and a global pointer to it.
pub fn add_object(s: &mut Session, name: &str, ty: &str) -> Result<(), String> {
    let id = s.corpus.add_synthetic("<object>", ty, 0);
    let file = s.corpus.file(id).clone();
    let toks = tokens_of(&file, 0..file.tokens.len());
    let ty = s.parse_type(&toks).ok_or_else(|| format!("object {name}: cannot parse type `{ty}`"))?;
    let size = ctype::size_of(&mut *s, &ty);
    let pos = Pos::default();
    let (_, target) = s.memory.alloc_pointer(&mut s.values, &format!("*{name}"), RegionKind::Static, Some(size), pos);
    s.define_global_pointer(name, CType::ptr(ty), target);
    Ok(())
}
