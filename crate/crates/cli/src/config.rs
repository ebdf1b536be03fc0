use std::fmt;
use std::path::Path;

use hrvbench_core::models::{Hyperparams, ModelKind};
use serde::Deserialize;

#[derive(Debug)]
pub enum CliError {
    Core(hrvbench_core::Error),
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn id(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.id(),
            CliError::Usage(_) => "E_USAGE",
            CliError::Io(_) => "E_IO",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_user_error() => 2,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<hrvbench_core::Error> for CliError {
    fn from(e: hrvbench_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Optional `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub parallelism: Option<u64>,
    pub class_weighting: Option<bool>,
    pub plausibility_filter: Option<bool>,
    pub models: Option<Vec<String>>,
    pub hyperparams: Option<Hyperparams>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub parallelism: Option<usize>,
}

impl Settings {
    /// Flag, then config file, then the environment, then 0.
    pub fn resolve(
        seed: Option<u64>,
        parallelism: Option<u64>,
        file: &FileConfig,
        env_seed: Option<&str>,
    ) -> Result<Self, CliError> {
        let seed = match (seed.or(file.seed), env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("HRVBENCH_SEED={v:?} is not an unsigned integer")))?,
            (None, None) => 0,
        };
        let parallelism = match parallelism.or(file.parallelism) {
            Some(0) => return Err(CliError::Usage("parallelism must be at least 1".into())),
            p => p.map(|p| p as usize),
        };
        Ok(Self { seed, parallelism })
    }

    /// Runs `f` on a pool of the requested size, or the global pool.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        match self.parallelism {
            None => Ok(f()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Flag list, else the config file's, else all three.
pub fn model_kinds(flag: &[String], file: &FileConfig) -> Result<Vec<ModelKind>, CliError> {
    let names = if flag.is_empty() {
        file.models.as_deref().unwrap_or(&[])
    } else {
        flag
    };
    if names.is_empty() {
        return Ok(ModelKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for n in names {
        let k: ModelKind = n
            .parse()
            .map_err(|e: hrvbench_core::Error| CliError::Usage(e.to_string()))?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    Ok(kinds)
}
