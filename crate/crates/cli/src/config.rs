//! Config-file schema. Every field is optional; flags override the file and
//! built-in defaults fill whatever is left.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rweno::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub data: DataSection,
    pub train: TrainSection,
    pub select: SelectSection,
    pub solve: SolveSection,
    pub converge: ConvergeSection,
    pub adr: AdrSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub nx: Option<Vec<usize>>,
    pub pairs_per_grid: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub data: Option<PathBuf>,
    pub arch: Option<String>,
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub alpha: Option<Vec<f64>>,
    pub beta_d: Option<Vec<f64>>,
    pub beta_w: Option<f64>,
    pub peak_lr: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub heldout_pairs: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSection {
    pub manifest: Option<PathBuf>,
    pub criterion: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub problem: Option<String>,
    pub scheme: Option<String>,
    pub nx: Option<usize>,
    pub t: Option<f64>,
    pub cfl: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub target: Option<String>,
    pub schemes: Option<Vec<String>>,
    pub nx: Option<Vec<usize>>,
    pub t: Option<f64>,
    pub cfl: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdrSection {
    pub schemes: Option<Vec<String>>,
    pub nx: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Settings shared by every command, after resolution.
#[derive(Debug, Clone, Serialize)]
pub struct Global {
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
}

/// Writes `<out>/<command>.manifest.toml`: the resolved configuration,
/// preceded by a comment line with the wall-clock time.
pub fn write_manifest<T: Serialize>(global: &Global, command: &str, resolved: &T) -> Result<PathBuf> {
    #[derive(Serialize)]
    struct Manifest<'a, T> {
        command: &'a str,
        version: &'a str,
        global: &'a Global,
        config: &'a T,
    }
    let body = toml::to_string(&Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        global,
        config: resolved,
    })
    .map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let path = global.out.join(format!("{command}.manifest.toml"));
    fs::write(&path, format!("# written at unix time {stamp}\n{body}"))
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
