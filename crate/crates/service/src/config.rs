use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ServiceError;

/// Service settings, read from one JSON file. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_host")]
    pub host: IpAddr,
    #[serde(default = "default_port")]
    pub port: u16,
    pub pack: PathBuf,
    /// Scaffold rule thresholds; defaults apply when absent.
    #[serde(default)]
    pub scaffold_config: Option<PathBuf>,
    /// Serve the hint stream.
    #[serde(default = "default_hints")]
    pub hints: bool,
    #[serde(default = "default_log_dir")]
    pub log_dir: PathBuf,
}

fn default_host() -> IpAddr {
    IpAddr::V4(Ipv4Addr::LOCALHOST)
}

fn default_port() -> u16 {
    8080
}

fn default_hints() -> bool {
    true
}

fn default_log_dir() -> PathBuf {
    PathBuf::from("logs")
}

impl ServiceConfig {
    pub fn new(pack: impl Into<PathBuf>, log_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            host: default_host(),
            port: default_port(),
            pack: pack.into(),
            scaffold_config: None,
            hints: default_hints(),
            log_dir: log_dir.into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ServiceConfig =
            serde_json::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.pack);
        resolve(&mut cfg.log_dir);
        if let Some(p) = cfg.scaffold_config.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }
}
