use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::DEFAULT_LEASE_MINUTES;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
pub enum SettingsError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid server config: {0}")]
    Parse(String),
    #[error("invalid value for {var}: {value}")]
    Env { var: &'static str, value: String },
}

/// Server settings: a TOML file, then `CROWDQC_BIND`, `CROWDQC_PORT`,
/// `CROWDQC_DATA_DIR` and `CROWDQC_LEASE_MINUTES` overrides.
///
/// ```toml
/// bind = "127.0.0.1"
/// port = 8080
/// data_dir = "./crowdqc-data"
/// lease_minutes = 60
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub bind: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    pub lease_minutes: u64,
}

impl Default for ServerSettings {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            data_dir: PathBuf::from("crowdqc-data"),
            lease_minutes: DEFAULT_LEASE_MINUTES,
        }
    }
}

impl ServerSettings {
    pub fn from_toml(text: &str) -> Result<Self, SettingsError> {
        toml::from_str(text).map_err(|e| SettingsError::Parse(e.to_string()))
    }

    /// Loads the optional file and applies overrides from `env`.
    pub fn load(
        path: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, SettingsError> {
        let mut settings = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| SettingsError::Read {
                    path: path.to_owned(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, SettingsError> {
            value.trim().parse().map_err(|_| SettingsError::Env { var, value })
        }
        if let Some(v) = env("CROWDQC_BIND") {
            settings.bind = parse("CROWDQC_BIND", v)?;
        }
        if let Some(v) = env("CROWDQC_PORT") {
            settings.port = parse("CROWDQC_PORT", v)?;
        }
        if let Some(v) = env("CROWDQC_DATA_DIR") {
            settings.data_dir = PathBuf::from(v);
        }
        if let Some(v) = env("CROWDQC_LEASE_MINUTES") {
            settings.lease_minutes = parse("CROWDQC_LEASE_MINUTES", v)?;
        }
        Ok(settings)
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }

    pub fn lease(&self) -> Duration {
        Duration::from_secs(self.lease_minutes * 60)
    }
}
