use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AlarmPolicy, AuthError, AuthService};
use crate::alternatives::LetterGroups;
use crate::grouping::GroupTable;
use crate::honeychecker::CheckerClient;
use crate::model::{IndexSelector, SystemParams};
use crate::vault::{Vault, VaultError};

pub const ENV_CHECKER_ADDR: &str = "HONEYQ_CHECKER_ADDR";
pub const ENV_DATA_DIR: &str = "HONEYQ_DATA_DIR";
pub const ENV_LISTEN: &str = "HONEYQ_LISTEN";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad group table {path}: {reason}")]
    Groups { path: PathBuf, reason: String },
    #[error(transparent)]
    Vault(#[from] VaultError),
    #[error(transparent)]
    Service(#[from] AuthError),
}

/// Login attempts allowed per user within a fixed window. Zero disables it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateLimit {
    pub max_attempts: u32,
    pub window: Duration,
}

impl RateLimit {
    pub fn unlimited() -> Self {
        RateLimit { max_attempts: 0, window: Duration::ZERO }
    }
}

impl Default for RateLimit {
    fn default() -> Self {
        RateLimit { max_attempts: 10, window: Duration::from_secs(300) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthConfig {
    pub listen: String,
    pub checker: String,
    /// Where F1/F2 live; in memory when unset.
    pub data_dir: Option<PathBuf>,
    pub policy: AlarmPolicy,
    pub params: SystemParams,
    /// Group tables as written by `GroupTable::to_json`; reference tables otherwise.
    pub person_groups: Option<PathBuf>,
    pub movie_groups: Option<PathBuf>,
    pub seed: Option<u64>,
    pub rate_limit_attempts: u32,
    pub rate_limit_window_secs: u64,
    pub checker_timeout_ms: u64,
}

impl Default for AuthConfig {
    fn default() -> Self {
        let rl = RateLimit::default();
        AuthConfig {
            listen: "127.0.0.1:8080".into(),
            checker: "127.0.0.1:7070".into(),
            data_dir: None,
            policy: AlarmPolicy::default(),
            params: SystemParams::default(),
            person_groups: None,
            movie_groups: None,
            seed: None,
            rate_limit_attempts: rl.max_attempts,
            rate_limit_window_secs: rl.window.as_secs(),
            checker_timeout_ms: 2000,
        }
    }
}

fn load_groups(path: &Path, fallback: IndexSelector) -> Result<GroupTable, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    let mut table = GroupTable::from_json(&text)
        .map_err(|e| ConfigError::Groups { path: path.into(), reason: e.to_string() })?;
    table.index.get_or_insert(fallback);
    Ok(table)
}

impl AuthConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml_str(&text)
    }

    /// Environment variables win over the file.
    pub fn apply_env(&mut self) {
        if let Ok(v) = std::env::var(ENV_CHECKER_ADDR) {
            self.checker = v;
        }
        if let Ok(v) = std::env::var(ENV_DATA_DIR) {
            self.data_dir = Some(v.into());
        }
        if let Ok(v) = std::env::var(ENV_LISTEN) {
            self.listen = v;
        }
    }

    pub fn rate_limit(&self) -> RateLimit {
        RateLimit {
            max_attempts: self.rate_limit_attempts,
            window: Duration::from_secs(self.rate_limit_window_secs),
        }
    }

    pub fn letter_groups(&self) -> Result<LetterGroups, ConfigError> {
        let mut groups = LetterGroups::default();
        if let Some(p) = &self.person_groups {
            groups.person = load_groups(p, IndexSelector::First)?;
        }
        if let Some(p) = &self.movie_groups {
            groups.movie = load_groups(p, IndexSelector::Last)?;
        }
        Ok(groups)
    }

    /// Service talking to the configured honeychecker over TCP.
    pub fn build_service(&self) -> Result<AuthService, ConfigError> {
        let vault = match &self.data_dir {
            Some(dir) => Vault::open(dir)?,
            None => Vault::in_memory(),
        };
        let checker = CheckerClient::new(self.checker.clone()).with_timeout(Duration::from_millis(self.checker_timeout_ms));
        let mut svc = AuthService::new(self.params, self.letter_groups()?, vault, Arc::new(checker))?
            .with_policy(self.policy)
            .with_rate_limit(self.rate_limit());
        if let Some(seed) = self.seed {
            svc = svc.with_seed(seed);
        }
        Ok(svc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_toml() {
        let cfg = AuthConfig::from_toml_str(
            r#"
            checker = "10.0.0.2:7070"
            policy = "LogOnly"
            rate_limit_attempts = 3
            [params]
            q = 7
            d = 4
            k = 20
            lambda = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.checker, "10.0.0.2:7070");
        assert_eq!(cfg.policy, AlarmPolicy::LogOnly);
        assert_eq!(cfg.params.q, 7);
        assert_eq!(cfg.rate_limit().max_attempts, 3);
        assert_eq!(cfg.listen, AuthConfig::default().listen);
        assert!(AuthConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn group_file_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("person.json");
        let mut table = GroupTable::population_reference();
        table.index = None;
        std::fs::write(&path, table.to_json()).unwrap();
        let cfg = AuthConfig { person_groups: Some(path), ..AuthConfig::default() };
        let groups = cfg.letter_groups().unwrap();
        assert_eq!(groups.person.index, Some(IndexSelector::First));
        let bad = AuthConfig { movie_groups: Some(dir.path().join("missing.json")), ..AuthConfig::default() };
        assert!(matches!(bad.letter_groups(), Err(ConfigError::Read { .. })));
    }
}
