//! Plain key=value config files merged under command-line flags.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    bail!("config line {} is not key=value: {line:?}", lineno + 1);
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config { values })
    }

    /// Flag value if given, else the config value under `key`, else `default`.
    pub fn resolve<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> T {
        flag.or_else(|| self.values.get(key).and_then(|v| v.parse().ok()))
            .unwrap_or(default)
    }

    /// Flag value if given, else the config value under `key`.
    pub fn resolve_opt(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.values.get(key).cloned())
    }
}
