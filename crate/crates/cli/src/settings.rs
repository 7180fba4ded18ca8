use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rlb_core::config::KvConfig;

/// Flag values layered over an optional config file. Flags win.
pub struct Settings {
    file: KvConfig,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => KvConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => KvConfig::new(),
        };
        Ok(Self { file })
    }

    pub fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        Ok(self.file.get(key)?)
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        match self.opt(flag, key)? {
            Some(p) => Ok(p),
            None => bail!("missing --{} (or `{key}` in the config file)", key.replace('_', "-")),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, flag: Option<String>, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(raw) = self.opt(flag, key)? else {
            return Ok(None);
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("{key}: bad item {s:?}: {e}")))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

/// Accepts `0.125` or `1/8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio(pub f64);

impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("not a number or fraction: {s:?}");
        match s.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().map_err(|_| bad())?;
                let d: f64 = d.trim().parse().map_err(|_| bad())?;
                Ok(Ratio(n / d))
            }
            None => s.trim().parse().map(Ratio).map_err(|_| bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = Settings {
            file: KvConfig::parse("episode_len = 500\nc0 = 1/8, 1/4\n").unwrap(),
        };
        assert_eq!(s.or(None, "episode_len", 1000usize).unwrap(), 500);
        assert_eq!(s.or(Some(200), "episode_len", 1000usize).unwrap(), 200);
        assert_eq!(s.or(None, "seed", 7u64).unwrap(), 7);
        let c0: Vec<Ratio> = s.list(None, "c0").unwrap().unwrap();
        assert_eq!(c0, vec![Ratio(0.125), Ratio(0.25)]);
        assert!(s.path(None, "train").is_err());
    }
}
