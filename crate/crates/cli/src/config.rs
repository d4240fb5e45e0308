//! Optional `key = value` configuration file. Command-line flags win.

use std::path::Path;

use anyhow::{bail, Context, Result};
use blindcast_core::network::NetworkLimits;
use blindcast_core::ScheduleParams;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub params: ScheduleParams,
    pub kappa: f64,
    pub max_corpus: u128,
    pub limits: NetworkLimits,
    pub horizon_factor: f64,
    pub jobs: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            params: ScheduleParams::default(),
            kappa: 1.0,
            max_corpus: blindcast_core::instance::DEFAULT_MAX_CORPUS,
            limits: NetworkLimits::default(),
            horizon_factor: 2.0,
            jobs: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected key = value", lineno + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = || format!("config line {}: bad value for `{key}`", lineno + 1);
            match key {
                "c" => cfg.params.c = value.parse().with_context(bad)?,
                "d" => cfg.params.d = value.parse().with_context(bad)?,
                "kappa" => cfg.kappa = value.parse().with_context(bad)?,
                "max_corpus" => cfg.max_corpus = value.parse().with_context(bad)?,
                "max_nodes" => cfg.limits.max_nodes = value.parse().with_context(bad)?,
                "max_edges" => cfg.limits.max_edges = value.parse().with_context(bad)?,
                "horizon_factor" => cfg.horizon_factor = value.parse().with_context(bad)?,
                "jobs" => cfg.jobs = Some(value.parse().with_context(bad)?),
                other => bail!("config line {}: unknown key `{other}`", lineno + 1),
            }
        }
        ScheduleParams::new(cfg.params.c, cfg.params.d)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg =
            Config::parse("# constants\nc = 3\nd=5 # inline\n\nkappa = 0.5\njobs = 4\n").unwrap();
        assert_eq!(cfg.params, ScheduleParams { c: 3, d: 5 });
        assert_eq!(cfg.kappa, 0.5);
        assert_eq!(cfg.jobs, Some(4));
        assert_eq!(cfg.horizon_factor, 2.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Config::parse("c 3").is_err());
        assert!(Config::parse("colour = blue").is_err());
        assert!(Config::parse("c = many").is_err());
        assert!(Config::parse("c = 0").is_err());
    }
}
