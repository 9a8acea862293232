//! Effective run configuration: flags override config-file values, which
//! override built-in defaults.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use dimpute::fill::{DonorMode, DonorPolicy, ValueEq};
use dimpute::matcher::{AliasMap, MatchConfig};
use dimpute::pipeline::Strategy;

use crate::RunFlags;

/// Optional defaults file for the run flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub strategy: Option<String>,
    pub policy: Option<String>,
    pub threshold: Option<f64>,
    pub null_tokens: Option<Vec<String>>,
    pub passes: Option<usize>,
    pub case_insensitive: Option<bool>,
    pub aliases: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub policy: DonorPolicy,
    pub match_config: MatchConfig,
    pub null_tokens: BTreeSet<String>,
    pub passes: usize,
}

fn parse_policy(name: &str) -> Result<DonorMode> {
    match name {
        "first" => Ok(DonorMode::First),
        "majority" => Ok(DonorMode::Majority),
        other => bail!("unknown policy `{other}` (expected first or majority)"),
    }
}

pub fn resolve(flags: &RunFlags) -> Result<RunConfig> {
    let file: FileConfig = match &flags.config {
        Some(path) => {
            let json = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            serde_json::from_str(&json)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let strategy = match flags.strategy.as_deref().or(file.strategy.as_deref()) {
        Some(s) => s.parse::<Strategy>().map_err(anyhow::Error::msg)?,
        None => Strategy::default(),
    };
    let mode = match flags.policy.as_deref().or(file.policy.as_deref()) {
        Some(p) => parse_policy(p)?,
        None => DonorMode::First,
    };
    let case_insensitive = flags.case_insensitive || file.case_insensitive.unwrap_or(false);
    let policy = DonorPolicy {
        mode,
        equality: if case_insensitive {
            ValueEq::CaseInsensitive
        } else {
            ValueEq::Exact
        },
    };

    let threshold = flags.threshold.or(file.threshold).unwrap_or(0.8);
    if !(0.0..=1.0).contains(&threshold) {
        bail!("threshold {threshold} out of [0, 1]");
    }
    let aliases = match flags.aliases.as_ref().or(file.aliases.as_ref()) {
        Some(path) => AliasMap::load(path)
            .with_context(|| format!("loading alias map {}", path.display()))?,
        None => AliasMap::default(),
    };
    let match_config = MatchConfig {
        threshold,
        case_fold: true,
        strip_tokens: BTreeSet::new(),
        aliases,
    };

    let null_tokens: BTreeSet<String> = if flags.null_tokens.is_empty() {
        file.null_tokens.unwrap_or_default().into_iter().collect()
    } else {
        flags.null_tokens.iter().cloned().collect()
    };

    let passes = flags.passes.or(file.passes).unwrap_or(1);
    if passes == 0 {
        bail!("passes must be at least 1");
    }

    Ok(RunConfig {
        strategy,
        policy,
        match_config,
        null_tokens,
        passes,
    })
}

/// Parses a `dimension.attribute` target.
pub fn parse_target(spec: &str) -> Result<(String, String)> {
    match spec.split_once('.') {
        Some((dim, attr)) if !dim.is_empty() && !attr.is_empty() => {
            Ok((dim.to_string(), attr.to_string()))
        }
        _ => bail!("target `{spec}` must have the form dimension.attribute"),
    }
}

/// Parses a comma-separated list of percentages into rate fractions.
pub fn parse_rates(list: &str) -> Result<Vec<f64>> {
    let mut rates = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let pct: f64 = part
            .parse()
            .with_context(|| format!("invalid rate `{part}`"))?;
        if !(pct > 0.0 && pct <= 100.0) {
            bail!("rate {pct}% out of (0, 100]");
        }
        rates.push(pct / 100.0);
    }
    if rates.is_empty() {
        bail!("no rates given");
    }
    Ok(rates)
}

pub fn parse_usize_list(list: &str, what: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid {what} entry `{p}`"))
        })
        .collect()
}

