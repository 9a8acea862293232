//! Decides whether two attribute names from different dimensions denote the
//! same entity, using normalized edit-distance similarity.
//!
//! Dimension designers tend to reuse one vocabulary but decorate names with
//! per-dimension prefixes or suffixes (`c_nationkey` vs `s_nationkey`,
//! `SupplierCity` vs `city`). Normalization strips that decoration before
//! scoring, and an explicit alias map can force a match where lexical
//! similarity fails.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MatchConfig {
    /// Similarity at or above this value counts as a match.
    pub threshold: f64,
    /// Extra tokens stripped from name edges, in addition to the owning
    /// dimension's name and its `<initial>_` prefix form.
    pub strip_tokens: BTreeSet<String>,
    pub case_fold: bool,
    pub aliases: AliasMap,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            threshold: 0.8,
            strip_tokens: BTreeSet::new(),
            case_fold: true,
            aliases: AliasMap::default(),
        }
    }
}

/// User-declared attribute equivalences; symmetric, and they override the
/// similarity score in both directions.
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    pairs: BTreeSet<((String, String), (String, String))>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliasEntry {
    pub dimension_a: String,
    pub attribute_a: String,
    pub dimension_b: String,
    pub attribute_b: String,
}

impl AliasMap {
    pub fn insert(&mut self, dim_a: &str, attr_a: &str, dim_b: &str, attr_b: &str) {
        let a = (dim_a.to_string(), attr_a.to_string());
        let b = (dim_b.to_string(), attr_b.to_string());
        let pair = if a <= b { (a, b) } else { (b, a) };
        self.pairs.insert(pair);
    }

    pub fn contains(&self, dim_a: &str, attr_a: &str, dim_b: &str, attr_b: &str) -> bool {
        let a = (dim_a.to_string(), attr_a.to_string());
        let b = (dim_b.to_string(), attr_b.to_string());
        let pair = if a <= b { (a, b) } else { (b, a) };
        self.pairs.contains(&pair)
    }

    pub fn from_entries(entries: &[AliasEntry]) -> Self {
        let mut map = Self::default();
        for e in entries {
            map.insert(&e.dimension_a, &e.attribute_a, &e.dimension_b, &e.attribute_b);
        }
        map
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let de = &mut serde_json::Deserializer::from_str(&json);
        let entries: Vec<AliasEntry> =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                path: path.to_path_buf(),
                message: format!("at `{}`: {}", e.path(), e.inner()),
            })?;
        Ok(Self::from_entries(&entries))
    }
}

/// Outcome of comparing two attribute names. `matched` holds exactly when
/// `score >= threshold`; alias overrides are reported with score 1.0.
#[derive(Debug, Clone, Serialize)]
pub struct MatchDecision {
    pub a: String,
    pub b: String,
    pub score: f64,
    pub matched: bool,
}

fn trim_separators(s: &str) -> &str {
    s.trim_matches(|c| c == '_' || c == '-' || c == ' ')
}

/// Canonical form of an attribute name: case-folded, with per-dimension
/// decoration stripped from both edges until stable, separators trimmed.
/// Stripping runs to a fixed point so the result is idempotent. An empty
/// result is returned as-is and matches nothing downstream.
pub fn normalize(name: &str, cfg: &MatchConfig, owner: &str) -> String {
    let fold = |s: &str| {
        if cfg.case_fold {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    };

    let mut tokens: Vec<String> = cfg.strip_tokens.iter().map(|t| fold(t)).collect();
    if !owner.is_empty() {
        let owner_folded = fold(owner);
        if let Some(initial) = owner_folded.chars().next() {
            tokens.push(format!("{initial}_"));
        }
        tokens.push(owner_folded);
    }
    tokens.retain(|t| !t.is_empty());
    // Longest token first; ties resolved lexicographically for determinism.
    tokens.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    let mut current = fold(name.trim());
    loop {
        let mut s = trim_separators(&current).to_string();
        if let Some(tok) = tokens.iter().find(|t| s.starts_with(t.as_str())) {
            s = s[tok.len()..].to_string();
        }
        s = trim_separators(&s).to_string();
        if let Some(tok) = tokens.iter().find(|t| s.ends_with(t.as_str())) {
            s.truncate(s.len() - tok.len());
        }
        s = trim_separators(&s).to_string();
        if s == current {
            return s;
        }
        current = s;
    }
}

/// Levenshtein distance over characters.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitute.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Normalized similarity: `1 - distance / max(len)`, in [0, 1]. Two empty
/// strings score 1.0 by convention; callers exclude empty normalized names
/// before matching.
pub fn similarity(a: &str, b: &str) -> f64 {
    let len = a.chars().count().max(b.chars().count());
    if len == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / len as f64
}

/// The ≃ decision for two attributes owned by distinct dimensions.
/// Symmetric and deterministic under a fixed config.
pub fn attributes_match(
    a: &str,
    owner_a: &str,
    b: &str,
    owner_b: &str,
    cfg: &MatchConfig,
) -> MatchDecision {
    debug_assert_ne!(owner_a, owner_b, "≃ compares attributes of distinct dimensions");
    if cfg.aliases.contains(owner_a, a, owner_b, b) {
        return MatchDecision {
            a: a.to_string(),
            b: b.to_string(),
            score: 1.0,
            matched: true,
        };
    }
    let na = normalize(a, cfg, owner_a);
    let nb = normalize(b, cfg, owner_b);
    let score = if na.is_empty() || nb.is_empty() {
        0.0
    } else {
        similarity(&na, &nb)
    };
    MatchDecision {
        a: a.to_string(),
        b: b.to_string(),
        score,
        matched: score >= cfg.threshold,
    }
}
