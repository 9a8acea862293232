//! Inter-dimensional imputation: fills a missing parameter or weak
//! attribute using donor rows from a *different* dimension that carries a
//! semantically identical attribute.
//!
//! A cross link pins one home attribute to one foreign attribute whose
//! names match under the ≃ relation. Filling scans the foreign hierarchy's
//! parameters strictly below the matched one, nearest-lower first; each
//! scanned foreign level must itself be ≃-matched to some home attribute,
//! otherwise that level is skipped — the algorithm's value comparison
//! implicitly assumes the home dimension carries the foreign lower
//! parameter, and the explicit per-level pairing makes that assumption
//! checkable. For a weak attribute the matched foreign parameter itself is
//! scanned first (value equality with the home parameter), then its lower
//! levels.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fill::{DonorPolicy, FillRecord, FillSource};
use crate::intra::DonorPool;
use crate::matcher::{attributes_match, normalize, MatchConfig, MatchDecision};
use crate::schema::{validate_schema, Dimension, WarehouseModel};
use crate::table::{CellAddress, InstanceTable};

/// One end of a cross link: a parameter within one hierarchy of one
/// dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttrRef {
    pub dimension: String,
    pub hierarchy: String,
    pub parameter: String,
}

/// What the link fills: the home parameter itself, or a weak attribute of
/// it whose foreign counterpart was also matched.
#[derive(Debug, Clone, Serialize)]
pub enum LinkKind {
    Parameter,
    Weak {
        home_weak: String,
        foreign_weak: String,
        weak_decision: MatchDecision,
    },
}

/// A foreign level to scan for donors, paired with the home attribute whose
/// values are compared against it.
#[derive(Debug, Clone, Serialize)]
pub struct ScanLevel {
    pub foreign_level: String,
    pub home_attribute: String,
}

/// A discovered correspondence between two dimensions, ready to drive
/// fills. Links carry schema names only; they are re-resolved against the
/// model at imputation time and fail with a stale-link error if anything
/// they name has disappeared.
#[derive(Debug, Clone, Serialize)]
pub struct CrossLink {
    pub home: AttrRef,
    pub foreign: AttrRef,
    pub decision: MatchDecision,
    pub kind: LinkKind,
    pub scan: Vec<ScanLevel>,
}

fn usable(name: &str, cfg: &MatchConfig, owner: &str) -> bool {
    !normalize(name, cfg, owner).is_empty()
}

/// ≃ as used during discovery: alias pairs always match; otherwise names
/// whose normalized form is empty match nothing.
fn link_match(
    a: &str,
    owner_a: &str,
    b: &str,
    owner_b: &str,
    cfg: &MatchConfig,
) -> MatchDecision {
    let decision = attributes_match(a, owner_a, b, owner_b, cfg);
    if cfg.aliases.contains(owner_a, a, owner_b, b) {
        return decision;
    }
    if !usable(a, cfg, owner_a) || !usable(b, cfg, owner_b) {
        return MatchDecision {
            matched: false,
            ..decision
        };
    }
    decision
}

/// Foreign levels strictly below `below`, nearest-lower first, each paired
/// with the first home attribute (in declared order, parameters only) that
/// matches it. Unmatched levels are dropped.
fn matched_scan_levels(
    home: &Dimension,
    foreign: &Dimension,
    foreign_params: &[String],
    below: usize,
    cfg: &MatchConfig,
) -> Vec<ScanLevel> {
    let mut scan = Vec::new();
    for level in (0..below).rev() {
        let foreign_level = &foreign_params[level];
        let home_attr = home.attributes.iter().find(|a| {
            home.is_parameter(a)
                && link_match(a, &home.name, foreign_level, &foreign.name, cfg).matched
        });
        if let Some(home_attribute) = home_attr {
            scan.push(ScanLevel {
                foreign_level: foreign_level.clone(),
                home_attribute: home_attribute.clone(),
            });
        }
    }
    scan
}

/// Every matched (home, foreign) attribute pair across distinct dimensions.
/// Output order is the processing order of [`run_inter`]: home dimensions in
/// model order, hierarchies in declaration order, levels ascending with each
/// parameter's weak links right after it; foreign candidates ordered by
/// dimension name, then hierarchy declaration order, then level.
pub fn discover_links(model: &WarehouseModel, cfg: &MatchConfig) -> Vec<CrossLink> {
    let mut foreign_order: Vec<usize> = (0..model.dimensions.len()).collect();
    foreign_order.sort_by(|&a, &b| model.dimensions[a].name.cmp(&model.dimensions[b].name));

    let mut links = Vec::new();
    for home in &model.dimensions {
        for h in &home.hierarchies {
            for (level, param) in h.parameters.iter().enumerate() {
                if level >= 1 {
                    for &f_idx in &foreign_order {
                        let foreign = &model.dimensions[f_idx];
                        if foreign.name == home.name {
                            continue;
                        }
                        for fh in &foreign.hierarchies {
                            for (f_level, f_param) in fh.parameters.iter().enumerate() {
                                let decision =
                                    link_match(param, &home.name, f_param, &foreign.name, cfg);
                                if !decision.matched {
                                    continue;
                                }
                                links.push(CrossLink {
                                    home: AttrRef {
                                        dimension: home.name.clone(),
                                        hierarchy: h.name.clone(),
                                        parameter: param.clone(),
                                    },
                                    foreign: AttrRef {
                                        dimension: foreign.name.clone(),
                                        hierarchy: fh.name.clone(),
                                        parameter: f_param.clone(),
                                    },
                                    decision,
                                    kind: LinkKind::Parameter,
                                    scan: matched_scan_levels(
                                        home,
                                        foreign,
                                        &fh.parameters,
                                        f_level,
                                        cfg,
                                    ),
                                });
                            }
                        }
                    }
                }
                for weak in h.weak_of(param) {
                    for &f_idx in &foreign_order {
                        let foreign = &model.dimensions[f_idx];
                        if foreign.name == home.name {
                            continue;
                        }
                        for fh in &foreign.hierarchies {
                            for (f_level, f_param) in fh.parameters.iter().enumerate() {
                                let decision =
                                    link_match(param, &home.name, f_param, &foreign.name, cfg);
                                if !decision.matched {
                                    continue;
                                }
                                for f_weak in fh.weak_of(f_param) {
                                    let weak_decision =
                                        link_match(weak, &home.name, f_weak, &foreign.name, cfg);
                                    if !weak_decision.matched {
                                        continue;
                                    }
                                    // the matched foreign parameter is
                                    // scanned first, against the home
                                    // parameter itself
                                    let mut scan = vec![ScanLevel {
                                        foreign_level: f_param.clone(),
                                        home_attribute: param.clone(),
                                    }];
                                    scan.extend(matched_scan_levels(
                                        home,
                                        foreign,
                                        &fh.parameters,
                                        f_level,
                                        cfg,
                                    ));
                                    links.push(CrossLink {
                                        home: AttrRef {
                                            dimension: home.name.clone(),
                                            hierarchy: h.name.clone(),
                                            parameter: param.clone(),
                                        },
                                        foreign: AttrRef {
                                            dimension: foreign.name.clone(),
                                            hierarchy: fh.name.clone(),
                                            parameter: f_param.clone(),
                                        },
                                        decision: decision.clone(),
                                        kind: LinkKind::Weak {
                                            home_weak: weak.clone(),
                                            foreign_weak: f_weak.clone(),
                                            weak_decision,
                                        },
                                        scan,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    links
}

struct ResolvedLink {
    home_idx: usize,
    foreign_idx: usize,
    /// home attribute being filled
    target: String,
    /// foreign attribute the fill value is copied from
    source: String,
}

fn resolve_link(model: &WarehouseModel, link: &CrossLink) -> Result<ResolvedLink> {
    let stale = |detail: String| Error::StaleLink { detail };
    let home_idx = model
        .dimension_index(&link.home.dimension)
        .ok_or_else(|| stale(format!("home dimension `{}` not found", link.home.dimension)))?;
    let foreign_idx = model
        .dimension_index(&link.foreign.dimension)
        .ok_or_else(|| stale(format!("foreign dimension `{}` not found", link.foreign.dimension)))?;
    if home_idx == foreign_idx {
        return Err(stale("home and foreign dimensions coincide".into()));
    }
    let home = &model.dimensions[home_idx];
    let foreign = &model.dimensions[foreign_idx];

    let home_h = home
        .hierarchy(&link.home.hierarchy)
        .ok_or_else(|| stale(format!("home hierarchy `{}` not found", link.home.hierarchy)))?;
    if home_h.index_of(&link.home.parameter).is_none() {
        return Err(stale(format!(
            "home parameter `{}` not in hierarchy `{}`",
            link.home.parameter, link.home.hierarchy
        )));
    }
    let foreign_h = foreign
        .hierarchy(&link.foreign.hierarchy)
        .ok_or_else(|| stale(format!("foreign hierarchy `{}` not found", link.foreign.hierarchy)))?;
    if foreign_h.index_of(&link.foreign.parameter).is_none() {
        return Err(stale(format!(
            "foreign parameter `{}` not in hierarchy `{}`",
            link.foreign.parameter, link.foreign.hierarchy
        )));
    }

    let (target, source) = match &link.kind {
        LinkKind::Parameter => (link.home.parameter.clone(), link.foreign.parameter.clone()),
        LinkKind::Weak {
            home_weak,
            foreign_weak,
            ..
        } => {
            if !home_h
                .weak_of(&link.home.parameter)
                .iter()
                .any(|w| w == home_weak)
            {
                return Err(stale(format!(
                    "`{home_weak}` is no longer a weak attribute of `{}`",
                    link.home.parameter
                )));
            }
            if !foreign_h
                .weak_of(&link.foreign.parameter)
                .iter()
                .any(|w| w == foreign_weak)
            {
                return Err(stale(format!(
                    "`{foreign_weak}` is no longer a weak attribute of `{}`",
                    link.foreign.parameter
                )));
            }
            (home_weak.clone(), foreign_weak.clone())
        }
    };

    let column_missing = |t: &InstanceTable, col: &str| t.column_of(col).is_err();
    if column_missing(&home.table, &target) {
        return Err(stale(format!("home table lost column `{target}`")));
    }
    if column_missing(&foreign.table, &source) {
        return Err(stale(format!("foreign table lost column `{source}`")));
    }
    for s in &link.scan {
        if column_missing(&home.table, &s.home_attribute) {
            return Err(stale(format!("home table lost column `{}`", s.home_attribute)));
        }
        if column_missing(&foreign.table, &s.foreign_level) {
            return Err(stale(format!("foreign table lost column `{}`", s.foreign_level)));
        }
    }
    Ok(ResolvedLink {
        home_idx,
        foreign_idx,
        target,
        source,
    })
}

fn fill_from_foreign(
    home_name: &str,
    home_table: &mut InstanceTable,
    foreign: &Dimension,
    link: &CrossLink,
    target: &str,
    source: &str,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let target_col = home_table.column_of(target)?;
    let source_col = foreign.table.column_of(source)?;
    let scan_cols: Vec<(&ScanLevel, usize, usize)> = link
        .scan
        .iter()
        .map(|s| {
            Ok((
                s,
                home_table.column_of(&s.home_attribute)?,
                foreign.table.column_of(&s.foreign_level)?,
            ))
        })
        .collect::<Result<_>>()?;

    let missing = home_table.missing_rows(target_col);
    let mut fills = Vec::new();
    let mut pools: HashMap<usize, DonorPool> = HashMap::new();

    for row in missing {
        for (scan, home_col, foreign_col) in &scan_cols {
            let Some(home_value) = home_table.get(row, *home_col) else {
                continue;
            };
            let key = policy.equality.key(home_value);
            let pool = pools.entry(*foreign_col).or_insert_with(|| {
                DonorPool::build(&foreign.table, *foreign_col, source_col, policy)
            });
            let Some((donor_row, majority_value)) = pool.select(key.as_ref()) else {
                continue;
            };
            let value = match majority_value {
                Some(v) => v,
                None => foreign
                    .table
                    .get(donor_row, source_col)
                    .expect("pool donors have non-null source values")
                    .to_string(),
            };
            home_table.set(row, target_col, Some(value.clone()));
            fills.push(FillRecord {
                target: CellAddress {
                    dimension: home_name.to_string(),
                    row,
                    attribute: target.to_string(),
                },
                value,
                donor_row,
                matched_on: scan.foreign_level.clone(),
                hierarchy: link.home.hierarchy.clone(),
                source: FillSource::Inter,
                donor_dimension: foreign.name.clone(),
                donor_attribute: source.to_string(),
            });
            break;
        }
    }
    Ok(fills)
}

fn impute_inter(
    model: &mut WarehouseModel,
    link: &CrossLink,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let resolved = resolve_link(model, link)?;
    let mut home_table = std::mem::take(&mut model.dimensions[resolved.home_idx].table);
    let home_name = model.dimensions[resolved.home_idx].name.clone();
    let foreign = &model.dimensions[resolved.foreign_idx];
    let result = fill_from_foreign(
        &home_name,
        &mut home_table,
        foreign,
        link,
        &resolved.target,
        &resolved.source,
        policy,
    );
    model.dimensions[resolved.home_idx].table = home_table;
    result
}

/// Fills the home parameter of a parameter link from foreign donors.
pub fn impute_parameter_inter(
    model: &mut WarehouseModel,
    link: &CrossLink,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    match link.kind {
        LinkKind::Parameter => impute_inter(model, link, policy),
        LinkKind::Weak { .. } => Err(Error::StaleLink {
            detail: "expected a parameter link, got a weak-attribute link".into(),
        }),
    }
}

/// Fills the home weak attribute of a weak link from the donors' matched
/// foreign weak attribute.
pub fn impute_weak_inter(
    model: &mut WarehouseModel,
    link: &CrossLink,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    match link.kind {
        LinkKind::Weak { .. } => impute_inter(model, link, policy),
        LinkKind::Parameter => Err(Error::StaleLink {
            detail: "expected a weak-attribute link, got a parameter link".into(),
        }),
    }
}

/// One full inter pass: discovers links, then processes them in discovery
/// order (which follows the same dimension/hierarchy/level sequence as the
/// intra pass). Earlier fills are visible to later links; the first
/// successful fill for a cell wins.
pub fn run_inter(
    model: &mut WarehouseModel,
    cfg: &MatchConfig,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let report = validate_schema(model);
    if !report.is_valid() {
        return Err(Error::InvalidSchema(report));
    }
    let links = discover_links(model, cfg);
    let mut fills = Vec::new();
    for link in &links {
        fills.extend(impute_inter(model, link, policy)?);
    }
    Ok(fills)
}

/// Serializes discovered links for inspection.
pub fn links_to_json(links: &[CrossLink]) -> String {
    serde_json::to_string_pretty(links).expect("links serialize")
}
