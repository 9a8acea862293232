//! Naive reference implementations used by equivalence tests.
//!
//! These transcribe the imputation algorithms as literally as possible: for
//! every null cell, every candidate level is checked by a linear scan over
//! all rows, mutating the table in place. No donor indexes, no caching —
//! the point is an independent execution path whose fill log the optimized
//! engine must reproduce cell-for-cell under the `first` donor policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fill::{DonorMode, DonorPolicy, FillRecord, FillSource};
use crate::inter::{discover_links, CrossLink, LinkKind};
use crate::matcher::MatchConfig;
use crate::schema::{validate_schema, Dimension, Hierarchy, WarehouseModel};
use crate::table::{Cell, CellAddress, InstanceTable};

fn require_first_policy(policy: DonorPolicy) {
    assert_eq!(
        policy.mode,
        DonorMode::First,
        "the naive oracle only implements the `first` donor policy"
    );
}

/// First row whose value at `match_col` equals `wanted` and whose value at
/// `target_col` is non-null.
fn scan_for_donor(
    table: &InstanceTable,
    match_col: usize,
    wanted: &str,
    target_col: usize,
    policy: DonorPolicy,
) -> Option<usize> {
    (0..table.row_count()).find(|&row| {
        table
            .get(row, match_col)
            .is_some_and(|v| policy.equality.eq(v, wanted))
            && table.get(row, target_col).is_some()
    })
}

fn fill_one_column(
    dimension_name: &str,
    table: &mut InstanceTable,
    hierarchy_name: &str,
    target: &str,
    levels: &[String],
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let target_col = table.column_of(target)?;
    let mut fills = Vec::new();
    for row in 0..table.row_count() {
        if table.get(row, target_col).is_some() {
            continue;
        }
        for level in levels {
            let level_col = table.column_of(level)?;
            let Some(wanted) = table.get(row, level_col).map(str::to_string) else {
                continue;
            };
            let Some(donor_row) = scan_for_donor(table, level_col, &wanted, target_col, policy)
            else {
                continue;
            };
            let value = table
                .get(donor_row, target_col)
                .expect("donor has non-null target")
                .to_string();
            table.set(row, target_col, Some(value.clone()));
            fills.push(FillRecord {
                target: CellAddress {
                    dimension: dimension_name.to_string(),
                    row,
                    attribute: target.to_string(),
                },
                value,
                donor_row,
                matched_on: level.clone(),
                hierarchy: hierarchy_name.to_string(),
                source: FillSource::Intra,
                donor_dimension: dimension_name.to_string(),
                donor_attribute: target.to_string(),
            });
            break;
        }
    }
    Ok(fills)
}

/// Literal intra pass: dimensions in model order, hierarchies in order,
/// parameters ascending with their weak attributes right after each one.
pub fn run_intra_naive(model: &mut WarehouseModel, policy: DonorPolicy) -> Result<Vec<FillRecord>> {
    require_first_policy(policy);
    let report = validate_schema(model);
    if !report.is_valid() {
        return Err(Error::InvalidSchema(report));
    }
    let mut fills = Vec::new();
    for dim_idx in 0..model.dimensions.len() {
        let dimension_name = model.dimensions[dim_idx].name.clone();
        let hierarchies = model.dimensions[dim_idx].hierarchies.clone();
        for h in &hierarchies {
            for (level, param) in h.parameters.iter().enumerate() {
                if level >= 1 {
                    let levels: Vec<String> = h.parameters[..level]
                        .iter()
                        .rev()
                        .cloned()
                        .collect();
                    fills.extend(fill_one_column(
                        &dimension_name,
                        &mut model.dimensions[dim_idx].table,
                        &h.name,
                        param,
                        &levels,
                        policy,
                    )?);
                }
                for weak in h.weak_of(param) {
                    let mut levels = vec![param.clone()];
                    levels.extend(h.parameters[..level].iter().rev().cloned());
                    fills.extend(fill_one_column(
                        &dimension_name,
                        &mut model.dimensions[dim_idx].table,
                        &h.name,
                        weak,
                        &levels,
                        policy,
                    )?);
                }
            }
        }
    }
    Ok(fills)
}

fn fill_one_link(
    model: &mut WarehouseModel,
    link: &CrossLink,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let home_idx = model
        .dimension_index(&link.home.dimension)
        .ok_or_else(|| Error::StaleLink {
            detail: format!("home dimension `{}` not found", link.home.dimension),
        })?;
    let foreign_idx = model
        .dimension_index(&link.foreign.dimension)
        .ok_or_else(|| Error::StaleLink {
            detail: format!("foreign dimension `{}` not found", link.foreign.dimension),
        })?;
    let (target, source) = match &link.kind {
        LinkKind::Parameter => (link.home.parameter.clone(), link.foreign.parameter.clone()),
        LinkKind::Weak {
            home_weak,
            foreign_weak,
            ..
        } => (home_weak.clone(), foreign_weak.clone()),
    };

    let mut home_table = std::mem::take(&mut model.dimensions[home_idx].table);
    let result = (|| {
        let foreign = &model.dimensions[foreign_idx];
        let target_col = home_table.column_of(&target)?;
        let source_col = foreign.table.column_of(&source)?;
        let mut fills = Vec::new();
        for row in 0..home_table.row_count() {
            if home_table.get(row, target_col).is_some() {
                continue;
            }
            for scan in &link.scan {
                let home_col = home_table.column_of(&scan.home_attribute)?;
                let Some(wanted) = home_table.get(row, home_col).map(str::to_string) else {
                    continue;
                };
                let foreign_col = foreign.table.column_of(&scan.foreign_level)?;
                let Some(donor_row) =
                    scan_for_donor(&foreign.table, foreign_col, &wanted, source_col, policy)
                else {
                    continue;
                };
                let value = foreign
                    .table
                    .get(donor_row, source_col)
                    .expect("donor has non-null source")
                    .to_string();
                home_table.set(row, target_col, Some(value.clone()));
                fills.push(FillRecord {
                    target: CellAddress {
                        dimension: link.home.dimension.clone(),
                        row,
                        attribute: target.clone(),
                    },
                    value,
                    donor_row,
                    matched_on: scan.foreign_level.clone(),
                    hierarchy: link.home.hierarchy.clone(),
                    source: FillSource::Inter,
                    donor_dimension: foreign.name.clone(),
                    donor_attribute: source.clone(),
                });
                break;
            }
        }
        Ok(fills)
    })();
    model.dimensions[home_idx].table = home_table;
    result
}

/// Literal inter pass over the same link list and order the engine uses,
/// with per-cell linear donor scans.
pub fn run_inter_naive(
    model: &mut WarehouseModel,
    cfg: &MatchConfig,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    require_first_policy(policy);
    let report = validate_schema(model);
    if !report.is_valid() {
        return Err(Error::InvalidSchema(report));
    }
    let links = discover_links(model, cfg);
    let mut fills = Vec::new();
    for link in &links {
        fills.extend(fill_one_link(model, link, policy)?);
    }
    Ok(fills)
}

/// Textbook full-matrix Levenshtein, kept independent of the two-row
/// implementation the matcher uses.
pub fn dp_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut matrix = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in matrix[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            matrix[i][j] = (matrix[i - 1][j] + 1)
                .min(matrix[i][j - 1] + 1)
                .min(matrix[i - 1][j - 1] + cost);
        }
    }
    matrix[a.len()][b.len()]
}

// ---------------------------------------------------------------------------
// Randomized small models for equivalence testing
// ---------------------------------------------------------------------------

/// Concept chain shared across dimensions so that cross-dimension links
/// exist: (name, value pool size, weak concept).
const CONCEPTS: [(&str, usize, Option<&str>); 5] = [
    ("city", 14, Some("cityname")),
    ("state", 7, Some("statename")),
    ("country", 3, None),
    ("region", 4, Some("regionname")),
    ("zone", 5, None),
];

const DIM_NAMES: [&str; 3] = ["customer", "supplier", "store"];

fn decorate(style: usize, dim: &str, concept: &str) -> String {
    match style {
        0 => concept.to_string(),
        1 => format!("{}_{}", &dim[..1], concept),
        _ => format!("{dim}_{concept}"),
    }
}

/// A small random warehouse: 1–3 dimensions, 1–2 hierarchies each, chains
/// of 2–4 levels drawn from a shared concept list with per-dimension name
/// decoration, random weak attributes, and nulls sprinkled over every
/// non-identifier attribute. Always passes validation.
pub fn random_model(seed: u64) -> WarehouseModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_dims = rng.gen_range(1..=3);
    let mut dimensions = Vec::new();

    for (dim_idx, dim_name) in DIM_NAMES.iter().take(n_dims).enumerate() {
        let dim_name = dim_name.to_string();
        let style = rng.gen_range(0..3);
        let rows = rng.gen_range(20..=250);
        let id_attr = decorate(style, &dim_name, "id");

        let mut attributes = vec![id_attr.clone()];
        let mut hierarchies = Vec::new();
        let n_hierarchies = rng.gen_range(1..=2);
        // concept name -> attribute name, shared across hierarchies of this
        // dimension so repeated concepts reuse one column
        let mut attr_of_concept: Vec<(usize, String, Option<String>)> = Vec::new();

        for h_idx in 0..n_hierarchies {
            let start = rng.gen_range(0..CONCEPTS.len() - 1);
            let depth = rng.gen_range(2..=4).min(CONCEPTS.len() - start);
            let mut parameters = vec![id_attr.clone()];
            let mut weak = std::collections::BTreeMap::new();
            for (offset, &(concept, _, weak_concept)) in
                CONCEPTS[start..start + depth].iter().enumerate()
            {
                let c = start + offset;
                let existing = attr_of_concept.iter().find(|(idx, _, _)| *idx == c);
                let attr = match existing {
                    Some((_, attr, _)) => attr.clone(),
                    None => {
                        let attr = decorate(style, &dim_name, concept);
                        attributes.push(attr.clone());
                        attr_of_concept.push((c, attr.clone(), None));
                        attr
                    }
                };
                parameters.push(attr.clone());
                if let Some(wc) = weak_concept {
                    if rng.gen_bool(0.4) {
                        let slot = attr_of_concept
                            .iter_mut()
                            .find(|(idx, _, _)| *idx == c)
                            .expect("concept registered");
                        let weak_attr = match &slot.2 {
                            Some(w) => w.clone(),
                            None => {
                                let w = decorate(style, &dim_name, wc);
                                attributes.push(w.clone());
                                slot.2 = Some(w.clone());
                                w
                            }
                        };
                        weak.insert(attr.clone(), vec![weak_attr]);
                    }
                }
            }
            hierarchies.push(Hierarchy {
                name: format!("h{}", h_idx + 1),
                parameters,
                weak,
            });
        }

        // per-column value pool sizes, taken from the owning concept
        let column_pool: Vec<usize> = attributes
            .iter()
            .map(|attr| {
                attr_of_concept
                    .iter()
                    .find_map(|(c, a, w)| {
                        (a == attr || w.as_deref() == Some(attr.as_str()))
                            .then(|| CONCEPTS[*c].1)
                    })
                    .unwrap_or(0)
            })
            .collect();

        let mut table_rows: Vec<Vec<Cell>> = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut row = Vec::with_capacity(attributes.len());
            for (col, attr) in attributes.iter().enumerate() {
                if *attr == id_attr {
                    row.push(Some(format!("d{dim_idx}r{r}")));
                } else if rng.gen_bool(0.15) {
                    row.push(None);
                } else {
                    let pool = column_pool[col].max(2);
                    let value_idx = rng.gen_range(0..pool);
                    // weak columns carry the weak concept's namespace so
                    // weak fills can be wrong or right independent of params
                    let concept = attr_of_concept
                        .iter()
                        .find_map(|(c, a, w)| {
                            if a == attr {
                                Some(CONCEPTS[*c].0)
                            } else if w.as_deref() == Some(attr) {
                                Some(CONCEPTS[*c].2.unwrap_or(CONCEPTS[*c].0))
                            } else {
                                None
                            }
                        })
                        .unwrap_or("v");
                    row.push(Some(format!("{concept}{value_idx}")));
                }
            }
            table_rows.push(row);
        }

        dimensions.push(Dimension {
            name: dim_name,
            attributes: attributes.clone(),
            id_attribute: id_attr,
            hierarchies,
            table: InstanceTable::new(attributes, table_rows).expect("well-formed table"),
        });
    }

    WarehouseModel {
        name: format!("random{seed}"),
        dimensions,
        facts: vec![],
        star: std::collections::BTreeMap::new(),
    }
}
