//! Intra-dimensional imputation: fills a missing parameter or weak
//! attribute from another instance of the same dimension that shares a
//! lower-granularity value, exploiting the functional dependencies a
//! hierarchy declares.
//!
//! For each null cell the matching levels are scanned nearest-lower first
//! (for a weak attribute, its own parameter first). The first level where
//! the row has a value and some donor shares it with a non-null target
//! supplies the fill; rows with no qualifying donor stay null. Fills are
//! visible immediately, so a cell completed at one level can donate at the
//! next — this is what makes the sequential level order maximal — but a
//! filled cell is never itself re-filled.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::fill::{DonorMode, DonorPolicy, FillRecord, FillSource};
use crate::schema::{validate_schema, Dimension, WarehouseModel};
use crate::table::{CellAddress, InstanceTable};

/// Donor candidates for one matching level, grouped by the value at that
/// level. Kept up to date as fills land so late fills can donate.
pub(crate) struct DonorPool {
    mode: DonorMode,
    by_value: HashMap<String, PoolEntry>,
}

struct PoolEntry {
    first_row: usize,
    /// target value -> (count, lowest donor row with that value); only
    /// maintained under `Majority`.
    values: BTreeMap<String, (usize, usize)>,
}

impl DonorPool {
    pub(crate) fn build(
        table: &InstanceTable,
        level_col: usize,
        target_col: usize,
        policy: DonorPolicy,
    ) -> Self {
        let mut pool = DonorPool {
            mode: policy.mode,
            by_value: HashMap::new(),
        };
        for row in 0..table.row_count() {
            if let (Some(level_value), Some(target_value)) =
                (table.get(row, level_col), table.get(row, target_col))
            {
                pool.add(&policy.equality.key(level_value), row, target_value);
            }
        }
        pool
    }

    pub(crate) fn contains(&self, key: &str) -> bool {
        self.by_value.contains_key(key)
    }

    pub(crate) fn add(&mut self, key: &str, row: usize, target_value: &str) {
        let entry = match self.by_value.get_mut(key) {
            Some(entry) => entry,
            None => self
                .by_value
                .entry(key.to_string())
                .or_insert_with(|| PoolEntry {
                    first_row: usize::MAX,
                    values: BTreeMap::new(),
                }),
        };
        entry.first_row = entry.first_row.min(row);
        if self.mode == DonorMode::Majority {
            let slot = entry
                .values
                .entry(target_value.to_string())
                .or_insert((0, row));
            slot.0 += 1;
            slot.1 = slot.1.min(row);
        }
    }

    /// The donor chosen for a row whose matching-level key is `key`, as
    /// `(donor_row, value)` — `value` is only populated under `Majority`;
    /// `First` reads the donor row's live cell instead.
    pub(crate) fn select(&self, key: &str) -> Option<(usize, Option<String>)> {
        let entry = self.by_value.get(key)?;
        match self.mode {
            DonorMode::First => Some((entry.first_row, None)),
            DonorMode::Majority => {
                let mut best: Option<(&String, usize, usize)> = None;
                for (value, (count, min_row)) in &entry.values {
                    if best.is_none_or(|(_, c, _)| *count > c) {
                        best = Some((value, *count, *min_row));
                    }
                }
                best.map(|(value, _, min_row)| (min_row, Some(value.clone())))
            }
        }
    }
}

/// Shared fill routine for parameters and weak attributes: the two differ
/// only in the ordered list of matching levels.
pub(crate) fn impute_with_levels(
    dimension_name: &str,
    table: &mut InstanceTable,
    hierarchy_name: &str,
    target: &str,
    levels: &[String],
    policy: DonorPolicy,
    source: FillSource,
) -> Result<Vec<FillRecord>> {
    let target_col = table.column_of(target)?;
    let level_cols: Vec<(String, usize)> = levels
        .iter()
        .map(|l| Ok((l.clone(), table.column_of(l)?)))
        .collect::<Result<_>>()?;

    let missing = table.missing_rows(target_col);
    let mut fills = Vec::with_capacity(missing.len());
    let mut pools: HashMap<usize, DonorPool> = HashMap::new();

    for row in missing {
        let mut chosen: Option<(usize, String)> = None;
        for (idx, (_, level_col)) in level_cols.iter().enumerate() {
            let Some(level_value) = table.get(row, *level_col) else {
                continue;
            };
            let key = policy.equality.key(level_value);
            if !pools.contains_key(level_col) {
                let pool = DonorPool::build(table, *level_col, target_col, policy);
                pools.insert(*level_col, pool);
            }
            if pools[level_col].contains(&key) {
                chosen = Some((idx, key.into_owned()));
                break;
            }
        }
        let Some((idx, key)) = chosen else { continue };
        let (level_name, level_col) = &level_cols[idx];
        let (donor_row, majority_value) = pools[level_col].select(&key).expect("key just probed");
        let value = match majority_value {
            Some(v) => v,
            None => table
                .get(donor_row, target_col)
                .expect("pool donors have non-null targets")
                .to_string(),
        };

        table.set(row, target_col, Some(value.clone()));
        for (level_col, pool) in pools.iter_mut() {
            if let Some(level_value) = table.get(row, *level_col) {
                pool.add(&policy.equality.key(level_value), row, &value);
            }
        }
        fills.push(FillRecord {
            target: CellAddress {
                dimension: dimension_name.to_string(),
                row,
                attribute: target.to_string(),
            },
            value,
            donor_row,
            matched_on: level_name.clone(),
            hierarchy: hierarchy_name.to_string(),
            source,
            donor_dimension: dimension_name.to_string(),
            donor_attribute: target.to_string(),
        });
    }
    Ok(fills)
}

fn hierarchy_of<'a>(dim: &'a Dimension, hierarchy: &str) -> Result<&'a crate::schema::Hierarchy> {
    dim.hierarchy(hierarchy).ok_or_else(|| Error::UnknownHierarchy {
        dimension: dim.name.clone(),
        hierarchy: hierarchy.to_string(),
    })
}

/// Fills missing values of parameter `p` from donors sharing a lower
/// parameter value, nearest-lower level first. The identifier level is
/// rejected: its values are unique by contract, so it has no donors.
pub fn impute_parameter_intra(
    dim: &mut Dimension,
    hierarchy: &str,
    parameter: &str,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let h = hierarchy_of(dim, hierarchy)?;
    let idx = h.index_of(parameter).ok_or_else(|| Error::UnknownParameter {
        hierarchy: hierarchy.to_string(),
        parameter: parameter.to_string(),
    })?;
    if idx == 0 {
        return Err(Error::IdentifierTarget {
            hierarchy: hierarchy.to_string(),
            attribute: parameter.to_string(),
        });
    }
    let levels: Vec<String> = h
        .lower_parameters(parameter)?
        .into_iter()
        .map(str::to_string)
        .collect();
    let name = dim.name.clone();
    let hierarchy = hierarchy.to_string();
    impute_with_levels(
        &name,
        &mut dim.table,
        &hierarchy,
        parameter,
        &levels,
        policy,
        FillSource::Intra,
    )
}

/// Fills missing values of weak attribute `w` of parameter `p`, matching on
/// `p` itself first and then on lower parameters.
pub fn impute_weak_intra(
    dim: &mut Dimension,
    hierarchy: &str,
    parameter: &str,
    weak: &str,
    policy: DonorPolicy,
) -> Result<Vec<FillRecord>> {
    let h = hierarchy_of(dim, hierarchy)?;
    if !h.weak_of(parameter).iter().any(|x| x == weak) {
        return Err(Error::NotWeakAttribute {
            hierarchy: hierarchy.to_string(),
            parameter: parameter.to_string(),
            weak: weak.to_string(),
        });
    }
    let mut levels = vec![parameter.to_string()];
    levels.extend(h.lower_parameters(parameter)?.into_iter().map(str::to_string));
    let name = dim.name.clone();
    let hierarchy = hierarchy.to_string();
    impute_with_levels(
        &name,
        &mut dim.table,
        &hierarchy,
        weak,
        &levels,
        policy,
        FillSource::Intra,
    )
}

/// One full intra pass over the warehouse: every dimension, every
/// hierarchy, parameters in ascending granularity order and each
/// parameter's weak attributes right after it, in schema order. Validation
/// failures abort before any table is touched.
pub fn run_intra(model: &mut WarehouseModel, policy: DonorPolicy) -> Result<Vec<FillRecord>> {
    let report = validate_schema(model);
    if !report.is_valid() {
        return Err(Error::InvalidSchema(report));
    }
    let mut fills = Vec::new();
    for dim_idx in 0..model.dimensions.len() {
        for h_idx in 0..model.dimensions[dim_idx].hierarchies.len() {
            let (h_name, params) = {
                let h = &model.dimensions[dim_idx].hierarchies[h_idx];
                (h.name.clone(), h.parameters.clone())
            };
            for (level, param) in params.iter().enumerate() {
                if level >= 1 {
                    fills.extend(impute_parameter_intra(
                        &mut model.dimensions[dim_idx],
                        &h_name,
                        param,
                        policy,
                    )?);
                }
                let weaks: Vec<String> = model.dimensions[dim_idx].hierarchies[h_idx]
                    .weak_of(param)
                    .to_vec();
                for weak in &weaks {
                    fills.extend(impute_weak_intra(
                        &mut model.dimensions[dim_idx],
                        &h_name,
                        param,
                        weak,
                        policy,
                    )?);
                }
            }
        }
    }
    Ok(fills)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Hierarchy;
    use crate::table::InstanceTable;
    use std::collections::BTreeMap;

    fn cell(v: &str) -> Option<String> {
        if v.is_empty() {
            None
        } else {
            Some(v.to_string())
        }
    }

    fn geo_dimension(rows: &[&[&str]]) -> Dimension {
        let columns = vec!["id".to_string(), "city".to_string(), "state".to_string()];
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|v| cell(v)).collect())
            .collect();
        Dimension {
            name: "store".into(),
            attributes: columns.clone(),
            id_attribute: "id".into(),
            hierarchies: vec![Hierarchy {
                name: "geo".into(),
                parameters: columns.clone(),
                weak: BTreeMap::new(),
            }],
            table: InstanceTable::new(columns, rows).unwrap(),
        }
    }

    #[test]
    fn fills_from_donor_sharing_lower_value() {
        let mut dim = geo_dimension(&[&["1", "Lyon", "ARA"], &["2", "Lyon", ""]]);
        let fills =
            impute_parameter_intra(&mut dim, "geo", "state", DonorPolicy::first()).unwrap();
        assert_eq!(fills.len(), 1);
        let f = &fills[0];
        assert_eq!(f.target.row, 1);
        assert_eq!(f.value, "ARA");
        assert_eq!(f.donor_row, 0);
        assert_eq!(f.matched_on, "city");
        assert_eq!(dim.table.get_by_name(1, "state").unwrap(), Some("ARA"));
    }

    #[test]
    fn no_fill_without_shared_lower_value() {
        let mut dim = geo_dimension(&[&["1", "Lyon", ""], &["2", "Paris", "IDF"]]);
        let fills =
            impute_parameter_intra(&mut dim, "geo", "state", DonorPolicy::first()).unwrap();
        assert!(fills.is_empty());
        assert_eq!(dim.table.get_by_name(0, "state").unwrap(), None);
    }

    #[test]
    fn clean_column_produces_empty_log() {
        let mut dim = geo_dimension(&[&["1", "Lyon", "ARA"], &["2", "Paris", "IDF"]]);
        let before = dim.table.clone();
        let fills =
            impute_parameter_intra(&mut dim, "geo", "state", DonorPolicy::first()).unwrap();
        assert!(fills.is_empty());
        assert_eq!(dim.table, before);
    }

    #[test]
    fn majority_policy_picks_modal_donor_value() {
        let mut dim = geo_dimension(&[
            &["1", "Springfield", "IL"],
            &["2", "Springfield", "MO"],
            &["3", "Springfield", ""],
            &["4", "Springfield", "IL"],
        ]);
        // brute-force tally over donor rows sharing the city
        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for r in [0, 1, 3] {
            *tally.entry(dim.table.get_by_name(r, "state").unwrap().unwrap()).or_default() += 1;
        }
        let expected = tally
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(v, _)| v.to_string())
            .unwrap();
        assert_eq!(expected, "IL");

        let fills =
            impute_parameter_intra(&mut dim, "geo", "state", DonorPolicy::majority()).unwrap();
        assert_eq!(fills.len(), 1);
        assert_eq!(fills[0].value, "IL");
        assert_eq!(fills[0].donor_row, 0);
    }

    #[test]
    fn majority_tie_breaks_to_smallest_value() {
        let mut dim = geo_dimension(&[
            &["1", "Springfield", "MO"],
            &["2", "Springfield", "IL"],
            &["3", "Springfield", ""],
        ]);
        let fills =
            impute_parameter_intra(&mut dim, "geo", "state", DonorPolicy::majority()).unwrap();
        assert_eq!(fills[0].value, "IL");
        assert_eq!(fills[0].donor_row, 1);
    }

    #[test]
    fn identifier_level_is_rejected() {
        let mut dim = geo_dimension(&[&["1", "Lyon", "ARA"]]);
        assert!(matches!(
            impute_parameter_intra(&mut dim, "geo", "id", DonorPolicy::first()),
            Err(Error::IdentifierTarget { .. })
        ));
        assert!(matches!(
            impute_parameter_intra(&mut dim, "geo", "region", DonorPolicy::first()),
            Err(Error::UnknownParameter { .. })
        ));
    }

    fn weak_dimension(rows: &[&[&str]]) -> Dimension {
        let columns = vec![
            "id".to_string(),
            "city".to_string(),
            "state".to_string(),
            "state_name".to_string(),
        ];
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|v| cell(v)).collect())
            .collect();
        let mut weak = BTreeMap::new();
        weak.insert("state".to_string(), vec!["state_name".to_string()]);
        Dimension {
            name: "store".into(),
            attributes: columns.clone(),
            id_attribute: "id".into(),
            hierarchies: vec![Hierarchy {
                name: "geo".into(),
                parameters: vec!["id".into(), "city".into(), "state".into()],
                weak,
            }],
            table: InstanceTable::new(columns, rows).unwrap(),
        }
    }

    #[test]
    fn weak_fills_via_its_own_parameter() {
        let mut dim = weak_dimension(&[
            &["1", "Lyon", "ARA", "Auvergne-Rhône-Alpes"],
            &["2", "Grenoble", "ARA", ""],
        ]);
        let fills =
            impute_weak_intra(&mut dim, "geo", "state", "state_name", DonorPolicy::first())
                .unwrap();
        assert_eq!(fills.len(), 1);
        assert_eq!(fills[0].matched_on, "state");
        assert_eq!(fills[0].value, "Auvergne-Rhône-Alpes");
    }

    #[test]
    fn weak_falls_back_to_lower_level_when_parameter_null() {
        let mut dim = weak_dimension(&[
            &["1", "Lyon", "ARA", "Auvergne-Rhône-Alpes"],
            &["2", "Lyon", "", ""],
        ]);
        let fills =
            impute_weak_intra(&mut dim, "geo", "state", "state_name", DonorPolicy::first())
                .unwrap();
        assert_eq!(fills.len(), 1);
        assert_eq!(fills[0].matched_on, "city");
        assert_eq!(fills[0].value, "Auvergne-Rhône-Alpes");
    }

    #[test]
    fn weak_without_donor_stays_null() {
        let mut dim = weak_dimension(&[
            &["1", "Lyon", "ARA", ""],
            &["2", "Paris", "IDF", ""],
        ]);
        let fills =
            impute_weak_intra(&mut dim, "geo", "state", "state_name", DonorPolicy::first())
                .unwrap();
        assert!(fills.is_empty());
    }

    #[test]
    fn weak_must_belong_to_parameter() {
        let mut dim = weak_dimension(&[&["1", "Lyon", "ARA", ""]]);
        assert!(matches!(
            impute_weak_intra(&mut dim, "geo", "city", "state_name", DonorPolicy::first()),
            Err(Error::NotWeakAttribute { .. })
        ));
    }

    fn chain_model(rows: &[&[&str]]) -> WarehouseModel {
        let columns = vec![
            "id".to_string(),
            "city".to_string(),
            "state".to_string(),
            "country".to_string(),
        ];
        let table_rows = rows
            .iter()
            .map(|r| r.iter().map(|v| cell(v)).collect())
            .collect();
        WarehouseModel {
            name: "dw".into(),
            dimensions: vec![Dimension {
                name: "store".into(),
                attributes: columns.clone(),
                id_attribute: "id".into(),
                hierarchies: vec![Hierarchy {
                    name: "geo".into(),
                    parameters: columns.clone(),
                    weak: BTreeMap::new(),
                }],
                table: InstanceTable::new(columns, table_rows).unwrap(),
            }],
            facts: vec![],
            star: BTreeMap::new(),
        }
    }

    #[test]
    fn sequential_levels_chain_fills_in_one_pass() {
        let mut model = chain_model(&[
            &["1", "Lyon", "ARA", ""],
            &["2", "Paris", "ARA", "France"],
            &["3", "Lyon", "", ""],
        ]);
        let fills = run_intra(&mut model, DonorPolicy::first()).unwrap();
        let table = &model.dimensions[0].table;
        assert_eq!(table.get_by_name(2, "state").unwrap(), Some("ARA"));
        assert_eq!(table.get_by_name(2, "country").unwrap(), Some("France"));
        assert_eq!(table.get_by_name(0, "country").unwrap(), Some("France"));
        assert_eq!(fills.len(), 3);
        // row 0's country was filled before row 2 was processed, so it is
        // the first qualifying donor for row 2
        let row2_country = fills
            .iter()
            .find(|f| f.target.row == 2 && f.target.attribute == "country")
            .unwrap();
        assert_eq!(row2_country.donor_row, 0);
    }

    #[test]
    fn clean_model_yields_empty_log() {
        let mut model = chain_model(&[
            &["1", "Lyon", "ARA", "France"],
            &["2", "Paris", "IDF", "France"],
        ]);
        let fills = run_intra(&mut model, DonorPolicy::first()).unwrap();
        assert!(fills.is_empty());
    }

    #[test]
    fn hierarchies_are_processed_independently_with_provenance() {
        let columns = vec![
            "id".to_string(),
            "city".to_string(),
            "state".to_string(),
            "zip".to_string(),
            "zone".to_string(),
        ];
        let rows = vec![
            vec![cell("1"), cell("Lyon"), cell("ARA"), cell("69"), cell("SE")],
            vec![cell("2"), cell("Lyon"), cell(""), cell("69"), cell("")],
        ];
        let mut model = WarehouseModel {
            name: "dw".into(),
            dimensions: vec![Dimension {
                name: "store".into(),
                attributes: columns.clone(),
                id_attribute: "id".into(),
                hierarchies: vec![
                    Hierarchy {
                        name: "geo".into(),
                        parameters: vec!["id".into(), "city".into(), "state".into()],
                        weak: BTreeMap::new(),
                    },
                    Hierarchy {
                        name: "postal".into(),
                        parameters: vec!["id".into(), "zip".into(), "zone".into()],
                        weak: BTreeMap::new(),
                    },
                ],
                table: InstanceTable::new(columns, rows).unwrap(),
            }],
            facts: vec![],
            star: BTreeMap::new(),
        };
        let fills = run_intra(&mut model, DonorPolicy::first()).unwrap();
        assert_eq!(fills.len(), 2);
        assert!(fills.iter().any(|f| f.hierarchy == "geo" && f.target.attribute == "state"));
        assert!(fills.iter().any(|f| f.hierarchy == "postal" && f.target.attribute == "zone"));
    }

    #[test]
    fn invalid_model_aborts_before_mutation() {
        let mut model = chain_model(&[&["1", "Lyon", "ARA", ""], &["2", "Lyon", "ARA", "France"]]);
        model.dimensions[0].hierarchies[0].parameters[0] = "city".into();
        let before = model.dimensions[0].table.clone();
        assert!(matches!(
            run_intra(&mut model, DonorPolicy::first()),
            Err(Error::InvalidSchema(_))
        ));
        assert_eq!(model.dimensions[0].table, before);
    }

    #[test]
    fn fills_never_overwrite_and_match_donor_values() {
        let mut model = chain_model(&[
            &["1", "Lyon", "ARA", "France"],
            &["2", "Lyon", "", ""],
            &["3", "Paris", "IDF", ""],
        ]);
        let before = model.dimensions[0].table.clone();
        let fills = run_intra(&mut model, DonorPolicy::first()).unwrap();
        let after = &model.dimensions[0].table;
        for col in 0..before.columns().len() {
            for row in 0..before.row_count() {
                if let Some(v) = before.get(row, col) {
                    assert_eq!(after.get(row, col), Some(v));
                }
            }
        }
        for f in &fills {
            let donor_value = after.get_by_name(f.donor_row, &f.target.attribute).unwrap();
            assert_eq!(donor_value, Some(f.value.as_str()));
        }
    }
}
