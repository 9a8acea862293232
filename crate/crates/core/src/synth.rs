//! Seeded generator for hierarchical dimension tables, used by the
//! evaluation harness and tests in place of external warehouse datasets.
//!
//! A strict table makes every level-k value a function of the level-(k-1)
//! value below it. With strictness off, a chosen fraction of the values at
//! each level map to two distinct parents — rows carrying such a value are
//! split between the regular parent and an alternate one, which is exactly
//! the shape of a non-strict hierarchy (one city name in two states).

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{Dimension, Hierarchy, WarehouseModel};
use crate::table::{Cell, InstanceTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strictness {
    Strict,
    /// Fraction of each level's values that map to two distinct parents.
    NonStrict { fraction: f64 },
}

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub dimension: String,
    /// Number of parameters including the identifier level.
    pub levels: usize,
    /// `fanout[0]` is rows per distinct level-1 value; `fanout[k]` is
    /// distinct level-k values per level-(k+1) value. Length `levels - 1`.
    pub fanout: Vec<usize>,
    pub rows: usize,
    /// Weak attributes attached to the parameter of each level. Length
    /// `levels`.
    pub weak_counts: Vec<usize>,
    pub strictness: Strictness,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn strict(levels: usize, fanout: Vec<usize>, rows: usize, seed: u64) -> Self {
        Self {
            dimension: "dim".into(),
            levels,
            fanout,
            rows,
            weak_counts: vec![0; levels],
            strictness: Strictness::Strict,
            seed,
        }
    }
}

/// A generated model plus, per parameter, the rows whose child-level value
/// is conflicted (maps to two parents). Rows outside these sets form the
/// strict subset for that parameter.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub model: WarehouseModel,
    pub conflicted_rows: BTreeMap<String, BTreeSet<usize>>,
}

fn param_name(level: usize) -> String {
    if level == 0 {
        "id".to_string()
    } else {
        format!("l{level}")
    }
}

fn weak_name(level: usize, j: usize) -> String {
    format!("{}_w{}", param_name(level), j + 1)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let fail = |message: String| Err(Error::SyntheticSpec { message });
    if spec.levels == 0 {
        return fail("levels must be at least 1".into());
    }
    if spec.fanout.len() != spec.levels - 1 {
        return fail(format!(
            "fanout has {} entries, expected levels - 1 = {}",
            spec.fanout.len(),
            spec.levels - 1
        ));
    }
    if spec.fanout.contains(&0) {
        return fail("every fanout must be at least 1".into());
    }
    if spec.weak_counts.len() != spec.levels {
        return fail(format!(
            "weak_counts has {} entries, expected levels = {}",
            spec.weak_counts.len(),
            spec.levels
        ));
    }
    let fraction = match spec.strictness {
        Strictness::Strict => 0.0,
        Strictness::NonStrict { fraction } => {
            if !(0.0..=1.0).contains(&fraction) {
                return fail(format!("non-strict fraction {fraction} out of [0, 1]"));
            }
            fraction
        }
    };

    // rows per distinct value at each level
    let mut reps = vec![1usize; spec.levels];
    for k in 1..spec.levels {
        reps[k] = reps[k - 1].saturating_mul(spec.fanout[k - 1]);
    }
    let distinct =
        |k: usize| -> usize { if k == 0 { spec.rows } else { spec.rows.div_ceil(reps[k]) } };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // values at level k whose parent at level k+1 is ambiguous
    let mut conflicted_values: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); spec.levels];
    if fraction > 0.0 && spec.levels >= 2 {
        for (offset, set) in conflicted_values[1..spec.levels - 1].iter_mut().enumerate() {
            let k = offset + 1;
            if distinct(k + 1) < 2 {
                continue;
            }
            for g in 0..distinct(k) {
                if rng.gen::<f64>() < fraction {
                    set.insert(g);
                }
            }
        }
    }

    let mut columns = Vec::new();
    let mut weak_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for k in 0..spec.levels {
        columns.push(param_name(k));
        let weaks: Vec<String> = (0..spec.weak_counts[k]).map(|j| weak_name(k, j)).collect();
        columns.extend(weaks.iter().cloned());
        if !weaks.is_empty() {
            weak_map.insert(param_name(k), weaks);
        }
    }

    let mut conflicted_rows: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(spec.rows);
    for i in 0..spec.rows {
        let mut row = Vec::with_capacity(columns.len());
        let mut group = i;
        for k in 0..spec.levels {
            let value = if k == 0 {
                format!("id{i}")
            } else {
                let child = group;
                let strict_parent = child / spec.fanout[k - 1];
                group = if conflicted_values[k - 1].contains(&child) {
                    conflicted_rows
                        .entry(param_name(k))
                        .or_default()
                        .insert(i);
                    if rng.gen_bool(0.5) {
                        (strict_parent + 1) % distinct(k)
                    } else {
                        strict_parent
                    }
                } else {
                    strict_parent
                };
                format!("l{k}v{group}")
            };
            row.push(Some(value.clone()));
            for j in 0..spec.weak_counts[k] {
                row.push(Some(format!("w{}[{}]", j + 1, value)));
            }
        }
        rows.push(row);
    }

    let table = InstanceTable::new(columns.clone(), rows)?;
    let model = WarehouseModel {
        name: format!("{}_dw", spec.dimension),
        dimensions: vec![Dimension {
            name: spec.dimension.clone(),
            attributes: columns,
            id_attribute: "id".into(),
            hierarchies: vec![Hierarchy {
                name: "h1".into(),
                parameters: (0..spec.levels).map(param_name).collect(),
                weak: weak_map,
            }],
            table,
        }],
        facts: vec![],
        star: BTreeMap::new(),
    };
    Ok(SyntheticData {
        model,
        conflicted_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::inject;
    use crate::fill::DonorPolicy;
    use crate::intra::run_intra;
    use crate::schema::validate_schema;

    #[test]
    fn strict_chain_validates_and_imputes_perfectly() {
        let spec = SyntheticSpec::strict(4, vec![10, 5, 4], 1000, 7);
        let mut data = generate_synthetic(&spec).unwrap();
        assert!(validate_schema(&data.model).is_valid());
        assert!(data.conflicted_rows.is_empty());

        let truth = inject(&mut data.model.dimensions[0], "l2", 0.10, 99).unwrap();
        let fills = run_intra(&mut data.model, DonorPolicy::first()).unwrap();
        assert_eq!(fills.len(), truth.entries.len());
        for f in &fills {
            let original = truth.entries.get(&f.target).unwrap();
            assert_eq!(&f.value, original);
        }
    }

    #[test]
    fn non_strict_fraction_degrades_first_policy_accuracy() {
        let spec = SyntheticSpec {
            dimension: "dim".into(),
            levels: 3,
            fanout: vec![4, 5],
            rows: 2000,
            weak_counts: vec![0, 0, 0],
            strictness: Strictness::NonStrict { fraction: 0.1 },
            seed: 11,
        };
        let mut data = generate_synthetic(&spec).unwrap();
        assert!(!data.conflicted_rows["l2"].is_empty());

        let truth = inject(&mut data.model.dimensions[0], "l2", 0.10, 5).unwrap();
        let fills = run_intra(&mut data.model, DonorPolicy::first()).unwrap();
        let wrong = fills
            .iter()
            .filter(|f| truth.entries.get(&f.target) != Some(&f.value))
            .count();
        assert!(wrong > 0, "expected at least one wrong fill on conflicted rows");
        // every wrong fill sits on a conflicted row
        for f in &fills {
            if truth.entries.get(&f.target) != Some(&f.value) {
                assert!(data.conflicted_rows["l2"].contains(&f.target.row));
            }
        }
    }

    #[test]
    fn unique_lower_values_make_parameter_unfillable() {
        // fanout 1 below the target level: every level-1 value appears on a
        // single row, so no donor ever shares it
        let spec = SyntheticSpec::strict(3, vec![1, 3], 30, 3);
        let mut data = generate_synthetic(&spec).unwrap();
        let truth = inject(&mut data.model.dimensions[0], "l2", 0.20, 17).unwrap();
        assert!(!truth.entries.is_empty());
        let fills = run_intra(&mut data.model, DonorPolicy::first()).unwrap();
        assert!(fills.is_empty());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = SyntheticSpec {
            dimension: "dim".into(),
            levels: 3,
            fanout: vec![3, 2],
            rows: 60,
            weak_counts: vec![0, 1, 1],
            strictness: Strictness::NonStrict { fraction: 0.3 },
            seed: 123,
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.model.dimensions[0].table, b.model.dimensions[0].table);
        assert_eq!(a.conflicted_rows, b.conflicted_rows);
    }

    #[test]
    fn inconsistent_specs_are_rejected() {
        assert!(generate_synthetic(&SyntheticSpec::strict(3, vec![2], 10, 0)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::strict(3, vec![2, 0], 10, 0)).is_err());
        let mut bad_weaks = SyntheticSpec::strict(2, vec![2], 10, 0);
        bad_weaks.weak_counts = vec![0];
        assert!(generate_synthetic(&bad_weaks).is_err());
    }

    #[test]
    fn weak_values_are_functions_of_their_parameter() {
        let spec = SyntheticSpec {
            dimension: "dim".into(),
            levels: 2,
            fanout: vec![4],
            rows: 40,
            weak_counts: vec![0, 2],
            strictness: Strictness::Strict,
            seed: 9,
        };
        let data = generate_synthetic(&spec).unwrap();
        let t = &data.model.dimensions[0].table;
        for r in 0..t.row_count() {
            let p = t.get_by_name(r, "l1").unwrap().unwrap();
            assert_eq!(
                t.get_by_name(r, "l1_w1").unwrap().unwrap(),
                format!("w1[{p}]")
            );
            assert_eq!(
                t.get_by_name(r, "l1_w2").unwrap().unwrap(),
                format!("w2[{p}]")
            );
        }
    }
}
