//! Multidimensional warehouse model: dimensions, hierarchies and the
//! structural rules a declared schema must satisfy.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{load_table, InstanceTable};

/// A warehouse: named dimensions plus fact descriptors and the star mapping
/// from each fact to the dimensions it is linked to. Facts carry no data
/// here; they are kept so real schema files round-trip.
#[derive(Debug, Clone, Default)]
pub struct WarehouseModel {
    pub name: String,
    pub dimensions: Vec<Dimension>,
    pub facts: Vec<FactDescriptor>,
    pub star: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone)]
pub struct FactDescriptor {
    pub name: String,
}

/// One analysis axis: the attribute set, its identifier attribute, the
/// hierarchies ordering those attributes, and the instance table.
#[derive(Debug, Clone, Default)]
pub struct Dimension {
    pub name: String,
    pub attributes: Vec<String>,
    pub id_attribute: String,
    pub hierarchies: Vec<Hierarchy>,
    pub table: InstanceTable,
}

/// An ordered chain of parameters, finest granularity first, with an
/// optional set of weak attributes attached to each parameter.
#[derive(Debug, Clone, Default)]
pub struct Hierarchy {
    pub name: String,
    /// Index 0 is the dimension identifier; roll-up order is list order.
    pub parameters: Vec<String>,
    pub weak: BTreeMap<String, Vec<String>>,
}

/// Position of an attribute within one hierarchy. Weak attributes inherit
/// the level of the parameter they describe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GranularityLevel {
    pub hierarchy: String,
    pub index: usize,
}

impl WarehouseModel {
    pub fn dimension(&self, name: &str) -> Result<&Dimension> {
        self.dimensions
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDimension {
                dimension: name.to_string(),
            })
    }

    pub fn dimension_mut(&mut self, name: &str) -> Result<&mut Dimension> {
        self.dimensions
            .iter_mut()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDimension {
                dimension: name.to_string(),
            })
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }
}

impl Dimension {
    pub fn hierarchy(&self, name: &str) -> Option<&Hierarchy> {
        self.hierarchies.iter().find(|h| h.name == name)
    }

    /// True if the attribute is a parameter of at least one hierarchy.
    pub fn is_parameter(&self, attribute: &str) -> bool {
        self.hierarchies
            .iter()
            .any(|h| h.parameters.iter().any(|p| p == attribute))
    }
}

impl Hierarchy {
    /// All parameters strictly below `p`, nearest-lower first, down to the
    /// identifier. Empty for the identifier itself.
    pub fn lower_parameters(&self, p: &str) -> Result<Vec<&str>> {
        let idx = self.index_of(p).ok_or_else(|| Error::UnknownParameter {
            hierarchy: self.name.clone(),
            parameter: p.to_string(),
        })?;
        Ok(self.parameters[..idx]
            .iter()
            .rev()
            .map(String::as_str)
            .collect())
    }

    /// Granularity level of a parameter, or of a weak attribute via the
    /// parameter it is attached to.
    pub fn level_of(&self, attribute: &str) -> Result<GranularityLevel> {
        if let Some(idx) = self.index_of(attribute) {
            return Ok(GranularityLevel {
                hierarchy: self.name.clone(),
                index: idx,
            });
        }
        for (param, weaks) in &self.weak {
            if weaks.iter().any(|w| w == attribute) {
                if let Some(idx) = self.index_of(param) {
                    return Ok(GranularityLevel {
                        hierarchy: self.name.clone(),
                        index: idx,
                    });
                }
            }
        }
        Err(Error::UnknownHierarchyAttribute {
            hierarchy: self.name.clone(),
            attribute: attribute.to_string(),
        })
    }

    pub fn index_of(&self, parameter: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p == parameter)
    }

    pub fn weak_of(&self, parameter: &str) -> &[String] {
        self.weak.get(parameter).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One structural rule violation, with enough coordinates to locate it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateDimension {
        dimension: String,
    },
    StarUnknownDimension {
        fact: String,
        dimension: String,
    },
    EmptyFactName,
    IdentifierNotDeclared {
        dimension: String,
        id_attribute: String,
    },
    DuplicateAttribute {
        dimension: String,
        attribute: String,
    },
    HierarchyUnknownAttribute {
        dimension: String,
        hierarchy: String,
        attribute: String,
    },
    FirstParameterNotIdentifier {
        dimension: String,
        hierarchy: String,
        found: Option<String>,
    },
    DuplicateParameter {
        dimension: String,
        hierarchy: String,
        parameter: String,
    },
    WeakParameterOverlap {
        dimension: String,
        hierarchy: String,
        attribute: String,
    },
    WeakOfUnknownParameter {
        dimension: String,
        hierarchy: String,
        parameter: String,
    },
    WeakAttachedTwice {
        dimension: String,
        hierarchy: String,
        attribute: String,
    },
    TableColumnMismatch {
        dimension: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateDimension { dimension } => {
                write!(f, "dimension `{dimension}` is declared more than once")
            }
            Violation::StarUnknownDimension { fact, dimension } => {
                write!(f, "fact `{fact}` links to undeclared dimension `{dimension}`")
            }
            Violation::EmptyFactName => write!(f, "fact with empty name"),
            Violation::IdentifierNotDeclared { dimension, id_attribute } => write!(
                f,
                "dimension `{dimension}`: identifier `{id_attribute}` is not among its attributes"
            ),
            Violation::DuplicateAttribute { dimension, attribute } => write!(
                f,
                "dimension `{dimension}`: attribute `{attribute}` is declared more than once"
            ),
            Violation::HierarchyUnknownAttribute { dimension, hierarchy, attribute } => write!(
                f,
                "dimension `{dimension}` hierarchy `{hierarchy}`: references unknown attribute `{attribute}`"
            ),
            Violation::FirstParameterNotIdentifier { dimension, hierarchy, found } => write!(
                f,
                "dimension `{dimension}` hierarchy `{hierarchy}`: first parameter {} but must be the dimension identifier",
                match found {
                    Some(p) => format!("is `{p}`"),
                    None => "is missing".to_string(),
                }
            ),
            Violation::DuplicateParameter { dimension, hierarchy, parameter } => write!(
                f,
                "dimension `{dimension}` hierarchy `{hierarchy}`: parameter `{parameter}` appears twice"
            ),
            Violation::WeakParameterOverlap { dimension, hierarchy, attribute } => write!(
                f,
                "dimension `{dimension}` hierarchy `{hierarchy}`: `{attribute}` is both a parameter and a weak attribute"
            ),
            Violation::WeakOfUnknownParameter { dimension, hierarchy, parameter } => write!(
                f,
                "dimension `{dimension}` hierarchy `{hierarchy}`: weak attributes attached to `{parameter}`, which is not a parameter of this hierarchy"
            ),
            Violation::WeakAttachedTwice { dimension, hierarchy, attribute } => write!(
                f,
                "dimension `{dimension}` hierarchy `{hierarchy}`: weak attribute `{attribute}` is attached to more than one parameter"
            ),
            Violation::TableColumnMismatch { dimension, missing, extra } => write!(
                f,
                "dimension `{dimension}`: table columns do not match declared attributes (missing: [{}], extra: [{}])",
                missing.join(", "),
                extra.join(", ")
            ),
        }
    }
}

/// Every violation found in a model; empty means the model is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant and reports all violations. Never
/// fails and never mutates the model.
pub fn validate_schema(model: &WarehouseModel) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen_dims = HashSet::new();
    for dim in &model.dimensions {
        if !seen_dims.insert(dim.name.as_str()) {
            violations.push(Violation::DuplicateDimension {
                dimension: dim.name.clone(),
            });
        }
    }

    for fact in &model.facts {
        if fact.name.is_empty() {
            violations.push(Violation::EmptyFactName);
        }
    }
    for (fact, dims) in &model.star {
        for d in dims {
            if !model.dimensions.iter().any(|dim| &dim.name == d) {
                violations.push(Violation::StarUnknownDimension {
                    fact: fact.clone(),
                    dimension: d.clone(),
                });
            }
        }
    }

    for dim in &model.dimensions {
        let mut seen_attrs = HashSet::new();
        for attr in &dim.attributes {
            if !seen_attrs.insert(attr.as_str()) {
                violations.push(Violation::DuplicateAttribute {
                    dimension: dim.name.clone(),
                    attribute: attr.clone(),
                });
            }
        }
        let declared: HashSet<&str> = dim.attributes.iter().map(String::as_str).collect();
        if !declared.contains(dim.id_attribute.as_str()) {
            violations.push(Violation::IdentifierNotDeclared {
                dimension: dim.name.clone(),
                id_attribute: dim.id_attribute.clone(),
            });
        }

        for h in &dim.hierarchies {
            let params: HashSet<&str> = h.parameters.iter().map(String::as_str).collect();
            match h.parameters.first() {
                Some(first) if *first == dim.id_attribute => {}
                other => violations.push(Violation::FirstParameterNotIdentifier {
                    dimension: dim.name.clone(),
                    hierarchy: h.name.clone(),
                    found: other.cloned(),
                }),
            }
            let mut seen_params = HashSet::new();
            for p in &h.parameters {
                if !seen_params.insert(p.as_str()) {
                    violations.push(Violation::DuplicateParameter {
                        dimension: dim.name.clone(),
                        hierarchy: h.name.clone(),
                        parameter: p.clone(),
                    });
                }
                if !declared.contains(p.as_str()) {
                    violations.push(Violation::HierarchyUnknownAttribute {
                        dimension: dim.name.clone(),
                        hierarchy: h.name.clone(),
                        attribute: p.clone(),
                    });
                }
            }
            let mut weak_seen = HashSet::new();
            for (param, weaks) in &h.weak {
                if !params.contains(param.as_str()) {
                    violations.push(Violation::WeakOfUnknownParameter {
                        dimension: dim.name.clone(),
                        hierarchy: h.name.clone(),
                        parameter: param.clone(),
                    });
                }
                for w in weaks {
                    if params.contains(w.as_str()) {
                        violations.push(Violation::WeakParameterOverlap {
                            dimension: dim.name.clone(),
                            hierarchy: h.name.clone(),
                            attribute: w.clone(),
                        });
                    }
                    if !declared.contains(w.as_str()) {
                        violations.push(Violation::HierarchyUnknownAttribute {
                            dimension: dim.name.clone(),
                            hierarchy: h.name.clone(),
                            attribute: w.clone(),
                        });
                    }
                    if !weak_seen.insert(w.as_str()) {
                        violations.push(Violation::WeakAttachedTwice {
                            dimension: dim.name.clone(),
                            hierarchy: h.name.clone(),
                            attribute: w.clone(),
                        });
                    }
                }
            }
        }

        if !dim.table.columns().is_empty() || dim.table.row_count() > 0 {
            let cols: HashSet<&str> = dim.table.columns().iter().map(String::as_str).collect();
            let missing: Vec<String> = dim
                .attributes
                .iter()
                .filter(|a| !cols.contains(a.as_str()))
                .cloned()
                .collect();
            let extra: Vec<String> = dim
                .table
                .columns()
                .iter()
                .filter(|c| !declared.contains(c.as_str()))
                .cloned()
                .collect();
            if !missing.is_empty() || !extra.is_empty() {
                violations.push(Violation::TableColumnMismatch {
                    dimension: dim.name.clone(),
                    missing,
                    extra,
                });
            }
        }
    }

    ValidationReport { violations }
}

// ---------------------------------------------------------------------------
// Schema config file
// ---------------------------------------------------------------------------

/// On-disk schema description. Field names are normative; unknown fields are
/// rejected with the path of the offending key.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarehouseConfig {
    pub name: String,
    pub dimensions: Vec<DimensionConfig>,
    #[serde(default)]
    pub facts: Vec<FactConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    pub name: String,
    pub id: String,
    pub attributes: Vec<String>,
    #[serde(default)]
    pub hierarchies: Vec<HierarchyConfig>,
    pub table: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    pub name: String,
    pub parameters: Vec<String>,
    #[serde(default)]
    pub weak: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactConfig {
    pub name: String,
    pub dimensions: Vec<String>,
}

pub fn parse_config(json: &str, origin: &Path) -> Result<WarehouseConfig> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: origin.to_path_buf(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

/// Builds the in-memory model without touching any CSV. Tables stay empty;
/// [`load_model`] is the variant that also loads instance data.
pub fn model_from_config(config: &WarehouseConfig) -> WarehouseModel {
    let dimensions = config
        .dimensions
        .iter()
        .map(|d| Dimension {
            name: d.name.clone(),
            attributes: d.attributes.clone(),
            id_attribute: d.id.clone(),
            hierarchies: d
                .hierarchies
                .iter()
                .map(|h| Hierarchy {
                    name: h.name.clone(),
                    parameters: h.parameters.clone(),
                    weak: h.weak.clone(),
                })
                .collect(),
            table: InstanceTable::default(),
        })
        .collect();
    WarehouseModel {
        name: config.name.clone(),
        dimensions,
        facts: config
            .facts
            .iter()
            .map(|f| FactDescriptor { name: f.name.clone() })
            .collect(),
        star: config
            .facts
            .iter()
            .map(|f| (f.name.clone(), f.dimensions.iter().cloned().collect()))
            .collect(),
    }
}

/// Reads a schema config plus every dimension CSV. Table paths resolve
/// relative to the config file's directory.
pub fn load_model(config_path: &Path, null_tokens: &BTreeSet<String>) -> Result<WarehouseModel> {
    let json = std::fs::read_to_string(config_path).map_err(|e| Error::Io {
        path: config_path.to_path_buf(),
        source: e,
    })?;
    let config = parse_config(&json, config_path)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let mut model = model_from_config(&config);
    for (dim, dim_cfg) in model.dimensions.iter_mut().zip(&config.dimensions) {
        let table_path = base.join(&dim_cfg.table);
        dim.table = load_table(&table_path, null_tokens)?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level_model() -> WarehouseModel {
        WarehouseModel {
            name: "dw".into(),
            dimensions: vec![Dimension {
                name: "store".into(),
                attributes: vec!["id".into(), "city".into(), "state".into()],
                id_attribute: "id".into(),
                hierarchies: vec![Hierarchy {
                    name: "geo".into(),
                    parameters: vec!["id".into(), "city".into(), "state".into()],
                    weak: BTreeMap::new(),
                }],
                table: InstanceTable::default(),
            }],
            facts: vec![FactDescriptor { name: "sales".into() }],
            star: [("sales".to_string(), ["store".to_string()].into())].into(),
        }
    }

    fn geo_hierarchy() -> Hierarchy {
        Hierarchy {
            name: "geo".into(),
            parameters: vec!["id".into(), "city".into(), "state".into(), "country".into()],
            weak: BTreeMap::new(),
        }
    }

    #[test]
    fn well_formed_model_yields_empty_report() {
        let report = validate_schema(&two_level_model());
        assert!(report.is_valid(), "unexpected violations: {report}");
    }

    #[test]
    fn first_parameter_must_be_identifier() {
        let mut model = two_level_model();
        model.dimensions[0].hierarchies[0].parameters = vec!["city".into(), "state".into()];
        let report = validate_schema(&model);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            &report.violations[0],
            Violation::FirstParameterNotIdentifier { hierarchy, .. } if hierarchy == "geo"
        ));
    }

    #[test]
    fn parameter_weak_overlap_is_one_violation() {
        let mut model = two_level_model();
        model.dimensions[0].hierarchies[0]
            .weak
            .insert("city".into(), vec!["state".into()]);
        let report = validate_schema(&model);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            &report.violations[0],
            Violation::WeakParameterOverlap { attribute, .. } if attribute == "state"
        ));
    }

    #[test]
    fn validate_is_idempotent() {
        let mut model = two_level_model();
        model.dimensions[0].hierarchies[0].parameters.push("city".into());
        let first = validate_schema(&model);
        let second = validate_schema(&model);
        assert_eq!(first, second);
        assert!(!first.is_valid());
    }

    #[test]
    fn lower_parameters_reverses_prefix() {
        let h = geo_hierarchy();
        assert_eq!(h.lower_parameters("country").unwrap(), vec!["state", "city", "id"]);
        assert_eq!(h.lower_parameters("state").unwrap(), vec!["city", "id"]);
        assert_eq!(h.lower_parameters("id").unwrap(), Vec::<&str>::new());
    }

    #[test]
    fn lower_parameters_unknown_parameter_errors() {
        let h = geo_hierarchy();
        assert!(matches!(
            h.lower_parameters("region"),
            Err(Error::UnknownParameter { .. })
        ));
    }

    #[test]
    fn lower_parameters_length_equals_index() {
        let h = geo_hierarchy();
        for (idx, p) in h.parameters.iter().enumerate() {
            let lower = h.lower_parameters(p).unwrap();
            assert_eq!(lower.len(), idx);
            assert!(!lower.contains(&p.as_str()));
            if idx >= 1 {
                assert_eq!(lower[0], h.parameters[idx - 1]);
            }
        }
    }

    #[test]
    fn level_of_parameter_and_weak() {
        let mut h = Hierarchy {
            name: "geo".into(),
            parameters: vec!["id".into(), "city".into(), "state".into()],
            weak: BTreeMap::new(),
        };
        h.weak.insert("city".into(), vec!["city_name".into()]);
        assert_eq!(h.level_of("state").unwrap().index, 2);
        assert_eq!(h.level_of("city_name").unwrap().index, 1);
        assert!(matches!(
            h.level_of("foo"),
            Err(Error::UnknownHierarchyAttribute { .. })
        ));
    }

    #[test]
    fn star_mapping_must_reference_declared_dimensions() {
        let mut model = two_level_model();
        model
            .star
            .insert("sales".into(), ["store".to_string(), "ghost".to_string()].into());
        let report = validate_schema(&model);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::StarUnknownDimension { dimension, .. } if dimension == "ghost")));
    }

    #[test]
    fn config_rejects_unknown_fields_with_path() {
        let json = r#"{
            "name": "dw",
            "dimensions": [{
                "name": "store", "id": "id", "attributes": ["id"],
                "hierarchies": [{"name": "h", "parameters": ["id"], "weaks": {}}],
                "table": "store.csv"
            }]
        }"#;
        let err = parse_config(json, Path::new("schema.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dimensions[0].hierarchies[0]"), "message was: {msg}");
        assert!(msg.contains("weaks"), "message was: {msg}");
    }

    #[test]
    fn config_round_trips_through_model() {
        let json = r#"{
            "name": "dw",
            "dimensions": [{
                "name": "store", "id": "id", "attributes": ["id", "city"],
                "hierarchies": [{"name": "geo", "parameters": ["id", "city"], "weak": {"city": ["city_name"]}}],
                "table": "store.csv"
            }],
            "facts": [{"name": "sales", "dimensions": ["store"]}]
        }"#;
        let config = parse_config(json, Path::new("schema.json")).unwrap();
        let model = model_from_config(&config);
        assert_eq!(model.dimensions[0].hierarchies[0].weak_of("city"), ["city_name"]);
        assert_eq!(model.star["sales"], ["store".to_string()].into());
    }
}
