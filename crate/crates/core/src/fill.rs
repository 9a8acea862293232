//! Audit records for imputed cells and the donor-selection policy.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::CellAddress;

/// How a donor is chosen when several rows qualify at the matching level.
///
/// `First` takes the lowest row index, which is exactly the existential
/// choice of the underlying algorithms and is fully deterministic.
/// `Majority` takes the modal target value among qualifying donors, with
/// ties broken by the lexicographically smallest value; it trades strict
/// faithfulness for better accuracy on non-strict hierarchies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DonorMode {
    #[default]
    First,
    Majority,
}

/// How two cell values are compared for equality during donor matching and
/// scoring. Exact string comparison by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueEq {
    #[default]
    Exact,
    CaseInsensitive,
}

impl ValueEq {
    pub fn eq(self, a: &str, b: &str) -> bool {
        match self {
            ValueEq::Exact => a == b,
            ValueEq::CaseInsensitive => a.to_lowercase() == b.to_lowercase(),
        }
    }

    /// Key under which a value is grouped for donor lookup; borrows under
    /// exact equality.
    pub fn key(self, value: &str) -> std::borrow::Cow<'_, str> {
        match self {
            ValueEq::Exact => std::borrow::Cow::Borrowed(value),
            ValueEq::CaseInsensitive => std::borrow::Cow::Owned(value.to_lowercase()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DonorPolicy {
    pub mode: DonorMode,
    pub equality: ValueEq,
}

impl DonorPolicy {
    pub fn first() -> Self {
        Self::default()
    }

    pub fn majority() -> Self {
        Self {
            mode: DonorMode::Majority,
            equality: ValueEq::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FillSource {
    Intra,
    Inter,
}

impl fmt::Display for FillSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillSource::Intra => write!(f, "intra"),
            FillSource::Inter => write!(f, "inter"),
        }
    }
}

/// One imputed cell: where it was filled, with what, and which donor row
/// matched on which attribute. For intra fills the donor lives in the same
/// dimension; for inter fills `donor_row` indexes the donor dimension's
/// table and `matched_on` names the donor-side parameter that matched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillRecord {
    pub target: CellAddress,
    pub value: String,
    pub donor_row: usize,
    pub matched_on: String,
    pub hierarchy: String,
    pub source: FillSource,
    pub donor_dimension: String,
    pub donor_attribute: String,
}

/// Writes the fill log with the stable column set
/// `dimension,row,attribute,value,donor_row,matched_on,source`.
pub fn write_fill_log(records: &[FillRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    let csv_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    writer
        .write_record([
            "dimension",
            "row",
            "attribute",
            "value",
            "donor_row",
            "matched_on",
            "source",
        ])
        .map_err(csv_err)?;
    for r in records {
        writer
            .write_record([
                r.target.dimension.as_str(),
                &r.target.row.to_string(),
                r.target.attribute.as_str(),
                r.value.as_str(),
                &r.donor_row.to_string(),
                r.matched_on.as_str(),
                &r.source.to_string(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}
