//! CSV ingestion with explicit per-column binarization rules.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::BinaryDataset;
use crate::error::{Error, Result};

/// Cells treated as missing.
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "?"];

/// How one input column becomes model features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum ColumnRule {
    /// Numeric value used as is. `levels` lists the values the scorecard
    /// should show (defaults to 0 and 1).
    Passthrough {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<Vec<f64>>,
    },
    /// One indicator feature per listed category.
    Onehot { categories: Vec<String> },
    /// Category index in the listed order.
    Ordinal { categories: Vec<String> },
    /// Number of cut points strictly below the value.
    Cuts { cuts: Vec<f64> },
    /// Column ignored.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub rule: ColumnRule,
}

/// Rules for every non-label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizationSpec {
    pub columns: Vec<ColumnSpec>,
}

/// Scorecard view of one input column: the label of each attainable level
/// and the feature values it sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorLevels {
    pub predictor: String,
    /// Output feature indices fed by this column.
    pub features: Vec<usize>,
    /// `(category label, value of each feature in `features`)`.
    pub levels: Vec<(String, Vec<f64>)>,
}

fn format_number(v: f64) -> String {
    format!("{v}")
}

impl BinarizationSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BinarizationSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Every listed column passed through unchanged.
    pub fn passthrough<S: AsRef<str>>(names: &[S]) -> Self {
        BinarizationSpec {
            columns: names
                .iter()
                .map(|n| ColumnSpec {
                    name: n.as_ref().to_string(),
                    rule: ColumnRule::Passthrough { levels: None },
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::InvalidConfig(format!("column `{}` listed twice", col.name)));
            }
            match &col.rule {
                ColumnRule::Cuts { cuts } => {
                    if cuts.is_empty() || cuts.windows(2).any(|w| !(w[0] < w[1])) || cuts.iter().any(|c| !c.is_finite()) {
                        return Err(Error::InvalidConfig(format!(
                            "cut points of `{}` must be finite and strictly increasing",
                            col.name
                        )));
                    }
                }
                ColumnRule::Onehot { categories } | ColumnRule::Ordinal { categories } => {
                    let distinct: std::collections::HashSet<_> = categories.iter().collect();
                    if categories.is_empty() || distinct.len() != categories.len() {
                        return Err(Error::InvalidConfig(format!(
                            "categories of `{}` must be nonempty and distinct",
                            col.name
                        )));
                    }
                }
                ColumnRule::Passthrough { .. } | ColumnRule::Drop => {}
            }
        }
        Ok(())
    }

    /// Output feature names in order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for col in &self.columns {
            match &col.rule {
                ColumnRule::Onehot { categories } => {
                    names.extend(categories.iter().map(|c| format!("{}={c}", col.name)));
                }
                ColumnRule::Drop => {}
                _ => names.push(col.name.clone()),
            }
        }
        names
    }

    /// Level table per used column, for scorecard rendering.
    pub fn predictor_levels(&self) -> Vec<PredictorLevels> {
        let mut out = Vec::new();
        let mut next = 0usize;
        for col in &self.columns {
            let entry = match &col.rule {
                ColumnRule::Drop => continue,
                ColumnRule::Passthrough { levels } => {
                    let values = levels.clone().unwrap_or_else(|| vec![0.0, 1.0]);
                    PredictorLevels {
                        predictor: col.name.clone(),
                        features: vec![next],
                        levels: values.iter().map(|&v| (format_number(v), vec![v])).collect(),
                    }
                }
                ColumnRule::Ordinal { categories } => PredictorLevels {
                    predictor: col.name.clone(),
                    features: vec![next],
                    levels: categories
                        .iter()
                        .enumerate()
                        .map(|(i, c)| (c.clone(), vec![i as f64]))
                        .collect(),
                },
                ColumnRule::Cuts { cuts } => {
                    let mut levels = vec![(format!("≤ {}", format_number(cuts[0])), vec![0.0])];
                    for (i, w) in cuts.windows(2).enumerate() {
                        levels.push((
                            format!("{}–{}", format_number(w[0]), format_number(w[1])),
                            vec![(i + 1) as f64],
                        ));
                    }
                    levels.push((
                        format!("> {}", format_number(cuts[cuts.len() - 1])),
                        vec![cuts.len() as f64],
                    ));
                    PredictorLevels {
                        predictor: col.name.clone(),
                        features: vec![next],
                        levels,
                    }
                }
                ColumnRule::Onehot { categories } => {
                    let k = categories.len();
                    PredictorLevels {
                        predictor: col.name.clone(),
                        features: (next..next + k).collect(),
                        levels: categories
                            .iter()
                            .enumerate()
                            .map(|(i, c)| (c.clone(), (0..k).map(|m| f64::from(u8::from(m == i))).collect()))
                            .collect(),
                    }
                }
            };
            next += entry.features.len();
            out.push(entry);
        }
        out
    }

    /// Hex SHA-256 of the spec's JSON serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("spec serializes");
        crate::report::sha256_hex(text.as_bytes())
    }
}

/// Appends the encoding of one cell.
fn encode(rule: &ColumnRule, column: &str, row: usize, cell: &str, out: &mut Vec<f64>) -> Result<()> {
    let bad_number = || Error::NonNumeric {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    };
    let unlisted = || Error::UnlistedCategory {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    };
    match rule {
        ColumnRule::Drop => {}
        ColumnRule::Passthrough { .. } => {
            let v: f64 = cell.parse().map_err(|_| bad_number())?;
            if !v.is_finite() {
                return Err(bad_number());
            }
            out.push(v);
        }
        ColumnRule::Cuts { cuts } => {
            let v: f64 = cell.parse().map_err(|_| bad_number())?;
            if !v.is_finite() {
                return Err(bad_number());
            }
            out.push(cuts.iter().filter(|&&c| c < v).count() as f64);
        }
        ColumnRule::Ordinal { categories } => {
            let i = categories.iter().position(|c| c == cell).ok_or_else(unlisted)?;
            out.push(i as f64);
        }
        ColumnRule::Onehot { categories } => {
            let i = categories.iter().position(|c| c == cell).ok_or_else(unlisted)?;
            out.extend((0..categories.len()).map(|m| f64::from(u8::from(m == i))));
        }
    }
    Ok(())
}

/// Dataset read from CSV plus the number of rows dropped for missing values.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: BinaryDataset,
    pub dropped: usize,
}

fn parse_label(cell: &str, row: usize) -> Result<i64> {
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(Error::NonBinaryLabel { row }),
    }
}

/// Reads a headed CSV, applies `spec` (or passes every non-label column
/// through when `spec` is `None`) and drops rows with a missing value in
/// any used column. Without a label column every label is 0.
pub fn ingest_reader<R: Read>(reader: R, label_col: Option<&str>, spec: Option<&BinarizationSpec>) -> Result<Ingested> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let label_idx = label_col
        .map(|l| index.get(l).copied().ok_or_else(|| Error::UnknownColumn(l.to_string())))
        .transpose()?;
    let label_col = label_col.unwrap_or("");
    let default_spec;
    let spec = match spec {
        Some(s) => {
            s.validate()?;
            s
        }
        None => {
            let names: Vec<&String> = headers.iter().filter(|h| h.as_str() != label_col).collect();
            default_spec = BinarizationSpec::passthrough(&names);
            &default_spec
        }
    };
    let mut columns = Vec::with_capacity(spec.columns.len());
    for col in &spec.columns {
        let i = *index
            .get(col.name.as_str())
            .ok_or_else(|| Error::UnknownColumn(col.name.clone()))?;
        columns.push((i, col));
    }
    // scoring files may carry extra columns; training files must be fully covered
    if label_idx.is_some() {
        if let Some(h) = headers
            .iter()
            .find(|h| h.as_str() != label_col && !spec.columns.iter().any(|c| &c.name == *h))
        {
            return Err(Error::InvalidConfig(format!("no rule for column `{h}`")));
        }
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0usize;
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let missing = |i: usize| MISSING_TOKENS.contains(&record.get(i).unwrap_or(""));
        let used_missing = label_idx.is_some_and(missing)
            || columns
                .iter()
                .any(|(i, c)| !matches!(c.rule, ColumnRule::Drop) && missing(*i));
        if used_missing {
            dropped += 1;
            continue;
        }
        labels.push(match label_idx {
            Some(i) => parse_label(&record[i], row)?,
            None => 0,
        });
        let mut values = Vec::new();
        for (i, col) in &columns {
            encode(&col.rule, &col.name, row, &record[*i], &mut values)?;
        }
        rows.push(values);
    }
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing values");
    }
    let dataset = BinaryDataset::new(rows, &labels, spec.feature_names())?;
    Ok(Ingested { dataset, dropped })
}

pub fn ingest_csv(path: &Path, label_col: Option<&str>, spec: Option<&BinarizationSpec>) -> Result<Ingested> {
    ingest_reader(std::fs::File::open(path)?, label_col, spec)
}
