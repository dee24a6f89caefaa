use std::collections::BTreeSet;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::synthdata::TabularDataset;

/// Risk-score label encoding, ordered by severity.
pub const SCORE_LABELS: [&str; 3] = ["Low", "Medium", "High"];

/// Name of the feature derived from the jail timestamps.
pub const DAYS_IN_JAIL: &str = "days_in_jail";

const NULL_MARKERS: [&str; 7] = ["", "NA", "N/A", "NaN", "nan", "null", "NULL"];

/// Which source columns to retain and how to treat them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompasOptions {
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub jail_in_column: String,
    pub jail_out_column: String,
    pub label_column: String,
}

impl Default for CompasOptions {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect();
        CompasOptions {
            numeric_columns: s(&[
                "age",
                "juv_fel_count",
                "juv_misd_count",
                "juv_other_count",
                "priors_count",
                "days_b_screening_arrest",
            ]),
            categorical_columns: s(&["sex", "race", "c_charge_degree"]),
            jail_in_column: "c_jail_in".into(),
            jail_out_column: "c_jail_out".into(),
            label_column: "score_text".into(),
        }
    }
}

impl CompasOptions {
    /// Source columns read from the CSV, in a fixed order.
    pub fn source_columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        cols.extend(self.categorical_columns.iter().cloned());
        cols.extend(self.numeric_columns.iter().cloned());
        cols.push(self.jail_in_column.clone());
        cols.push(self.jail_out_column.clone());
        cols.push(self.label_column.clone());
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    pub column: String,
    /// Sorted category values; feature `column=value` per entry.
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompasManifest {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped_null: usize,
    pub dropped_bad_timestamp: usize,
    pub dropped_bad_value: usize,
    pub source_columns: Vec<String>,
    pub feature_names: Vec<String>,
    pub encoders: Vec<OneHotEncoder>,
    pub label_encoding: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompasTable {
    /// Numeric features, then `days_in_jail`, then one-hot groups.
    pub dataset: TabularDataset,
    pub manifest: CompasManifest,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

pub fn days_between(jail_in: &str, jail_out: &str) -> Option<f64> {
    let a = parse_timestamp(jail_in)?;
    let b = parse_timestamp(jail_out)?;
    Some((b - a).num_seconds() as f64 / 86_400.0)
}

fn is_null(s: &str) -> bool {
    NULL_MARKERS.contains(&s.trim())
}

enum RowOutcome {
    Kept {
        numeric: Vec<f64>,
        categories: Vec<String>,
        label: usize,
    },
    Null,
    BadTimestamp,
    BadValue,
}

pub fn load_compas(path: &Path, options: &CompasOptions) -> Result<CompasTable> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::input(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::input(path, e.to_string()))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::input(path, format!("missing required column '{name}'")))
    };
    let cat_idx: Vec<usize> = options.categorical_columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let num_idx: Vec<usize> = options.numeric_columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let jail_in = find(&options.jail_in_column)?;
    let jail_out = find(&options.jail_out_column)?;
    let label_idx = find(&options.label_column)?;

    let mut manifest = CompasManifest {
        rows_read: 0,
        rows_kept: 0,
        dropped_null: 0,
        dropped_bad_timestamp: 0,
        dropped_bad_value: 0,
        source_columns: options.source_columns(),
        feature_names: Vec::new(),
        encoders: Vec::new(),
        label_encoding: SCORE_LABELS.iter().enumerate().map(|(i, s)| (s.to_string(), i)).collect(),
    };
    let mut kept = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::input(path, e.to_string()))?;
        manifest.rows_read += 1;
        let field = |i: usize| record.get(i).unwrap_or("");
        let outcome = {
            let retained = cat_idx
                .iter()
                .chain(&num_idx)
                .chain([&jail_in, &jail_out, &label_idx]);
            if retained.clone().any(|&i| is_null(field(i))) {
                RowOutcome::Null
            } else {
                let numeric: Option<Vec<f64>> = num_idx
                    .iter()
                    .map(|&i| field(i).trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect();
                let days = days_between(field(jail_in), field(jail_out));
                let label = SCORE_LABELS.iter().position(|s| *s == field(label_idx).trim());
                match (numeric, days, label) {
                    (_, None, _) => RowOutcome::BadTimestamp,
                    (None, _, _) | (_, _, None) => RowOutcome::BadValue,
                    (Some(mut numeric), Some(days), Some(label)) => {
                        numeric.push(days);
                        RowOutcome::Kept {
                            numeric,
                            categories: cat_idx.iter().map(|&i| field(i).trim().to_string()).collect(),
                            label,
                        }
                    }
                }
            }
        };
        match outcome {
            RowOutcome::Kept {
                numeric,
                categories,
                label,
            } => kept.push((numeric, categories, label)),
            RowOutcome::Null => manifest.dropped_null += 1,
            RowOutcome::BadTimestamp => manifest.dropped_bad_timestamp += 1,
            RowOutcome::BadValue => manifest.dropped_bad_value += 1,
        }
    }
    if kept.is_empty() {
        return Err(Error::input(path, "no usable rows after dropping nulls"));
    }
    if manifest.dropped_bad_timestamp > 0 {
        log::warn!(
            "{}: dropped {} rows with unparseable jail timestamps",
            path.display(),
            manifest.dropped_bad_timestamp
        );
    }

    manifest.encoders = options
        .categorical_columns
        .iter()
        .enumerate()
        .map(|(g, column)| {
            let set: BTreeSet<&str> = kept.iter().map(|(_, c, _)| c[g].as_str()).collect();
            OneHotEncoder {
                column: column.clone(),
                categories: set.into_iter().map(str::to_string).collect(),
            }
        })
        .collect();
    let mut names: Vec<String> = options.numeric_columns.clone();
    names.push(DAYS_IN_JAIL.into());
    for enc in &manifest.encoders {
        names.extend(enc.categories.iter().map(|v| format!("{}={}", enc.column, v)));
    }
    let width = names.len();
    let mut x = Matrix::zeros(kept.len(), width);
    let mut y = Vec::with_capacity(kept.len());
    for (r, (numeric, cats, label)) in kept.iter().enumerate() {
        let row = x.row_mut(r);
        row[..numeric.len()].copy_from_slice(numeric);
        let mut offset = numeric.len();
        for (enc, value) in manifest.encoders.iter().zip(cats) {
            let j = enc
                .categories
                .binary_search(value)
                .expect("category collected from the kept rows");
            row[offset + j] = 1.0;
            offset += enc.categories.len();
        }
        y.push(*label);
    }
    manifest.rows_kept = kept.len();
    manifest.feature_names = names.clone();
    let mut dataset = TabularDataset::new(x, y, names)?;
    dataset.n_classes = SCORE_LABELS.len();
    Ok(CompasTable { dataset, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const HEADER: &str = "id,sex,age,race,juv_fel_count,decile_score,juv_misd_count,juv_other_count,priors_count,days_b_screening_arrest,c_jail_in,c_jail_out,c_charge_degree,score_text";

    fn write_csv(rows: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{HEADER}").unwrap();
        for r in rows {
            writeln!(f, "{r}").unwrap();
        }
        f
    }

    #[test]
    fn forty_eight_hours_is_two_days() {
        assert_eq!(days_between("2013-01-01 10:00:00", "2013-01-03 10:00:00"), Some(2.0));
        assert_eq!(days_between("garbage", "2013-01-03 10:00:00"), None);
    }

    #[test]
    fn loads_encodes_and_drops() {
        let f = write_csv(&[
            "1,Male,34,African-American,0,3,0,0,2,-1,2013-01-01 10:00:00,2013-01-03 10:00:00,F,High",
            "2,Female,24,Caucasian,1,2,0,1,0,0,2013-02-01 00:00:00,2013-02-01 12:00:00,M,Low",
            "3,Male,40,,0,1,0,0,0,0,2013-02-01 00:00:00,2013-02-02 00:00:00,M,Low",
            "4,Male,40,Caucasian,0,1,0,0,0,0,not-a-date,2013-02-02 00:00:00,M,Medium",
            "5,Male,22,Other,0,7,0,0,5,,2013-03-01 00:00:00,2013-03-02 00:00:00,F,Medium",
        ]);
        let table = load_compas(f.path(), &CompasOptions::default()).unwrap();
        let m = &table.manifest;
        assert_eq!((m.rows_read, m.rows_kept), (5, 2));
        assert_eq!(m.dropped_null, 2);
        assert_eq!(m.dropped_bad_timestamp, 1);
        assert_eq!(table.dataset.y, vec![2, 0]);
        assert_eq!(table.dataset.n_classes, 3);
        let names = &table.dataset.feature_names;
        assert!(!names.iter().any(|n| n.contains("decile")));
        let jail = names.iter().position(|n| n == DAYS_IN_JAIL).unwrap();
        assert_eq!(table.dataset.x.get(0, jail), 2.0);
        assert_eq!(table.dataset.x.get(1, jail), 0.5);
        for enc in &m.encoders {
            let cols: Vec<usize> = enc
                .categories
                .iter()
                .map(|c| names.iter().position(|n| *n == format!("{}={}", enc.column, c)).unwrap())
                .collect();
            for r in 0..2 {
                let s: f64 = cols.iter().map(|&j| table.dataset.x.get(r, j)).sum();
                assert_eq!(s, 1.0);
            }
        }
        let again = load_compas(f.path(), &CompasOptions::default()).unwrap();
        assert_eq!(again, table);
    }

    #[test]
    fn missing_column_is_named() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "sex,age").unwrap();
        writeln!(f, "Male,30").unwrap();
        let err = load_compas(f.path(), &CompasOptions::default()).unwrap_err();
        assert!(err.to_string().contains("race"), "{err}");
    }
}
