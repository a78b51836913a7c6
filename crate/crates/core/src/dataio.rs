//! Loading and validating the BCCD table.
//!
//! The file format is a plain CSV with one header row naming the nine
//! biomarker columns plus `Classification` (1 = healthy, 2 = patient).
//! Labels are remapped to 0/1 on load. Columns are matched by header name,
//! not position, because public copies of the dataset disagree on column
//! order and on `MCP.1` vs `MCP-1` punctuation.

use crate::error::{Error, Result};
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Integer,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDesc {
    pub name: &'static str,
    pub unit: &'static str,
    pub kind: FeatureKind,
}

/// Ordered description of the nine BCCD features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSchema {
    features: [FeatureDesc; 9],
}

const LABEL_COLUMN: &str = "Classification";

impl FeatureSchema {
    /// The canonical BCCD column set, in published order.
    pub fn bccd() -> Self {
        use FeatureKind::{Integer, Real};
        FeatureSchema {
            features: [
                FeatureDesc { name: "Age", unit: "years", kind: Integer },
                FeatureDesc { name: "BMI", unit: "kg/m2", kind: Real },
                FeatureDesc { name: "Glucose", unit: "mg/dL", kind: Integer },
                FeatureDesc { name: "Insulin", unit: "µU/mL", kind: Real },
                FeatureDesc { name: "HOMA", unit: "ng/mL", kind: Real },
                FeatureDesc { name: "Leptin", unit: "ng/mL", kind: Real },
                FeatureDesc { name: "Adiponectin", unit: "µg/mL", kind: Real },
                FeatureDesc { name: "Resistin", unit: "ng/mL", kind: Real },
                FeatureDesc { name: "MCP.1", unit: "pg/mL", kind: Real },
            ],
        }
    }

    pub fn features(&self) -> &[FeatureDesc] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the feature a header cell refers to, if any.
    /// Matching is case-insensitive and treats `.` and `-` as equivalent.
    pub fn column_index(&self, header: &str) -> Option<usize> {
        let key = normalize(header);
        self.features.iter().position(|f| normalize(f.name) == key)
    }
}

fn normalize(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| if c == '-' { '.' } else { c.to_ascii_lowercase() })
        .collect()
}

/// The parsed table: row-major features plus 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    schema: FeatureSchema,
}

impl Dataset {
    /// Builds a dataset, enforcing the structural invariants: matching row
    /// counts, finite values, and integral values in integer-kind columns.
    pub fn new(features: Array2<f64>, labels: Vec<u8>, schema: FeatureSchema) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimMismatch {
                context: "feature rows vs labels",
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if features.ncols() != schema.len() {
            return Err(Error::DimMismatch {
                context: "feature columns vs schema",
                expected: schema.len(),
                actual: features.ncols(),
            });
        }
        for (r, row) in features.rows().into_iter().enumerate() {
            for (c, (&v, desc)) in row.iter().zip(schema.features()).enumerate() {
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: r + 1,
                        column: schema.features()[c].name.to_string(),
                        message: "non-finite value".into(),
                    });
                }
                if desc.kind == FeatureKind::Integer && v.fract() != 0.0 {
                    return Err(Error::Parse {
                        row: r + 1,
                        column: desc.name.to_string(),
                        message: format!("expected an integer value, got {v}"),
                    });
                }
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArg(format!("label out of {{0,1}}: {bad}")));
        }
        Ok(Dataset { features, labels, schema })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
}

/// Parses BCCD CSV text into a [`Dataset`].
///
/// The file's 1/2 class labels become 0/1 and columns are reordered to
/// schema order regardless of their order in the file.
pub fn parse_bccd(csv_text: &str) -> Result<Dataset> {
    let schema = FeatureSchema::bccd();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let headers = reader.headers()?.clone();
    // file position -> schema position; label column tracked separately
    let mut feature_pos: Vec<Option<usize>> = vec![None; schema.len()];
    let mut label_pos: Option<usize> = None;
    for (file_idx, name) in headers.iter().enumerate() {
        if normalize(name) == normalize(LABEL_COLUMN) {
            if label_pos.is_some() {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
            label_pos = Some(file_idx);
        } else if let Some(schema_idx) = schema.column_index(name) {
            if feature_pos[schema_idx].is_some() {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
            feature_pos[schema_idx] = Some(file_idx);
        } else {
            return Err(Error::Schema(format!("unknown column `{name}`")));
        }
    }
    for (schema_idx, pos) in feature_pos.iter().enumerate() {
        if pos.is_none() {
            return Err(Error::Schema(format!(
                "missing column `{}`",
                schema.features()[schema_idx].name
            )));
        }
    }
    let label_pos =
        label_pos.ok_or_else(|| Error::Schema(format!("missing column `{LABEL_COLUMN}`")))?;

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        for (schema_idx, file_idx) in feature_pos.iter().enumerate() {
            let column = schema.features()[schema_idx].name;
            let cell = record.get(file_idx.unwrap()).ok_or_else(|| Error::Parse {
                row,
                column: column.to_string(),
                message: "missing cell".into(),
            })?;
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: column.to_string(),
                message: format!("not a number: `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: column.to_string(),
                    message: format!("non-finite value: `{cell}`"),
                });
            }
            values.push(v);
        }
        let cell = record.get(label_pos).ok_or_else(|| Error::Parse {
            row,
            column: LABEL_COLUMN.to_string(),
            message: "missing cell".into(),
        })?;
        let raw: f64 = cell.parse().map_err(|_| Error::Label {
            row,
            value: cell.to_string(),
        })?;
        let label = if raw == 1.0 {
            0u8
        } else if raw == 2.0 {
            1u8
        } else {
            return Err(Error::Label {
                row,
                value: cell.to_string(),
            });
        };
        labels.push(label);
    }

    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = labels.len();
    let features = Array2::from_shape_vec((rows, schema.len()), values)
        .expect("row-major construction matches counted rows");
    Dataset::new(features, labels, schema)
}

/// Counts of (healthy, patient) labels. Sum equals the row count.
pub fn class_counts(ds: &Dataset) -> (usize, usize) {
    let patients = ds.labels.iter().filter(|&&l| l == 1).count();
    (ds.labels.len() - patients, patients)
}

/// Renders a dataset back to CSV in schema order with 1/2 labels.
/// Inverse of [`parse_bccd`] for any valid dataset.
pub fn render_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    let names: Vec<&str> = ds.schema.features().iter().map(|f| f.name).collect();
    out.push_str(&names.join(","));
    out.push_str(&format!(",{LABEL_COLUMN}\n"));
    for (row, &label) in ds.features.rows().into_iter().zip(&ds.labels) {
        for v in row.iter() {
            // `{}` prints the shortest representation that round-trips
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", label + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Age,BMI,Glucose,Insulin,HOMA,Leptin,Adiponectin,Resistin,MCP.1,Classification";

    pub(crate) fn fixture() -> &'static str {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/dataR2.csv"))
    }

    #[test]
    fn parses_single_row_and_remaps_label() {
        let text = format!("{HEADER}\n48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,1\n");
        let ds = parse_bccd(&text).unwrap();
        assert_eq!(ds.n_rows(), 1);
        assert_eq!(ds.labels(), &[0]);
        assert_eq!(ds.features()[[0, 0]], 48.0);
        assert_eq!(ds.features()[[0, 3]], 2.707);
        assert_eq!(ds.features()[[0, 8]], 417.114);
    }

    #[test]
    fn label_out_of_domain_is_error() {
        let text = format!("{HEADER}\n48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,3\n");
        assert!(matches!(parse_bccd(&text), Err(Error::Label { row: 1, .. })));
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let text = format!("{HEADER}\n");
        assert!(matches!(parse_bccd(&text), Err(Error::EmptyDataset)));
    }

    #[test]
    fn missing_column_is_schema_error_naming_it() {
        let text = "Age,BMI,Glucose,Insulin,HOMA,Leptin,Adiponectin,Resistin,Classification\n\
                    48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,1\n";
        match parse_bccd(text) {
            Err(Error::Schema(msg)) => assert!(msg.contains("MCP.1"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_column_is_schema_error_naming_it() {
        let text = format!("{HEADER},Extra\n48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,1,9\n");
        match parse_bccd(&text) {
            Err(Error::Schema(msg)) => assert!(msg.contains("Extra"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let text = format!(
            "{HEADER}\n48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,1\n\
             50,oops,80,3.0,0.59,9.1,8.2,7.5,300.0,2\n"
        );
        match parse_bccd(&text) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "BMI");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_aliases_and_column_order() {
        // MCP-1 spelling, lower case, reordered columns
        let text = "classification,mcp-1,resistin,adiponectin,leptin,homa,insulin,glucose,bmi,age\n\
                    1,417.114,7.99585,9.7024,8.8071,0.467,2.707,70,23.5,48\n";
        let ds = parse_bccd(text).unwrap();
        assert_eq!(ds.features()[[0, 0]], 48.0); // Age back in schema slot 0
        assert_eq!(ds.features()[[0, 8]], 417.114);
        assert_eq!(ds.labels(), &[0]);
    }

    #[test]
    fn rejects_non_finite_and_fractional_age() {
        let inf = format!("{HEADER}\n48,23.5,70,inf,0.467,8.8071,9.7024,7.99585,417.114,1\n");
        assert!(matches!(parse_bccd(&inf), Err(Error::Parse { .. })));
        let frac_age = format!("{HEADER}\n48.5,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,1\n");
        assert!(matches!(parse_bccd(&frac_age), Err(Error::Parse { .. })));
    }

    #[test]
    fn class_counts_small_cases() {
        let text = format!(
            "{HEADER}\n48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,2\n"
        );
        let ds = parse_bccd(&text).unwrap();
        assert_eq!(class_counts(&ds), (0, 1));

        let four = format!(
            "{HEADER}\n\
             48,23.5,70,2.707,0.467,8.8071,9.7024,7.99585,417.114,1\n\
             50,24.5,71,2.807,0.491,8.9,9.8,8.0,418.0,1\n\
             51,25.5,72,2.907,0.516,9.0,9.9,8.1,419.0,2\n\
             52,26.5,73,3.007,0.541,9.1,10.0,8.2,420.0,2\n"
        );
        let ds = parse_bccd(&four).unwrap();
        assert_eq!(class_counts(&ds), (2, 2));
    }

    #[test]
    fn fixture_has_expected_shape_and_counts() {
        let ds = parse_bccd(fixture()).unwrap();
        assert_eq!(ds.n_rows(), 116);
        assert_eq!(ds.n_features(), 9);
        assert_eq!(class_counts(&ds), (52, 64));
    }

    #[test]
    fn fixture_round_trips_through_renderer() {
        let ds = parse_bccd(fixture()).unwrap();
        let again = parse_bccd(&render_csv(&ds)).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn schema_matches_published_table() {
        let schema = FeatureSchema::bccd();
        let names: Vec<&str> = schema.features().iter().map(|f| f.name).collect();
        assert_eq!(
            names,
            ["Age", "BMI", "Glucose", "Insulin", "HOMA", "Leptin", "Adiponectin", "Resistin", "MCP.1"]
        );
        let units: Vec<&str> = schema.features().iter().map(|f| f.unit).collect();
        assert_eq!(
            units,
            ["years", "kg/m2", "mg/dL", "µU/mL", "ng/mL", "ng/mL", "µg/mL", "ng/mL", "pg/mL"]
        );
        assert_eq!(schema.features()[0].kind, FeatureKind::Integer);
        assert_eq!(schema.features()[2].kind, FeatureKind::Integer);
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_dataset() -> impl Strategy<Value = Dataset> {
            let row = (
                0u32..120,                       // age
                10.0f64..60.0,                   // bmi
                40u32..250,                      // glucose
                0.1f64..80.0,                    // insulin
                0.01f64..30.0,                   // homa
                0.1f64..100.0,                   // leptin
                0.1f64..40.0,                    // adiponectin
                0.1f64..100.0,                   // resistin
                1.0f64..2000.0,                  // mcp
                0u8..2,                          // label
            );
            proptest::collection::vec(row, 1..40).prop_map(|rows| {
                let n = rows.len();
                let mut values = Vec::with_capacity(n * 9);
                let mut labels = Vec::with_capacity(n);
                for (age, bmi, glu, ins, homa, lep, adi, res, mcp, label) in rows {
                    values.extend_from_slice(&[
                        age as f64, bmi, glu as f64, ins, homa, lep, adi, res, mcp,
                    ]);
                    labels.push(label);
                }
                let features = Array2::from_shape_vec((n, 9), values).unwrap();
                Dataset::new(features, labels, FeatureSchema::bccd()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn render_parse_round_trip(ds in arb_dataset()) {
                let again = parse_bccd(&render_csv(&ds)).unwrap();
                prop_assert_eq!(&ds, &again);
            }

            #[test]
            fn label_remap_is_bijective(ds in arb_dataset()) {
                let reparsed = parse_bccd(&render_csv(&ds)).unwrap();
                prop_assert!(reparsed.labels().iter().all(|&l| l == 0 || l == 1));
                let (h, p) = class_counts(&reparsed);
                prop_assert_eq!(h + p, reparsed.n_rows());
            }
        }
    }
}
