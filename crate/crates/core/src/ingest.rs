//! Elec2 loading and experiment windowing.
//!
//! The input is the usual comma-separated Elec2 export with a header row
//! (`date,day,period,nswprice,nswdemand,...`), one half-hour sample per row in
//! chronological order. All columns are already normalized to `[0, 1]`.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Samples per day at a 30 minute period.
pub const SAMPLES_PER_DAY: usize = 48;

pub const DEFAULT_COLUMN: &str = "nswdemand";

#[derive(Debug, Clone, PartialEq)]
pub struct Elec2Series {
    pub column: String,
    pub values: Vec<f64>,
}

impl Elec2Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn load_elec2(path: impl AsRef<Path>, column: &str) -> Result<Elec2Series> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(column))
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
            available: headers.iter().collect::<Vec<_>>().join(", "),
        })?;

    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // 1-based data row, header excluded
        let row = i + 1;
        let raw = record.get(idx).unwrap_or("");
        let value: f64 = raw.parse().map_err(|_| Error::Parse {
            path: PathBuf::from(path),
            row,
            raw: raw.to_string(),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange {
                path: path.to_path_buf(),
                row,
                value,
            });
        }
        values.push(value);
    }
    Ok(Elec2Series {
        column: headers[idx].to_string(),
        values,
    })
}

/// Splits off two consecutive windows of `history + steps` samples each: the
/// first for hyperparameter selection, the second for evaluation.
pub fn split_windows(series: &[f64], history: usize, steps: usize) -> Result<(&[f64], &[f64])> {
    let window = history + steps;
    let needed = 2 * window;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            have: series.len(),
        });
    }
    Ok((&series[..window], &series[window..needed]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "date,day,period,nswprice,nswdemand,vicprice,vicdemand,transfer,class\n";

    #[test]
    fn loads_four_rows() {
        let f = fixture(&format!(
            "{HEADER}0,2,0,0.05,0.1,0.003,0.42,0.41,UP\n\
             0,2,0.02,0.05,0.5,0.003,0.42,0.41,UP\n\
             0,2,0.04,0.05,0.9,0.003,0.42,0.41,DOWN\n\
             0,2,0.06,0.05,0.3,0.003,0.42,0.41,DOWN\n"
        ));
        let s = load_elec2(f.path(), "NSWDemand").unwrap();
        assert_eq!(s.values, vec![0.1, 0.5, 0.9, 0.3]);
        assert_eq!(s.column, "nswdemand");
    }

    #[test]
    fn rejects_out_of_range_value() {
        let f = fixture(&format!("{HEADER}0,2,0,0.05,1.5,0.003,0.42,0.41,UP\n"));
        assert!(matches!(
            load_elec2(f.path(), DEFAULT_COLUMN),
            Err(Error::OutOfRange { row: 1, .. })
        ));
    }

    #[test]
    fn rejects_unknown_column() {
        let f = fixture(&format!("{HEADER}0,2,0,0.05,0.5,0.003,0.42,0.41,UP\n"));
        let err = load_elec2(f.path(), "bogus").unwrap_err();
        assert!(matches!(err, Error::MissingColumn { .. }));
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn rejects_missing_file() {
        assert!(matches!(
            load_elec2("/nonexistent/elec2.csv", DEFAULT_COLUMN),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn rejects_non_numeric_value() {
        let f = fixture(&format!("{HEADER}0,2,0,0.05,abc,0.003,0.42,0.41,UP\n"));
        assert!(matches!(
            load_elec2(f.path(), DEFAULT_COLUMN),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn window_boundaries() {
        let series: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let (tune, eval) = split_windows(&series, 3, 7).unwrap();
        assert_eq!(tune.len(), 10);
        assert_eq!(eval.len(), 10);
        assert_eq!([tune, eval].concat(), series);
        assert!(matches!(
            split_windows(&series[..19], 3, 7),
            Err(Error::SeriesTooShort { needed: 20, have: 19 })
        ));
    }

    #[test]
    fn experiment_window_length() {
        let history = 3 * SAMPLES_PER_DAY;
        let steps = 12 * 7 * SAMPLES_PER_DAY;
        assert_eq!(history + steps, 4176);
        let series = vec![0.5; 2 * 4176];
        let (tune, eval) = split_windows(&series, history, steps).unwrap();
        assert_eq!((tune.len(), eval.len()), (4176, 4176));
    }
}
