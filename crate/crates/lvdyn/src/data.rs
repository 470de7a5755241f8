//! CSV ingestion. Columns are selected by header name, so their order in the
//! file does not matter.

use std::io::Read;
use std::path::Path;

use lvdyn_core::fitting::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Stage, StageExt};
use crate::fixtures::Subsystem;

pub const DEFAULT_UNIT: &str = "billion yuan";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub year: String,
    pub x: String,
    pub y: String,
}

impl ColumnMapping {
    pub fn new(year: &str, x: &str, y: &str) -> Self {
        Self { year: year.into(), x: x.into(), y: y.into() }
    }

    pub fn for_fixture(s: Subsystem) -> Self {
        let (year, x, y) = s.columns();
        Self::new(year, x, y)
    }
}

/// Opaque labels carried into the report; units are never converted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesLabels {
    pub x: String,
    pub y: String,
    pub unit: String,
}

impl SeriesLabels {
    pub fn for_fixture(s: Subsystem) -> Self {
        let (x, y) = s.labels();
        Self { x: x.into(), y: y.into(), unit: DEFAULT_UNIT.into() }
    }
}

pub fn load_series(path: &Path, mapping: &ColumnMapping, labels: &SeriesLabels) -> CliResult<TimeSeries> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(Stage::Load, path, e))?;
    parse_series(file, &path.display().to_string(), mapping, labels)
}

pub fn load_fixture(s: Subsystem) -> CliResult<TimeSeries> {
    parse_series(s.csv().as_bytes(), s.file_name(), &ColumnMapping::for_fixture(s), &SeriesLabels::for_fixture(s))
}

/// Parse headered CSV. Row numbers in errors count the header as row 1.
pub fn parse_series<R: Read>(
    reader: R,
    source_name: &str,
    mapping: &ColumnMapping,
    labels: &SeriesLabels,
) -> CliResult<TimeSeries> {
    let parse_err = |row: usize, column: &str, message: String| CliError::Parse {
        source_name: source_name.to_owned(),
        row,
        column: column.to_owned(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, "", e.to_string()))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| parse_err(1, name, "column not found in header".into()))
    };
    let (iy, ix, iv) = (find(&mapping.year)?, find(&mapping.x)?, find(&mapping.y)?);

    let (mut years, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for (k, record) in rdr.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| parse_err(row, "", e.to_string()))?;
        let field = |i: usize, name: &str| {
            record.get(i).filter(|s| !s.is_empty()).ok_or_else(|| parse_err(row, name, "missing value".into()))
        };
        let year = field(iy, &mapping.year)?;
        years.push(year.parse::<i32>().map_err(|e| parse_err(row, &mapping.year, format!("'{year}': {e}")))?);
        for (i, name, out) in [(ix, &mapping.x, &mut xs), (iv, &mapping.y, &mut ys)] {
            let raw = field(i, name)?;
            out.push(raw.parse::<f64>().map_err(|e| parse_err(row, name, format!("'{raw}': {e}")))?);
        }
    }
    TimeSeries::new(labels.x.clone(), labels.y.clone(), labels.unit.clone(), years, xs, ys).at(Stage::Load)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<TimeSeries> {
        parse_series(
            text.as_bytes(),
            "test.csv",
            &ColumnMapping::new("year", "a", "b"),
            &SeriesLabels { x: "a".into(), y: "b".into(), unit: "u".into() },
        )
    }

    #[test]
    fn physical_fixture_matches_source_table() {
        let ts = load_fixture(Subsystem::AiPhysical).unwrap();
        assert_eq!(ts.len(), 8);
        assert_eq!(ts.years, (2016..=2023).collect::<Vec<_>>());
        assert_eq!(ts.xs, vec![15.40, 31.80, 59.30, 93.60, 138.90, 162.10, 170.60, 213.70]);
        assert_eq!(ts.ys[0], 37202.10);
        assert_eq!(ts.ys[7], 50970.80);
        let lab = load_fixture(Subsystem::AiLabor).unwrap();
        assert_eq!(lab.ys, vec![22770.0, 25500.0, 28210.0, 31820.0, 34880.0, 39700.0, 42390.0, 44650.0]);
    }

    #[test]
    fn columns_are_found_by_name() {
        let ts = parse("b,year,a\n10,2000,1\n11,2001,2\n12,2002,3\n13,2003,4\n").unwrap();
        assert_eq!(ts.xs, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ts.ys, vec![10.0, 11.0, 12.0, 13.0]);
    }

    #[test]
    fn parse_errors_carry_location() {
        let e = parse("year,a,b\n2000,1,2\n2001,x,2\n").unwrap_err();
        match e {
            CliError::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (3, "a")),
            other => panic!("{other:?}"),
        }
        let e = parse("year,a,c\n2000,1,2\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { row: 1, ref column, .. } if column == "b"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn validation_failures() {
        let gap = parse("year,a,b\n2016,1,1\n2017,2,2\n2018,3,3\n2020,4,4\n2021,5,5\n").unwrap_err();
        assert!(matches!(gap, CliError::Validation { stage: Stage::Load, .. }), "{gap}");
        assert!(gap.to_string().contains("2018"));
        let zero = parse("year,a,b\n2016,1,1\n2017,0,2\n2018,3,3\n2019,4,4\n").unwrap_err();
        assert!(matches!(zero, CliError::Validation { .. }));
        let short = parse("year,a,b\n2016,1,1\n2017,2,2\n2018,3,3\n").unwrap_err();
        assert!(matches!(short, CliError::Validation { .. }));
    }

    #[test]
    fn missing_file_is_io() {
        let e = load_series(
            Path::new("/nonexistent/data.csv"),
            &ColumnMapping::new("year", "a", "b"),
            &SeriesLabels { x: "a".into(), y: "b".into(), unit: "u".into() },
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
