//! Price-series ingestion and serialization of paths and analyses.
//!
//! Path CSV header: `t,price,ret,value,expectation,news_i,news_j,m,n`.
//! Floats are written as the shortest decimal string that parses back to
//! the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DataError, StatsError};
use crate::models::UnitsConvention;
use crate::sim::Path;
use crate::stats::{acf, ccdf, fit_power_law, summary_stats, AcfResult, CcdfPoints, FitOptions, SummaryStats, TailFit};

pub const PATH_CSV_HEADER: &str = "t,price,ret,value,expectation,news_i,news_j,m,n";
pub const ANALYSIS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

impl ColumnRef {
    /// Numeric strings are read as indices, anything else as names.
    pub fn parse(s: &str) -> ColumnRef {
        s.parse().map(ColumnRef::Index).unwrap_or_else(|_| ColumnRef::Name(s.to_string()))
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "{n}"),
            ColumnRef::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceCsvSchema {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub column: ColumnRef,
    #[serde(default)]
    pub date_column: Option<ColumnRef>,
    #[serde(default = "default_header")]
    pub has_header: bool,
}

fn default_delimiter() -> char {
    ','
}

fn default_header() -> bool {
    true
}

impl PriceCsvSchema {
    pub fn named(column: &str) -> Self {
        PriceCsvSchema {
            delimiter: ',',
            column: ColumnRef::Name(column.to_string()),
            date_column: None,
            has_header: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnData {
    pub values: Vec<f64>,
    pub dates: Option<Vec<String>>,
    pub rows: usize,
}

fn io_err(path: &FsPath) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Read one numeric column in file order. Lines starting with `#` are skipped.
pub fn load_column(path: &FsPath, schema: &PriceCsvSchema) -> Result<ColumnData, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    let delimiter = u8::try_from(schema.delimiter)
        .map_err(|_| DataError::MissingColumn(format!("delimiter {:?} is not ASCII", schema.delimiter)))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(schema.has_header)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = if schema.has_header { Some(reader.headers()?.clone()) } else { None };
    let resolve = |col: &ColumnRef| -> Result<usize, DataError> {
        match col {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(name) => headers
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| DataError::MissingColumn(name.clone())),
        }
    };
    let col = resolve(&schema.column)?;
    let date_col = schema.date_column.as_ref().map(resolve).transpose()?;

    let mut values = Vec::new();
    let mut dates = date_col.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = record
            .get(col)
            .ok_or_else(|| DataError::MissingColumn(format!("{} (row {row} is too short)", schema.column)))?;
        let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
            row,
            value: cell.to_string(),
        })?;
        if !v.is_finite() {
            return Err(DataError::NonNumeric {
                row,
                value: cell.to_string(),
            });
        }
        values.push(v);
        if let (Some(dc), Some(ds)) = (date_col, dates.as_mut()) {
            ds.push(record.get(dc).unwrap_or_default().to_string());
        }
    }
    let rows = values.len();
    Ok(ColumnData { values, dates, rows })
}

/// Load a positive price column.
pub fn load_price_csv(path: &FsPath, schema: &PriceCsvSchema) -> Result<ColumnData, DataError> {
    let data = load_column(path, schema)?;
    if let Some((i, &value)) = data.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(DataError::NonPositive { row: i + 1, value });
    }
    Ok(data)
}

fn create(path: &FsPath) -> Result<BufWriter<File>, DataError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Write a path as CSV. Aborted paths end with `# aborted:<t>`.
pub fn write_path(path: &Path, out: &FsPath) -> Result<(), DataError> {
    let mut w = create(out)?;
    let io = io_err(out);
    let mut body = String::with_capacity(path.records.len() * 96 + 64);
    body.push_str(PATH_CSV_HEADER);
    body.push('\n');
    for r in &path.records {
        use std::fmt::Write as _;
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.price,
            r.ret,
            r.value,
            r.expectation,
            u8::from(r.news_i),
            u8::from(r.news_j),
            r.m,
            r.n
        );
    }
    if let Some(t) = path.abort_step() {
        body.push_str(&format!("# aborted:{t}\n"));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io)
}

/// Write a single numeric column with a header.
pub fn write_column(name: &str, values: &[f64], out: &FsPath) -> Result<(), DataError> {
    let mut body = String::with_capacity(values.len() * 24 + name.len() + 1);
    body.push_str(name);
    body.push('\n');
    for v in values {
        body.push_str(&v.to_string());
        body.push('\n');
    }
    let mut w = create(out)?;
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(out))
}

/// Everything computed for one return series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub units: UnitsConvention,
    pub summary: SummaryStats,
    pub acf_r: AcfResult,
    pub acf_abs: AcfResult,
    /// CCDF of absolute returns.
    pub ccdf_abs: CcdfPoints,
    /// Power-law fit of absolute returns; `None` when no admissible tail exists.
    pub fit: Option<TailFit>,
    pub fit_error: Option<String>,
}

/// Summary, ACFs of `r` and `|r|`, CCDF and tail fit of `|r|`.
pub fn analyze_returns(
    returns: &[f64],
    units: UnitsConvention,
    max_lag: usize,
    fit_opts: &FitOptions,
) -> Result<AnalysisReport, StatsError> {
    let summary = summary_stats(returns)?;
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    let acf_r = acf(returns, max_lag)?;
    let acf_abs = acf(&abs, max_lag)?;
    let ccdf_abs = ccdf(&abs)?;
    let (fit, fit_error) = match fit_power_law(&abs, fit_opts) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(AnalysisReport {
        schema_version: ANALYSIS_SCHEMA_VERSION,
        units,
        summary,
        acf_r,
        acf_abs,
        ccdf_abs,
        fit,
        fit_error,
    })
}

fn sibling(out: &FsPath, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("analysis");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Write the JSON report and its `_acf.csv` / `_ccdf.csv` siblings.
/// Returns every file written.
pub fn write_analysis(report: &AnalysisReport, out: &FsPath) -> Result<Vec<PathBuf>, DataError> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    let mut w = create(out)?;
    w.write_all(json.as_bytes()).and_then(|_| w.flush()).map_err(io_err(out))?;

    let acf_path = sibling(out, "acf");
    let mut body = String::from("lag,acf_r,acf_abs,band\n");
    for ((lag, r), a) in report.acf_r.lags().zip(&report.acf_abs.rho) {
        body.push_str(&format!("{lag},{r},{a},{}\n", report.acf_r.band));
    }
    let mut w = create(&acf_path)?;
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&acf_path))?;

    let ccdf_path = sibling(out, "ccdf");
    let mut body = String::from("x,ccdf\n");
    for p in &report.ccdf_abs.points {
        body.push_str(&format!("{},{}\n", p.x, p.fraction));
    }
    let mut w = create(&ccdf_path)?;
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&ccdf_path))?;

    Ok(vec![out.to_path_buf(), acf_path, ccdf_path])
}

pub fn read_analysis(path: &FsPath) -> Result<AnalysisReport, DataError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::sim::simulate;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_named_column_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", "date,price\n2020-01-01,100\n2020-01-02,101.5\n2020-01-03,99\n");
        let mut schema = PriceCsvSchema::named("price");
        schema.date_column = Some(ColumnRef::Name("date".into()));
        let d = load_price_csv(&p, &schema).unwrap();
        assert_eq!(d.values, vec![100.0, 101.5, 99.0]);
        assert_eq!(d.rows, 3);
        assert_eq!(d.dates.unwrap()[2], "2020-01-03");
    }

    #[test]
    fn headerless_semicolon_by_index() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", "a;1\nb;2\n");
        let schema = PriceCsvSchema {
            delimiter: ';',
            column: ColumnRef::Index(1),
            date_column: None,
            has_header: false,
        };
        assert_eq!(load_price_csv(&p, &schema).unwrap().values, vec![1.0, 2.0]);
    }

    #[test]
    fn non_numeric_cell_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("date,price\n");
        for i in 1..=10 {
            body.push_str(&format!("d{i},{}\n", if i == 7 { "abc".to_string() } else { i.to_string() }));
        }
        let p = write(&dir, "p.csv", &body);
        let err = load_price_csv(&p, &PriceCsvSchema::named("price")).unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { row: 7, .. }), "{err}");
        assert!(err.to_string().contains("row 7"));
    }

    #[test]
    fn missing_column_and_nonpositive_price() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", "date,close\nx,1\ny,0\n");
        assert!(matches!(
            load_price_csv(&p, &PriceCsvSchema::named("price")),
            Err(DataError::MissingColumn(_))
        ));
        assert!(matches!(
            load_price_csv(&p, &PriceCsvSchema::named("close")),
            Err(DataError::NonPositive { row: 2, .. })
        ));
    }

    #[test]
    fn path_csv_shape_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::preset("fig5").unwrap();
        c.horizon = 10;
        let path = simulate(&c, 3).unwrap();
        let out = dir.path().join("path.csv");
        write_path(&path, &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert_eq!(text.lines().next().unwrap(), PATH_CSV_HEADER);

        c.horizon = 2000;
        let path = simulate(&c, 3).unwrap();
        write_path(&path, &out).unwrap();
        let ret = load_column(&out, &PriceCsvSchema::named("ret")).unwrap();
        assert_eq!(ret.values, path.returns());
        let prices = load_price_csv(&out, &PriceCsvSchema::named("price")).unwrap();
        assert_eq!(prices.values, path.prices());
    }

    #[test]
    fn aborted_path_gets_trailer() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::preset("fig3").unwrap();
        c.horizon = 100;
        c.units = UnitsConvention::Fraction;
        c.news.prob_i = 1.0;
        c.news.eps_dist = crate::kernel::DistSpec::gaussian(0.0, 500.0);
        c.impacts.m_dist = crate::kernel::DistSpec::exponential(0.9);
        let path = simulate(&c, 1).unwrap();
        let t = path.abort_step().unwrap();
        let out = dir.path().join("path.csv");
        write_path(&path, &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().last().unwrap(), format!("# aborted:{t}"));
        assert_eq!(text.lines().count(), 1 + (t - 1) + 1);
        // Readers skip the trailer.
        let prices = load_price_csv(&out, &PriceCsvSchema::named("price")).unwrap();
        assert_eq!(prices.rows, t - 1);
    }

    #[test]
    fn analysis_round_trip_and_null_fit() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::preset("fig5").unwrap();
        c.horizon = 3000;
        let r = simulate(&c, 5).unwrap().returns();
        let mut report = analyze_returns(&r, UnitsConvention::Percent, 50, &FitOptions::default()).unwrap();
        report.fit.as_mut().unwrap().alpha = 3.02;
        let out = dir.path().join("analysis.json");
        let files = write_analysis(&report, &out).unwrap();
        assert_eq!(files.len(), 3);
        let back = read_analysis(&out).unwrap();
        assert_eq!(back.fit.unwrap().alpha, 3.02);
        assert_eq!(back, report);
        let acf_csv = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(acf_csv.lines().count(), 51);

        let tiny = [0.5, -1.0, 2.0, 0.25, -0.75, 1.5, 0.1, -0.2, 0.3, 0.9];
        let report = analyze_returns(&tiny, UnitsConvention::Percent, 3, &FitOptions::default()).unwrap();
        assert!(report.fit.is_none());
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["fit"].is_null());
        assert!(json["fit_error"].as_str().unwrap().contains("tail too small"));
    }
}
