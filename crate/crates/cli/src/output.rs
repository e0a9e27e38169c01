//! CSV rows and report writing.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const CSV_HEADER: &str = "experiment,n,t,ell,seed,mode,value,analytic,abs_error,tuples,elapsed_ms,version";

/// One line of the results table. Empty fields are left blank.
#[derive(Debug, Clone, Default)]
pub struct ResultRow {
    pub experiment: String,
    pub n: Option<usize>,
    pub t: f64,
    pub ell: usize,
    pub seed: Option<u64>,
    pub mode: String,
    pub value: f64,
    pub analytic: f64,
    pub tuples: Option<u64>,
    pub elapsed_ms: Option<f64>,
    pub version: String,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:?},{},{},{},{:?},{:?},{:?},{},{},{}",
            self.experiment,
            opt(self.n),
            self.t,
            self.ell,
            opt(self.seed),
            self.mode,
            self.value,
            self.analytic,
            (self.value - self.analytic).abs(),
            opt(self.tuples),
            self.elapsed_ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
            self.version
        )
    }
}

/// The CSV table followed by the aggregate as `# `-prefixed JSON lines.
pub fn csv_document(rows: &[ResultRow], aggregate: &serde_json::Value) -> Result<String, CliError> {
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").expect("string write");
    for r in rows {
        writeln!(s, "{}", r.to_csv()).expect("string write");
    }
    writeln!(s, "# aggregate").expect("string write");
    for line in serde_json::to_string_pretty(aggregate).map_err(|e| CliError::Failed(e.to_string()))?.lines() {
        writeln!(s, "# {line}").expect("string write");
    }
    Ok(s)
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Parses the rows of a document written by [`csv_document`], skipping the
/// header and comment lines.
pub fn data_lines(doc: &str) -> Vec<Vec<String>> {
    doc.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// The aggregate JSON of a document written by [`csv_document`].
pub fn aggregate_of(doc: &str) -> Option<serde_json::Value> {
    let json: String = doc
        .lines()
        .skip_while(|l| *l != "# aggregate")
        .skip(1)
        .map(|l| l.strip_prefix("# ").unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n");
    serde_json::from_str(&json).ok()
}
