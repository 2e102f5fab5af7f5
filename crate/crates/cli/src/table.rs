//! Delimited input tables.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Rows read from a comma- or tab-separated file with a header line.
/// Lines starting with `#` are comments.
#[derive(Debug, Clone)]
pub struct InputTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub delimiter: u8,
}

impl InputTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = if path.as_os_str() == "-" {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading standard input")?;
            s
        } else {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        };
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let header = text
            .lines()
            .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .context("input has no header line")?;
        let delimiter = if header.contains('\t') { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let record = record.with_context(|| format!("row {}: malformed record", k + 1))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            bail!("input has a header but no rows");
        }
        Ok(Self {
            headers,
            rows,
            delimiter,
        })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    pub fn require(&self, name: &str, why: &str) -> Result<usize> {
        match self.column(name) {
            Some(c) => Ok(c),
            None => bail!("missing column `{name}` ({why})"),
        }
    }

    fn numbers(&self, col: usize, check: impl Fn(f64) -> Option<&'static str>) -> Result<Vec<f64>> {
        let name = &self.headers[col];
        self.rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let cell = &row[col];
                let x: f64 = cell
                    .parse()
                    .map_err(|_| anyhow::anyhow!("row {}, column `{name}`: `{cell}` is not a number", k + 1))?;
                if let Some(problem) = check(x) {
                    bail!("row {}, column `{name}`: {cell} {problem}", k + 1);
                }
                Ok(x)
            })
            .collect()
    }

    pub fn probabilities(&self, col: usize) -> Result<Vec<f64>> {
        self.numbers(col, |x| (!(0.0..=1.0).contains(&x)).then_some("is outside [0, 1]"))
    }

    pub fn statistics(&self, col: usize) -> Result<Vec<f64>> {
        self.numbers(col, |x| (!x.is_finite()).then_some("is not finite"))
    }

    pub fn labels(&self, col: usize) -> Result<Vec<String>> {
        let name = &self.headers[col];
        self.rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                if row[col].is_empty() {
                    bail!("row {}, column `{name}`: empty label", k + 1);
                }
                Ok(row[col].clone())
            })
            .collect()
    }
}
