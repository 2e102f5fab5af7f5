//! Number formatting and table output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// `%g`-style rendering with `digits` significant digits. Infinities are
/// written as `+inf` / `-inf`.
pub fn number(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "+inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn optional(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "NA".into(), |v| number(v, digits))
}

pub fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// JSON value for a float; non-finite values become their string forms.
pub fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or_else(|| serde_json::Value::String(number(x, 6)), serde_json::Value::Number)
}

pub fn json_optional(x: Option<f64>) -> serde_json::Value {
    x.map_or(serde_json::Value::Null, json_number)
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `# key=value` summary lines followed by a delimited table.
pub fn write_table(
    out: Option<&Path>,
    delimiter: u8,
    summary: &[(&str, String)],
    headers: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = open(out)?;
    for (k, v) in summary {
        writeln!(w, "# {k}={v}")?;
    }
    let mut csv = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
    csv.write_record(headers)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_json(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
