//! CSV input and output of censored samples and product-limit tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use kmexp_core::{CensoredSample, KmWeights, ScaledSample};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Where a sample came from, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetIdentity {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
}

/// Reads a `time,delta` file. Any further columns (such as those written by
/// `kmexp km`) are ignored.
pub fn read_sample(path: &Path) -> CliResult<(CensoredSample, DatasetIdentity)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let sample = parse_sample(&bytes, &path.display().to_string())?;
    let identity = DatasetIdentity {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        rows: sample.len(),
    };
    Ok((sample, identity))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Columns {
    time: usize,
    delta: usize,
    extra: Vec<(String, usize)>,
}

fn columns(headers: &csv::StringRecord, source: &str, extra: &[&str]) -> CliResult<Columns> {
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                CliError::Parse(format!(
                    "{source}: line 1: expected a `{name}` column in the header, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ))
            })
    };
    Ok(Columns {
        time: find("time")?,
        delta: find("delta")?,
        extra: extra
            .iter()
            .map(|n| find(n).map(|i| (n.to_string(), i)))
            .collect::<CliResult<_>>()?,
    })
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes)
}

fn parse_rows(bytes: &[u8], source: &str, extra: &[&str]) -> CliResult<Vec<(f64, bool, Vec<f64>)>> {
    let mut rdr = reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Parse(format!("{source}: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(CliError::Parse(format!("{source}: empty file")));
    }
    let cols = columns(&headers, source, extra)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Parse(format!("{source}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| {
            record.get(i).ok_or_else(|| {
                CliError::Parse(format!("{source}: line {line}: missing `{name}` field"))
            })
        };
        let raw_time = field(cols.time, "time")?;
        let time: f64 = raw_time.parse().map_err(|_| {
            CliError::Parse(format!("{source}: line {line}: cannot parse time `{raw_time}`"))
        })?;
        if !(time.is_finite() && time > 0.0) {
            return Err(CliError::Parse(format!(
                "{source}: line {line}: time must be positive and finite, got `{raw_time}`"
            )));
        }
        let delta = match field(cols.delta, "delta")? {
            "1" => true,
            "0" => false,
            other => {
                return Err(CliError::Parse(format!(
                    "{source}: line {line}: delta must be 0 or 1, got `{other}`"
                )))
            }
        };
        let mut values = Vec::with_capacity(cols.extra.len());
        for (name, i) in &cols.extra {
            let raw = field(*i, name)?;
            values.push(raw.parse().map_err(|_| {
                CliError::Parse(format!("{source}: line {line}: cannot parse {name} `{raw}`"))
            })?);
        }
        rows.push((time, delta, values));
    }
    if rows.is_empty() {
        return Err(CliError::Parse(format!("{source}: no data rows")));
    }
    Ok(rows)
}

pub fn parse_sample(bytes: &[u8], source: &str) -> CliResult<CensoredSample> {
    let rows = parse_rows(bytes, source, &[])?;
    let (times, deltas) = rows.into_iter().map(|(t, d, _)| (t, d)).unzip();
    CensoredSample::new(times, deltas).map_err(|e| CliError::Parse(format!("{source}: {e}")))
}

/// One step of the product-limit estimate, in tie order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmRow {
    pub time: f64,
    pub delta: u8,
    /// Survival just after this observation.
    pub survival: f64,
    pub jump: f64,
}

pub fn km_rows(w: &KmWeights) -> Vec<KmRow> {
    w.ordered_times()
        .iter()
        .zip(w.ordered_indicators())
        .zip(w.jumps().iter().zip(w.survival_steps()))
        .map(|((&time, &d), (&jump, &survival))| KmRow {
            time,
            delta: u8::from(d),
            survival,
            jump,
        })
        .collect()
}

/// Writes the table as CSV with shortest round-trip number formatting.
pub fn write_km_csv(rows: &[KmRow], out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Parse(format!("writing table: {e}")))?;
    }
    w.flush().map_err(|e| CliError::io("writing table", e))
}

/// A product-limit table read back from `kmexp km` output.
#[derive(Debug, Clone, PartialEq)]
pub struct KmTable {
    pub rows: Vec<KmRow>,
}

impl KmTable {
    pub fn parse(bytes: &[u8], source: &str) -> CliResult<Self> {
        let rows = parse_rows(bytes, source, &["survival", "jump"])?
            .into_iter()
            .map(|(time, d, v)| KmRow {
                time,
                delta: u8::from(d),
                survival: v[0],
                jump: v[1],
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn sample(&self) -> CliResult<CensoredSample> {
        CensoredSample::new(
            self.rows.iter().map(|r| r.time).collect(),
            self.rows.iter().map(|r| r.delta == 1).collect(),
        )
        .map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Scaled sample and weights taken from the table's own jump column
    /// rather than recomputed.
    pub fn weighted(&self) -> CliResult<(ScaledSample, KmWeights)> {
        let rate = self.sample()?.estimate_rate()?;
        let times: Vec<f64> = self.rows.iter().map(|r| r.time * rate).collect();
        let deltas: Vec<bool> = self.rows.iter().map(|r| r.delta == 1).collect();
        let scaled = ScaledSample::from_scaled_values(times.clone(), deltas.clone(), rate)?;
        let w = KmWeights::from_parts(
            times,
            deltas,
            self.rows.iter().map(|r| r.jump).collect(),
            self.rows.iter().map(|r| r.survival).collect(),
        )?;
        Ok((scaled, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_sample(b"time,delta\n1.0,1\n2.0,x\n", "f").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_sample(b"time,delta\n1.0,1\n-2.0,1\n", "f").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn empty_and_headerless_inputs_fail() {
        assert!(matches!(parse_sample(b"", "f"), Err(CliError::Parse(_))));
        assert!(matches!(parse_sample(b"time,delta\n", "f"), Err(CliError::Parse(_))));
        assert!(matches!(parse_sample(b"t,d\n1,1\n", "f"), Err(CliError::Parse(_))));
    }

    #[test]
    fn columns_may_come_in_any_order() {
        let s = parse_sample(b"delta,time\n1,3.5\n0,1.0\n", "f").unwrap();
        assert_eq!(s.times(), &[3.5, 1.0]);
        assert_eq!(s.indicators(), &[true, false]);
    }
}
