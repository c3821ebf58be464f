//! CSV and JSON writers for result rows and sample sets.

use std::io::Write;

use qmcmc::experiments::ResultRow;
use qmcmc::trajectory::SampleSet;
use serde_json::Value;

use crate::args::Format;
use crate::CliError;

/// Floats are written with 17 significant digits so they round-trip exactly.
fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes `rows` as CSV (header in field order, LF endings) or as a JSON array.
pub fn emit_results(rows: &[ResultRow], format: Format, sink: &mut dyn Write) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::EmptyResult);
    }
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *sink, rows).map_err(std::io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        Format::Csv => {
            let mut header: Vec<&str> = ResultRow::COLUMNS.to_vec();
            let timed = rows.iter().any(|r| r.wall_time.is_some());
            if timed {
                header.push("wall_time");
            }
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut *sink);
            w.write_record(&header).map_err(csv_io)?;
            for row in rows {
                let value = serde_json::to_value(row).map_err(std::io::Error::from)?;
                let record: Vec<String> = header.iter().map(|k| cell(value.get(*k).unwrap_or(&Value::Null))).collect();
                w.write_record(&record).map_err(csv_io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes sample counts as `bitstring,count` CSV or as the JSON sample set.
pub fn emit_samples(set: &SampleSet, format: Format, sink: &mut dyn Write) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *sink, set).map_err(std::io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut *sink);
            w.write_record(["bitstring", "count"]).map_err(csv_io)?;
            for (bits, count) in &set.counts {
                w.write_record([bits.as_str(), &count.to_string()]).map_err(csv_io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
