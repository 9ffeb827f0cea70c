//! CSV datasets (`unit,<var1>,<var2>,...`) and their JSON sidecars.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, Record, SamplingError};
use crate::model::UnitId;
use crate::rational::{fmt_value_decimal, parse_value};

/// Provenance stored next to a sampled CSV as `<file>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub seed: u64,
    pub n: u64,
    pub model: String,
}

pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<(), SamplingError> {
    let io = |e: csv::Error| SamplingError::Dataset(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["unit".to_string()];
    header.extend(dataset.variables.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for r in &dataset.records {
        let mut row = vec![r.unit.0.to_string()];
        row.extend(r.values.iter().map(fmt_value_decimal));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| SamplingError::Dataset(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Dataset, SamplingError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rd.headers().map_err(|e| SamplingError::Dataset(e.to_string()))?.clone();
    if header.get(0) != Some("unit") {
        return Err(SamplingError::Dataset("first CSV column must be `unit`".into()));
    }
    let variables: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut records = Vec::new();
    for (k, row) in rd.records().enumerate() {
        let row = row.map_err(|e| SamplingError::Dataset(e.to_string()))?;
        let line = k + 2;
        let unit: u32 = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| SamplingError::Dataset(format!("line {line}: invalid unit id")))?;
        let values = row
            .iter()
            .skip(1)
            .map(|s| parse_value(s).ok_or_else(|| SamplingError::Dataset(format!("line {line}: invalid value `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != variables.len() {
            return Err(SamplingError::Dataset(format!("line {line}: expected {} values", variables.len())));
        }
        records.push(Record { unit: UnitId(unit), values });
    }
    Ok(Dataset { variables, records, provenance: Provenance::Exact("csv".into()) })
}

pub fn write_sidecar<W: Write>(sidecar: &Sidecar, mut out: W) -> Result<(), SamplingError> {
    let text = serde_json::to_string(sidecar).map_err(|e| SamplingError::Dataset(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| SamplingError::Dataset(e.to_string()))
}

pub fn read_sidecar<R: Read>(input: R) -> Result<Sidecar, SamplingError> {
    serde_json::from_reader(input).map_err(|e| SamplingError::Dataset(e.to_string()))
}
