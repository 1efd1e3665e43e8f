//! Dataset ingestion and serialization.
//!
//! Two formats are supported:
//!
//! * CSV with header `id,x1,...,xd`, one vertex per row, rows of one curve
//!   in vertex order.
//! * JSONL with one object per curve:
//!   `{"id": str, "vertices": [[f, ...], ...], "weight": optional f}`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CurveDataset, PolygonalCurve, DEFAULT_COLLINEARITY_TOL};
use crate::coreset::{WeightedCurve, WeightedCurveSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(Error::invalid(format!("unknown format {other:?}, expected csv or jsonl"))),
        }
    }
}

impl Format {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRecord {
    id: String,
    vertices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads a dataset; each curve is normalized with the default tolerance.
pub fn load_dataset<R: Read>(source: R, format: Format) -> Result<CurveDataset> {
    let curves = match format {
        Format::Csv => read_csv(source)?,
        Format::Jsonl => read_jsonl(source)?.into_iter().map(|(c, _)| c).collect(),
    };
    if curves.is_empty() {
        return Err(Error::invalid("dataset contains no curves"));
    }
    CurveDataset::new(curves)
}

fn read_csv<R: Read>(source: R) -> Result<Vec<PolygonalCurve>> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "id" {
        return Err(parse_err(1, "header must be `id,x1,...,xd` with d >= 1"));
    }
    let dim = headers.len() - 1;

    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, Vec<f64>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != dim + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields (id plus {dim} coordinates), found {}", dim + 1, record.len()),
            ));
        }
        let id = record[0].to_string();
        let coords = by_id.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            Vec::new()
        });
        for field in record.iter().skip(1) {
            let x: f64 = field.parse().map_err(|_| parse_err(line, format!("non-numeric coordinate {field:?}")))?;
            if !x.is_finite() {
                return Err(parse_err(line, format!("non-finite coordinate {field:?}")));
            }
            coords.push(x);
        }
    }
    order
        .into_iter()
        .map(|id| {
            let coords = by_id.remove(&id).unwrap_or_default();
            Ok(PolygonalCurve::from_flat(dim, coords)?.normalized(DEFAULT_COLLINEARITY_TOL).with_id(id))
        })
        .collect()
}

fn read_jsonl<R: Read>(source: R) -> Result<Vec<(PolygonalCurve, Option<f64>)>> {
    let mut out = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CurveRecord = serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        let first =
            rec.vertices.first().ok_or_else(|| parse_err(line_no, format!("curve {:?} has no vertices", rec.id)))?;
        let d = first.len();
        if d == 0 {
            return Err(parse_err(line_no, "vertex with zero coordinates"));
        }
        if rec.vertices.iter().any(|v| v.len() != d) {
            return Err(parse_err(line_no, format!("curve {:?} has ragged vertex dimensions", rec.id)));
        }
        match dim {
            Some(expected) if expected != d => {
                return Err(parse_err(line_no, format!("dimension {d} differs from dataset dimension {expected}")))
            }
            _ => dim = Some(d),
        }
        let coords: Vec<f64> = rec.vertices.into_iter().flatten().collect();
        let curve = PolygonalCurve::from_flat(d, coords)
            .map_err(|e| parse_err(line_no, e.to_string()))?
            .normalized(DEFAULT_COLLINEARITY_TOL)
            .with_id(rec.id);
        out.push((curve, rec.weight));
    }
    Ok(out)
}

fn record_id(curve: &PolygonalCurve, index: usize) -> String {
    curve.id().map(str::to_string).unwrap_or_else(|| index.to_string())
}

/// Writes a dataset. Floats use the shortest representation that parses
/// back to the same value.
pub fn save_dataset<W: Write>(dataset: &CurveDataset, sink: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            let mut header = vec!["id".to_string()];
            header.extend((1..=dataset.dim()).map(|i| format!("x{i}")));
            w.write_record(&header).map_err(csv_io)?;
            for (i, c) in dataset.curves().iter().enumerate() {
                let id = record_id(c, i);
                for v in c.vertices() {
                    let mut row = vec![id.clone()];
                    row.extend(v.iter().map(|x| x.to_string()));
                    w.write_record(&row).map_err(csv_io)?;
                }
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut sink = sink;
            for (i, c) in dataset.curves().iter().enumerate() {
                write_record(&mut sink, c, i, None)?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_record<W: Write>(sink: &mut W, curve: &PolygonalCurve, index: usize, weight: Option<f64>) -> Result<()> {
    let rec =
        CurveRecord { id: record_id(curve, index), vertices: curve.vertices().map(<[f64]>::to_vec).collect(), weight };
    serde_json::to_writer(&mut *sink, &rec)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Writes a weighted curve set as JSONL, one record per multiset entry.
/// Refuses non-positive or non-finite weights.
pub fn save_weighted_set<W: Write>(ws: &WeightedCurveSet, mut sink: W) -> Result<()> {
    if let Some((i, e)) = ws.entries().iter().enumerate().find(|(_, e)| !(e.weight > 0.0) || !e.weight.is_finite()) {
        return Err(Error::invalid(format!(
            "entry {i} has weight {}; coreset weights must be finite and strictly positive",
            e.weight
        )));
    }
    for (i, e) in ws.entries().iter().enumerate() {
        write_record(&mut sink, &e.curve, i, Some(e.weight))?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a weighted curve set written by [`save_weighted_set`].
pub fn load_weighted_set<R: Read>(source: R) -> Result<WeightedCurveSet> {
    let entries = read_jsonl(source)?
        .into_iter()
        .enumerate()
        .map(|(i, (curve, weight))| {
            let weight = weight.ok_or_else(|| Error::invalid(format!("entry {i} has no weight")))?;
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::invalid(format!("entry {i} has non-positive weight {weight}")));
            }
            Ok(WeightedCurve { curve, weight, source: None })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedCurveSet::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_groups_rows_by_id() {
        let data = "id,x1,x2\na,0,0\na,1,0\nb,5,5\nb,6,6\n";
        let ds = load_dataset(data.as_bytes(), Format::Csv).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert!(ds.curves().iter().all(|c| c.len() == 2));
        assert_eq!(ds.get(0).id(), Some("a"));
        assert_eq!(ds.get(1).vertex(1), &[6.0, 6.0]);
    }

    #[test]
    fn jsonl_single_record() {
        let data = r#"{"id":"x","vertices":[[0],[1]]}"#;
        let ds = load_dataset(data.as_bytes(), Format::Jsonl).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.get(0).len(), 2);
    }

    #[test]
    fn csv_mixed_dimensions_is_parse_error_with_line() {
        let data = "id,x1,x2\na,0,0\na,1,0,3\n";
        match load_dataset(data.as_bytes(), Format::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_non_numeric_field() {
        let data = "id,x1\na,0\na,zero\n";
        assert!(matches!(load_dataset(data.as_bytes(), Format::Csv), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn jsonl_errors_carry_line_numbers() {
        let empty = "{\"id\":\"a\",\"vertices\":[[0]]}\n{\"id\":\"b\",\"vertices\":[]}\n";
        assert!(matches!(load_dataset(empty.as_bytes(), Format::Jsonl), Err(Error::Parse { line: 2, .. })));
        let ragged = "{\"id\":\"a\",\"vertices\":[[0,1],[2]]}\n";
        assert!(matches!(load_dataset(ragged.as_bytes(), Format::Jsonl), Err(Error::Parse { line: 1, .. })));
        let mixed = "{\"id\":\"a\",\"vertices\":[[0,1]]}\n{\"id\":\"b\",\"vertices\":[[0]]}\n";
        assert!(matches!(load_dataset(mixed.as_bytes(), Format::Jsonl), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn dataset_round_trip_both_formats() {
        let c1 = PolygonalCurve::from_vertices(&[vec![0.1, 0.2], vec![1.0 / 3.0, 2.5]]).unwrap().with_id("a");
        let c2 = PolygonalCurve::from_vertices(&[vec![-7.25, 1e-300]]).unwrap().with_id("b");
        let ds = CurveDataset::new(vec![c1, c2]).unwrap();
        for fmt in [Format::Csv, Format::Jsonl] {
            let mut buf = Vec::new();
            save_dataset(&ds, &mut buf, fmt).unwrap();
            let back = load_dataset(buf.as_slice(), fmt).unwrap();
            assert_eq!(back, ds);
        }
    }

    #[test]
    fn weighted_set_round_trip_keeps_duplicates() {
        let c = PolygonalCurve::from_vertices(&[vec![0.0], vec![1.0]]).unwrap().with_id("c");
        let ws = WeightedCurveSet::new(vec![
            WeightedCurve { curve: c.clone(), weight: 0.1 + 0.2, source: None },
            WeightedCurve { curve: c, weight: 7.0 / 3.0, source: None },
        ])
        .unwrap();
        let mut buf = Vec::new();
        save_weighted_set(&ws, &mut buf).unwrap();
        let back = load_weighted_set(buf.as_slice()).unwrap();
        assert_eq!(back.entries().len(), 2);
        for (a, b) in back.entries().iter().zip(ws.entries()) {
            assert_eq!(a.curve, b.curve);
            assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        }
    }

    #[test]
    fn zero_weight_is_refused() {
        let c = PolygonalCurve::from_vertices(&[vec![0.0]]).unwrap();
        let ws = WeightedCurveSet::from_entries_unchecked(vec![WeightedCurve { curve: c, weight: 0.0, source: None }]);
        assert!(matches!(save_weighted_set(&ws, Vec::new()), Err(Error::InvalidInput(_))));
    }
}
