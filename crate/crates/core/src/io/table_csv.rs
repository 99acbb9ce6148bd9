use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::table::ContingencyTable;
use std::collections::HashMap;
use std::io::Read;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Drop all-zero rows and columns instead of rejecting the table.
    pub drop_empty: bool,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn is_total(label: &str) -> bool {
    label.trim().eq_ignore_ascii_case("total")
}

/// Reads a labeled table. The first header cell is blank or `label`; a
/// trailing `Total` row and column are dropped.
pub fn read_table<R: Read>(src: R, opts: &ReadOptions) -> Result<ContingencyTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(src);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, 0, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push((line, rec));
    }
    let Some((header_line, header)) = records.first() else {
        return Err(parse_err(1, 1, "empty input"));
    };
    let corner = header.get(0).unwrap_or("");
    if !(corner.is_empty() || corner.eq_ignore_ascii_case("label")) {
        return Err(parse_err(
            *header_line,
            1,
            format!("first header cell must be blank or `label`, found `{corner}`"),
        ));
    }
    let mut col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let width = col_labels.len() + 1;
    let total_col = col_labels.last().is_some_and(|l| is_total(l));
    if total_col {
        col_labels.pop();
    }
    if col_labels.is_empty() {
        return Err(parse_err(*header_line, 2, "no column labels"));
    }
    let mut seen = HashMap::new();
    for (j, l) in col_labels.iter().enumerate() {
        if seen.insert(l.as_str(), j).is_some() {
            return Err(parse_err(
                *header_line,
                j + 2,
                format!("duplicate column label `{l}`"),
            ));
        }
    }

    let mut body = &records[1..];
    if body
        .last()
        .is_some_and(|(_, r)| r.get(0).is_some_and(is_total))
    {
        body = &body[..body.len() - 1];
    }
    if body.is_empty() {
        return Err(parse_err(header_line + 1, 1, "no data rows"));
    }

    let nj = col_labels.len();
    let mut row_labels = Vec::with_capacity(body.len());
    let mut seen_rows = HashMap::new();
    let mut data = Vec::with_capacity(body.len() * nj);
    for (line, rec) in body {
        if rec.len() != width {
            return Err(parse_err(
                *line,
                rec.len().min(width) + 1,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        let label = rec.get(0).unwrap_or("").to_string();
        if seen_rows.insert(label.clone(), ()).is_some() {
            return Err(parse_err(
                *line,
                1,
                format!("duplicate row label `{label}`"),
            ));
        }
        for (j, field) in rec.iter().skip(1).take(nj).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(*line, j + 2, format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(*line, j + 2, format!("`{field}` is not finite")));
            }
            if v < 0.0 {
                return Err(parse_err(*line, j + 2, format!("negative entry {field}")));
            }
            data.push(v);
        }
        row_labels.push(label);
    }

    let x = Matrix::from_row_major(row_labels.len(), nj, data)?;
    if opts.drop_empty {
        ContingencyTable::drop_empty(row_labels, col_labels, x)
    } else {
        ContingencyTable::new(row_labels, col_labels, x)
    }
}

pub fn read_table_str(src: &str, opts: &ReadOptions) -> Result<ContingencyTable> {
    read_table(src.as_bytes(), opts)
}

/// Writes a table in the format `read_table` accepts, without totals.
pub fn write_table(t: &ContingencyTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("label").chain(t.col_labels().iter().map(String::as_str));
    w.write_record(header).expect("writing to memory");
    for (i, label) in t.row_labels().iter().enumerate() {
        let fields =
            std::iter::once(label.clone()).chain(t.x().row(i).iter().map(|v| v.to_string()));
        w.write_record(fields).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 output")
}
