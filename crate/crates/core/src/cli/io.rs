//! CSV interchange.
//!
//! Columns are named, never positional: `a`, `c1..ck`, `l1..lp`, `m`, `y`
//! in any order. `k` and `p` follow from the header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dataset, ObservedRecord, ValidationReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    A,
    C(usize),
    L(usize),
    M,
    Y,
}

fn parse_column(name: &str) -> Option<Column> {
    let indexed = |prefix: char| -> Option<usize> {
        let rest = name.strip_prefix(prefix)?;
        if rest.starts_with('0') {
            return None;
        }
        rest.parse::<usize>().ok().filter(|i| *i >= 1).map(|i| i - 1)
    };
    match name {
        "a" => Some(Column::A),
        "m" => Some(Column::M),
        "y" => Some(Column::Y),
        _ => indexed('c')
            .map(Column::C)
            .or_else(|| indexed('l').map(Column::L)),
    }
}

struct Layout {
    columns: Vec<Column>,
    names: Vec<String>,
    k: usize,
    p: usize,
}

fn parse_header(header: &csv::StringRecord) -> Result<Layout> {
    let mut columns = Vec::with_capacity(header.len());
    let mut names = Vec::with_capacity(header.len());
    for name in header.iter() {
        let col = parse_column(name).ok_or_else(|| Error::MalformedHeader(format!("unknown column `{name}`")))?;
        if columns.contains(&col) {
            return Err(Error::MalformedHeader(format!("duplicated column `{name}`")));
        }
        columns.push(col);
        names.push(name.to_string());
    }
    for (required, name) in [(Column::A, "a"), (Column::M, "m"), (Column::Y, "y")] {
        if !columns.contains(&required) {
            return Err(Error::MalformedHeader(format!("missing column `{name}`")));
        }
    }
    let k = columns.iter().filter(|c| matches!(c, Column::C(_))).count();
    let p = columns.iter().filter(|c| matches!(c, Column::L(_))).count();
    for i in 0..k {
        if !columns.contains(&Column::C(i)) {
            return Err(Error::MalformedHeader(format!("missing column `c{}`", i + 1)));
        }
    }
    for j in 0..p {
        if !columns.contains(&Column::L(j)) {
            return Err(Error::MalformedHeader(format!("missing column `l{}`", j + 1)));
        }
    }
    Ok(Layout { columns, names, k, p })
}

/// Parses CSV text with a header row into a validated dataset.
pub fn read_csv_from<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let layout = parse_header(rdr.headers()?)?;
    let mut records = Vec::new();
    let mut bad_treatment = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = idx + 1;
        let mut rec = ObservedRecord::new(0, vec![0.0; layout.k], vec![0.0; layout.p], 0.0, 0.0);
        for ((col, name), field) in layout.columns.iter().zip(&layout.names).zip(row.iter()) {
            let parse_err = |message: String| Error::Parse {
                row: row_no,
                column: name.clone(),
                message,
            };
            if *col == Column::A {
                let a: i64 = field
                    .parse()
                    .map_err(|_| parse_err(format!("`{field}` is not an integer")))?;
                match u8::try_from(a) {
                    Ok(v) => rec.a = v,
                    Err(_) => bad_treatment.push(Violation::NonBinaryTreatment { index: idx, value: a }),
                }
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("`{field}` is not a decimal number")))?;
            match *col {
                Column::C(i) => rec.c[i] = v,
                Column::L(j) => rec.l[j] = v,
                Column::M => rec.m = v,
                Column::Y => rec.y = v,
                Column::A => unreachable!(),
            }
        }
        records.push(rec);
    }
    if !bad_treatment.is_empty() {
        return Err(Error::Validation(ValidationReport {
            violations: bad_treatment,
        }));
    }
    Dataset::checked(layout.k, layout.p, records)
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file)
}

/// Writes the header `a,c1..ck,l1..lp,m,y` and one row per record.
/// Floats use the shortest text that parses back to the same value.
pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["a".to_string()];
    header.extend((1..=dataset.k()).map(|i| format!("c{i}")));
    header.extend((1..=dataset.p()).map(|j| format!("l{j}")));
    header.push("m".into());
    header.push("y".into());
    wtr.write_record(&header)?;
    for r in dataset.records() {
        let mut row = vec![r.a.to_string()];
        row.extend(r.c.iter().map(|v| v.to_string()));
        row.extend(r.l.iter().map(|v| v.to_string()));
        row.push(r.m.to_string());
        row.push(r.y.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, std::io::BufWriter::new(file))
}
