//! Minimal TSV plumbing shared by the table formats.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Calls `row` for every data line after checking the header. Line numbers
/// passed to `row` are 1-based and count the header.
pub(crate) fn for_each_row<R, F>(reader: R, header: &[&str], mut row: F) -> Result<()>
where
    R: BufRead,
    F: FnMut(usize, &[&str]) -> Result<()>,
{
    let mut lines = reader.lines();
    let first = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
    };
    let expected = header.join("\t");
    if first.trim_end_matches('\r') != expected {
        return Err(Error::Parse { line: 1, message: format!("expected header {expected:?}, found {first:?}") });
    }
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        row(line_no, &fields)?;
    }
    Ok(())
}

pub(crate) fn parse_field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Parse { line, message: format!("invalid {name}: {raw:?}") })
}

pub(crate) fn write_header<W: Write>(out: &mut W, header: &[&str]) -> Result<()> {
    writeln!(out, "{}", header.join("\t"))?;
    Ok(())
}
