//! Plain-text dataset files: one element per line, or `value,label` lines for
//! labelled data. Blank lines and lines starting with `#` are skipped.

use std::io::{BufRead, Write};

use crate::domain::{Dataset, Element, LabeledDataset, OrderedDomain};
use crate::error::{Error, Result};

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
        }
    })
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Parse { line, message: e.to_string() })
}

pub fn read_dataset<E: Element, R: BufRead>(domain: OrderedDomain, reader: R) -> Result<Dataset<E>> {
    let mut rows = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        rows.push(at_line(line, domain.parse_element(&text))?);
    }
    Dataset::new(domain, rows)
}

pub fn read_labeled<E: Element, R: BufRead>(domain: OrderedDomain, reader: R) -> Result<LabeledDataset<E>> {
    let mut rows = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let (value, label) = text
            .split_once(',')
            .ok_or_else(|| Error::Parse { line, message: "expected `value,label`".into() })?;
        let label = match label.trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::Parse { line, message: format!("label must be 0 or 1, got {other:?}") }),
        };
        rows.push((at_line(line, domain.parse_element(value))?, label));
    }
    LabeledDataset::new(domain, rows)
}

pub fn write_dataset<E: Element, W: Write>(data: &Dataset<E>, mut writer: W) -> Result<()> {
    for x in data.rows() {
        writeln!(writer, "{x}")?;
    }
    Ok(())
}

pub fn write_labeled<E: Element, W: Write>(data: &LabeledDataset<E>, mut writer: W) -> Result<()> {
    for (x, label) in data.rows() {
        writeln!(writer, "{x},{}", u8::from(*label))?;
    }
    Ok(())
}
