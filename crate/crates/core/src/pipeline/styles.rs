//! Style tables and their CSV form:
//! `image_id,kind,mu_0,..,mu_{C-1},sigma_0,..,sigma_{C-1}`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::{StyleKind, StyleVector};

#[derive(Debug, Clone, PartialEq)]
pub struct StyleRow {
    pub image_id: u64,
    /// `background` or `object_<i>`.
    pub label: String,
    pub style: StyleVector,
}

/// Style vectors in processing order.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleTable {
    channels: usize,
    rows: Vec<StyleRow>,
}

impl StyleTable {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            rows: Vec::new(),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn rows(&self) -> &[StyleRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, image_id: u64, label: impl Into<String>, style: StyleVector) -> Result<()> {
        if style.channels() != self.channels {
            return Err(Error::shape(format!(
                "{}-channel style in a {}-channel table",
                style.channels(),
                self.channels
            )));
        }
        self.rows.push(StyleRow {
            image_id,
            label: label.into(),
            style,
        });
        Ok(())
    }

    pub fn styles(&self) -> impl Iterator<Item = &StyleVector> {
        self.rows.iter().map(|r| &r.style)
    }

    pub fn styles_of(&self, kind: StyleKind) -> impl Iterator<Item = &StyleVector> {
        self.styles().filter(move |s| s.kind == kind)
    }

    pub fn rows_for(&self, image_id: u64) -> impl Iterator<Item = &StyleRow> {
        self.rows.iter().filter(move |r| r.image_id == image_id)
    }
}

fn header(channels: usize) -> Vec<String> {
    let mut h = vec!["image_id".to_string(), "kind".to_string()];
    h.extend((0..channels).map(|i| format!("mu_{i}")));
    h.extend((0..channels).map(|i| format!("sigma_{i}")));
    h
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(format!("{}: {other:?}", path.display())),
    }
}

/// Writes the table as CSV. Floats use the shortest representation that
/// parses back to the same `f32`.
pub fn export_style_table(table: &StyleTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header(table.channels))
        .map_err(|e| csv_err(path, e))?;
    for row in &table.rows {
        let mut rec = vec![row.image_id.to_string(), row.label.clone()];
        rec.extend(row.style.mu.iter().chain(&row.style.sigma).map(|v| v.to_string()));
        w.write_record(rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn kind_of_label(label: &str) -> Result<StyleKind> {
    if label == "background" {
        Ok(StyleKind::Background)
    } else if label.starts_with("object") {
        Ok(StyleKind::Object)
    } else {
        label.parse()
    }
}

pub fn read_style_table(path: impl AsRef<Path>) -> Result<StyleTable> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let head = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if head.len() < 2 || (head.len() - 2) % 2 != 0 {
        return Err(Error::format(format!(
            "{}: malformed style header",
            path.display()
        )));
    }
    let channels = (head.len() - 2) / 2;
    if head.iter().collect::<Vec<_>>() != header(channels) {
        return Err(Error::format(format!(
            "{}: unexpected style header",
            path.display()
        )));
    }
    let mut table = StyleTable::new(channels);
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |what: &str| Error::format(format!("{} row {}: {what}", path.display(), n + 1));
        let image_id = rec[0].parse().map_err(|_| bad("bad image_id"))?;
        let label = rec[1].to_string();
        let vals = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f32>().map_err(|_| bad("bad number")))
            .collect::<Result<Vec<_>>>()?;
        let style = StyleVector::new(
            vals[..channels].to_vec(),
            vals[channels..].to_vec(),
            kind_of_label(&label)?,
        )?;
        table.push(image_id, label, style)?;
    }
    Ok(table)
}
