//! Plain-text field snapshots.
//!
//! A snapshot is a TOML header, a line containing `---`, then one value per
//! line in row-major grid order (last axis fastest). Values are written with
//! shortest round-trip formatting, so reading back is bit-exact.

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, ScalarField};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

const SEPARATOR: &str = "---";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub name: String,
    pub n: usize,
    pub sizes: Vec<usize>,
    pub spacing: Vec<f64>,
    pub preset: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub header: SnapshotHeader,
    pub field: ScalarField,
}

impl FieldSnapshot {
    pub fn new(name: &str, grid: &PeriodicGrid, preset: &str, field: ScalarField) -> Result<Self> {
        if field.len() != grid.len() {
            return Err(Error::Argument(format!(
                "field has {} values, grid has {} points",
                field.len(),
                grid.len()
            )));
        }
        Ok(Self {
            header: SnapshotHeader {
                name: name.into(),
                n: grid.n(),
                sizes: grid.sizes().to_vec(),
                spacing: grid.spacing().to_vec(),
                preset: preset.into(),
            },
            field,
        })
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.header.n, &self.header.sizes)
    }

    pub fn to_text(&self) -> String {
        let mut out = toml::to_string(&self.header).expect("snapshot header serializes");
        out.push_str(SEPARATOR);
        out.push('\n');
        for v in &self.field.values {
            writeln!(out, "{v}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (head, body) = text
            .split_once(&format!("\n{SEPARATOR}\n"))
            .ok_or_else(|| Error::Config("snapshot has no header separator".into()))?;
        let header: SnapshotHeader =
            toml::from_str(head).map_err(|e| Error::Config(format!("snapshot header: {e}")))?;
        let values = body
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("snapshot value {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = PeriodicGrid::new(header.n, &header.sizes)?;
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "snapshot has {} values, header implies {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            header,
            field: ScalarField::new(values),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
