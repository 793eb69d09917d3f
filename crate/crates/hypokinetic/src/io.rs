//! CSV series and JSON metadata writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::ModelConfig;
use crate::error::Result;
use crate::evolution::Record;
use crate::model::Model;

pub fn write_series(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GridRow {
    v: f64,
    w: f64,
    m: f64,
}

/// Nodes, weights and equilibrium values, one row per node.
pub fn write_grid(path: &Path, model: &Model) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let m = model.equilibrium().values();
    for (k, (&v, &wt)) in model.grid.nodes().iter().zip(model.grid.weights()).enumerate() {
        w.serialize(GridRow { v, w: wt, m: m[k] })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub dx: f64,
    pub nv: usize,
    pub vmax: f64,
    pub tail_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub config: ModelConfig,
    pub grid: GridSpec,
    pub code_version: &'static str,
}

impl RunMetadata {
    pub fn new(model: &Model) -> Self {
        Self {
            config: model.cfg,
            grid: GridSpec {
                nx: model.nx(),
                dx: model.space.dx,
                nv: model.nv(),
                vmax: model.grid.vmax(),
                tail_exponent: model.grid.tail_exponent(),
            },
            code_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_config(path: &Path) -> Result<ModelConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let r = Record { t: 0.5, h_norm: 1.0, triple_norm: 0.9, micro_norm: 0.1, mass: 0.0, boundary_diss: 0.0 };
        write_series(&path, &[r, r]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,H_norm,triple_norm,micro_norm,mass,boundary_diss");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let cfg = ModelConfig { s: 0.6, ..Default::default() };
        write_json(&path, &cfg).unwrap();
        assert_eq!(read_config(&path).unwrap(), cfg);
    }
}
