//! Model registry: a directory of weight files plus a manifest CSV.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Criterion, ModelSummary, TrainedModel};
use crate::error::{Error, Result};
use crate::fmt::real;

pub const MANIFEST_HEADER: &str =
    "model_id,alpha,beta_d,peak_lr,order_g,order_h,recon_loss,dev_loss,criterion";

pub const MANIFEST_FILE: &str = "manifest.csv";

/// A manifest row: the selection summary plus the criteria that picked it.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub summary: ModelSummary,
    pub criteria: Vec<Criterion>,
}

pub fn weight_path(dir: &Path, model_id: &str) -> PathBuf {
    dir.join(format!("{model_id}.json"))
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for r in rows {
        let s = &r.summary;
        let crit: Vec<&str> = r.criteria.iter().map(|c| c.name()).collect();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.model_id,
            real(s.alpha),
            real(s.beta_d),
            real(s.peak_lr),
            real(s.order_g),
            real(s.order_h),
            real(s.recon_loss),
            real(s.dev_loss),
            crit.join(";")
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != MANIFEST_HEADER {
        return Err(Error::Parse(format!(
            "{}: manifest header must be `{MANIFEST_HEADER}`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("{}: row {}: column {k}: {e}", path.display(), i + 1))
            })
        };
        let criteria = rec[8]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Criterion>())
            .collect::<Result<Vec<_>>>()?;
        rows.push(ManifestRow {
            summary: ModelSummary {
                model_id: rec[0].to_string(),
                alpha: num(1)?,
                beta_d: num(2)?,
                peak_lr: num(3)?,
                order_g: num(4)?,
                order_h: num(5)?,
                recon_loss: num(6)?,
                dev_loss: num(7)?,
            },
            criteria,
        });
    }
    Ok(rows)
}

/// Writes each model's weights as `<id>.json` and the manifest.
pub fn write_registry(dir: &Path, models: &[TrainedModel]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for m in models {
        m.model.save(&weight_path(dir, &m.id))?;
    }
    let rows: Vec<ManifestRow> = models
        .iter()
        .map(|m| ManifestRow {
            summary: m.summary(),
            criteria: m.selection.into_iter().collect(),
        })
        .collect();
    write_manifest(&dir.join(MANIFEST_FILE), &rows)
}
