use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataio::preprocess::Normalizer;
use crate::dataio::split::Split;
use crate::dataio::window::WindowedDataset;
use crate::error::{Error, Result};

/// Sidecar metadata persisted with the CSV matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetMeta {
    w: usize,
    h: usize,
    channel_names: Vec<String>,
    target_channels: Vec<String>,
    feature_names: Vec<String>,
    target_names: Vec<String>,
    normalizer: Normalizer,
}

/// Write `content` atomically: to a sibling temp file, then rename.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| Error::Config(format!("path '{}' has no parent", path.display())))?;
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, content)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn matrix_csv(names: &[String], matrix: &DMatrix<f64>) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", matrix[(i, j)]));
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn parse_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let mut data = Vec::new();
    let mut n_rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(Error::Parse {
                line: idx + 2,
                message: format!("expected {} fields, got {}", names.len(), record.len()),
            });
        }
        for field in record.iter() {
            data.push(field.parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 2,
                message: format!("unparseable value '{field}'"),
            })?);
        }
        n_rows += 1;
    }
    Ok((names.clone(), DMatrix::from_row_slice(n_rows, names.len(), &data)))
}

/// Persist the dataset as a directory: `inputs.csv`, `targets.csv`,
/// `split.csv` (row, split, subject) and `meta.json`.
pub fn save_dataset(dataset: &WindowedDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("inputs.csv"), &matrix_csv(&dataset.feature_names, &dataset.inputs))?;
    write_atomic(&dir.join("targets.csv"), &matrix_csv(&dataset.target_names, &dataset.targets))?;

    let mut split_csv = String::from("row,split,subject\n");
    for i in 0..dataset.n_rows() {
        split_csv.push_str(&format!("{i},{},{}\n", dataset.split[i].as_str(), dataset.subjects[i]));
    }
    write_atomic(&dir.join("split.csv"), split_csv.as_bytes())?;

    let meta = DatasetMeta {
        w: dataset.w,
        h: dataset.h,
        channel_names: dataset.channel_names.clone(),
        target_channels: dataset.target_channels.clone(),
        feature_names: dataset.feature_names.clone(),
        target_names: dataset.target_names.clone(),
        normalizer: dataset.normalizer.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    write_atomic(&dir.join("meta.json"), &json)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<WindowedDataset> {
    let meta: DatasetMeta = serde_json::from_slice(&fs::read(dir.join("meta.json"))?)?;
    let (feature_names, inputs) = parse_matrix_csv(&dir.join("inputs.csv"))?;
    let (target_names, targets) = parse_matrix_csv(&dir.join("targets.csv"))?;
    if feature_names != meta.feature_names || target_names != meta.target_names {
        return Err(Error::Schema("meta.json names disagree with CSV headers".into()));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(dir.join("split.csv"))?;
    let mut split = Vec::new();
    let mut subjects = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row: usize = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: idx + 2,
                message: "bad row index in split.csv".into(),
            })?;
        if row != idx {
            return Err(Error::Schema(format!("split.csv rows out of order at {idx}")));
        }
        split.push(Split::parse(record.get(1).unwrap_or_default())?);
        subjects.push(record.get(2).unwrap_or_default().to_string());
    }
    if split.len() != inputs.nrows() || targets.nrows() != inputs.nrows() {
        return Err(Error::Schema(format!(
            "row counts disagree: inputs {}, targets {}, split {}",
            inputs.nrows(),
            targets.nrows(),
            split.len()
        )));
    }
    if inputs.ncols() != meta.w * meta.channel_names.len()
        || targets.ncols() != meta.h * meta.target_channels.len()
    {
        return Err(Error::Schema("matrix shapes disagree with meta.json".into()));
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        split,
        subjects,
        feature_names,
        target_names,
        normalizer: meta.normalizer,
        w: meta.w,
        h: meta.h,
        channel_names: meta.channel_names,
        target_channels: meta.target_channels,
    })
}
