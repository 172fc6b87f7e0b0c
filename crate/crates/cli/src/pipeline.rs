use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;

use ruepi::conformal::{CpCalibrationFile, NormalizedCpCalibration, SplitCpCalibration};
use ruepi::copula::CopulaCalibration;
use ruepi::dataio::{
    generate_synthetic, load_csv, load_dataset, preprocess, save_dataset, split_by_subject,
    windowize, write_atomic, Normalization, Normalizer, Split, WindowedDataset,
};
use ruepi::interval::PiMethod;
use ruepi::knn::{KnnCalibration, KnnOptions};
use ruepi::metrics::{
    aggregate_reports, build_report, uncertainty_metrics, CorrelationKind, PiReport, ReportConfig,
    ReportRow,
};
use ruepi::neural::{train_decoder, train_forecaster, ModelFile, RueModel, TrainConfig};
use ruepi::{Error, IntervalBatch, Result};

use crate::config::{DataSource, RunConfig};

const SIGMA_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Build and persist the windowed dataset for one seed.
pub fn cmd_preprocess(cfg: &RunConfig, seed: u64) -> Result<()> {
    let (series, assignment) = match &cfg.source {
        DataSource::Synthetic(spec) => {
            let mut spec = spec.clone();
            spec.seed = seed;
            generate_synthetic(&spec)?
        }
        DataSource::Csv { path, channels } => {
            let series = load_csv(path, channels)?;
            let ids: Vec<String> = series.iter().map(|s| s.subject_id.clone()).collect();
            let assignment = split_by_subject(&ids, cfg.split_fractions, seed)?;
            (series, assignment)
        }
    };
    let series = match &cfg.preprocess {
        Some(pp) => {
            let mut cleaned = Vec::with_capacity(series.len());
            for s in &series {
                let out = preprocess(s, pp)?;
                if out.is_empty() {
                    eprintln!("warning: subject '{}' empty after preprocessing", s.subject_id);
                } else {
                    cleaned.push(out);
                }
            }
            cleaned
        }
        None => series,
    };

    let train_refs: Vec<&_> = series
        .iter()
        .filter(|s| assignment.get(&s.subject_id) == Some(&Split::Train))
        .collect();
    let normalizer = Normalizer::fit(&train_refs, Normalization::Zscore)?;
    let normalized = series
        .iter()
        .map(|s| normalizer.apply(s))
        .collect::<Result<Vec<_>>>()?;
    let dataset = windowize(
        &normalized,
        cfg.window.w,
        cfg.window.h,
        &cfg.window.target_channels,
        &assignment,
        normalizer,
    )?;
    save_dataset(&dataset, &cfg.seed_dir(seed).join("dataset"))?;

    let count = |split: Split| dataset.rows_in(split).len();
    let subjects = |split: Split| {
        assignment.values().filter(|&&s| s == split).count()
    };
    println!(
        "dataset seed {seed}: {} rows ({} train / {} validation / {} test), subjects {} / {} / {}, I = {}, O = {}",
        dataset.n_rows(),
        count(Split::Train),
        count(Split::Validation),
        count(Split::Test),
        subjects(Split::Train),
        subjects(Split::Validation),
        subjects(Split::Test),
        dataset.n_inputs(),
        dataset.n_outputs()
    );
    Ok(())
}

fn param_checksum(params: &[f64]) -> u64 {
    params.iter().fold(0u64, |acc, v| {
        acc.wrapping_mul(0x100000001b3).wrapping_add(v.to_bits())
    })
}

/// Two-step training: forecaster first, then the decoder on the frozen
/// encoder. Writes `model.json` with both validation losses.
pub fn cmd_train(cfg: &RunConfig, seed: u64) -> Result<()> {
    let dataset = load_dataset(&cfg.seed_dir(seed).join("dataset"))?;
    let (x_train, y_train) = dataset.subset(Split::Train);
    let (x_val, y_val) = dataset.subset(Split::Validation);
    let train_cfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };

    let (encoder, head, forecaster_report) =
        train_forecaster(&x_train, &y_train, &x_val, &y_val, &cfg.model, &train_cfg)?;
    let checksum_before = param_checksum(&encoder.params_flat());
    let (decoder, decoder_report) =
        train_decoder(&encoder, &x_train, &x_val, &cfg.model, &train_cfg)?;
    let checksum_after = param_checksum(&encoder.params_flat());
    if checksum_before != checksum_after {
        return Err(Error::Numeric("encoder changed during decoder training".into()));
    }
    println!(
        "trained seed {seed}: forecaster val loss {:.6}, decoder val loss {:.6}, encoder checksum {checksum_after:016x} unchanged",
        forecaster_report.best_val_loss, decoder_report.best_val_loss
    );

    let model = RueModel { encoder, head, decoder };
    let file = ModelFile::from_model(
        &model,
        seed,
        forecaster_report.best_val_loss,
        decoder_report.best_val_loss,
    );
    write_json(&cfg.seed_dir(seed).join("model.json"), &file)
}

fn intervals_csv(
    batch: &IntervalBatch,
    predictions: &DMatrix<f64>,
    dataset: &WindowedDataset,
) -> Vec<u8> {
    let mut out = String::from("row,output,horizon,prediction,lower,upper\n");
    for i in 0..batch.n_instances() {
        for j in 0..batch.n_outputs() {
            let (horizon, channel) = dataset.target_position(j);
            out.push_str(&format!(
                "{i},{},{horizon},{},{},{}\n",
                dataset.target_channels[channel],
                predictions[(i, j)],
                batch.lower[(i, j)],
                batch.upper[(i, j)]
            ));
        }
    }
    out.into_bytes()
}

/// Calibrate every requested method on the validation split and apply it
/// to the test split. Test targets are never read here; the leakage guard
/// only allows validation targets into calibration.
pub fn cmd_intervals(cfg: &RunConfig, seed: u64) -> Result<()> {
    let dir = cfg.seed_dir(seed);
    let dataset = load_dataset(&dir.join("dataset"))?;
    let model_file: ModelFile = serde_json::from_slice(&std::fs::read(dir.join("model.json"))?)?;
    let model = model_file.into_model()?;

    let (x_val, y_val) = dataset.subset(Split::Validation);
    let cal = model.compute_errors(&x_val, &y_val)?;

    let test_rows = dataset.rows_in(Split::Test);
    let x_test = DMatrix::from_fn(test_rows.len(), dataset.n_inputs(), |i, j| {
        dataset.inputs[(test_rows[i], j)]
    });
    let predictions = model.predict(&x_test)?;
    let recon = model.reconstruct(&x_test)?;
    let rho_test = DMatrix::from_fn(x_test.nrows(), x_test.ncols(), |i, j| {
        (x_test[(i, j)] - recon[(i, j)]).abs()
    });
    let rho_scalar_test: Vec<f64> = (0..rho_test.nrows()).map(|i| rho_test.row(i).sum()).collect();

    // Per-instance scalar uncertainty, consumed by evaluate.
    let mut unc = String::from("row,rho_scalar\n");
    for (i, r) in rho_scalar_test.iter().enumerate() {
        unc.push_str(&format!("{i},{r}\n"));
    }
    write_atomic(&dir.join("uncertainty.csv"), unc.as_bytes())?;

    let mut failures = Vec::new();
    for &method in &cfg.methods {
        let result = (|| -> Result<()> {
            let batch = match method {
                PiMethod::SplitCp => {
                    let fit = SplitCpCalibration::fit(&cal.err, cfg.alpha)?;
                    write_json(
                        &dir.join("calibration.json"),
                        &CpCalibrationFile {
                            method,
                            alpha: fit.alpha,
                            q_hat: fit.q_hat.clone(),
                            n_cal: fit.n_cal,
                        },
                    )?;
                    fit.intervals(&predictions)?
                }
                PiMethod::NormalizedCp => {
                    let fit = NormalizedCpCalibration::fit(&cal.err, &cal.rho_scalar, cfg.alpha)?;
                    write_json(
                        &dir.join("calibration_normalized.json"),
                        &CpCalibrationFile {
                            method,
                            alpha: fit.alpha,
                            q_hat: fit.q_hat.clone(),
                            n_cal: fit.n_cal,
                        },
                    )?;
                    fit.intervals(&predictions, &rho_scalar_test)?
                }
                PiMethod::Copula => {
                    let fit = CopulaCalibration::fit(&cal, cfg.alpha, cfg.copula_ridge)?;
                    write_json(&dir.join("copula.json"), &fit.to_file())?;
                    fit.intervals(&predictions, &rho_test)?
                }
                PiMethod::Knn => {
                    let fit = KnnCalibration::fit(
                        &cal,
                        cfg.alpha,
                        &KnnOptions {
                            k_override: cfg.knn_k,
                            standardize: false,
                        },
                    )?;
                    write_json(&dir.join("knn.json"), &fit.to_file())?;
                    fit.intervals(&predictions, &rho_test)?
                }
            };
            write_atomic(
                &dir.join(format!("intervals_{}.csv", method.name())),
                &intervals_csv(&batch, &predictions, &dataset),
            )?;
            println!("intervals seed {seed}: wrote intervals_{}.csv", method.name());
            Ok(())
        })();
        if let Err(e) = result {
            eprintln!("method {} failed: {e}", method.name());
            failures.push(method);
        }
    }
    if failures.len() == cfg.methods.len() {
        return Err(Error::Numeric("every interval method failed".into()));
    }
    Ok(())
}

/// Read one `intervals_<method>.csv` back into matrices.
fn read_intervals(
    path: &Path,
    dataset: &WindowedDataset,
    alpha: f64,
    method: PiMethod,
) -> Result<(IntervalBatch, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let c_out = dataset.target_channels.len();
    let n_outputs = dataset.n_outputs();
    let mut cells: BTreeMap<(usize, usize), (f64, f64, f64)> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let field = |k: usize| -> Result<&str> {
            record.get(k).ok_or_else(|| Error::Parse {
                line,
                message: "short record in intervals file".into(),
            })
        };
        let parse_num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("unparseable number '{s}'"),
            })
        };
        let row: usize = field(0)?.parse().map_err(|_| Error::Parse {
            line,
            message: "bad row index".into(),
        })?;
        let channel_name = field(1)?;
        let channel = dataset
            .target_channels
            .iter()
            .position(|c| c == channel_name)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown output '{channel_name}'"),
            })?;
        let horizon: usize = field(2)?.parse().map_err(|_| Error::Parse {
            line,
            message: "bad horizon".into(),
        })?;
        let j = (horizon - 1) * c_out + channel;
        let pred = parse_num(field(3)?)?;
        let lower = parse_num(field(4)?)?;
        let upper = parse_num(field(5)?)?;
        cells.insert((row, j), (pred, lower, upper));
    }
    let n = cells.keys().map(|(i, _)| i + 1).max().unwrap_or(0);
    if cells.len() != n * n_outputs {
        return Err(Error::Schema(format!(
            "intervals file '{}' has {} cells for {}x{}",
            path.display(),
            cells.len(),
            n,
            n_outputs
        )));
    }
    let mut predictions = DMatrix::zeros(n, n_outputs);
    let mut lower = DMatrix::zeros(n, n_outputs);
    let mut upper = DMatrix::zeros(n, n_outputs);
    for ((i, j), (p, lo, hi)) in cells {
        predictions[(i, j)] = p;
        lower[(i, j)] = lo;
        upper[(i, j)] = hi;
    }
    Ok((
        IntervalBatch {
            lower,
            upper,
            alpha,
            method,
        },
        predictions,
    ))
}

fn read_uncertainty(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(1).unwrap_or_default();
        out.push(raw.parse().map_err(|_| Error::Parse {
            line: idx + 2,
            message: format!("unparseable rho_scalar '{raw}'"),
        })?);
    }
    Ok(out)
}

fn report_csv(rows: &[ReportRow]) -> Vec<u8> {
    let mut out = String::from("method,output,horizon,metric,value,normalized_value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method,
            r.output,
            r.horizon,
            r.metric,
            r.value,
            r.normalized_value.unwrap_or(f64::NAN)
        ));
    }
    out.into_bytes()
}

/// Score persisted intervals against the test targets; writes report.csv
/// and report.json (with uncertainty metrics when uncertainty.csv exists).
pub fn cmd_evaluate(cfg: &RunConfig, seed: u64) -> Result<()> {
    let dir = cfg.seed_dir(seed);
    let dataset = load_dataset(&dir.join("dataset"))?;
    let (_, y_test) = dataset.subset(Split::Test);

    let mut methods = Vec::new();
    let mut missing = Vec::new();
    let mut predictions = None;
    for &method in &cfg.methods {
        let path = dir.join(format!("intervals_{}.csv", method.name()));
        if !path.exists() {
            missing.push(method.name());
            continue;
        }
        let (batch, preds) = read_intervals(&path, &dataset, cfg.alpha, method)?;
        predictions.get_or_insert(preds);
        methods.push((method.name().to_string(), batch));
    }
    if !missing.is_empty() {
        eprintln!("missing interval files for: {}", missing.join(", "));
    }
    if methods.is_empty() {
        return Err(Error::InsufficientData("no interval files to evaluate".into()));
    }

    // Range R per output from test-split true targets.
    let ranges: Vec<f64> = (0..y_test.ncols())
        .map(|j| {
            let col = y_test.column(j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max - min
        })
        .collect();

    let report_cfg = ReportConfig::new(cfg.alpha, dataset.h, dataset.target_channels.clone());
    let report = build_report(&methods, &y_test, &ranges, &report_cfg)?;
    write_atomic(&dir.join("report.csv"), &report_csv(&report.rows))?;

    let mut json = serde_json::json!({ "alpha": cfg.alpha, "seed": seed, "rows": report.rows });
    let unc_path = dir.join("uncertainty.csv");
    if unc_path.exists() {
        let rho_scalar = read_uncertainty(&unc_path)?;
        if let Some(preds) = &predictions {
            if rho_scalar.len() == y_test.nrows() {
                let losses: Vec<f64> = (0..y_test.nrows())
                    .map(|i| {
                        (0..y_test.ncols())
                            .map(|j| (y_test[(i, j)] - preds[(i, j)]).abs())
                            .sum::<f64>()
                            / y_test.ncols() as f64
                    })
                    .collect();
                let pearson =
                    uncertainty_metrics(&losses, &rho_scalar, &SIGMA_LEVELS, CorrelationKind::Pearson)?;
                let spearman =
                    uncertainty_metrics(&losses, &rho_scalar, &SIGMA_LEVELS, CorrelationKind::Spearman)?;
                json["uncertainty"] = serde_json::json!({
                    "pearson_correlation": pearson.correlation,
                    "spearman_correlation": spearman.correlation,
                    "aurc": pearson.aurc,
                    "sigma_risk": pearson.sigma_risk,
                });
            }
        }
    }
    write_json(&dir.join("report.json"), &json)?;
    println!("evaluated seed {seed}: {} methods, {} rows", methods.len(), report.rows.len());
    Ok(())
}

/// Aggregate per-seed reports into mean +- std at the top of out_dir.
pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let mut reports = Vec::new();
    for &seed in &cfg.seeds {
        let path = cfg.seed_dir(seed).join("report.json");
        let value: serde_json::Value = serde_json::from_slice(&std::fs::read(&path)?)?;
        let rows: Vec<ReportRow> = serde_json::from_value(value["rows"].clone())?;
        reports.push(PiReport { rows });
    }
    let aggregate = aggregate_reports(&reports)?;
    let mut csv = String::from("method,output,horizon,metric,value,value_std,normalized_value\n");
    for r in &aggregate.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.output,
            r.horizon,
            r.metric,
            r.value,
            r.value_std,
            r.normalized_value.unwrap_or(f64::NAN)
        ));
    }
    write_atomic(&cfg.out_dir.join("report.csv"), csv.as_bytes())?;
    write_json(&cfg.out_dir.join("report.json"), &aggregate)?;
    println!(
        "aggregated {} seeds into {}",
        aggregate.n_seeds,
        cfg.out_dir.join("report.csv").display()
    );
    Ok(())
}

/// Evaluate the KNN method across a ladder of k values on one seed.
pub fn cmd_sweep_k(cfg: &RunConfig, seed: u64, ks: &[usize]) -> Result<()> {
    let dir = cfg.seed_dir(seed);
    let dataset = load_dataset(&dir.join("dataset"))?;
    let model_file: ModelFile = serde_json::from_slice(&std::fs::read(dir.join("model.json"))?)?;
    let model = model_file.into_model()?;
    let (x_val, y_val) = dataset.subset(Split::Validation);
    let cal = model.compute_errors(&x_val, &y_val)?;
    let (x_test, y_test) = dataset.subset(Split::Test);
    let test_errors = model.compute_errors(&x_test, &y_test)?;
    let predictions = model.predict(&x_test)?;

    let ranges: Vec<f64> = (0..y_test.ncols())
        .map(|j| {
            let col = y_test.column(j);
            col.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - col.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect();
    let report_cfg = ReportConfig::new(cfg.alpha, dataset.h, dataset.target_channels.clone());

    let mut csv = String::from("k,metric,value\n");
    for &k in ks {
        if k > cal.n_rows() {
            eprintln!("skipping k = {k}: only {} calibration rows", cal.n_rows());
            continue;
        }
        let fit = KnnCalibration::fit(
            &cal,
            cfg.alpha,
            &KnnOptions {
                k_override: Some(k),
                standardize: false,
            },
        )?;
        let batch = fit.intervals(&predictions, &test_errors.rho)?;
        let rows = build_report(&[("knn".to_string(), batch)], &y_test, &ranges, &report_cfg)?;
        for row in rows.rows.iter().filter(|r| r.output == "pooled" && r.horizon == 1) {
            csv.push_str(&format!("{k},{},{}\n", row.metric, row.value));
        }
        println!("sweep-k seed {seed}: evaluated k = {k}");
    }
    write_atomic(&dir.join("sweep_k.csv"), csv.as_bytes())
}
