//! Directory-level batch stages behind the `fg` subcommands.
//!
//! Every stage processes its items on a pool sized by the run
//! configuration, collects results in input order and reports per-item
//! failures instead of aborting the batch.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::catalog::{build_catalog, parse_filename, Catalog, MonthKey, Query, TileKind};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fusion::{fuse_query, FusionReport};
use crate::metrics::{confusion, EvalReport, QueryEval};
use crate::preprocess::{load_stack, read_stack, write_stack};
use crate::raster::{read_label_tiff, read_mask_png, write_mask_png, BinaryMask};
use crate::segment::{import_mask, write_prediction, IndexSegmenter, MaskSidecar, Prediction, Predictor};
use crate::synth::{generate_corpus, CorpusManifest, CorpusSpec};

/// One item that could not be processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub item: String,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn new(item: impl Into<String>, err: &Error) -> Self {
        Failure {
            item: item.into(),
            kind: err.kind().to_string(),
            message: err.to_string(),
        }
    }
}

/// Outcome of a batch stage. `written` holds output file names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub written: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub skipped: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub no_data: Vec<String>,
    pub failed: Vec<Failure>,
}

impl StageSummary {
    /// True when any item failed or had no data.
    pub fn is_partial(&self) -> bool {
        !self.failed.is_empty() || !self.no_data.is_empty()
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Files directly inside `dir` with extension `ext`, sorted by name.
fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Scans `data_dir` and writes the catalog to `out`.
pub fn run_catalog(data_dir: &Path, out: &Path, cfg: &RunConfig) -> Result<Catalog> {
    let catalog = build_catalog(data_dir, &cfg.filename_grammar)?;
    write_json(&catalog, out)?;
    Ok(catalog)
}

/// Writes one stack per band-complete acquisition in the catalog.
pub fn run_preprocess(catalog: &Catalog, out_dir: &Path, cfg: &RunConfig) -> Result<StageSummary> {
    create_dir(out_dir)?;
    let candidates: Vec<_> = catalog.all_candidates().into_values().flatten().collect();
    let results: Vec<(String, Result<PathBuf>)> = cfg.thread_pool()?.install(|| {
        candidates
            .par_iter()
            .map(|c| {
                let item = format!("{}_{}", c.satellite, c.date);
                let res = load_stack(&c.records, &cfg.normalization).and_then(|s| write_stack(&s, out_dir));
                (item, res)
            })
            .collect()
    });
    let mut summary = StageSummary::default();
    for (item, res) in results {
        match res {
            Ok(path) => summary.written.push(file_name(&path)),
            Err(e) => summary.failed.push(Failure::new(item, &e)),
        }
    }
    summary.written.sort();
    Ok(summary)
}

/// Runs `predictor` over every stack in `stacks_dir`. SAR stacks are listed as
/// skipped when the predictor needs optical bands.
pub fn run_predict(predictor: &dyn Predictor, stacks_dir: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<StageSummary> {
    create_dir(out_dir)?;
    let stacks = list_files(stacks_dir, "fgst")?;
    let level = cfg.fusion.ratio_binarize_level;
    let results: Vec<(String, Result<Option<PathBuf>>)> = cfg.thread_pool()?.install(|| {
        stacks
            .par_iter()
            .map(|path| {
                let res = read_stack(path).and_then(|stack| match predictor.predict(&stack) {
                    Ok(mask) => {
                        let stem = stack.stem();
                        let source = format!("{}:{stem}", predictor.name());
                        let p = Prediction::from_stack(&stack, mask, source, level);
                        write_prediction(&p, out_dir, &stem).map(Some)
                    }
                    Err(Error::NonOpticalStack { .. }) => Ok(None),
                    Err(e) => Err(e),
                });
                (file_name(path), res)
            })
            .collect()
    });
    let mut summary = StageSummary::default();
    for (item, res) in results {
        match res {
            Ok(Some(path)) => summary.written.push(file_name(&path)),
            Ok(None) => summary.skipped.push(item),
            Err(e) => summary.failed.push(Failure::new(item, &e)),
        }
    }
    Ok(summary)
}

pub fn run_predict_index(stacks_dir: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<StageSummary> {
    let segmenter = IndexSegmenter {
        params: cfg.segmenter,
        table: cfg.normalization.clone(),
    };
    run_predict(&segmenter, stacks_dir, out_dir, cfg)
}

/// Validates externally produced masks (`*.fgpm` plus `*.json` sidecars) and
/// copies them into `out_dir` under their original stems.
pub fn run_predict_import(masks_dir: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<StageSummary> {
    create_dir(out_dir)?;
    let masks = list_files(masks_dir, "fgpm")?;
    let level = cfg.fusion.ratio_binarize_level;
    let results: Vec<(String, Result<PathBuf>)> = cfg.thread_pool()?.install(|| {
        masks
            .par_iter()
            .map(|path| {
                let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
                let res = import_mask(path, path.with_extension("json"), level)
                    .and_then(|p| write_prediction(&p, out_dir, &stem));
                (file_name(path), res)
            })
            .collect()
    });
    let mut summary = StageSummary::default();
    for (item, res) in results {
        match res {
            Ok(path) => summary.written.push(file_name(&path)),
            Err(e) => summary.failed.push(Failure::new(item, &e)),
        }
    }
    Ok(summary)
}

pub type MaskGroups = BTreeMap<MonthKey, Vec<PathBuf>>;

/// Groups the masks in `masks_dir` by month using only their sidecars.
/// Unreadable sidecars are returned as failures.
pub fn index_masks(masks_dir: &Path) -> Result<(MaskGroups, Vec<Failure>)> {
    let mut groups: BTreeMap<MonthKey, Vec<PathBuf>> = BTreeMap::new();
    let mut failed = Vec::new();
    for path in list_files(masks_dir, "fgpm")? {
        let key = MaskSidecar::read(path.with_extension("json"))
            .and_then(|s| MonthKey::new(&s.lon, &s.lat, s.year, s.month));
        match key {
            Ok(key) => groups.entry(key).or_default().push(path),
            Err(e) => failed.push(Failure::new(file_name(&path), &e)),
        }
    }
    Ok((groups, failed))
}

/// Fuses one query's masks and writes `deforestation_*.png` and its report.
pub fn fuse_one(query: &Query, paths: &[PathBuf], out_dir: &Path, cfg: &RunConfig) -> Result<FusionReport> {
    let predictions = paths
        .iter()
        .map(|p| import_mask(p, p.with_extension("json"), cfg.fusion.ratio_binarize_level))
        .collect::<Result<Vec<Prediction>>>()?;
    let (mask, mut report) = fuse_query(query, &predictions, &cfg.fusion)?;
    let stem = query.output_stem();
    let png = format!("{stem}.png");
    write_mask_png(&mask, out_dir.join(&png))?;
    report.output = Some(png);
    write_json(&report, out_dir.join(format!("{stem}.json")))?;
    Ok(report)
}

/// Fuses every query and writes `summary.json` next to the outputs.
pub fn run_fuse(masks_dir: &Path, queries: &[Query], out_dir: &Path, cfg: &RunConfig) -> Result<StageSummary> {
    create_dir(out_dir)?;
    let (groups, mut failed) = index_masks(masks_dir)?;
    let empty = Vec::new();
    let results: Vec<(String, Result<FusionReport>)> = cfg.thread_pool()?.install(|| {
        queries
            .par_iter()
            .map(|q| {
                let paths = groups.get(q).unwrap_or(&empty);
                (q.to_string(), fuse_one(q, paths, out_dir, cfg))
            })
            .collect()
    });
    let mut summary = StageSummary::default();
    for (item, res) in results {
        match res {
            Ok(report) => summary.written.extend(report.output),
            Err(Error::NoData { .. }) => summary.no_data.push(item),
            Err(e) => summary.failed.push(Failure::new(item, &e)),
        }
    }
    summary.failed.append(&mut failed);
    write_json(&summary, out_dir.join("summary.json"))?;
    Ok(summary)
}

const OUTPUT_PREFIX: &str = "deforestation_";

/// Month key text of a fused output or label file, if `name` is one.
fn mask_key(name: &str, cfg: &RunConfig) -> Option<String> {
    if let Some(key) = name.strip_prefix(OUTPUT_PREFIX).and_then(|s| s.strip_suffix(".png")) {
        return Some(key.to_string());
    }
    match parse_filename(name, &cfg.filename_grammar) {
        Ok(r) if r.kind == TileKind::Label => Some(r.month_key().to_string()),
        _ => None,
    }
}

fn read_mask(path: &Path) -> Result<BinaryMask> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => read_mask_png(path),
        _ => read_label_tiff(path),
    }
}

/// Output or label masks below `dir`, keyed by month text.
fn collect_masks(dir: &Path, cfg: &RunConfig) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(e.path().unwrap_or(dir).to_path_buf(), e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        if let Some(key) = mask_key(&entry.file_name().to_string_lossy(), cfg) {
            out.entry(key).or_insert_with(|| entry.path().to_path_buf());
        }
    }
    Ok(out)
}

/// Scores every fused map in `pred_dir` against the matching label found
/// anywhere below `truth_dir`. Labels without a prediction are ignored;
/// predictions without a label are failures.
pub fn run_evaluate(pred_dir: &Path, truth_dir: &Path, cfg: &RunConfig) -> Result<(EvalReport, Vec<Failure>)> {
    let preds = collect_masks(pred_dir, cfg)?;
    let truths = collect_masks(truth_dir, cfg)?;
    let pairs: Vec<(&String, &PathBuf)> = preds.iter().collect();
    let results: Vec<(String, Result<QueryEval>)> = cfg.thread_pool()?.install(|| {
        pairs
            .par_iter()
            .map(|(key, pred)| {
                let res = match truths.get(*key) {
                    None => Err(Error::NoData {
                        query: format!("{key} (no label)"),
                    }),
                    Some(truth) => read_mask(pred)
                        .and_then(|p| Ok((p, read_mask(truth)?)))
                        .and_then(|(p, t)| confusion(&p, &t))
                        .and_then(|c| QueryEval::new(key.as_str(), c)),
                };
                (key.to_string(), res)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (key, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(Failure::new(key, &e)),
        }
    }
    Ok((EvalReport::from_queries(rows)?, failed))
}

pub fn run_synth(spec: &CorpusSpec, out_dir: &Path) -> Result<CorpusManifest> {
    generate_corpus(spec, out_dir)
}
