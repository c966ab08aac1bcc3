//! Deterministic synthetic corpora with known ground truth.
//!
//! Each scene is one grid cell. Its deforested area is a union of random
//! rectangles that only grows from month to month. Optical bands carry
//! reflectances that put forest at NBR 0.6 / NDVI 0.7 and cleared ground at
//! NBR -0.2 / NDVI -0.1; SAR bands carry backscatter in dB. Landsat 8 tiles
//! are written at their native 85×85 size.
//!
//! An outlier date is an extra Sentinel-2 acquisition that shows intact
//! forest everywhere, so any optical predictor returns an all-black mask
//! for it.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{format_filename, FilenameGrammar, TileKind, TileRecord};
use crate::error::{Error, Result};
use crate::preprocess::select_bands;
use crate::raster::{write_tiff_f32, write_tiff_u16, write_tiff_u8, BandRaster, BinaryMask, GridCoord, Satellite, TILE_SIZE};

pub const LANDSAT_SIDE: usize = 85;

const OPTICAL_SCALE: f64 = 10_000.0;
const SAR_NOISE_DB_PER_UNIT: f64 = 30.0;

/// Acquisitions per satellite per month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateCounts {
    pub sentinel1: usize,
    pub sentinel2: usize,
    pub landsat8: usize,
}

impl Default for DateCounts {
    fn default() -> Self {
        DateCounts {
            sentinel1: 1,
            sentinel2: 2,
            landsat8: 10,
        }
    }
}

impl DateCounts {
    pub fn get(&self, satellite: Satellite) -> usize {
        match satellite {
            Satellite::Sentinel1 => self.sentinel1,
            Satellite::Sentinel2 => self.sentinel2,
            Satellite::Landsat8 => self.landsat8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub lon: String,
    pub lat: String,
    pub months: Vec<(i32, u32)>,
    pub dates: DateCounts,
    /// Standard deviation of the additive noise in reflectance units.
    pub noise_sigma: f64,
    pub outlier_rate: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        GridCoord::longitude(&self.lon)?;
        GridCoord::latitude(&self.lat)?;
        for &(year, month) in &self.months {
            crate::raster::Date::new(year, month, 1)?;
        }
        let per_month = self.dates.sentinel1.max(self.dates.sentinel2 + 1).max(self.dates.landsat8);
        if per_month > 28 {
            return Err(Error::Config(format!("{per_month} dates do not fit in a month")));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise_sigma {} must be finite and >= 0", self.noise_sigma)));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::Config(format!("outlier_rate {} must lie in [0, 1]", self.outlier_rate)));
        }
        Ok(())
    }
}

/// Surface reflectance of each optical band, or backscatter in dB for SAR.
pub fn band_value(satellite: Satellite, band: &str, deforested: bool) -> f64 {
    let (forest, cleared) = match (satellite, band) {
        (Satellite::Sentinel1, "VV") => (-7.0, -12.0),
        (Satellite::Sentinel1, "VH") => (-13.0, -19.0),
        // red
        (_, "B4") => (0.35 * 0.3 / 1.7, 0.2 * 1.1 / 0.9),
        // nir
        (Satellite::Sentinel2, "B8") | (Satellite::Landsat8, "B5") => (0.35, 0.2),
        // swir 1
        (Satellite::Sentinel2, "B11") | (Satellite::Landsat8, "B6") => (0.35 * 0.4 / 1.6, 0.3),
        // red edge
        (Satellite::Sentinel2, "B7") => (0.28, 0.2),
        // swir 2
        (Satellite::Sentinel2, "B12") | (Satellite::Landsat8, "B7") => (0.04, 0.25),
        _ => (0.0, 0.0),
    };
    if deforested {
        cleared
    } else {
        forest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

fn random_rect(rng: &mut ChaCha8Rng) -> Rect {
    let w = rng.random_range(30..=90);
    let h = rng.random_range(30..=90);
    let x0 = rng.random_range(0..=TILE_SIZE - w);
    let y0 = rng.random_range(0..=TILE_SIZE - h);
    Rect {
        x0,
        y0,
        x1: x0 + w,
        y1: y0 + h,
    }
}

fn paint(mask: &mut [u8], r: Rect) {
    for y in r.y0..r.y1 {
        mask[y * TILE_SIZE + r.x0..y * TILE_SIZE + r.x1].fill(1);
    }
}

/// Ground truth for `months` consecutive months of the scene with this seed.
/// The first month covers at least a tenth of the tile; every later month
/// adds one rectangle.
pub fn render_truth(seed: u64, months: usize) -> Vec<BinaryMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7275_7468);
    let mut cells = vec![0u8; TILE_SIZE * TILE_SIZE];
    let mut out = Vec::with_capacity(months);
    for m in 0..months {
        if m == 0 {
            let first = rng.random_range(2..=3);
            for _ in 0..first {
                paint(&mut cells, random_rect(&mut rng));
            }
            while cells.iter().filter(|&&c| c == 1).count() * 10 < cells.len() {
                paint(&mut cells, random_rect(&mut rng));
            }
        } else {
            paint(&mut cells, random_rect(&mut rng));
        }
        out.push(BinaryMask::new(TILE_SIZE, TILE_SIZE, cells.clone()).expect("binary cells"));
    }
    out
}

/// Corner-aligned nearest sampling of the truth onto a `side`×`side` grid.
fn sample_truth(truth: &BinaryMask, side: usize) -> Vec<bool> {
    if side == TILE_SIZE {
        return truth.values().iter().map(|&v| v == 1).collect();
    }
    let step = (TILE_SIZE - 1) as f64 / (side - 1) as f64;
    let mut out = Vec::with_capacity(side * side);
    for j in 0..side {
        let y = (j as f64 * step).round() as usize;
        for i in 0..side {
            let x = (i as f64 * step).round() as usize;
            out.push(truth.get(x, y));
        }
    }
    out
}

fn distinct_days(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    let mut days: Vec<u32> = rand::seq::index::sample(rng, 28, n).into_iter().map(|d| d as u32 + 1).collect();
    days.sort_unstable();
    days
}

/// One scene's entry in the corpus manifest. Paths are relative to the
/// corpus root, in emission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub seed: u64,
    pub lon: String,
    pub lat: String,
    pub files: Vec<String>,
    /// Acquisition stems of the injected all-forest dates.
    pub outliers: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub scenes: Vec<SceneManifest>,
}

impl CorpusManifest {
    pub fn file_count(&self) -> usize {
        self.scenes.iter().map(|s| s.files.len()).sum()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

struct Writer<'a> {
    root: &'a Path,
    subdir: &'a str,
    grammar: FilenameGrammar,
    files: Vec<String>,
}

impl Writer<'_> {
    fn target(&mut self, record: &TileRecord) -> PathBuf {
        let rel = format!("{}/{}", self.subdir, format_filename(record, &self.grammar));
        let path = self.root.join(&rel);
        self.files.push(rel);
        path
    }
}

/// Writes every tile of the scene below `root/subdir`.
pub fn generate_scene(spec: &SceneSpec, root: impl AsRef<Path>, subdir: &str) -> Result<SceneManifest> {
    spec.validate()?;
    let root = root.as_ref();
    let mut manifest = SceneManifest {
        seed: spec.seed,
        lon: spec.lon.clone(),
        lat: spec.lat.clone(),
        files: Vec::new(),
        outliers: Vec::new(),
    };
    if spec.months.is_empty() {
        return Ok(manifest);
    }
    let dir = root.join(subdir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let lon = GridCoord::longitude(&spec.lon)?;
    let lat = GridCoord::latitude(&spec.lat)?;
    let truths = render_truth(spec.seed, spec.months.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut writer = Writer {
        root,
        subdir,
        grammar: FilenameGrammar::default(),
        files: Vec::new(),
    };

    for (&(year, month), truth) in spec.months.iter().zip(&truths) {
        let label = TileRecord {
            satellite: None,
            band: None,
            lon: lon.clone(),
            lat: lat.clone(),
            year,
            month,
            day: None,
            path: PathBuf::new(),
            kind: TileKind::Label,
        };
        write_tiff_u8(TILE_SIZE, TILE_SIZE, truth.values(), writer.target(&label))?;

        let outlier = rng.random_bool(spec.outlier_rate);
        for satellite in Satellite::ALL {
            let normal = spec.dates.get(satellite);
            let extra = usize::from(outlier && satellite == Satellite::Sentinel2);
            let days = distinct_days(&mut rng, normal + extra);
            // the outlier takes a random slot among the dates
            let outlier_slot = if extra == 1 { Some(rng.random_range(0..days.len())) } else { None };
            let side = if satellite == Satellite::Landsat8 { LANDSAT_SIDE } else { TILE_SIZE };
            let cleared = sample_truth(truth, side);
            for (slot, &day) in days.iter().enumerate() {
                let all_forest = outlier_slot == Some(slot);
                if all_forest {
                    manifest
                        .outliers
                        .push(format!("{satellite}_{lon}_{lat}_{year:04}_{month:02}_{day:02}"));
                }
                for band in select_bands(satellite) {
                    let record = TileRecord {
                        satellite: Some(satellite),
                        band: Some(band.to_string()),
                        lon: lon.clone(),
                        lat: lat.clone(),
                        year,
                        month,
                        day: Some(day),
                        path: PathBuf::new(),
                        kind: TileKind::Imagery,
                    };
                    let path = writer.target(&record);
                    let forest = band_value(satellite, band, false);
                    let bare = band_value(satellite, band, true);
                    let mut pixel = |c: &bool| {
                        let base = if *c && !all_forest { bare } else { forest };
                        base + noise.sample(&mut rng)
                    };
                    if satellite.is_optical() {
                        let dn: Vec<u16> = cleared
                            .iter()
                            .map(|c| (pixel(c).max(0.0) * OPTICAL_SCALE).round().min(u16::MAX as f64) as u16)
                            .collect();
                        write_tiff_u16(side, side, &dn, &path)?;
                    } else {
                        let db: Vec<f32> = cleared
                            .iter()
                            .map(|c| {
                                let base = if *c { bare } else { forest };
                                (base + SAR_NOISE_DB_PER_UNIT * noise.sample(&mut rng)) as f32
                            })
                            .collect();
                        write_tiff_f32(&BandRaster::new(side, side, db)?, &path)?;
                    }
                }
            }
        }
    }
    manifest.files = writer.files;
    Ok(manifest)
}

/// Corpus-wide generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    pub scenes: usize,
    pub seed: u64,
    pub months: Vec<(i32, u32)>,
    pub dates: DateCounts,
    pub noise_sigma: f64,
    pub outlier_rate: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            scenes: 200,
            seed: 0,
            months: vec![(2020, 8)],
            dates: DateCounts::default(),
            noise_sigma: 0.01,
            outlier_rate: 0.3,
        }
    }
}

/// Grid cell of scene `index`: scene 0 sits at (-54.80, -3.67), then cells
/// step east by 0.01° and wrap south every 100 scenes.
pub fn scene_coords(index: usize) -> (String, String) {
    let lon = 5480 - (index % 100);
    let lat = 367 + index / 100;
    (format!("-{}.{:02}", lon / 100, lon % 100), format!("-{}.{:02}", lat / 100, lat % 100))
}

/// Seed of scene `index` under `base_seed` (SplitMix64 finalizer).
pub fn scene_seed(base_seed: u64, index: usize) -> u64 {
    let mut z = base_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Writes `manifest.json`, `queries.csv` and `tiles/scene_NNNN/` under `out`.
pub fn generate_corpus(spec: &CorpusSpec, out: impl AsRef<Path>) -> Result<CorpusManifest> {
    let out = out.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let scenes: Vec<SceneSpec> = (0..spec.scenes)
        .map(|i| {
            let (lon, lat) = scene_coords(i);
            SceneSpec {
                seed: scene_seed(spec.seed, i),
                lon,
                lat,
                months: spec.months.clone(),
                dates: spec.dates,
                noise_sigma: spec.noise_sigma,
                outlier_rate: spec.outlier_rate,
            }
        })
        .collect();
    let entries = scenes
        .par_iter()
        .enumerate()
        .map(|(i, s)| generate_scene(s, out, &format!("tiles/scene_{i:04}")))
        .collect::<Result<Vec<_>>>()?;
    let manifest = CorpusManifest { scenes: entries };

    let manifest_path = out.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;

    let mut queries = String::from("lat,lon,year,month\n");
    for s in &scenes {
        for &(year, month) in &s.months {
            queries.push_str(&format!("{},{},{year},{month}\n", s.lat, s.lon));
        }
    }
    let queries_path = out.join("queries.csv");
    fs::write(&queries_path, queries).map_err(|e| Error::io(&queries_path, e))?;
    Ok(manifest)
}
