//! Per-image deforestation probability masks.
//!
//! A [`Predictor`] maps one [`ImageStack`] to one [`ProbabilityMask`]. The
//! built-in [`IndexSegmenter`] ramps NBR between two thresholds; masks from
//! other models enter through [`import_mask`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::MonthKey;
use crate::error::{Error, Result};
use crate::indices::nbr;
use crate::preprocess::{optical_roles, select_bands, ImageStack, NormalizationTable};
use crate::raster::{read_raw, write_raw, Date, GridCoord, ProbabilityMask, Satellite, TILE_SIZE};

pub trait Predictor: Sync {
    fn name(&self) -> &str;

    /// A tile-sized mask with values in `[0, 1]`, deterministic per stack.
    fn predict(&self, stack: &ImageStack) -> Result<ProbabilityMask>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSegmenterParams {
    /// NBR at or below which a pixel is certainly deforested.
    pub t_low: f64,
    /// NBR at or above which a pixel is certainly forest.
    pub t_high: f64,
}

impl Default for IndexSegmenterParams {
    fn default() -> Self {
        IndexSegmenterParams {
            t_low: 0.1,
            t_high: 0.3,
        }
    }
}

impl IndexSegmenterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_low.is_finite() && self.t_high.is_finite() && self.t_low < self.t_high) {
            return Err(Error::Config(format!(
                "segmenter needs t_low < t_high, got {} and {}",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }

    /// Deforestation probability for one NBR value.
    #[inline]
    pub fn probability(&self, nbr: f64) -> f32 {
        ((self.t_high - nbr) / (self.t_high - self.t_low)).clamp(0.0, 1.0) as f32
    }
}

/// NBR ramp segmenter for optical stacks.
///
/// NBR is computed on the de-normalized NIR and SWIR channels.
pub fn index_predict(
    stack: &ImageStack,
    params: &IndexSegmenterParams,
    table: &NormalizationTable,
) -> Result<ProbabilityMask> {
    let (nir_i, swir_i, _) = optical_roles(stack.satellite).ok_or_else(|| Error::NonOpticalStack {
        satellite: stack.satellite.to_string(),
    })?;
    let bands = select_bands(stack.satellite);
    let range = |i: usize| {
        table
            .get(stack.satellite, bands[i])
            .ok_or_else(|| Error::MissingNormalization {
                satellite: stack.satellite.to_string(),
                band: bands[i].to_string(),
            })
    };
    let (nir_r, swir_r) = (range(nir_i)?, range(swir_i)?);
    let nir = stack.channels()[nir_i].values();
    let swir = stack.channels()[swir_i].values();
    let values = nir
        .iter()
        .zip(swir)
        .map(|(&n, &s)| {
            let n = nir_r.lo + n as f64 * (nir_r.hi - nir_r.lo);
            let s = swir_r.lo + s as f64 * (swir_r.hi - swir_r.lo);
            params.probability(nbr(n, s))
        })
        .collect();
    ProbabilityMask::new(TILE_SIZE, TILE_SIZE, values)
}

#[derive(Debug, Clone)]
pub struct IndexSegmenter {
    pub params: IndexSegmenterParams,
    pub table: NormalizationTable,
}

impl Predictor for IndexSegmenter {
    fn name(&self) -> &str {
        "index"
    }

    fn predict(&self, stack: &ImageStack) -> Result<ProbabilityMask> {
        index_predict(stack, &self.params, &self.table)
    }
}

/// Fraction of pixels whose probability is at least `level`.
pub fn deforestation_ratio(mask: &ProbabilityMask, level: f64) -> f64 {
    let level = level as f32;
    let hits = mask.values().iter().filter(|&&v| v >= level).count();
    hits as f64 / mask.values().len() as f64
}

/// One per-image prediction with its cached deforestation ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    mask: ProbabilityMask,
    pub satellite: Satellite,
    pub date: Date,
    pub lon: GridCoord,
    pub lat: GridCoord,
    pub source: String,
    ratio: f64,
    ratio_level: f64,
}

impl Prediction {
    pub fn new(
        mask: ProbabilityMask,
        satellite: Satellite,
        date: Date,
        lon: GridCoord,
        lat: GridCoord,
        source: impl Into<String>,
        ratio_level: f64,
    ) -> Self {
        let ratio = deforestation_ratio(&mask, ratio_level);
        Prediction {
            mask,
            satellite,
            date,
            lon,
            lat,
            source: source.into(),
            ratio,
            ratio_level,
        }
    }

    pub fn from_stack(stack: &ImageStack, mask: ProbabilityMask, source: impl Into<String>, ratio_level: f64) -> Self {
        Prediction::new(
            mask,
            stack.satellite,
            stack.date,
            stack.lon.clone(),
            stack.lat.clone(),
            source,
            ratio_level,
        )
    }

    pub fn mask(&self) -> &ProbabilityMask {
        &self.mask
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn ratio_level(&self) -> f64 {
        self.ratio_level
    }

    /// The ratio under `level`, reusing the cache when the level matches.
    pub fn ratio_at(&self, level: f64) -> f64 {
        if level == self.ratio_level {
            self.ratio
        } else {
            deforestation_ratio(&self.mask, level)
        }
    }

    pub fn month_key(&self) -> MonthKey {
        MonthKey {
            lon: self.lon.clone(),
            lat: self.lat.clone(),
            year: self.date.year,
            month: self.date.month,
        }
    }

    /// `{Satellite}_{lon}_{lat}_{yyyy}_{mm}_{dd}`
    pub fn acquisition_stem(&self) -> String {
        format!(
            "{}_{}_{}_{:04}_{:02}_{:02}",
            self.satellite, self.lon, self.lat, self.date.year, self.date.month, self.date.day
        )
    }
}

/// Metadata stored next to every FGPM mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSidecar {
    pub satellite: Satellite,
    pub band_set: Vec<String>,
    pub lon: String,
    pub lat: String,
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub source: String,
}

const SIDECAR_KEYS: [&str; 8] = ["satellite", "band_set", "lon", "lat", "year", "month", "day", "source"];

impl MaskSidecar {
    pub fn for_prediction(p: &Prediction) -> Self {
        MaskSidecar {
            satellite: p.satellite,
            band_set: select_bands(p.satellite).iter().map(|b| b.to_string()).collect(),
            lon: p.lon.to_string(),
            lat: p.lat.to_string(),
            year: p.date.year,
            month: p.date.month,
            day: p.date.day,
            source: p.source.clone(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let json_err = |reason: String| Error::Json {
            path: path.to_path_buf(),
            reason,
        };
        let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| json_err(e.to_string()))?;
        let object = value.as_object().ok_or_else(|| json_err("expected an object".into()))?;
        let missing: Vec<String> = SIDECAR_KEYS
            .iter()
            .filter(|k| object.get(**k).is_none_or(|v| v.is_null()))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::SidecarMissing {
                path: path.to_path_buf(),
                missing,
            });
        }
        serde_json::from_value(value).map_err(|e| json_err(e.to_string()))
    }
}

/// Loads an FGPM mask and its sidecar into a [`Prediction`].
pub fn import_mask(mask_path: impl AsRef<Path>, sidecar_path: impl AsRef<Path>, ratio_level: f64) -> Result<Prediction> {
    let mask_path = mask_path.as_ref();
    let sidecar = MaskSidecar::read(sidecar_path)?;
    let mask = read_raw(mask_path)?;
    if !mask.is_tile() {
        return Err(Error::DimensionMismatch {
            expected: (TILE_SIZE, TILE_SIZE),
            actual: mask.dims(),
        });
    }
    let expected: Vec<&str> = select_bands(sidecar.satellite).to_vec();
    if sidecar.band_set != expected {
        return Err(Error::Json {
            path: mask_path.with_extension("json"),
            reason: format!("band_set {:?} differs from {:?}", sidecar.band_set, expected),
        });
    }
    Ok(Prediction::new(
        mask,
        sidecar.satellite,
        Date::new(sidecar.year, sidecar.month, sidecar.day)?,
        GridCoord::longitude(&sidecar.lon)?,
        GridCoord::latitude(&sidecar.lat)?,
        sidecar.source,
        ratio_level,
    ))
}

/// Writes `{stem}.fgpm` and `{stem}.json`; returns the mask path.
pub fn write_prediction(p: &Prediction, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mask_path = dir.join(format!("{stem}.fgpm"));
    write_raw(p.mask(), &mask_path)?;
    let json_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_vec_pretty(&MaskSidecar::for_prediction(p)).expect("sidecar serializes");
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(mask_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{BandMeta, BandRaster};

    fn stack_with(satellite: Satellite, nir: f32, swir: f32) -> ImageStack {
        let bands = select_bands(satellite);
        let (nir_i, swir_i, _) = optical_roles(satellite).unwrap_or((0, 1, 0));
        let lon = GridCoord::longitude("-54.80").unwrap();
        let lat = GridCoord::latitude("-3.67").unwrap();
        let date = Date::new(2020, 8, 3).unwrap();
        let channels = bands
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let v = if i == nir_i {
                    nir
                } else if i == swir_i {
                    swir
                } else {
                    0.05
                };
                BandRaster::filled(TILE_SIZE, TILE_SIZE, v).unwrap().with_meta(BandMeta {
                    satellite,
                    band: b.to_string(),
                    lon: lon.clone(),
                    lat: lat.clone(),
                    date,
                })
            })
            .collect();
        ImageStack::new(satellite, lon, lat, date, channels).unwrap()
    }

    /// NIR and SWIR (normalized) giving an exact NBR `target` when SWIR = 0.1.
    fn nir_for(target: f64) -> f32 {
        (0.1 * (1.0 + target) / (1.0 - target)) as f32
    }

    #[test]
    fn ramp_endpoints_and_midpoint() {
        let params = IndexSegmenterParams::default();
        assert_eq!(params.probability(0.1), 1.0);
        assert_eq!(params.probability(-0.5), 1.0);
        assert_eq!(params.probability(0.3), 0.0);
        assert!((params.probability(0.2) - 0.5).abs() < 1e-6);

        let table = NormalizationTable::default();
        let forest = index_predict(&stack_with(Satellite::Sentinel2, 0.35, 0.0875), &params, &table).unwrap();
        assert!(forest.values().iter().all(|&v| v == 0.0));
        let cleared = index_predict(&stack_with(Satellite::Landsat8, 0.2, 0.3), &params, &table).unwrap();
        assert!(cleared.values().iter().all(|&v| v == 1.0));
        let mid = index_predict(&stack_with(Satellite::Sentinel2, nir_for(0.2), 0.1), &params, &table).unwrap();
        assert!(mid.values().iter().all(|&v| (v - 0.5).abs() < 1e-5));
    }

    #[test]
    fn sar_stacks_are_rejected() {
        let err = index_predict(
            &stack_with(Satellite::Sentinel1, 0.5, 0.5),
            &IndexSegmenterParams::default(),
            &NormalizationTable::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("requires optical bands"));
    }

    #[test]
    fn params_validation() {
        assert!(IndexSegmenterParams { t_low: 0.3, t_high: 0.3 }.validate().is_err());
        assert!(IndexSegmenterParams::default().validate().is_ok());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(deforestation_ratio(&ProbabilityMask::filled(256, 256, 1.0).unwrap(), 0.5), 1.0);
        assert_eq!(deforestation_ratio(&ProbabilityMask::filled(256, 256, 0.0).unwrap(), 0.5), 0.0);
        let values: Vec<f32> = (0..65_536).map(|i| if i < 6_554 { 0.9 } else { 0.1 }).collect();
        let mask = ProbabilityMask::new(256, 256, values).unwrap();
        let ratio = deforestation_ratio(&mask, 0.5);
        assert_eq!(ratio, 6_554.0 / 65_536.0);
        assert!((ratio - 0.1).abs() < 1e-4);
    }

    fn sample_prediction() -> Prediction {
        let values: Vec<f32> = (0..65_536).map(|i| (i % 7) as f32 / 6.0).collect();
        Prediction::new(
            ProbabilityMask::new(256, 256, values).unwrap(),
            Satellite::Sentinel2,
            Date::new(2020, 8, 3).unwrap(),
            GridCoord::longitude("-54.80").unwrap(),
            GridCoord::latitude("-3.67").unwrap(),
            "unet:sen2",
            0.5,
        )
    }

    #[test]
    fn import_round_trips_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = sample_prediction();
        let path = write_prediction(&p, dir.path(), "a").unwrap();
        let back = import_mask(&path, path.with_extension("json"), 0.5).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.ratio(), deforestation_ratio(back.mask(), 0.5));
        assert_eq!(back.ratio_at(0.9), deforestation_ratio(back.mask(), 0.9));
    }

    #[test]
    fn sidecar_missing_keys_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let p = sample_prediction();
        let path = write_prediction(&p, dir.path(), "a").unwrap();
        let json_path = path.with_extension("json");
        let mut value: serde_json::Value = serde_json::from_slice(&fs::read(&json_path).unwrap()).unwrap();
        value.as_object_mut().unwrap().remove("day");
        value.as_object_mut().unwrap().remove("month");
        fs::write(&json_path, value.to_string()).unwrap();
        let err = import_mask(&path, &json_path, 0.5).unwrap_err();
        match &err {
            Error::SidecarMissing { missing, .. } => assert_eq!(missing, &["month", "day"]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn import_rejects_non_tile_masks() {
        let dir = tempfile::tempdir().unwrap();
        let p = sample_prediction();
        let path = write_prediction(&p, dir.path(), "a").unwrap();
        write_raw(&ProbabilityMask::filled(64, 64, 0.0).unwrap(), &path).unwrap();
        assert!(matches!(
            import_mask(&path, path.with_extension("json"), 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
