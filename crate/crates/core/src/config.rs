//! The run configuration shared by every batch stage.
//!
//! All keys are optional. Normalization entries overlay the defaults band by
//! band; unknown keys anywhere are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::FilenameGrammar;
use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::preprocess::NormalizationTable;
use crate::segment::IndexSegmenterParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeKernel {
    #[default]
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResizeConfig {
    pub kernel: ResizeKernel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawRunConfig")]
pub struct RunConfig {
    pub normalization: NormalizationTable,
    pub resize: ResizeConfig,
    pub fusion: FusionConfig,
    pub segmenter: IndexSegmenterParams,
    pub filename_grammar: FilenameGrammar,
    /// Worker threads; 0 uses every available core.
    pub parallelism: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    normalization: Option<NormalizationTable>,
    #[serde(default)]
    resize: ResizeConfig,
    #[serde(default)]
    fusion: FusionConfig,
    #[serde(default)]
    segmenter: IndexSegmenterParams,
    #[serde(default)]
    filename_grammar: FilenameGrammar,
    #[serde(default)]
    parallelism: usize,
}

impl TryFrom<RawRunConfig> for RunConfig {
    type Error = Error;

    fn try_from(raw: RawRunConfig) -> Result<Self> {
        let mut normalization = NormalizationTable::default();
        if let Some(overrides) = raw.normalization {
            normalization = normalization.merged(&overrides);
        }
        let cfg = RunConfig {
            normalization,
            resize: raw.resize,
            fusion: raw.fusion,
            segmenter: raw.segmenter,
            filename_grammar: raw.filename_grammar,
            parallelism: raw.parallelism,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.normalization.check_complete()?;
        self.fusion.validate()?;
        self.segmenter.validate()?;
        self.filename_grammar.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// A rayon pool sized by `parallelism`.
    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Satellite;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn normalization_overlays_defaults() {
        let cfg = RunConfig::from_json(r#"{"normalization": {"Sentinel1": {"VV": {"lo": -25, "hi": 5}}}}"#).unwrap();
        assert_eq!(cfg.normalization.get(Satellite::Sentinel1, "VV").unwrap().lo, -25.0);
        assert_eq!(cfg.normalization.get(Satellite::Sentinel1, "VH").unwrap().lo, -30.0);
        assert_eq!(cfg.normalization.get(Satellite::Sentinel2, "B8").unwrap().hi, 10_000.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        for bad in [
            r#"{"parallel": 2}"#,
            r#"{"fusion": {"k": 3}}"#,
            r#"{"resize": {"kernel": "bicubic"}}"#,
            r#"{"segmenter": {"t_low": 0.5, "t_high": 0.2}}"#,
            r#"{"fusion": {"k1": 1, "k2": 3}}"#,
            r#"{"normalization": {"Sentinel2": {"B8": {"lo": 1, "hi": 0}}}}"#,
            r#"{"filename_grammar": {"separator": ""}}"#,
        ] {
            assert!(RunConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig {
            parallelism: 3,
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}
