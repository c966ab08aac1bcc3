use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unreadable raster {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },

    #[error("multi-band tiff {path}: {samples} samples per pixel")]
    MultiBand { path: PathBuf, samples: u16 },

    #[error("unsupported sample format in {path}: {detail}")]
    UnsupportedSampleFormat { path: PathBuf, detail: String },

    #[error("raster {path} is {width}x{height}, larger than the {max}x{max} limit")]
    RasterTooLarge {
        path: PathBuf,
        width: u32,
        height: u32,
        max: u32,
    },

    #[error("bad magic in {path}")]
    BadMagic { path: PathBuf },

    #[error("unsupported format version {version} in {path}")]
    UnsupportedVersion { path: PathBuf, version: u32 },

    #[error("length mismatch in {path}: header implies {expected} bytes, found {actual}")]
    LengthMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("value {value} at index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("invalid mask value {value} at index {index}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },

    #[error("invalid dimensions {width}x{height} for {len} values")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("raster is {width}x{height}; at least 2x2 is required")]
    RasterTooSmall { width: usize, height: usize },

    #[error("filename {name:?} does not match the grammar: {reason}")]
    Grammar { name: String, reason: String },

    #[error("excluded collection in {name:?}: {collection} is not used by the pipeline")]
    ExcludedCollection { name: String, collection: String },

    #[error("unknown collection {collection:?} in {name:?}")]
    UnknownCollection { name: String, collection: String },

    #[error("invalid coordinate {text:?}: {reason}")]
    InvalidCoordinate { text: String, reason: String },

    #[error("invalid date {year}-{month:02}-{day:02}")]
    InvalidDate { year: i32, month: u32, day: u32 },

    #[error("no normalization range for {satellite} {band}")]
    MissingNormalization { satellite: String, band: String },

    #[error("missing band {band} for {satellite}")]
    MissingBand { satellite: String, band: String },

    #[error("duplicate band {band} for {satellite}")]
    DuplicateBand { satellite: String, band: String },

    #[error("band {band} is not selected for {satellite}")]
    UnexpectedBand { satellite: String, band: String },

    #[error("records do not share one satellite, location and date: {detail}")]
    MixedTiles { detail: String },

    #[error("index segmenter requires optical bands, got a {satellite} stack")]
    NonOpticalStack { satellite: String },

    #[error("sidecar {path} is missing keys: {}", missing.join(", "))]
    SidecarMissing { path: PathBuf, missing: Vec<String> },

    #[error("malformed json in {path}: {reason}")]
    Json { path: PathBuf, reason: String },

    #[error("no data for query {query}")]
    NoData { query: String },

    #[error("sigma filtering rejected every prediction (stage {stage})")]
    AllRejected { stage: u8 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("png encoding failed for {path}: {reason}")]
    Png { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Unreadable { .. } => "unreadable",
            Error::MultiBand { .. } => "multi_band",
            Error::UnsupportedSampleFormat { .. } => "unsupported_sample_format",
            Error::RasterTooLarge { .. } => "raster_too_large",
            Error::BadMagic { .. } => "bad_magic",
            Error::UnsupportedVersion { .. } => "unsupported_version",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ValueOutOfRange { .. } => "value_out_of_range",
            Error::NotBinary { .. } => "not_binary",
            Error::InvalidDimensions { .. } => "invalid_dimensions",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::RasterTooSmall { .. } => "raster_too_small",
            Error::Grammar { .. } => "grammar",
            Error::ExcludedCollection { .. } => "excluded_collection",
            Error::UnknownCollection { .. } => "unknown_collection",
            Error::InvalidCoordinate { .. } => "invalid_coordinate",
            Error::InvalidDate { .. } => "invalid_date",
            Error::MissingNormalization { .. } => "missing_normalization",
            Error::MissingBand { .. } => "missing_band",
            Error::DuplicateBand { .. } => "duplicate_band",
            Error::UnexpectedBand { .. } => "unexpected_band",
            Error::MixedTiles { .. } => "mixed_tiles",
            Error::NonOpticalStack { .. } => "non_optical_stack",
            Error::SidecarMissing { .. } => "sidecar_missing",
            Error::Json { .. } => "json",
            Error::NoData { .. } => "no_data",
            Error::AllRejected { .. } => "all_rejected",
            Error::Empty(_) => "empty",
            Error::Config(_) => "config",
            Error::Png { .. } => "png",
        }
    }
}
