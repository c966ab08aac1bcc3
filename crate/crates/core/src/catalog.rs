//! Tile indexing by filename.
//!
//! Every source tile is one band of one acquisition and is named
//! `{Collection}_{Band}_{Lon}_{Lat}_{Year}_{Month}_{Day}.tiff`; monthly labels
//! drop the band and the day: `Deforestation_{Lon}_{Lat}_{Year}_{Month}.tiff`.
//! The separator and field order are configurable through [`FilenameGrammar`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::preprocess::select_bands;
use crate::raster::{Date, GridCoord, Satellite};

pub const LABEL_COLLECTION: &str = "Deforestation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TileKind {
    Imagery,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Collection,
    Band,
    Lon,
    Lat,
    Year,
    Month,
    Day,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilenameGrammar {
    pub separator: String,
    pub field_order: Vec<Field>,
}

impl Default for FilenameGrammar {
    fn default() -> Self {
        FilenameGrammar {
            separator: "_".to_string(),
            field_order: vec![
                Field::Collection,
                Field::Band,
                Field::Lon,
                Field::Lat,
                Field::Year,
                Field::Month,
                Field::Day,
            ],
        }
    }
}

impl FilenameGrammar {
    pub fn validate(&self) -> Result<()> {
        let sep = &self.separator;
        if sep.is_empty() || sep.chars().any(|c| c == '-' || c == '.' || c.is_ascii_digit()) {
            return Err(Error::Config(format!(
                "filename separator {sep:?} must be non-empty and free of '-', '.' and digits"
            )));
        }
        let mut seen = self.field_order.clone();
        seen.sort_by_key(|f| *f as u8);
        seen.dedup();
        if seen.len() != 7 || self.field_order.len() != 7 {
            return Err(Error::Config(
                "filename field_order must list each of collection, band, lon, lat, year, month, day once".into(),
            ));
        }
        Ok(())
    }

    fn label_order(&self) -> impl Iterator<Item = Field> + '_ {
        self.field_order
            .iter()
            .copied()
            .filter(|f| !matches!(f, Field::Band | Field::Day))
    }
}

/// One indexed tile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RecordFields")]
pub struct TileRecord {
    /// `None` for labels.
    pub satellite: Option<Satellite>,
    /// `None` for labels.
    pub band: Option<String>,
    pub lon: GridCoord,
    pub lat: GridCoord,
    pub year: i32,
    pub month: u32,
    /// `None` for labels.
    pub day: Option<u32>,
    pub path: PathBuf,
    pub kind: TileKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFields {
    satellite: Option<Satellite>,
    band: Option<String>,
    lon: String,
    lat: String,
    year: i32,
    month: u32,
    day: Option<u32>,
    path: PathBuf,
    kind: TileKind,
}

impl TryFrom<RecordFields> for TileRecord {
    type Error = Error;

    fn try_from(r: RecordFields) -> Result<Self> {
        let record = TileRecord {
            satellite: r.satellite,
            band: r.band,
            lon: GridCoord::longitude(&r.lon)?,
            lat: GridCoord::latitude(&r.lat)?,
            year: r.year,
            month: r.month,
            day: r.day,
            path: r.path,
            kind: r.kind,
        };
        record.validate()?;
        Ok(record)
    }
}

impl TileRecord {
    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::Grammar {
            name: self.path.display().to_string(),
            reason: reason.to_string(),
        };
        if !(1..=12).contains(&self.month) {
            return Err(bad("month outside 1..12"));
        }
        match self.kind {
            TileKind::Imagery => {
                if self.satellite.is_none() || self.band.is_none() {
                    return Err(bad("imagery needs a satellite and a band"));
                }
                let day = self.day.ok_or_else(|| bad("imagery needs a day"))?;
                Date::new(self.year, self.month, day)?;
            }
            TileKind::Label => {
                if self.satellite.is_some() || self.band.is_some() || self.day.is_some() {
                    return Err(bad("labels carry no satellite, band or day"));
                }
            }
        }
        Ok(())
    }

    /// Acquisition date; `None` for labels.
    pub fn date(&self) -> Option<Date> {
        self.day.map(|day| Date {
            year: self.year,
            month: self.month,
            day,
        })
    }

    pub fn month_key(&self) -> MonthKey {
        MonthKey {
            lon: self.lon.clone(),
            lat: self.lat.clone(),
            year: self.year,
            month: self.month,
        }
    }
}

/// A location and calendar month; the unit of labels and queries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MonthKey {
    pub lon: GridCoord,
    pub lat: GridCoord,
    pub year: i32,
    pub month: u32,
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{:04}_{:02}", self.lon, self.lat, self.year, self.month)
    }
}

/// A request for one fused deforestation map.
pub type Query = MonthKey;

impl MonthKey {
    pub fn new(lon: &str, lat: &str, year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidDate { year, month, day: 1 });
        }
        Ok(MonthKey {
            lon: GridCoord::longitude(lon)?,
            lat: GridCoord::latitude(lat)?,
            year,
            month,
        })
    }

    /// `deforestation_{lon}_{lat}_{year}_{month}`, coordinates as written in
    /// the query source.
    pub fn output_stem(&self) -> String {
        format!("deforestation_{self}")
    }
}

/// Parses a filename under `grammar`. The returned record's `path` is the name.
pub fn parse_filename(name: &str, grammar: &FilenameGrammar) -> Result<TileRecord> {
    let fail = |reason: &str| Error::Grammar {
        name: name.to_string(),
        reason: reason.to_string(),
    };
    let stem = name
        .strip_suffix(".tiff")
        .or_else(|| name.strip_suffix(".tif"))
        .ok_or_else(|| fail("expected a .tiff extension"))?;
    let tokens: Vec<&str> = stem.split(grammar.separator.as_str()).collect();
    let order: Vec<Field> = match tokens.len() {
        7 => grammar.field_order.clone(),
        5 => grammar.label_order().collect(),
        n => return Err(fail(&format!("expected 7 fields (imagery) or 5 (label), found {n}"))),
    };
    let field = |f: Field| order.iter().position(|&o| o == f).map(|i| tokens[i]);

    let collection = field(Field::Collection).unwrap();
    let (kind, satellite) = if collection == LABEL_COLLECTION {
        (TileKind::Label, None)
    } else {
        let satellite = collection.parse::<Satellite>().map_err(|e| match e {
            Error::ExcludedCollection { collection, .. } => Error::ExcludedCollection {
                name: name.to_string(),
                collection,
            },
            _ => Error::UnknownCollection {
                name: name.to_string(),
                collection: collection.to_string(),
            },
        })?;
        (TileKind::Imagery, Some(satellite))
    };
    match (kind, tokens.len()) {
        (TileKind::Label, 7) => return Err(fail("labels carry no band or day")),
        (TileKind::Imagery, 5) => return Err(fail("imagery needs a band and a day")),
        _ => {}
    }

    let number = |f: Field, what: &str| -> Result<u32> {
        let text = field(f).unwrap();
        if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(fail(&format!("{what} {text:?} is not a number")));
        }
        text.parse().map_err(|_| fail(&format!("{what} {text:?} out of range")))
    };
    let year_text = field(Field::Year).unwrap();
    if year_text.len() != 4 {
        return Err(fail("year must have four digits"));
    }
    let year = number(Field::Year, "year")? as i32;
    let month = number(Field::Month, "month")?;
    let day = match kind {
        TileKind::Imagery => Some(number(Field::Day, "day")?),
        TileKind::Label => None,
    };
    let band = field(Field::Band).map(str::to_string);
    if band.as_deref() == Some("") {
        return Err(fail("empty band"));
    }

    let record = TileRecord {
        satellite,
        band,
        lon: GridCoord::longitude(field(Field::Lon).unwrap())?,
        lat: GridCoord::latitude(field(Field::Lat).unwrap())?,
        year,
        month,
        day,
        path: PathBuf::from(name),
        kind,
    };
    record.validate().map_err(|e| match e {
        Error::InvalidDate { .. } => fail("invalid calendar date"),
        e => e,
    })?;
    Ok(record)
}

/// Inverse of [`parse_filename`].
pub fn format_filename(record: &TileRecord, grammar: &FilenameGrammar) -> String {
    let order: Vec<Field> = match record.kind {
        TileKind::Imagery => grammar.field_order.clone(),
        TileKind::Label => grammar.label_order().collect(),
    };
    let parts: Vec<String> = order
        .iter()
        .map(|f| match f {
            Field::Collection => record
                .satellite
                .map_or(LABEL_COLLECTION.to_string(), |s| s.name().to_string()),
            Field::Band => record.band.clone().unwrap_or_default(),
            Field::Lon => record.lon.to_string(),
            Field::Lat => record.lat.to_string(),
            Field::Year => format!("{:04}", record.year),
            Field::Month => format!("{:02}", record.month),
            Field::Day => format!("{:02}", record.day.unwrap_or_default()),
        })
        .collect();
    format!("{}.tiff", parts.join(&grammar.separator))
}

/// All selected bands of one satellite acquisition, in selection order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub satellite: Satellite,
    pub date: Date,
    pub records: Vec<TileRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub stack_source: Vec<TileRecord>,
    pub label: TileRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<TrainingPair>,
    /// Acquisitions in a labelled month lacking at least one selected band.
    pub incomplete: usize,
}

/// An immutable, path-sorted index of tiles.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "CatalogFile", into = "CatalogFile")]
pub struct Catalog {
    records: Vec<TileRecord>,
    skipped: Vec<PathBuf>,
    by_month: HashMap<MonthKey, Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    records: Vec<TileRecord>,
    skipped: Vec<PathBuf>,
}

impl From<CatalogFile> for Catalog {
    fn from(file: CatalogFile) -> Self {
        Catalog::from_records(file.records, file.skipped)
    }
}

impl From<Catalog> for CatalogFile {
    fn from(c: Catalog) -> Self {
        CatalogFile {
            records: c.records,
            skipped: c.skipped,
        }
    }
}

impl Catalog {
    /// Sorts by path and drops repeated paths.
    pub fn from_records(mut records: Vec<TileRecord>, mut skipped: Vec<PathBuf>) -> Self {
        records.sort_by(|a, b| a.path.cmp(&b.path));
        records.dedup_by(|a, b| a.path == b.path);
        skipped.sort();
        skipped.dedup();
        let mut by_month: HashMap<MonthKey, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            by_month.entry(r.month_key()).or_default().push(i);
        }
        Catalog {
            records,
            skipped,
            by_month,
        }
    }

    pub fn records(&self) -> &[TileRecord] {
        &self.records
    }

    pub fn skipped(&self) -> &[PathBuf] {
        &self.skipped
    }

    pub fn labels(&self) -> impl Iterator<Item = &TileRecord> {
        self.records.iter().filter(|r| r.kind == TileKind::Label)
    }

    pub fn month(&self, key: &MonthKey) -> impl Iterator<Item = &TileRecord> {
        self.by_month
            .get(key)
            .into_iter()
            .flatten()
            .map(|&i| &self.records[i])
    }

    /// Groups the imagery of one month into band-complete acquisitions.
    /// Returns the complete candidates and the number of incomplete ones.
    fn candidates(&self, key: &MonthKey) -> (Vec<Candidate>, usize) {
        let mut groups: BTreeMap<(Date, Satellite), Vec<&TileRecord>> = BTreeMap::new();
        for r in self.month(key).filter(|r| r.kind == TileKind::Imagery) {
            groups
                .entry((r.date().unwrap(), r.satellite.unwrap()))
                .or_default()
                .push(r);
        }
        let mut complete = Vec::new();
        let mut incomplete = 0;
        for ((date, satellite), tiles) in groups {
            let bands = select_bands(satellite);
            let picked: Option<Vec<TileRecord>> = bands
                .iter()
                .map(|band| tiles.iter().find(|r| r.band.as_deref() == Some(*band)).map(|r| (*r).clone()))
                .collect();
            match picked {
                Some(records) => complete.push(Candidate {
                    satellite,
                    date,
                    records,
                }),
                None => incomplete += 1,
            }
        }
        (complete, incomplete)
    }

    /// Every band-complete acquisition at the query's location and month,
    /// ordered by date then satellite. Empty means no data.
    pub fn resolve_query(&self, query: &Query) -> Vec<Candidate> {
        self.candidates(query).0
    }

    /// Band-complete acquisitions for every month, keyed by month.
    pub fn all_candidates(&self) -> BTreeMap<MonthKey, Vec<Candidate>> {
        let mut keys: Vec<&MonthKey> = self.by_month.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| (k.clone(), self.candidates(k).0))
            .filter(|(_, c)| !c.is_empty())
            .collect()
    }

    /// Matches every label with each band-complete acquisition of its month.
    pub fn pair_training(&self) -> Pairing {
        let mut pairing = Pairing::default();
        for label in self.labels() {
            let (candidates, incomplete) = self.candidates(&label.month_key());
            pairing.incomplete += incomplete;
            pairing
                .pairs
                .extend(candidates.into_iter().map(|c| TrainingPair {
                    stack_source: c.records,
                    label: label.clone(),
                }));
        }
        pairing
    }
}

/// Indexes every parseable file under `root`; the rest are listed as skipped.
pub fn build_catalog(root: impl AsRef<Path>, grammar: &FilenameGrammar) -> Result<Catalog> {
    let root = root.as_ref();
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        match parse_filename(&name, grammar) {
            Ok(mut record) => {
                record.path = entry.path().to_path_buf();
                records.push(record);
            }
            Err(_) => skipped.push(entry.path().to_path_buf()),
        }
    }
    Ok(Catalog::from_records(records, skipped))
}

/// Reads a query list with the header `lat,lon,year,month`.
pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_queries(&text).map_err(|reason| Error::Json {
        path: path.to_path_buf(),
        reason,
    })
}

/// Parses query CSV text; errors name the offending line.
pub fn parse_queries(text: &str) -> std::result::Result<Vec<Query>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column {name:?}"))
    };
    let (lat, lon, year, month) = (column("lat")?, column("lon")?, column("year")?, column("month")?);
    let mut queries = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let line = i + 2;
        let get = |c: usize| row.get(c).unwrap_or("");
        let year: i32 = get(year)
            .parse()
            .map_err(|_| format!("line {line}: bad year {:?}", get(year)))?;
        let month: u32 = get(month)
            .parse()
            .map_err(|_| format!("line {line}: bad month {:?}", get(month)))?;
        let query = Query::new(get(lon), get(lat), year, month).map_err(|e| format!("line {line}: {e}"))?;
        queries.push(query);
    }
    Ok(queries)
}
