//! Auxiliary catalogs: population rasters, holiday calendars, POI labels.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::trace::{Cell, GridSpec};

/// Bundled Japanese national holidays, 2015-2024, including substitute
/// and citizens' holidays.
pub const BUNDLED_JP_HOLIDAYS: &str = include_str!("../data/holidays_jp_2015_2024.csv");

/// Keyword substrings that flag a POI category as sensitive.
pub const SENSITIVE_KEYWORDS: &[&str] = &[
    "Hospital", "Clinic", "Medical", "Pharmacy", "Relig", "Church", "Mosque", "Temple", "Shrine",
    "Nightclub", "Addiction", "Rehab", "Counsel", "Therapy", "Politic", "Party", "Campaign",
    "Adult", "Strip",
];

/// Grid-aligned public population density for one candidate city.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationRaster {
    pub name: String,
    pub field: DensityField,
    pub center_lat: f64,
    pub center_lon: f64,
    pub cell_size_m: f64,
}

/// Sidecar metadata stored next to a raster CSV as `<path>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasterMeta {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub center_lat: f64,
    pub center_lon: f64,
    pub cell_size_m: f64,
}

/// Load a raster from `x,y,density` CSV plus its `<path>.meta.json` sidecar.
pub fn load_raster(path: impl AsRef<Path>) -> Result<PopulationRaster> {
    let path = path.as_ref();
    let meta_path = format!("{}.meta.json", path.display());
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: RasterMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::InvalidArgument(format!("bad raster sidecar {meta_path}: {e}")))?;

    let mut field = DensityField::zeros(meta.width, meta.height)?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedRow {
                line: line_no,
                message: format!("expected x,y,density, found {} fields", fields.len()),
            });
        }
        let x: u32 = fields[0].trim().parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad x {:?}", fields[0]),
        })?;
        let y: u32 = fields[1].trim().parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad y {:?}", fields[1]),
        })?;
        let density: f64 = fields[2].trim().parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad density {:?}", fields[2]),
        })?;
        if x >= meta.width || y >= meta.height {
            return Err(Error::OutOfRange {
                line: line_no,
                message: format!("cell ({x}, {y}) outside {}x{} raster", meta.width, meta.height),
            });
        }
        if density < 0.0 || !density.is_finite() {
            return Err(Error::OutOfRange {
                line: line_no,
                message: format!("density {density} must be finite and >= 0"),
            });
        }
        field.set(Cell::new(x, y), density);
    }
    Ok(PopulationRaster {
        name: meta.name,
        field,
        center_lat: meta.center_lat,
        center_lon: meta.center_lon,
        cell_size_m: meta.cell_size_m,
    })
}

/// Write a raster plus sidecar in the load_raster format.
pub fn write_raster(raster: &PopulationRaster, path: impl AsRef<Path>) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let meta = RasterMeta {
        name: raster.name.clone(),
        width: raster.field.width,
        height: raster.field.height,
        center_lat: raster.center_lat,
        center_lon: raster.center_lon,
        cell_size_m: raster.cell_size_m,
    };
    let meta_path = format!("{}.meta.json", path.display());
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| Error::io(&meta_path, e))?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    for y in 0..raster.field.height {
        for x in 0..raster.field.width {
            let v = raster.field.get(Cell::new(x, y));
            writeln!(w, "{x},{y},{v}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    Ok(())
}

/// A country's public-holiday calendar over some span of years.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolidayCalendar {
    pub country: String,
    holidays: BTreeMap<NaiveDate, String>,
}

impl HolidayCalendar {
    pub fn from_entries(country: impl Into<String>, entries: Vec<(NaiveDate, String)>) -> Result<Self> {
        let mut holidays = BTreeMap::new();
        for (date, name) in entries {
            if holidays.insert(date, name).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate holiday date {date}")));
            }
        }
        Ok(HolidayCalendar { country: country.into(), holidays })
    }

    /// The bundled Japanese national holiday calendar, 2015-2024.
    pub fn bundled_japan() -> Self {
        parse_holiday_csv(BUNDLED_JP_HOLIDAYS, "JP").expect("bundled calendar is well-formed")
    }

    pub fn is_holiday(&self, date: NaiveDate) -> bool {
        self.holidays.contains_key(&date)
    }

    pub fn name_of(&self, date: NaiveDate) -> Option<&str> {
        self.holidays.get(&date).map(|s| s.as_str())
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.holidays.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.holidays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holidays.is_empty()
    }
}

fn parse_holiday_csv(text: &str, country: &str) -> Result<HolidayCalendar> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (date_str, name) = line.split_once(',').ok_or_else(|| Error::MalformedRow {
            line: line_no,
            message: "expected date,name".into(),
        })?;
        let date = NaiveDate::parse_from_str(date_str.trim(), "%Y-%m-%d").map_err(|_| {
            Error::MalformedRow {
                line: line_no,
                message: format!("bad date {date_str:?}, expected YYYY-MM-DD"),
            }
        })?;
        entries.push((date, name.trim().to_string()));
    }
    HolidayCalendar::from_entries(country, entries)
}

/// Load a `YYYY-MM-DD,name` holiday CSV.
pub fn load_holidays(path: impl AsRef<Path>) -> Result<HolidayCalendar> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_holiday_csv(&text, &path.display().to_string())
}

/// Point-of-interest catalog with sensitivity flagging.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoiCatalog {
    pub entries: Vec<(Cell, String)>,
    pub keywords: Vec<String>,
}

impl PoiCatalog {
    pub fn new(entries: Vec<(Cell, String)>, keywords: Vec<String>) -> Self {
        PoiCatalog { entries, keywords }
    }

    pub fn empty() -> Self {
        PoiCatalog {
            entries: Vec::new(),
            keywords: SENSITIVE_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// S: cells whose category matches any sensitivity keyword substring.
    pub fn sensitive_cells(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = self
            .entries
            .iter()
            .filter(|(_, cat)| self.keywords.iter().any(|k| cat.contains(k.as_str())))
            .map(|(c, _)| *c)
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

/// Load a `x,y,category` POI CSV; sensitivity keywords default to the
/// bundled list.
pub fn load_pois(path: impl AsRef<Path>, grid: &GridSpec) -> Result<PoiCatalog> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut entries = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (x, y, cat) = match (parts.next(), parts.next(), parts.next()) {
            (Some(x), Some(y), Some(cat)) => (x, y, cat),
            _ => {
                return Err(Error::MalformedRow {
                    line: line_no,
                    message: "expected x,y,category".into(),
                })
            }
        };
        let x: u32 = x.trim().parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad x {x:?}"),
        })?;
        let y: u32 = y.trim().parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad y {y:?}"),
        })?;
        let cell = Cell::new(x, y);
        if !grid.contains(cell) {
            return Err(Error::OutOfRange {
                line: line_no,
                message: format!("POI cell ({x}, {y}) outside {}x{} grid", grid.width, grid.height),
            });
        }
        entries.push((cell, cat.trim().to_string()));
    }
    Ok(PoiCatalog::new(
        entries,
        SENSITIVE_KEYWORDS.iter().map(|s| s.to_string()).collect(),
    ))
}
