//! Grid-discretized trajectory storage and CSV ingestion.
//!
//! The on-disk format is headerless CSV, one sample per row:
//! `uid,d,t,x,y` with day index `d`, half-hour bin `t` in `[0,48)`,
//! and cell coordinates `(x, y)` inside the declared grid.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINS_PER_DAY: u8 = 48;

/// Dimensions and scale of the anonymized grid.
///
/// The geographic origin is unknown until spatial re-identification
/// assigns one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    pub cell_size_m: f64,
    pub origin_lat: Option<f64>,
    pub origin_lon: Option<f64>,
}

impl GridSpec {
    pub fn new(width: u32, height: u32, cell_size_m: f64) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::InvalidArgument("grid dimensions must be >= 1".into()));
        }
        if !(cell_size_m > 0.0) {
            return Err(Error::InvalidArgument("cell size must be positive".into()));
        }
        Ok(GridSpec { width, height, cell_size_m, origin_lat: None, origin_lon: None })
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major index of a cell; the GRR symbol mapping.
    pub fn cell_index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell {
            x: (index % self.width as usize) as u32,
            y: (index / self.width as usize) as u32,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { width: 200, height: 200, cell_size_m: 500.0, origin_lat: None, origin_lon: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

/// One observation: the user sits in `cell` during half-hour `bin` of `day`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub day: u16,
    pub bin: u8,
    pub cell: Cell,
}

/// A user's ordered sample sequence, sorted by (day, bin), at most one
/// sample per (day, bin).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub user: u64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct (cell, day, bin) points of the trace.
    pub fn point_set(&self) -> HashSet<(Cell, u16, u8)> {
        self.samples.iter().map(|s| (s.cell, s.day, s.bin)).collect()
    }
}

/// Immutable corpus of trajectories over a common grid.
#[derive(Debug)]
pub struct TraceSet {
    pub grid: GridSpec,
    pub day_count: u16,
    trajectories: Vec<Trajectory>,
    by_user: HashMap<u64, usize>,
    inverted: OnceLock<HashMap<Cell, Vec<u64>>>,
}

impl TraceSet {
    /// Build a validated trace set from already-assembled trajectories.
    pub fn new(grid: GridSpec, day_count: u16, mut trajectories: Vec<Trajectory>) -> Result<Self> {
        trajectories.sort_by_key(|t| t.user);
        let mut by_user = HashMap::with_capacity(trajectories.len());
        for (i, t) in trajectories.iter_mut().enumerate() {
            if t.samples.is_empty() {
                return Err(Error::InvalidArgument(format!("user {} has no samples", t.user)));
            }
            t.samples.sort_by_key(|s| (s.day, s.bin));
            for pair in t.samples.windows(2) {
                if (pair[0].day, pair[0].bin) == (pair[1].day, pair[1].bin) {
                    return Err(Error::DuplicateSample {
                        user: t.user,
                        day: pair[0].day,
                        bin: pair[0].bin,
                        line: 0,
                    });
                }
            }
            for s in &t.samples {
                if !grid.contains(s.cell) {
                    return Err(Error::CellOutOfGrid {
                        x: s.cell.x,
                        y: s.cell.y,
                        width: grid.width,
                        height: grid.height,
                    });
                }
                if s.day >= day_count || s.bin >= BINS_PER_DAY {
                    return Err(Error::InvalidArgument(format!(
                        "user {} sample (day {}, bin {}) outside [0,{})x[0,48)",
                        t.user, s.day, s.bin, day_count
                    )));
                }
            }
            if by_user.insert(t.user, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate user id {}", t.user)));
            }
        }
        Ok(TraceSet { grid, day_count, trajectories, by_user, inverted: OnceLock::new() })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn user_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn sample_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }

    pub fn trajectory(&self, user: u64) -> Option<&Trajectory> {
        self.by_user.get(&user).map(|&i| &self.trajectories[i])
    }

    /// Inverted index cell -> sorted user ids; built once on first use.
    pub fn visitors_index(&self) -> &HashMap<Cell, Vec<u64>> {
        self.inverted.get_or_init(|| {
            let mut map: HashMap<Cell, HashSet<u64>> = HashMap::new();
            for t in &self.trajectories {
                for s in &t.samples {
                    map.entry(s.cell).or_default().insert(t.user);
                }
            }
            map.into_iter()
                .map(|(cell, users)| {
                    let mut v: Vec<u64> = users.into_iter().collect();
                    v.sort_unstable();
                    (cell, v)
                })
                .collect()
        })
    }

    /// s(l): number of distinct users who ever visited `cell`.
    pub fn unique_visitors(&self, cell: Cell) -> Result<usize> {
        if !self.grid.contains(cell) {
            return Err(Error::CellOutOfGrid {
                x: cell.x,
                y: cell.y,
                width: self.grid.width,
                height: self.grid.height,
            });
        }
        Ok(self.visitors_index().get(&cell).map_or(0, |v| v.len()))
    }

    pub fn visitors(&self, cell: Cell) -> &[u64] {
        self.visitors_index().get(&cell).map_or(&[], |v| v.as_slice())
    }
}

/// Load a trace set from headerless `uid,d,t,x,y` CSV.
pub fn load_traceset(path: impl AsRef<Path>, grid: GridSpec) -> Result<TraceSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = std::io::BufReader::new(file);

    let mut per_user: BTreeMap<u64, Vec<Sample>> = BTreeMap::new();
    let mut seen: HashSet<(u64, u16, u8)> = HashSet::new();
    let mut max_day: u16 = 0;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::MalformedRow {
                line: line_no,
                message: format!("expected 5 fields uid,d,t,x,y, found {}", fields.len()),
            });
        }
        let parse = |s: &str, name: &str| -> Result<u64> {
            s.trim().parse::<u64>().map_err(|_| Error::MalformedRow {
                line: line_no,
                message: format!("field {name} is not a non-negative integer: {s:?}"),
            })
        };
        let uid = parse(fields[0], "uid")?;
        let day = parse(fields[1], "d")?;
        let bin = parse(fields[2], "t")?;
        let x = parse(fields[3], "x")?;
        let y = parse(fields[4], "y")?;

        if bin >= BINS_PER_DAY as u64 {
            return Err(Error::OutOfRange {
                line: line_no,
                message: format!("bin {bin} outside [0, 48)"),
            });
        }
        if x >= grid.width as u64 || y >= grid.height as u64 {
            return Err(Error::OutOfRange {
                line: line_no,
                message: format!(
                    "cell ({x}, {y}) outside {}x{} grid (valid x in [0,{}], y in [0,{}])",
                    grid.width,
                    grid.height,
                    grid.width - 1,
                    grid.height - 1
                ),
            });
        }
        if day > u16::MAX as u64 {
            return Err(Error::OutOfRange {
                line: line_no,
                message: format!("day {day} too large"),
            });
        }
        let day = day as u16;
        let bin = bin as u8;
        if !seen.insert((uid, day, bin)) {
            return Err(Error::DuplicateSample { user: uid, day, bin, line: line_no });
        }
        max_day = max_day.max(day);
        per_user.entry(uid).or_default().push(Sample {
            day,
            bin,
            cell: Cell::new(x as u32, y as u32),
        });
    }

    let trajectories: Vec<Trajectory> = per_user
        .into_iter()
        .map(|(user, samples)| Trajectory { user, samples })
        .collect();
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no samples found in {}",
            path.display()
        )));
    }
    TraceSet::new(grid, max_day + 1, trajectories)
}

/// Write a trace set in the canonical CSV format (users ascending, samples
/// sorted by day then bin).
pub fn write_traceset(ts: &TraceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for t in ts.trajectories() {
        for s in &t.samples {
            writeln!(w, "{},{},{},{},{}", t.user, s.day, s.bin, s.cell.x, s.cell.y)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_well_formed_input() {
        let f = write_tmp("7,0,0,1,1\n7,0,1,2,2\n7,1,5,3,3\n");
        let ts = load_traceset(f.path(), GridSpec::new(4, 4, 500.0).unwrap()).unwrap();
        assert_eq!(ts.user_count(), 1);
        assert_eq!(ts.sample_count(), 3);
        assert_eq!(ts.day_count, 2);
    }

    #[test]
    fn out_of_range_cell_names_the_row() {
        let f = write_tmp("1,0,0,1,1\n1,0,1,200,5\n");
        let err = load_traceset(f.path(), GridSpec::default()).unwrap_err();
        match err {
            Error::OutOfRange { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("200"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_sample_rejected() {
        let f = write_tmp("1,0,0,1,1\n1,0,0,2,2\n");
        let err = load_traceset(f.path(), GridSpec::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateSample { user: 1, day: 0, bin: 0, line: 2 }));
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_tmp("1,0,0,1,1\nnot,a,row\n");
        let err = load_traceset(f.path(), GridSpec::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn unique_visitors_set_semantics() {
        let grid = GridSpec::new(4, 4, 500.0).unwrap();
        let c = Cell::new(1, 1);
        let ts = TraceSet::new(
            grid,
            2,
            vec![
                Trajectory {
                    user: 1,
                    samples: vec![
                        Sample { day: 0, bin: 0, cell: c },
                        Sample { day: 0, bin: 1, cell: c },
                    ],
                },
                Trajectory { user: 2, samples: vec![Sample { day: 0, bin: 0, cell: c }] },
            ],
        )
        .unwrap();
        assert_eq!(ts.unique_visitors(c).unwrap(), 2);
        assert_eq!(ts.unique_visitors(Cell::new(0, 0)).unwrap(), 0);
        assert!(ts.unique_visitors(Cell::new(9, 0)).is_err());
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let content = "1,0,0,1,1\n1,0,1,2,2\n3,1,5,3,3\n";
        let f = write_tmp(content);
        let ts = load_traceset(f.path(), GridSpec::new(4, 4, 500.0).unwrap()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_traceset(&ts, out.path()).unwrap();
        assert_eq!(std::fs::read_to_string(out.path()).unwrap(), content);
    }

    #[test]
    fn sample_conservation_under_indexing() {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let mut trajectories = Vec::new();
        for u in 0..10u64 {
            let samples: Vec<Sample> = (0..20u8)
                .map(|i| Sample {
                    day: (i / 4) as u16,
                    bin: i % 4 + (u as u8 % 3) * 10,
                    cell: Cell::new((u as u32 * 3 + i as u32) % 8, (i as u32 * 5) % 8),
                })
                .collect();
            trajectories.push(Trajectory { user: u, samples });
        }
        let ts = TraceSet::new(grid, 75, trajectories).unwrap();
        let per_cell_total: usize = {
            let mut count = 0usize;
            for t in ts.trajectories() {
                count += t.samples.len();
            }
            count
        };
        assert_eq!(per_cell_total, ts.sample_count());
        // full-scan oracle for every cell
        for x in 0..8 {
            for y in 0..8 {
                let cell = Cell::new(x, y);
                let oracle: std::collections::HashSet<u64> = ts
                    .trajectories()
                    .iter()
                    .filter(|t| t.samples.iter().any(|s| s.cell == cell))
                    .map(|t| t.user)
                    .collect();
                assert_eq!(ts.unique_visitors(cell).unwrap(), oracle.len());
            }
        }
    }
}
