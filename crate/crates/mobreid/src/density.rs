//! Density fields, dihedral transform search, and city matching.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::PopulationRaster;
use crate::error::{Error, Result};
use crate::trace::{Cell, GridSpec, TraceSet};

/// Per-cell visit or unique-visitor counts on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub width: u32,
    pub height: u32,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::InvalidArgument("field dimensions must be >= 1".into()));
        }
        Ok(DensityField { width, height, values: vec![0.0; width as usize * height as usize] })
    }

    pub fn from_values(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for {width}x{height} field, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("field values must be finite and >= 0".into()));
        }
        Ok(DensityField { width, height, values })
    }

    #[inline]
    fn idx(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[self.idx(cell)]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        let i = self.idx(cell);
        self.values[i] = value;
    }

    pub fn add(&mut self, cell: Cell, value: f64) {
        let i = self.idx(cell);
        self.values[i] += value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }
}

/// Whether a density field counts raw visits or distinct visitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityMode {
    Visits,
    UniqueUsers,
}

/// Per-cell density over an optional day range.
pub fn density_field(
    ts: &TraceSet,
    days: Option<std::ops::Range<u16>>,
    mode: DensityMode,
) -> Result<DensityField> {
    let range = days.unwrap_or(0..ts.day_count);
    if range.is_empty() {
        return Err(Error::InvalidArgument("empty day range".into()));
    }
    if range.end > ts.day_count {
        return Err(Error::InvalidArgument(format!(
            "day range end {} exceeds day count {}",
            range.end, ts.day_count
        )));
    }
    let mut field = DensityField::zeros(ts.grid.width, ts.grid.height)?;
    match mode {
        DensityMode::Visits => {
            for t in ts.trajectories() {
                for s in &t.samples {
                    if range.contains(&s.day) {
                        field.add(s.cell, 1.0);
                    }
                }
            }
        }
        DensityMode::UniqueUsers => {
            let mut seen: HashSet<(u64, Cell)> = HashSet::new();
            for t in ts.trajectories() {
                for s in &t.samples {
                    if range.contains(&s.day) && seen.insert((t.user, s.cell)) {
                        field.add(s.cell, 1.0);
                    }
                }
            }
        }
    }
    Ok(field)
}

/// The 8 symmetries of the square, applied to cell coordinates.
///
/// Naming follows the flip/rotation generators: `Rot90FlipY` means
/// "flip across the y-axis, then rotate +90 degrees".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DihedralTransform {
    Identity,
    FlipX,
    FlipY,
    FlipBoth,
    Rot90,
    RotNeg90,
    Rot90FlipX,
    Rot90FlipY,
}

pub const ALL_TRANSFORMS: [DihedralTransform; 8] = [
    DihedralTransform::Identity,
    DihedralTransform::FlipX,
    DihedralTransform::FlipY,
    DihedralTransform::FlipBoth,
    DihedralTransform::Rot90,
    DihedralTransform::RotNeg90,
    DihedralTransform::Rot90FlipX,
    DihedralTransform::Rot90FlipY,
];

impl DihedralTransform {
    /// Stable index used for tie-breaking and score tables.
    pub fn index(self) -> usize {
        ALL_TRANSFORMS.iter().position(|t| *t == self).unwrap()
    }

    /// Map a cell of a `width`x`height` grid to its image cell,
    /// re-indexed into non-negative coordinates. Rotation-like elements
    /// require a square grid.
    pub fn map_cell(self, cell: Cell, width: u32, height: u32) -> Cell {
        debug_assert!(!self.is_rotation_like() || width == height);
        let (w, h) = (width - 1, height - 1);
        let (x, y) = (cell.x, cell.y);
        // FlipX negates y, FlipY negates x; Rot90 sends (x, y) to (y, -x).
        let (nx, ny) = match self {
            DihedralTransform::Identity => (x, y),
            DihedralTransform::FlipX => (x, h - y),
            DihedralTransform::FlipY => (w - x, y),
            DihedralTransform::FlipBoth => (w - x, h - y),
            DihedralTransform::Rot90 => (y, w - x),
            DihedralTransform::RotNeg90 => (h - y, x),
            DihedralTransform::Rot90FlipX => (h - y, w - x),
            DihedralTransform::Rot90FlipY => (y, x),
        };
        Cell::new(nx, ny)
    }

    pub fn is_rotation_like(self) -> bool {
        matches!(
            self,
            DihedralTransform::Rot90
                | DihedralTransform::RotNeg90
                | DihedralTransform::Rot90FlipX
                | DihedralTransform::Rot90FlipY
        )
    }

    /// The group element equivalent to applying `self` after `first`.
    pub fn compose_after(self, first: DihedralTransform, probe_side: u32) -> DihedralTransform {
        // Resolve by action on two non-collinear probe cells.
        let a = Cell::new(1, 0);
        let b = Cell::new(0, 2);
        let img = |t: DihedralTransform, c: Cell| t.map_cell(c, probe_side, probe_side);
        let target = (img(self, img(first, a)), img(self, img(first, b)));
        for t in ALL_TRANSFORMS {
            if (img(t, a), img(t, b)) == target {
                return t;
            }
        }
        unreachable!("dihedral group is closed under composition")
    }

    pub fn inverse(self) -> DihedralTransform {
        for t in ALL_TRANSFORMS {
            if self.compose_after(t, 8) == DihedralTransform::Identity {
                return t;
            }
        }
        unreachable!("every dihedral element has an inverse")
    }
}

impl std::fmt::Display for DihedralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DihedralTransform::Identity => "identity",
            DihedralTransform::FlipX => "flip-x",
            DihedralTransform::FlipY => "flip-y",
            DihedralTransform::FlipBoth => "flip-both",
            DihedralTransform::Rot90 => "rot+90",
            DihedralTransform::RotNeg90 => "rot-90",
            DihedralTransform::Rot90FlipX => "rot+90*flip-x",
            DihedralTransform::Rot90FlipY => "rot+90*flip-y",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for DihedralTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_TRANSFORMS
            .iter()
            .copied()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown transform {s:?}")))
    }
}

/// Relocate every cell of `f` per the transform's coordinate map.
/// Total mass is preserved; rotations require a square field.
pub fn apply_transform(f: &DensityField, t: DihedralTransform) -> Result<DensityField> {
    if t.is_rotation_like() && !f.is_square() {
        return Err(Error::InvalidArgument(format!(
            "rotation {t} requires a square field, got {}x{}",
            f.width, f.height
        )));
    }
    let mut out = DensityField::zeros(f.width, f.height)?;
    for y in 0..f.height {
        for x in 0..f.width {
            let src = Cell::new(x, y);
            let dst = t.map_cell(src, f.width, f.height);
            out.set(dst, f.get(src));
        }
    }
    Ok(out)
}

/// Spearman rank correlation: Pearson over average-ranked values.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("need >= 2 values, got {}", a.len())));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

/// Fractional (average) ranks, 1-based; ties share the mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedCorrelation("zero-variance input".into()));
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Sum each non-overlapping cw x ch block into one value.
pub fn block_sums(f: &DensityField, cluster: (u32, u32)) -> Result<Vec<f64>> {
    let (cw, ch) = cluster;
    if cw == 0 || ch == 0 || f.width % cw != 0 || f.height % ch != 0 {
        return Err(Error::InvalidArgument(format!(
            "cluster {cw}x{ch} does not divide field {}x{}",
            f.width, f.height
        )));
    }
    let bx = f.width / cw;
    let by = f.height / ch;
    let mut sums = vec![0.0; (bx * by) as usize];
    for y in 0..f.height {
        for x in 0..f.width {
            let block = (y / ch) * bx + (x / cw);
            sums[block as usize] += f.get(Cell::new(x, y));
        }
    }
    Ok(sums)
}

/// Spearman correlation between block-aggregated density vectors.
pub fn clustered_correlation(
    f: &DensityField,
    reference: &DensityField,
    cluster: (u32, u32),
) -> Result<f64> {
    if f.width != reference.width || f.height != reference.height {
        return Err(Error::InvalidArgument(format!(
            "field {}x{} vs reference {}x{} dimension mismatch",
            f.width, f.height, reference.width, reference.height
        )));
    }
    let a = block_sums(f, cluster)?;
    let b = block_sums(reference, cluster)?;
    spearman(&a, &b)
}

/// Resample a raster onto a working grid by area-weighted aggregation.
/// Both grids are assumed co-centered.
pub fn resample_to_grid(raster: &PopulationRaster, grid: &GridSpec) -> Result<DensityField> {
    if raster.field.width == grid.width
        && raster.field.height == grid.height
        && (raster.cell_size_m - grid.cell_size_m).abs() < 1e-9
    {
        return Ok(raster.field.clone());
    }
    let mut out = DensityField::zeros(grid.width, grid.height)?;
    // 1-D overlap weights along each axis, in meters, centered frames.
    let weights = |src_n: u32, src_sz: f64, dst_n: u32, dst_sz: f64| -> Vec<Vec<(usize, f64)>> {
        let src_half = src_n as f64 * src_sz / 2.0;
        let dst_half = dst_n as f64 * dst_sz / 2.0;
        (0..dst_n)
            .map(|d| {
                let lo = d as f64 * dst_sz - dst_half;
                let hi = lo + dst_sz;
                let mut w = Vec::new();
                for s in 0..src_n {
                    let slo = s as f64 * src_sz - src_half;
                    let shi = slo + src_sz;
                    let overlap = (hi.min(shi) - lo.max(slo)).max(0.0);
                    if overlap > 0.0 {
                        w.push((s as usize, overlap / src_sz));
                    }
                }
                w
            })
            .collect()
    };
    let wx = weights(raster.field.width, raster.cell_size_m, grid.width, grid.cell_size_m);
    let wy = weights(raster.field.height, raster.cell_size_m, grid.height, grid.cell_size_m);
    for (dy, row_w) in wy.iter().enumerate() {
        for (dx, col_w) in wx.iter().enumerate() {
            let mut acc = 0.0;
            for &(sy, fy) in row_w {
                for &(sx, fx) in col_w {
                    acc += raster.field.get(Cell::new(sx as u32, sy as u32)) * fx * fy;
                }
            }
            out.set(Cell::new(dx as u32, dy as u32), acc);
        }
    }
    Ok(out)
}

/// One entry of the 8 x |cities| score table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub city: String,
    pub transform: DihedralTransform,
    /// None when the correlation is undefined for this pair.
    pub score: Option<f64>,
}

/// Output of the transform x city argmax search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchResult {
    pub best_city: String,
    pub best_transform: DihedralTransform,
    pub best_score: f64,
    /// Best minus runner-up score; None when only one entry is defined.
    pub margin: Option<f64>,
    pub scores: Vec<ScoreEntry>,
}

/// Evaluate all 8 transforms against all rasters and return the argmax.
///
/// Rasters are resampled to the working grid first. Undefined
/// correlations are recorded as `None` and excluded from the argmax.
/// Ties break lexicographically on (city label, transform index).
pub fn match_city(
    f: &DensityField,
    grid: &GridSpec,
    rasters: &[PopulationRaster],
    cluster: (u32, u32),
) -> Result<MatchResult> {
    if rasters.is_empty() {
        return Err(Error::InvalidArgument("need at least one raster".into()));
    }
    let resampled: Vec<(String, DensityField)> = rasters
        .iter()
        .map(|r| Ok((r.name.clone(), resample_to_grid(r, grid)?)))
        .collect::<Result<_>>()?;

    let pairs: Vec<(DihedralTransform, usize)> = ALL_TRANSFORMS
        .iter()
        .flat_map(|&t| (0..resampled.len()).map(move |j| (t, j)))
        .collect();
    // The reported transform is the one that maps the reference raster
    // onto the observed release, so the raster side is transformed and
    // scored against the observation as-is.
    let scores: Vec<ScoreEntry> = pairs
        .par_iter()
        .map(|&(t, j)| {
            let entry = apply_transform(&resampled[j].1, t)
                .and_then(|tf| clustered_correlation(f, &tf, cluster));
            ScoreEntry {
                city: resampled[j].0.clone(),
                transform: t,
                score: entry.ok(),
            }
        })
        .collect();

    let mut best: Option<&ScoreEntry> = None;
    for e in &scores {
        let Some(s) = e.score else { continue };
        match best {
            None => best = Some(e),
            Some(b) => {
                let bs = b.score.unwrap();
                let better = s > bs
                    || (s == bs
                        && (e.city.as_str(), e.transform.index())
                            < (b.city.as_str(), b.transform.index()));
                if better {
                    best = Some(e);
                }
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::UndefinedCorrelation("every transform x city score was undefined".into())
    })?;
    let runner_up = scores
        .iter()
        .filter(|e| !(e.city == best.city && e.transform == best.transform))
        .filter_map(|e| e.score)
        .fold(None::<f64>, |acc, s| Some(acc.map_or(s, |a| a.max(s))));
    Ok(MatchResult {
        best_city: best.city.clone(),
        best_transform: best.transform,
        best_score: best.score.unwrap(),
        margin: runner_up.map(|r| best.score.unwrap() - r),
        scores,
    })
}
