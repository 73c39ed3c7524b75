//! Hill-climbing refinement of the geographic anchor and the
//! cell-to-coordinate mapping it yields.

use serde::{Deserialize, Serialize};

use crate::density::{clustered_correlation, spearman, DensityField};
use crate::error::{Error, Result};
use crate::trace::{Cell, GridSpec};

pub const METERS_PER_DEG_LAT: f64 = 111_320.0;

/// Anything that can rasterize a geo-referenced population surface onto
/// the working grid for an arbitrary candidate center.
pub trait PopulationSampler: Sync {
    fn rasterize(&self, center_lat: f64, center_lon: f64, grid: &GridSpec) -> Result<DensityField>;
}

/// Result of the steepest-ascent alignment search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeoAlignment {
    pub center_lat: f64,
    pub center_lon: f64,
    pub correlation: f64,
    pub iterations: u32,
    pub step_deg: f64,
}

fn score(
    f: &DensityField,
    candidate: &DensityField,
    cluster: Option<(u32, u32)>,
) -> Result<f64> {
    match cluster {
        Some(c) => clustered_correlation(f, candidate, c),
        None => spearman(f.values(), candidate.values()),
    }
}

/// Steepest-ascent over the 4-neighborhood {±step lat, ±step lon}.
///
/// Moves to the best strictly-improving neighbor; terminates when none
/// improves. `cluster = None` correlates at cell level.
pub fn hill_climb_align(
    f: &DensityField,
    sampler: &dyn PopulationSampler,
    grid: &GridSpec,
    start: (f64, f64),
    step_deg: f64,
    cluster: Option<(u32, u32)>,
) -> Result<GeoAlignment> {
    if !(step_deg > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let eval = |lat: f64, lon: f64| -> Result<f64> {
        let candidate = sampler.rasterize(lat, lon, grid)?;
        score(f, &candidate, cluster)
    };
    let (mut lat, mut lon) = start;
    let mut current = eval(lat, lon)?;
    let mut iterations = 0u32;
    loop {
        let neighbors = [
            (lat + step_deg, lon),
            (lat - step_deg, lon),
            (lat, lon + step_deg),
            (lat, lon - step_deg),
        ];
        let mut best: Option<(f64, f64, f64)> = None;
        for (nlat, nlon) in neighbors {
            let s = eval(nlat, nlon)?;
            if s > current && best.map_or(true, |(bs, _, _)| s > bs) {
                best = Some((s, nlat, nlon));
            }
        }
        match best {
            Some((s, nlat, nlon)) => {
                current = s;
                lat = nlat;
                lon = nlon;
                iterations += 1;
            }
            None => break,
        }
    }
    Ok(GeoAlignment {
        center_lat: lat,
        center_lon: lon,
        correlation: current,
        iterations,
        step_deg,
    })
}

/// Cell-center latitude/longitude under an aligned frame, using a local
/// equirectangular approximation at the center latitude. y grows north,
/// x grows east.
pub fn cells_to_geo(alignment: &GeoAlignment, grid: &GridSpec, cell: Cell) -> Result<(f64, f64)> {
    if !grid.contains(cell) {
        return Err(Error::CellOutOfGrid {
            x: cell.x,
            y: cell.y,
            width: grid.width,
            height: grid.height,
        });
    }
    let dx_m = (cell.x as f64 + 0.5 - grid.width as f64 / 2.0) * grid.cell_size_m;
    let dy_m = (cell.y as f64 + 0.5 - grid.height as f64 / 2.0) * grid.cell_size_m;
    let lat = alignment.center_lat + dy_m / METERS_PER_DEG_LAT;
    let lon = alignment.center_lon
        + dx_m / (METERS_PER_DEG_LAT * alignment.center_lat.to_radians().cos());
    Ok((lat, lon))
}

/// Inverse of [`cells_to_geo`] up to cell quantization.
pub fn geo_to_cell(alignment: &GeoAlignment, grid: &GridSpec, lat: f64, lon: f64) -> Option<Cell> {
    let dy_m = (lat - alignment.center_lat) * METERS_PER_DEG_LAT;
    let dx_m = (lon - alignment.center_lon)
        * METERS_PER_DEG_LAT
        * alignment.center_lat.to_radians().cos();
    let x = (dx_m / grid.cell_size_m + grid.width as f64 / 2.0).floor();
    let y = (dy_m / grid.cell_size_m + grid.height as f64 / 2.0).floor();
    if x < 0.0 || y < 0.0 || x >= grid.width as f64 || y >= grid.height as f64 {
        return None;
    }
    Some(Cell::new(x as u32, y as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alignment() -> GeoAlignment {
        GeoAlignment {
            center_lat: 35.055019,
            center_lon: 136.971202,
            correlation: 1.0,
            iterations: 0,
            step_deg: 0.01,
        }
    }

    #[test]
    fn center_cell_maps_to_alignment_center() {
        // odd grid: the center cell's midpoint sits exactly at the anchor
        let grid = GridSpec::new(9, 9, 500.0).unwrap();
        let a = alignment();
        let (lat, lon) = cells_to_geo(&a, &grid, Cell::new(4, 4)).unwrap();
        assert!((lat - a.center_lat).abs() < 1e-12);
        assert!((lon - a.center_lon).abs() < 1e-12);
    }

    #[test]
    fn one_column_east_shifts_longitude_by_local_scale() {
        let grid = GridSpec::new(9, 9, 500.0).unwrap();
        let a = alignment();
        let (_, lon0) = cells_to_geo(&a, &grid, Cell::new(4, 4)).unwrap();
        let (_, lon1) = cells_to_geo(&a, &grid, Cell::new(5, 4)).unwrap();
        let expected = 500.0 / (METERS_PER_DEG_LAT * a.center_lat.to_radians().cos());
        assert!((lon1 - lon0 - expected).abs() < 1e-12);
    }

    #[test]
    fn geo_roundtrip_within_half_cell() {
        let grid = GridSpec::new(20, 20, 500.0).unwrap();
        let a = alignment();
        for x in [0u32, 7, 19] {
            for y in [0u32, 11, 19] {
                let cell = Cell::new(x, y);
                let (lat, lon) = cells_to_geo(&a, &grid, cell).unwrap();
                assert_eq!(geo_to_cell(&a, &grid, lat, lon), Some(cell));
            }
        }
    }
}
