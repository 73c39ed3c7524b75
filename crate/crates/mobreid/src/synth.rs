//! Synthetic cities, trajectories, and timelines with planted ground
//! truth, so every attack stage is testable without real data.
//!
//! The generator plants recoverable structure rather than modeling
//! human mobility: homes and workplaces are drawn from a parametric
//! density template, weekday routines fill the home/work time masks
//! deterministically, and the whole release is pushed through a
//! planted dihedral transform.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::align::PopulationSampler;
use crate::catalog::{HolidayCalendar, PopulationRaster};
use crate::density::{
    apply_transform, clustered_correlation, DensityField, DihedralTransform, ALL_TRANSFORMS,
};
use crate::error::{Error, Result};
use crate::metrics::{HOME_MASK, WORK_MASK};
use crate::rng::derive_rng2;
use crate::trace::{Cell, GridSpec, Sample, TraceSet, Trajectory, BINS_PER_DAY};

const USER_STREAM: u64 = 0x73796e7468;

/// Number of distinct parametric city templates.
pub const TEMPLATE_COUNT: usize = 10;

const TEMPLATE_NAMES: [&str; TEMPLATE_COUNT] = [
    "mono-offset",
    "dual-core",
    "west-corridor",
    "ring-accent",
    "quad-core",
    "east-crescent",
    "compact-aniso",
    "sloped-ridge",
    "corner-ramp",
    "twin-corridor",
];

pub fn template_name(id: usize) -> Result<&'static str> {
    TEMPLATE_NAMES
        .get(id)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("template id {id} outside 0..{TEMPLATE_COUNT}")))
}

fn gauss(u: f64, v: f64, cu: f64, cv: f64, su: f64, sv: f64) -> f64 {
    let du = (u - cu) / su;
    let dv = (v - cv) / sv;
    (-(du * du + dv * dv) / 2.0).exp()
}

/// Deterministic pseudo-random value in [0, 1); a pure hash keeps the
/// templates seed-free.
fn unit_hash(id: usize, j: u64) -> f64 {
    let h = crate::rng::mix(id as u64 * 1315423911 ^ j.wrapping_mul(2654435761));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Per-template population gradient: a multiplicative planar tilt whose
/// direction is hashed into a band staying at least 10 degrees away
/// from every mirror axis of the square (horizontal, vertical, and both
/// diagonals). A tilt in such a generic direction is preserved by no
/// dihedral symmetry, so every template image under a non-identity
/// transform is distinguishable from the template itself — which is
/// what makes a planted transform identifiable.
fn tilt(id: usize, u: f64, v: f64) -> f64 {
    let h = unit_hash(id, 1);
    let deg = if h < 0.5 { 25.0 + 20.0 * h } else { 55.0 + 20.0 * (h - 0.5) };
    let theta = deg.to_radians();
    let strength = 0.9 + 0.3 * unit_hash(id, 2);
    1.0 + strength * (theta.cos() * (u - 0.5) + theta.sin() * (v - 0.5))
}

/// Template intensity at normalized coordinates (u, v) in the unit
/// square. Each template is a named structural layout plus a strong
/// compact blob at a hashed generic position, modulated by the
/// symmetry-breaking [`tilt`].
pub fn template_intensity(id: usize, u: f64, v: f64) -> f64 {
    let base = 0.02;
    let (bu, bv) = (0.20 + 0.60 * unit_hash(id, 3), 0.20 + 0.60 * unit_hash(id, 4));
    let blob = 0.80 * gauss(u, v, bu, bv, 0.09, 0.07);
    let structure = match id {
        0 => gauss(u, v, 0.32, 0.62, 0.14, 0.12) + 0.50 * gauss(u, v, 0.72, 0.40, 0.08, 0.08),
        1 => gauss(u, v, 0.28, 0.42, 0.10, 0.10) + 0.50 * gauss(u, v, 0.68, 0.22, 0.14, 0.10),
        2 => {
            gauss(u, v, 0.50, 0.35, 0.32, 0.07)
                + 0.70 * gauss(u, v, 0.12, 0.35, 0.07, 0.11)
                + 0.30 * gauss(u, v, 0.82, 0.62, 0.07, 0.07)
        }
        3 => {
            let r = ((u - 0.52).powi(2) + (v - 0.30).powi(2)).sqrt();
            (-((r - 0.24) / 0.05).powi(2) / 2.0).exp() + 0.80 * gauss(u, v, 0.84, 0.68, 0.06, 0.06)
        }
        4 => {
            gauss(u, v, 0.20, 0.30, 0.08, 0.08)
                + 0.75 * gauss(u, v, 0.62, 0.18, 0.08, 0.08)
                + 0.55 * gauss(u, v, 0.35, 0.78, 0.08, 0.08)
                + 0.35 * gauss(u, v, 0.82, 0.58, 0.08, 0.08)
        }
        5 => {
            let r = ((u - 0.45).powi(2) + (v - 0.42).powi(2)).sqrt();
            let ring = (-((r - 0.30) / 0.06).powi(2) / 2.0).exp();
            let east = 1.0 / (1.0 + (-12.0 * (u - 0.5)).exp());
            ring * east + 0.80 * gauss(u, v, 0.70, 0.85, 0.07, 0.06)
        }
        6 => gauss(u, v, 0.55, 0.30, 0.14, 0.05),
        7 => {
            let d = v - 0.30 - 0.50 * u;
            (-(d / 0.06).powi(2) / 2.0).exp() * (0.30 + 0.70 * u)
        }
        8 => (2.2 * u - 0.4 * v).exp() / (2.2f64).exp(),
        9 => {
            gauss(u, v, 0.40, 0.22, 0.28, 0.05)
                + 0.45 * gauss(u, v, 0.62, 0.68, 0.25, 0.08)
                + 0.35 * gauss(u, v, 0.15, 0.40, 0.05, 0.05)
        }
        _ => 0.0,
    };
    tilt(id, u, v) * (base + blob + structure)
}

/// Rasterize a template onto a grid (cell centers at normalized coords).
pub fn template_field(id: usize, grid: &GridSpec) -> Result<DensityField> {
    template_name(id)?;
    let mut f = DensityField::zeros(grid.width, grid.height)?;
    for y in 0..grid.height {
        for x in 0..grid.width {
            let u = (x as f64 + 0.5) / grid.width as f64;
            let v = (y as f64 + 0.5) / grid.height as f64;
            f.set(Cell::new(x, y), template_intensity(id, u, v));
        }
    }
    Ok(f)
}

/// Deterministic city rasters from the first `count` templates, with
/// the pairwise-distinguishability invariant (clustered correlation
/// < 0.8) enforced at generation time.
pub fn gen_city_rasters(
    grid: &GridSpec,
    count: usize,
    cluster: (u32, u32),
    base_center: (f64, f64),
) -> Result<Vec<PopulationRaster>> {
    if !(2..=TEMPLATE_COUNT).contains(&count) {
        return Err(Error::InvalidArgument(format!(
            "raster count {count} outside 2..={TEMPLATE_COUNT}"
        )));
    }
    let mut rasters = Vec::with_capacity(count);
    for id in 0..count {
        rasters.push(PopulationRaster {
            name: template_name(id)?.to_string(),
            field: template_field(id, grid)?,
            center_lat: base_center.0,
            center_lon: base_center.1 + id as f64 * 0.5,
            cell_size_m: grid.cell_size_m,
        });
    }
    for i in 0..count {
        for j in i + 1..count {
            let c = clustered_correlation(&rasters[i].field, &rasters[j].field, cluster)?;
            if c >= 0.8 {
                return Err(Error::Generation(format!(
                    "templates '{}' and '{}' indistinguishable: clustered correlation {c:.3}",
                    rasters[i].name, rasters[j].name
                )));
            }
        }
        // A template that nearly coincides with one of its own images
        // would make the planted transform ambiguous.
        for t in ALL_TRANSFORMS {
            if t == DihedralTransform::Identity {
                continue;
            }
            let image = apply_transform(&rasters[i].field, t)?;
            let c = clustered_correlation(&rasters[i].field, &image, cluster)?;
            if c >= 0.8 {
                return Err(Error::Generation(format!(
                    "template '{}' near-symmetric under {t}: clustered correlation {c:.3}",
                    rasters[i].name
                )));
            }
        }
    }
    Ok(rasters)
}

/// A venue with planted attendance spikes: on each listed day, the
/// per-day magnitude counts extra distinct visitors at the cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpikeSpec {
    /// Cell in the template frame (pre-transform).
    pub cell: Cell,
    pub days: Vec<u16>,
    pub magnitudes: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub grid: GridSpec,
    pub template: usize,
    pub user_count: u32,
    pub day_count: u16,
    pub transform: DihedralTransform,
    pub start_date: NaiveDate,
    pub calendar: HolidayCalendar,
    /// Fraction of users with a distinct work anchor.
    pub commuter_fraction: f64,
    /// Expected Poisson count of extra off-routine visits per user-day.
    pub noise_level: f64,
    pub spikes: Vec<SpikeSpec>,
}

impl SynthConfig {
    /// A small commuter city with no noise and no planted spikes.
    pub fn basic(seed: u64, grid: GridSpec, template: usize, users: u32, days: u16) -> Self {
        SynthConfig {
            seed,
            grid,
            template,
            user_count: users,
            day_count: days,
            transform: DihedralTransform::Identity,
            start_date: NaiveDate::from_ymd_opt(2019, 9, 15).unwrap(),
            calendar: HolidayCalendar::bundled_japan(),
            commuter_fraction: 1.0,
            noise_level: 0.0,
            spikes: Vec::new(),
        }
    }
}

/// Everything planted into a generated release, in the released
/// (post-transform) frame unless stated otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub template: String,
    pub template_id: usize,
    pub transform: String,
    pub start_date: NaiveDate,
    /// Weekday calendar holidays (class A on a Mon–Fri day index).
    pub holiday_days: Vec<u16>,
    /// All non-working day indices (weekends plus holidays).
    pub class_a_days: Vec<u16>,
    /// Per-user (home, work) in the released frame; work is None for
    /// non-commuters.
    pub anchors: Vec<(u64, Cell, Option<Cell>)>,
    /// Spike venues in the released frame with their planted days.
    pub spike_days: Vec<(Cell, Vec<u16>)>,
}

/// Knuth Poisson sampler; adequate for the small rates used here.
fn poisson(lambda: f64, rng: &mut impl Rng) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let l = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0;
    loop {
        p *= rng.gen_range(0.0..1.0f64);
        if p <= l {
            return k;
        }
        k += 1;
    }
}

fn day_is_class_a(cfg: &SynthConfig, day: u16) -> Result<(bool, bool)> {
    let date = cfg
        .start_date
        .checked_add_days(chrono::Days::new(day as u64))
        .ok_or_else(|| Error::Generation("start date overflows calendar".into()))?;
    let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
    let holiday = cfg.calendar.is_holiday(date);
    Ok((weekend || holiday, holiday && !weekend))
}

/// Generate a trace release plus its ground-truth sidecar.
///
/// Weekday (class B) routine: every home-mask bin at the home cell,
/// every work-mask bin at the work cell. Non-working (class A) days:
/// bins 16–44 at home. Poisson noise fills only otherwise-empty bins
/// outside bins 12–13 (class B) / 0–1 (class A), which are reserved
/// for spike visits, so planted anchors stay exact at any noise level.
pub fn gen_traces(cfg: &SynthConfig) -> Result<(TraceSet, GroundTruth)> {
    if cfg.user_count == 0 || cfg.day_count == 0 {
        return Err(Error::Generation("user and day counts must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.commuter_fraction) {
        return Err(Error::Generation("commuter fraction outside [0, 1]".into()));
    }
    if cfg.transform.is_rotation_like() && cfg.grid.width != cfg.grid.height {
        return Err(Error::Generation(format!(
            "transform {} needs a square grid, got {}x{}",
            cfg.transform, cfg.grid.width, cfg.grid.height
        )));
    }
    let template = template_field(cfg.template, &cfg.grid)?;
    let weights = WeightedIndex::new(template.values().iter().copied())
        .map_err(|e| Error::Generation(format!("template weights: {e}")))?;

    let mut class_a_days = Vec::new();
    let mut holiday_days = Vec::new();
    for day in 0..cfg.day_count {
        let (class_a, weekday_holiday) = day_is_class_a(cfg, day)?;
        if class_a {
            class_a_days.push(day);
        }
        if weekday_holiday {
            holiday_days.push(day);
        }
    }
    if class_a_days.len() == cfg.day_count as usize {
        return Err(Error::Generation("no working day in the generated span".into()));
    }
    for spike in &cfg.spikes {
        if spike.days.len() != spike.magnitudes.len() {
            return Err(Error::Generation("spike days/magnitudes length mismatch".into()));
        }
        if !cfg.grid.contains(spike.cell) {
            return Err(Error::Generation(format!(
                "spike cell ({}, {}) outside grid",
                spike.cell.x, spike.cell.y
            )));
        }
        if spike.days.iter().any(|d| *d >= cfg.day_count) {
            return Err(Error::Generation("spike day outside span".into()));
        }
    }

    let is_class_a: Vec<bool> = (0..cfg.day_count)
        .map(|d| class_a_days.binary_search(&d).is_ok())
        .collect();
    let w = cfg.grid.width;
    let h = cfg.grid.height;
    let mut trajectories = Vec::with_capacity(cfg.user_count as usize);
    let mut anchors = Vec::with_capacity(cfg.user_count as usize);
    for user in 0..cfg.user_count as u64 {
        let mut rng = derive_rng2(cfg.seed, USER_STREAM, user);
        let home = cfg.grid.cell_at(weights.sample(&mut rng));
        let commuter = rng.gen_range(0.0..1.0) < cfg.commuter_fraction;
        let work = if commuter {
            let mut c = cfg.grid.cell_at(weights.sample(&mut rng));
            for _ in 0..64 {
                if c != home {
                    break;
                }
                c = cfg.grid.cell_at(weights.sample(&mut rng));
            }
            if c == home {
                // dense single-cell template: nudge deterministically
                c = cfg.grid.cell_at((cfg.grid.cell_index(home) + 1) % cfg.grid.cell_count());
            }
            Some(c)
        } else {
            None
        };
        let mut samples = Vec::new();
        for day in 0..cfg.day_count {
            let mut occupied = [false; BINS_PER_DAY as usize];
            if is_class_a[day as usize] {
                for bin in 16..44u8 {
                    samples.push(Sample { day, bin, cell: home });
                    occupied[bin as usize] = true;
                }
            } else {
                for bin in 0..BINS_PER_DAY {
                    if HOME_MASK(bin) {
                        samples.push(Sample { day, bin, cell: home });
                        occupied[bin as usize] = true;
                    } else if WORK_MASK(bin) {
                        samples.push(Sample { day, bin, cell: work.unwrap_or(home) });
                        occupied[bin as usize] = true;
                    }
                }
            }
            // reserved spike bins stay empty of noise
            let reserved: [u8; 2] = if is_class_a[day as usize] { [0, 1] } else { [12, 13] };
            let extra = poisson(cfg.noise_level, &mut rng);
            for _ in 0..extra {
                let bin = rng.gen_range(0..BINS_PER_DAY);
                if occupied[bin as usize] || reserved.contains(&bin) {
                    continue;
                }
                occupied[bin as usize] = true;
                let cell = cfg.grid.cell_at(weights.sample(&mut rng));
                samples.push(Sample { day, bin, cell });
            }
        }
        trajectories.push(Trajectory { user, samples });
        anchors.push((user, home, work));
    }

    // plant venue spikes on reserved bins with deterministic user choice
    for (si, spike) in cfg.spikes.iter().enumerate() {
        for (di, (&day, &magnitude)) in spike.days.iter().zip(&spike.magnitudes).enumerate() {
            let reserved: [u8; 2] = if is_class_a[day as usize] { [0, 1] } else { [12, 13] };
            let cap = (2 * cfg.user_count).min(magnitude);
            for i in 0..cap {
                let user = ((si as u64 * 131 + di as u64 * 31 + i as u64 * 7 + day as u64)
                    .wrapping_mul(2654435761))
                    % cfg.user_count as u64;
                let bin = reserved[(i / cfg.user_count) as usize];
                let t = &mut trajectories[user as usize];
                if t.samples.iter().any(|s| s.day == day && s.bin == bin) {
                    continue;
                }
                t.samples.push(Sample { day, bin, cell: spike.cell });
            }
        }
    }

    // push everything through the planted transform
    for t in trajectories.iter_mut() {
        for s in t.samples.iter_mut() {
            s.cell = cfg.transform.map_cell(s.cell, w, h);
        }
    }
    let anchors: Vec<(u64, Cell, Option<Cell>)> = anchors
        .into_iter()
        .map(|(u, home, work)| {
            (u, cfg.transform.map_cell(home, w, h), work.map(|c| cfg.transform.map_cell(c, w, h)))
        })
        .collect();
    let spike_days: Vec<(Cell, Vec<u16>)> = cfg
        .spikes
        .iter()
        .map(|s| (cfg.transform.map_cell(s.cell, w, h), s.days.clone()))
        .collect();

    let ts = TraceSet::new(cfg.grid.clone(), cfg.day_count, trajectories)?;
    let truth = GroundTruth {
        template: template_name(cfg.template)?.to_string(),
        template_id: cfg.template,
        transform: cfg.transform.to_string(),
        start_date: cfg.start_date,
        holiday_days,
        class_a_days,
        anchors,
        spike_days,
    };
    Ok((ts, truth))
}

/// A geo-referenced synthetic population surface: the template spans a
/// square of `extent_m` meters centered at the true city center. Used
/// to exercise the alignment hill climb with a planted optimum.
#[derive(Debug, Clone)]
pub struct GeoTemplateSampler {
    pub template: usize,
    pub true_lat: f64,
    pub true_lon: f64,
    pub extent_m: f64,
}

impl PopulationSampler for GeoTemplateSampler {
    fn rasterize(&self, center_lat: f64, center_lon: f64, grid: &GridSpec) -> Result<DensityField> {
        use crate::align::METERS_PER_DEG_LAT;
        template_name(self.template)?;
        if !(self.extent_m > 0.0) {
            return Err(Error::SamplerFailure {
                lat: center_lat,
                lon: center_lon,
                message: "non-positive extent".into(),
            });
        }
        let lon_scale = METERS_PER_DEG_LAT * self.true_lat.to_radians().cos();
        let off_x = (center_lon - self.true_lon) * lon_scale;
        let off_y = (center_lat - self.true_lat) * METERS_PER_DEG_LAT;
        let mut f = DensityField::zeros(grid.width, grid.height)?;
        for y in 0..grid.height {
            for x in 0..grid.width {
                let dx = (x as f64 + 0.5 - grid.width as f64 / 2.0) * grid.cell_size_m + off_x;
                let dy = (y as f64 + 0.5 - grid.height as f64 / 2.0) * grid.cell_size_m + off_y;
                let u = 0.5 + dx / self.extent_m;
                let v = 0.5 + dy / self.extent_m;
                f.set(Cell::new(x, y), template_intensity(self.template, u, v));
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{density_field, match_city, DensityMode};
    use crate::metrics::infer_anchors;

    fn grid40() -> GridSpec {
        GridSpec::new(40, 40, 500.0).unwrap()
    }

    #[test]
    fn ten_templates_pairwise_distinguishable() {
        let rasters = gen_city_rasters(&grid40(), TEMPLATE_COUNT, (8, 8), (35.0, 135.0)).unwrap();
        assert_eq!(rasters.len(), TEMPLATE_COUNT);
    }

    #[test]
    fn rasters_deterministic() {
        let a = gen_city_rasters(&grid40(), 3, (8, 8), (35.0, 135.0)).unwrap();
        let b = gen_city_rasters(&grid40(), 3, (8, 8), (35.0, 135.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.field.values(), y.field.values());
        }
    }

    #[test]
    fn zero_noise_full_commuters_recover_all_anchors() {
        let cfg = SynthConfig::basic(1, grid40(), 0, 60, 14);
        let (ts, truth) = gen_traces(&cfg).unwrap();
        for (user, home, work) in &truth.anchors {
            let sig = infer_anchors(ts.trajectory(*user).unwrap(), 0).unwrap();
            assert_eq!(sig.home, *home);
            assert_eq!(sig.work, work.unwrap());
        }
    }

    #[test]
    fn identity_transform_matches_own_template() {
        let cfg = SynthConfig::basic(2, grid40(), 4, 200, 14);
        let (ts, _) = gen_traces(&cfg).unwrap();
        let f = density_field(&ts, None, DensityMode::Visits).unwrap();
        let rasters = gen_city_rasters(&grid40(), 6, (8, 8), (35.0, 135.0)).unwrap();
        let result = match_city(&f, &ts.grid, &rasters, (8, 8)).unwrap();
        assert_eq!(result.best_city, "quad-core");
        assert_eq!(result.best_transform, DihedralTransform::Identity);
    }

    #[test]
    fn planted_transform_recovered() {
        let mut cfg = SynthConfig::basic(3, grid40(), 0, 300, 14);
        cfg.transform = DihedralTransform::Rot90FlipY;
        cfg.noise_level = 1.0;
        let (ts, truth) = gen_traces(&cfg).unwrap();
        assert_eq!(truth.transform, "rot+90*flip-y");
        let f = density_field(&ts, None, DensityMode::Visits).unwrap();
        let rasters = gen_city_rasters(&grid40(), TEMPLATE_COUNT, (8, 8), (35.0, 135.0)).unwrap();
        let result = match_city(&f, &ts.grid, &rasters, (8, 8)).unwrap();
        assert_eq!(result.best_city, "mono-offset");
        assert_eq!(result.best_transform, DihedralTransform::Rot90FlipY);
        assert!(result.margin.unwrap() > 0.0);
    }

    #[test]
    fn generation_is_pure_in_config() {
        let cfg = SynthConfig::basic(9, grid40(), 7, 40, 10);
        let (a, _) = gen_traces(&cfg).unwrap();
        let (b, _) = gen_traces(&cfg).unwrap();
        for (x, y) in a.trajectories().iter().zip(b.trajectories()) {
            assert_eq!(x.samples, y.samples);
        }
    }

    #[test]
    fn all_weekend_span_is_infeasible() {
        // 2019-09-14 is a Saturday; a 2-day span has no working day
        let mut cfg = SynthConfig::basic(1, grid40(), 0, 5, 2);
        cfg.start_date = NaiveDate::from_ymd_opt(2019, 9, 14).unwrap();
        assert!(matches!(gen_traces(&cfg), Err(Error::Generation(_))));
    }

    #[test]
    fn spikes_add_expected_unique_visitors() {
        let mut cfg = SynthConfig::basic(5, grid40(), 0, 80, 14);
        let venue = Cell::new(33, 7);
        cfg.spikes = vec![SpikeSpec { cell: venue, days: vec![2, 5], magnitudes: vec![40, 25] }];
        let (ts, truth) = gen_traces(&cfg).unwrap();
        assert_eq!(truth.spike_days[0].0, venue);
        let visitors_on = |day: u16| {
            ts.trajectories()
                .iter()
                .filter(|t| t.samples.iter().any(|s| s.day == day && s.cell == venue))
                .count()
        };
        assert!(visitors_on(2) >= 30, "day 2 visitors {}", visitors_on(2));
        assert!(visitors_on(5) >= 18, "day 5 visitors {}", visitors_on(5));
        assert!(visitors_on(2) > visitors_on(5));
    }

    #[test]
    fn geo_sampler_peaks_at_true_center() {
        let grid = GridSpec::new(21, 21, 500.0).unwrap();
        let sampler = GeoTemplateSampler {
            template: 0,
            true_lat: 35.0,
            true_lon: 135.0,
            extent_m: 21.0 * 500.0,
        };
        let at_truth = sampler.rasterize(35.0, 135.0, &grid).unwrap();
        let reference = template_field(0, &grid).unwrap();
        for (a, b) in at_truth.values().iter().zip(reference.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
