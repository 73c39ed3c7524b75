//! Command-line front end for the re-identification toolkit.
//!
//! Exit codes: 0 success, 2 input validation, 4 internal error,
//! 3 computational degeneracy (undefined correlation, degenerate
//! clustering, ambiguous weekday, no eligible users).

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use mobreid::align::{hill_climb_align, PopulationSampler, METERS_PER_DEG_LAT};
use mobreid::catalog::{load_holidays, load_pois, load_raster, write_raster, HolidayCalendar, PopulationRaster};
use mobreid::density::{density_field, match_city, DensityField, DensityMode, DihedralTransform};
use mobreid::metrics::{
    anchor_uniqueness, k_anonymity_risk, seclusion_exposure, sensitive_uniqueness, unicity,
};
use mobreid::sanitize::{
    destructure, geoind_sanitize, grr_sanitize, GeoIndConfig, GrrConfig, PermutationConfig,
    PermutationScope, SanitizeOutcome,
};
use mobreid::synth::{gen_city_rasters, gen_traces, SpikeSpec, SynthConfig};
use mobreid::temporal::{
    classify_days, day_profiles, infer_weekday_offset, match_calendar, top_cells, DayClass,
    ZScoreAxis,
};
use mobreid::trace::{load_traceset, write_traceset, Cell, GridSpec, TraceSet};
use mobreid::utility::{sanitizer_sweep, Mechanism, SweepConfig};

#[derive(Debug)]
enum CliError {
    Lib(mobreid::Error),
    Usage(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_degeneracy() => 3,
            CliError::Lib(_) | CliError::Usage(_) => 2,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<mobreid::Error> for CliError {
    fn from(e: mobreid::Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "mobreid",
    version,
    about = "Re-identification analysis and sanitization for grid-anonymized mobility traces",
    args_override_self = true
)]
struct Cli {
    /// Working grid as WxH cells.
    #[arg(long, global = true, default_value = "200x200")]
    grid: String,

    /// Cell edge length in meters.
    #[arg(long, global = true, default_value_t = 500.0)]
    cell_size_m: f64,

    /// Master seed; required by every stochastic subcommand (no hidden default).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on worker threads; default = available cores. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory; all artifacts plus manifest.json land here.
    #[arg(long, global = true, default_value = "mobreid-out")]
    out: PathBuf,

    /// Flat key=value config file; CLI flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Load and validate a trace release, reporting basic statistics.
    Validate {
        #[arg(long)]
        traces: PathBuf,
    },
    /// Match the release against city rasters over the 8 dihedral
    /// transforms; optionally refine the geographic anchor.
    ReidSpace {
        #[arg(long)]
        traces: PathBuf,
        /// One or more population raster files (with .meta.json sidecars).
        #[arg(long, required = true, num_args = 1..)]
        rasters: Vec<PathBuf>,
        /// Aggregation block size as WxH cells for clustered correlation.
        #[arg(long, default_value = "40x40")]
        clusters: String,
        /// Density mode: visits or unique-users.
        #[arg(long, default_value = "visits")]
        mode: String,
        /// Run the hill-climbing anchor refinement on the best raster.
        #[arg(long)]
        align: bool,
        #[arg(long)]
        start_lat: Option<f64>,
        #[arg(long)]
        start_lon: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        step_deg: f64,
    },
    /// Recover the calendar timeline: day classes, weekday phase, and
    /// holiday-consistent start dates.
    ReidTime {
        #[arg(long)]
        traces: PathBuf,
        /// Holiday calendar CSV (date,name); defaults to the bundled
        /// Japanese calendar 2015-2024.
        #[arg(long)]
        calendar: Option<PathBuf>,
        /// Number of busiest cells whose profiles feed the clustering.
        #[arg(long, default_value_t = 20)]
        top_cells: usize,
        #[arg(long, default_value = "2015-01-01")]
        window_start: NaiveDate,
        #[arg(long, default_value = "2024-04-18")]
        window_end: NaiveDate,
        /// Unmatched suspected-holiday budget during calendar matching.
        #[arg(long, default_value_t = 0)]
        tolerance: u32,
    },
    /// Run privacy metrics (k-anonymity, unicity, anchors, seclusion,
    /// sensitive-POI uniqueness).
    Metrics {
        #[arg(long)]
        traces: PathBuf,
        /// POI catalog CSV (x,y,category); enables the sensitive metric.
        #[arg(long)]
        pois: Option<PathBuf>,
        /// Comma list from: kanon,unicity,anchors,seclusion,sensitive.
        #[arg(long, default_value = "kanon,unicity,anchors,seclusion")]
        metrics: String,
        /// Query size m for k-anonymity.
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// Comma list of temporal relaxations (bins) for k-anonymity.
        #[arg(long, default_value = "0,1,2,4")]
        delta_grid: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Largest m for the unicity curve.
        #[arg(long, default_value_t = 5)]
        max_m: usize,
        /// Extra frequent cells in the anchor signature.
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Comma list of seclusion thresholds kappa.
        #[arg(long, default_value = "1,3,10")]
        kappa_grid: String,
        /// Signature size for sensitive-POI uniqueness.
        #[arg(long, default_value_t = 2)]
        sensitive_q: usize,
    },
    /// Sanitize a release with one mechanism and write it back out.
    Sanitize {
        #[arg(long)]
        traces: PathBuf,
        /// geoind, grr, or destructure.
        #[arg(long)]
        mechanism: String,
        /// Privacy parameter: epsilon per meter (geoind) or epsilon (grr).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Geo-Ind alternative: privacy level over --radius-m.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        radius_m: Option<f64>,
        /// De-structuring scope: full or visited.
        #[arg(long, default_value = "full")]
        scope: String,
    },
    /// Privacy-utility sweep over a parameter grid of one mechanism.
    Sweep {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        mechanism: String,
        /// Comma list of parameter values (epsilon grid).
        #[arg(long)]
        params: String,
        /// Optional reference raster for the clustered-correlation column.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "40x40")]
        clusters: String,
    },
    /// Generate a synthetic city release with planted ground truth.
    Synth {
        /// Template id 0..10.
        #[arg(long, default_value_t = 0)]
        template: usize,
        #[arg(long)]
        users: u32,
        #[arg(long)]
        days: u16,
        /// Planted dihedral transform (identity, flip-x, flip-y,
        /// flip-both, rot+90, rot-90, rot+90*flip-x, rot+90*flip-y).
        #[arg(long, default_value = "identity")]
        transform: String,
        #[arg(long, default_value = "2019-09-15")]
        start_date: NaiveDate,
        #[arg(long, default_value_t = 1.0)]
        commuter_fraction: f64,
        /// Poisson rate of extra off-routine visits per user-day.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Optional planted venue spike: "x,y:day@mag;day@mag".
        #[arg(long)]
        spike: Option<String>,
        /// Also write the first N city rasters (for reid-space runs).
        #[arg(long, default_value_t = 0)]
        emit_rasters: usize,
    },
}

fn parse_pair(s: &str, what: &str) -> CliResult<(u32, u32)> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| CliError::Usage(format!("{what} '{s}' is not WxH")))?;
    let w = a.parse().map_err(|_| CliError::Usage(format!("{what} width '{a}' not a number")))?;
    let h = b.parse().map_err(|_| CliError::Usage(format!("{what} height '{b}' not a number")))?;
    Ok((w, h))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| CliError::Usage(format!("bad {what} entry '{p}'"))))
        .collect()
}

fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| {
        CliError::Usage("this subcommand is stochastic: pass an explicit --seed".into())
    })
}

/// Collects artifacts and writes a manifest with their SHA-256 digests.
struct OutDir {
    dir: PathBuf,
    artifacts: Vec<serde_json::Value>,
}

impl OutDir {
    fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, name: &str) -> CliResult<()> {
        let path = self.path(name);
        let bytes = std::fs::read(&path)
            .map_err(|e| CliError::Internal(format!("reread {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.artifacts.push(serde_json::json!({
            "path": name,
            "sha256": format!("{digest:x}"),
            "bytes": bytes.len(),
        }));
        Ok(())
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Internal(format!("write {}: {e}", path.display())))?;
        self.record(name)
    }

    fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Internal(format!("serialize {name}: {e}")))?;
        self.write_bytes(name, format!("{text}\n").as_bytes())
    }

    fn finish(&self, command: &str) -> CliResult<()> {
        let manifest = serde_json::json!({
            "command": command,
            "artifacts": self.artifacts,
        });
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Internal(format!("serialize manifest: {e}")))?;
        std::fs::write(self.path("manifest.json"), format!("{text}\n"))
            .map_err(|e| CliError::Internal(format!("write manifest: {e}")))
    }
}

/// Rasterizes a geo-referenced raster onto the working grid for an
/// arbitrary candidate center, by bilinear sampling in the raster's
/// local equirectangular frame. Cells falling outside the raster read 0.
struct RasterShiftSampler<'a> {
    raster: &'a PopulationRaster,
}

impl PopulationSampler for RasterShiftSampler<'_> {
    fn rasterize(
        &self,
        center_lat: f64,
        center_lon: f64,
        grid: &GridSpec,
    ) -> mobreid::Result<DensityField> {
        let r = self.raster;
        let lon_scale = METERS_PER_DEG_LAT * r.center_lat.to_radians().cos();
        let off_x = (center_lon - r.center_lon) * lon_scale;
        let off_y = (center_lat - r.center_lat) * METERS_PER_DEG_LAT;
        let (rw, rh) = (r.field.width as i64, r.field.height as i64);
        let mut f = DensityField::zeros(grid.width, grid.height)?;
        let sample = |gx: f64, gy: f64| -> f64 {
            let x0 = gx.floor() as i64;
            let y0 = gy.floor() as i64;
            let fx = gx - x0 as f64;
            let fy = gy - y0 as f64;
            let mut acc = 0.0;
            for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
                for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
                    let (x, y) = (x0 + dx, y0 + dy);
                    if x >= 0 && y >= 0 && x < rw && y < rh {
                        acc += wx * wy * r.field.get(Cell::new(x as u32, y as u32));
                    }
                }
            }
            acc
        };
        for y in 0..grid.height {
            for x in 0..grid.width {
                let dx_m = (x as f64 + 0.5 - grid.width as f64 / 2.0) * grid.cell_size_m + off_x;
                let dy_m = (y as f64 + 0.5 - grid.height as f64 / 2.0) * grid.cell_size_m + off_y;
                let gx = dx_m / r.cell_size_m + rw as f64 / 2.0 - 0.5;
                let gy = dy_m / r.cell_size_m + rh as f64 / 2.0 - 0.5;
                f.set(Cell::new(x, y), sample(gx, gy));
            }
        }
        Ok(f)
    }
}

fn load(traces: &Path, grid: GridSpec) -> CliResult<TraceSet> {
    Ok(load_traceset(traces, grid)?)
}

fn run(cli: Cli, command_line: &str) -> CliResult<()> {
    let (gw, gh) = parse_pair(&cli.grid, "--grid")?;
    let grid = GridSpec::new(gw, gh, cli.cell_size_m)?;
    let mut out = OutDir::create(&cli.out)?;

    match &cli.cmd {
        Cmd::Validate { traces } => {
            let ts = load(traces, grid)?;
            out.write_json(
                "summary.json",
                &serde_json::json!({
                    "users": ts.user_count(),
                    "samples": ts.sample_count(),
                    "day_count": ts.day_count,
                    "grid": { "width": gw, "height": gh, "cell_size_m": cli.cell_size_m },
                }),
            )?;
        }
        Cmd::ReidSpace {
            traces,
            rasters,
            clusters,
            mode,
            align,
            start_lat,
            start_lon,
            step_deg,
        } => {
            let ts = load(traces, grid.clone())?;
            let cluster = parse_pair(clusters, "--clusters")?;
            let mode = match mode.as_str() {
                "visits" => DensityMode::Visits,
                "unique-users" => DensityMode::UniqueUsers,
                other => return Err(CliError::Usage(format!("unknown density mode '{other}'"))),
            };
            let loaded: Vec<PopulationRaster> =
                rasters.iter().map(load_raster).collect::<mobreid::Result<_>>()?;
            let f = density_field(&ts, None, mode)?;
            let result = match_city(&f, &grid, &loaded, cluster)?;
            out.write_json("match.json", &result)?;
            if *align {
                let best = loaded
                    .iter()
                    .find(|r| r.name == result.best_city)
                    .expect("best city comes from the raster list");
                let start = (
                    start_lat.unwrap_or(best.center_lat),
                    start_lon.unwrap_or(best.center_lon),
                );
                // undo the recovered transform so the observed density
                // lives in the raster's orientation
                let oriented =
                    mobreid::density::apply_transform(&f, result.best_transform.inverse())?;
                let sampler = RasterShiftSampler { raster: best };
                let alignment =
                    hill_climb_align(&oriented, &sampler, &grid, start, *step_deg, Some(cluster))?;
                out.write_json("alignment.json", &alignment)?;
            }
        }
        Cmd::ReidTime { traces, calendar, top_cells: n, window_start, window_end, tolerance } => {
            let seed = require_seed(cli.seed)?;
            let ts = load(traces, grid)?;
            let cal = match calendar {
                Some(path) => load_holidays(path)?,
                None => HolidayCalendar::bundled_japan(),
            };
            let cells = top_cells(&ts, *n)?;
            let profiles = day_profiles(&ts, &cells)?;
            let classification = classify_days(&profiles, seed, ZScoreAxis::PerBinAcrossDays)?;
            let inference = infer_weekday_offset(&classification.labels)?;
            let result = match_calendar(
                &inference,
                &cal,
                (*window_start, *window_end),
                ts.day_count,
                *tolerance,
            )?;
            let labels: Vec<&str> = classification
                .labels
                .iter()
                .map(|c| if *c == DayClass::A { "A" } else { "B" })
                .collect();
            out.write_json(
                "timeline.json",
                &serde_json::json!({
                    "labels": labels,
                    "weekday_of_day0": inference.weekday_of_day0.to_string(),
                    "suspected_holiday_days": inference.holiday_days,
                    "candidates": result.candidates,
                    "unique": result.unique,
                }),
            )?;
        }
        Cmd::Metrics {
            traces,
            pois,
            metrics,
            m,
            delta_grid,
            trials,
            max_m,
            r,
            kappa_grid,
            sensitive_q,
        } => {
            let ts = load(traces, grid.clone())?;
            let selected: Vec<String> = parse_list(metrics, "--metrics")?;
            let mut report = serde_json::Map::new();
            for name in &selected {
                match name.as_str() {
                    "kanon" => {
                        let seed = require_seed(cli.seed)?;
                        let deltas: Vec<u8> = parse_list(delta_grid, "--delta-grid")?;
                        let runs: Vec<_> = deltas
                            .iter()
                            .map(|&d| k_anonymity_risk(&ts, *m, d, *trials, seed))
                            .collect::<mobreid::Result<_>>()?;
                        report.insert("kanon".into(), serde_json::to_value(runs).unwrap());
                    }
                    "unicity" => {
                        let seed = require_seed(cli.seed)?;
                        let rep = unicity(&ts, *max_m, *trials, seed)?;
                        report.insert("unicity".into(), serde_json::to_value(rep).unwrap());
                    }
                    "anchors" => {
                        let rep = anchor_uniqueness(&ts, *r)?;
                        report.insert("anchors".into(), serde_json::to_value(rep).unwrap());
                    }
                    "seclusion" => {
                        let kappas: Vec<usize> = parse_list(kappa_grid, "--kappa-grid")?;
                        let runs: Vec<_> = kappas
                            .iter()
                            .map(|&k| seclusion_exposure(&ts, k))
                            .collect::<mobreid::Result<_>>()?;
                        report.insert("seclusion".into(), serde_json::to_value(runs).unwrap());
                    }
                    "sensitive" => {
                        let path = pois.as_ref().ok_or_else(|| {
                            CliError::Usage("sensitive metric needs --pois".into())
                        })?;
                        let catalog = load_pois(path, &grid)?;
                        let rep = sensitive_uniqueness(&ts, &catalog, *sensitive_q)?;
                        report.insert("sensitive".into(), serde_json::to_value(rep).unwrap());
                    }
                    other => {
                        return Err(CliError::Usage(format!("unknown metric '{other}'")));
                    }
                }
            }
            out.write_json("metrics.json", &serde_json::Value::Object(report))?;
        }
        Cmd::Sanitize { traces, mechanism, epsilon, level, radius_m, scope } => {
            let seed = require_seed(cli.seed)?;
            let ts = load(traces, grid.clone())?;
            let outcome: SanitizeOutcome = match mechanism.parse::<Mechanism>()? {
                Mechanism::GeoInd => {
                    let cfg = match (epsilon, level, radius_m) {
                        (Some(e), None, None) => GeoIndConfig::new(*e, seed)?,
                        (None, Some(l), Some(rm)) => GeoIndConfig::from_level_radius(*l, *rm, seed)?,
                        _ => {
                            return Err(CliError::Usage(
                                "geoind needs --epsilon (per meter) or --level with --radius-m"
                                    .into(),
                            ))
                        }
                    };
                    geoind_sanitize(&ts, &cfg)?
                }
                Mechanism::Grr => {
                    let eps = epsilon
                        .ok_or_else(|| CliError::Usage("grr needs --epsilon".into()))?;
                    grr_sanitize(&ts, &GrrConfig::for_grid(eps, &grid, seed)?)?
                }
                Mechanism::Destructure => {
                    let scope = match scope.as_str() {
                        "full" => PermutationScope::FullGrid,
                        "visited" => PermutationScope::VisitedOnly,
                        other => {
                            return Err(CliError::Usage(format!("unknown scope '{other}'")))
                        }
                    };
                    destructure(&ts, &PermutationConfig { seed, scope })?
                }
            };
            write_traceset(&outcome.traceset, out.path("sanitized.csv"))?;
            out.record("sanitized.csv")?;
            out.write_json("provenance.json", &outcome.provenance)?;
        }
        Cmd::Sweep { traces, mechanism, params, reference, clusters } => {
            let seed = require_seed(cli.seed)?;
            let ts = load(traces, grid.clone())?;
            let cluster = parse_pair(clusters, "--clusters")?;
            let reference = match reference {
                Some(path) => {
                    Some(mobreid::density::resample_to_grid(&load_raster(path)?, &grid)?)
                }
                None => None,
            };
            let cfg = SweepConfig {
                mechanism: mechanism.parse()?,
                parameters: parse_list(params, "--params")?,
                seed,
                reference,
                cluster,
            };
            let report = sanitizer_sweep(&ts, &cfg)?;
            out.write_bytes("report.csv", report.to_csv().as_bytes())?;
            out.write_json("report.json", &report)?;
        }
        Cmd::Synth {
            template,
            users,
            days,
            transform,
            start_date,
            commuter_fraction,
            noise,
            spike,
            emit_rasters,
        } => {
            let seed = require_seed(cli.seed)?;
            let spikes = match spike {
                Some(text) => vec![parse_spike(text)?],
                None => Vec::new(),
            };
            let cfg = SynthConfig {
                seed,
                grid: grid.clone(),
                template: *template,
                user_count: *users,
                day_count: *days,
                transform: transform.parse::<DihedralTransform>()?,
                start_date: *start_date,
                calendar: HolidayCalendar::bundled_japan(),
                commuter_fraction: *commuter_fraction,
                noise_level: *noise,
                spikes,
            };
            let (ts, truth) = gen_traces(&cfg)?;
            write_traceset(&ts, out.path("traces.csv"))?;
            out.record("traces.csv")?;
            out.write_json("ground_truth.json", &truth)?;
            if *emit_rasters > 0 {
                let cluster = (gw.div_euclid(5).max(1), gh.div_euclid(5).max(1));
                let rasters = gen_city_rasters(&grid, *emit_rasters, cluster, (35.0, 135.0))?;
                for raster in &rasters {
                    let name = format!("raster-{}.csv", raster.name);
                    write_raster(raster, out.path(&name))?;
                    out.record(&name)?;
                    out.record(&format!("{name}.meta.json"))?;
                }
            }
        }
    }
    out.finish(command_line)
}

/// Parse "x,y:day@mag;day@mag" into a planted venue spike.
fn parse_spike(text: &str) -> CliResult<SpikeSpec> {
    let bad = || CliError::Usage(format!("bad --spike '{text}', expected x,y:day@mag;day@mag"));
    let (cell_part, days_part) = text.split_once(':').ok_or_else(bad)?;
    let (x, y) = cell_part.split_once(',').ok_or_else(bad)?;
    let cell = Cell::new(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?);
    let mut days = Vec::new();
    let mut magnitudes = Vec::new();
    for part in days_part.split(';').filter(|p| !p.trim().is_empty()) {
        let (d, m) = part.split_once('@').ok_or_else(bad)?;
        days.push(d.trim().parse().map_err(|_| bad())?);
        magnitudes.push(m.trim().parse().map_err(|_| bad())?);
    }
    if days.is_empty() {
        return Err(bad());
    }
    Ok(SpikeSpec { cell, days, magnitudes })
}

/// Expand a `--config key=value` file into argv entries placed right
/// after the subcommand, so explicit CLI flags (parsed later) win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let config_path = args
        .iter()
        .position(|a| a == "--config")
        .and_then(|i| args.get(i + 1).cloned())
        .or_else(|| {
            args.iter().find_map(|a| a.strip_prefix("--config=").map(|s| s.to_string()))
        });
    let Some(path) = config_path else { return Ok(args) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let mut extra = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config {path} line {}: expected key=value", idx + 1))
        })?;
        extra.push(format!("--{}", key.trim()));
        extra.push(value.trim().to_string());
    }
    // the subcommand is the first bare token not consumed as a flag value
    let value_flags = ["--grid", "--cell-size-m", "--seed", "--workers", "--out", "--config"];
    let mut insert_at = None;
    let mut skip = false;
    for (i, arg) in args.iter().enumerate().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if value_flags.contains(&arg.as_str()) {
            skip = true;
            continue;
        }
        if arg.starts_with('-') {
            continue;
        }
        insert_at = Some(i + 1);
        break;
    }
    let at = insert_at.ok_or_else(|| {
        CliError::Usage("--config given but no subcommand found".into())
    })?;
    let mut expanded = args;
    expanded.splice(at..at, extra);
    Ok(expanded)
}

fn main() {
    let raw: Vec<String> = std::env::args().collect();
    let command_line = raw.join(" ");
    let args = match expand_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code());
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are success; parse failures are validation errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(workers) = cli.workers {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(workers).build_global()
        {
            eprintln!("error: cannot configure {workers} workers: {e}");
            std::process::exit(4);
        }
    }
    if let Err(e) = run(cli, &command_line) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
