//! Sanitization mechanisms: planar-Laplace geo-indistinguishability,
//! generalized randomized response over the cell domain, and per-user
//! spatial de-structuring.
//!
//! All mechanisms perturb space only: per-user sample counts, day
//! indices, and bin indices pass through unchanged. Per-user RNG
//! streams are derived from (seed, user id), so sanitization is
//! order-independent and parallelizable.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert::lambert_w_m1;
use crate::rng::derive_rng2;
use crate::trace::{Cell, GridSpec, Sample, TraceSet, Trajectory};

const GEOIND_STREAM: u64 = 0x67656f;
const GRR_STREAM: u64 = 0x677272;
const PERM_STREAM: u64 = 0x7065726d;

/// Planar-Laplace configuration. `epsilon` is per meter; equivalently
/// specify a privacy level over a radius with [`GeoIndConfig::from_level_radius`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeoIndConfig {
    pub epsilon: f64,
    pub seed: u64,
}

impl GeoIndConfig {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(GeoIndConfig { epsilon, seed })
    }

    /// epsilon = level / radius_m.
    pub fn from_level_radius(level: f64, radius_m: f64, seed: u64) -> Result<Self> {
        if !(level > 0.0) || !(radius_m > 0.0) {
            return Err(Error::InvalidArgument("level and radius must be positive".into()));
        }
        Self::new(level / radius_m, seed)
    }
}

/// Radial CDF of the planar Laplace: C_eps(r) = 1 - (1 + eps r) e^{-eps r}.
pub fn geoind_radial_cdf(epsilon: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    1.0 - (1.0 + epsilon * r) * (-epsilon * r).exp()
}

/// Quantile of the radial CDF via the lower Lambert-W branch.
pub fn geoind_radial_quantile(epsilon: f64, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p {p} outside [0, 1)")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let arg = (p - 1.0) / std::f64::consts::E;
    Ok(-(lambert_w_m1(arg)? + 1.0) / epsilon)
}

/// One planar-Laplace draw around the continuous point `x` (meters).
pub fn geoind_sample(
    x: (f64, f64),
    cfg: &GeoIndConfig,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let p = rng.gen_range(0.0..1.0);
    let r = geoind_radial_quantile(cfg.epsilon, p)?;
    Ok((x.0 + r * theta.cos(), x.1 + r * theta.sin()))
}

/// Output of a sanitizer run plus its provenance counters.
#[derive(Debug)]
pub struct SanitizeOutcome {
    pub traceset: TraceSet,
    pub provenance: Provenance,
}

/// JSON sidecar written next to sanitized outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub mechanism: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    /// Geo-Ind points snapped outside the grid and clamped to the border.
    pub clamp_count: usize,
}

fn rebuild(ts: &TraceSet, trajectories: Vec<Trajectory>) -> TraceSet {
    TraceSet::new(ts.grid.clone(), ts.day_count, trajectories)
        .expect("space-only perturbation preserves validity")
}

/// Perturb every sample's cell center in continuous meters, snap to the
/// nearest cell, clamp to grid bounds.
pub fn geoind_sanitize(ts: &TraceSet, cfg: &GeoIndConfig) -> Result<SanitizeOutcome> {
    let grid = &ts.grid;
    let cell_m = grid.cell_size_m;
    let results: Vec<(Trajectory, usize)> = ts
        .trajectories()
        .par_iter()
        .map(|t| {
            let mut rng = derive_rng2(cfg.seed, GEOIND_STREAM, t.user);
            let mut clamps = 0usize;
            let samples = t
                .samples
                .iter()
                .map(|s| {
                    let center =
                        ((s.cell.x as f64 + 0.5) * cell_m, (s.cell.y as f64 + 0.5) * cell_m);
                    let (px, py) = geoind_sample(center, cfg, &mut rng)
                        .expect("p in [0,1) keeps the quantile defined");
                    let mut cx = (px / cell_m).floor() as i64;
                    let mut cy = (py / cell_m).floor() as i64;
                    if cx < 0 || cy < 0 || cx >= grid.width as i64 || cy >= grid.height as i64 {
                        clamps += 1;
                        cx = cx.clamp(0, grid.width as i64 - 1);
                        cy = cy.clamp(0, grid.height as i64 - 1);
                    }
                    Sample { day: s.day, bin: s.bin, cell: Cell::new(cx as u32, cy as u32) }
                })
                .collect();
            (Trajectory { user: t.user, samples }, clamps)
        })
        .collect();
    let clamp_count = results.iter().map(|(_, c)| c).sum();
    let trajectories = results.into_iter().map(|(t, _)| t).collect();
    Ok(SanitizeOutcome {
        traceset: rebuild(ts, trajectories),
        provenance: Provenance {
            mechanism: "geoind".into(),
            parameters: serde_json::json!({ "epsilon_per_m": cfg.epsilon }),
            seed: cfg.seed,
            clamp_count,
        },
    })
}

/// Generalized randomized response over the k = width * height cell
/// domain: keep the true cell index with probability p, else uniform
/// over the other k - 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrrConfig {
    pub epsilon: f64,
    pub domain_size: usize,
    pub seed: u64,
}

impl GrrConfig {
    pub fn new(epsilon: f64, domain_size: usize, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if domain_size < 2 {
            return Err(Error::InvalidArgument("domain size must be >= 2".into()));
        }
        Ok(GrrConfig { epsilon, domain_size, seed })
    }

    pub fn for_grid(epsilon: f64, grid: &GridSpec, seed: u64) -> Result<Self> {
        Self::new(epsilon, grid.cell_count(), seed)
    }

    /// p = e^eps / (e^eps + k - 1).
    pub fn keep_prob(&self) -> f64 {
        let e = self.epsilon.exp();
        e / (e + self.domain_size as f64 - 1.0)
    }

    /// q = 1 / (e^eps + k - 1).
    pub fn flip_prob(&self) -> f64 {
        1.0 / (self.epsilon.exp() + self.domain_size as f64 - 1.0)
    }
}

/// One GRR channel draw on symbol `z` in [0, k).
pub fn grr_perturb(z: usize, cfg: &GrrConfig, rng: &mut impl Rng) -> usize {
    if rng.gen_range(0.0..1.0) < cfg.keep_prob() {
        z
    } else {
        let other = rng.gen_range(0..cfg.domain_size - 1);
        if other >= z {
            other + 1
        } else {
            other
        }
    }
}

/// Apply GRR independently to every sample's cell (row-major indexing).
pub fn grr_sanitize(ts: &TraceSet, cfg: &GrrConfig) -> Result<SanitizeOutcome> {
    if cfg.domain_size != ts.grid.cell_count() {
        return Err(Error::InvalidArgument(format!(
            "GRR domain {} does not match grid cell count {}",
            cfg.domain_size,
            ts.grid.cell_count()
        )));
    }
    let grid = &ts.grid;
    let trajectories: Vec<Trajectory> = ts
        .trajectories()
        .par_iter()
        .map(|t| {
            let mut rng = derive_rng2(cfg.seed, GRR_STREAM, t.user);
            let samples = t
                .samples
                .iter()
                .map(|s| {
                    let z = grid.cell_index(s.cell);
                    Sample { day: s.day, bin: s.bin, cell: grid.cell_at(grr_perturb(z, cfg, &mut rng)) }
                })
                .collect();
            Trajectory { user: t.user, samples }
        })
        .collect();
    Ok(SanitizeOutcome {
        traceset: rebuild(ts, trajectories),
        provenance: Provenance {
            mechanism: "grr".into(),
            parameters: serde_json::json!({
                "epsilon": cfg.epsilon,
                "domain_size": cfg.domain_size,
                "p": cfg.keep_prob(),
                "q": cfg.flip_prob(),
            }),
            seed: cfg.seed,
            clamp_count: 0,
        },
    })
}

/// Debiased frequency estimates from an observed GRR output
/// distribution: f_hat = (f_obs - q) / (p - q).
///
/// Returns the raw linear inverse (possibly slightly negative) and a
/// clipped-and-renormalized variant for downstream divergence use.
pub fn grr_debias(observed: &[f64], cfg: &GrrConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if observed.len() != cfg.domain_size {
        return Err(Error::InvalidArgument(format!(
            "observed vector length {} does not match domain {}",
            observed.len(),
            cfg.domain_size
        )));
    }
    if observed.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("observed frequencies must be >= 0".into()));
    }
    let total: f64 = observed.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "observed frequencies sum to {total}, expected 1"
        )));
    }
    let p = cfg.keep_prob();
    let q = cfg.flip_prob();
    if (p - q).abs() < 1e-15 {
        return Err(Error::InvalidArgument("p equals q (epsilon = 0), debias undefined".into()));
    }
    let raw: Vec<f64> = observed.iter().map(|f| (f - q) / (p - q)).collect();
    let mut clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    if sum > 0.0 {
        for v in clipped.iter_mut() {
            *v /= sum;
        }
    }
    Ok((raw, clipped))
}

/// Which cells a user's de-structuring permutation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationScope {
    /// Uniform permutation of the full grid index set (default).
    FullGrid,
    /// Permute only the user's visited cells among themselves.
    VisitedOnly,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub seed: u64,
    pub scope: PermutationScope,
}

/// Relabel every user's cells through an independent uniform
/// permutation, destroying geography while preserving each user's
/// visit-count multiset and temporal structure.
pub fn destructure(ts: &TraceSet, cfg: &PermutationConfig) -> Result<SanitizeOutcome> {
    use rand::seq::SliceRandom;
    let grid = &ts.grid;
    let trajectories: Vec<Trajectory> = ts
        .trajectories()
        .par_iter()
        .map(|t| {
            let mut rng = derive_rng2(cfg.seed, PERM_STREAM, t.user);
            let map_cell: Box<dyn Fn(Cell) -> Cell> = match cfg.scope {
                PermutationScope::FullGrid => {
                    let mut perm: Vec<usize> = (0..grid.cell_count()).collect();
                    perm.shuffle(&mut rng);
                    Box::new(move |c: Cell| grid.cell_at(perm[grid.cell_index(c)]))
                }
                PermutationScope::VisitedOnly => {
                    let mut visited: Vec<Cell> =
                        t.samples.iter().map(|s| s.cell).collect::<std::collections::BTreeSet<_>>()
                            .into_iter()
                            .collect();
                    let mut image = visited.clone();
                    image.shuffle(&mut rng);
                    let map: std::collections::HashMap<Cell, Cell> =
                        visited.drain(..).zip(image).collect();
                    Box::new(move |c: Cell| map[&c])
                }
            };
            let samples = t
                .samples
                .iter()
                .map(|s| Sample { day: s.day, bin: s.bin, cell: map_cell(s.cell) })
                .collect();
            Trajectory { user: t.user, samples }
        })
        .collect();
    Ok(SanitizeOutcome {
        traceset: rebuild(ts, trajectories),
        provenance: Provenance {
            mechanism: "destructure".into(),
            parameters: serde_json::json!({ "scope": cfg.scope }),
            seed: cfg.seed,
            clamp_count: 0,
        },
    })
}
