//! Privacy–utility harness: residual leakage after sanitization
//! (anchor re-identification, clustered correlation to a reference
//! raster) against utility loss (KL divergence of per-slot population
//! distributions), plus the parameter-sweep orchestrator.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{clustered_correlation, density_field, DensityField, DensityMode};
use crate::error::{Error, Result};
use crate::metrics::infer_anchors;
use crate::rng::mix;
use crate::sanitize::{
    destructure, geoind_sanitize, grr_debias, grr_sanitize, GeoIndConfig, GrrConfig,
    PermutationConfig, PermutationScope,
};
use crate::trace::{Cell, TraceSet};

const KL_ALPHA: f64 = 1e-9;

/// KL(p || q) with additive smoothing `1e-9` and renormalization of
/// both arguments. Errors on negative entries or length mismatch.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidArgument(format!(
            "distribution lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty distributions".into()));
    }
    for v in p.iter().chain(q) {
        if *v < 0.0 {
            return Err(Error::InvalidArgument(format!("negative entry {v} in distribution")));
        }
    }
    let smooth = |v: &[f64]| -> Result<Vec<f64>> {
        let shifted: Vec<f64> = v.iter().map(|x| x + KL_ALPHA).collect();
        let total: f64 = shifted.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("distribution has zero mass".into()));
        }
        Ok(shifted.into_iter().map(|x| x / total).collect())
    };
    let ps = smooth(p)?;
    let qs = smooth(q)?;
    Ok(ps.iter().zip(&qs).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0))
}

/// Anchor re-identification outcome between an original and a
/// sanitized release of the same user population.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorReidResult {
    /// Fraction of comparable users whose home AND work cells match exactly.
    pub rate: f64,
    /// Relaxed variant: both anchors within Chebyshev distance 1.
    pub rate_within_one: f64,
    /// Sorted Euclidean cell distances, two entries per comparable user
    /// (home error and work error).
    pub error_cdf: Vec<f64>,
    pub compared_users: usize,
    /// Users missing anchors on either side.
    pub excluded_users: usize,
}

fn cell_dist(a: Cell, b: Cell) -> f64 {
    let dx = a.x as f64 - b.x as f64;
    let dy = a.y as f64 - b.y as f64;
    (dx * dx + dy * dy).sqrt()
}

fn chebyshev(a: Cell, b: Cell) -> u32 {
    (a.x.abs_diff(b.x)).max(a.y.abs_diff(b.y))
}

/// Re-infer (home, work) on both releases and measure how often the
/// sanitized anchors still identify the original pair.
pub fn anchor_reid_rate(original: &TraceSet, sanitized: &TraceSet) -> Result<AnchorReidResult> {
    let orig_users: Vec<u64> = original.trajectories().iter().map(|t| t.user).collect();
    let san_users: Vec<u64> = sanitized.trajectories().iter().map(|t| t.user).collect();
    if orig_users != san_users {
        return Err(Error::InvalidArgument(
            "original and sanitized releases cover different user populations".into(),
        ));
    }
    let mut exact = 0usize;
    let mut near = 0usize;
    let mut compared = 0usize;
    let mut excluded = 0usize;
    let mut errors = Vec::new();
    for (a, b) in original.trajectories().iter().zip(sanitized.trajectories()) {
        match (infer_anchors(a, 0), infer_anchors(b, 0)) {
            (Some(sa), Some(sb)) => {
                compared += 1;
                if sa.home == sb.home && sa.work == sb.work {
                    exact += 1;
                }
                if chebyshev(sa.home, sb.home) <= 1 && chebyshev(sa.work, sb.work) <= 1 {
                    near += 1;
                }
                errors.push(cell_dist(sa.home, sb.home));
                errors.push(cell_dist(sa.work, sb.work));
            }
            _ => excluded += 1,
        }
    }
    if compared == 0 {
        return Err(Error::NoEligibleUsers("no users with anchors on both sides".into()));
    }
    errors.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(AnchorReidResult {
        rate: exact as f64 / compared as f64,
        rate_within_one: near as f64 / compared as f64,
        error_cdf: errors,
        compared_users: compared,
        excluded_users: excluded,
    })
}

fn slot_counts(ts: &TraceSet) -> HashMap<(u16, u8), Vec<f64>> {
    let k = ts.grid.cell_count();
    let mut slots: HashMap<(u16, u8), Vec<f64>> = HashMap::new();
    for t in ts.trajectories() {
        for s in &t.samples {
            slots.entry((s.day, s.bin)).or_insert_with(|| vec![0.0; k])
                [ts.grid.cell_index(s.cell)] += 1.0;
        }
    }
    slots
}

/// Mean KL across (day, bin) slots populated on both sides, between
/// the original visit-count distribution and the sanitized one
/// (debiased through the GRR inverse when a config is supplied).
pub fn population_kl_over_time(
    original: &TraceSet,
    sanitized: &TraceSet,
    debias: Option<&GrrConfig>,
) -> Result<f64> {
    if original.grid != sanitized.grid {
        return Err(Error::InvalidArgument("grids differ between releases".into()));
    }
    let orig_slots = slot_counts(original);
    let san_slots = slot_counts(sanitized);
    let mut keys: Vec<(u16, u8)> =
        orig_slots.keys().filter(|k| san_slots.contains_key(k)).copied().collect();
    if keys.is_empty() {
        return Err(Error::InvalidArgument("no time slot is populated in both releases".into()));
    }
    keys.sort_unstable();
    let mut total = 0.0;
    for key in &keys {
        let f = &orig_slots[key];
        let f_tilde = &san_slots[key];
        let normalize = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let p = normalize(f);
        let q_obs = normalize(f_tilde);
        let q = match debias {
            Some(cfg) => grr_debias(&q_obs, cfg)?.1,
            None => q_obs,
        };
        total += kl_divergence(&p, &q)?;
    }
    Ok(total / keys.len() as f64)
}

/// Sanitization mechanism selector for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    /// Parameter: epsilon per meter.
    GeoInd,
    /// Parameter: epsilon; the debiased inverse feeds the KL column.
    Grr,
    /// Parameter ignored (one row per listed value).
    Destructure,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::GeoInd => "geoind",
            Mechanism::Grr => "grr",
            Mechanism::Destructure => "destructure",
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geoind" => Ok(Mechanism::GeoInd),
            "grr" => Ok(Mechanism::Grr),
            "destructure" => Ok(Mechanism::Destructure),
            other => Err(Error::InvalidArgument(format!(
                "unknown mechanism '{other}' (expected geoind, grr, destructure)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mechanism: Mechanism,
    /// Parameter grid (epsilon values); sorted into the report order.
    pub parameters: Vec<f64>,
    pub seed: u64,
    /// Optional reference raster for the clustered-correlation column.
    pub reference: Option<DensityField>,
    pub cluster: (u32, u32),
}

/// One parameter point of a sweep. Failed rows carry `error` and empty
/// measurement columns; the sweep itself still succeeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub row_seed: u64,
    pub reid_rate: Option<f64>,
    pub reid_rate_within_one: Option<f64>,
    pub mean_kl: Option<f64>,
    pub clustered_corr: Option<f64>,
    pub clamp_count: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityReport {
    pub mechanism: String,
    pub seed: u64,
    pub kl_smoothing_alpha: f64,
    pub rows: Vec<SweepRow>,
}

impl UtilityReport {
    /// Fixed-column CSV, one row per parameter point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "mechanism,parameter,row_seed,reid_rate,reid_rate_within_one,mean_kl,clustered_corr,clamp_count,error\n",
        );
        let fmt = |v: &Option<f64>| v.map(|x| format!("{x:.12}")).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.mechanism,
                r.parameter,
                r.row_seed,
                fmt(&r.reid_rate),
                fmt(&r.reid_rate_within_one),
                fmt(&r.mean_kl),
                fmt(&r.clustered_corr),
                r.clamp_count.map(|c| c.to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default().replace(',', ";"),
            ));
        }
        out
    }
}

fn run_row(original: &TraceSet, cfg: &SweepConfig, parameter: f64, row_seed: u64) -> Result<SweepRow> {
    let outcome = match cfg.mechanism {
        Mechanism::GeoInd => geoind_sanitize(original, &GeoIndConfig::new(parameter, row_seed)?)?,
        Mechanism::Grr => {
            grr_sanitize(original, &GrrConfig::for_grid(parameter, &original.grid, row_seed)?)?
        }
        Mechanism::Destructure => destructure(
            original,
            &PermutationConfig { seed: row_seed, scope: PermutationScope::FullGrid },
        )?,
    };
    let sanitized = &outcome.traceset;
    let reid = anchor_reid_rate(original, sanitized)?;
    let debias_cfg = match cfg.mechanism {
        Mechanism::Grr => Some(GrrConfig::for_grid(parameter, &original.grid, row_seed)?),
        _ => None,
    };
    let mean_kl = population_kl_over_time(original, sanitized, debias_cfg.as_ref())?;
    let clustered_corr = match &cfg.reference {
        Some(reference) => {
            let f = density_field(sanitized, None, DensityMode::Visits)?;
            match clustered_correlation(&f, reference, cfg.cluster) {
                Ok(c) => Some(c),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            }
        }
        None => None,
    };
    Ok(SweepRow {
        parameter,
        row_seed,
        reid_rate: Some(reid.rate),
        reid_rate_within_one: Some(reid.rate_within_one),
        mean_kl: Some(mean_kl),
        clustered_corr,
        clamp_count: Some(outcome.provenance.clamp_count),
        error: None,
    })
}

/// Run the full sweep: sanitize at every parameter point, measure, and
/// assemble one report row each. Rows run in parallel with independent
/// derived seeds; per-row failures are recorded, not fatal.
pub fn sanitizer_sweep(original: &TraceSet, cfg: &SweepConfig) -> Result<UtilityReport> {
    let mut params = cfg.parameters.clone();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sweep parameter".into()));
    }
    params.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows: Vec<SweepRow> = params
        .par_iter()
        .map(|&parameter| {
            let row_seed = mix(cfg.seed ^ mix(parameter.to_bits()));
            run_row(original, cfg, parameter, row_seed).unwrap_or_else(|e| SweepRow {
                parameter,
                row_seed,
                reid_rate: None,
                reid_rate_within_one: None,
                mean_kl: None,
                clustered_corr: None,
                clamp_count: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(UtilityReport {
        mechanism: cfg.mechanism.name().to_string(),
        seed: cfg.seed,
        kl_smoothing_alpha: KL_ALPHA,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{GridSpec, Sample, Trajectory};

    fn commuter_ts(users: u64) -> TraceSet {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let mut trajectories = Vec::new();
        for u in 0..users {
            let home = Cell::new((u % 8) as u32, (u / 8 % 8) as u32);
            let work = Cell::new(((u + 3) % 8) as u32, ((u / 2 + 5) % 8) as u32);
            let mut samples = Vec::new();
            for day in 0..3u16 {
                for bin in [0u8, 2, 45, 46] {
                    samples.push(Sample { day, bin, cell: home });
                }
                for bin in [20u8, 24, 28, 32] {
                    samples.push(Sample { day, bin, cell: work });
                }
            }
            trajectories.push(Trajectory { user: u, samples });
        }
        TraceSet::new(grid, 3, trajectories).unwrap()
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = [0.3, 0.2, 0.5];
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kl_point_mass_vs_uniform_is_ln2() {
        let got = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((got - std::f64::consts::LN_2).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn kl_nonnegative_over_random_pairs() {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(11, 0);
        for _ in 0..200 {
            let p: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
            let q: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
            let norm = |v: &[f64]| {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect::<Vec<f64>>()
            };
            assert!(kl_divergence(&norm(&p), &norm(&q)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kl_rejects_negative_entries() {
        assert!(kl_divergence(&[1.1, -0.1], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn reid_rate_identity_is_one() {
        let ts = commuter_ts(30);
        let r = anchor_reid_rate(&ts, &ts).unwrap();
        assert_eq!(r.rate, 1.0);
        assert_eq!(r.rate_within_one, 1.0);
        assert!(r.error_cdf.iter().all(|d| *d == 0.0));
        assert_eq!(r.excluded_users, 0);
    }

    #[test]
    fn reid_rate_after_destructure_is_near_zero() {
        let ts = commuter_ts(60);
        let out =
            destructure(&ts, &PermutationConfig { seed: 4, scope: PermutationScope::FullGrid })
                .unwrap();
        let r = anchor_reid_rate(&ts, &out.traceset).unwrap();
        // uniform relabeling over 64 cells: chance of both anchors
        // landing back on themselves is ~(1/64)^2 per user
        assert!(r.rate < 0.1, "rate {}", r.rate);
    }

    #[test]
    fn population_kl_identity_is_zero() {
        let ts = commuter_ts(20);
        let kl = population_kl_over_time(&ts, &ts, None).unwrap();
        assert!(kl.abs() < 1e-9, "kl {kl}");
    }

    #[test]
    fn empty_parameter_grid_gives_empty_report() {
        let ts = commuter_ts(5);
        let cfg = SweepConfig {
            mechanism: Mechanism::Grr,
            parameters: vec![],
            seed: 1,
            reference: None,
            cluster: (2, 2),
        };
        let report = sanitizer_sweep(&ts, &cfg).unwrap();
        assert!(report.rows.is_empty());
    }

    #[test]
    fn single_point_sweep_matches_direct_invocation() {
        let ts = commuter_ts(25);
        let cfg = SweepConfig {
            mechanism: Mechanism::Grr,
            parameters: vec![2.0],
            seed: 9,
            reference: None,
            cluster: (2, 2),
        };
        let report = sanitizer_sweep(&ts, &cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert!(row.error.is_none());
        let grr = GrrConfig::for_grid(2.0, &ts.grid, row.row_seed).unwrap();
        let out = grr_sanitize(&ts, &grr).unwrap();
        let reid = anchor_reid_rate(&ts, &out.traceset).unwrap();
        let kl = population_kl_over_time(&ts, &out.traceset, Some(&grr)).unwrap();
        assert_eq!(row.reid_rate, Some(reid.rate));
        assert_eq!(row.mean_kl, Some(kl));
    }

    #[test]
    fn sweep_rows_sorted_and_reproducible() {
        let ts = commuter_ts(15);
        let cfg = SweepConfig {
            mechanism: Mechanism::Grr,
            parameters: vec![4.0, 0.5, 2.0],
            seed: 3,
            reference: None,
            cluster: (2, 2),
        };
        let a = sanitizer_sweep(&ts, &cfg).unwrap();
        let b = sanitizer_sweep(&ts, &cfg).unwrap();
        let params: Vec<f64> = a.rows.iter().map(|r| r.parameter).collect();
        assert_eq!(params, vec![0.5, 2.0, 4.0]);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn csv_header_is_stable() {
        let report = UtilityReport {
            mechanism: "grr".into(),
            seed: 0,
            kl_smoothing_alpha: KL_ALPHA,
            rows: vec![],
        };
        assert!(report.to_csv().starts_with(
            "mechanism,parameter,row_seed,reid_rate,reid_rate_within_one,mean_kl,clustered_corr,clamp_count,error\n"
        ));
    }
}
