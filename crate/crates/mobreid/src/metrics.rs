//! Trajectory-level privacy risk metrics: spatio-temporal k-anonymity,
//! m-point unicity, anchor uniqueness, seclusion exposure, and
//! sensitive-POI uniqueness.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::PoiCatalog;
use crate::error::{Error, Result};
use crate::rng::derive_rng2;
use crate::trace::{Cell, TraceSet, Trajectory, BINS_PER_DAY};

/// One adversary constraint: the user appears in `cell` during the
/// window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeWindow {
    /// Inclusive bin range within one day.
    Day { day: u16, bin_lo: u8, bin_hi: u8 },
    /// Inclusive absolute bin range (day * 48 + bin).
    Absolute { lo: u32, hi: u32 },
}

impl TimeWindow {
    pub fn contains(&self, day: u16, bin: u8) -> bool {
        match *self {
            TimeWindow::Day { day: d, bin_lo, bin_hi } => {
                day == d && bin >= bin_lo && bin <= bin_hi
            }
            TimeWindow::Absolute { lo, hi } => {
                let abs = day as u32 * BINS_PER_DAY as u32 + bin as u32;
                abs >= lo && abs <= hi
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub cell: Cell,
    pub window: TimeWindow,
}

/// Adversary knowledge: a conjunction of spatio-temporal constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuerySpec {
    pub constraints: Vec<Constraint>,
}

impl QuerySpec {
    pub fn new(constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidArgument("query needs at least one constraint".into()));
        }
        for c in &constraints {
            match c.window {
                TimeWindow::Day { bin_lo, bin_hi, .. } => {
                    if bin_lo > bin_hi || bin_hi >= BINS_PER_DAY {
                        return Err(Error::InvalidArgument(format!(
                            "bad bin window [{bin_lo}, {bin_hi}]"
                        )));
                    }
                }
                TimeWindow::Absolute { lo, hi } => {
                    if lo > hi {
                        return Err(Error::InvalidArgument(format!("bad window [{lo}, {hi}]")));
                    }
                }
            }
        }
        Ok(QuerySpec { constraints })
    }
}

fn satisfies(t: &Trajectory, c: &Constraint) -> bool {
    t.samples.iter().any(|s| s.cell == c.cell && c.window.contains(s.day, s.bin))
}

/// Cand(Q): users with a witnessing sample for every constraint.
pub fn candidate_set(ts: &TraceSet, q: &QuerySpec) -> BTreeSet<u64> {
    // seed from the least-visited constrained cell, then verify fully
    let seed_constraint = q
        .constraints
        .iter()
        .min_by_key(|c| ts.visitors(c.cell).len())
        .expect("query validated non-empty");
    ts.visitors(seed_constraint.cell)
        .iter()
        .copied()
        .filter(|&u| {
            let t = ts.trajectory(u).expect("index user exists");
            q.constraints.iter().all(|c| satisfies(t, c))
        })
        .collect()
}

/// Report for Risk_k(m, delta): Pr[k(Q) <= k] over sampled queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KAnonymityReport {
    pub m: usize,
    pub delta_bins: u8,
    pub trials: usize,
    pub seed: u64,
    /// (k threshold, Pr[k(Q) <= k]) for k in {1, 2, 5, 10}.
    pub risk: Vec<(usize, f64)>,
    /// Users skipped for having fewer than m distinct samples.
    pub excluded_draws: usize,
    /// Query sampling is single-user: all m constraints of a query come
    /// from one user's trace.
    pub single_user_sampling: bool,
}

pub const K_THRESHOLDS: [usize; 4] = [1, 2, 5, 10];

/// Stream tags keeping the metric samplers' RNG streams disjoint.
/// Public so external oracles can replay the exact sampled queries.
pub const KANON_STREAM: u64 = 0x6b616e6f6e;
pub const UNICITY_STREAM: u64 = 0x756e6963;

/// Sample a query of `m` constraints from one user's samples with
/// symmetric window half-width `delta` (clipped to the day).
pub fn sample_query(t: &Trajectory, m: usize, delta: u8, rng: &mut impl Rng) -> QuerySpec {
    let mut indices: Vec<usize> = (0..t.samples.len()).collect();
    indices.shuffle(rng);
    let constraints = indices[..m]
        .iter()
        .map(|&i| {
            let s = t.samples[i];
            Constraint {
                cell: s.cell,
                window: TimeWindow::Day {
                    day: s.day,
                    bin_lo: s.bin.saturating_sub(delta),
                    bin_hi: (s.bin + delta).min(BINS_PER_DAY - 1),
                },
            }
        })
        .collect();
    QuerySpec::new(constraints).expect("sampled query is valid")
}

/// Monte Carlo estimate of Risk_k(m, delta) at k in {1, 2, 5, 10}.
pub fn k_anonymity_risk(
    ts: &TraceSet,
    m: usize,
    delta_bins: u8,
    trials: usize,
    seed: u64,
) -> Result<KAnonymityReport> {
    if trials < 1 || m < 1 {
        return Err(Error::InvalidArgument("trials and m must be >= 1".into()));
    }
    if !ts.trajectories().iter().any(|t| t.len() >= m) {
        return Err(Error::NoEligibleUsers(format!("no user has >= {m} samples")));
    }
    let users: Vec<u64> = ts.trajectories().iter().map(|t| t.user).collect();
    let mut excluded = 0usize;
    let mut ks: Vec<usize> = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = derive_rng2(seed, KANON_STREAM, trial as u64);
        let t = loop {
            let u = users[rng.gen_range(0..users.len())];
            let t = ts.trajectory(u).unwrap();
            if t.len() >= m {
                break t;
            }
            excluded += 1;
        };
        let q = sample_query(t, m, delta_bins, &mut rng);
        ks.push(candidate_set(ts, &q).len());
    }
    let risk = K_THRESHOLDS
        .iter()
        .map(|&k| (k, ks.iter().filter(|&&v| v <= k).count() as f64 / trials as f64))
        .collect();
    Ok(KAnonymityReport {
        m,
        delta_bins,
        trials,
        seed,
        risk,
        excluded_draws: excluded,
        single_user_sampling: true,
    })
}

/// U(m) estimates with nested per-trial point draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnicityReport {
    pub max_m: usize,
    pub trials: usize,
    pub seed: u64,
    /// (m, U(m)); the m-point draw of a trial is a prefix of its
    /// (m+1)-point draw, so the curve is monotone per trial.
    pub curve: Vec<(usize, f64)>,
    pub excluded_draws: usize,
}

/// Estimate the unicity curve U(1..=max_m) with nested sampling.
pub fn unicity(ts: &TraceSet, max_m: usize, trials: usize, seed: u64) -> Result<UnicityReport> {
    if trials < 1 || max_m < 1 {
        return Err(Error::InvalidArgument("trials and max_m must be >= 1".into()));
    }
    if !ts.trajectories().iter().any(|t| t.point_set().len() >= max_m) {
        return Err(Error::NoEligibleUsers(format!("no user has >= {max_m} distinct points")));
    }
    // point -> users index for fast match counting
    let mut point_users: HashMap<(Cell, u16, u8), Vec<u64>> = HashMap::new();
    for t in ts.trajectories() {
        for p in t.point_set() {
            point_users.entry(p).or_default().push(t.user);
        }
    }
    for v in point_users.values_mut() {
        v.sort_unstable();
    }

    let users: Vec<u64> = ts.trajectories().iter().map(|t| t.user).collect();
    let mut unique_counts = vec![0usize; max_m];
    let mut excluded = 0usize;
    for trial in 0..trials {
        let mut rng = derive_rng2(seed, UNICITY_STREAM, trial as u64);
        let t = loop {
            let u = users[rng.gen_range(0..users.len())];
            let t = ts.trajectory(u).unwrap();
            if t.point_set().len() >= max_m {
                break t;
            }
            excluded += 1;
        };
        let mut points: Vec<(Cell, u16, u8)> = t.point_set().into_iter().collect();
        points.sort_unstable_by_key(|&(c, d, b)| (c.x, c.y, d, b));
        points.shuffle(&mut rng);
        // running intersection of per-point visitor lists
        let mut matches: Vec<u64> = point_users[&points[0]].clone();
        for (i, count) in unique_counts.iter_mut().enumerate() {
            if i > 0 {
                let holders = &point_users[&points[i]];
                matches.retain(|u| holders.binary_search(u).is_ok());
            }
            if matches.len() == 1 {
                *count += 1;
            }
        }
    }
    let curve = unique_counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i + 1, c as f64 / trials as f64))
        .collect();
    Ok(UnicityReport { max_m, trials, seed, curve, excluded_draws: excluded })
}

/// Home/work masks in half-hour bins: 22:00-06:00 and 09:00-17:00.
pub const HOME_MASK: fn(u8) -> bool = |bin| bin >= 44 || bin < 12;
pub const WORK_MASK: fn(u8) -> bool = |bin| (18..34).contains(&bin);

/// (home, work, top-r other frequent cells) quasi-identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnchorSignature {
    pub home: Cell,
    pub work: Cell,
    pub extras: Vec<Cell>,
}

fn argmax_cell(counts: &HashMap<Cell, usize>) -> Option<Cell> {
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(c, _)| *c)
}

/// Infer (home, work, extras) for one trajectory. Returns None when the
/// user has no samples inside the home or work mask.
pub fn infer_anchors(t: &Trajectory, r: usize) -> Option<AnchorSignature> {
    let mut home_counts: HashMap<Cell, usize> = HashMap::new();
    let mut work_counts: HashMap<Cell, usize> = HashMap::new();
    let mut total_counts: HashMap<Cell, usize> = HashMap::new();
    for s in &t.samples {
        *total_counts.entry(s.cell).or_default() += 1;
        if HOME_MASK(s.bin) {
            *home_counts.entry(s.cell).or_default() += 1;
        }
        if WORK_MASK(s.bin) {
            *work_counts.entry(s.cell).or_default() += 1;
        }
    }
    let home = argmax_cell(&home_counts)?;
    let work = argmax_cell(&work_counts)?;
    let mut rest: Vec<(Cell, usize)> = total_counts
        .into_iter()
        .filter(|(c, _)| *c != home && *c != work)
        .collect();
    rest.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let extras = rest.into_iter().take(r).map(|(c, _)| c).collect();
    Some(AnchorSignature { home, work, extras })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorReport {
    pub r: usize,
    /// Fraction of anchored users with a unique (home, work) pair.
    pub ua_hw: f64,
    /// Pr[k_{A_r} = 1] over anchored users.
    pub pr_unique_ar: f64,
    /// k_hw class size -> number of users in classes of that size.
    pub k_hw_distribution: BTreeMap<usize, usize>,
    /// Pair multiplicity -> number of distinct (home, work) pairs shared
    /// by that many users.
    pub shared_pair_histogram: BTreeMap<usize, usize>,
    pub anchored_users: usize,
    pub excluded_users: usize,
}

/// Group users by anchor signatures and measure uniqueness.
pub fn anchor_uniqueness(ts: &TraceSet, r: usize) -> Result<AnchorReport> {
    let mut hw_groups: HashMap<(Cell, Cell), usize> = HashMap::new();
    let mut sig_groups: HashMap<AnchorSignature, usize> = HashMap::new();
    let mut anchored = 0usize;
    let mut excluded = 0usize;
    let mut per_user: Vec<(Cell, Cell, AnchorSignature)> = Vec::new();
    for t in ts.trajectories() {
        match infer_anchors(t, r) {
            Some(sig) => {
                anchored += 1;
                *hw_groups.entry((sig.home, sig.work)).or_default() += 1;
                *sig_groups.entry(sig.clone()).or_default() += 1;
                per_user.push((sig.home, sig.work, sig));
            }
            None => excluded += 1,
        }
    }
    if anchored == 0 {
        return Err(Error::NoEligibleUsers("no user has both home and work anchors".into()));
    }
    let mut k_hw_distribution: BTreeMap<usize, usize> = BTreeMap::new();
    let mut unique_hw = 0usize;
    let mut unique_sig = 0usize;
    for (home, work, sig) in &per_user {
        let k = hw_groups[&(*home, *work)];
        *k_hw_distribution.entry(k).or_default() += 1;
        if k == 1 {
            unique_hw += 1;
        }
        if sig_groups[sig] == 1 {
            unique_sig += 1;
        }
    }
    let mut shared_pair_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &count in hw_groups.values() {
        *shared_pair_histogram.entry(count).or_default() += 1;
    }
    Ok(AnchorReport {
        r,
        ua_hw: unique_hw as f64 / anchored as f64,
        pr_unique_ar: unique_sig as f64 / anchored as f64,
        k_hw_distribution,
        shared_pair_histogram,
        anchored_users: anchored,
        excluded_users: excluded,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeclusionReport {
    pub kappa: usize,
    /// (user, SE_kappa(u)) for every user.
    pub per_user: Vec<(u64, f64)>,
    /// Users with SE_kappa > 0.
    pub exposed_users: usize,
}

/// SE_kappa(u): fraction of a user's samples in cells with at most
/// `kappa` unique visitors.
pub fn seclusion_exposure(ts: &TraceSet, kappa: usize) -> Result<SeclusionReport> {
    if kappa < 1 {
        return Err(Error::InvalidArgument("kappa must be >= 1".into()));
    }
    let mut per_user = Vec::with_capacity(ts.user_count());
    let mut exposed = 0usize;
    for t in ts.trajectories() {
        let secluded = t
            .samples
            .iter()
            .filter(|s| ts.visitors(s.cell).len() <= kappa)
            .count();
        let se = secluded as f64 / t.len() as f64;
        if se > 0.0 {
            exposed += 1;
        }
        per_user.push((t.user, se));
    }
    Ok(SeclusionReport { kappa, per_user, exposed_users: exposed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitiveReport {
    pub q: usize,
    pub eligible_users: usize,
    /// None when no user is eligible ("not applicable").
    pub pr_unique: Option<f64>,
}

/// Top-q sensitive-cell signature of one trajectory, as a sorted set;
/// None when the user visits fewer than q sensitive cells.
pub fn sensitive_signature(
    t: &Trajectory,
    sensitive: &HashSet<Cell>,
    q: usize,
) -> Option<Vec<Cell>> {
    let mut counts: HashMap<Cell, usize> = HashMap::new();
    for s in &t.samples {
        if sensitive.contains(&s.cell) {
            *counts.entry(s.cell).or_default() += 1;
        }
    }
    if counts.len() < q {
        return None;
    }
    let mut by_count: Vec<(Cell, usize)> = counts.into_iter().collect();
    by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut set: Vec<Cell> = by_count.into_iter().take(q).map(|(c, _)| c).collect();
    set.sort_unstable();
    Some(set)
}

/// Pr[k_sens = 1] among users with at least q visited sensitive cells.
pub fn sensitive_uniqueness(ts: &TraceSet, pois: &PoiCatalog, q: usize) -> Result<SensitiveReport> {
    if q < 1 {
        return Err(Error::InvalidArgument("q must be >= 1".into()));
    }
    let sensitive: HashSet<Cell> = pois.sensitive_cells().into_iter().collect();
    if sensitive.is_empty() {
        return Err(Error::InvalidArgument("POI catalog has no sensitive cells".into()));
    }
    let mut groups: HashMap<Vec<Cell>, usize> = HashMap::new();
    let mut signatures = Vec::new();
    for t in ts.trajectories() {
        if let Some(sig) = sensitive_signature(t, &sensitive, q) {
            *groups.entry(sig.clone()).or_default() += 1;
            signatures.push(sig);
        }
    }
    if signatures.is_empty() {
        return Ok(SensitiveReport { q, eligible_users: 0, pr_unique: None });
    }
    let unique = signatures.iter().filter(|s| groups[*s] == 1).count();
    Ok(SensitiveReport {
        q,
        eligible_users: signatures.len(),
        pr_unique: Some(unique as f64 / signatures.len() as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{GridSpec, Sample};

    fn ts3() -> TraceSet {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let mk = |user, cells: Vec<(u16, u8, u32, u32)>| Trajectory {
            user,
            samples: cells
                .into_iter()
                .map(|(d, b, x, y)| Sample { day: d, bin: b, cell: Cell::new(x, y) })
                .collect(),
        };
        TraceSet::new(
            grid,
            3,
            vec![
                mk(1, vec![(0, 10, 1, 1), (0, 20, 2, 2), (1, 10, 1, 1)]),
                mk(2, vec![(0, 10, 1, 1), (0, 20, 3, 3)]),
                mk(3, vec![(2, 5, 4, 4)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn candidate_set_self_membership() {
        let ts = ts3();
        let q = QuerySpec::new(vec![Constraint {
            cell: Cell::new(2, 2),
            window: TimeWindow::Day { day: 0, bin_lo: 19, bin_hi: 21 },
        }])
        .unwrap();
        let cand = candidate_set(&ts, &q);
        assert!(cand.contains(&1));
    }

    #[test]
    fn candidate_set_empty_for_unvisited_cell() {
        let ts = ts3();
        let q = QuerySpec::new(vec![Constraint {
            cell: Cell::new(7, 7),
            window: TimeWindow::Day { day: 0, bin_lo: 0, bin_hi: 47 },
        }])
        .unwrap();
        assert!(candidate_set(&ts, &q).is_empty());
    }

    #[test]
    fn candidate_set_matches_brute_force() {
        let ts = ts3();
        let q = QuerySpec::new(vec![
            Constraint {
                cell: Cell::new(1, 1),
                window: TimeWindow::Day { day: 0, bin_lo: 5, bin_hi: 15 },
            },
            Constraint {
                cell: Cell::new(2, 2),
                window: TimeWindow::Day { day: 0, bin_lo: 15, bin_hi: 25 },
            },
        ])
        .unwrap();
        let got = candidate_set(&ts, &q);
        let oracle: BTreeSet<u64> = ts
            .trajectories()
            .iter()
            .filter(|t| q.constraints.iter().all(|c| satisfies(t, c)))
            .map(|t| t.user)
            .collect();
        assert_eq!(got, oracle);
        assert_eq!(got, BTreeSet::from([1]));
    }

    #[test]
    fn adding_constraint_never_enlarges_candidates() {
        let ts = ts3();
        let base = QuerySpec::new(vec![Constraint {
            cell: Cell::new(1, 1),
            window: TimeWindow::Day { day: 0, bin_lo: 0, bin_hi: 47 },
        }])
        .unwrap();
        let mut extended = base.clone();
        extended.constraints.push(Constraint {
            cell: Cell::new(3, 3),
            window: TimeWindow::Day { day: 0, bin_lo: 0, bin_hi: 47 },
        });
        let c1 = candidate_set(&ts, &base);
        let c2 = candidate_set(&ts, &extended);
        assert!(c2.is_subset(&c1));
    }

    #[test]
    fn unicity_single_user_is_one() {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let ts = TraceSet::new(
            grid,
            2,
            vec![Trajectory {
                user: 1,
                samples: vec![
                    Sample { day: 0, bin: 0, cell: Cell::new(1, 1) },
                    Sample { day: 0, bin: 1, cell: Cell::new(2, 2) },
                    Sample { day: 1, bin: 0, cell: Cell::new(3, 3) },
                ],
            }],
        )
        .unwrap();
        let rep = unicity(&ts, 3, 50, 7).unwrap();
        for (_, u) in rep.curve {
            assert_eq!(u, 1.0);
        }
    }

    #[test]
    fn unicity_identical_pair_is_zero() {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let samples = vec![
            Sample { day: 0, bin: 0, cell: Cell::new(1, 1) },
            Sample { day: 0, bin: 1, cell: Cell::new(2, 2) },
        ];
        let ts = TraceSet::new(
            grid,
            1,
            vec![
                Trajectory { user: 1, samples: samples.clone() },
                Trajectory { user: 2, samples },
            ],
        )
        .unwrap();
        let rep = unicity(&ts, 2, 50, 7).unwrap();
        for (_, u) in rep.curve {
            assert_eq!(u, 0.0);
        }
    }

    #[test]
    fn unicity_curve_is_monotone() {
        let ts = ts3();
        let rep = unicity(&ts, 2, 200, 11).unwrap();
        assert!(rep.curve[0].1 <= rep.curve[1].1);
    }

    #[test]
    fn anchors_hand_count() {
        // 5 night samples in c1, 3 in c2; 4 office-hour samples in c3
        let c1 = Cell::new(1, 1);
        let c2 = Cell::new(2, 2);
        let c3 = Cell::new(3, 3);
        let mut samples = Vec::new();
        for i in 0..5u8 {
            samples.push(Sample { day: i as u16, bin: 45, cell: c1 });
        }
        for i in 0..3u8 {
            samples.push(Sample { day: i as u16, bin: 2, cell: c2 });
        }
        for i in 0..4u8 {
            samples.push(Sample { day: i as u16, bin: 20, cell: c3 });
        }
        let t = Trajectory { user: 1, samples };
        let sig = infer_anchors(&t, 1).unwrap();
        assert_eq!(sig.home, c1);
        assert_eq!(sig.work, c3);
        assert_eq!(sig.extras, vec![c2]);
    }

    #[test]
    fn single_cell_user_home_equals_work() {
        let c = Cell::new(4, 4);
        let t = Trajectory {
            user: 1,
            samples: vec![
                Sample { day: 0, bin: 0, cell: c },
                Sample { day: 0, bin: 20, cell: c },
            ],
        };
        let sig = infer_anchors(&t, 2).unwrap();
        assert_eq!(sig.home, c);
        assert_eq!(sig.work, c);
        assert!(sig.extras.is_empty());
    }

    #[test]
    fn user_without_work_samples_is_absent() {
        let t = Trajectory {
            user: 1,
            samples: vec![Sample { day: 0, bin: 0, cell: Cell::new(1, 1) }],
        };
        assert!(infer_anchors(&t, 0).is_none());
    }

    #[test]
    fn shared_anchor_population_has_zero_uniqueness() {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let samples = vec![
            Sample { day: 0, bin: 0, cell: Cell::new(1, 1) },
            Sample { day: 0, bin: 20, cell: Cell::new(2, 2) },
        ];
        let ts = TraceSet::new(
            grid,
            1,
            (0..4u64).map(|u| Trajectory { user: u, samples: samples.clone() }).collect(),
        )
        .unwrap();
        let rep = anchor_uniqueness(&ts, 0).unwrap();
        assert_eq!(rep.ua_hw, 0.0);
        assert_eq!(rep.k_hw_distribution, BTreeMap::from([(4, 4)]));
        assert_eq!(rep.shared_pair_histogram, BTreeMap::from([(4, 1)]));
    }

    #[test]
    fn seclusion_extremes() {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        // user 1 alone in (1,1); users 2,3 share (2,2)
        let ts = TraceSet::new(
            grid,
            1,
            vec![
                Trajectory {
                    user: 1,
                    samples: vec![Sample { day: 0, bin: 0, cell: Cell::new(1, 1) }],
                },
                Trajectory {
                    user: 2,
                    samples: vec![Sample { day: 0, bin: 0, cell: Cell::new(2, 2) }],
                },
                Trajectory {
                    user: 3,
                    samples: vec![Sample { day: 0, bin: 0, cell: Cell::new(2, 2) }],
                },
            ],
        )
        .unwrap();
        let rep = seclusion_exposure(&ts, 1).unwrap();
        let se: BTreeMap<u64, f64> = rep.per_user.iter().copied().collect();
        assert_eq!(se[&1], 1.0);
        assert_eq!(se[&2], 0.0);
        assert_eq!(rep.exposed_users, 1);
    }

    #[test]
    fn sensitive_uniqueness_shared_single_cell() {
        let grid = GridSpec::new(8, 8, 500.0).unwrap();
        let hospital = Cell::new(5, 5);
        let ts = TraceSet::new(
            grid,
            1,
            (0..3u64)
                .map(|u| Trajectory {
                    user: u,
                    samples: vec![Sample { day: 0, bin: 0, cell: hospital }],
                })
                .collect(),
        )
        .unwrap();
        let pois = PoiCatalog::new(
            vec![(hospital, "General Hospital".into())],
            vec!["Hospital".into()],
        );
        let rep = sensitive_uniqueness(&ts, &pois, 1).unwrap();
        assert_eq!(rep.eligible_users, 3);
        assert_eq!(rep.pr_unique, Some(0.0));
    }

    #[test]
    fn sensitive_uniqueness_not_applicable() {
        let ts = ts3();
        let pois = PoiCatalog::new(
            vec![(Cell::new(7, 7), "Clinic".into())],
            vec!["Clinic".into()],
        );
        let rep = sensitive_uniqueness(&ts, &pois, 1).unwrap();
        assert_eq!(rep.eligible_users, 0);
        assert_eq!(rep.pr_unique, None);
    }
}
