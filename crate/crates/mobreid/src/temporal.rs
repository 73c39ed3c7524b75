//! Calendar recovery: day-class clustering, weekday inference, and
//! holiday matching against a public calendar.

use std::collections::HashSet;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::catalog::HolidayCalendar;
use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::trace::{Cell, TraceSet, BINS_PER_DAY};

/// Per-day activity profile: unique-user counts per half-hour bin over a
/// chosen cell set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayProfile {
    pub day: u16,
    pub bins: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DayClass {
    /// Non-working day.
    A,
    /// Working day.
    B,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayClassification {
    pub labels: Vec<DayClass>,
    /// Cluster centroids in z-scored space, [A, B].
    pub centroids: [Vec<f64>; 2],
    pub inertia: f64,
}

/// Which axis gets standardized before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZScoreAxis {
    /// Each of the 48 bins standardized across days (default).
    PerBinAcrossDays,
    /// Each day's 48-vector standardized across its own bins.
    PerDayAcrossBins,
}

/// Top `n` cells by unique-visitor count, descending; ties break on
/// (x, y) lexicographic.
pub fn top_cells(ts: &TraceSet, n: usize) -> Result<Vec<Cell>> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let index = ts.visitors_index();
    if n > index.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {n} cells but only {} are visited",
            index.len()
        )));
    }
    let mut cells: Vec<(Cell, usize)> = index.iter().map(|(c, u)| (*c, u.len())).collect();
    cells.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(cells.into_iter().take(n).map(|(c, _)| c).collect())
}

/// For each day, the 48-vector counting distinct users seen in any of
/// the given cells at each bin.
pub fn day_profiles(ts: &TraceSet, cells: &[Cell]) -> Result<Vec<DayProfile>> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("cell set must be non-empty".into()));
    }
    let cell_set: HashSet<Cell> = cells.iter().copied().collect();
    let bins = BINS_PER_DAY as usize;
    let mut counts: Vec<Vec<HashSet<u64>>> =
        (0..ts.day_count).map(|_| vec![HashSet::new(); bins]).collect();
    for t in ts.trajectories() {
        for s in &t.samples {
            if cell_set.contains(&s.cell) {
                counts[s.day as usize][s.bin as usize].insert(t.user);
            }
        }
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(day, per_bin)| DayProfile {
            day: day as u16,
            bins: per_bin.into_iter().map(|u| u.len() as f64).collect(),
        })
        .collect())
}

fn zscore(profiles: &[DayProfile], axis: ZScoreAxis) -> Result<Vec<Vec<f64>>> {
    let n = profiles.len();
    let bins = profiles[0].bins.len();
    let mut data: Vec<Vec<f64>> = profiles.iter().map(|p| p.bins.clone()).collect();
    match axis {
        ZScoreAxis::PerBinAcrossDays => {
            let mut any_variance = false;
            for j in 0..bins {
                let mean = data.iter().map(|r| r[j]).sum::<f64>() / n as f64;
                let var = data.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
                let sd = var.sqrt();
                for row in data.iter_mut() {
                    row[j] = if sd > 0.0 { (row[j] - mean) / sd } else { 0.0 };
                }
                if sd > 0.0 {
                    any_variance = true;
                }
            }
            if !any_variance {
                return Err(Error::DegenerateClustering(
                    "every bin is constant across days".into(),
                ));
            }
        }
        ZScoreAxis::PerDayAcrossBins => {
            for row in data.iter_mut() {
                let mean = row.iter().sum::<f64>() / bins as f64;
                let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / bins as f64;
                let sd = var.sqrt();
                for v in row.iter_mut() {
                    *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
                }
            }
        }
    }
    Ok(data)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding; returns (assignment, centroids, inertia).
fn kmeans2(data: &[Vec<f64>], rng: &mut impl rand::Rng) -> (Vec<usize>, [Vec<f64>; 2], f64) {
    use rand::distributions::{Distribution, WeightedIndex};
    let n = data.len();
    // k-means++ seeding
    let first = rng.gen_range(0..n);
    let d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &data[first])).collect();
    let second = if d2.iter().all(|d| *d == 0.0) {
        (first + 1) % n
    } else {
        WeightedIndex::new(&d2).unwrap().sample(rng)
    };
    let mut centroids = [data[first].clone(), data[second].clone()];
    let mut assignment = vec![0usize; n];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in data.iter().enumerate() {
            let c = if sq_dist(p, &centroids[0]) <= sq_dist(p, &centroids[1]) { 0 } else { 1 };
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        for k in 0..2 {
            let members: Vec<&Vec<f64>> =
                data.iter().zip(&assignment).filter(|(_, a)| **a == k).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            let dim = members[0].len();
            let mut mean = vec![0.0; dim];
            for m in &members {
                for (j, v) in m.iter().enumerate() {
                    mean[j] += v;
                }
            }
            for v in mean.iter_mut() {
                *v /= members.len() as f64;
            }
            centroids[k] = mean;
        }
        if !changed {
            break;
        }
    }
    let inertia: f64 =
        data.iter().zip(&assignment).map(|(p, &a)| sq_dist(p, &centroids[a])).sum();
    (assignment, centroids, inertia)
}

/// 2-means over z-scored profiles. Label B goes to the larger cluster.
/// Deterministic given `seed`; 50 k-means++ restarts, best inertia wins.
pub fn classify_days(
    profiles: &[DayProfile],
    seed: u64,
    axis: ZScoreAxis,
) -> Result<DayClassification> {
    if profiles.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 day profiles".into()));
    }
    let data = zscore(profiles, axis)?;
    let mut best: Option<(Vec<usize>, [Vec<f64>; 2], f64)> = None;
    for restart in 0..50u64 {
        let mut rng = derive_rng(seed, restart);
        let run = kmeans2(&data, &mut rng);
        if best.as_ref().map_or(true, |b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (assignment, centroids, inertia) = best.unwrap();
    let size0 = assignment.iter().filter(|a| **a == 0).count();
    let size1 = assignment.len() - size0;
    if size0 == 0 || size1 == 0 {
        return Err(Error::DegenerateClustering("one cluster is empty".into()));
    }
    // B = larger cluster (working days dominate a normal window)
    let b_cluster = if size1 > size0 { 1 } else { 0 };
    let labels: Vec<DayClass> = assignment
        .iter()
        .map(|&a| if a == b_cluster { DayClass::B } else { DayClass::A })
        .collect();
    let a_cluster = 1 - b_cluster;
    let centroids = [centroids[a_cluster].clone(), centroids[b_cluster].clone()];
    Ok(DayClassification { labels, centroids, inertia })
}

/// Winner of the 7-hypothesis weekday scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeekdayInference {
    pub weekday_of_day0: Weekday,
    /// Mon-Fri day indices labeled A: the suspected holidays.
    pub holiday_days: Vec<u16>,
    /// Weekend days labeled B under the winning hypothesis.
    pub hard_violations: u32,
    /// Mon-Fri days labeled A (the suspected holidays) under the winner.
    pub soft_anomalies: u32,
}

fn weekday_from_offset(offset: u8) -> Weekday {
    // offset 0 = Monday
    match offset {
        0 => Weekday::Mon,
        1 => Weekday::Tue,
        2 => Weekday::Wed,
        3 => Weekday::Thu,
        4 => Weekday::Fri,
        5 => Weekday::Sat,
        _ => Weekday::Sun,
    }
}

/// Evaluate all 7 weekday-of-day-0 hypotheses and pick the one with the
/// fewest hard violations (weekend days labeled B), breaking ties by
/// fewest soft anomalies (weekday days labeled A).
pub fn infer_weekday_offset(labels: &[DayClass]) -> Result<WeekdayInference> {
    if labels.len() < 14 {
        return Err(Error::InvalidArgument(format!(
            "need >= 14 labeled days, got {}",
            labels.len()
        )));
    }
    let mut scored: Vec<(u8, u32, u32)> = Vec::with_capacity(7);
    for offset in 0u8..7 {
        let mut hard = 0u32;
        let mut soft = 0u32;
        for (d, label) in labels.iter().enumerate() {
            let wd = (offset as usize + d) % 7; // 0 = Monday
            let weekend = wd >= 5;
            match (weekend, label) {
                (true, DayClass::B) => hard += 1,
                (false, DayClass::A) => soft += 1,
                _ => {}
            }
        }
        scored.push((offset, hard, soft));
    }
    let best_key = scored.iter().map(|&(_, h, s)| (h, s)).min().unwrap();
    let winners: Vec<u8> =
        scored.iter().filter(|&&(_, h, s)| (h, s) == best_key).map(|&(o, _, _)| o).collect();
    if winners.len() > 1 {
        return Err(Error::AmbiguousWeekday(winners));
    }
    let offset = winners[0];
    let holiday_days: Vec<u16> = labels
        .iter()
        .enumerate()
        .filter(|(d, label)| {
            let wd = (offset as usize + d) % 7;
            wd < 5 && **label == DayClass::A
        })
        .map(|(d, _)| d as u16)
        .collect();
    Ok(WeekdayInference {
        weekday_of_day0: weekday_from_offset(offset),
        holiday_days,
        hard_violations: best_key.0,
        soft_anomalies: best_key.1,
    })
}

/// A candidate start date together with the holiday names it implies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateStart {
    pub start_date: NaiveDate,
    /// (day index, calendar holiday name) for each matched suspected holiday.
    pub matched_holidays: Vec<(u16, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalResult {
    pub weekday_of_day0: Weekday,
    pub holiday_days: Vec<u16>,
    pub candidates: Vec<CandidateStart>,
    pub unique: bool,
}

/// Scan every weekday-consistent start date in `window` and accept those
/// whose holiday signature matches the calendar bidirectionally:
/// suspected holidays must be calendar holidays (up to `tolerance`
/// unmatched days), and every Mon-Fri calendar holiday in the span must
/// be suspected.
pub fn match_calendar(
    inference: &WeekdayInference,
    cal: &HolidayCalendar,
    window: (NaiveDate, NaiveDate),
    day_count: u16,
    tolerance: u32,
) -> Result<TemporalResult> {
    let (earliest, latest) = window;
    if earliest > latest {
        return Err(Error::InvalidArgument("window earliest must be <= latest".into()));
    }
    let span_end = latest + Duration::days(day_count as i64);
    if !cal.dates().any(|d| d >= earliest && d <= span_end) {
        return Err(Error::InvalidArgument(
            "holiday calendar has no dates covering the search window".into(),
        ));
    }
    let suspected: HashSet<u16> = inference.holiday_days.iter().copied().collect();
    let mut candidates = Vec::new();
    let mut date = earliest;
    while date <= latest {
        if date.weekday() == inference.weekday_of_day0 {
            let mut unmatched = 0u32;
            let mut matched = Vec::new();
            for &d in &inference.holiday_days {
                let cal_date = date + Duration::days(d as i64);
                match cal.name_of(cal_date) {
                    Some(name) => matched.push((d, name.to_string())),
                    None => unmatched += 1,
                }
            }
            let mut extra_holiday = false;
            for d in 0..day_count {
                let cal_date = date + Duration::days(d as i64);
                let wd = cal_date.weekday().num_days_from_monday();
                if wd < 5 && cal.is_holiday(cal_date) && !suspected.contains(&d) {
                    extra_holiday = true;
                    break;
                }
            }
            if unmatched <= tolerance && !extra_holiday {
                candidates.push(CandidateStart { start_date: date, matched_holidays: matched });
            }
        }
        date += Duration::days(1);
    }
    let unique = candidates.len() == 1;
    Ok(TemporalResult {
        weekday_of_day0: inference.weekday_of_day0,
        holiday_days: inference.holiday_days.clone(),
        candidates,
        unique,
    })
}

/// Days whose unique-user count at `cell` exceeds `threshold` times the
/// median daily count, sorted by count descending.
pub fn detect_activity_spikes(
    ts: &TraceSet,
    cell: Cell,
    threshold: f64,
) -> Result<Vec<(u16, usize)>> {
    if !(threshold > 1.0) {
        return Err(Error::InvalidArgument("threshold must be > 1".into()));
    }
    if ts.unique_visitors(cell)? == 0 {
        return Err(Error::InvalidArgument(format!(
            "cell ({}, {}) is never visited",
            cell.x, cell.y
        )));
    }
    let mut per_day: Vec<HashSet<u64>> = vec![HashSet::new(); ts.day_count as usize];
    for t in ts.trajectories() {
        for s in &t.samples {
            if s.cell == cell {
                per_day[s.day as usize].insert(t.user);
            }
        }
    }
    let counts: Vec<usize> = per_day.into_iter().map(|u| u.len()).collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2] as f64
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) as f64 / 2.0
    };
    let mut spikes: Vec<(u16, usize)> = counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c as f64 > threshold * median)
        .map(|(d, c)| (d as u16, c))
        .collect();
    spikes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(spikes)
}
