//! Daily user-topic usage, description vectors, and group similarity.
//!
//! For a day d the usage window is the trailing 7 days ending at d
//! (inclusive), never centered, so no future information enters. Each
//! day is governed by the latest partition whose snapshot closed at or
//! before the start of the day's week, giving at worst a one-week lag
//! between network update and daily usage attribution.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GroupNorm;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::graph::{MemoryPolicy, PolicyKind};
use crate::ingest::UserProfile;
use crate::timeutil::{iso_date, TimeRange, DAY};
use crate::topics::TopicPartition;

// ---------------------------------------------------------------------------
// Usage matrices

#[derive(Debug, Clone)]
pub struct UsageMatrix {
    /// Day index relative to capture start.
    pub day: usize,
    /// End of day `day` (exclusive), epoch seconds.
    pub day_end: i64,
    pub partition_week: usize,
    pub n_topics: usize,
    /// user -> topic-attributed hashtag use counts over the window.
    pub rows: BTreeMap<String, Vec<u64>>,
    /// Population total T (component-wise sum of all rows).
    pub total: Vec<u64>,
    /// Hashtag uses attributed to at least one topic.
    pub covered_uses: u64,
    /// Uses of hashtags in no topic or in the noise pseudo-topic.
    pub skipped_uses: u64,
}

/// Count topic-attributed hashtag uses per user over `frame`.
/// A hashtag in several overlapping topics adds a full count to each.
pub fn usage_matrix(
    events: &[Event],
    partition: &TopicPartition,
    frame: TimeRange,
    day: usize,
) -> UsageMatrix {
    let membership = partition.membership();
    let n_topics = partition.n_topics();
    let mut rows: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut total = vec![0u64; n_topics];
    let mut covered = 0u64;
    let mut skipped = 0u64;
    let lo = events.partition_point(|e| e.timestamp < frame.start);
    let hi = events.partition_point(|e| e.timestamp < frame.end);
    for ev in &events[lo..hi] {
        for tag in &ev.hashtags {
            match membership.get(tag.as_str()) {
                Some(topic_ids) => {
                    covered += 1;
                    let row = rows
                        .entry(ev.user_id.clone())
                        .or_insert_with(|| vec![0u64; n_topics]);
                    for &t in topic_ids {
                        row[t] += 1;
                        total[t] += 1;
                    }
                }
                None => skipped += 1,
            }
        }
    }
    UsageMatrix {
        day,
        day_end: frame.end,
        partition_week: partition.week_index,
        n_topics,
        rows,
        total,
        covered_uses: covered,
        skipped_uses: skipped,
    }
}

// ---------------------------------------------------------------------------
// Description vectors

/// v_i = u_i/||u_i||_1 - T/||T||_1, then d_i = v_i/||v_i||_2.
/// Degenerate rows (no usage, or exactly the population distribution)
/// yield the zero vector: the user is inactive for the day.
pub fn description_vector(u: &[u64], total: &[u64]) -> Vec<f64> {
    let u1: u64 = u.iter().sum();
    let t1: u64 = total.iter().sum();
    if u1 == 0 || t1 == 0 {
        return vec![0.0; u.len()];
    }
    let mut v: Vec<f64> = u
        .iter()
        .zip(total)
        .map(|(&ui, &ti)| ui as f64 / u1 as f64 - ti as f64 / t1 as f64)
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; u.len()];
    }
    for x in &mut v {
        *x /= norm;
    }
    v
}

#[derive(Debug, Clone)]
pub struct GroupProfile {
    pub label: String,
    pub day: usize,
    /// Average description vector D_G.
    pub vector: Vec<f64>,
    pub member_count: usize,
    /// Members with a nonzero description vector this day.
    pub active_count: usize,
}

/// Average the members' description vectors. Returns `None` when no
/// member is active on the day (the point is absent, not zero).
pub fn group_profile(
    matrix: &UsageMatrix,
    label: &str,
    members: &BTreeSet<String>,
    norm: GroupNorm,
) -> Option<GroupProfile> {
    let mut sum = vec![0.0; matrix.n_topics];
    let mut active = 0usize;
    for user in members {
        let Some(row) = matrix.rows.get(user) else {
            continue;
        };
        let d = description_vector(row, &matrix.total);
        if d.iter().any(|&x| x != 0.0) {
            active += 1;
            for (s, x) in sum.iter_mut().zip(&d) {
                *s += x;
            }
        }
    }
    if active == 0 {
        return None;
    }
    let denom = match norm {
        GroupNorm::ActiveMembers => active as f64,
        GroupNorm::AllMembers => members.len() as f64,
    };
    for s in &mut sum {
        *s /= denom;
    }
    Some(GroupProfile {
        label: label.to_string(),
        day: matrix.day,
        vector: sum,
        member_count: members.len(),
        active_count: active,
    })
}

pub fn cross_similarity(a: &GroupProfile, b: &GroupProfile) -> f64 {
    a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum()
}

/// Similarity between two groups for one day's matrix. Distinct groups
/// have their intersection removed from both sides before profiles are
/// formed; the self case (`label_a == label_b`) uses the group as is.
pub fn pair_similarity(
    matrix: &UsageMatrix,
    label_a: &str,
    members_a: &BTreeSet<String>,
    label_b: &str,
    members_b: &BTreeSet<String>,
    norm: GroupNorm,
) -> Option<(f64, usize, usize)> {
    if label_a == label_b {
        let p = group_profile(matrix, label_a, members_a, norm)?;
        return Some((cross_similarity(&p, &p), p.active_count, p.active_count));
    }
    let shared: BTreeSet<String> = members_a.intersection(members_b).cloned().collect();
    let only_a: BTreeSet<String> = members_a.difference(&shared).cloned().collect();
    let only_b: BTreeSet<String> = members_b.difference(&shared).cloned().collect();
    let pa = group_profile(matrix, label_a, &only_a, norm)?;
    let pb = group_profile(matrix, label_b, &only_b, norm)?;
    Some((
        cross_similarity(&pa, &pb),
        pa.active_count,
        pb.active_count,
    ))
}

// ---------------------------------------------------------------------------
// Partition schedule (which partition governs which day)

pub struct PartitionSchedule<'a> {
    pub policy: PolicyKind,
    partitions: &'a [TopicPartition],
    /// Snapshot close times, parallel to `partitions`.
    closes: Vec<i64>,
}

impl<'a> PartitionSchedule<'a> {
    /// Close times come from the policy's update grid. Static policies
    /// have a single partition governing every post-baseline day.
    pub fn new(
        partitions: &'a [TopicPartition],
        policy: &MemoryPolicy,
        capture: TimeRange,
    ) -> Result<Self> {
        let closes = match policy.kind {
            PolicyKind::StaticFull => vec![capture.start + policy.baseline_span],
            _ => (0..partitions.len())
                .map(|k| policy.close_time(capture, k))
                .collect(),
        };
        if closes.len() != partitions.len() {
            return Err(Error::Policy(format!(
                "{} partitions for {} update steps",
                partitions.len(),
                closes.len()
            )));
        }
        Ok(PartitionSchedule {
            policy: policy.kind,
            partitions,
            closes,
        })
    }

    /// Latest partition whose snapshot closed at or before the start of
    /// the day. Errors for days inside the baseline accumulation.
    pub fn governing(&self, day: usize, day_start: i64) -> Result<&'a TopicPartition> {
        let idx = self.closes.partition_point(|&c| c <= day_start);
        if idx == 0 {
            return Err(Error::NoGoverningPartition { day });
        }
        Ok(&self.partitions[idx - 1])
    }

    pub fn first_governed_day(&self, capture: TimeRange) -> usize {
        let first_close = self.closes.first().copied().unwrap_or(capture.end);
        ((first_close - capture.start) / DAY).max(0) as usize
    }
}

// ---------------------------------------------------------------------------
// Series

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub day: usize,
    /// End of the day, epoch seconds.
    pub timestamp: i64,
    pub value: f64,
    pub active_a: usize,
    pub active_b: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilaritySeries {
    pub group_a: String,
    pub group_b: String,
    pub policy: PolicyKind,
    pub points: Vec<SeriesPoint>,
}

/// Compute all daily usage matrices for one policy's schedule, in day
/// order. Days are independent and computed in parallel.
pub fn daily_usage_matrices(
    events: &[Event],
    schedule: &PartitionSchedule<'_>,
    capture: TimeRange,
) -> Result<Vec<UsageMatrix>> {
    let first_day = schedule.first_governed_day(capture);
    let n_days = (capture.duration() / DAY) as usize;
    (first_day..n_days)
        .into_par_iter()
        .map(|d| {
            let day_start = capture.start + d as i64 * DAY;
            let partition = schedule.governing(d, day_start)?;
            let frame = TimeRange::new(day_start + DAY - 7 * DAY, day_start + DAY);
            Ok(usage_matrix(events, partition, frame, d))
        })
        .collect()
}

/// Assemble one (group pair, policy) series from precomputed matrices.
pub fn series_from_matrices(
    matrices: &[UsageMatrix],
    groups: &BTreeMap<String, BTreeSet<String>>,
    pair: (&str, &str),
    policy: PolicyKind,
    norm: GroupNorm,
) -> Result<SimilaritySeries> {
    let (a, b) = pair;
    let members_a = groups
        .get(a)
        .ok_or_else(|| Error::Config(format!("unknown group {a:?}")))?;
    let members_b = groups
        .get(b)
        .ok_or_else(|| Error::Config(format!("unknown group {b:?}")))?;
    let points = matrices
        .par_iter()
        .filter_map(|m| {
            pair_similarity(m, a, members_a, b, members_b, norm).map(|(s, na, nb)| SeriesPoint {
                day: m.day,
                timestamp: m.day_end,
                value: s,
                active_a: na,
                active_b: nb,
            })
        })
        .collect();
    Ok(SimilaritySeries {
        group_a: a.to_string(),
        group_b: b.to_string(),
        policy,
        points,
    })
}

/// End-to-end: matrices plus one pair. Prefer `daily_usage_matrices` +
/// `series_from_matrices` when computing several pairs.
pub fn similarity_series(
    events: &[Event],
    schedule: &PartitionSchedule<'_>,
    groups: &BTreeMap<String, BTreeSet<String>>,
    pair: (&str, &str),
    capture: TimeRange,
    norm: GroupNorm,
) -> Result<SimilaritySeries> {
    let matrices = daily_usage_matrices(events, schedule, capture)?;
    series_from_matrices(&matrices, groups, pair, schedule.policy, norm)
}

/// Fixed random sample of active in-scope users, drawn once with a
/// recorded seed and held for the whole period.
pub fn sample_null_group(
    profiles: &BTreeMap<String, UserProfile>,
    size: usize,
    seed: u64,
) -> BTreeSet<String> {
    use rand::SeedableRng;
    let candidates: Vec<&String> = profiles
        .values()
        .filter(|p| p.active && p.in_scope)
        .map(|p| &p.user_id)
        .collect();
    if candidates.len() <= size {
        return candidates.into_iter().cloned().collect();
    }
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, candidates.len(), size)
        .iter()
        .map(|i| candidates[i].clone())
        .collect()
}

pub fn series_to_csv(series: &SimilaritySeries) -> String {
    let mut out = String::from("date,value,active_count_a,active_count_b\n");
    for p in &series.points {
        // Label the point with the calendar date of the day it describes
        // (the day ending at `timestamp`).
        out.push_str(&format!(
            "{},{},{},{}\n",
            iso_date(p.timestamp - DAY),
            p.value,
            p.active_a,
            p.active_b
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{normalize_hashtags, EventKind};

    fn post(user: &str, ts: i64, tags: &[&str]) -> Event {
        Event {
            event_id: format!("{user}-{ts}"),
            timestamp: ts,
            user_id: user.to_string(),
            kind: EventKind::Original,
            repost_of_user: None,
            hashtags: normalize_hashtags(tags.iter().copied()),
            location_tag: None,
        }
    }

    fn partition(topics: &[&[&str]]) -> TopicPartition {
        TopicPartition {
            week_index: 0,
            topics: topics
                .iter()
                .map(|t| t.iter().map(|s| s.to_string()).collect())
                .collect(),
            noise: BTreeSet::new(),
            detector_tag: "test".into(),
        }
    }

    #[test]
    fn single_topic_hit_is_a_unit_row() {
        let events = vec![post("u1", 10, &["x"])];
        let p = partition(&[&["a"], &["b"], &["c"], &["x"]]);
        let m = usage_matrix(&events, &p, TimeRange::new(0, 100), 0);
        assert_eq!(m.rows["u1"], vec![0, 0, 0, 1]);
        assert_eq!(m.covered_uses, 1);
    }

    #[test]
    fn overlapping_topics_both_counted() {
        let events = vec![post("u1", 10, &["x"])];
        let p = partition(&[&["a"], &["x", "y"], &["b"], &["x", "z"]]);
        let m = usage_matrix(&events, &p, TimeRange::new(0, 100), 0);
        assert_eq!(m.rows["u1"], vec![0, 1, 0, 1]);
    }

    #[test]
    fn untopiced_hashtags_counted_as_skipped() {
        let events = vec![post("u1", 10, &["x", "mystery"])];
        let p = partition(&[&["x", "y"]]);
        let m = usage_matrix(&events, &p, TimeRange::new(0, 100), 0);
        assert_eq!(m.covered_uses, 1);
        assert_eq!(m.skipped_uses, 1);
    }

    #[test]
    fn lone_user_matches_population_exactly() {
        // A single active user IS the population: v_i = 0, so d_i = 0.
        let u = [2u64, 3];
        let d = description_vector(&u, &u);
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_users_on_disjoint_topics_hand_computed() {
        let d1 = description_vector(&[1, 0], &[1, 1]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d1[0] - s).abs() < 1e-12);
        assert!((d1[1] + s).abs() < 1e-12);
    }

    #[test]
    fn norm_is_zero_or_one() {
        let total = [7u64, 2, 5];
        for u in [[0u64, 0, 0], [3, 1, 0], [1, 1, 1]] {
            let d = description_vector(&u, &total);
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(n.abs() < 1e-12 || (n - 1.0).abs() < 1e-12, "norm {n}");
        }
    }

    #[test]
    fn rescaling_usage_leaves_direction_unchanged() {
        let total = [10u64, 20, 5];
        let u = [2u64, 1, 4];
        let scaled = [6u64, 3, 12];
        let d1 = description_vector(&u, &total);
        let d2 = description_vector(&scaled, &total);
        for (a, b) in d1.iter().zip(&d2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn centering_identity() {
        // Sum over users of v_i weighted by ||u_i||_1/||T||_1 vanishes.
        let rows: Vec<Vec<u64>> = vec![vec![3, 0, 1], vec![0, 2, 2], vec![5, 1, 0]];
        let mut total = vec![0u64; 3];
        for r in &rows {
            for (t, x) in total.iter_mut().zip(r) {
                *t += x;
            }
        }
        let t1: u64 = total.iter().sum();
        let mut acc = vec![0.0; 3];
        for r in &rows {
            let u1: u64 = r.iter().sum();
            if u1 == 0 {
                continue;
            }
            for (i, &x) in r.iter().enumerate() {
                let v = x as f64 / u1 as f64 - total[i] as f64 / t1 as f64;
                acc[i] += v * u1 as f64 / t1 as f64;
            }
        }
        for x in acc {
            assert!(x.abs() < 1e-9);
        }
    }

    fn matrix_for(rows: &[(&str, &[u64])]) -> UsageMatrix {
        let n = rows[0].1.len();
        let mut total = vec![0u64; n];
        let mut map = BTreeMap::new();
        for (u, r) in rows {
            for (t, x) in total.iter_mut().zip(*r) {
                *t += x;
            }
            map.insert(u.to_string(), r.to_vec());
        }
        UsageMatrix {
            day: 0,
            day_end: DAY,
            partition_week: 0,
            n_topics: n,
            rows: map,
            total,
            covered_uses: 0,
            skipped_uses: 0,
        }
    }

    fn set(users: &[&str]) -> BTreeSet<String> {
        users.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn self_similarity_of_singleton_is_one() {
        let m = matrix_for(&[("u1", &[3, 0]), ("u2", &[0, 5])]);
        let (s, _, _) =
            pair_similarity(&m, "g", &set(&["u1"]), "g", &set(&["u1"]), GroupNorm::ActiveMembers)
                .unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_profiles_similarity_zero() {
        let mk = |v: Vec<f64>| GroupProfile {
            label: "g".into(),
            day: 0,
            vector: v,
            member_count: 1,
            active_count: 1,
        };
        let s = cross_similarity(&mk(vec![1.0, 0.0]), &mk(vec![0.0, 1.0]));
        assert_eq!(s, 0.0);
    }

    #[test]
    fn opposite_singleton_deviations_similarity_minus_one() {
        // Two users splitting two topics deviate from the population in
        // exactly opposite directions.
        let m = matrix_for(&[("u1", &[1, 0]), ("u2", &[0, 1])]);
        let (s, _, _) = pair_similarity(
            &m,
            "ga",
            &set(&["u1"]),
            "gb",
            &set(&["u2"]),
            GroupNorm::ActiveMembers,
        )
        .unwrap();
        // Opposite unit deviations in 2 dimensions: s = -1.
        assert!((s + 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_is_symmetric() {
        let m = matrix_for(&[
            ("u1", &[3, 1, 0]),
            ("u2", &[0, 2, 2]),
            ("u3", &[1, 1, 5]),
            ("u4", &[2, 0, 1]),
        ]);
        let ga = set(&["u1", "u2"]);
        let gb = set(&["u3", "u4"]);
        let (ab, _, _) =
            pair_similarity(&m, "ga", &ga, "gb", &gb, GroupNorm::ActiveMembers).unwrap();
        let (ba, _, _) =
            pair_similarity(&m, "gb", &gb, "ga", &ga, GroupNorm::ActiveMembers).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn intersection_removed_from_both_sides() {
        let m = matrix_for(&[
            ("u1", &[3, 1, 0]),
            ("shared", &[9, 9, 9]),
            ("u3", &[1, 1, 5]),
        ]);
        let ga = set(&["u1", "shared"]);
        let gb = set(&["u3", "shared"]);
        let with_shared =
            pair_similarity(&m, "ga", &ga, "gb", &gb, GroupNorm::ActiveMembers).unwrap();
        let without = pair_similarity(
            &m,
            "ga",
            &set(&["u1"]),
            "gb",
            &set(&["u3"]),
            GroupNorm::ActiveMembers,
        )
        .unwrap();
        assert_eq!(with_shared.0, without.0);
    }

    #[test]
    fn inactive_group_yields_no_point() {
        let m = matrix_for(&[("u1", &[1, 0]), ("u2", &[0, 1])]);
        assert!(pair_similarity(
            &m,
            "ga",
            &set(&["ghost"]),
            "gb",
            &set(&["u1"]),
            GroupNorm::ActiveMembers
        )
        .is_none());
    }

    #[test]
    fn schedule_governs_with_one_week_lag() {
        let capture = TimeRange::new(0, 12 * 7 * DAY);
        let policy = MemoryPolicy::new(PolicyKind::RollingWindow);
        let parts: Vec<TopicPartition> = (0..9)
            .map(|k| TopicPartition {
                week_index: k,
                topics: vec![],
                noise: BTreeSet::new(),
                detector_tag: "t".into(),
            })
            .collect();
        let schedule = PartitionSchedule::new(&parts, &policy, capture).unwrap();
        // Day 27 is inside the baseline: no partition yet.
        assert!(schedule.governing(27, 27 * DAY).is_err());
        // Day 28 is governed by partition 0 (closed at day 28).
        assert_eq!(schedule.governing(28, 28 * DAY).unwrap().week_index, 0);
        // Day 34 is still week 4: partition 0. Day 35 flips to 1.
        assert_eq!(schedule.governing(34, 34 * DAY).unwrap().week_index, 0);
        assert_eq!(schedule.governing(35, 35 * DAY).unwrap().week_index, 1);
        assert_eq!(schedule.first_governed_day(capture), 28);
    }

    #[test]
    fn cohesive_group_self_similarity_is_one_all_period() {
        // Group posting a single topic all period vs itself.
        let capture = TimeRange::new(0, 6 * 7 * DAY);
        let policy = MemoryPolicy::new(PolicyKind::RollingWindow);
        let mut events = Vec::new();
        for d in 0..42i64 {
            events.push(post("a1", d * DAY + 10, &["x"]));
            events.push(post("a2", d * DAY + 20, &["x"]));
            events.push(post("bg1", d * DAY + 30, &["p"]));
            events.push(post("bg2", d * DAY + 40, &["q"]));
        }
        events.sort_by_key(|e| e.timestamp);
        let parts: Vec<TopicPartition> = (0..3)
            .map(|k| TopicPartition {
                week_index: k,
                topics: vec![
                    ["x"].iter().map(|s| s.to_string()).collect(),
                    ["p", "q"].iter().map(|s| s.to_string()).collect(),
                ],
                noise: BTreeSet::new(),
                detector_tag: "t".into(),
            })
            .collect();
        let schedule = PartitionSchedule::new(&parts, &policy, capture).unwrap();
        let groups: BTreeMap<String, BTreeSet<String>> =
            [("g".to_string(), set(&["a1", "a2"]))].into_iter().collect();
        let series =
            similarity_series(&events, &schedule, &groups, ("g", "g"), capture, GroupNorm::ActiveMembers)
                .unwrap();
        assert!(!series.points.is_empty());
        for p in &series.points {
            assert!((p.value - 1.0).abs() < 1e-12, "day {} s={}", p.day, p.value);
        }
    }

    #[test]
    fn null_sampling_is_deterministic_and_sized() {
        let mut profiles = BTreeMap::new();
        for i in 0..100 {
            let id = format!("u{i:03}");
            profiles.insert(
                id.clone(),
                UserProfile {
                    user_id: id,
                    active: true,
                    in_scope: i % 2 == 0,
                    repost_counts: BTreeMap::new(),
                },
            );
        }
        let a = sample_null_group(&profiles, 10, 99);
        let b = sample_null_group(&profiles, 10, 99);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for u in &a {
            assert!(profiles[u].in_scope);
        }
    }
}
