//! Hashtag entropy (daily) and topic entropy (weekly), globally or per
//! group.
//!
//! Probabilities are unique-user shares: p(item) = unique users of the
//! item in the frame over distinct (item, user) pairs in the same frame,
//! which damps very active accounts. Shannon entropy is computed with
//! the minus sign; the log base defaults to natural and is configurable.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::event::Event;
use crate::graph::PolicyKind;
use crate::timeutil::{iso_date, TimeRange, DAY, WEEK};
use crate::topics::TopicPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyScope {
    HashtagDaily,
    TopicWeekly,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyPoint {
    /// Day index for the daily scope, week index for the weekly scope.
    pub index: usize,
    /// End of the frame, epoch seconds.
    pub frame_end: i64,
    pub entropy: f64,
    pub n_items: usize,
    pub n_users: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropySeries {
    pub scope: EntropyScope,
    pub group: Option<String>,
    pub policy: Option<PolicyKind>,
    pub points: Vec<EntropyPoint>,
}

fn shannon_from_user_counts(counts: &BTreeMap<&str, BTreeSet<&str>>, log_base: Option<f64>) -> Option<EntropyPoint> {
    let pairs: u64 = counts.values().map(|s| s.len() as u64).sum();
    if pairs == 0 {
        return None;
    }
    // S = -sum p ln p with p = a_h / pairs, computed as
    // ln(pairs) - (1/pairs) * sum a_h ln a_h.
    let sum_a_ln_a: f64 = counts
        .values()
        .map(|s| {
            let a = s.len() as f64;
            a * a.ln()
        })
        .sum();
    let mut entropy = (pairs as f64).ln() - sum_a_ln_a / pairs as f64;
    if let Some(base) = log_base {
        entropy /= base.ln();
    }
    let users: BTreeSet<&str> = counts.values().flatten().copied().collect();
    Some(EntropyPoint {
        index: 0,
        frame_end: 0,
        entropy,
        n_items: counts.len(),
        n_users: users.len(),
    })
}

/// Hashtag entropy for the 7-day frame ending at day `d` (inclusive).
/// `group` restricts both numerator and denominator to its members.
/// Returns `None` for an empty frame (the point is absent).
pub fn hashtag_entropy(
    events: &[Event],
    frame: TimeRange,
    group: Option<&BTreeSet<String>>,
    log_base: Option<f64>,
) -> Option<EntropyPoint> {
    let lo = events.partition_point(|e| e.timestamp < frame.start);
    let hi = events.partition_point(|e| e.timestamp < frame.end);
    let mut counts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for ev in &events[lo..hi] {
        if let Some(g) = group {
            if !g.contains(&ev.user_id) {
                continue;
            }
        }
        for tag in &ev.hashtags {
            counts.entry(tag.as_str()).or_default().insert(&ev.user_id);
        }
    }
    shannon_from_user_counts(&counts, log_base)
}

/// Topic entropy for week `w`: unique users per topic over the month
/// preceding and including the week, under the partition governing it.
/// Usage of a topic means usage of any of its hashtags; the noise
/// pseudo-topic is excluded.
pub fn topic_entropy(
    events: &[Event],
    partition: &TopicPartition,
    frame: TimeRange,
    group: Option<&BTreeSet<String>>,
    log_base: Option<f64>,
) -> Option<EntropyPoint> {
    let membership = partition.membership();
    let lo = events.partition_point(|e| e.timestamp < frame.start);
    let hi = events.partition_point(|e| e.timestamp < frame.end);
    let ids: Vec<String> = (0..partition.n_topics()).map(|t| t.to_string()).collect();
    let mut counts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for ev in &events[lo..hi] {
        if let Some(g) = group {
            if !g.contains(&ev.user_id) {
                continue;
            }
        }
        for tag in &ev.hashtags {
            if let Some(topic_ids) = membership.get(tag.as_str()) {
                for &t in topic_ids {
                    counts
                        .entry(ids[t].as_str())
                        .or_default()
                        .insert(&ev.user_id);
                }
            }
        }
    }
    shannon_from_user_counts(&counts, log_base)
}

/// Daily hashtag-entropy series over the capture window.
pub fn hashtag_entropy_series(
    events: &[Event],
    capture: TimeRange,
    group: Option<&BTreeSet<String>>,
    group_label: Option<&str>,
    log_base: Option<f64>,
) -> EntropySeries {
    let n_days = (capture.duration() / DAY) as usize;
    let mut points = Vec::new();
    for d in 0..n_days {
        let day_end = capture.start + (d as i64 + 1) * DAY;
        let frame = TimeRange::new(day_end - 7 * DAY, day_end);
        if let Some(mut p) = hashtag_entropy(events, frame, group, log_base) {
            p.index = d;
            p.frame_end = day_end;
            points.push(p);
        }
    }
    EntropySeries {
        scope: EntropyScope::HashtagDaily,
        group: group_label.map(str::to_string),
        policy: None,
        points,
    }
}

/// Weekly topic-entropy series. `partitions[k]` governs week
/// `baseline_weeks + k` (the week following the snapshot's close); the
/// frame is the `month_days` ending at that week's last day, inclusive.
pub fn topic_entropy_series(
    events: &[Event],
    partitions: &[TopicPartition],
    capture: TimeRange,
    baseline_weeks: usize,
    month_days: i64,
    policy: PolicyKind,
    group: Option<&BTreeSet<String>>,
    group_label: Option<&str>,
    log_base: Option<f64>,
) -> EntropySeries {
    let n_weeks = (capture.duration() / WEEK) as usize;
    let mut points = Vec::new();
    // Static policies have one partition governing every week past the
    // baseline; update policies map partition k to week baseline + k.
    let governed: Vec<(usize, &TopicPartition)> = if policy == PolicyKind::StaticFull
        && partitions.len() == 1
    {
        (baseline_weeks..n_weeks)
            .map(|w| (w, &partitions[0]))
            .collect()
    } else {
        partitions
            .iter()
            .enumerate()
            .map(|(k, p)| (baseline_weeks + k, p))
            .collect()
    };
    for (w, partition) in governed {
        if w >= n_weeks {
            break;
        }
        let week_end = capture.start + (w as i64 + 1) * WEEK;
        let frame = TimeRange::new(week_end - month_days * DAY, week_end);
        if let Some(mut p) = topic_entropy(events, partition, frame, group, log_base) {
            p.index = w;
            p.frame_end = week_end;
            points.push(p);
        }
    }
    EntropySeries {
        scope: EntropyScope::TopicWeekly,
        group: group_label.map(str::to_string),
        policy: Some(policy),
        points,
    }
}

pub fn entropy_to_csv(series: &EntropySeries) -> String {
    let mut out = String::from("date,entropy,n_items,n_users\n");
    for p in &series.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            iso_date(p.frame_end - DAY),
            p.entropy,
            p.n_items,
            p.n_users
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

    #[test]
    fn uniform_frame_gives_log_k() {
        // k hashtags each used by exactly one distinct user.
        let k = 9;
        let events: Vec<Event> = (0..k)
            .map(|i| post(&format!("u{i}"), i as i64, &[&format!("t{i}")]))
            .collect();
        let p = hashtag_entropy(&events, TimeRange::new(0, 100), None, None).unwrap();
        assert!((p.entropy - (k as f64).ln()).abs() < 1e-9);
        assert_eq!(p.n_items, k);
    }

    #[test]
    fn single_hashtag_entropy_zero() {
        let events = vec![post("u1", 0, &["only"]), post("u2", 1, &["only"])];
        let p = hashtag_entropy(&events, TimeRange::new(0, 100), None, None).unwrap();
        assert!(p.entropy.abs() < 1e-12);
    }

    #[test]
    fn empty_frame_absent() {
        assert!(hashtag_entropy(&[], TimeRange::new(0, 100), None, None).is_none());
    }

    #[test]
    fn entropy_is_positive_shannon() {
        // Skewed distribution: strictly positive, below log k.
        let mut events = vec![post("u1", 0, &["big"])];
        for i in 0..5 {
            events.push(post(&format!("v{i}"), i + 1, &["big"]));
            events.push(post(&format!("v{i}"), i + 10, &[&format!("small{i}")]));
        }
        let p = hashtag_entropy(&events, TimeRange::new(0, 100), None, None).unwrap();
        assert!(p.entropy > 0.0);
        assert!(p.entropy <= (p.n_items as f64).ln() + 1e-12);
    }

    #[test]
    fn duplicate_usage_does_not_change_unique_user_counts() {
        let base = vec![post("u1", 0, &["a"]), post("u2", 1, &["b"])];
        let mut noisy = base.clone();
        noisy.push(post("u1", 2, &["a"])); // same (hashtag, user) pair again
        let p1 = hashtag_entropy(&base, TimeRange::new(0, 100), None, None).unwrap();
        let p2 = hashtag_entropy(&noisy, TimeRange::new(0, 100), None, None).unwrap();
        assert_eq!(p1.entropy, p2.entropy);
    }

    #[test]
    fn group_filter_restricts_both_sides() {
        let events = vec![
            post("in1", 0, &["a"]),
            post("in2", 1, &["b"]),
            post("out", 2, &["c"]),
        ];
        let group: BTreeSet<String> = ["in1", "in2"].iter().map(|s| s.to_string()).collect();
        let p = hashtag_entropy(&events, TimeRange::new(0, 100), Some(&group), None).unwrap();
        assert_eq!(p.n_items, 2);
        assert!((p.entropy - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn log_base_is_configurable() {
        let events: Vec<Event> = (0..4)
            .map(|i| post(&format!("u{i}"), i as i64, &[&format!("t{i}")]))
            .collect();
        let p = hashtag_entropy(&events, TimeRange::new(0, 100), None, Some(2.0)).unwrap();
        assert!((p.entropy - 2.0).abs() < 1e-9);
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
    fn all_activity_in_one_topic_entropy_zero() {
        let events = vec![post("u1", 0, &["a"]), post("u2", 1, &["b"])];
        let p = partition(&[&["a", "b"]]);
        let pt = topic_entropy(&events, &p, TimeRange::new(0, 100), None, None).unwrap();
        assert!(pt.entropy.abs() < 1e-12);
    }

    #[test]
    fn one_user_per_topic_gives_log_k() {
        let events = vec![
            post("u1", 0, &["a"]),
            post("u2", 1, &["b"]),
            post("u3", 2, &["c"]),
        ];
        let p = partition(&[&["a"], &["b"], &["c"]]);
        let pt = topic_entropy(&events, &p, TimeRange::new(0, 100), None, None).unwrap();
        assert!((pt.entropy - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn label_permutation_invariance() {
        let events = vec![
            post("u1", 0, &["a"]),
            post("u1", 1, &["b"]),
            post("u2", 2, &["b"]),
        ];
        let relabeled = vec![
            post("u1", 0, &["zz"]),
            post("u1", 1, &["qq"]),
            post("u2", 2, &["qq"]),
        ];
        let p1 = hashtag_entropy(&events, TimeRange::new(0, 100), None, None).unwrap();
        let p2 = hashtag_entropy(&relabeled, TimeRange::new(0, 100), None, None).unwrap();
        assert_eq!(p1.entropy, p2.entropy);
    }
}
