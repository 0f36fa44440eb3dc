//! Event stream parsing, user classification, and group assignment.
//!
//! Produces the filtered event substrate every other module consumes:
//! events sorted by timestamp and restricted to the capture window, user
//! profiles with the location filter applied, and supporter /
//! preferred-media labels derived from repost shares toward anchor
//! accounts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{normalize_hashtags, Event, EventKind};
use crate::timeutil::{TimeRange, WEEK};

// ---------------------------------------------------------------------------
// Parsing
//
// Canonical input fields are id, ts, user, kind, rt_of, tags, loc;
// `ParseOptions::field_map` remaps canonical name -> actual name.

#[derive(Debug, Clone, Serialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct ParseOutcome {
    /// Events in non-decreasing timestamp order.
    pub events: Vec<Event>,
    pub rejected: Vec<RejectedLine>,
    pub total_lines: usize,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub capture: TimeRange,
    /// Sort unsorted input; when false, out-of-order input is an error.
    pub sort: bool,
    pub field_map: BTreeMap<String, String>,
}

impl ParseOptions {
    pub fn new(capture: TimeRange) -> Self {
        ParseOptions {
            capture,
            sort: true,
            field_map: BTreeMap::new(),
        }
    }

    fn field<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.field_map
            .get(canonical)
            .map(|s| s.as_str())
            .unwrap_or(canonical)
    }
}

/// Parse line-delimited JSON records into events. Malformed lines are
/// counted and reported, not fatal.
pub fn parse_events(reader: impl BufRead, opts: &ParseOptions) -> Result<ParseOutcome> {
    let mut events = Vec::new();
    let mut rejected = Vec::new();
    let mut total_lines = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            reason: format!("read failure: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        total_lines += 1;
        match parse_line(&line, opts) {
            Ok(ev) => events.push(ev),
            Err(reason) => rejected.push(RejectedLine {
                line: line_no,
                reason,
            }),
        }
    }
    if opts.sort {
        events.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.event_id.cmp(&b.event_id))
        });
    } else if let Some(w) = events.windows(2).position(|w| w[0].timestamp > w[1].timestamp) {
        return Err(Error::Parse {
            line: 0,
            reason: format!(
                "input not sorted by timestamp near event {} and sorting is disabled",
                events[w + 1].event_id
            ),
        });
    }
    Ok(ParseOutcome {
        events,
        rejected,
        total_lines,
    })
}

fn parse_line(line: &str, opts: &ParseOptions) -> std::result::Result<Event, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;
    for unknown in obj.keys() {
        // Unknown fields are tolerated; only canonical ones are read.
        let _ = unknown;
    }

    let get = |canonical: &str| obj.get(opts.field(canonical));

    let event_id = match get("id") {
        Some(v) => json_to_string(v).ok_or("id is not a scalar")?,
        None => return Err("missing id field".into()),
    };
    let ts_value = get("ts").ok_or("missing ts field")?;
    let timestamp = json_to_i64(ts_value).ok_or("unparseable timestamp")?;
    if !opts.capture.contains(timestamp) {
        return Err(format!(
            "timestamp {timestamp} outside capture window [{}, {})",
            opts.capture.start, opts.capture.end
        ));
    }
    let user_id = match get("user") {
        Some(v) => json_to_string(v).ok_or("user is not a scalar")?,
        None => return Err("missing user field".into()),
    };
    let kind = match get("kind").and_then(|v| v.as_str()) {
        Some("original") => EventKind::Original,
        Some("repost") => EventKind::Repost,
        Some(other) => return Err(format!("unknown kind {other:?}")),
        None => return Err("missing kind field".into()),
    };
    let repost_of_user = get("rt_of").and_then(json_to_string);
    match (kind, &repost_of_user) {
        (EventKind::Repost, None) => return Err("repost without rt_of".into()),
        (EventKind::Original, Some(_)) => return Err("original with rt_of".into()),
        _ => {}
    }
    let hashtags = match get("tags") {
        Some(serde_json::Value::Array(arr)) => {
            let raw: Vec<String> = arr
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or("non-string tag"))
                .collect::<std::result::Result<_, _>>()?;
            normalize_hashtags(raw)
        }
        Some(_) => return Err("tags is not an array".into()),
        None => BTreeSet::new(),
    };
    let location_tag = get("loc").and_then(json_to_string);
    Ok(Event {
        event_id,
        timestamp,
        user_id,
        kind,
        repost_of_user,
        hashtags,
        location_tag,
    })
}

fn json_to_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn json_to_i64(v: &serde_json::Value) -> Option<i64> {
    match v {
        serde_json::Value::Number(n) => n.as_i64(),
        serde_json::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Profiles and the location filter

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    /// Posted or reposted anything during the period.
    pub active: bool,
    /// Location filter passed.
    pub in_scope: bool,
    /// Reposts toward each target account (all targets, not just anchors).
    pub repost_counts: BTreeMap<String, u64>,
}

/// Build profiles from events. `allowlist` is the location predicate:
/// in-scope means a nonempty location tag contained in it; `None` admits
/// everyone. `roster` optionally adds known users with no activity.
pub fn build_profiles(
    events: &[Event],
    allowlist: Option<&BTreeSet<String>>,
    roster: Option<&[String]>,
) -> BTreeMap<String, UserProfile> {
    let mut profiles: BTreeMap<String, UserProfile> = BTreeMap::new();
    if let Some(roster) = roster {
        for user in roster {
            profiles.insert(
                user.clone(),
                UserProfile {
                    user_id: user.clone(),
                    active: false,
                    in_scope: allowlist.is_none(),
                    repost_counts: BTreeMap::new(),
                },
            );
        }
    }
    for ev in events {
        let p = profiles
            .entry(ev.user_id.clone())
            .or_insert_with(|| UserProfile {
                user_id: ev.user_id.clone(),
                active: false,
                in_scope: allowlist.is_none(),
                repost_counts: BTreeMap::new(),
            });
        p.active = true;
        if let (Some(allow), Some(loc)) = (allowlist, &ev.location_tag) {
            if !loc.is_empty() && allow.contains(loc) {
                p.in_scope = true;
            }
        }
        if let Some(target) = &ev.repost_of_user {
            *p.repost_counts.entry(target.clone()).or_insert(0) += 1;
        }
    }
    profiles
}

pub fn load_allowlist(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

// ---------------------------------------------------------------------------
// Anchors and group assignment

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorFamily {
    Candidate,
    Media,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Anchor {
    pub account_id: String,
    pub family: AnchorFamily,
    pub label: String,
}

/// One JSON record per line: `{"account_id":..,"family":..,"label":..}`.
pub fn load_anchors(path: &Path) -> Result<Vec<Anchor>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut anchors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let anchor: Anchor = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            reason: format!("bad anchor record: {e}"),
        })?;
        anchors.push(anchor);
    }
    Ok(anchors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    StaticWholePeriod,
    WeeklyUpdate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLabels {
    pub candidate: Option<String>,
    pub media: Option<String>,
}

impl UserLabels {
    pub fn is_empty(&self) -> bool {
        self.candidate.is_none() && self.media.is_none()
    }

    fn for_family(&self, family: AnchorFamily) -> &Option<String> {
        match family {
            AnchorFamily::Candidate => &self.candidate,
            AnchorFamily::Media => &self.media,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Assignments {
    Static(BTreeMap<String, UserLabels>),
    /// One map per capture week; week w is computed from events within
    /// week w only (never from later weeks).
    Weekly(Vec<BTreeMap<String, UserLabels>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub mode: AssignmentMode,
    pub threshold: f64,
    pub assignments: Assignments,
}

impl GroupAssignment {
    /// Label -> members, static mode only (weekly mode has one map per week).
    pub fn static_members(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        if let Assignments::Static(map) = &self.assignments {
            for (user, labels) in map {
                for label in [&labels.candidate, &labels.media].into_iter().flatten() {
                    out.entry(label.clone()).or_default().insert(user.clone());
                }
            }
        }
        out
    }

    pub fn group_sizes(&self) -> BTreeMap<String, u64> {
        self.static_members()
            .into_iter()
            .map(|(k, v)| (k, v.len() as u64))
            .collect()
    }
}

/// Label users by anchor repost share, separately per anchor family.
/// A user gets the label of anchor `a` iff their reposts of `a` reach
/// `threshold` of their reposts of that family's anchors.
pub fn assign_groups(
    events: &[Event],
    anchors: &[Anchor],
    threshold: f64,
    mode: AssignmentMode,
    capture: TimeRange,
) -> Result<GroupAssignment> {
    if anchors.is_empty() {
        return Err(Error::Config("anchors must be nonempty".into()));
    }
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "threshold must be in (0.5, 1.0], got {threshold}; at 0.5 two anchors could both qualify"
        )));
    }
    let anchor_index: HashMap<&str, &Anchor> = anchors
        .iter()
        .map(|a| (a.account_id.as_str(), a))
        .collect();

    let assignments = match mode {
        AssignmentMode::StaticWholePeriod => {
            Assignments::Static(label_from_events(events.iter(), &anchor_index, threshold))
        }
        AssignmentMode::WeeklyUpdate => {
            let n_weeks = ((capture.duration() + WEEK - 1) / WEEK).max(0) as usize;
            let mut weekly = Vec::with_capacity(n_weeks);
            for w in 0..n_weeks {
                let ws = capture.start + (w as i64) * WEEK;
                let we = (ws + WEEK).min(capture.end);
                let in_week = events
                    .iter()
                    .filter(|ev| ev.timestamp >= ws && ev.timestamp < we);
                weekly.push(label_from_events(in_week, &anchor_index, threshold));
            }
            Assignments::Weekly(weekly)
        }
    };
    Ok(GroupAssignment {
        mode,
        threshold,
        assignments,
    })
}

fn label_from_events<'a>(
    events: impl Iterator<Item = &'a Event>,
    anchor_index: &HashMap<&str, &Anchor>,
    threshold: f64,
) -> BTreeMap<String, UserLabels> {
    // user -> family -> anchor label -> count
    let mut tallies: BTreeMap<&str, [BTreeMap<&str, u64>; 2]> = BTreeMap::new();
    for ev in events {
        let Some(target) = &ev.repost_of_user else {
            continue;
        };
        let Some(anchor) = anchor_index.get(target.as_str()) else {
            continue;
        };
        let slot = match anchor.family {
            AnchorFamily::Candidate => 0,
            AnchorFamily::Media => 1,
        };
        *tallies
            .entry(ev.user_id.as_str())
            .or_default()[slot]
            .entry(anchor.label.as_str())
            .or_insert(0) += 1;
    }
    let mut out = BTreeMap::new();
    for (user, families) in tallies {
        let mut labels = UserLabels::default();
        for (slot, target) in [(0usize, 0), (1usize, 1)] {
            let counts = &families[slot];
            let total: u64 = counts.values().sum();
            if total == 0 {
                continue;
            }
            let winner = counts
                .iter()
                .find(|(_, &c)| c as f64 / total as f64 >= threshold);
            if let Some((label, _)) = winner {
                match target {
                    0 => labels.candidate = Some((*label).to_string()),
                    _ => labels.media = Some((*label).to_string()),
                }
            }
        }
        if !labels.is_empty() {
            out.insert(user.to_string(), labels);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Weekly flows

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flow {
    /// Week the users arrive in (`to` label holds from this week on).
    pub week: usize,
    pub from: Option<String>,
    pub to: Option<String>,
    pub count: u64,
}

/// Label transitions between consecutive weeks for one anchor family.
/// Flows below `display_threshold` are suppressed.
pub fn weekly_group_flows(
    assignment: &GroupAssignment,
    family: AnchorFamily,
    display_threshold: u64,
) -> Result<Vec<Flow>> {
    let Assignments::Weekly(weeks) = &assignment.assignments else {
        return Err(Error::Config(
            "weekly_group_flows requires weekly_update mode".into(),
        ));
    };
    let mut flows = Vec::new();
    for w in 1..weeks.len() {
        let prev = &weeks[w - 1];
        let cur = &weeks[w];
        let users: BTreeSet<&String> = prev.keys().chain(cur.keys()).collect();
        let mut tally: BTreeMap<(Option<&String>, Option<&String>), u64> = BTreeMap::new();
        for user in users {
            let from = prev
                .get(user)
                .and_then(|l| l.for_family(family).as_ref());
            let to = cur.get(user).and_then(|l| l.for_family(family).as_ref());
            if from != to {
                *tally.entry((from, to)).or_insert(0) += 1;
            }
        }
        for ((from, to), count) in tally {
            if count >= display_threshold {
                flows.push(Flow {
                    week: w,
                    from: from.cloned(),
                    to: to.cloned(),
                    count,
                });
            }
        }
    }
    Ok(flows)
}

// ---------------------------------------------------------------------------
// Histograms and summaries

/// Hashtags-per-event distribution, ignoring events with no hashtags.
pub fn hashtags_per_tweet_histogram(events: &[Event]) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for ev in events {
        let n = ev.hashtags.len();
        if n >= 1 {
            *hist.entry(n).or_insert(0) += 1;
        }
    }
    hist
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total_users: u64,
    pub active_users: u64,
    pub in_scope_users: u64,
    pub total_events: u64,
    pub total_hashtag_occurrences: u64,
    /// Distinct (user, unordered hashtag pair) incidences over the corpus.
    pub distinct_user_pair_incidences: u64,
    pub group_sizes: BTreeMap<String, u64>,
}

pub fn dataset_summary(
    events: &[Event],
    profiles: &BTreeMap<String, UserProfile>,
    assignment: Option<&GroupAssignment>,
) -> DatasetSummary {
    let mut hashtag_occurrences = 0u64;
    let mut incidences: HashSet<(&str, &str, &str)> = HashSet::new();
    for ev in events {
        hashtag_occurrences += ev.hashtags.len() as u64;
        let tags: Vec<&str> = ev.hashtags.iter().map(String::as_str).collect();
        for i in 0..tags.len() {
            for j in (i + 1)..tags.len() {
                incidences.insert((ev.user_id.as_str(), tags[i], tags[j]));
            }
        }
    }
    DatasetSummary {
        total_users: profiles.len() as u64,
        active_users: profiles.values().filter(|p| p.active).count() as u64,
        in_scope_users: profiles.values().filter(|p| p.active && p.in_scope).count() as u64,
        total_events: events.len() as u64,
        total_hashtag_occurrences: hashtag_occurrences,
        distinct_user_pair_incidences: incidences.len() as u64,
        group_sizes: assignment.map(|a| a.group_sizes()).unwrap_or_default(),
    }
}

impl DatasetSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        out.push_str(&format!("total_users,{}\n", self.total_users));
        out.push_str(&format!("active_users,{}\n", self.active_users));
        out.push_str(&format!("in_scope_users,{}\n", self.in_scope_users));
        out.push_str(&format!("total_events,{}\n", self.total_events));
        out.push_str(&format!(
            "total_hashtag_occurrences,{}\n",
            self.total_hashtag_occurrences
        ));
        out.push_str(&format!(
            "distinct_user_pair_incidences,{}\n",
            self.distinct_user_pair_incidences
        ));
        for (label, size) in &self.group_sizes {
            out.push_str(&format!("group_size:{label},{size}\n"));
        }
        out
    }
}

pub fn histogram_to_csv(hist: &BTreeMap<usize, u64>) -> String {
    let mut out = String::from("hashtags_per_tweet,frequency\n");
    for (k, v) in hist {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

pub fn flows_to_csv(flows: &[Flow]) -> String {
    let mut out = String::from("week,from,to,count\n");
    for f in flows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            f.week,
            f.from.as_deref().unwrap_or(""),
            f.to.as_deref().unwrap_or(""),
            f.count
        ));
    }
    out
}
