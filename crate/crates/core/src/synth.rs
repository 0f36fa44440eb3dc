//! Synthetic event corpora with planted structure and machine-readable
//! ground truth.
//!
//! Users belong to planted groups realized through repost behavior
//! toward anchor accounts; hashtags come from per-pool vocabularies so
//! pools appear as communities in the co-occurrence graph. Scheduled
//! happenings (synchronization, buzz, topic burst, merge divergence)
//! leave quantitative traces that downstream checks recover.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Anchor, AnchorFamily, UserLabels};
use crate::timeutil::{TimeRange, WEEK};

/// Pseudo-participant meaning "the unlabeled background population".
pub const BACKGROUND: &str = "background";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub family: AnchorFamily,
    pub anchor_account: String,
    pub size: usize,
    pub posts_per_week: u32,
    /// Weekly reposts toward the group's own anchor.
    pub reposts_own_per_week: u32,
    /// Weekly reposts toward the next anchor of the same family, keeping
    /// the planted share below 100% but above the supporter threshold.
    pub reposts_other_per_week: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolSpec {
    pub name: String,
    pub n_hashtags: usize,
    pub birth_week: usize,
    /// Exclusive; pool hashtags are never drawn outside [birth, death).
    pub death_week: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HappeningKind {
    Synchronization,
    Buzz,
    BurstTopic,
    TopicMergeDivergence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Happening {
    pub kind: HappeningKind,
    pub label: String,
    /// Group labels, or [`BACKGROUND`] for the unlabeled population.
    pub participants: Vec<String>,
    /// Pools involved; meaning depends on `kind` (see `generate`).
    pub pools: Vec<String>,
    pub start_week: usize,
    pub duration_weeks: usize,
    /// Extra posts (or reposts, for buzz) per participant per week.
    pub intensity: u32,
    /// Buzz only: anchor account flooded with reposts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_anchor: Option<String>,
    /// Bridging phase: background users co-tagging across pools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_weeks: Option<(usize, usize)>,
    #[serde(default)]
    pub n_bridge_users: usize,
    /// Bridge co-tag counterpart pool; defaults to `pools[1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_pool: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub scenario: String,
    pub seed: u64,
    /// Epoch seconds; capture runs `n_weeks` weeks from here.
    pub capture_start: i64,
    pub n_weeks: usize,
    pub n_background_users: usize,
    pub background_posts_per_week: u32,
    pub groups: Vec<GroupSpec>,
    pub pools: Vec<PoolSpec>,
    /// group label -> pool name -> propensity weight.
    pub mixing: BTreeMap<String, BTreeMap<String, f64>>,
    pub background_mixing: BTreeMap<String, f64>,
    /// P(k hashtags) for k = 1..=len, unnormalized weights.
    pub tags_per_event_weights: Vec<f64>,
    pub schedule: Vec<Happening>,
    /// Emit exactly this many lines (truncating late events), corrupting
    /// every `corrupt_every`-th line when that is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_lines: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupt_every: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleEcho {
    pub kind: HappeningKind,
    pub label: String,
    pub participants: Vec<String>,
    pub pools: Vec<String>,
    pub start_week: usize,
    pub duration_weeks: usize,
    /// Capture-day index where the attention-similarity peak is expected
    /// (synchronization only): last day fully covered by the happening.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_peak_day: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_anchor: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: String,
    pub seed: u64,
    pub capture_start: i64,
    pub capture_end: i64,
    pub n_weeks: usize,
    /// Planted labels; recovered exactly by the supporter rule on the
    /// full corpus (truncated corpora may cut the realizing reposts).
    pub intended_labels: BTreeMap<String, UserLabels>,
    pub group_sizes: BTreeMap<String, u64>,
    pub pool_vocab: BTreeMap<String, Vec<String>>,
    /// Emitted event id -> pool the hashtags were drawn from. Bridge
    /// events carry the happening label instead of a single pool.
    pub event_pool: BTreeMap<String, String>,
    pub schedule: Vec<ScheduleEcho>,
    pub hashtags_per_event_hist: BTreeMap<usize, u64>,
    pub n_users: u64,
    pub n_valid_lines: u64,
    pub n_corrupt_lines: u64,
    pub total_hashtag_occurrences: u64,
}

#[derive(Debug)]
pub struct SynthOutput {
    pub events_jsonl: String,
    pub anchors_jsonl: String,
    pub allowlist: String,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, Serialize)]
struct RawEvent {
    id: String,
    ts: i64,
    user: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rt_of: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tags: Vec<String>,
    loc: &'static str,
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha20Rng,
    events: Vec<RawEvent>,
    event_pool: BTreeMap<String, String>,
    pool_tags: BTreeMap<String, Vec<String>>,
    members: BTreeMap<String, Vec<String>>,
    background: Vec<String>,
    next_id: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::SynthConfig(msg));
        if self.n_weeks == 0 {
            return err("n_weeks must be positive".into());
        }
        if self.tags_per_event_weights.is_empty()
            || self.tags_per_event_weights.iter().any(|&w| w < 0.0)
            || self.tags_per_event_weights.iter().sum::<f64>() <= 0.0
        {
            return err("tags_per_event_weights must be nonnegative with positive sum".into());
        }
        let pool_names: BTreeSet<&str> = self.pools.iter().map(|p| p.name.as_str()).collect();
        if pool_names.len() != self.pools.len() {
            return err("duplicate pool names".into());
        }
        for p in &self.pools {
            if p.n_hashtags == 0 || p.birth_week >= p.death_week {
                return err(format!("pool {} is empty or stillborn", p.name));
            }
        }
        let group_labels: BTreeSet<&str> = self.groups.iter().map(|g| g.label.as_str()).collect();
        if group_labels.len() != self.groups.len() {
            return err("duplicate group labels".into());
        }
        for g in &self.groups {
            if g.size == 0 {
                return err(format!("group {} has no members", g.label));
            }
            let family_count = self
                .groups
                .iter()
                .filter(|o| o.family == g.family)
                .count();
            if family_count < 2 && g.reposts_other_per_week > 0 {
                return err(format!(
                    "group {} needs a same-family sibling for its off-anchor reposts",
                    g.label
                ));
            }
        }
        let rows = self
            .mixing
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(std::iter::once((BACKGROUND, &self.background_mixing)));
        for (who, weights) in rows {
            for pool in weights.keys() {
                if !pool_names.contains(pool.as_str()) {
                    return err(format!("mixing for {who} references unknown pool {pool}"));
                }
            }
        }
        for g in &self.groups {
            if !self.mixing.contains_key(&g.label) {
                return err(format!("group {} has no mixing row", g.label));
            }
        }
        for h in &self.schedule {
            if h.start_week + h.duration_weeks > self.n_weeks {
                return err(format!("happening {} runs past the capture window", h.label));
            }
            for p in &h.participants {
                if p != BACKGROUND && !group_labels.contains(p.as_str()) {
                    return err(format!("happening {} names unknown group {p}", h.label));
                }
            }
            for pool in h.pools.iter().chain(h.bridge_pool.iter()) {
                if !pool_names.contains(pool.as_str()) {
                    return err(format!("happening {} names unknown pool {pool}", h.label));
                }
            }
            match h.kind {
                HappeningKind::Buzz => {
                    if h.target_anchor.is_none() {
                        return err(format!("buzz {} needs target_anchor", h.label));
                    }
                }
                HappeningKind::Synchronization => {
                    if h.pools.is_empty() {
                        return err(format!("synchronization {} needs a pool", h.label));
                    }
                }
                HappeningKind::BurstTopic | HappeningKind::TopicMergeDivergence => {
                    let needed = if h.kind == HappeningKind::BurstTopic { 1 } else { 2 };
                    if h.pools.len() < needed {
                        return err(format!("happening {} needs {needed} pool(s)", h.label));
                    }
                    if h.bridge_weeks.is_some() && h.n_bridge_users == 0 {
                        return err(format!("happening {} bridges with zero users", h.label));
                    }
                    if h.n_bridge_users > self.n_background_users {
                        return err(format!(
                            "happening {} wants {} bridge users, only {} background users exist",
                            h.label, h.n_bridge_users, self.n_background_users
                        ));
                    }
                }
            }
        }
        if let (Some(lines), Some(every)) = (self.target_lines, self.corrupt_every) {
            if every == 0 || lines / every >= lines {
                return err("corrupt_every must leave at least one valid line".into());
            }
        }
        Ok(())
    }

    pub fn capture(&self) -> TimeRange {
        TimeRange::new(
            self.capture_start,
            self.capture_start + self.n_weeks as i64 * WEEK,
        )
    }
}

impl<'a> Generator<'a> {
    fn new(cfg: &'a SynthConfig) -> Self {
        let pool_tags: BTreeMap<String, Vec<String>> = cfg
            .pools
            .iter()
            .map(|p| {
                let tags = (0..p.n_hashtags)
                    .map(|i| format!("{}_{i:02}", p.name))
                    .collect();
                (p.name.clone(), tags)
            })
            .collect();
        let members: BTreeMap<String, Vec<String>> = cfg
            .groups
            .iter()
            .map(|g| {
                let users = (0..g.size).map(|i| format!("{}_{i:04}", g.label)).collect();
                (g.label.clone(), users)
            })
            .collect();
        let background = (0..cfg.n_background_users)
            .map(|i| format!("bg_{i:05}"))
            .collect();
        Generator {
            cfg,
            rng: ChaCha20Rng::seed_from_u64(cfg.seed),
            events: Vec::new(),
            event_pool: BTreeMap::new(),
            pool_tags,
            members,
            background,
            next_id: 0,
        }
    }

    fn participants_of(&self, h: &Happening) -> Vec<&String> {
        let mut out = Vec::new();
        for p in &h.participants {
            if p == BACKGROUND {
                out.extend(self.background.iter());
            } else {
                out.extend(self.members[p].iter());
            }
        }
        out
    }

    fn week_range(&self, week: usize) -> (i64, i64) {
        let ws = self.cfg.capture_start + week as i64 * WEEK;
        (ws, ws + WEEK)
    }

    fn fresh_id(&mut self) -> String {
        let id = format!("ev{:08}", self.next_id);
        self.next_id += 1;
        id
    }

    fn live_pools(&self, week: usize, weights: &BTreeMap<String, f64>) -> (Vec<&str>, Vec<f64>) {
        let mut names = Vec::new();
        let mut ws = Vec::new();
        for p in &self.cfg.pools {
            if week < p.birth_week || week >= p.death_week {
                continue;
            }
            if let Some(&w) = weights.get(&p.name) {
                if w > 0.0 {
                    names.push(p.name.as_str());
                    ws.push(w);
                }
            }
        }
        (names, ws)
    }

    fn draw_tags(&mut self, pool: &str) -> Vec<String> {
        let k_dist = WeightedIndex::new(&self.cfg.tags_per_event_weights).expect("validated");
        let vocab = &self.pool_tags[pool];
        let k = (k_dist.sample(&mut self.rng) + 1).min(vocab.len());
        let idx = rand::seq::index::sample(&mut self.rng, vocab.len(), k);
        let mut tags: Vec<String> = idx.iter().map(|i| vocab[i].clone()).collect();
        tags.sort();
        tags
    }

    /// One post with a single hashtag: keeps a node alive without
    /// contributing any co-occurrence edge.
    fn push_single_tag_post(&mut self, user: &str, week: usize, pool: &str, attribution: &str) {
        let (ws, we) = self.week_range(week);
        let ts = self.rng.gen_range(ws..we);
        let i = self.rng.gen_range(0..self.pool_tags[pool].len());
        let tags = vec![self.pool_tags[pool][i].clone()];
        let id = self.fresh_id();
        self.event_pool.insert(id.clone(), attribution.to_string());
        self.events.push(RawEvent {
            id,
            ts,
            user: user.to_string(),
            kind: "original",
            rt_of: None,
            tags,
            loc: "fr",
        });
    }

    fn push_post(&mut self, user: &str, week: usize, pool: &str, attribution: &str) {
        let (ws, we) = self.week_range(week);
        let ts = self.rng.gen_range(ws..we);
        let tags = self.draw_tags(pool);
        let id = self.fresh_id();
        self.event_pool.insert(id.clone(), attribution.to_string());
        self.events.push(RawEvent {
            id,
            ts,
            user: user.to_string(),
            kind: "original",
            rt_of: None,
            tags,
            loc: "fr",
        });
    }

    fn push_repost(&mut self, user: &str, week: usize, target: &str) {
        let (ws, we) = self.week_range(week);
        let ts = self.rng.gen_range(ws..we);
        let id = self.fresh_id();
        self.events.push(RawEvent {
            id,
            ts,
            user: user.to_string(),
            kind: "repost",
            rt_of: Some(target.to_string()),
            tags: Vec::new(),
            loc: "fr",
        });
    }

    /// One post pairing a tag from each of two pools: the co-use that
    /// welds the pools together in accumulating graphs.
    fn push_bridge_post(&mut self, user: &str, week: usize, pool_a: &str, pool_b: &str, label: &str) {
        let (ws, we) = self.week_range(week);
        let ts = self.rng.gen_range(ws..we);
        let ia = self.rng.gen_range(0..self.pool_tags[pool_a].len());
        let ib = self.rng.gen_range(0..self.pool_tags[pool_b].len());
        let mut tags = vec![
            self.pool_tags[pool_a][ia].clone(),
            self.pool_tags[pool_b][ib].clone(),
        ];
        tags.sort();
        let id = self.fresh_id();
        self.event_pool.insert(id.clone(), label.to_string());
        self.events.push(RawEvent {
            id,
            ts,
            user: user.to_string(),
            kind: "original",
            rt_of: None,
            tags,
            loc: "fr",
        });
    }

    fn baseline_week(&mut self, week: usize) {
        // Background population first, then each group, all in a fixed
        // order so the RNG consumption sequence is reproducible.
        let bg_users = self.background.clone();
        let (names, ws) = self.live_pools(week, &self.cfg.background_mixing);
        if !names.is_empty() {
            let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
            let dist = WeightedIndex::new(&ws).expect("validated");
            for user in &bg_users {
                let n_posts = self.cfg.background_posts_per_week + self.rng.gen_range(0..2);
                for _ in 0..n_posts {
                    let pool = names[dist.sample(&mut self.rng)].clone();
                    self.push_post(user, week, &pool, &pool);
                }
            }
        }
        for gi in 0..self.cfg.groups.len() {
            let g = self.cfg.groups[gi].clone();
            let users = self.members[&g.label].clone();
            let (names, ws) = self.live_pools(week, &self.cfg.mixing[&g.label]);
            let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
            let dist = if names.is_empty() {
                None
            } else {
                Some(WeightedIndex::new(&ws).expect("validated"))
            };
            let other_anchor = self.sibling_anchor(&g);
            for user in &users {
                if let Some(dist) = &dist {
                    let n_posts = g.posts_per_week + self.rng.gen_range(0..2);
                    for _ in 0..n_posts {
                        let pool = names[dist.sample(&mut self.rng)].clone();
                        self.push_post(user, week, &pool, &pool);
                    }
                }
                for _ in 0..g.reposts_own_per_week {
                    self.push_repost(user, week, &g.anchor_account.clone());
                }
                if let Some(other) = &other_anchor {
                    for _ in 0..g.reposts_other_per_week {
                        self.push_repost(user, week, &other.clone());
                    }
                }
            }
        }
    }

    /// Next same-family group's anchor, wrapping around.
    fn sibling_anchor(&self, g: &GroupSpec) -> Option<String> {
        let family: Vec<&GroupSpec> = self
            .cfg
            .groups
            .iter()
            .filter(|o| o.family == g.family)
            .collect();
        if family.len() < 2 {
            return None;
        }
        let pos = family.iter().position(|o| o.label == g.label)?;
        Some(family[(pos + 1) % family.len()].anchor_account.clone())
    }

    fn scheduled_week(&mut self, week: usize) {
        for hi in 0..self.cfg.schedule.len() {
            let h = self.cfg.schedule[hi].clone();
            // Bridging runs on its own clock, before the happening.
            if let Some((bs, be)) = h.bridge_weeks {
                if week >= bs && week < be && h.pools.len() >= 1 {
                    let pool_a = h.pools[0].clone();
                    let pool_b = h
                        .bridge_pool
                        .clone()
                        .or_else(|| h.pools.get(1).cloned())
                        .unwrap_or_else(|| pool_a.clone());
                    let bridgers: Vec<String> = self.background[..h.n_bridge_users].to_vec();
                    for user in &bridgers {
                        for _ in 0..h.intensity.max(1) {
                            self.push_bridge_post(user, week, &pool_a, &pool_b, &h.label);
                        }
                    }
                }
            }
            if week < h.start_week || week >= h.start_week + h.duration_weeks {
                continue;
            }
            match h.kind {
                HappeningKind::Synchronization => {
                    let pool = h.pools[0].clone();
                    let users: Vec<String> =
                        self.participants_of(&h).into_iter().cloned().collect();
                    for user in &users {
                        for _ in 0..h.intensity {
                            self.push_post(user, week, &pool, &pool);
                        }
                    }
                }
                HappeningKind::Buzz => {
                    let target = h.target_anchor.clone().expect("validated");
                    let users: Vec<String> =
                        self.participants_of(&h).into_iter().cloned().collect();
                    for user in &users {
                        for _ in 0..h.intensity {
                            self.push_repost(user, week, &target);
                        }
                    }
                }
                HappeningKind::BurstTopic => {
                    let pool = h.pools[0].clone();
                    let users: Vec<String> =
                        self.participants_of(&h).into_iter().cloned().collect();
                    for user in &users {
                        for _ in 0..h.intensity {
                            self.push_post(user, week, &pool, &pool);
                        }
                    }
                }
                HappeningKind::TopicMergeDivergence => {
                    // participants[i] activates pools[i] with single-tag
                    // posts: no fresh edges, so only graphs that still
                    // remember the bridge era keep these tags in a topic.
                    for (pi, part) in h.participants.iter().enumerate() {
                        let pool = h.pools[pi.min(h.pools.len() - 1)].clone();
                        let users: Vec<String> = if part == BACKGROUND {
                            self.background.clone()
                        } else {
                            self.members[part].clone()
                        };
                        for user in &users {
                            for _ in 0..h.intensity {
                                let pool = pool.clone();
                                self.push_single_tag_post(user, week, &pool, &pool);
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut gen = Generator::new(cfg);
    for week in 0..cfg.n_weeks {
        gen.baseline_week(week);
        gen.scheduled_week(week);
    }
    let Generator {
        mut events,
        mut event_pool,
        pool_tags,
        members,
        background,
        ..
    } = gen;

    // Emission layout: with a line target, keep the earliest events and
    // corrupt every corrupt_every-th line in place; otherwise corrupt
    // lines are inserted between valid ones.
    let (n_valid, n_corrupt) = match (cfg.target_lines, cfg.corrupt_every) {
        (Some(lines), Some(every)) => {
            let corrupt = lines / every;
            (lines - corrupt, corrupt)
        }
        (Some(lines), None) => (lines, 0),
        (None, Some(every)) => (events.len(), events.len() / every.max(1)),
        (None, None) => (events.len(), 0),
    };
    if n_valid > events.len() {
        return Err(Error::SynthConfig(format!(
            "target_lines wants {n_valid} events but only {} were generated",
            events.len()
        )));
    }
    events.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.id.cmp(&b.id)));
    events.truncate(n_valid);
    let kept: BTreeSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
    event_pool.retain(|id, _| kept.contains(id.as_str()));

    let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
    let mut occurrences = 0u64;
    for ev in &events {
        occurrences += ev.tags.len() as u64;
        if !ev.tags.is_empty() {
            *hist.entry(ev.tags.len()).or_insert(0) += 1;
        }
    }

    let mut events_jsonl = String::new();
    let mut emitted = 0usize;
    let mut line_no = 0usize;
    for ev in &events {
        line_no += 1;
        if let Some(every) = cfg.corrupt_every {
            while n_corrupt > emitted && line_no % every == 0 {
                events_jsonl.push_str("{corrupted line, not json}\n");
                emitted += 1;
                line_no += 1;
            }
        }
        writeln!(events_jsonl, "{}", serde_json::to_string(ev).expect("serializable")).unwrap();
    }
    while emitted < n_corrupt {
        events_jsonl.push_str("{corrupted line, not json}\n");
        emitted += 1;
    }

    let mut anchors_jsonl = String::new();
    for g in &cfg.groups {
        let anchor = Anchor {
            account_id: g.anchor_account.clone(),
            family: g.family,
            label: g.label.clone(),
        };
        writeln!(anchors_jsonl, "{}", serde_json::to_string(&anchor).expect("serializable"))
            .unwrap();
    }

    let mut intended_labels: BTreeMap<String, UserLabels> = BTreeMap::new();
    let mut group_sizes: BTreeMap<String, u64> = BTreeMap::new();
    for g in &cfg.groups {
        group_sizes.insert(g.label.clone(), g.size as u64);
        for user in &members[&g.label] {
            let labels = intended_labels.entry(user.clone()).or_default();
            match g.family {
                AnchorFamily::Candidate => labels.candidate = Some(g.label.clone()),
                AnchorFamily::Media => labels.media = Some(g.label.clone()),
            }
        }
    }

    let schedule = cfg
        .schedule
        .iter()
        .map(|h| ScheduleEcho {
            kind: h.kind,
            label: h.label.clone(),
            participants: h.participants.clone(),
            pools: h.pools.clone(),
            start_week: h.start_week,
            duration_weeks: h.duration_weeks,
            expected_peak_day: match h.kind {
                HappeningKind::Synchronization => {
                    Some((h.start_week + h.duration_weeks) * 7 - 1)
                }
                _ => None,
            },
            target_anchor: h.target_anchor.clone(),
        })
        .collect();

    let n_users = (background.len() + members.values().map(Vec::len).sum::<usize>()) as u64;
    let capture = cfg.capture();
    Ok(SynthOutput {
        events_jsonl,
        anchors_jsonl,
        allowlist: "fr\n".to_string(),
        ground_truth: GroundTruth {
            scenario: cfg.scenario.clone(),
            seed: cfg.seed,
            capture_start: capture.start,
            capture_end: capture.end,
            n_weeks: cfg.n_weeks,
            intended_labels,
            group_sizes,
            pool_vocab: pool_tags,
            event_pool,
            schedule,
            hashtags_per_event_hist: hist,
            n_users,
            n_valid_lines: events.len() as u64,
            n_corrupt_lines: n_corrupt as u64,
            total_hashtag_occurrences: occurrences,
        },
    })
}

/// Write events.jsonl, anchors.jsonl, allowlist.txt, and
/// ground_truth.json into `dir`.
pub fn write_corpus(dir: &Path, out: &SynthOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, content: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
    };
    write("events.jsonl", &out.events_jsonl)?;
    write("anchors.jsonl", &out.anchors_jsonl)?;
    write("allowlist.txt", &out.allowlist)?;
    let gt = serde_json::to_string_pretty(&out.ground_truth)?;
    write("ground_truth.json", &format!("{gt}\n"))
}

// ---------------------------------------------------------------------------
// Preset scenarios

/// Capture starts 2022-01-01 00:00 UTC in every preset.
pub const PRESET_START: i64 = 1_640_995_200;

fn mixing_row(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn group(
    label: &str,
    family: AnchorFamily,
    anchor: &str,
    size: usize,
    posts: u32,
) -> GroupSpec {
    GroupSpec {
        label: label.to_string(),
        family,
        anchor_account: anchor.to_string(),
        size,
        posts_per_week: posts,
        reposts_own_per_week: 9,
        reposts_other_per_week: 1,
    }
}

fn pool(name: &str, n: usize, birth: usize, death: usize) -> PoolSpec {
    PoolSpec {
        name: name.to_string(),
        n_hashtags: n,
        birth_week: birth,
        death_week: death,
    }
}

/// Twelve weeks, four groups, a one-week synchronization between the two
/// candidate groups and a one-week repost buzz flooding a media anchor.
pub fn default_scenario(seed: u64) -> SynthConfig {
    let n_weeks = 12;
    SynthConfig {
        scenario: "default".into(),
        seed,
        capture_start: PRESET_START,
        n_weeks,
        n_background_users: 300,
        background_posts_per_week: 3,
        groups: vec![
            group("candA", AnchorFamily::Candidate, "accA", 40, 4),
            group("candB", AnchorFamily::Candidate, "accB", 40, 4),
            // The buzzed group reposts its own anchor heavily enough
            // that one buzz week flips the weekly label but not the
            // whole-period one: 20 own vs 1 + 63 other in the buzz week
            // (64 of 84 is above threshold), 240 own of 315 overall.
            GroupSpec {
                reposts_own_per_week: 20,
                ..group("medM1", AnchorFamily::Media, "accM1", 30, 4)
            },
            group("medM2", AnchorFamily::Media, "accM2", 30, 4),
        ],
        pools: vec![
            pool("common", 12, 0, n_weeks),
            pool("pa", 8, 0, n_weeks),
            pool("pb", 8, 0, n_weeks),
            pool("pm", 8, 0, n_weeks),
            pool("sync", 6, 0, n_weeks),
        ],
        mixing: [
            ("candA", mixing_row(&[("common", 0.5), ("pa", 0.5)])),
            ("candB", mixing_row(&[("common", 0.5), ("pb", 0.5)])),
            ("medM1", mixing_row(&[("common", 0.5), ("pm", 0.5)])),
            ("medM2", mixing_row(&[("common", 0.5), ("pm", 0.5)])),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        // A sliver of background usage keeps the sync pool alive as a
        // topic before the happening, so the similarity peak is not
        // delayed by partition lag.
        background_mixing: mixing_row(&[
            ("common", 0.65),
            ("pa", 0.1),
            ("pb", 0.1),
            ("pm", 0.1),
            ("sync", 0.05),
        ]),
        tags_per_event_weights: vec![0.35, 0.35, 0.18, 0.08, 0.04],
        schedule: vec![
            Happening {
                kind: HappeningKind::Synchronization,
                label: "sync1".into(),
                participants: vec!["candA".into(), "candB".into()],
                pools: vec!["sync".into()],
                start_week: 8,
                duration_weeks: 1,
                intensity: 8,
                target_anchor: None,
                bridge_weeks: None,
                n_bridge_users: 0,
                bridge_pool: None,
            },
            Happening {
                kind: HappeningKind::Buzz,
                label: "buzz1".into(),
                participants: vec!["medM1".into()],
                pools: vec![],
                start_week: 6,
                duration_weeks: 1,
                intensity: 63,
                target_anchor: Some("accM2".into()),
                bridge_weeks: None,
                n_bridge_users: 0,
                bridge_pool: None,
            },
        ],
        target_lines: None,
        corrupt_every: None,
    }
}

/// Fourteen weeks; a dormant pool is welded to the common pool during
/// the first month, then erupts for one week in week 7.
pub fn burst_scenario(seed: u64) -> SynthConfig {
    let n_weeks = 14;
    SynthConfig {
        scenario: "burst".into(),
        seed,
        capture_start: PRESET_START,
        n_weeks,
        n_background_users: 250,
        background_posts_per_week: 3,
        groups: vec![
            group("candA", AnchorFamily::Candidate, "accA", 40, 4),
            group("candB", AnchorFamily::Candidate, "accB", 40, 4),
        ],
        pools: vec![
            pool("common", 10, 0, n_weeks),
            pool("pa", 6, 0, n_weeks),
            pool("pb", 6, 0, n_weeks),
            pool("burst", 6, 0, n_weeks),
        ],
        mixing: [
            ("candA", mixing_row(&[("common", 0.5), ("pa", 0.5)])),
            ("candB", mixing_row(&[("common", 0.5), ("pb", 0.5)])),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        background_mixing: mixing_row(&[("common", 0.8), ("pa", 0.1), ("pb", 0.1)]),
        tags_per_event_weights: vec![0.35, 0.35, 0.18, 0.08, 0.04],
        // Bridging welds the dormant pool to the small pa pool, which
        // accumulated memory keeps; bridging to the dominant common
        // pool would never clear the modularity bar.
        schedule: vec![Happening {
            kind: HappeningKind::BurstTopic,
            label: "burst1".into(),
            participants: vec![BACKGROUND.into()],
            pools: vec!["burst".into()],
            start_week: 7,
            duration_weeks: 1,
            intensity: 5,
            target_anchor: None,
            bridge_weeks: Some((0, 4)),
            n_bridge_users: 100,
            bridge_pool: Some("pa".into()),
        }],
        target_lines: None,
        corrupt_every: None,
    }
}

/// Two dormant pools are bridged to each other during the first month,
/// then activated separately by one candidate group and one media group:
/// accumulated memory sees one topic, a rolling window sees two.
pub fn divergence_scenario(seed: u64) -> SynthConfig {
    let n_weeks = 12;
    SynthConfig {
        scenario: "divergence".into(),
        seed,
        capture_start: PRESET_START,
        n_weeks,
        n_background_users: 250,
        background_posts_per_week: 3,
        groups: vec![
            group("candA", AnchorFamily::Candidate, "accA", 35, 4),
            group("candB", AnchorFamily::Candidate, "accB", 35, 4),
            group("medM1", AnchorFamily::Media, "accM1", 25, 4),
            group("medM2", AnchorFamily::Media, "accM2", 25, 4),
        ],
        pools: vec![
            pool("common", 10, 0, n_weeks),
            pool("pa", 6, 0, n_weeks),
            pool("pb", 6, 0, n_weeks),
            pool("pm", 6, 0, n_weeks),
            pool("pn", 6, 0, n_weeks),
            pool("div1", 4, 0, n_weeks),
            pool("div2", 4, 0, n_weeks),
        ],
        mixing: [
            ("candA", mixing_row(&[("common", 0.5), ("pa", 0.5)])),
            ("candB", mixing_row(&[("common", 0.5), ("pb", 0.5)])),
            ("medM1", mixing_row(&[("common", 0.5), ("pm", 0.5)])),
            ("medM2", mixing_row(&[("common", 0.5), ("pn", 0.5)])),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        background_mixing: mixing_row(&[
            ("common", 0.6),
            ("pa", 0.1),
            ("pb", 0.1),
            ("pm", 0.1),
            ("pn", 0.1),
        ]),
        tags_per_event_weights: vec![0.35, 0.35, 0.18, 0.08, 0.04],
        schedule: vec![Happening {
            kind: HappeningKind::TopicMergeDivergence,
            label: "merge1".into(),
            participants: vec!["candB".into(), "medM2".into()],
            pools: vec!["div1".into(), "div2".into()],
            start_week: 8,
            duration_weeks: 3,
            intensity: 2,
            target_anchor: None,
            bridge_weeks: Some((0, 4)),
            n_bridge_users: 50,
            bridge_pool: None,
        }],
        target_lines: None,
        corrupt_every: None,
    }
}

pub fn preset(name: &str, seed: u64) -> Result<SynthConfig> {
    match name {
        "default" => Ok(default_scenario(seed)),
        "burst" => Ok(burst_scenario(seed)),
        "divergence" => Ok(divergence_scenario(seed)),
        other => Err(Error::SynthConfig(format!(
            "unknown scenario {other:?}; expected default, burst, or divergence"
        ))),
    }
}
