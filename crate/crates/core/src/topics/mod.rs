//! Topic extraction from co-occurrence snapshots.
//!
//! The built-in detector runs deterministic weighted modularity
//! optimization and yields disjoint topics; the data model permits
//! overlap so external overlapping detectors plug in through the
//! subprocess adapter without format changes. Communities smaller than
//! the minimum topic size are merged into a reserved noise pseudo-topic
//! that downstream attention vectors exclude.

mod louvain;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::graph::CoocSnapshot;

pub use louvain::louvain_communities;

pub const NOISE_TOPIC_ID: &str = "noise";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicPartition {
    pub week_index: usize,
    /// Nonempty hashtag sets; overlap permitted.
    pub topics: Vec<BTreeSet<String>>,
    /// Hashtags not placed in any regular topic (singletons and detector
    /// leftovers); excluded from attention vectors, counted in coverage.
    pub noise: BTreeSet<String>,
    /// Algorithm + parameters + seed, for provenance.
    pub detector_tag: String,
}

impl TopicPartition {
    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    /// hashtag -> topic indices (possibly several under overlap).
    pub fn membership(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (idx, topic) in self.topics.iter().enumerate() {
            for tag in topic {
                out.entry(tag.as_str()).or_default().push(idx);
            }
        }
        out
    }

    pub fn validate_against(&self, snapshot: &CoocSnapshot) -> Result<()> {
        for topic in &self.topics {
            if topic.is_empty() {
                return Err(Error::Detector("empty topic in partition".into()));
            }
            for tag in topic {
                if !snapshot.nodes.contains(tag) {
                    return Err(Error::Detector(format!(
                        "partition references hashtag {tag:?} absent from snapshot"
                    )));
                }
            }
        }
        for tag in &self.noise {
            if !snapshot.nodes.contains(tag) {
                return Err(Error::Detector(format!(
                    "noise references hashtag {tag:?} absent from snapshot"
                )));
            }
        }
        Ok(())
    }
}

pub trait TopicDetector {
    /// Deterministic given (snapshot, configured seed).
    fn detect(&self, snapshot: &CoocSnapshot) -> Result<TopicPartition>;
    fn tag(&self) -> String;
}

/// Built-in detector: deterministic Louvain over edge weights, stable
/// lexicographic tie-breaking, disjoint topics.
#[derive(Debug, Clone)]
pub struct LouvainDetector {
    pub resolution: f64,
    pub seed: u64,
    pub min_topic_size: usize,
}

impl Default for LouvainDetector {
    fn default() -> Self {
        LouvainDetector {
            resolution: 1.0,
            seed: 42,
            min_topic_size: 2,
        }
    }
}

impl TopicDetector for LouvainDetector {
    fn detect(&self, snapshot: &CoocSnapshot) -> Result<TopicPartition> {
        let nodes: Vec<&String> = snapshot.nodes.iter().collect();
        let index: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for ((a, b), w) in &snapshot.edges {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            adj[i].push((j, *w as f64));
            adj[j].push((i, *w as f64));
        }
        let comm = louvain_communities(&adj, self.resolution);
        let mut grouped: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (i, &c) in comm.iter().enumerate() {
            grouped.entry(c).or_default().insert(nodes[i].clone());
        }
        let mut topics = Vec::new();
        let mut noise = BTreeSet::new();
        for (_, members) in grouped {
            if members.len() >= self.min_topic_size {
                topics.push(members);
            } else {
                noise.extend(members);
            }
        }
        Ok(TopicPartition {
            week_index: snapshot.week_index,
            topics,
            noise,
            detector_tag: self.tag(),
        })
    }

    fn tag(&self) -> String {
        format!(
            "louvain:res={}:seed={}:min_size={}",
            self.resolution, self.seed, self.min_topic_size
        )
    }
}

/// Subprocess adapter: the detector is invoked as
/// `cmd [args...] <snapshot_path> <partition_path>`, reads the snapshot
/// file format, writes the partition file format, and exits 0 on success.
#[derive(Debug, Clone)]
pub struct ExternalDetector {
    pub command: Vec<String>,
    pub min_topic_size: usize,
    /// Working directory for snapshot/partition handoff files.
    pub workdir: std::path::PathBuf,
}

impl TopicDetector for ExternalDetector {
    fn detect(&self, snapshot: &CoocSnapshot) -> Result<TopicPartition> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| Error::Detector("empty external detector command".into()))?;
        let snap_path = self
            .workdir
            .join(format!("snapshot-{:03}.tsv", snapshot.week_index));
        let part_path = self
            .workdir
            .join(format!("partition-{:03}.tsv", snapshot.week_index));
        crate::graph::export_snapshot(snapshot, &snap_path)?;
        let output = Command::new(program)
            .args(args)
            .arg(&snap_path)
            .arg(&part_path)
            .output()
            .map_err(|e| Error::Detector(format!("failed to spawn {program}: {e}")))?;
        if !output.status.success() {
            return Err(Error::DetectorExit {
                status: output.status.code().unwrap_or(-1),
                stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
            });
        }
        let mut partition = read_partition(&part_path, snapshot.week_index)?;
        partition.detector_tag = self.tag();
        // Apply the module-wide minimum topic size.
        let (kept, small): (Vec<_>, Vec<_>) = partition
            .topics
            .into_iter()
            .partition(|t| t.len() >= self.min_topic_size);
        partition.topics = kept;
        for t in small {
            partition.noise.extend(t);
        }
        partition.validate_against(snapshot)?;
        Ok(partition)
    }

    fn tag(&self) -> String {
        format!("external:{}", self.command.join(" "))
    }
}

/// Run a detector on one snapshot, enforcing the partition invariants.
pub fn detect_topics(snapshot: &CoocSnapshot, detector: &dyn TopicDetector) -> Result<TopicPartition> {
    if snapshot.nodes.is_empty() {
        return Err(Error::Detector(format!(
            "snapshot {} is empty; nothing to detect",
            snapshot.week_index
        )));
    }
    let partition = detector.detect(snapshot)?;
    partition.validate_against(snapshot)?;
    Ok(partition)
}

/// Detect over a whole series. Each partition reads only its own
/// snapshot; the accompanying check asserts snapshots close in
/// non-decreasing time order so no partition can see future events.
pub fn detect_series(
    series: &[CoocSnapshot],
    detector: &dyn TopicDetector,
) -> Result<Vec<TopicPartition>> {
    for w in series.windows(2) {
        if w[1].time_range.end < w[0].time_range.end {
            return Err(Error::Detector(
                "snapshot series closes out of time order".into(),
            ));
        }
    }
    series.iter().map(|s| detect_topics(s, detector)).collect()
}

pub fn topic_count_series(partitions: &[TopicPartition]) -> Vec<(usize, usize)> {
    partitions
        .iter()
        .map(|p| (p.week_index, p.n_topics()))
        .collect()
}

// ---------------------------------------------------------------------------
// Partition file format: one line per topic `topic_id<TAB>tag1,tag2,...`;
// the reserved id "noise" carries the pseudo-topic.

pub fn write_partition(partition: &TopicPartition, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for (idx, topic) in partition.topics.iter().enumerate() {
        let tags: Vec<&str> = topic.iter().map(String::as_str).collect();
        writeln!(out, "{idx}\t{}", tags.join(",")).expect("in-memory write");
    }
    if !partition.noise.is_empty() {
        let tags: Vec<&str> = partition.noise.iter().map(String::as_str).collect();
        writeln!(out, "{NOISE_TOPIC_ID}\t{}", tags.join(",")).expect("in-memory write");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_partition(path: &Path, week_index: usize) -> Result<TopicPartition> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut topics = Vec::new();
    let mut noise = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, tags) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: idx + 1,
            reason: "partition line missing tab separator".into(),
        })?;
        let set: BTreeSet<String> = tags
            .split(',')
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        if id == NOISE_TOPIC_ID {
            noise.extend(set);
        } else if !set.is_empty() {
            topics.push(set);
        } else {
            return Err(Error::Parse {
                line: idx + 1,
                reason: "empty topic".into(),
            });
        }
    }
    Ok(TopicPartition {
        week_index,
        topics,
        noise,
        detector_tag: String::new(),
    })
}
