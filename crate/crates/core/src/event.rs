//! The raw activity unit: one post or repost with its hashtag set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Original,
    Repost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: String,
    /// UTC seconds.
    pub timestamp: i64,
    pub user_id: String,
    pub kind: EventKind,
    /// Present exactly when `kind == Repost`.
    pub repost_of_user: Option<String>,
    /// Normalized: case-folded, leading '#' stripped, deduplicated.
    pub hashtags: BTreeSet<String>,
    pub location_tag: Option<String>,
}

/// Case-fold and strip a leading '#'. Returns `None` for tags that are
/// empty after normalization.
pub fn normalize_hashtag(raw: &str) -> Option<String> {
    let stripped = raw.strip_prefix('#').unwrap_or(raw);
    let folded = stripped.to_lowercase();
    if folded.is_empty() {
        None
    } else {
        Some(folded)
    }
}

/// Normalize a list of raw tags into the deduplicated set an `Event`
/// carries.
pub fn normalize_hashtags<I, S>(raw: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    raw.into_iter()
        .filter_map(|t| normalize_hashtag(t.as_ref()))
        .collect()
}
