//! Per-snapshot structural metrics and cross-snapshot persistence rates.
//!
//! All quantities are computed on the unweighted backbone (the simple
//! graph induced by edges with weight >= 1); weights are not used here.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CoocSnapshot, PolicyKind};

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotMetrics {
    pub week_index: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    /// 2E / (N(N-1)); absent when N <= 1.
    pub density: Option<f64>,
    /// 2E / N; absent when N = 0.
    pub avg_degree: Option<f64>,
    /// Mean over nodes of the ordered closed-triple count at each node
    /// (twice the triangle count at the node), unnormalized.
    pub clustering_paper: Option<f64>,
    /// Mean local clustering coefficient; nodes of degree < 2 contribute 0.
    pub clustering_standard: Option<f64>,
    /// Newman degree assortativity; absent when degrees are all equal.
    pub assortativity: Option<f64>,
    pub n_components: usize,
    pub largest_component_fraction: Option<f64>,
}

struct Backbone {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl Backbone {
    fn from_snapshot(snapshot: &CoocSnapshot) -> Self {
        let nodes: Vec<&String> = snapshot.nodes.iter().collect();
        let index = |tag: &String| nodes.binary_search(&tag).expect("edge endpoint in nodes");
        let mut adj = vec![Vec::new(); nodes.len()];
        for (a, b) in snapshot.edges.keys() {
            let (i, j) = (index(a), index(b));
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Backbone {
            n: nodes.len(),
            adj,
        }
    }

    fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Triangles incident to node i.
    fn triangles_at(&self, i: usize) -> usize {
        let neigh = &self.adj[i];
        let mut count = 0;
        for (a_pos, &j) in neigh.iter().enumerate() {
            for &k in &neigh[a_pos + 1..] {
                if self.adj[j].binary_search(&k).is_ok() {
                    count += 1;
                }
            }
        }
        count
    }

    fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut sizes = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut stack = vec![start];
            let mut size = 0usize;
            comp[start] = id;
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in &self.adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }
}

pub fn compute_metrics(snapshot: &CoocSnapshot) -> SnapshotMetrics {
    let g = Backbone::from_snapshot(snapshot);
    let n = g.n;
    let m = snapshot.edges.len();

    let density = if n > 1 {
        Some(2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)))
    } else {
        None
    };
    let avg_degree = if n > 0 { Some(2.0 * m as f64 / n as f64) } else { None };

    let (clustering_paper, clustering_standard) = if n > 0 {
        let mut paper_sum = 0.0;
        let mut std_sum = 0.0;
        for i in 0..n {
            let tri = g.triangles_at(i);
            paper_sum += 2.0 * tri as f64;
            let d = g.degree(i);
            if d >= 2 {
                std_sum += 2.0 * tri as f64 / (d as f64 * (d as f64 - 1.0));
            }
        }
        (Some(paper_sum / n as f64), Some(std_sum / n as f64))
    } else {
        (None, None)
    };

    let assortativity = degree_assortativity(&g);

    let sizes = g.components();
    let n_components = sizes.len();
    let largest_component_fraction = sizes
        .iter()
        .max()
        .map(|&mx| mx as f64 / n as f64)
        .filter(|_| n > 0);

    SnapshotMetrics {
        week_index: snapshot.week_index,
        n_nodes: n,
        n_edges: m,
        density,
        avg_degree,
        clustering_paper,
        clustering_standard,
        assortativity,
        n_components,
        largest_component_fraction,
    }
}

/// Pearson correlation of degrees over edge endpoints, each edge counted
/// in both directions. `None` when undefined (no edges or zero variance).
fn degree_assortativity(g: &Backbone) -> Option<f64> {
    let mut m2 = 0u64; // directed edge count
    let mut sum_jk = 0.0;
    let mut sum_j = 0.0;
    let mut sum_j2 = 0.0;
    for i in 0..g.n {
        let di = g.degree(i) as f64;
        for &j in &g.adj[i] {
            let dj = g.degree(j) as f64;
            m2 += 1;
            sum_jk += di * dj;
            sum_j += di;
            sum_j2 += di * di;
        }
    }
    if m2 == 0 {
        return None;
    }
    let inv = 1.0 / m2 as f64;
    let mean = inv * sum_j;
    let var = inv * sum_j2 - mean * mean;
    let cov = inv * sum_jk - mean * mean;
    if var <= 0.0 {
        None
    } else {
        Some(cov / var)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistencePoint {
    pub week_index: usize,
    /// |V_0 ∩ V_k| / |V_0|.
    pub node_retention: Option<f64>,
    pub edge_retention: Option<f64>,
    /// |V_{k-1} ∩ V_k| / |V_k|; absent at k = 0 and when V_k is empty.
    pub node_renewal: Option<f64>,
    pub edge_renewal: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceRates {
    pub policy: PolicyKind,
    pub points: Vec<PersistencePoint>,
}

pub fn compute_persistence(series: &[CoocSnapshot]) -> Result<PersistenceRates> {
    if series.len() < 2 {
        return Err(Error::Policy(
            "persistence needs a series of at least 2 snapshots".into(),
        ));
    }
    let first = &series[0];
    let first_edges: BTreeSet<_> = first.edges.keys().collect();
    let mut points = Vec::with_capacity(series.len());
    for (k, snap) in series.iter().enumerate() {
        let edges_k: BTreeSet<_> = snap.edges.keys().collect();
        let node_retention = if first.nodes.is_empty() {
            None
        } else {
            Some(
                snap.nodes.intersection(&first.nodes).count() as f64 / first.nodes.len() as f64,
            )
        };
        let edge_retention = if first_edges.is_empty() {
            None
        } else {
            Some(edges_k.intersection(&first_edges).count() as f64 / first_edges.len() as f64)
        };
        let (node_renewal, edge_renewal) = if k == 0 {
            (None, None)
        } else {
            let prev = &series[k - 1];
            let prev_edges: BTreeSet<_> = prev.edges.keys().collect();
            let nr = if snap.nodes.is_empty() {
                None
            } else {
                Some(
                    snap.nodes.intersection(&prev.nodes).count() as f64 / snap.nodes.len() as f64,
                )
            };
            let er = if edges_k.is_empty() {
                None
            } else {
                Some(edges_k.intersection(&prev_edges).count() as f64 / edges_k.len() as f64)
            };
            (nr, er)
        };
        points.push(PersistencePoint {
            week_index: snap.week_index,
            node_retention,
            edge_retention,
            node_renewal,
            edge_renewal,
        });
    }
    Ok(PersistenceRates {
        policy: first.policy,
        points,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// One row per (policy, week); absent values serialize as empty fields.
pub fn metrics_to_csv(policy: PolicyKind, rows: &[SnapshotMetrics]) -> String {
    let mut out = String::from(
        "policy,week,n_nodes,n_edges,density,avg_degree,clustering_paper,clustering_standard,assortativity,n_components,largest_component_fraction\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{policy},{},{},{},{},{},{},{},{},{},{}\n",
            r.week_index,
            r.n_nodes,
            r.n_edges,
            fmt_opt(r.density),
            fmt_opt(r.avg_degree),
            fmt_opt(r.clustering_paper),
            fmt_opt(r.clustering_standard),
            fmt_opt(r.assortativity),
            r.n_components,
            fmt_opt(r.largest_component_fraction),
        ));
    }
    out
}

pub fn persistence_to_csv(rates: &PersistenceRates) -> String {
    let mut out = String::from(
        "policy,week,node_retention,edge_retention,node_renewal,edge_renewal\n",
    );
    for p in &rates.points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rates.policy,
            p.week_index,
            fmt_opt(p.node_retention),
            fmt_opt(p.edge_retention),
            fmt_opt(p.node_renewal),
            fmt_opt(p.edge_renewal),
        ));
    }
    out
}
