//! Deterministic weighted modularity optimization.
//!
//! Standard two-phase local-moving / aggregation scheme with stable
//! tie-breaking: nodes are visited in ascending index order (callers pass
//! nodes sorted lexicographically) and equal-gain moves prefer the
//! smallest community id, so the result depends only on the input graph.

/// Community id per node. `adj[i]` lists `(neighbor, weight)` with every
/// undirected edge present in both endpoint lists; no self-loops expected
/// at the top level.
pub fn louvain_communities(adj: &[Vec<(usize, f64)>], resolution: f64) -> Vec<usize> {
    let n = adj.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut graph: Vec<Vec<(usize, f64)>> = adj.to_vec();
    let mut loops: Vec<f64> = vec![0.0; n];

    loop {
        let comm = one_level(&graph, &loops, resolution);
        let n_comms = renumbered(&comm).1;
        if n_comms == graph.len() {
            break;
        }
        let (relabel, _) = renumbered(&comm);
        for m in membership.iter_mut() {
            *m = relabel[comm[*m]];
        }
        let (next_graph, next_loops) = aggregate(&graph, &loops, &relabel, &comm, n_comms);
        graph = next_graph;
        loops = next_loops;
    }
    let (relabel, _) = renumbered(&membership);
    membership.iter().map(|&c| relabel[c]).collect()
}

/// Map community labels to dense ids ordered by smallest member index.
fn renumbered(comm: &[usize]) -> (Vec<usize>, usize) {
    let mut relabel = vec![usize::MAX; comm.len()];
    let mut next = 0usize;
    for &c in comm {
        if relabel[c] == usize::MAX {
            relabel[c] = next;
            next += 1;
        }
    }
    (relabel, next)
}

fn one_level(graph: &[Vec<(usize, f64)>], loops: &[f64], resolution: f64) -> Vec<usize> {
    let n = graph.len();
    let degree: Vec<f64> = (0..n)
        .map(|i| graph[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * loops[i])
        .collect();
    let m2: f64 = degree.iter().sum();
    let mut comm: Vec<usize> = (0..n).collect();
    if m2 <= 0.0 {
        return comm;
    }
    let mut comm_tot = degree.clone();

    let mut neigh_w: Vec<f64> = vec![0.0; n];
    let mut improved = true;
    let mut passes = 0;
    while improved && passes < 100 {
        improved = false;
        passes += 1;
        for i in 0..n {
            let ci = comm[i];
            // Weights from i to each adjacent community.
            let mut touched: Vec<usize> = Vec::with_capacity(graph[i].len() + 1);
            for &(j, w) in &graph[i] {
                let cj = comm[j];
                if neigh_w[cj] == 0.0 && !touched.contains(&cj) {
                    touched.push(cj);
                }
                neigh_w[cj] += w;
            }
            if !touched.contains(&ci) {
                touched.push(ci);
            }
            touched.sort_unstable();

            comm_tot[ci] -= degree[i];
            let gain = |c: usize| neigh_w[c] - resolution * comm_tot[c] * degree[i] / m2;
            let stay_gain = gain(ci);
            // Best strictly-improving move; ties between candidate
            // communities resolve to the smallest id, and staying wins
            // ties against moving.
            let mut best = ci;
            let mut best_gain = stay_gain;
            for &c in &touched {
                if c == ci {
                    continue;
                }
                let g = gain(c);
                if g > best_gain || (g == best_gain && best != ci && c < best) {
                    best = c;
                    best_gain = g;
                }
            }
            comm_tot[best] += degree[i];
            if best != ci {
                comm[i] = best;
                improved = true;
            }
            for &c in &touched {
                neigh_w[c] = 0.0;
            }
        }
    }
    comm
}

fn aggregate(
    graph: &[Vec<(usize, f64)>],
    loops: &[f64],
    relabel: &[usize],
    comm: &[usize],
    n_comms: usize,
) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let mut edges: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    let mut new_loops = vec![0.0; n_comms];
    for (i, l) in loops.iter().enumerate() {
        new_loops[relabel[comm[i]]] += l;
    }
    for i in 0..graph.len() {
        let ci = relabel[comm[i]];
        for &(j, w) in &graph[i] {
            let cj = relabel[comm[j]];
            if ci == cj {
                // Each undirected edge appears twice; loop weight is w/2.
                new_loops[ci] += w / 2.0;
            } else if ci < cj {
                *edges.entry((ci, cj)).or_insert(0.0) += w;
            }
        }
    }
    let mut adj = vec![Vec::new(); n_comms];
    for (&(a, b), &w) in &edges {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    (adj, new_loops)
}
