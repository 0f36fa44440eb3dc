//! End-to-end acceptance suite: ten numbered checks, each validating one
//! guaranteed property against independent oracles or planted synthetic
//! corpora. Runs the compiled CLI for the pipeline-level checks and the
//! library directly for the algorithmic ones. Prints one PASS/FAIL line
//! per check and fails the test if any check fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use tagnet::attention::{description_vector, usage_matrix};
use tagnet::entropy::hashtag_entropy;
use tagnet::event::{Event, EventKind};
use tagnet::graph::{
    build_snapshot_series, final_aggregated_equals_static, CoocSnapshot, MemoryPolicy, PolicyKind,
    SupportMode,
};
use tagnet::ingest::{
    assign_groups, load_anchors, parse_events, Anchor, AnchorFamily, AssignmentMode, ParseOptions,
};
use tagnet::metrics::{compute_metrics, compute_persistence};
use tagnet::synth::{self, GroundTruth, HappeningKind};
use tagnet::timeutil::{parse_instant, TimeRange, DAY, WEEK};
use tagnet::topics::{detect_topics, LouvainDetector};

// ---------------------------------------------------------------------------
// Harness

type CheckResult = std::result::Result<(), String>;

fn record(failures: &mut Vec<String>, name: &str, result: CheckResult) {
    match result {
        Ok(()) => println!("criterion {name}: PASS"),
        Err(msg) => {
            println!("criterion {name}: FAIL ({msg})");
            failures.push(format!("{name}: {msg}"));
        }
    }
}

#[test]
fn acceptance() {
    let mut failures = Vec::new();

    // Shared in-process fixture: a large synthetic corpus and its
    // snapshot series under all three policies.
    let big = BigFixture::build();

    record(
        &mut failures,
        "01 builder-equivalence",
        criterion_builder_equivalence(&big),
    );
    record(&mut failures, "02 metric-oracles", criterion_metric_oracles());
    record(
        &mut failures,
        "03 aggregated-persistence",
        criterion_aggregated_persistence(&big),
    );
    record(&mut failures, "04 entropy-exactness", criterion_entropy_exactness());
    record(
        &mut failures,
        "05 description-vector-identities",
        criterion_description_vectors(&big),
    );

    // Shared CLI fixture: full pipeline runs on the three planted
    // scenarios, the default one twice for the determinism check.
    let default_a = PipelineRun::execute("default", true);
    let default_b = PipelineRun::execute("default", true);
    let burst = PipelineRun::execute("burst", false);
    let divergence = PipelineRun::execute("divergence", false);

    record(
        &mut failures,
        "06 synchronization-detection",
        criterion_synchronization(&default_a),
    );
    record(&mut failures, "07 rolling-forgetting", criterion_forgetting(&burst));
    record(
        &mut failures,
        "08 policy-divergence",
        criterion_divergence(&divergence),
    );
    record(
        &mut failures,
        "09 supporter-boundary-and-buzz",
        criterion_supporter_rule(&default_a),
    );
    record(
        &mut failures,
        "10 determinism",
        criterion_determinism(&default_a, &default_b),
    );

    assert!(failures.is_empty(), "failed checks:\n{}", failures.join("\n"));
}

// ---------------------------------------------------------------------------
// In-process fixture

struct BigFixture {
    events: Vec<Event>,
    capture: TimeRange,
    rolling: Vec<CoocSnapshot>,
    aggregated: Vec<CoocSnapshot>,
    static_snap: CoocSnapshot,
    build_seconds: f64,
}

impl BigFixture {
    fn build() -> BigFixture {
        let mut cfg = synth::default_scenario(42);
        cfg.n_background_users = 2000;
        cfg.target_lines = Some(100_000);
        let out = synth::generate(&cfg).expect("synth generation");
        assert!(
            out.ground_truth.n_valid_lines >= 100_000,
            "fixture corpus too small: {} lines",
            out.ground_truth.n_valid_lines
        );
        let capture = cfg.capture();
        let opts = ParseOptions::new(capture);
        let events = parse_events(Cursor::new(out.events_jsonl.as_bytes()), &opts)
            .expect("parse fixture corpus")
            .events;

        let start = Instant::now();
        let rolling = build_snapshot_series(
            &events,
            &MemoryPolicy::with_days(PolicyKind::RollingWindow, 28, 7, 28),
            capture,
            SupportMode::Exact,
        )
        .expect("rolling series");
        let aggregated = build_snapshot_series(
            &events,
            &MemoryPolicy::with_days(PolicyKind::GrowingAggregated, 28, 7, 28),
            capture,
            SupportMode::Exact,
        )
        .expect("aggregated series");
        let static_snap = build_snapshot_series(
            &events,
            &MemoryPolicy::with_days(PolicyKind::StaticFull, 28, 7, 28),
            capture,
            SupportMode::Exact,
        )
        .expect("static series")
        .pop()
        .expect("static snapshot");
        let build_seconds = start.elapsed().as_secs_f64();

        BigFixture {
            events,
            capture,
            rolling,
            aggregated,
            static_snap,
            build_seconds,
        }
    }
}

// ---------------------------------------------------------------------------
// 1. Builder equivalence on a 100k-event corpus, under 30 seconds.

fn criterion_builder_equivalence(big: &BigFixture) -> CheckResult {
    if big.build_seconds >= 30.0 {
        return Err(format!("build took {:.1} s", big.build_seconds));
    }
    let report = final_aggregated_equals_static(
        &big.events,
        &MemoryPolicy::with_days(PolicyKind::GrowingAggregated, 28, 7, 28),
        big.capture,
        SupportMode::Exact,
    )
    .map_err(|e| e.to_string())?;
    if !report.equal {
        return Err(format!(
            "final aggregated != static: {} diffs, first: {}",
            report.diffs.len(),
            report.diffs.first().cloned().unwrap_or_default()
        ));
    }
    let (r0, a0) = (&big.rolling[0], &big.aggregated[0]);
    if r0.nodes != a0.nodes || r0.edges != a0.edges {
        return Err("rolling snapshot 0 differs from aggregated snapshot 0".into());
    }
    if big.static_snap.nodes != big.aggregated.last().unwrap().nodes {
        return Err("static node set differs from final aggregated".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. Structural metrics vs brute-force oracles on 30 random graphs.

struct OracleMetrics {
    density: Option<f64>,
    avg_degree: Option<f64>,
    clustering_paper: Option<f64>,
    clustering_standard: Option<f64>,
    assortativity: Option<f64>,
    n_components: usize,
    largest_component_fraction: Option<f64>,
}

fn oracle_metrics(n: usize, adj: &[Vec<bool>]) -> OracleMetrics {
    let degrees: Vec<usize> = (0..n).map(|i| adj[i].iter().filter(|&&b| b).count()).collect();
    let m: usize = degrees.iter().sum::<usize>() / 2;

    let density = (n > 1).then(|| 2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)));
    let avg_degree = (n > 0).then(|| 2.0 * m as f64 / n as f64);

    // Triangles by full triple enumeration.
    let mut triangles = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if !adj[i][j] {
                continue;
            }
            for k in (j + 1)..n {
                if adj[i][k] && adj[j][k] {
                    triangles += 1;
                }
            }
        }
    }
    // Each triangle contributes two ordered closed triples at each of
    // its three corners.
    let clustering_paper = (n > 0).then(|| 6.0 * triangles as f64 / n as f64);

    let clustering_standard = (n > 0).then(|| {
        let mut sum = 0.0;
        for i in 0..n {
            let d = degrees[i];
            if d < 2 {
                continue;
            }
            let mut links = 0usize;
            for j in 0..n {
                if !adj[i][j] {
                    continue;
                }
                for k in (j + 1)..n {
                    if adj[i][k] && adj[j][k] {
                        links += 1;
                    }
                }
            }
            sum += 2.0 * links as f64 / (d as f64 * (d as f64 - 1.0));
        }
        sum / n as f64
    });

    // Degree assortativity: Pearson over directed edge endpoint pairs,
    // computed with explicit means (two-pass, unlike the streaming
    // implementation).
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] {
                xs.push(degrees[i] as f64);
                ys.push(degrees[j] as f64);
            }
        }
    }
    let assortativity = if xs.is_empty() {
        None
    } else {
        let len = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / len;
        let my = ys.iter().sum::<f64>() / len;
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / len;
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / len;
        if var <= 0.0 {
            None
        } else {
            Some(cov / var)
        }
    };

    // Components by union-find (the implementation uses DFS).
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        *sizes.entry(r).or_insert(0) += 1;
    }
    let n_components = sizes.len();
    let largest_component_fraction = (n > 0)
        .then(|| *sizes.values().max().unwrap() as f64 / n as f64);

    OracleMetrics {
        density,
        avg_degree,
        clustering_paper,
        clustering_standard,
        assortativity,
        n_components,
        largest_component_fraction,
    }
}

fn opt_close(name: &str, got: Option<f64>, want: Option<f64>, tol: f64) -> CheckResult {
    match (got, want) {
        (None, None) => Ok(()),
        (Some(g), Some(w)) if (g - w).abs() <= tol => Ok(()),
        _ => Err(format!("{name}: implementation {got:?} vs oracle {want:?}")),
    }
}

fn criterion_metric_oracles() -> CheckResult {
    let mut rng = ChaCha20Rng::seed_from_u64(271828);
    for case in 0..30 {
        let n = rng.gen_range(2..=50usize);
        let p: f64 = rng.gen_range(0.04..0.5);
        let mut adj = vec![vec![false; n]; n];
        let mut nodes = BTreeSet::new();
        let mut edges = BTreeMap::new();
        for i in 0..n {
            nodes.insert(format!("t{i:03}"));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    adj[i][j] = true;
                    adj[j][i] = true;
                    let w: u64 = rng.gen_range(1..10);
                    edges.insert((format!("t{i:03}"), format!("t{j:03}")), w);
                }
            }
        }
        let snapshot = CoocSnapshot {
            week_index: case,
            time_range: TimeRange::new(0, WEEK),
            policy: PolicyKind::StaticFull,
            nodes,
            edges,
            approximate: false,
            support: None,
        };
        let got = compute_metrics(&snapshot);
        let want = oracle_metrics(n, &adj);
        let tag = |f: &str| format!("case {case} (n={n}) {f}");
        if got.n_nodes != n {
            return Err(tag(&format!("n_nodes {} != {n}", got.n_nodes)));
        }
        opt_close(&tag("density"), got.density, want.density, 1e-12)?;
        opt_close(&tag("avg_degree"), got.avg_degree, want.avg_degree, 1e-12)?;
        opt_close(
            &tag("clustering_paper"),
            got.clustering_paper,
            want.clustering_paper,
            1e-12,
        )?;
        opt_close(
            &tag("clustering_standard"),
            got.clustering_standard,
            want.clustering_standard,
            1e-12,
        )?;
        opt_close(
            &tag("assortativity"),
            got.assortativity,
            want.assortativity,
            1e-12,
        )?;
        if got.n_components != want.n_components {
            return Err(tag(&format!(
                "n_components {} != {}",
                got.n_components, want.n_components
            )));
        }
        opt_close(
            &tag("largest_component_fraction"),
            got.largest_component_fraction,
            want.largest_component_fraction,
            1e-12,
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. Aggregated persistence identities.

fn criterion_aggregated_persistence(big: &BigFixture) -> CheckResult {
    let rates = compute_persistence(&big.aggregated).map_err(|e| e.to_string())?;
    for (k, point) in rates.points.iter().enumerate() {
        if point.node_retention != Some(1.0) {
            return Err(format!(
                "week {k}: node_retention {:?} != 1",
                point.node_retention
            ));
        }
        if k > 0 {
            let prev = big.aggregated[k - 1].n_nodes() as f64;
            let cur = big.aggregated[k].n_nodes() as f64;
            let expected = prev / cur;
            if point.node_renewal != Some(expected) {
                return Err(format!(
                    "week {k}: node_renewal {:?} != |V_{}|/|V_{}| = {expected}",
                    point.node_renewal,
                    k - 1,
                    k
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. Entropy exactness against uniform closed forms and an independent
//    high-precision recomputation.

fn entropy_events(counts: &[u64]) -> Vec<Event> {
    let mut events = Vec::new();
    for (i, &users) in counts.iter().enumerate() {
        for u in 0..users {
            events.push(Event {
                event_id: format!("e{i}_{u}"),
                timestamp: 100,
                user_id: format!("user_{i}_{u}"),
                kind: EventKind::Original,
                repost_of_user: None,
                hashtags: [format!("tag{i:03}")].into_iter().collect(),
                location_tag: Some("fr".into()),
            });
        }
    }
    events
}

/// Direct -sum p ln p with Kahan-compensated summation; a different
/// route than the implementation's ln(b) - (1/b) sum a ln a form.
fn entropy_oracle(counts: &[u64]) -> f64 {
    let b: u64 = counts.iter().sum();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &a in counts {
        if a == 0 {
            continue;
        }
        let p = a as f64 / b as f64;
        let term = -p * p.ln();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn criterion_entropy_exactness() -> CheckResult {
    let frame = TimeRange::new(0, 7 * DAY);

    for k in [2u64, 5, 17, 64] {
        let counts: Vec<u64> = vec![3; k as usize];
        let events = entropy_events(&counts);
        let point = hashtag_entropy(&events, frame, None, None)
            .ok_or_else(|| format!("uniform k={k}: no entropy point"))?;
        let expected = (k as f64).ln();
        if (point.entropy - expected).abs() > 1e-9 {
            return Err(format!(
                "uniform k={k}: {} vs ln k = {expected}",
                point.entropy
            ));
        }
        let bits = hashtag_entropy(&events, frame, None, Some(2.0))
            .ok_or_else(|| format!("uniform k={k}: no base-2 point"))?;
        if (bits.entropy - (k as f64).log2()).abs() > 1e-9 {
            return Err(format!("uniform k={k} base 2: {}", bits.entropy));
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(314159);
    for case in 0..20 {
        let k = rng.gen_range(2..30usize);
        let counts: Vec<u64> = (0..k).map(|_| rng.gen_range(1..50u64)).collect();
        let events = entropy_events(&counts);
        let point = hashtag_entropy(&events, frame, None, None)
            .ok_or_else(|| format!("skewed case {case}: no entropy point"))?;
        let expected = entropy_oracle(&counts);
        if (point.entropy - expected).abs() > 1e-12 {
            return Err(format!(
                "skewed case {case}: {} vs oracle {expected}",
                point.entropy
            ));
        }
        if point.entropy < 0.0 {
            return Err(format!("case {case}: entropy sign negative"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. Description-vector identities.

fn criterion_description_vectors(big: &BigFixture) -> CheckResult {
    let partition = detect_topics(&big.static_snap, &LouvainDetector::default())
        .map_err(|e| e.to_string())?;
    // A mid-capture frame: the fixture corpus is truncated to a fixed
    // line count, which can empty the final days.
    let frame_end = big.capture.start + 8 * WEEK;
    let frame = TimeRange::new(frame_end - 7 * DAY, frame_end);
    let um = usage_matrix(&big.events, &partition, frame, 0);
    if um.rows.len() < 100 {
        return Err(format!("fixture frame too sparse: {} users", um.rows.len()));
    }

    // Centering: the usage-weighted sum of raw deviation vectors is the
    // zero vector because the population total is the sum of the rows.
    let t1: u64 = um.total.iter().sum();
    let mut centered = vec![0.0f64; um.n_topics];
    for u in um.rows.values() {
        let u1: u64 = u.iter().sum();
        if u1 == 0 {
            continue;
        }
        for (c, (&ui, &ti)) in centered.iter_mut().zip(u.iter().zip(&um.total)) {
            *c += u1 as f64 * (ui as f64 / u1 as f64 - ti as f64 / t1 as f64);
        }
    }
    // Scale tolerance by the total so the identity is checked relative
    // to the magnitudes actually summed.
    let scale = t1 as f64;
    for (t, c) in centered.iter().enumerate() {
        if c.abs() > 1e-9 * scale {
            return Err(format!("centering component {t} = {c}"));
        }
    }

    for (user, u) in &um.rows {
        let d = description_vector(u, &um.total);
        let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 && norm.abs() > 1e-12 {
            return Err(format!("user {user}: |d| = {norm}"));
        }
        // Positive rescaling of the usage row leaves d unchanged.
        let scaled: Vec<u64> = u.iter().map(|&x| x * 3).collect();
        let d3 = description_vector(&scaled, &um.total);
        for (a, b) in d.iter().zip(&d3) {
            if (a - b).abs() > 1e-12 {
                return Err(format!("user {user}: rescaling changed d"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// CLI fixture

struct PipelineRun {
    #[allow(dead_code)]
    tempdir: tempfile::TempDir,
    dir: PathBuf,
    truth: GroundTruth,
}

impl PipelineRun {
    fn execute(scenario: &str, with_report: bool) -> PipelineRun {
        let tempdir = tempfile::tempdir().expect("tempdir");
        let dir = tempdir.path().to_path_buf();
        run_cli(&dir, &["synth", "--scenario", scenario]);
        let cfg = "results/synth/config.toml";
        let mut stages = vec![
            "ingest-summary",
            "build-graphs",
            "metrics",
            "topics",
            "similarity",
            "entropy",
            "compare",
        ];
        if with_report {
            stages.push("report");
        }
        for stage in stages {
            run_cli(&dir, &["--config", cfg, stage]);
        }
        let truth_text = std::fs::read_to_string(dir.join("results/synth/ground_truth.json"))
            .expect("ground truth");
        let truth: GroundTruth = serde_json::from_str(&truth_text).expect("ground truth json");
        PipelineRun { tempdir, dir, truth }
    }

    fn results(&self) -> PathBuf {
        self.dir.join("results")
    }
}

fn run_cli(dir: &Path, args: &[&str]) {
    let output = Command::new(env!("CARGO_BIN_EXE_tagnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn tagnet");
    assert!(
        output.status.success(),
        "tagnet {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("csv header").split(',').collect();
    lines
        .map(|line| {
            header
                .iter()
                .zip(line.split(','))
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn day_index(date: &str, capture_start: i64) -> usize {
    let ts = parse_instant(date).expect("date");
    ((ts - capture_start) / DAY) as usize
}

/// (day, value) points of one similarity pair series.
fn similarity_series(run: &PipelineRun, policy: &str, a: &str, b: &str) -> Vec<(usize, f64)> {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let path = run
        .results()
        .join(format!("similarity/{policy}/{a}__{b}.csv"));
    read_csv(&path)
        .iter()
        .map(|row| {
            (
                day_index(&row["date"], run.truth.capture_start),
                row["value"].parse::<f64>().expect("value"),
            )
        })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

// ---------------------------------------------------------------------------
// 6. Planted synchronization: excursion over 3 sigma at the scheduled
//    peak for the participating pair, no excursion for the null pair.

fn criterion_synchronization(run: &PipelineRun) -> CheckResult {
    let echo = run
        .truth
        .schedule
        .iter()
        .find(|h| h.kind == HappeningKind::Synchronization)
        .ok_or("no synchronization in schedule")?;
    let expected_peak = echo.expected_peak_day.ok_or("no expected peak day")? as i64;
    let window = (echo.start_week * 7, (echo.start_week + echo.duration_weeks) * 7);
    let (ga, gb) = (&echo.participants[0], &echo.participants[1]);

    for policy in ["rolling", "aggregated"] {
        let series = similarity_series(run, policy, ga, gb);
        let pre: Vec<f64> = series
            .iter()
            .filter(|(d, _)| *d < window.0)
            .map(|(_, v)| *v)
            .collect();
        if pre.len() < 10 {
            return Err(format!("{policy}: only {} pre-event points", pre.len()));
        }
        let (mean, std) = mean_std(&pre);
        let in_window: Vec<(usize, f64)> = series
            .iter()
            .filter(|(d, _)| *d >= window.0 && *d < window.1)
            .cloned()
            .collect();
        let (peak_day, peak) = in_window
            .iter()
            .cloned()
            .fold((0usize, f64::NEG_INFINITY), |acc, p| {
                if p.1 > acc.1 {
                    p
                } else {
                    acc
                }
            });
        if peak <= mean + 3.0 * std {
            return Err(format!(
                "{policy}: peak {peak:.3} not above {mean:.3} + 3 * {std:.3}"
            ));
        }
        if (peak_day as i64 - expected_peak).abs() > 3 {
            return Err(format!(
                "{policy}: peak day {peak_day} not within 3 of {expected_peak}"
            ));
        }

        let null_series = similarity_series(run, policy, ga, "null");
        let null_pre: Vec<f64> = null_series
            .iter()
            .filter(|(d, _)| *d < window.0)
            .map(|(_, v)| *v)
            .collect();
        let (nm, ns) = mean_std(&null_pre);
        let null_peak = null_series
            .iter()
            .filter(|(d, _)| *d >= window.0 && *d < window.1)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        if null_peak > nm + 3.0 * ns {
            return Err(format!(
                "{policy}: null pair shows excursion {null_peak:.3} over {nm:.3} + 3 * {ns:.3}"
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 7. Rolling forgetting after a planted burst; aggregated stays flatter.

fn entropy_weeks(run: &PipelineRun, policy: &str) -> Vec<(usize, f64)> {
    let path = run
        .results()
        .join(format!("entropy/topic_weekly_{policy}.csv"));
    read_csv(&path)
        .iter()
        .map(|row| {
            let ts = parse_instant(&row["date"]).expect("date") + DAY;
            let week = ((ts - run.truth.capture_start) / WEEK - 1) as usize;
            (week, row["entropy"].parse::<f64>().expect("entropy"))
        })
        .collect()
}

fn criterion_forgetting(run: &PipelineRun) -> CheckResult {
    let echo = run
        .truth
        .schedule
        .iter()
        .find(|h| h.kind == HappeningKind::BurstTopic)
        .ok_or("no burst in schedule")?;
    let burst_start = echo.start_week;
    let burst_end = echo.start_week + echo.duration_weeks;
    let window_span_weeks = 4usize;

    let rolling = entropy_weeks(run, "rolling");
    let aggregated = entropy_weeks(run, "aggregated");

    let deviation = |series: &[(usize, f64)]| -> Result<(f64, f64), String> {
        let pre: Vec<f64> = series
            .iter()
            .filter(|(w, _)| *w < burst_start)
            .map(|(_, v)| *v)
            .collect();
        if pre.is_empty() {
            return Err("no pre-burst weeks".into());
        }
        let mean = pre.iter().sum::<f64>() / pre.len() as f64;
        let max_dev = series
            .iter()
            .filter(|(w, _)| *w >= burst_start)
            .map(|(_, v)| (v - mean).abs())
            .fold(0.0f64, f64::max);
        Ok((mean, max_dev))
    };

    let (pre_mean, rolling_dev) = deviation(&rolling)?;
    let (_, aggregated_dev) = deviation(&aggregated)?;

    let recovered = rolling.iter().any(|(w, v)| {
        *w >= burst_end
            && *w <= burst_end + window_span_weeks
            && (v - pre_mean).abs() <= 0.05 * pre_mean.abs()
    });
    if !recovered {
        return Err(format!(
            "rolling entropy did not return within 5% of {pre_mean:.4} by week {}",
            burst_end + window_span_weeks
        ));
    }
    if rolling_dev <= 0.0 {
        return Err("no rolling excursion at all".into());
    }
    if aggregated_dev >= rolling_dev {
        return Err(format!(
            "aggregated deviation {aggregated_dev:.4} not smaller than rolling {rolling_dev:.4}"
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 8. Policy divergence: the participating pair has the lowest
//    rolling-vs-aggregated correlation, below 0.5; every other pair
//    stays at or above 0.7.

fn criterion_divergence(run: &PipelineRun) -> CheckResult {
    let echo = run
        .truth
        .schedule
        .iter()
        .find(|h| h.kind == HappeningKind::TopicMergeDivergence)
        .ok_or("no merge divergence in schedule")?;
    let mut pair: Vec<&str> = echo.participants.iter().map(String::as_str).collect();
    pair.sort();

    let rows = read_csv(&run.results().join("compare/rolling_vs_aggregated.csv"));
    let mut planted_r = None;
    let mut min_cell: Option<(String, String, f64)> = None;
    for row in &rows {
        let r: f64 = row["r"].parse().map_err(|_| format!("bad r {:?}", row["r"]))?;
        let (a, b) = (row["group_a"].as_str(), row["group_b"].as_str());
        if min_cell.as_ref().map_or(true, |(_, _, m)| r < *m) {
            min_cell = Some((a.to_string(), b.to_string(), r));
        }
        if [a, b] == pair.as_slice() {
            planted_r = Some(r);
        } else if r < 0.7 {
            return Err(format!("non-participating pair ({a},{b}) has r = {r:.3}"));
        }
    }
    let planted_r = planted_r.ok_or("participating pair missing from matrix")?;
    if planted_r >= 0.5 {
        return Err(format!("participating pair r = {planted_r:.3} not below 0.5"));
    }
    let (ma, mb, mr) = min_cell.ok_or("empty matrix")?;
    if [ma.as_str(), mb.as_str()] != pair.as_slice() {
        return Err(format!(
            "lowest cell is ({ma},{mb}) at {mr:.3}, not the participating pair"
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 9. Supporter-rule boundary and the buzz gain-then-loss flow.

fn repost(id: usize, user: &str, target: &str) -> Event {
    Event {
        event_id: format!("r{id}"),
        timestamp: 1000 + id as i64,
        user_id: user.to_string(),
        kind: EventKind::Repost,
        repost_of_user: Some(target.to_string()),
        hashtags: BTreeSet::new(),
        location_tag: Some("fr".into()),
    }
}

fn criterion_supporter_rule(run: &PipelineRun) -> CheckResult {
    let anchors = vec![
        Anchor {
            account_id: "accA".into(),
            family: AnchorFamily::Candidate,
            label: "A".into(),
        },
        Anchor {
            account_id: "accB".into(),
            family: AnchorFamily::Candidate,
            label: "B".into(),
        },
    ];
    let capture = TimeRange::new(0, WEEK);

    // Exactly 75%: 3 of 4 reposts. The threshold is inclusive.
    let mut events: Vec<Event> = (0..3).map(|i| repost(i, "u_at", "accA")).collect();
    events.push(repost(3, "u_at", "accB"));
    // 74.9%: 749 of 1000 reposts.
    events.extend((10..759).map(|i| repost(i, "u_below", "accA")));
    events.extend((759..1010).map(|i| repost(i, "u_below", "accB")));
    events.sort_by_key(|e| e.timestamp);

    let assignment = assign_groups(
        &events,
        &anchors,
        0.75,
        AssignmentMode::StaticWholePeriod,
        capture,
    )
    .map_err(|e| e.to_string())?;
    let members = assignment.static_members();
    let group_a = members.get("A").cloned().unwrap_or_default();
    if !group_a.contains("u_at") {
        return Err("user at exactly 75% share was not labeled".into());
    }
    if group_a.contains("u_below") || members.values().flatten().any(|u| u == "u_below") {
        return Err("user at 74.9% share was labeled".into());
    }

    // Buzz artifact: under weekly assignment the flooded anchor gains
    // members in the buzz week and loses them again within two weeks.
    let echo = run
        .truth
        .schedule
        .iter()
        .find(|h| h.kind == HappeningKind::Buzz)
        .ok_or("no buzz in schedule")?;
    let target = echo.target_anchor.as_deref().ok_or("buzz without target")?;
    let corpus_anchors =
        load_anchors(&run.results().join("synth/anchors.jsonl")).map_err(|e| e.to_string())?;
    let buzzed_label = corpus_anchors
        .iter()
        .find(|a| a.account_id == target)
        .map(|a| a.label.clone())
        .ok_or("buzz target not among anchors")?;

    let flows = read_csv(&run.results().join("ingest/flows_media.csv"));
    let gain = flows.iter().find(|row| {
        row["to"] == buzzed_label
            && row["week"]
                .parse::<usize>()
                .map_or(false, |w| w >= echo.start_week && w < echo.start_week + 2)
    });
    let gain_week: usize = gain
        .ok_or(format!("no flow into {buzzed_label} around week {}", echo.start_week))?
        ["week"]
        .parse()
        .expect("week");
    let loss = flows.iter().any(|row| {
        row["from"] == buzzed_label
            && row["week"]
                .parse::<usize>()
                .map_or(false, |w| w > gain_week && w <= gain_week + 2)
    });
    if !loss {
        return Err(format!(
            "no flow out of {buzzed_label} within 2 weeks of the week-{gain_week} gain"
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 10. Determinism: two full pipeline runs produce byte-identical trees.

fn collect_files(root: &Path, base: &Path, out: &mut Vec<PathBuf>) {
    for entry in std::fs::read_dir(root).expect("read_dir") {
        let path = entry.expect("dir entry").path();
        if path.is_dir() {
            collect_files(&path, base, out);
        } else {
            out.push(path.strip_prefix(base).expect("prefix").to_path_buf());
        }
    }
}

fn criterion_determinism(a: &PipelineRun, b: &PipelineRun) -> CheckResult {
    let (ra, rb) = (a.results(), b.results());
    let mut files_a = Vec::new();
    let mut files_b = Vec::new();
    collect_files(&ra, &ra, &mut files_a);
    collect_files(&rb, &rb, &mut files_b);
    files_a.sort();
    files_b.sort();
    if files_a != files_b {
        return Err(format!(
            "file trees differ: {} vs {} files",
            files_a.len(),
            files_b.len()
        ));
    }
    for rel in &files_a {
        let bytes_a = std::fs::read(ra.join(rel)).expect("read run a");
        let bytes_b = std::fs::read(rb.join(rel)).expect("read run b");
        if bytes_a != bytes_b {
            return Err(format!("artifact {} differs between runs", rel.display()));
        }
    }
    if files_a.is_empty() {
        return Err("no artifacts produced".into());
    }
    Ok(())
}
