//! Command-line pipeline driver: file-based stages over one TOML config.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use tagnet::attention::{
    daily_usage_matrices, sample_null_group, series_from_matrices, series_to_csv,
    PartitionSchedule, SimilaritySeries,
};
use tagnet::compare::{comparison_to_csv, correlation_matrix};
use tagnet::config::Config;
use tagnet::entropy::{entropy_to_csv, hashtag_entropy_series, topic_entropy_series};
use tagnet::event::Event;
use tagnet::graph::{
    build_snapshot_series, export_snapshot, final_aggregated_equals_static, import_snapshot,
    MemoryPolicy, PolicyKind,
};
use tagnet::ingest::{
    assign_groups, build_profiles, dataset_summary, flows_to_csv, hashtags_per_tweet_histogram,
    histogram_to_csv, load_allowlist, load_anchors, parse_events, weekly_group_flows, Anchor,
    AnchorFamily, AssignmentMode, GroupAssignment, ParseOptions,
};
use tagnet::manifest::{check_config_consistency, require_artifact, RunManifest};
use tagnet::metrics::{compute_metrics, compute_persistence, metrics_to_csv, persistence_to_csv};
use tagnet::report::build_report;
use tagnet::synth;
use tagnet::timeutil::TimeRange;
use tagnet::topics::{
    detect_series, read_partition, topic_count_series, write_partition, ExternalDetector,
    LouvainDetector, TopicDetector, TopicPartition,
};
use tagnet::{Error, Result};

const WEEK_DAYS: i64 = 7;

#[derive(Parser)]
#[command(
    name = "tagnet",
    about = "Dynamic hashtag co-occurrence networks, topics, and group attention analysis"
)]
struct Cli {
    /// TOML config file; every key is overridable via TAGNET_* env vars.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Restrict to one memory policy (rolling|aggregated|static).
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Override capture start (epoch seconds or YYYY-MM-DD).
    #[arg(long, global = true)]
    from: Option<String>,
    /// Override capture end (exclusive).
    #[arg(long, global = true)]
    to: Option<String>,
    /// Override the configured seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Proceed despite a config-hash mismatch with upstream manifests.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse events, label users, and emit dataset tables.
    IngestSummary,
    /// Build co-occurrence snapshot series per memory policy.
    BuildGraphs,
    /// Structural metrics and persistence rates from built snapshots.
    Metrics,
    /// Detect topics on each snapshot.
    Topics,
    /// Daily cross-group attention-similarity series.
    Similarity,
    /// Hashtag (daily) and topic (weekly) entropy series.
    Entropy,
    /// Pearson correlation of similarity series across policies.
    Compare,
    /// Generate a synthetic corpus with ground truth.
    Synth {
        /// Preset scenario: default, burst, or divergence.
        #[arg(long, default_value = "default")]
        scenario: String,
    },
    /// Render SVG figures from existing CSV artifacts.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Everything a stage needs: parsed config, its raw text (for hashing),
/// and the resolved artifact root.
struct Ctx {
    cfg: Config,
    cfg_text: String,
    results: PathBuf,
    force: bool,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Ctx> {
        let cfg_text = std::fs::read_to_string(&cli.config)
            .map_err(|e| Error::io(&cli.config, e))?;
        let mut cfg = Config::from_toml_str(&cfg_text, std::env::vars())?;
        if let Some(from) = &cli.from {
            cfg.capture.start = from.clone();
        }
        if let Some(to) = &cli.to {
            cfg.capture.end = to.clone();
        }
        if let Some(seed) = cli.seed {
            cfg.topics.seed = seed;
            cfg.attention.null_seed = seed;
        }
        cfg.validate()?;
        let results = cfg
            .paths
            .results
            .clone()
            .unwrap_or_else(|| PathBuf::from("results"));
        Ok(Ctx {
            cfg,
            cfg_text,
            results,
            force: cli.force,
        })
    }

    fn capture(&self) -> TimeRange {
        self.cfg.capture_range().expect("validated")
    }

    fn policies(&self, cli: &Cli) -> Result<Vec<PolicyKind>> {
        match &cli.policy {
            Some(p) => Ok(vec![PolicyKind::from_str(p)?]),
            None => Ok(vec![
                PolicyKind::RollingWindow,
                PolicyKind::GrowingAggregated,
                PolicyKind::StaticFull,
            ]),
        }
    }

    fn memory_policy(&self, kind: PolicyKind) -> MemoryPolicy {
        MemoryPolicy::with_days(
            kind,
            self.cfg.graph.baseline_days,
            self.cfg.graph.step_days,
            self.cfg.graph.window_days,
        )
    }

    fn events_path(&self) -> PathBuf {
        self.cfg
            .paths
            .events
            .clone()
            .unwrap_or_else(|| self.results.join("synth/events.jsonl"))
    }

    fn anchors_path(&self) -> PathBuf {
        self.cfg
            .paths
            .anchors
            .clone()
            .unwrap_or_else(|| self.results.join("synth/anchors.jsonl"))
    }

    fn load_events(&self) -> Result<Vec<Event>> {
        let path = self.events_path();
        require_artifact(&path, "synth")?;
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut opts = ParseOptions::new(self.capture());
        opts.sort = self.cfg.ingest.sort_events;
        opts.field_map = self.cfg.ingest.fields.clone();
        let outcome = parse_events(BufReader::new(file), &opts)?;
        Ok(outcome.events)
    }

    fn load_anchors(&self) -> Result<Vec<Anchor>> {
        let path = self.anchors_path();
        require_artifact(&path, "synth")?;
        load_anchors(&path)
    }

    fn allowlist(&self) -> Result<Option<BTreeSet<String>>> {
        match &self.cfg.paths.allowlist {
            Some(p) => Ok(Some(load_allowlist(p)?)),
            None => Ok(None),
        }
    }

    /// Guard a stage against a config that differs from the one an
    /// upstream stage ran with.
    fn guard_upstream(&self, stage_dir: &Path) -> Result<()> {
        if let Some(warning) = check_config_consistency(stage_dir, &self.cfg_text)? {
            if self.force {
                eprintln!("warning: {warning} (continuing under --force)");
            } else {
                return Err(Error::Config(warning));
            }
        }
        Ok(())
    }

    fn stage_dir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.results.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }
}

fn policy_dir_name(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::RollingWindow => "rolling",
        PolicyKind::GrowingAggregated => "aggregated",
        PolicyKind::StaticFull => "static",
    }
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Synth { scenario } => cmd_synth(cli, scenario),
        Cmd::IngestSummary => cmd_ingest(cli),
        Cmd::BuildGraphs => cmd_build_graphs(cli),
        Cmd::Metrics => cmd_metrics(cli),
        Cmd::Topics => cmd_topics(cli),
        Cmd::Similarity => cmd_similarity(cli),
        Cmd::Entropy => cmd_entropy(cli),
        Cmd::Compare => cmd_compare(cli),
        Cmd::Report => cmd_report(cli),
    }
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(cli: &Cli, scenario: &str) -> Result<()> {
    // Synth does not need an existing config file; it writes one.
    let results = if cli.config.exists() {
        Ctx::load(cli)?.results
    } else {
        PathBuf::from("results")
    };
    let seed = cli.seed.unwrap_or(42);
    let synth_cfg = synth::preset(scenario, seed)?;
    let out = synth::generate(&synth_cfg)?;
    let dir = results.join("synth");
    synth::write_corpus(&dir, &out)?;

    // A ready-to-run pipeline config pointing at the generated corpus.
    let mut cfg = Config::default();
    cfg.capture.start = out.ground_truth.capture_start.to_string();
    cfg.capture.end = out.ground_truth.capture_end.to_string();
    cfg.paths.events = Some(dir.join("events.jsonl"));
    cfg.paths.anchors = Some(dir.join("anchors.jsonl"));
    cfg.paths.allowlist = Some(dir.join("allowlist.txt"));
    cfg.paths.results = Some(results.clone());
    cfg.topics.seed = seed;
    // Null group scaled to the corpus instead of the survey-scale 5000.
    cfg.attention.null_group_size = (out.ground_truth.n_users / 5).max(10) as usize;
    let cfg_toml =
        toml::to_string_pretty(&cfg).map_err(|e| Error::Config(format!("config render: {e}")))?;
    write_text(&dir.join("config.toml"), &cfg_toml)?;

    let synth_cfg_json = serde_json::to_string_pretty(&synth_cfg)?;
    write_text(&dir.join("synth_config.json"), &format!("{synth_cfg_json}\n"))?;

    let mut manifest = RunManifest::new("synth", &cfg_toml);
    manifest.seeds.insert("synth".into(), seed);
    for name in [
        "events.jsonl",
        "anchors.jsonl",
        "allowlist.txt",
        "ground_truth.json",
        "config.toml",
    ] {
        manifest.record_output(name, &dir.join(name))?;
    }
    manifest.save(&dir)?;
    println!(
        "synth: scenario {scenario}, {} events ({} corrupt lines), {} users -> {}",
        out.ground_truth.n_valid_lines,
        out.ground_truth.n_corrupt_lines,
        out.ground_truth.n_users,
        dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest-summary

fn cmd_ingest(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    let events = ctx.load_events()?;
    let anchors = ctx.load_anchors()?;
    let allowlist = ctx.allowlist()?;
    let capture = ctx.capture();

    let profiles = build_profiles(&events, allowlist.as_ref(), None);
    let static_assignment = assign_groups(
        &events,
        &anchors,
        ctx.cfg.ingest.threshold,
        AssignmentMode::StaticWholePeriod,
        capture,
    )?;
    let weekly_assignment = assign_groups(
        &events,
        &anchors,
        ctx.cfg.ingest.threshold,
        AssignmentMode::WeeklyUpdate,
        capture,
    )?;

    let dir = ctx.stage_dir("ingest")?;
    let summary = dataset_summary(&events, &profiles, Some(&static_assignment));
    write_text(&dir.join("summary.csv"), &summary.to_csv())?;
    write_text(
        &dir.join("histogram.csv"),
        &histogram_to_csv(&hashtags_per_tweet_histogram(&events)),
    )?;
    for (family, name) in [
        (AnchorFamily::Candidate, "flows_candidate.csv"),
        (AnchorFamily::Media, "flows_media.csv"),
    ] {
        let flows = weekly_group_flows(
            &weekly_assignment,
            family,
            ctx.cfg.ingest.flows_display_threshold,
        )?;
        write_text(&dir.join(name), &flows_to_csv(&flows))?;
    }
    let groups = static_assignment.static_members();
    let groups_json = serde_json::to_string_pretty(&groups)?;
    write_text(&dir.join("groups.json"), &format!("{groups_json}\n"))?;
    save_assignment(&dir.join("weekly_assignment.json"), &weekly_assignment)?;

    let mut manifest = RunManifest::new("ingest-summary", &ctx.cfg_text);
    manifest.record_input("events.jsonl", &ctx.events_path())?;
    for name in [
        "summary.csv",
        "histogram.csv",
        "flows_candidate.csv",
        "flows_media.csv",
        "groups.json",
        "weekly_assignment.json",
    ] {
        manifest.record_output(name, &dir.join(name))?;
    }
    manifest.save(&dir)?;
    println!(
        "ingest-summary: {} events, {} users, {} groups -> {}",
        summary.total_events,
        summary.total_users,
        summary.group_sizes.len(),
        dir.display()
    );
    Ok(())
}

fn save_assignment(path: &Path, assignment: &GroupAssignment) -> Result<()> {
    let json = serde_json::to_string_pretty(assignment)?;
    write_text(path, &format!("{json}\n"))
}

// ---------------------------------------------------------------------------
// build-graphs

fn cmd_build_graphs(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    let events = ctx.load_events()?;
    let capture = ctx.capture();
    let dir = ctx.stage_dir("graphs")?;
    ctx.guard_upstream(&dir)?;

    let mut manifest = RunManifest::new("build-graphs", &ctx.cfg_text);
    manifest.record_input("events.jsonl", &ctx.events_path())?;
    for kind in ctx.policies(cli)? {
        let policy = ctx.memory_policy(kind);
        let series = build_snapshot_series(&events, &policy, capture, ctx.cfg.graph.support)?;
        let pdir = dir.join(policy_dir_name(kind));
        std::fs::create_dir_all(&pdir).map_err(|e| Error::io(&pdir, e))?;
        for snap in &series {
            let name = format!("snapshot_{:04}.tsv", snap.week_index);
            let path = pdir.join(&name);
            export_snapshot(snap, &path)?;
            manifest.record_output(&format!("{}/{name}", policy_dir_name(kind)), &path)?;
        }
        println!(
            "build-graphs: {} -> {} snapshots",
            policy_dir_name(kind),
            series.len()
        );
    }
    // Cross-builder consistency: final aggregated == static, by content.
    let report = final_aggregated_equals_static(
        &events,
        &ctx.memory_policy(PolicyKind::GrowingAggregated),
        capture,
        ctx.cfg.graph.support,
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    write_text(&dir.join("consistency.json"), &format!("{json}\n"))?;
    manifest.record_output("consistency.json", &dir.join("consistency.json"))?;
    manifest.save(&dir)?;
    if !report.equal {
        return Err(Error::Policy(format!(
            "aggregated/static builders disagree: {:?}",
            report.diffs
        )));
    }
    Ok(())
}

fn snapshot_files(pdir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(pdir)
        .map_err(|e| Error::io(pdir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("snapshot_") && n.ends_with(".tsv"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_snapshots(ctx: &Ctx, kind: PolicyKind) -> Result<Vec<tagnet::graph::CoocSnapshot>> {
    let pdir = ctx.results.join("graphs").join(policy_dir_name(kind));
    require_artifact(&pdir, "build-graphs")?;
    snapshot_files(&pdir)?
        .iter()
        .map(|p| import_snapshot(p))
        .collect()
}

// ---------------------------------------------------------------------------
// metrics

fn cmd_metrics(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    ctx.guard_upstream(&ctx.results.join("graphs"))?;
    require_artifact(&ctx.results.join("graphs"), "build-graphs")?;
    let dir = ctx.stage_dir("metrics")?;
    let mut manifest = RunManifest::new("metrics", &ctx.cfg_text);
    for kind in ctx.policies(cli)? {
        let series = load_snapshots(&ctx, kind)?;
        let rows: Vec<_> = series.iter().map(compute_metrics).collect();
        let pdir = dir.join(policy_dir_name(kind));
        std::fs::create_dir_all(&pdir).map_err(|e| Error::io(&pdir, e))?;
        let metrics_path = pdir.join("metrics.csv");
        write_text(&metrics_path, &metrics_to_csv(kind, &rows))?;
        manifest.record_output(
            &format!("{}/metrics.csv", policy_dir_name(kind)),
            &metrics_path,
        )?;
        if series.len() >= 2 {
            let rates = compute_persistence(&series)?;
            let path = pdir.join("persistence.csv");
            write_text(&path, &persistence_to_csv(&rates))?;
            manifest.record_output(
                &format!("{}/persistence.csv", policy_dir_name(kind)),
                &path,
            )?;
        }
        println!(
            "metrics: {} -> {} snapshot rows",
            policy_dir_name(kind),
            rows.len()
        );
    }
    manifest.save(&dir)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// topics

fn make_detector(ctx: &Ctx, workdir: &Path) -> Box<dyn TopicDetector> {
    match &ctx.cfg.topics.external {
        Some(command) if !command.is_empty() => Box::new(ExternalDetector {
            command: command.clone(),
            min_topic_size: ctx.cfg.topics.min_topic_size,
            workdir: workdir.to_path_buf(),
        }),
        _ => Box::new(LouvainDetector {
            resolution: ctx.cfg.topics.resolution,
            seed: ctx.cfg.topics.seed,
            min_topic_size: ctx.cfg.topics.min_topic_size,
        }),
    }
}

fn cmd_topics(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    ctx.guard_upstream(&ctx.results.join("graphs"))?;
    require_artifact(&ctx.results.join("graphs"), "build-graphs")?;
    let dir = ctx.stage_dir("topics")?;
    let mut manifest = RunManifest::new("topics", &ctx.cfg_text);
    manifest.seeds.insert("topics".into(), ctx.cfg.topics.seed);
    for kind in ctx.policies(cli)? {
        let series = load_snapshots(&ctx, kind)?;
        let pdir = dir.join(policy_dir_name(kind));
        std::fs::create_dir_all(&pdir).map_err(|e| Error::io(&pdir, e))?;
        let detector = make_detector(&ctx, &pdir);
        let partitions = detect_series(&series, detector.as_ref())?;
        if let Some(p) = partitions.first() {
            if !manifest.detector_tags.contains(&p.detector_tag) {
                manifest.detector_tags.push(p.detector_tag.clone());
            }
        }
        for p in &partitions {
            let name = format!("week_{:04}.tsv", p.week_index);
            let path = pdir.join(&name);
            write_partition(p, &path)?;
            manifest.record_output(&format!("{}/{name}", policy_dir_name(kind)), &path)?;
        }
        let counts = topic_count_series(&partitions);
        let mut csv = String::from("week,n_topics\n");
        for (w, n) in &counts {
            csv.push_str(&format!("{w},{n}\n"));
        }
        let counts_path = pdir.join("topic_counts.csv");
        write_text(&counts_path, &csv)?;
        manifest.record_output(
            &format!("{}/topic_counts.csv", policy_dir_name(kind)),
            &counts_path,
        )?;
        println!(
            "topics: {} -> {} partitions",
            policy_dir_name(kind),
            partitions.len()
        );
    }
    manifest.save(&dir)?;
    Ok(())
}

fn load_partitions(ctx: &Ctx, kind: PolicyKind) -> Result<Vec<TopicPartition>> {
    let pdir = ctx.results.join("topics").join(policy_dir_name(kind));
    require_artifact(&pdir, "topics")?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&pdir)
        .map_err(|e| Error::io(&pdir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("week_") && n.ends_with(".tsv"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    files
        .iter()
        .enumerate()
        .map(|(k, p)| read_partition(p, k))
        .collect()
}

// ---------------------------------------------------------------------------
// similarity

fn load_groups(ctx: &Ctx) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let path = match &ctx.cfg.paths.groups {
        Some(p) => p.clone(),
        None => ctx.results.join("ingest/groups.json"),
    };
    require_artifact(&path, "ingest-summary")?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_similarity(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    for upstream in ["ingest", "topics"] {
        ctx.guard_upstream(&ctx.results.join(upstream))?;
    }
    let events = ctx.load_events()?;
    let capture = ctx.capture();
    let allowlist = ctx.allowlist()?;
    let mut groups = load_groups(&ctx)?;
    let profiles = build_profiles(&events, allowlist.as_ref(), None);
    let null_size = ctx.cfg.attention.null_group_size;
    groups.insert(
        "null".into(),
        sample_null_group(&profiles, null_size, ctx.cfg.attention.null_seed),
    );

    let dir = ctx.stage_dir("similarity")?;
    let mut manifest = RunManifest::new("similarity", &ctx.cfg_text);
    manifest
        .seeds
        .insert("null_group".into(), ctx.cfg.attention.null_seed);

    let labels: Vec<String> = groups.keys().cloned().collect();
    for kind in ctx.policies(cli)? {
        let partitions = load_partitions(&ctx, kind)?;
        let policy = ctx.memory_policy(kind);
        let schedule = PartitionSchedule::new(&partitions, &policy, capture)?;
        let matrices = daily_usage_matrices(&events, &schedule, capture)?;
        let pdir = dir.join(policy_dir_name(kind));
        std::fs::create_dir_all(&pdir).map_err(|e| Error::io(&pdir, e))?;
        let mut all_series: Vec<SimilaritySeries> = Vec::new();
        for (i, a) in labels.iter().enumerate() {
            for b in &labels[i..] {
                let series = series_from_matrices(
                    &matrices,
                    &groups,
                    (a, b),
                    kind,
                    ctx.cfg.attention.group_norm,
                )?;
                let name = format!("{a}__{b}.csv");
                let path = pdir.join(&name);
                write_text(&path, &series_to_csv(&series))?;
                manifest.record_output(&format!("{}/{name}", policy_dir_name(kind)), &path)?;
                all_series.push(series);
            }
        }
        let json = serde_json::to_string(&all_series)?;
        let series_path = pdir.join("series.json");
        write_text(&series_path, &format!("{json}\n"))?;
        manifest.record_output(
            &format!("{}/series.json", policy_dir_name(kind)),
            &series_path,
        )?;
        println!(
            "similarity: {} -> {} pair series over {} days",
            policy_dir_name(kind),
            all_series.len(),
            matrices.len()
        );
    }
    manifest.save(&dir)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// entropy

fn cmd_entropy(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    ctx.guard_upstream(&ctx.results.join("topics"))?;
    let events = ctx.load_events()?;
    let capture = ctx.capture();
    let dir = ctx.stage_dir("entropy")?;
    let mut manifest = RunManifest::new("entropy", &ctx.cfg_text);

    let daily = hashtag_entropy_series(&events, capture, None, None, ctx.cfg.entropy.log_base);
    let daily_path = dir.join("hashtag_daily.csv");
    write_text(&daily_path, &entropy_to_csv(&daily))?;
    manifest.record_output("hashtag_daily.csv", &daily_path)?;

    let baseline_weeks = (ctx.cfg.graph.baseline_days as i64 / WEEK_DAYS) as usize;
    for kind in ctx.policies(cli)? {
        let partitions = load_partitions(&ctx, kind)?;
        let series = topic_entropy_series(
            &events,
            &partitions,
            capture,
            baseline_weeks,
            ctx.cfg.graph.window_days as i64,
            kind,
            None,
            None,
            ctx.cfg.entropy.log_base,
        );
        let name = format!("topic_weekly_{}.csv", policy_dir_name(kind));
        let path = dir.join(&name);
        write_text(&path, &entropy_to_csv(&series))?;
        manifest.record_output(&name, &path)?;
        println!(
            "entropy: {} -> {} weekly points",
            policy_dir_name(kind),
            series.points.len()
        );
    }
    manifest.save(&dir)?;
    println!("entropy: {} daily points", daily.points.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// compare

fn load_series(ctx: &Ctx, kind: PolicyKind) -> Result<Vec<SimilaritySeries>> {
    let path = ctx
        .results
        .join("similarity")
        .join(policy_dir_name(kind))
        .join("series.json");
    require_artifact(&path, "similarity")?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_compare(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    ctx.guard_upstream(&ctx.results.join("similarity"))?;
    let rolling = load_series(&ctx, PolicyKind::RollingWindow)?;
    let aggregated = load_series(&ctx, PolicyKind::GrowingAggregated)?;
    let cmp = correlation_matrix(
        "rolling",
        &rolling,
        "aggregated",
        &aggregated,
        ctx.cfg.compare.highlight_threshold,
    );
    let dir = ctx.stage_dir("compare")?;
    let path = dir.join("rolling_vs_aggregated.csv");
    write_text(&path, &comparison_to_csv(&cmp))?;
    let mut manifest = RunManifest::new("compare", &ctx.cfg_text);
    manifest.record_output("rolling_vs_aggregated.csv", &path)?;
    manifest.save(&dir)?;
    let low = cmp.cells.iter().filter(|c| c.highlighted).count();
    println!(
        "compare: {} cells, {low} below threshold {}",
        cmp.cells.len(),
        cmp.highlight_threshold
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// report

fn cmd_report(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    let produced = build_report(&ctx.results)?;
    let dir = ctx.results.join("report");
    let mut manifest = RunManifest::new("report", &ctx.cfg_text);
    for path in &produced {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("figure.svg")
            .to_string();
        manifest.record_output(&name, path)?;
    }
    manifest.save(&dir)?;
    println!("report: {} figures -> {}", produced.len(), dir.display());
    Ok(())
}
