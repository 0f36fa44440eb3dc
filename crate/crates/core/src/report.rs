//! Vector-graphics figures rendered from the pipeline's CSV artifacts.
//!
//! Charts are plain hand-built SVG: line charts for time series, bars
//! for histograms, and a colored grid for correlation matrices. No
//! styling dependencies, so output is deterministic byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 40.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Multi-series line chart with a shared x axis.
pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let mut svg = svg_header(title);
    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (x0, mut x1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| {
            (a.min(x), b.max(x))
        });
    let (mut y0, mut y1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, y)| {
            (a.min(y), b.max(y))
        });
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_T + plot_h - (y - y0) / (y1 - y0) * plot_h;

    writeln!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>"
    )
    .unwrap();
    for (v, anchor, x, y) in [
        (y1, "end", MARGIN_L - 6.0, MARGIN_T + 5.0),
        (y0, "end", MARGIN_L - 6.0, MARGIN_T + plot_h),
    ] {
        writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>",
            fmt_num(v)
        )
        .unwrap();
    }
    for (v, x) in [(x0, MARGIN_L), (x1, MARGIN_L + plot_w)] {
        writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>",
            HEIGHT - MARGIN_B + 16.0,
            fmt_num(v)
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 6.0,
        escape(x_label)
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                px(x),
                py(y)
            )
            .unwrap();
        } else if !s.points.is_empty() {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.join(" ")
            )
            .unwrap();
        }
        let ly = MARGIN_T + 14.0 * i as f64 + 10.0;
        writeln!(
            svg,
            "<line x1=\"{0}\" y1=\"{ly}\" x2=\"{1}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n<text x=\"{2}\" y=\"{3}\" font-family=\"sans-serif\" \
             font-size=\"11\">{4}</text>",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 30.0,
            WIDTH - MARGIN_R + 36.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

/// Vertical bar chart for categorical counts.
pub fn bar_chart(title: &str, x_label: &str, bars: &[(String, f64)]) -> String {
    let mut svg = svg_header(title);
    if bars.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let max = bars.iter().map(|&(_, v)| v).fold(0.0f64, f64::max).max(1e-12);
    let bw = plot_w / bars.len() as f64;
    writeln!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>"
    )
    .unwrap();
    for (i, (label, v)) in bars.iter().enumerate() {
        let h = v / max * (plot_h - 10.0);
        let x = MARGIN_L + i as f64 * bw + bw * 0.15;
        let y = MARGIN_T + plot_h - h;
        writeln!(
            svg,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{h:.2}\" \
             fill=\"#1f77b4\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
             font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            bw * 0.7,
            MARGIN_L + i as f64 * bw + bw / 2.0,
            HEIGHT - MARGIN_B + 14.0,
            escape(label)
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>\n<text x=\"{}\" y=\"{}\" text-anchor=\"end\" \
         font-family=\"sans-serif\" font-size=\"11\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 6.0,
        escape(x_label),
        MARGIN_L - 6.0,
        MARGIN_T + 5.0,
        fmt_num(max)
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

/// Correlation grid: one labeled cell per group pair, red below the
/// highlight threshold, blue above, gray when absent.
pub fn correlation_grid(
    title: &str,
    cells: &[(String, Option<f64>, bool)],
) -> String {
    let mut svg = svg_header(title);
    if cells.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let plot_w = WIDTH - MARGIN_L - 40.0;
    let ch = ((HEIGHT - MARGIN_T - MARGIN_B) / cells.len() as f64).min(32.0);
    for (i, (label, r, highlighted)) in cells.iter().enumerate() {
        let y = MARGIN_T + i as f64 * ch;
        let fill = match (r, highlighted) {
            (None, _) => "#cccccc".to_string(),
            (Some(_), true) => "#d62728".to_string(),
            (Some(v), false) => {
                // Deeper blue for stronger agreement.
                let shade = (200.0 - v.abs().min(1.0) * 150.0) as u8;
                format!("#{shade:02x}{shade:02x}ff")
            }
        };
        writeln!(
            svg,
            "<rect x=\"{MARGIN_L}\" y=\"{y:.2}\" width=\"{plot_w}\" height=\"{:.2}\" \
             fill=\"{fill}\" stroke=\"white\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" \
             font-family=\"sans-serif\" font-size=\"12\" fill=\"white\">{} : {}</text>",
            ch - 2.0,
            MARGIN_L + 8.0,
            y + ch / 2.0 + 4.0,
            escape(label),
            r.map(|v| format!("r={v:.3}")).unwrap_or_else(|| "absent".into())
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// CSV plumbing (our own artifacts: no quoting, header on line one)

pub fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column_index(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

/// Extract an (x, y) series from CSV columns; ISO dates on the x column
/// become day numbers, non-numeric y cells are skipped.
pub fn csv_series(text: &str, x_col: &str, y_col: &str) -> Vec<(f64, f64)> {
    let rows = parse_csv(text);
    let Some(header) = rows.first() else {
        return Vec::new();
    };
    let (Some(xi), Some(yi)) = (column_index(header, x_col), column_index(header, y_col)) else {
        return Vec::new();
    };
    rows[1..]
        .iter()
        .filter_map(|row| {
            let x_raw = row.get(xi)?;
            let x = x_raw.parse::<f64>().ok().or_else(|| {
                NaiveDate::parse_from_str(x_raw, "%Y-%m-%d")
                    .ok()
                    .map(|d| d.num_days_from_ce() as f64)
            })?;
            let y = row.get(yi)?.parse::<f64>().ok()?;
            Some((x, y))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Figure bundle

/// Render every known CSV artifact under `results_dir` into SVG figures
/// in `results_dir/report`. Errors when nothing is renderable.
pub fn build_report(results_dir: &Path) -> Result<Vec<PathBuf>> {
    let out_dir = results_dir.join("report");
    let mut produced = Vec::new();
    let mut figures: Vec<(String, String)> = Vec::new();

    let read = |p: PathBuf| std::fs::read_to_string(p).ok();

    if let Some(text) = read(results_dir.join("ingest/histogram.csv")) {
        let rows = parse_csv(&text);
        let bars: Vec<(String, f64)> = rows[1..]
            .iter()
            .filter_map(|r| Some((r.first()?.clone(), r.get(1)?.parse().ok()?)))
            .collect();
        figures.push((
            "hashtags_per_event.svg".into(),
            bar_chart("Hashtags per event", "hashtags", &bars),
        ));
    }

    for policy in ["rolling", "aggregated", "static"] {
        if let Some(text) = read(results_dir.join(format!("metrics/{policy}/metrics.csv"))) {
            let series: Vec<Series> = ["n_nodes", "n_edges", "density", "clustering_standard"]
                .iter()
                .map(|col| Series {
                    label: col.to_string(),
                    points: csv_series(&text, "week", col),
                })
                .filter(|s| !s.points.is_empty())
                .collect();
            if !series.is_empty() {
                figures.push((
                    format!("metrics_{policy}.svg"),
                    line_chart(&format!("Snapshot metrics ({policy})"), "week", &series),
                ));
            }
        }
        if let Some(text) = read(results_dir.join(format!("metrics/{policy}/persistence.csv"))) {
            let series: Vec<Series> = ["node_retention", "node_renewal"]
                .iter()
                .map(|col| Series {
                    label: col.to_string(),
                    points: csv_series(&text, "week", col),
                })
                .filter(|s| !s.points.is_empty())
                .collect();
            if !series.is_empty() {
                figures.push((
                    format!("persistence_{policy}.svg"),
                    line_chart(&format!("Node persistence ({policy})"), "week", &series),
                ));
            }
        }
        let sim_dir = results_dir.join(format!("similarity/{policy}"));
        if let Ok(entries) = std::fs::read_dir(&sim_dir) {
            let mut names: Vec<String> = entries
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with(".csv"))
                .collect();
            names.sort();
            let series: Vec<Series> = names
                .iter()
                .filter_map(|n| {
                    let text = read(sim_dir.join(n))?;
                    Some(Series {
                        label: n.trim_end_matches(".csv").replace("__", " vs "),
                        points: csv_series(&text, "date", "value"),
                    })
                })
                .filter(|s| !s.points.is_empty())
                .collect();
            if !series.is_empty() {
                figures.push((
                    format!("similarity_{policy}.svg"),
                    line_chart(
                        &format!("Cross-group attention similarity ({policy})"),
                        "day",
                        &series,
                    ),
                ));
            }
        }
        if let Some(text) =
            read(results_dir.join(format!("entropy/topic_weekly_{policy}.csv")))
        {
            let points = csv_series(&text, "date", "entropy");
            if !points.is_empty() {
                figures.push((
                    format!("topic_entropy_{policy}.svg"),
                    line_chart(
                        &format!("Weekly topic entropy ({policy})"),
                        "day",
                        &[Series {
                            label: "entropy".into(),
                            points,
                        }],
                    ),
                ));
            }
        }
    }

    if let Some(text) = read(results_dir.join("entropy/hashtag_daily.csv")) {
        let points = csv_series(&text, "date", "entropy");
        if !points.is_empty() {
            figures.push((
                "hashtag_entropy.svg".into(),
                line_chart(
                    "Daily hashtag entropy",
                    "day",
                    &[Series {
                        label: "entropy".into(),
                        points,
                    }],
                ),
            ));
        }
    }

    if let Some(text) = read(results_dir.join("compare/rolling_vs_aggregated.csv")) {
        let rows = parse_csv(&text);
        let cells: Vec<(String, Option<f64>, bool)> = rows[1..]
            .iter()
            .filter_map(|r| {
                Some((
                    format!("{} / {}", r.first()?, r.get(1)?),
                    r.get(3)?.parse::<f64>().ok(),
                    r.get(4)? == "true",
                ))
            })
            .collect();
        if !cells.is_empty() {
            figures.push((
                "policy_correlation.svg".into(),
                correlation_grid("Rolling vs aggregated similarity correlation", &cells),
            ));
        }
    }

    if figures.is_empty() {
        return Err(Error::MissingArtifact {
            path: results_dir.to_path_buf(),
            hint: "tagnet synth/build-graphs/metrics/similarity/entropy/compare".into(),
        });
    }
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    for (name, svg) in figures {
        let path = out_dir.join(name);
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        produced.push(path);
    }
    Ok(produced)
}
