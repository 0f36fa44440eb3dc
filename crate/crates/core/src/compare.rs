//! Cross-method comparison of similarity time series.
//!
//! Series produced under different memory policies (or detectors) are
//! aligned on their common dates and summarized by Pearson correlation,
//! one coefficient per group pair, arranged as a labeled matrix.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::attention::SimilaritySeries;
use crate::error::{Error, Result};

/// Pearson correlation of two equal-length samples. `None` when either
/// side has zero variance or fewer than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct CellComparison {
    pub group_a: String,
    pub group_b: String,
    pub n_common: usize,
    /// Absent when variance vanished on one side or the pair could not
    /// be aligned.
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// True when `r` fell below the configured highlight threshold.
    pub highlighted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodComparison {
    pub method_a: String,
    pub method_b: String,
    pub highlight_threshold: f64,
    pub cells: Vec<CellComparison>,
}

/// Inner-join two series on day index and correlate their values.
pub fn align_and_correlate(a: &SimilaritySeries, b: &SimilaritySeries) -> Result<(usize, Option<f64>)> {
    let bmap: BTreeMap<usize, f64> = b.points.iter().map(|p| (p.day, p.value)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &a.points {
        if let Some(&v) = bmap.get(&p.day) {
            xs.push(p.value);
            ys.push(v);
        }
    }
    if xs.len() < 2 {
        return Err(Error::TooFewCommonDates(xs.len()));
    }
    Ok((xs.len(), pearson(&xs, &ys)))
}

/// Correlate every group pair of `series_a` with its counterpart in
/// `series_b`. Pairs missing on either side, or with too few common
/// dates, become absent cells with a note rather than failing the grid.
pub fn correlation_matrix(
    method_a: &str,
    series_a: &[SimilaritySeries],
    method_b: &str,
    series_b: &[SimilaritySeries],
    highlight_threshold: f64,
) -> MethodComparison {
    let index_b: BTreeMap<(&str, &str), &SimilaritySeries> = series_b
        .iter()
        .map(|s| ((s.group_a.as_str(), s.group_b.as_str()), s))
        .collect();
    let mut cells = Vec::new();
    for sa in series_a {
        let mut cell = CellComparison {
            group_a: sa.group_a.clone(),
            group_b: sa.group_b.clone(),
            n_common: 0,
            r: None,
            note: None,
            highlighted: false,
        };
        match index_b.get(&(sa.group_a.as_str(), sa.group_b.as_str())) {
            None => cell.note = Some(format!("pair absent under {method_b}")),
            Some(sb) => match align_and_correlate(sa, sb) {
                Ok((n, r)) => {
                    cell.n_common = n;
                    cell.r = r;
                    if r.is_none() {
                        cell.note = Some("zero variance on one side".into());
                    }
                    cell.highlighted = r.map(|v| v < highlight_threshold).unwrap_or(false);
                }
                Err(Error::TooFewCommonDates(found)) => {
                    cell.n_common = found;
                    cell.note = Some(format!("{found} common dates, 2 needed"));
                }
                Err(e) => cell.note = Some(e.to_string()),
            },
        }
        cells.push(cell);
    }
    MethodComparison {
        method_a: method_a.to_string(),
        method_b: method_b.to_string(),
        highlight_threshold,
        cells,
    }
}

pub fn comparison_to_csv(cmp: &MethodComparison) -> String {
    let mut out = String::from("group_a,group_b,n_common,r,highlighted,note\n");
    for c in &cmp.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.group_a,
            c.group_b,
            c.n_common,
            c.r.map(|r| r.to_string()).unwrap_or_default(),
            c.highlighted,
            c.note.as_deref().unwrap_or("")
        ));
    }
    out
}
