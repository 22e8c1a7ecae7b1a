//! Cross-tool statistics: distance correlation, agreement with the
//! per-document majority vote, and boxplot summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::percentile_sorted;
use crate::normalize::Normalization;
use crate::scorers::{format_f64, ScoreTable};

/// Distance correlation of two equally long samples.
///
/// Uses the double-centered pairwise distance matrices without storing
/// them, so memory is linear in `n` and time quadratic. Returns 0 when
/// either sample is constant.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::EmptyInput("distance correlation needs at least 2 points"));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let (ax, gx) = row_means(x);
    let (ay, gy) = row_means(y);
    // Per-row partial sums are collected in order and summed sequentially so
    // the result does not depend on the thread count.
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for j in 0..n {
                let a = (x[i] - x[j]).abs() - ax[i] - ax[j] + gx;
                let b = (y[i] - y[j]).abs() - ay[i] - ay[j] + gy;
                sxy += a * b;
                sxx += a * a;
                syy += b * b;
            }
            (sxy, sxx, syy)
        })
        .collect();
    let (sxy, sxx, syy) = rows
        .iter()
        .fold((0.0, 0.0, 0.0), |p, q| (p.0 + q.0, p.1 + q.1, p.2 + q.2));
    let nn = (n * n) as f64;
    let dcov2 = (sxy / nn).max(0.0);
    let dvar_x = sxx / nn;
    let dvar_y = syy / nn;
    if dvar_x <= 0.0 || dvar_y <= 0.0 {
        return Ok(0.0);
    }
    Ok((dcov2 / (dvar_x * dvar_y).sqrt()).sqrt().clamp(0.0, 1.0))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Row means of `|v_i - v_j|` via sorting, plus the grand mean.
fn row_means(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let total: f64 = v.iter().sum();
    let mut means = vec![0.0; n];
    let mut prefix = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let below = k as f64 * v[i] - prefix;
        let above = (total - prefix - v[i]) - (n - k - 1) as f64 * v[i];
        means[i] = (below + above) / n as f64;
        prefix += v[i];
    }
    let grand = means.iter().sum::<f64>() / n as f64;
    (means, grand)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcorMatrix {
    pub tools: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DcorMatrix {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(w, "tool", &self.tools, &self.values)
    }
}

pub(crate) fn write_matrix_csv<W: Write>(w: W, corner: &str, names: &[String], values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let mut header = vec![corner.to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in names.iter().zip(values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| format_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn dcor_matrix(table: &ScoreTable) -> Result<DcorMatrix> {
    let k = table.n_tools();
    if k < 2 {
        return Err(Error::TooFewTools { needed: 2, got: k });
    }
    let mut values = vec![vec![0.0; k]; k];
    #[allow(clippy::needless_range_loop)]
    for i in 0..k {
        values[i][i] = if is_constant(&table.scores[i]) { 0.0 } else { 1.0 };
        for j in i + 1..k {
            let d = distance_correlation(&table.scores[i], &table.scores[j])?;
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    Ok(DcorMatrix {
        tools: table.tools.clone(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub normalization: Normalization,
    pub tools: Vec<String>,
    pub rates: Vec<f64>,
    /// Documents that entered the rates.
    pub n_documents: usize,
    /// Documents whose vote was tied (excluded when `exclude_ties`).
    pub n_ties: usize,
    pub exclude_ties: bool,
}

/// Modal value of `votes`; ties go to the value nearest zero, then the
/// smaller value. Also reports whether the mode was tied.
pub fn majority_vote(votes: &[f64]) -> (f64, bool) {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for &v in votes {
        let v = v + 0.0;
        counts.entry(v.to_bits()).or_insert((v, 0)).1 += 1;
    }
    let top = counts.values().map(|c| c.1).max().unwrap_or(0);
    let tied: Vec<f64> = counts.values().filter(|c| c.1 == top).map(|c| c.0).collect();
    let best = tied
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)))
        .unwrap_or(0.0);
    (best, tied.len() > 1)
}

pub fn majority_agreement(table: &ScoreTable, norm: Normalization, exclude_ties: bool) -> Result<AgreementReport> {
    let k = table.n_tools();
    if k < 3 {
        return Err(Error::TooFewTools { needed: 3, got: k });
    }
    let normalized: Vec<Vec<f64>> = table.scores.iter().map(|r| norm.apply_all(r)).collect();
    let mut agree = vec![0usize; k];
    let mut used = 0usize;
    let mut ties = 0usize;
    let mut column = vec![0.0; k];
    for j in 0..table.n_docs() {
        for (c, row) in column.iter_mut().zip(&normalized) {
            *c = row[j];
        }
        let (vote, tied) = majority_vote(&column);
        if tied {
            ties += 1;
            if exclude_ties {
                continue;
            }
        }
        used += 1;
        for (a, v) in agree.iter_mut().zip(&column) {
            if *v == vote {
                *a += 1;
            }
        }
    }
    let rates = agree
        .iter()
        .map(|&a| if used == 0 { 0.0 } else { a as f64 / used as f64 })
        .collect();
    Ok(AgreementReport {
        normalization: norm,
        tools: table.tools.clone(),
        rates,
        n_documents: used,
        n_ties: ties,
        exclude_ties,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub tool: String,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest value within `q1 - 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest value within `q3 + 1.5 IQR`.
    pub whisker_high: f64,
    pub n_outliers: usize,
    pub min: f64,
    pub max: f64,
}

pub fn describe(table: &ScoreTable) -> Vec<BoxplotStats> {
    table
        .tools
        .iter()
        .zip(&table.scores)
        .filter(|(_, row)| !row.is_empty())
        .map(|(tool, row)| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let std = (row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
            let q1 = percentile_sorted(&sorted, 25.0);
            let median = percentile_sorted(&sorted, 50.0);
            let q3 = percentile_sorted(&sorted, 75.0);
            let iqr = q3 - q1;
            let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
            let inside: Vec<f64> = sorted.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence).collect();
            BoxplotStats {
                tool: tool.clone(),
                mean,
                std,
                median,
                q1,
                q3,
                whisker_low: inside.first().copied().unwrap_or(q1),
                whisker_high: inside.last().copied().unwrap_or(q3),
                n_outliers: sorted.len() - inside.len(),
                min: sorted[0],
                max: sorted[sorted.len() - 1],
            }
        })
        .collect()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heatmap with a white-to-green ramp and the value printed in each cell.
pub fn heatmap_svg(m: &DcorMatrix, title: &str) -> String {
    let k = m.tools.len();
    let cell = 48.0;
    let left = 140.0;
    let top = 40.0;
    let width = left + cell * k as f64 + 20.0;
    let height = top + cell * k as f64 + 140.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, xml_escape(title));
    for (i, row) in m.values.iter().enumerate() {
        let y = top + i as f64 * cell;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + cell / 2.0 + 4.0,
            xml_escape(&m.tools[i])
        );
        for (j, v) in row.iter().enumerate() {
            let x = left + j as f64 * cell;
            let t = v.clamp(0.0, 1.0);
            let (r, g, b) = (
                (255.0 * (1.0 - 0.9 * t)) as u8,
                (255.0 * (1.0 - 0.45 * t)) as u8,
                (255.0 * (1.0 - 0.8 * t)) as u8,
            );
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({r},{g},{b})" stroke="#999"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{v:.2}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    for (j, name) in m.tools.iter().enumerate() {
        let x = left + j as f64 * cell + cell / 2.0;
        let y = top + k as f64 * cell + 8.0;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" transform="rotate(45 {x} {y})">{}</text>"#,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal boxplots on a shared `[-1, 1]` axis.
pub fn boxplot_svg(stats: &[BoxplotStats], title: &str) -> String {
    let row_h = 30.0;
    let left = 160.0;
    let plot_w = 400.0;
    let top = 40.0;
    let height = top + row_h * stats.len() as f64 + 40.0;
    let sx = |v: f64| left + (v.clamp(-1.0, 1.0) + 1.0) / 2.0 * plot_w;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="11">"#,
        left + plot_w + 30.0
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, xml_escape(title));
    for (i, b) in stats.iter().enumerate() {
        let cy = top + i as f64 * row_h + row_h / 2.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, cy + 4.0, xml_escape(&b.tool));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{cy}" x2="{}" y2="{cy}" stroke="black"/>"#,
            sx(b.whisker_low),
            sx(b.whisker_high)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#cde" stroke="black"/>"##,
            sx(b.q1),
            cy - row_h * 0.3,
            (sx(b.q3) - sx(b.q1)).max(0.5),
            row_h * 0.6
        );
        let _ = writeln!(
            s,
            r#"<line x1="{m}" y1="{}" x2="{m}" y2="{}" stroke="black" stroke-width="2"/>"#,
            cy - row_h * 0.3,
            cy + row_h * 0.3,
            m = sx(b.median)
        );
        let _ = writeln!(s, r#"<circle cx="{}" cy="{cy}" r="3" fill="red"/>"#, sx(b.mean));
    }
    let axis_y = top + row_h * stats.len() as f64 + 10.0;
    let _ = writeln!(s, r#"<line x1="{left}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#, left + plot_w);
    for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{t}</text>"#, sx(t), axis_y + 15.0);
    }
    s.push_str("</svg>\n");
    s
}
