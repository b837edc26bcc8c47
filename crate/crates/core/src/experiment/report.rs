//! CSV tables, JSON archives and SVG plots for run records.
//!
//! Each record yields `<stem>.csv` and `<stem>.json`, plus `<stem>.svg` when
//! there is something to draw. Every CSV row begins with the schema tag
//! (`<kind>/v<SCHEMA_VERSION>`) and the configuration hash; column order is
//! fixed per kind and never depends on the run. Timestamps appear in the JSON
//! archive only.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::runs::{PhiStudy, ShapeStudy};
use super::{ExperimentKind, RunRecord, RunResults, SCHEMA_VERSION};
use crate::geometry::{polygons_svg, NormEvaluator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

fn axis_columns(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

/// Column names of the CSV table for `kind` in dimension `d`.
pub fn csv_header(kind: ExperimentKind, d: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["schema".into(), "config_hash".into()];
    let fixed: &[&str] = match kind {
        ExperimentKind::Sample => &[
            "seed",
            "half_width",
            "margin",
            "edges",
            "open",
            "open_fraction",
            "origin_cluster_size",
            "origin_reaches_boundary",
            "largest_cluster_size",
            "cluster_count",
        ],
        ExperimentKind::Theta => &[
            "d",
            "p",
            "theta_hat",
            "ci_radius",
            "replicates",
            "density_hat",
            "density_ci_radius",
        ],
        ExperimentKind::Beta => {
            h.extend(axis_columns("v", d));
            &["beta_hat", "ci_radius", "n", "h", "replicates"]
        }
        ExperimentKind::Wulff => {
            h.push("face".into());
            h.extend(axis_columns("u", d));
            &["measure", "beta", "theta", "energy", "constant"]
        }
        ExperimentKind::Phi | ExperimentKind::Convergence => &[
            "n",
            "accepted",
            "rejected",
            "mean_scaled",
            "ci_radius",
            "median_scaled",
            "constant",
            "gap",
        ],
        ExperimentKind::Shape => &[
            "n",
            "accepted",
            "rejected",
            "median_distance",
            "mean_distance",
            "ci_radius",
        ],
    };
    h.extend(fixed.iter().map(|s| s.to_string()));
    h
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn rows(rec: &RunRecord) -> Result<Vec<Vec<String>>> {
    let c = &rec.config;
    Ok(match &rec.results {
        RunResults::Sample(s) => vec![vec![
            s.seed.to_string(),
            s.half_width.to_string(),
            s.margin.to_string(),
            s.edges.to_string(),
            s.open.to_string(),
            num(s.open_fraction),
            s.origin_cluster_size.to_string(),
            s.origin_reaches_boundary.to_string(),
            s.largest_cluster_size.to_string(),
            s.cluster_count.to_string(),
        ]],
        RunResults::Theta(t) => vec![vec![
            c.d.to_string(),
            num(c.p),
            num(t.theta_hat),
            num(t.ci_radius),
            t.replicates.to_string(),
            num(t.density_hat),
            num(t.density_ci_radius),
        ]],
        RunResults::Beta(table) => table
            .rows
            .iter()
            .map(|r| {
                let mut row: Vec<String> = r.direction.iter().map(|&x| num(x)).collect();
                row.extend([
                    num(r.beta_hat),
                    num(r.ci_radius),
                    r.n.to_string(),
                    num(r.h),
                    r.replicates.to_string(),
                ]);
                row
            })
            .collect(),
        RunResults::Wulff(cal) => {
            let eval = NormEvaluator::new(&cal.norm, c.norm.interpolate)?;
            cal.wulff
                .polytope
                .faces
                .iter()
                .enumerate()
                .map(|(i, f)| -> Result<Vec<String>> {
                    let mut row = vec![i.to_string()];
                    row.extend(f.normal.iter().map(|&x| num(x)));
                    row.extend([
                        num(f.measure),
                        num(eval.eval(&f.normal)?),
                        num(cal.theta.value),
                        num(cal.constant.energy),
                        num(cal.constant.ratio),
                    ]);
                    Ok(row)
                })
                .collect::<Result<_>>()?
        }
        RunResults::Phi(study) | RunResults::Convergence(study) => {
            let constant = constant_of(study);
            study
                .summary
                .iter()
                .map(|s| {
                    vec![
                        s.n.to_string(),
                        s.accepted.to_string(),
                        s.rejected.to_string(),
                        num(s.mean_scaled),
                        num(s.ci_radius),
                        num(s.median_scaled),
                        opt(constant),
                        opt(s.gap),
                    ]
                })
                .collect()
        }
        RunResults::Shape(study) => study
            .summary
            .iter()
            .map(|s| {
                vec![
                    s.n.to_string(),
                    s.accepted.to_string(),
                    s.rejected.to_string(),
                    num(s.median_distance),
                    num(s.mean_distance),
                    num(s.ci_radius),
                ]
            })
            .collect(),
    })
}

fn constant_of(study: &PhiStudy) -> Option<f64> {
    study.trend.as_ref()?;
    study.calibration.as_ref().map(|c| c.constant.ratio)
}

/// The record's CSV table.
pub fn write_csv(rec: &RunRecord, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header = csv_header(rec.kind(), rec.config.d);
    out.write_record(&header)?;
    let schema = format!("{}/v{SCHEMA_VERSION}", rec.kind().as_str());
    for row in rows(rec)? {
        let mut full = vec![schema.clone(), rec.config_hash.clone()];
        full.extend(row);
        debug_assert_eq!(full.len(), header.len());
        out.write_record(&full)?;
    }
    out.flush()?;
    Ok(())
}

/// Mean `n phi_n` against `n` with 95% bars, and a dashed horizontal line at
/// the constant when there is one.
pub fn convergence_svg(study: &PhiStudy) -> String {
    let (w, h, m) = (480.0, 320.0, 40.0);
    let pts: Vec<(f64, f64, f64)> = study
        .summary
        .iter()
        .filter(|s| s.accepted > 0)
        .map(|s| (s.n as f64, s.mean_scaled, s.ci_radius))
        .collect();
    let constant = constant_of(study);
    let nmax = pts.iter().map(|p| p.0).fold(1.0, f64::max) * 1.1;
    let mut lo = pts.iter().map(|p| p.1 - p.2).chain(constant).fold(f64::INFINITY, f64::min);
    let mut hi = pts.iter().map(|p| p.1 + p.2).chain(constant).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.1).max(1e-3);
    let (lo, hi) = (lo - pad, hi + pad);
    let sx = |x: f64| m + x / nmax * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - lo) / (hi - lo) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{m}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{y}\" stroke=\"black\"/>",
        y = h - m,
        x = w - m
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"12\">n</text>", w - m + 8.0, h - m + 4.0);
    let _ = writeln!(s, "<text x=\"4\" y=\"{}\" font-size=\"12\">n phi_n</text>", m - 12.0);
    for &(n, _, _) in &pts {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{n}</text>",
            sx(n),
            h - m + 14.0
        );
    }
    if let Some(c) = constant {
        let _ = writeln!(
            s,
            "<line class=\"asymptote\" data-value=\"{c}\" x1=\"{m}\" y1=\"{y:.2}\" x2=\"{x}\" y2=\"{y:.2}\" stroke=\"#e0584b\" stroke-dasharray=\"6 4\"/>\n<text x=\"{x}\" y=\"{ty:.2}\" font-size=\"11\" text-anchor=\"end\" fill=\"#e0584b\">I(W) = {c:.4}</text>",
            y = sy(c),
            x = w - m,
            ty = sy(c) - 4.0
        );
    }
    let line: Vec<String> = pts.iter().map(|&(n, v, _)| format!("{:.2},{:.2}", sx(n), sy(v))).collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#3a6fd8\"/>",
        line.join(" ")
    );
    for &(n, v, ci) in &pts {
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#3a6fd8\"/>\n<circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#3a6fd8\"/>",
            sy(v - ci),
            sy(v + ci),
            sy(v),
            x = sx(n)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn svg_of(rec: &RunRecord) -> Option<String> {
    match &rec.results {
        RunResults::Phi(study) | RunResults::Convergence(study) => Some(convergence_svg(study)),
        RunResults::Shape(ShapeStudy { overlay_svg, .. }) => overlay_svg.clone(),
        RunResults::Wulff(cal) if cal.wulff.polytope.d == 2 => {
            Some(polygons_svg(&[(&cal.wulff.polytope, "#3a6fd8")], 320.0))
        }
        _ => None,
    }
}

/// Writes the artifacts of every record into `out`, creating it if needed,
/// and returns the paths written.
pub fn emit_report(records: &[RunRecord], out: &Path, formats: Formats) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Parameter("no records to report".into()));
    }
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for rec in records {
        let stem = rec.stem();
        if formats.csv {
            let path = out.join(format!("{stem}.csv"));
            write_csv(rec, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            written.push(path);
        }
        if formats.json {
            let path = out.join(format!("{stem}.json"));
            std::fs::write(&path, serde_json::to_string_pretty(rec)?)?;
            written.push(path);
        }
        if formats.svg {
            if let Some(svg) = svg_of(rec) {
                let path = out.join(format!("{stem}.svg"));
                std::fs::write(&path, svg)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
