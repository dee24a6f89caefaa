//! The `report` command: flat CSV tables and static SVG bar charts.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use limeaudit_core::audit::{write_csv, AuditDocument, AuditReport};
use limeaudit_core::lime::FeatureRef;

use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Svg,
}

/// Features beyond this count are dropped from charts unless selected at
/// least once or declared informative.
const MAX_PLAIN_FEATURES: usize = 30;

pub fn load_document(path: &Path) -> CliResult<AuditDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data_file(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|_| {
        CliError::data_file(
            path.to_path_buf(),
            "not an audit report or proximity sweep document",
        )
    })
}

/// Renders every input file into `out_dir`, one output per input, named
/// after the input's file stem.
pub fn cmd_report(files: &[PathBuf], format: ReportFormat, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    if files.is_empty() {
        return Err(CliError::Config("no report files given".into()));
    }
    let docs = files
        .iter()
        .map(|f| load_document(f).map(|d| (f, d)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut stems = BTreeSet::new();
    for (f, _) in &docs {
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if !stems.insert(stem.clone()) {
            return Err(CliError::Config(format!("two inputs share the file name {stem:?}")));
        }
    }
    let mut out = OutputDir::open(out_dir)?;
    let mut written = Vec::new();
    for (f, doc) in &docs {
        let stem = f.file_stem().unwrap().to_string_lossy();
        let result = match format {
            ReportFormat::Csv => {
                let mut buf = Vec::new();
                write_csv(&doc.reports(), &mut buf).map_err(CliError::from)?;
                out.write_bytes(format!("{stem}.csv"), &buf)
            }
            ReportFormat::Svg => out.write_bytes(format!("{stem}.svg"), render_svg(doc).as_bytes()),
        };
        match result {
            Ok(p) => written.push(p),
            Err(e) => {
                out.discard();
                return Err(e);
            }
        }
    }
    Ok(written)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn scale_label(r: &AuditReport) -> String {
    match r.proximity_scale {
        Some(s) => format!("scale {s}"),
        None => "selection".into(),
    }
}

const SERIES_COLORS: [&str; 4] = ["#4c72b0", "#55a868", "#8172b2", "#937860"];
const INFORMATIVE_COLOR: &str = "#c44e52";

/// Grouped bar chart: one group per feature, one bar per report (scale).
/// Bars of informative features are tinted; every scale after the first is
/// hatched.
pub fn render_svg(doc: &AuditDocument) -> String {
    let reports = doc.reports();
    let first = reports[0];
    let informative: BTreeSet<&FeatureRef> = first.informative.iter().flatten().collect();

    let mut features: Vec<(&FeatureRef, &str)> = first.features.iter().map(|f| (&f.feature, f.name.as_str())).collect();
    for r in &reports[1..] {
        for f in &r.features {
            if !features.iter().any(|(g, _)| *g == &f.feature) {
                features.push((&f.feature, &f.name));
            }
        }
    }
    if features.len() > MAX_PLAIN_FEATURES {
        features.retain(|(f, _)| informative.contains(f) || reports.iter().any(|r| r.probability_of(f) > 0.0));
    }

    let n_series = reports.len();
    let bar_w = 16.0;
    let group_w = bar_w * n_series as f64 + 12.0;
    let (left, top, plot_h, bottom) = (60.0, 50.0, 260.0, 110.0);
    let plot_w = (group_w * features.len() as f64).max(200.0);
    let legend_w = 170.0;
    let width = left + plot_w + 20.0 + legend_w;
    let height = top + plot_h + bottom;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    s.push_str("<defs>\n");
    for (i, color) in SERIES_COLORS.iter().chain([&INFORMATIVE_COLOR]).enumerate() {
        let _ = writeln!(
            s,
            r#"<pattern id="hatch{i}" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)"><rect width="6" height="6" fill="white"/><rect width="3" height="6" fill="{color}"/></pattern>"#
        );
    }
    s.push_str("</defs>\n");
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="22" font-size="14">{} (T = {}, K = {})</text>"#,
        escape(&first.target_id),
        first.trials,
        first.k
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">selection probability</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = top + plot_h * (1.0 - v);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            left + plot_w,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="black"/><line x1="{left}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        top + plot_h,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );

    for (g, (feature, name)) in features.iter().enumerate() {
        let x0 = left + g as f64 * group_w + 6.0;
        let is_inf = informative.contains(feature);
        for (k, r) in reports.iter().enumerate() {
            let p = r.probability_of(feature);
            let h = plot_h * p;
            let x = x0 + k as f64 * bar_w;
            let fill = match (is_inf, k) {
                (true, 0) => INFORMATIVE_COLOR.to_string(),
                (true, _) => format!("url(#hatch{})", SERIES_COLORS.len()),
                (false, 0) => SERIES_COLORS[0].to_string(),
                (false, k) => format!("url(#hatch{})", k % SERIES_COLORS.len()),
            };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{fill}" stroke="black" stroke-width="0.5"><title>{} {}: {p}</title></rect>"#,
                top + plot_h - h,
                bar_w - 2.0,
                escape(name),
                escape(&scale_label(r))
            );
        }
        let cx = x0 + bar_w * n_series as f64 / 2.0;
        let ly = top + plot_h + 14.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {cx:.1} {ly:.1})">{}</text>"#,
            escape(name)
        );
    }

    let lx = left + plot_w + 20.0;
    let mut ly = top;
    for (k, r) in reports.iter().enumerate() {
        let fill = if k == 0 {
            SERIES_COLORS[0].to_string()
        } else {
            format!("url(#hatch{})", k % SERIES_COLORS.len())
        };
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{ly:.1}" width="12" height="12" fill="{fill}" stroke="black" stroke-width="0.5"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            ly + 10.0,
            escape(&scale_label(r))
        );
        ly += 18.0;
    }
    if !informative.is_empty() {
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{ly:.1}" width="12" height="12" fill="{INFORMATIVE_COLOR}" stroke="black" stroke-width="0.5"/><text x="{:.1}" y="{:.1}">informative feature</text>"#,
            lx + 18.0,
            ly + 10.0
        );
    }
    s.push_str("</svg>\n");
    s
}
