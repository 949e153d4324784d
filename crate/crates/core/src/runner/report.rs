//! Static SVG plots and a markdown summary rendered from `metrics.json`.
//! Every plot is accompanied by a CSV holding exactly the plotted numbers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::evaluate::{density_grid, headline, Metrics};
use super::prepare::{saliency_bin, write_text, SALIENCY_BINS};
use crate::eval::{AnswerType, ProductionProfile};
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#bab0ac",
];

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Svg {
        Svg {
            body: String::new(),
            width,
            height,
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64) {
        let _ = writeln!(
            self.body,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#333" stroke-width="1"/>"##
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            p.join(" ")
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let esc = s
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" font-family="sans-serif" text-anchor="{anchor}">{esc}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn axes(svg: &mut Svg, title: &str, x_label: &str, y_label: &str) {
    let (w, h) = (svg.width, svg.height);
    svg.line(MARGIN, h - MARGIN, w - MARGIN / 2.0, h - MARGIN);
    svg.line(MARGIN, MARGIN / 2.0, MARGIN, h - MARGIN);
    svg.text(w / 2.0, 18.0, title, "middle", 14.0);
    svg.text(w / 2.0, h - 10.0, x_label, "middle", 12.0);
    svg.text(12.0, h / 2.0, y_label, "start", 12.0);
}

/// Test-character counts per saliency bin.
pub fn saliency_histogram(saliency: &[f64]) -> [usize; SALIENCY_BINS] {
    let mut bins = [0usize; SALIENCY_BINS];
    for &s in saliency {
        bins[saliency_bin(s)] += 1;
    }
    bins
}

fn plot_saliency(metrics: &Metrics) -> (String, String) {
    let bins = saliency_histogram(&metrics.saliency);
    let mut csv = String::from("bin_start,bin_end,count\n");
    let mut svg = Svg::new(WIDTH, HEIGHT);
    axes(
        &mut svg,
        "Saliency of test phonetic radicals",
        "saliency",
        "count",
    );
    let max = *bins.iter().max().unwrap_or(&1).max(&1) as f64;
    let plot_w = WIDTH - 1.5 * MARGIN;
    let plot_h = HEIGHT - 1.5 * MARGIN;
    let bw = plot_w / SALIENCY_BINS as f64;
    for (k, &c) in bins.iter().enumerate() {
        let lo = k as f64 / SALIENCY_BINS as f64;
        let hi = (k + 1) as f64 / SALIENCY_BINS as f64;
        let _ = writeln!(csv, "{lo},{hi},{c}");
        let bh = plot_h * c as f64 / max;
        svg.rect(
            MARGIN + k as f64 * bw + 1.0,
            HEIGHT - MARGIN - bh,
            bw - 2.0,
            bh,
            PALETTE[0],
        );
        svg.text(
            MARGIN + k as f64 * bw,
            HEIGHT - MARGIN + 14.0,
            &format!("{lo:.1}"),
            "middle",
            10.0,
        );
    }
    svg.text(
        MARGIN - 4.0,
        MARGIN / 2.0 + 4.0,
        &format!("{max}"),
        "end",
        10.0,
    );
    (svg.finish(), csv)
}

fn plot_overlap(metrics: &Metrics) -> (String, String) {
    let grid = density_grid();
    let mut csv = String::from("series,overlap,density\n");
    let mut svg = Svg::new(WIDTH, HEIGHT);
    axes(
        &mut svg,
        "Density of overlap rates",
        "overlap rate",
        "density",
    );
    let max = metrics
        .overlap_density
        .iter()
        .flat_map(|s| s.density.iter().copied())
        .fold(1e-9, f64::max);
    let plot_w = WIDTH - 1.5 * MARGIN;
    let plot_h = HEIGHT - 1.5 * MARGIN;
    for (i, s) in metrics.overlap_density.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .zip(&s.density)
            .map(|(x, d)| {
                let _ = writeln!(csv, "{},{x},{d}", s.label);
                (MARGIN + x * plot_w, HEIGHT - MARGIN - plot_h * d / max)
            })
            .collect();
        svg.polyline(&pts, colour);
        let ly = MARGIN / 2.0 + 14.0 * (i as f64 + 1.0);
        svg.rect(WIDTH - 190.0, ly - 9.0, 10.0, 10.0, colour);
        svg.text(
            WIDTH - 175.0,
            ly,
            &format!("{} (n={})", s.label, s.pairs),
            "start",
            11.0,
        );
    }
    for k in 0..=5 {
        let x = k as f64 / 5.0;
        svg.text(
            MARGIN + x * plot_w,
            HEIGHT - MARGIN + 14.0,
            &format!("{x:.1}"),
            "middle",
            10.0,
        );
    }
    (svg.finish(), csv)
}

fn plot_production(metrics: &Metrics) -> (String, String) {
    let mut panels: Vec<(String, &ProductionProfile)> = Vec::new();
    if let Some(h) = &metrics.human {
        panels.push(("human".into(), &h.profile));
    }
    for e in &metrics.experiments {
        panels.push((e.experiment.clone(), &e.report.model.profile));
    }
    let n_chars = metrics.glyphs.len().max(1);
    let panel_h = 180.0;
    let width = (MARGIN * 2.0 + 14.0 * n_chars as f64).max(WIDTH);
    let height = panel_h * panels.len() as f64 + MARGIN;
    let mut svg = Svg::new(width, height);
    svg.text(
        width / 2.0,
        18.0,
        "Production probability of answer types",
        "middle",
        14.0,
    );
    let mut csv = String::from("group,glyph,type,share\n");
    let bw = (width - 1.5 * MARGIN) / n_chars as f64;
    for (p, (name, profile)) in panels.iter().enumerate() {
        let top = MARGIN / 2.0 + 12.0 + p as f64 * panel_h;
        let bar_h = panel_h - 40.0;
        svg.text(MARGIN, top + 4.0, name, "start", 12.0);
        svg.line(
            MARGIN,
            top + 10.0 + bar_h,
            width - MARGIN / 2.0,
            top + 10.0 + bar_h,
        );
        for (c, shares) in profile.shares.iter().enumerate() {
            let x = MARGIN + c as f64 * bw;
            let mut y = top + 10.0 + bar_h;
            for t in AnswerType::ALL {
                let s = shares[t as usize];
                let _ = writeln!(csv, "{name},{},{},{s}", profile.glyphs[c], t.token());
                let h = s * bar_h;
                y -= h;
                if h > 0.0 {
                    svg.rect(x + 1.0, y, bw - 2.0, h, PALETTE[t as usize]);
                }
            }
            svg.text(
                x + bw / 2.0,
                top + 24.0 + bar_h,
                &profile.glyphs[c],
                "middle",
                10.0,
            );
        }
    }
    for (i, t) in AnswerType::ALL.iter().enumerate() {
        let x = MARGIN + i as f64 * 100.0;
        svg.rect(x, height - 18.0, 10.0, 10.0, PALETTE[i]);
        svg.text(x + 14.0, height - 9.0, t.token(), "start", 11.0);
    }
    (svg.finish(), csv)
}

pub fn read_metrics(path: &Path) -> Result<Metrics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the three plots with their data tables and `summary.md` under
/// `out_root/plots`. Returns the written paths.
pub fn report(out_root: &Path) -> Result<Vec<PathBuf>> {
    let metrics = read_metrics(&out_root.join("metrics.json"))?;
    let dir = out_root.join("plots");
    let mut written = Vec::new();
    for (name, (svg, csv)) in [
        ("saliency_histogram", plot_saliency(&metrics)),
        ("overlap_density", plot_overlap(&metrics)),
        ("production_probability", plot_production(&metrics)),
    ] {
        for (ext, body) in [("svg", svg), ("csv", csv)] {
            let p = dir.join(format!("{name}.{ext}"));
            write_text(&p, &body)?;
            written.push(p);
        }
    }
    let mut md = String::from("# Character naming report\n\n");
    let _ = writeln!(
        md,
        "Lexicon `{}`, code version `{}`.\n",
        metrics.lexicon_fingerprint, metrics.code_version
    );
    let _ = writeln!(md, "```\n{}```\n", headline(&metrics));
    if metrics.human.is_none() {
        let _ = writeln!(
            md,
            "No human answers were supplied; comparison sections are absent.\n"
        );
    }
    let _ = writeln!(
        md,
        "Plots: `saliency_histogram.svg`, `overlap_density.svg`, `production_probability.svg`."
    );
    let p = dir.join("summary.md");
    write_text(&p, &md)?;
    written.push(p);
    Ok(written)
}
