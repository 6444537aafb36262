//! Single-file SVG of an experiment: the key polynomials with bars at ±q,
//! one sorted p-value panel per key (honest dashed, attack solid) and a
//! final panel for the aggregate Δ.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ExperimentResult;
use crate::error::{Error, Result};
use crate::keying::PolynomialKey;

pub const PLOT_SVG: &str = "experiment.svg";

const PANEL_W: f64 = 280.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 34.0;
const COLUMNS: usize = 4;
const HEADER: f64 = 40.0;
const HONEST: &str = "#1f77b4";
const ATTACK: &str = "#d62728";

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + MARGIN + (x - self.xr.0) / (self.xr.1 - self.xr.0) * (PANEL_W - 1.5 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let y = y.clamp(self.yr.0, self.yr.1);
        self.y0 + PANEL_H
            - MARGIN
            - (y - self.yr.0) / (self.yr.1 - self.yr.0) * (PANEL_H - 1.7 * MARGIN)
    }

    fn open(&self, out: &mut String, id: &str, title: &str) {
        let _ = writeln!(out, r#"<g class="panel" id="{id}">"#);
        let _ = writeln!(
            out,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            self.px(self.xr.0),
            self.py(self.yr.1),
            self.px(self.xr.1) - self.px(self.xr.0),
            self.py(self.yr.0) - self.py(self.yr.1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            self.x0 + MARGIN,
            self.y0 + 16.0,
            escape(title)
        );
        for v in [self.yr.0, self.yr.1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{}</text>"#,
                self.px(self.xr.0) - 3.0,
                self.py(v) + 3.0,
                v
            );
        }
        for v in [self.xr.0, self.xr.1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="middle">{}</text>"#,
                self.px(v),
                self.py(self.yr.0) + 12.0,
                v
            );
        }
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", self.px(*x), self.py(*y));
        }
        let dash = if dashed {
            r#" stroke-dasharray="5,3""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.3"{dash} points="{}"/>"#,
            d.trim_end()
        );
    }
}

fn frame_at(slot: usize, xr: (f64, f64), yr: (f64, f64)) -> Frame {
    Frame {
        x0: (slot % COLUMNS) as f64 * PANEL_W,
        y0: HEADER + (slot / COLUMNS) as f64 * PANEL_H,
        xr,
        yr,
    }
}

/// Sorted values against their quantile position in [0, 1].
fn sorted_curve(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    v.into_iter()
        .enumerate()
        .map(|(i, p)| {
            (
                if n > 1 {
                    i as f64 / (n - 1) as f64
                } else {
                    0.5
                },
                p,
            )
        })
        .collect()
}

fn keys_panel(out: &mut String, keys: &[PolynomialKey], q: f64) {
    let w = (1.5 * q).max(2.0);
    let f = frame_at(0, (-w, w), (-10.0, 10.0));
    f.open(out, "keys", &format!("keys, bars at ±{q}"));
    for (i, key) in keys.iter().enumerate() {
        let pts: Vec<(f64, f64)> = (0..=200)
            .map(|j| {
                let x = -w + 2.0 * w * j as f64 / 200.0;
                (x, key.eval(x))
            })
            .collect();
        f.polyline(out, &pts, PALETTE[i % PALETTE.len()], false);
    }
    for x in [-q, q] {
        let _ = writeln!(
            out,
            r##"<line class="bar" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#000" stroke-width="2"/>"##,
            f.px(x),
            f.py(-10.0),
            f.py(10.0)
        );
    }
    out.push_str("</g>\n");
}

fn curve_panel(
    out: &mut String,
    slot: usize,
    id: &str,
    title: &str,
    honest: &[f64],
    attack: &[f64],
) {
    let f = frame_at(slot, (0.0, 1.0), (0.0, 1.0));
    f.open(out, id, title);
    f.polyline(out, &sorted_curve(honest), HONEST, true);
    f.polyline(out, &sorted_curve(attack), ATTACK, false);
    out.push_str("</g>\n");
}

/// Renders the whole figure as one SVG document.
pub fn render_svg(result: &ExperimentResult) -> String {
    let spec = &result.spec;
    let mut panels = String::new();
    keys_panel(&mut panels, result.bundle.keys(), spec.q);
    let mut slot = 1;
    if spec.include_identity {
        let h: Vec<f64> = result
            .records
            .iter()
            .filter_map(|r| r.witness_honest_p)
            .collect();
        let a: Vec<f64> = result
            .records
            .iter()
            .filter_map(|r| r.witness_attack_p)
            .collect();
        curve_panel(&mut panels, slot, "key-0", "identity (witness)", &h, &a);
        slot += 1;
    }
    for k in 0..spec.keys {
        let h: Vec<f64> = result.records.iter().map(|r| r.honest_p[k]).collect();
        let a: Vec<f64> = result.records.iter().map(|r| r.attack_p[k]).collect();
        curve_panel(
            &mut panels,
            slot,
            &format!("key-{}", k + 1),
            &format!("key {}", k + 1),
            &h,
            &a,
        );
        slot += 1;
    }
    let h: Vec<f64> = result.records.iter().map(|r| r.honest_delta).collect();
    let a: Vec<f64> = result.records.iter().map(|r| r.attack_delta).collect();
    curve_panel(
        &mut panels,
        slot,
        "aggregate",
        &format!("aggregate Δ ({})", spec.method),
        &h,
        &a,
    );
    slot += 1;

    let rows = slot.div_ceil(COLUMNS);
    let width = COLUMNS as f64 * PANEL_W;
    let height = HEADER + rows as f64 * PANEL_H;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="8" y="16" font-size="11">{}</text>"#,
        escape(&spec.describe())
    );
    let _ = writeln!(
        out,
        r#"<text x="8" y="32" font-size="11">sorted p-values: honest dashed, attack solid</text>"#
    );
    out.push_str(&panels);
    out.push_str("</svg>\n");
    out
}

/// Writes [`PLOT_SVG`] into `dir`, creating it.
pub fn emit_plots(result: &ExperimentResult, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(PLOT_SVG);
    fs::write(&path, render_svg(result)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
