//! Static SVG plots of sweep results: adversary distortion against block
//! length, and against key size where the data contains a key sweep. No
//! plotting library, just coordinate arithmetic and SVG text.

use anyhow::{bail, Context};
use keybins::adversary::DistortionReport;
use std::collections::BTreeMap;
use std::path::Path;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;

struct Panel {
    title: String,
    x_label: String,
    /// (x, mean distortion), ascending in x.
    points: Vec<(f64, f64)>,
}

/// Renders the plot document. The vertical axis is always pinned to
/// `[0, 1.05 * dmax]` with a dashed rule at the blind-guess ceiling, so a
/// curve approaching the rule is approaching ideal secrecy.
pub fn render_plots(rows: &[DistortionReport]) -> anyhow::Result<String> {
    if rows.is_empty() {
        bail!("no rows to plot");
    }
    let dmax = rows.iter().map(|r| r.dmax).fold(f64::MIN, f64::max);
    if !(dmax > 0.0) {
        bail!("rows carry no positive blind-guess ceiling");
    }

    let mut panels = Vec::new();

    // Distortion against block length, seed-averaged per n.
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.distortion);
    }
    panels.push(Panel {
        title: "adversary distortion vs block length".into(),
        x_label: "block length n".into(),
        points: by_n
            .iter()
            .map(|(&n, v)| (n as f64, v.iter().sum::<f64>() / v.len() as f64))
            .collect(),
    });

    // Distortion against key size at the block length with the widest key
    // sweep, when the data has one.
    let mut by_nk: BTreeMap<usize, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        by_nk
            .entry(r.n)
            .or_default()
            .entry(r.k)
            .or_default()
            .push(r.distortion);
    }
    if let Some((&n_star, ks)) = by_nk.iter().max_by_key(|(_, ks)| ks.len()) {
        if ks.len() >= 2 {
            panels.push(Panel {
                title: format!("adversary distortion vs key size (n = {n_star})"),
                x_label: "key size k".into(),
                points: ks
                    .iter()
                    .map(|(&k, v)| (k as f64, v.iter().sum::<f64>() / v.len() as f64))
                    .collect(),
            });
        }
    }

    let width = panels.len() as f64 * PANEL_W + 20.0;
    let height = PANEL_H + 20.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    for (i, panel) in panels.iter().enumerate() {
        svg.push_str(&render_panel(panel, 10.0 + i as f64 * PANEL_W, 10.0, dmax));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn render_panel(panel: &Panel, ox: f64, oy: f64, dmax: f64) -> String {
    let y_top = 1.05 * dmax;
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;

    let (x_min, x_max) = panel
        .points
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    // A single point still needs a nonempty x range.
    let (x_min, x_max) = if x_min == x_max {
        (x_min - 1.0, x_max + 1.0)
    } else {
        (x_min, x_max)
    };

    let sx = |x: f64| ox + MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| oy + MARGIN_T + (1.0 - y / y_top) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-weight=\"bold\">{}</text>\n",
        ox + MARGIN_L + plot_w / 2.0,
        oy + 18.0,
        panel.title
    ));

    // Axes.
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#444\"/>\n\
         <line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"#444\"/>\n",
        x0 = sx(x_min),
        x1 = sx(x_max),
        y0 = sy(y_top),
        y1 = sy(0.0),
    ));

    // Y ticks at quarters of the ceiling.
    for q in 0..=4 {
        let v = dmax * q as f64 / 4.0;
        s.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#444\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" text-anchor=\"end\">{label}</text>\n",
            x = sx(x_min) - 4.0,
            x2 = sx(x_min),
            y = sy(v),
            tx = sx(x_min) - 7.0,
            ty = sy(v) + 4.0,
            label = trim_float(v),
        ));
    }

    // X ticks at the data points.
    for &(x, _) in &panel.points {
        s.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{y}\" x2=\"{px}\" y2=\"{y2}\" stroke=\"#444\"/>\n\
             <text x=\"{px}\" y=\"{ty}\" text-anchor=\"middle\">{label}</text>\n",
            px = sx(x),
            y = sy(0.0),
            y2 = sy(0.0) + 4.0,
            ty = sy(0.0) + 17.0,
            label = trim_float(x),
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        sx(x_min) + plot_w / 2.0,
        oy + PANEL_H - 10.0,
        panel.x_label
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 {0} {1})\">expected distortion</text>\n",
        ox + 16.0,
        oy + MARGIN_T + plot_h / 2.0,
    ));

    // The blind-guess ceiling.
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#d62728\" \
         stroke-dasharray=\"6 4\"/>\n\
         <text x=\"{x1}\" y=\"{ty}\" text-anchor=\"end\" fill=\"#d62728\">blind-guess \
         ceiling {label}</text>\n",
        x0 = sx(x_min),
        x1 = sx(x_max),
        y = sy(dmax),
        ty = sy(dmax) - 5.0,
        label = trim_float(dmax),
    ));

    // The data.
    let pts: Vec<String> = panel
        .points
        .iter()
        .map(|&(x, y)| format!("{},{}", sx(x), sy(y)))
        .collect();
    if pts.len() >= 2 {
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
    }
    for &(x, y) in &panel.points {
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"#1f77b4\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    s
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Renders and writes the SVG file.
pub fn emit_plots(rows: &[DistortionReport], path: &Path) -> anyhow::Result<()> {
    let svg = render_plots(rows)?;
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
