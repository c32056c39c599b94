//! SVG charts from sweep outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Probe accuracy against depth, from `results.csv`.
    DepthAccuracy,
    /// MAD against layer index, from `mad_profiles.csv`.
    MadLayers,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "depth-accuracy" => Ok(PlotKind::DepthAccuracy),
            "mad-layers" => Ok(PlotKind::MadLayers),
            other => Err(format!("unknown plot kind {other:?} (expected depth-accuracy or mad-layers)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, y, error bar half-height)`
    pub points: Vec<(f64, f64, f64)>,
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str, required: &[&str], source: &str) -> anyhow::Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let Some(head) = lines.next() else {
            bail!("{source}: no column header");
        };
        let columns: Vec<String> = head.split(',').map(|c| c.trim().to_string()).collect();
        let missing: Vec<&str> = required
            .iter()
            .copied()
            .filter(|r| !columns.iter().any(|c| c == r))
            .collect();
        if !missing.is_empty() {
            bail!("{source}: schema mismatch, missing column(s) {}", missing.join(", "));
        }
        let rows = lines.map(|l| l.split(',').map(|f| f.trim().to_string()).collect()).collect();
        Ok(Self { columns, rows })
    }

    fn get<'a>(&self, row: &'a [String], col: &str) -> &'a str {
        let i = self.columns.iter().position(|c| c == col).expect("checked at parse");
        row.get(i).map_or("", String::as_str)
    }
}

fn number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn push_point(series: &mut Vec<Series>, label: String, p: (f64, f64, f64)) {
    match series.iter_mut().find(|s| s.label == label) {
        Some(s) => s.points.push(p),
        None => series.push(Series { label, points: vec![p] }),
    }
}

/// One series per dataset, mode and block size; rows with undefined accuracy are dropped.
pub fn depth_accuracy_series(text: &str) -> anyhow::Result<Vec<Series>> {
    let t = Table::parse(text, &["dataset", "mode", "depth", "block_size", "acc_mean", "acc_std"], "results")?;
    let mut series = Vec::new();
    for row in &t.rows {
        let (Some(depth), Some(acc)) = (number(t.get(row, "depth")), number(t.get(row, "acc_mean"))) else {
            continue;
        };
        let std = number(t.get(row, "acc_std")).unwrap_or(0.0);
        let mode = t.get(row, "mode");
        let label = if mode == "end2end" {
            format!("{} {mode}", t.get(row, "dataset"))
        } else {
            format!("{} {mode} bs={}", t.get(row, "dataset"), t.get(row, "block_size"))
        };
        push_point(&mut series, label, (depth, acc, std));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

/// One series per sweep cell; undefined MAD values leave gaps.
pub fn mad_layer_series(text: &str) -> anyhow::Result<Vec<Series>> {
    let t = Table::parse(text, &["dataset", "mode", "depth", "block_size", "layer", "mad"], "mad profiles")?;
    let mut series = Vec::new();
    for row in &t.rows {
        let (Some(layer), Some(mad)) = (number(t.get(row, "layer")), number(t.get(row, "mad"))) else {
            continue;
        };
        let label = format!(
            "{} {} L={} bs={}",
            t.get(row, "dataset"),
            t.get(row, "mode"),
            t.get(row, "depth"),
            t.get(row, "block_size")
        );
        push_point(&mut series, label, (layer, mad, 0.0));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a line chart. `log2_x` spaces the x axis by powers of two.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], log2_x: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    let points: Vec<&(f64, f64, f64)> = series.iter().flat_map(|s| &s.points).collect();
    if points.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray" font-size="16">no data</text>"#,
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let xt = |x: f64| if log2_x && x > 0.0 { x.log2() } else { x };
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (0.0f64, f64::NEG_INFINITY);
    for &&(x, y, e) in &points {
        xmin = xmin.min(xt(x));
        xmax = xmax.max(xt(x));
        ymin = ymin.min(y - e);
        ymax = ymax.max(y + e);
    }
    if xmax <= xmin {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    ymax *= 1.05;
    let px = |x: f64| x0 + (xt(x) - xmin) / (xmax - xmin) * (x1 - x0 - 20.0) + 10.0;
    let py = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);

    for i in 0..=5 {
        let v = ymin + (ymax - ymin) * i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            x0 - 6.0,
            y + 4.0
        );
    }
    let mut ticks: Vec<f64> = points.iter().map(|p| p.0).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{x}</text>"#,
            px(x),
            y0 + 18.0
        );
    }

    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for &(x, y, e) in &ser.points {
            if e > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                    px(x),
                    py(y - e),
                    py(y + e)
                );
            }
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Reads `input`, writes the chart to `output`; returns the number of series drawn.
pub fn plot(kind: PlotKind, input: &Path, output: &Path) -> anyhow::Result<usize> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let (series, svg) = match kind {
        PlotKind::DepthAccuracy => {
            let series = depth_accuracy_series(&text)?;
            let svg = render_svg("Linear-probe accuracy vs depth", "depth", "test accuracy", &series, true);
            (series, svg)
        }
        PlotKind::MadLayers => {
            let series = mad_layer_series(&text)?;
            let svg = render_svg("MAD per layer", "layer", "MAD", &series, false);
            (series, svg)
        }
    };
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(output, svg)?;
    Ok(series.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RESULTS: &str = "# c\ndataset,mode,depth,block_size,acc_mean,acc_std,final_mad_last_layer,status,seeds\n\
        sbm,blockwise,4,1,0.8,0.01,0.3,ok,0\n\
        sbm,blockwise,2,1,0.9,0.02,0.3,ok,0\n\
        sbm,end2end,2,2,0.7,0.0,0.1,ok,0\n\
        sbm,end2end,4,4,NA,NA,NA,failed 1/1: x,0\n";

    #[test]
    fn series_grouped_and_sorted() {
        let s = depth_accuracy_series(RESULTS).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].label, "sbm blockwise bs=1");
        assert_eq!(s[0].points, vec![(2.0, 0.9, 0.02), (4.0, 0.8, 0.01)]);
        assert_eq!(s[1].points.len(), 1);
    }

    #[test]
    fn schema_mismatch_names_column() {
        let err = depth_accuracy_series("a,b\n1,2\n").unwrap_err().to_string();
        assert!(err.contains("acc_mean"), "{err}");
    }

    #[test]
    fn empty_chart_is_annotated() {
        let svg = render_svg("t", "x", "y", &[], false);
        assert!(svg.contains("no data"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn legend_lists_every_series() {
        let s = depth_accuracy_series(RESULTS).unwrap();
        let svg = render_svg("t", "x", "y", &s, true);
        assert!(svg.contains("sbm blockwise bs=1") && svg.contains("sbm end2end"));
        assert!(!svg.contains("no data"));
    }
}
