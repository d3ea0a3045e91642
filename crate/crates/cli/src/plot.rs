//! Minimal SVG line charts of report mean rows.

use std::collections::BTreeMap;
use std::fmt::Write;

use clap::ValueEnum;
use redsim::scenario::ReportRow;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Metric {
    HitRate,
    FootprintReduction,
    BandwidthSavings,
}

impl Metric {
    fn of(self, row: &ReportRow) -> f64 {
        match self {
            Metric::HitRate => row.hit_rate,
            Metric::FootprintReduction => row.footprint_reduction,
            Metric::BandwidthSavings => row.bandwidth_savings,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::HitRate => "hit rate",
            Metric::FootprintReduction => "footprint reduction",
            Metric::BandwidthSavings => "bandwidth savings",
        }
    }
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];
const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;
const LEGEND_W: f64 = 190.0;

type Series = Vec<(String, Vec<(usize, f64)>)>;

/// One panel per (topology, level, alpha, pattern); one line per policy
/// variant over cache capacity.
pub fn render(rows: &[ReportRow], metric: Metric) -> String {
    let mut panels: Vec<(String, Series)> = Vec::new();
    for row in rows.iter().filter(|r| r.is_mean()) {
        let title = format!(
            "{} {} alpha={} {}",
            row.topology, row.level, row.alpha, row.pattern
        );
        let name = match row.last_copy {
            Some(false) => format!("{} (no last copy)", row.policy),
            _ => row.policy.to_string(),
        };
        let panel = match panels.iter().position(|(t, _)| *t == title) {
            Some(i) => &mut panels[i].1,
            None => {
                panels.push((title, Vec::new()));
                &mut panels.last_mut().expect("just pushed").1
            }
        };
        match panel.iter_mut().find(|(n, _)| *n == name) {
            Some((_, points)) => points.push((row.cache_chunks, metric.of(row))),
            None => panel.push((name, vec![(row.cache_chunks, metric.of(row))])),
        }
    }

    let width = PANEL_W + LEGEND_W;
    let height = PANEL_H * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    for (i, (title, series)) in panels.iter().enumerate() {
        panel(&mut svg, i as f64 * PANEL_H, title, series, metric);
    }
    svg.push_str("</svg>\n");
    svg
}

fn panel(svg: &mut String, top: f64, title: &str, series: &Series, metric: Metric) {
    let xs: BTreeMap<usize, ()> = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|&(x, _)| (x, ())))
        .collect();
    let xs: Vec<usize> = xs.into_keys().collect();
    let y_max = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|&(_, y)| y))
        .fold(0.0f64, f64::max);
    let y_max = ((y_max * 10.0).ceil() / 10.0).max(0.1);
    let (x0, x1) = (MARGIN, PANEL_W - 10.0);
    let (y0, y1) = (top + PANEL_H - MARGIN, top + 30.0);
    // Capacities are evenly spaced by rank, which reads well for doubling ladders.
    let px = |x: usize| {
        let i = xs.iter().position(|&v| v == x).unwrap_or(0) as f64;
        let n = (xs.len().max(2) - 1) as f64;
        x0 + (x1 - x0) * i / n
    };
    let py = |y: f64| y0 - (y0 - y1) * (y / y_max).clamp(0.0, 1.0);

    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{}" font-weight="bold">{}</text>"#,
        top + 18.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let v = y_max * k as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v:.2}</text>"##,
            x0 - 4.0,
            y + 4.0
        );
    }
    for &x in &xs {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{x}</text>"#,
            px(x),
            y0 + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">cache chunks per CR</text>"#,
        (x0 + x1) / 2.0,
        y0 + 34.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        metric.label()
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut points = points.clone();
        points.sort_by_key(|&(x, _)| x);
        let d: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            d.join(" ")
        );
        for &(x, y) in &points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = top + 40.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            PANEL_W + 5.0,
            ly - 10.0,
            PANEL_W + 22.0,
            ly,
            escape(name)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
