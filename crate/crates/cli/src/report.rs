//! Static SVG line charts for the CSVs written by the other subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::commands::Output;
use crate::config::CliConfig;
use crate::CliError;

type Series = (String, Vec<(f64, f64)>);

struct Chart {
    title: &'static str,
    x_label: &'static str,
    y_label: &'static str,
    series: Vec<Series>,
}

/// Reads numeric columns by header name.
fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| CliError::Data(format!("{}: missing column {n}", path.display())))
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        for (c, &i) in idx.iter().enumerate() {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| CliError::Data(format!("{}: bad number '{}'", path.display(), &rec[i])))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

fn zip(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}

fn chart_for(file: &str, path: &Path) -> Result<Option<Chart>, CliError> {
    let chart = match file {
        "resistance.csv" => {
            let c = read_columns(path, &["n_s", "mean_total_resistance", "mean_baseline"])?;
            Chart {
                title: "Mean total effective resistance",
                x_label: "n_s",
                y_label: "resistance",
                series: vec![("LVN".into(), zip(&c[0], &c[1])), ("raw".into(), zip(&c[0], &c[2]))],
            }
        }
        "paths.csv" => {
            let c = read_columns(path, &["r", "delta"])?;
            Chart {
                title: "Change in walk count",
                x_label: "walk length r",
                y_label: "delta",
                series: vec![("delta".into(), zip(&c[0], &c[1]))],
            }
        }
        "drift.csv" => {
            let c = read_columns(path, &["epoch", "slot", "distance"])?;
            let slots = c[1].iter().fold(0.0f64, |m, &s| m.max(s)) as usize + 1;
            let series = (0..slots)
                .map(|s| {
                    let pts = (0..c[0].len())
                        .filter(|&i| c[1][i] as usize == s)
                        .map(|i| (c[0][i], c[2][i]))
                        .collect();
                    (format!("slot {s}"), pts)
                })
                .collect();
            Chart {
                title: "Embedding drift",
                x_label: "epoch",
                y_label: "distance from init",
                series,
            }
        }
        "accuracies.csv" => {
            let c = read_columns(path, &["split", "val_accuracy", "test_accuracy"])?;
            Chart {
                title: "Accuracy per split",
                x_label: "split",
                y_label: "accuracy",
                series: vec![("val".into(), zip(&c[0], &c[1])), ("test".into(), zip(&c[0], &c[2]))],
            }
        }
        "probe.csv" => {
            let c = read_columns(path, &["split", "raw_accuracy", "emb_accuracy"])?;
            Chart {
                title: "MLP probe accuracy",
                x_label: "split",
                y_label: "accuracy",
                series: vec![("raw".into(), zip(&c[0], &c[1])), ("+emb".into(), zip(&c[0], &c[2]))],
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(chart))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn render(chart: &Chart) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let pts = chart.series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, chart.title);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {} L{m} {} L{} {}" fill="none" stroke="black"/>"#,
        m,
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, chart.x_label);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        chart.y_label
    );
    for (v, anchor, x, y) in [
        (x0, "middle", sx(x0), h - m + 16.0),
        (x1, "middle", sx(x1), h - m + 16.0),
        (y0, "end", m - 6.0, sy(y0) + 4.0),
        (y1, "end", m - 6.0, sy(y1) + 4.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{}</text>"#, fmt_tick(v));
    }
    for (k, (name, points)) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let d: Vec<String> = points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.join(" "));
        let ly = m + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            w - m - 90.0,
            w - m - 70.0,
            w - m - 65.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

pub fn report(cfg: &CliConfig, out: &Output) -> Result<Value, CliError> {
    let source = cfg.report_source.as_ref().map_or_else(|| out.dir().to_path_buf(), PathBuf::from);
    let mut written = Vec::new();
    for file in ["resistance.csv", "paths.csv", "drift.csv", "accuracies.csv", "probe.csv"] {
        let path = source.join(file);
        if !path.exists() {
            continue;
        }
        if let Some(chart) = chart_for(file, &path)? {
            let name = file.replace(".csv", ".svg");
            out.write(&name, render(&chart))?;
            written.push(name);
        }
    }
    if written.is_empty() {
        return Err(CliError::Data(format!("no known CSV files in {}", source.display())));
    }
    Ok(json!({"subcommand": "report", "plots": written}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polyline_per_series() {
        let chart = Chart {
            title: "t",
            x_label: "x",
            y_label: "y",
            series: vec![("a".into(), vec![(0.0, 1.0), (1.0, 2.0)]), ("b".into(), vec![(0.0, 0.0)])],
        };
        let svg = render(&chart);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
    }
}
