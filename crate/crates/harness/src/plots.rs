//! Deterministic SVG charts for sweep CSVs.
//!
//! Hand-rolled SVG keeps the output byte-stable: fixed canvas, fixed decimal
//! formatting, no timestamps. One chart per payload for per-payload sweeps,
//! one bar chart for the entropy sweep.

use anyhow::{bail, Result};

use crate::sweeps::{ENTROPY_HEADER, MITIGATION_HEADER, SIZE_HEADER, STRENGTH_HEADER};

const W: f64 = 480.0;
const H: f64 = 320.0;
const ML: f64 = 56.0;
const MR: f64 = 16.0;
const MT: f64 = 28.0;
const MB: f64 = 48.0;

const SERIES_COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

struct Chart {
    body: String,
}

impl Chart {
    fn new(title: &str) -> Chart {
        let mut body = String::new();
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
        ));
        body.push_str(&format!(
            "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
             <text x=\"{:.1}\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">{title}</text>\n",
            W / 2.0
        ));
        // Axes and y grid for a [0, 1] rate scale.
        body.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"#333\"/>\n\
             <line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
            H - MB,
            H - MB,
            W - MR,
            H - MB
        ));
        for k in 0..=4 {
            let v = k as f64 / 4.0;
            let y = Chart::y(v);
            body.push_str(&format!(
                "<line x1=\"{ML}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.2}</text>\n",
                W - MR,
                ML - 6.0,
                y + 4.0
            ));
        }
        Chart { body }
    }

    fn y(v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        H - MB - v * (H - MT - MB)
    }

    fn x(i: usize, n: usize) -> f64 {
        if n <= 1 {
            return ML + (W - ML - MR) / 2.0;
        }
        ML + (W - ML - MR) * (i as f64 + 0.5) / n as f64
    }

    fn x_labels(&mut self, labels: &[String]) {
        let n = labels.len();
        for (i, label) in labels.iter().enumerate() {
            self.body.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n",
                Chart::x(i, n),
                H - MB + 16.0
            ));
        }
    }

    fn line_series(&mut self, name: &str, values: &[f64], color_idx: usize, legend_slot: usize) {
        let n = values.len();
        let color = SERIES_COLORS[color_idx % SERIES_COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.1},{:.1}", Chart::x(i, n), Chart::y(v)))
            .collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            points.join(" ")
        ));
        for (i, &v) in values.iter().enumerate() {
            self.body.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                Chart::x(i, n),
                Chart::y(v)
            ));
        }
        let lx = ML + 8.0 + legend_slot as f64 * 180.0;
        self.body.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{MT}\" x2=\"{:.1}\" y2=\"{MT}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{name}</text>\n",
            lx + 18.0,
            lx + 22.0,
            MT + 4.0
        ));
    }

    fn bar_series(&mut self, values: &[f64]) {
        let n = values.len();
        let bw = (W - ML - MR) / n as f64 * 0.7;
        for (i, &v) in values.iter().enumerate() {
            let x = Chart::x(i, n) - bw / 2.0;
            let y = Chart::y(v);
            self.body.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bw:.1}\" height=\"{:.1}\" fill=\"{}\"/>\n",
                (H - MB - y).max(0.0),
                SERIES_COLORS[0]
            ));
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_csv(csv: &str) -> Result<Table> {
    let mut lines = csv.lines();
    let header = match lines.next() {
        Some(h) if !h.trim().is_empty() => h.split(',').map(str::to_string).collect::<Vec<_>>(),
        _ => bail!("CSV has no header row"),
    };
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            bail!(
                "CSV row {} has {} fields, header has {}",
                lineno + 2,
                fields.len(),
                header.len()
            );
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        bail!("CSV has a header but no data rows");
    }
    Ok(Table { header, rows })
}

fn f(field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| anyhow::anyhow!("not a number: {field:?}"))
}

/// Groups rows by their first column, preserving first-seen order.
fn group_by_first(rows: &[Vec<String>]) -> Vec<(String, Vec<&Vec<String>>)> {
    let mut order: Vec<String> = Vec::new();
    for row in rows {
        if !order.contains(&row[0]) {
            order.push(row[0].clone());
        }
    }
    order
        .into_iter()
        .map(|key| {
            let group = rows.iter().filter(|r| r[0] == key).collect();
            (key, group)
        })
        .collect()
}

/// Renders a sweep summary CSV into named SVG documents.
pub fn emit_plots(csv: &str) -> Result<Vec<(String, String)>> {
    let table = parse_csv(csv)?;
    let header = table.header.join(",");
    let mut out = Vec::new();

    match header.as_str() {
        STRENGTH_HEADER => {
            for (payload, rows) in group_by_first(&table.rows) {
                let labels: Vec<String> = rows.iter().map(|r| r[1].clone()).collect();
                let invisible: Vec<f64> = rows.iter().map(|r| f(&r[3])).collect::<Result<_>>()?;
                let blind: Vec<f64> = rows.iter().map(|r| f(&r[5])).collect::<Result<_>>()?;
                let mut chart = Chart::new(&format!("strength sweep: {payload}"));
                chart.x_labels(&labels);
                chart.line_series("invisible fraction", &invisible, 0, 0);
                chart.line_series("blind detect rate", &blind, 1, 1);
                out.push((format!("strength_{payload}.svg"), chart.finish()));
            }
        }
        ENTROPY_HEADER => {
            let labels: Vec<String> = table
                .rows
                .iter()
                .map(|r| format!("[{},{})", r[0], r[1]))
                .collect();
            let rates: Vec<f64> = table.rows.iter().map(|r| f(&r[3])).collect::<Result<_>>()?;
            let mut chart = Chart::new("blind detection rate by entropy bucket");
            chart.x_labels(&labels);
            chart.bar_series(&rates);
            out.push(("entropy_buckets.svg".to_string(), chart.finish()));
        }
        SIZE_HEADER => {
            for (payload, rows) in group_by_first(&table.rows) {
                let labels: Vec<String> = rows.iter().map(|r| r[1].clone()).collect();
                let rates: Vec<f64> = rows.iter().map(|r| f(&r[3])).collect::<Result<_>>()?;
                let mut chart = Chart::new(&format!("size sweep: {payload}"));
                chart.x_labels(&labels);
                chart.line_series("blind detect rate", &rates, 0, 0);
                out.push((format!("size_{payload}.svg"), chart.finish()));
            }
        }
        MITIGATION_HEADER => {
            for (payload, rows) in group_by_first(&table.rows) {
                let labels: Vec<String> = rows.iter().map(|r| r[1].clone()).collect();
                let rates: Vec<f64> = rows.iter().map(|r| f(&r[3])).collect::<Result<_>>()?;
                let mut chart = Chart::new(&format!("mitigation sweep: {payload}"));
                chart.x_labels(&labels);
                chart.line_series("mitigation rate", &rates, 0, 0);
                out.push((format!("mitigation_{payload}.svg"), chart.finish()));
            }
        }
        other => bail!("unrecognized sweep CSV header: {other:?}"),
    }

    Ok(out)
}
