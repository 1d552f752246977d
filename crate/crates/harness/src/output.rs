use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::summary::{SummaryRow, SummaryTable};

pub const CSV_HEADER: [&str; 12] = [
    "variant",
    "distribution",
    "p",
    "n1",
    "n2",
    "n3",
    "v0",
    "epsilon",
    "method",
    "rate",
    "se",
    "reps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[serde(alias = "md")]
    Markdown,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Markdown, Format::Svg];
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            "svg" => Ok(Format::Svg),
            _ => Err(format!("unknown format '{s}' (expected csv, markdown or svg)")),
        }
    }
}

fn size_field(row: &SummaryRow, i: usize) -> String {
    row.sizes.get(i).map(|n| n.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Header [`CSV_HEADER`]; `n3` is empty for two-group cells. Floats use the
/// shortest representation that round-trips.
pub fn write_csv(table: &SummaryTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for row in &table.rows {
        let record = [
            row.variant.clone(),
            row.distribution.clone(),
            row.p.to_string(),
            size_field(row, 0),
            size_field(row, 1),
            size_field(row, 2),
            format!("{}", row.v0),
            format!("{}", row.epsilon),
            row.method.clone(),
            format!("{}", row.rate),
            format!("{}", row.se),
            row.reps.to_string(),
        ];
        w.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

pub fn render_markdown(table: &SummaryTable) -> String {
    let mut s = String::new();
    s.push_str("| variant | distribution | p | n | v0 | epsilon | method | rate | se | reps |\n");
    s.push_str("|---|---|---:|---|---:|---:|---|---:|---:|---:|\n");
    for row in &table.rows {
        let sizes: Vec<String> = row.sizes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} | ({}) | {} | {} | {} | {:.4} | {:.4} | {} |",
            row.variant,
            row.distribution,
            row.p,
            sizes.join(", "),
            row.v0,
            row.epsilon,
            row.method,
            row.rate,
            row.se,
            row.reps
        );
    }
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Rejection rate against `ε`, one polyline per method.
pub fn render_svg(rows: &[&SummaryRow]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 50.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let eps_min = rows.iter().map(|r| r.epsilon).fold(f64::INFINITY, f64::min);
    let eps_max = rows.iter().map(|r| r.epsilon).fold(f64::NEG_INFINITY, f64::max);
    let span = if eps_max > eps_min { eps_max - eps_min } else { 1.0 };
    let x = |e: f64| left + (e - eps_min) / span * pw;
    let y = |r: f64| top + (1.0 - r) * ph;

    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let first = rows[0];
    let sizes: Vec<String> = first.sizes.iter().map(|n| n.to_string()).collect();
    let title = format!(
        "{} / {} / p = {} / n = ({}) / v0 = {}",
        first.variant,
        first.distribution,
        first.p,
        sizes.join(", "),
        first.v0
    );

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="13">{title}</text>"#, left + pw / 2.0);
    for i in 0..=4 {
        let r = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#dddddd"/><text x="{2}" y="{3:.2}" text-anchor="end">{r:.2}</text>"##,
            y(r),
            left + pw,
            left - 8.0,
            y(r) + 4.0
        );
    }
    let mut ticks: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for e in &ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{e}</text>"#,
            x(*e),
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epsilon</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">rejection rate</text>"#,
        top + ph / 2.0
    );
    for (m, method) in methods.iter().enumerate() {
        let color = PALETTE[m % PALETTE.len()];
        let points: Vec<String> = rows
            .iter()
            .filter(|r| r.method == *method)
            .map(|r| format!("{:.2},{:.2}", x(r.epsilon), y(r.rate)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 20.0 * m as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{method}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn svg_name(row: &SummaryRow) -> String {
    let sizes: Vec<String> = row.sizes.iter().map(|n| n.to_string()).collect();
    format!(
        "power_{}_{}_p{}_n{}_v{}.svg",
        row.variant,
        row.distribution,
        row.p,
        sizes.join("-"),
        row.v0
    )
}

/// Writes the requested formats into `dir` and returns the paths in order.
pub fn emit_outputs(table: &SummaryTable, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    if table.is_empty() {
        return Err(HarnessError::Usage("nothing to write: summary is empty".into()));
    }
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
    let write = |path: &Path, text: &str| {
        fs::write(path, text).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
    };
    let mut paths = Vec::new();
    for format in formats {
        match format {
            Format::Csv => {
                let path = dir.join("summary.csv");
                write_csv(table, &path)?;
                paths.push(path);
            }
            Format::Markdown => {
                let path = dir.join("summary.md");
                write(&path, &render_markdown(table))?;
                paths.push(path);
            }
            Format::Svg => {
                for block in table.blocks() {
                    let path = dir.join(svg_name(block[0]));
                    write(&path, &render_svg(&block))?;
                    paths.push(path);
                }
            }
        }
    }
    Ok(paths)
}
