//! Benchmark summaries and their CSV, text table and SVG renderings.

use maxcon_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

/// Aggregate of one method over the trials of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub cell: String,
    pub n: usize,
    pub mean_count: f64,
    pub std_count: f64,
    /// Absent when timing was switched off.
    pub mean_time_s: Option<f64>,
    /// Absent when the exact solver was skipped for this cell.
    pub oracle_opt_frac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    /// `(cell, trial, hash)` of every instance handed to the methods.
    pub instance_hashes: Vec<(String, usize, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
    Svg,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Table => "txt",
            ReportFormat::Svg => "svg",
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

impl BenchReport {
    pub fn methods(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method.as_str()) {
                out.push(&r.method);
            }
        }
        out
    }

    pub fn cells(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.cell.as_str()) {
                out.push(&r.cell);
            }
        }
        out
    }

    pub fn row(&self, method: &str, cell: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.cell == cell)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            out.write_record([
                "method",
                "cell",
                "n",
                "mean_count",
                "std_count",
                "mean_time_s",
                "oracle_opt_frac",
            ])
            .map_err(csv_err)?;
        }
        for r in &self.rows {
            out.serialize(r).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for (i, rec) in rd.deserialize().enumerate() {
            let row: ReportRow = rec.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        Ok(Self {
            rows,
            instance_hashes: Vec::new(),
        })
    }

    pub fn to_table(&self) -> String {
        let header = ["method", "cell", "n", "mean", "std", "time (s)", "optimal"];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.method.clone(),
                    r.cell.clone(),
                    r.n.to_string(),
                    format!("{:.2}", r.mean_count),
                    format!("{:.2}", r.std_count),
                    r.mean_time_s.map_or("-".into(), |t| format!("{t:.4}")),
                    r.oracle_opt_frac.map_or("-".into(), |f| format!("{f:.2}")),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &body {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[&str]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(width)
                .enumerate()
                .map(|(k, (c, w))| {
                    if k < 2 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&header);
        let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
        line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &body {
            line(&row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }

    /// Mean consensus size against outlier fraction, one polyline per
    /// method. Cells without a `frac=` label are spread evenly instead.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const PAD: f64 = 50.0;
        const COLOURS: [&str; 8] = [
            "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
        ];
        let cells = self.cells();
        let xs: Vec<f64> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| outlier_fraction(c).unwrap_or(i as f64))
            .collect();
        let (x_lo, x_hi) = span(&xs);
        let counts: Vec<f64> = self.rows.iter().map(|r| r.mean_count).collect();
        let (_, y_hi) = span(&counts);
        let (y_lo, y_hi) = (0.0, y_hi.max(1.0));
        let px = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * PAD);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
            H - PAD,
            W - PAD
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">outlier fraction</text>"#,
            W / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">mean consensus size</text>"#,
            H / 2.0,
            H / 2.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.0}</text>"#,
            PAD - 4.0,
            PAD + 4.0,
            y_hi
        );
        for (c, x) in cells.iter().zip(&xs) {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
                px(*x),
                H - PAD + 14.0,
                outlier_fraction(c).map_or_else(|| c.to_string(), |f| format!("{f:.2}"))
            );
        }
        for (k, m) in self.methods().iter().enumerate() {
            let colour = COLOURS[k % COLOURS.len()];
            let points: Vec<String> = cells
                .iter()
                .zip(&xs)
                .filter_map(|(c, &x)| self.row(m, c).map(|r| (x, r.mean_count)))
                .map(|(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" fill="{colour}">{m}</text>"#,
                W - PAD + 4.0,
                PAD + 14.0 * k as f64
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn render(&self, format: ReportFormat) -> Result<Vec<u8>> {
        Ok(match format {
            ReportFormat::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                buf
            }
            ReportFormat::Table => self.to_table().into_bytes(),
            ReportFormat::Svg => self.to_svg().into_bytes(),
        })
    }

    /// Writes `<stem>.csv`, `<stem>.txt` and `<stem>.svg` into `dir`.
    pub fn emit(&self, dir: &Path, stem: &str, formats: &[ReportFormat]) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidArgument("report has no rows".into()));
        }
        std::fs::create_dir_all(dir)?;
        for &f in formats {
            std::fs::write(dir.join(format!("{stem}.{}", f.extension())), self.render(f)?)?;
        }
        Ok(())
    }
}

fn outlier_fraction(cell: &str) -> Option<f64> {
    cell.split('/')
        .find_map(|part| part.strip_prefix("frac="))
        .and_then(|v| v.parse().ok())
}

fn span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}
