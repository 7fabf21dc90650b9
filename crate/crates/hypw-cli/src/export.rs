//! Report exporters: canonical JSON, RFC 4180 CSV and static SVG plots.

use std::fmt::{self, Write};
use std::str::FromStr;

use hypw::curves::{curves_svg, BoundaryCurve, JumpPoint};
use hypw::functionals::{csv_field, EnergyReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Svg];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Svg => "svg",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("unsupported format \"{requested}\" for {report}; supported formats: {}", list(.supported))]
    Unsupported { requested: String, report: &'static str, supported: Vec<Format> },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn list(formats: &[Format]) -> String {
    formats.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
}

impl FromStr for Format {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::ALL.into_iter().find(|f| f.extension() == s.to_ascii_lowercase()).ok_or_else(|| {
            ExportError::Unsupported { requested: s.to_string(), report: "any report", supported: Format::ALL.to_vec() }
        })
    }
}

/// One member of a family sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub energy: f64,
    /// Relative gap to the reference energy of the sweep.
    pub defect: f64,
}

/// Everything the exporters know how to write.
#[derive(Clone, Copy, Debug)]
pub enum Report<'a> {
    Energy {
        label: &'a str,
        report: &'a EnergyReport,
    },
    /// Energy against the family parameter.
    Sweep(&'a [SweepRow]),
    /// Solver residual against grid spacing, `(h, residual)`.
    Residual(&'a [(f64, f64)]),
    Curves {
        curves: &'a [BoundaryCurve],
        jumps: &'a [JumpPoint],
    },
    /// Any serializable record (JSON only).
    Record(&'a Value),
}

impl Report<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Report::Energy { .. } => "an energy report",
            Report::Sweep(_) => "a family sweep",
            Report::Residual(_) => "a residual table",
            Report::Curves { .. } => "boundary curves",
            Report::Record(_) => "a record",
        }
    }

    pub fn supported(&self) -> Vec<Format> {
        match self {
            Report::Energy { .. } => vec![Format::Json, Format::Csv],
            Report::Record(_) => vec![Format::Json],
            _ => Format::ALL.to_vec(),
        }
    }
}

/// Renders `report` in `format`.
pub fn export_report(report: Report<'_>, format: Format) -> Result<String, ExportError> {
    if !report.supported().contains(&format) {
        return Err(ExportError::Unsupported {
            requested: format.to_string(),
            report: report.kind(),
            supported: report.supported(),
        });
    }
    Ok(match (report, format) {
        (Report::Energy { report, .. }, Format::Json) => canonical::to_string(report)?,
        (Report::Energy { label, report }, Format::Csv) => {
            format!("{}\r\n{}\r\n", EnergyReport::CSV_HEADER, report.csv_row(label))
        }
        (Report::Sweep(rows), Format::Json) => canonical::to_string(&rows)?,
        (Report::Sweep(rows), Format::Csv) => {
            let mut s = String::from("t,energy,defect\r\n");
            for r in rows {
                let _ = write!(s, "{},{},{}\r\n", num(r.t), num(r.energy), num(r.defect));
            }
            s
        }
        (Report::Sweep(rows), Format::Svg) => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.energy)).collect();
            line_plot_svg("energy vs t", "t", "energy", &pts, false)
        }
        (Report::Residual(rows), Format::Json) => canonical::to_string(&rows)?,
        (Report::Residual(rows), Format::Csv) => {
            let mut s = String::from("h,residual\r\n");
            for (h, r) in rows {
                let _ = write!(s, "{},{}\r\n", num(*h), num(*r));
            }
            s
        }
        (Report::Residual(rows), Format::Svg) => {
            line_plot_svg("residual vs h", "log10 h", "log10 residual", rows, true)
        }
        (Report::Curves { curves, jumps }, Format::Json) => {
            canonical::to_string(&serde_json::json!({ "curves": curves, "jumps": jumps }))?
        }
        (Report::Curves { curves, .. }, Format::Csv) => {
            let mut s = String::from("curve,component,index,y,z\r\n");
            for (i, c) in curves.iter().enumerate() {
                for (k, comp) in c.components.iter().enumerate() {
                    for (j, p) in comp.iter().enumerate() {
                        let _ = write!(s, "{i},{k},{j},{},{}\r\n", num(p[0]), num(p[1]));
                    }
                }
            }
            s
        }
        (Report::Curves { curves, jumps }, Format::Svg) => {
            let refs: Vec<&BoundaryCurve> = curves.iter().collect();
            curves_svg(&refs, jumps)
        }
        (Report::Record(v), Format::Json) => canonical::to_string(v)?,
        _ => unreachable!("format support checked above"),
    })
}

fn num(x: f64) -> String {
    csv_field(&canonical::format_float(x).replace("null", "NaN"))
}

/// Polyline plot with one circle per data point.  With `log` both axes are
/// log10-scaled; non-positive values are dropped.
pub fn line_plot_svg(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], log: bool) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log || (*x > 0.0 && *y > 0.0)))
        .map(|&(x, y)| if log { (x.log10(), y.log10()) } else { (x, y) })
        .collect();
    let (w, h, m) = (640.0, 420.0, 60.0);
    let mut s =
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>",
        w / 2.0,
        h - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 {})\">{}</text>",
        h / 2.0,
        h / 2.0,
        escape(ylabel)
    );
    if !pts.is_empty() {
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-12 * (1.0 + lo.abs()) {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let map = |(x, y): (f64, f64)| {
            (m + (x - x0) / (x1 - x0) * (w - 2.0 * m), h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m))
        };
        for (val, anchor, (px, py)) in [(x0, "start", (m, h - m + 16.0)), (x1, "end", (w - m, h - m + 16.0))] {
            let _ =
                writeln!(s, "<text x=\"{px}\" y=\"{py}\" text-anchor=\"{anchor}\" font-size=\"11\">{val:.4}</text>");
        }
        for (val, py) in [(y0, h - m), (y1, m + 10.0)] {
            let _ =
                writeln!(s, "<text x=\"{}\" y=\"{py}\" text-anchor=\"end\" font-size=\"11\">{val:.4}</text>", m - 4.0);
        }
        let line: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"{}\"/>",
            line.join(" ")
        );
        for &p in &pts {
            let (x, y) = map(p);
            let _ = writeln!(s, "<circle class=\"point\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"#1f5fa8\"/>");
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_csv_has_the_fixed_header() {
        let rows = [SweepRow { t: 3.0, energy: 30.0, defect: 1e-3 }, SweepRow { t: 3.5, energy: 29.9, defect: 2e-4 }];
        let s = export_report(Report::Sweep(&rows), Format::Csv).unwrap();
        let lines: Vec<&str> = s.split("\r\n").collect();
        assert_eq!(lines[0], "t,energy,defect");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("3.0000000000000000e0,"));
    }

    #[test]
    fn unsupported_format_lists_alternatives() {
        let r = EnergyReport::default();
        let e = export_report(Report::Energy { label: "x", report: &r }, Format::Svg).unwrap_err().to_string();
        assert!(e.contains("json, csv"), "{e}");
        let e = "png".parse::<Format>().unwrap_err().to_string();
        assert!(e.contains("json, csv, svg"), "{e}");
    }

    #[test]
    fn plot_has_one_marker_per_point() {
        let s = line_plot_svg("r", "h", "r", &[(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6e-4), (0.0, 1.0)], true);
        assert_eq!(s.matches("class=\"point\"").count(), 3);
    }

    #[test]
    fn curves_svg_marks_each_jump() {
        let c = BoundaryCurve::circle([0.0, 0.0], 1.0, 64);
        let jumps = vec![
            JumpPoint { sample: (0, 0), position: [1.0, 0.0], gap: 0.3 },
            JumpPoint { sample: (0, 32), position: [-1.0, 0.0], gap: 0.2 },
        ];
        let s = export_report(Report::Curves { curves: &[c], jumps: &jumps }, Format::Svg).unwrap();
        assert_eq!(s.matches("class=\"jump\"").count(), 2);
    }
}
