//! Learning-curve output. The CSV written by [`write_curve_csv`] is the
//! contract; images come from a [`PlotBackend`] and are optional.
//!
//! To add a backend, implement [`PlotBackend`] and add a [`BackendKind`]
//! variant that constructs it.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use genre_nb::evaluation::CellSummary;

/// One rating's learning curve, cells in ascending fraction order.
pub struct Curve<'a> {
    pub title: String,
    pub cells: Vec<&'a CellSummary>,
}

pub trait PlotBackend {
    /// File extension of rendered images, or `None` if nothing is rendered.
    fn extension(&self) -> Option<&'static str>;
    fn render(&self, curve: &Curve<'_>) -> String;
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendKind {
    /// Standalone SVG line chart
    Svg,
    /// CSV only
    None,
}

impl BackendKind {
    pub fn backend(self) -> Box<dyn PlotBackend> {
        match self {
            BackendKind::Svg => Box::new(SvgBackend::default()),
            BackendKind::None => Box::new(NoPlot),
        }
    }
}

pub struct NoPlot;

impl PlotBackend for NoPlot {
    fn extension(&self) -> Option<&'static str> {
        None
    }

    fn render(&self, _: &Curve<'_>) -> String {
        String::new()
    }
}

pub const CURVE_HEADER: &str = "train_fraction,exact_mean,exact_std,similar_mean,similar_std";

pub fn write_curve_csv<W: Write>(
    mut out: W,
    curve: &Curve<'_>,
    preamble: &[String],
) -> std::io::Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{CURVE_HEADER}")?;
    for c in &curve.cells {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6}",
            c.train_fraction, c.exact_mean, c.exact_std, c.similar_mean, c.similar_std
        )?;
    }
    out.flush()
}

/// Writes `<stem>.csv` and, if the backend renders, `<stem>.<ext>`. Each
/// file goes through a `.partial` sibling and a rename.
pub fn emit(
    backend: &dyn PlotBackend,
    dir: &Path,
    stem: &str,
    curve: &Curve<'_>,
    preamble: &[String],
) -> std::io::Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, curve, preamble)?;
    replace(&csv, &buf)?;
    let mut written = vec![csv];
    if let Some(ext) = backend.extension() {
        let path = dir.join(format!("{stem}.{ext}"));
        replace(&path, backend.render(curve).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn replace(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub struct SvgBackend {
    pub width: f64,
    pub height: f64,
}

impl Default for SvgBackend {
    fn default() -> Self {
        SvgBackend {
            width: 640.0,
            height: 420.0,
        }
    }
}

/// Mean and standard deviation of one series at one cell.
type Series = fn(&CellSummary) -> (f64, f64);

const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom

impl PlotBackend for SvgBackend {
    fn extension(&self) -> Option<&'static str> {
        Some("svg")
    }

    fn render(&self, curve: &Curve<'_>) -> String {
        let (ml, mr, mt, mb) = MARGIN;
        let (w, h) = (self.width, self.height);
        let x_max = curve
            .cells
            .iter()
            .map(|c| c.train_fraction)
            .fold(0.0, f64::max)
            .max(f64::EPSILON);
        let px = |f: f64| ml + f / x_max * (w - ml - mr);
        let py = |a: f64| mt + (1.0 - a) * (h - mt - mb);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(&curve.title)
        );
        for i in 0..=10 {
            let a = i as f64 / 10.0;
            let y = py(a);
            let _ = writeln!(
                s,
                r##"<line x1="{ml}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}%</text>"##,
                w - mr,
                ml - 6.0,
                y + 4.0,
                i * 10
            );
        }
        for c in &curve.cells {
            let x = px(c.train_fraction);
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                h - mb + 16.0,
                c.train_fraction
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">training fraction</text>"#,
            (ml + w - mr) / 2.0,
            h - 10.0
        );
        let series: [(&str, &str, Series); 2] = [
            ("exact", "#1f77b4", |c| (c.exact_mean, c.exact_std)),
            ("with similar", "#d62728", |c| {
                (c.similar_mean, c.similar_std)
            }),
        ];
        for (k, (label, colour, get)) in series.iter().enumerate() {
            let points: Vec<String> = curve
                .cells
                .iter()
                .map(|c| format!("{:.1},{:.1}", px(c.train_fraction), py(get(c).0)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            );
            for c in &curve.cells {
                let (m, sd) = get(c);
                let x = px(c.train_fraction);
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{colour}"/><circle cx="{x:.1}" cy="{:.1}" r="3" fill="{colour}"/>"#,
                    py((m - sd).max(0.0)),
                    py((m + sd).min(1.0)),
                    py(m)
                );
            }
            let ly = mt + 16.0 * (k as f64 + 1.0);
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="12" height="3" fill="{colour}"/><text x="{:.1}" y="{:.1}">{label}</text>"#,
                w - mr - 110.0,
                ly - 4.0,
                w - mr - 94.0,
                ly
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
