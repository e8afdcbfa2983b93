//! Records, verdicts, log-log fits and the CSV/JSON/SVG writers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::HarnessError;

/// Outcome of an inequality check `margin ≥ 0` measured with error `err`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    HoldsWithinError,
    Violated,
}

impl Verdict {
    /// Holds when the margin clears the error bar, violated when it is below
    /// minus the error bar, undecided in between.
    pub fn for_margin(margin: f64, err: f64) -> Self {
        let err = err.abs();
        if margin > err {
            Self::Holds
        } else if margin >= -err {
            Self::HoldsWithinError
        } else {
            Self::Violated
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::HoldsWithinError => "holds-within-error",
            Self::Violated => "violated",
        }
    }
}

/// One sweep row. Failed members keep their id and parameter; the numeric
/// fields are then empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub domain_id: String,
    pub eps_or_t: f64,
    pub volume: Option<f64>,
    pub deficit: Option<f64>,
    pub deficit_err: Option<f64>,
    pub fraenkel: Option<f64>,
    /// α in absolute mode, α_R in relative mode.
    pub alpha: Option<f64>,
    pub hhalf: Option<f64>,
    /// deficit/𝒜² (absolute) or deficit_R/|Ω Δ B₁|² (relative).
    pub ratio: Option<f64>,
    pub verdict: Option<Verdict>,
}

impl RunRecord {
    pub fn failed(domain_id: String, eps_or_t: f64) -> Self {
        Self {
            domain_id,
            eps_or_t,
            volume: None,
            deficit: None,
            deficit_err: None,
            fraenkel: None,
            alpha: None,
            hhalf: None,
            ratio: None,
            verdict: None,
        }
    }
}

/// Least-squares line y = intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    /// Standard error of the slope; NaN with fewer than three points.
    pub slope_stderr: f64,
    /// Half-width of the 95% Student-t confidence interval of the slope.
    pub slope_ci95: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_stderr, slope_ci95) = if n > 2 {
        let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).ok()?.inverse_cdf(0.975);
        (se, t * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Some(LineFit {
        slope,
        intercept,
        points: n,
        slope_stderr,
        slope_ci95,
    })
}

/// Fit of log deficit against log 𝒜 over the rows where both are positive.
pub fn loglog_fit(records: &[RunRecord]) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = loglog_points(records).into_iter().unzip();
    fit_line(&xs, &ys)
}

fn loglog_points(records: &[RunRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| match (r.fraenkel, r.deficit) {
            (Some(a), Some(d)) if a > 0.0 && d > 0.0 => Some((a.ln(), d.ln())),
            _ => None,
        })
        .collect()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Serializes rows with a header taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Scatter of log deficit against log 𝒜 with the fitted line; one
/// self-contained file. `timestamp` adds a generation comment.
pub fn scatter_svg(records: &[RunRecord], fit: Option<&LineFit>, title: &str, timestamp: Option<u64>) -> String {
    let pts = loglog_points(records);
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if let Some(ts) = timestamp {
        let _ = writeln!(svg, "<!-- generated at unix time {ts} -->");
    }
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    let (x0, x1, y0, y1) = bounds(&pts);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{text}</text>"
        );
    };
    label(&mut svg, MARGIN, HEIGHT - MARGIN + 16.0, "start", &format!("{x0:.3}"));
    label(&mut svg, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end", &format!("{x1:.3}"));
    label(&mut svg, MARGIN - 6.0, HEIGHT - MARGIN, "end", &format!("{y0:.3}"));
    label(&mut svg, MARGIN - 6.0, MARGIN + 10.0, "end", &format!("{y1:.3}"));
    label(&mut svg, WIDTH / 2.0, HEIGHT - 18.0, "middle", "log asymmetry");
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" transform=\"rotate(-90 18 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">log deficit</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (x, y) in &pts {
        let _ = writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>", sx(*x), sy(*y));
    }
    if let Some(f) = fit {
        let (ya, yb) = (f.intercept + f.slope * x0, f.intercept + f.slope * x1);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"firebrick\" stroke-width=\"1.5\"/>",
            sx(x0),
            sy(ya),
            sx(x1),
            sy(yb)
        );
        let ci = if f.slope_ci95.is_finite() {
            format!(" ± {:.3}", f.slope_ci95)
        } else {
            String::new()
        };
        label(&mut svg, MARGIN + 8.0, MARGIN + 18.0, "start", &format!("slope {:.3}{ci} (n = {})", f.slope, f.points));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(pts: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    if pts.is_empty() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let pad = |(lo, hi): (f64, f64)| {
        let w = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        (lo - w, hi + w)
    };
    let (x0, x1) = pad(fold(|p| p.0));
    let (y0, y1) = pad(fold(|p| p.1));
    (x0, x1, y0, y1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
