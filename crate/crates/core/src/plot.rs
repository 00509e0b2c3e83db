//! Deterministic SVG rendering of harness outputs.
//!
//! Every plot has a fixed canvas size, text set as SVG `<text>`, coordinates
//! rounded to two decimals and no timestamps, so the same CSV always gives
//! the same bytes.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::harness::csv_error;
use crate::theory::pathwise_detection_threshold;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = ["#c0392b", "#2471a3", "#229954", "#d68910", "#7d3c98", "#17a589", "#566573", "#a04000"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean adjusted overlap against eta, one line per method (experiment CSV).
    OverlapCurves,
    /// Eigenvalues in the complex plane with the threshold circle and the
    /// expected outliers (`spectrum` CSV).
    SpectrumScatter,
    /// Right-hand side of the pathwise detection condition against eta, one
    /// line per `r`, log scale.
    ThresholdMap,
    /// Eigenvector entry histograms with the Gaussian mixture overlay.
    Histogram,
}

impl PlotKind {
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            PlotKind::OverlapCurves => &["eta", "method", "aov"],
            PlotKind::SpectrumScatter => &["kind", "re", "im"],
            PlotKind::ThresholdMap => &["r", "eta", "rhs"],
            PlotKind::Histogram => &["eigen_index", "cluster", "bin_left", "bin_right", "density", "model_density"],
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap-curves" => Ok(PlotKind::OverlapCurves),
            "spectrum-scatter" => Ok(PlotKind::SpectrumScatter),
            "threshold-map" => Ok(PlotKind::ThresholdMap),
            "histogram" => Ok(PlotKind::Histogram),
            _ => invalid(format!("unknown plot kind {s:?}")),
        }
    }
}

/// A CSV file held as strings, addressed by column name.
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(csv_error))
            .collect::<Result<_>>()?;
        Ok(Table { headers, rows })
    }

    fn require(&self, cols: &[&str]) -> Result<Vec<usize>> {
        let missing: Vec<&str> = cols.iter().copied().filter(|c| !self.headers.iter().any(|h| h == c)).collect();
        if !missing.is_empty() {
            return invalid(format!("CSV is missing columns: {}", missing.join(", ")));
        }
        Ok(cols.iter().map(|c| self.headers.iter().position(|h| h == c).unwrap()).collect())
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// Maps data coordinates to one panel of the canvas.
#[derive(Clone, Copy)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_y: bool,
    top: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), log_y: bool, top: f64) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let y = if log_y {
            let (a, b) = (y.0.max(f64::MIN_POSITIVE).log10().floor(), y.1.max(f64::MIN_POSITIVE).log10().ceil());
            (a, if b > a { b } else { a + 1.0 })
        } else {
            widen(y)
        };
        Frame { x: widen(x), y, log_y, top }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let v = if self.log_y { y.log10() } else { y };
        let h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        self.top + MARGIN_TOP + (self.y.1 - v) / (self.y.1 - self.y.0) * h
    }

    fn bottom(&self) -> f64 {
        self.top + PANEL_HEIGHT - MARGIN_BOTTOM
    }
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 7.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

struct Svg {
    out: String,
}

impl Svg {
    fn new(panels: usize) -> Self {
        let height = PANEL_HEIGHT * panels.max(1) as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>"#);
        Svg { out }
    }

    fn axes(&mut self, f: &Frame, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
        let (yb, yt) = (f.bottom(), f.top + MARGIN_TOP);
        let _ = writeln!(self.out, r#"<rect x="{x0:.2}" y="{yt:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, yb - yt);
        for t in ticks(f.x.0, f.x.1) {
            let x = f.px(t);
            let _ = writeln!(self.out, r#"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, yb + 5.0);
            let _ = writeln!(self.out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, yb + 18.0, label(t));
        }
        let yticks: Vec<(f64, String)> = if f.log_y {
            (f.y.0 as i64..=f.y.1 as i64).map(|e| (10f64.powi(e as i32), format!("1e{e}"))).collect()
        } else {
            ticks(f.y.0, f.y.1).into_iter().map(|t| (t, label(t))).collect()
        };
        for (t, text) in yticks {
            let y = f.py(t);
            let _ = writeln!(self.out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(self.out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{text}</text>"#, x0 - 8.0, y + 4.0);
        }
        let _ = writeln!(self.out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#, (x0 + x1) / 2.0, f.top + 22.0, escape(title));
        let _ = writeln!(self.out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, yb + 40.0, escape(xlabel));
        let ym = (yb + yt) / 2.0;
        let _ = writeln!(self.out, r#"<text x="18" y="{ym:.2}" text-anchor="middle" transform="rotate(-90 18 {ym:.2})">{}</text>"#, escape(ylabel));
    }

    fn polyline(&mut self, f: &Frame, pts: &[(f64, f64)], color: &str, width: f64, dash: bool) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn legend(&mut self, f: &Frame, entries: &[(String, &str)]) {
        let x = WIDTH - MARGIN_RIGHT + 14.0;
        for (i, (name, color)) in entries.iter().enumerate() {
            let y = f.top + MARGIN_TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(self.out, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="3"/>"#, x + 18.0);
            let _ = writeln!(self.out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 24.0, y + 4.0, escape(name));
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    vals.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

fn overlap_curves(t: &Table) -> Result<String> {
    let c = t.require(PlotKind::OverlapCurves.required_columns())?;
    let dcol = t.col("d_target");
    // Series keyed by (degree target, method) in order of appearance; each
    // holds (eta, sum, count) in order of appearance.
    let mut series: Vec<(String, Vec<(f64, f64, usize)>)> = Vec::new();
    for row in &t.rows {
        if row[c[0]].is_empty() || row[c[2]].is_empty() {
            continue;
        }
        let (eta, aov) = (num(&row[c[0]])?, num(&row[c[2]])?);
        let name = match dcol {
            Some(d) if !row[d].is_empty() => format!("{} d={}", row[c[1]], label(num(&row[d])?)),
            _ => row[c[1]].clone(),
        };
        let idx = series.iter().position(|s| s.0 == name).unwrap_or_else(|| {
            series.push((name, Vec::new()));
            series.len() - 1
        });
        let pts = &mut series[idx].1;
        match pts.iter_mut().find(|p| p.0 == eta) {
            Some(p) => {
                p.1 += aov;
                p.2 += 1;
            }
            None => pts.push((eta, aov, 1)),
        }
    }
    let xr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0))).unwrap_or((0.5, 1.0));
    let yr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1 / p.2 as f64))).unwrap_or((0.0, 1.0));
    let f = Frame::new(xr, (yr.0.min(0.0), yr.1.max(1.0)), false, 0.0);
    let mut svg = Svg::new(1);
    svg.axes(&f, "Mean adjusted overlap", "eta", "adjusted overlap");
    let mut legend = Vec::new();
    for (i, (name, pts)) in series.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.1 / p.2 as f64)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[i % PALETTE.len()];
        svg.polyline(&f, &pts, color, 2.0, false);
        legend.push((name.clone(), color));
    }
    svg.legend(&f, &legend);
    Ok(svg.finish())
}

fn spectrum_scatter(t: &Table) -> Result<String> {
    let c = t.require(PlotKind::SpectrumScatter.required_columns())?;
    let mut eig = Vec::new();
    let mut mu = Vec::new();
    let mut radius = None;
    for row in &t.rows {
        let (re, im) = (num(&row[c[1]])?, num(&row[c[2]])?);
        match row[c[0]].as_str() {
            "eigenvalue" => eig.push((re, im)),
            "mu" => mu.push((re, im)),
            "threshold" => radius = Some(re),
            other => return invalid(format!("unknown row kind {other:?}")),
        }
    }
    let r = radius.unwrap_or(0.0);
    let ext = eig.iter().chain(&mu).map(|(a, b)| a.abs().max(b.abs())).fold(r, f64::max);
    let ext = if ext > 0.0 { ext * 1.1 } else { 1.0 };
    // Same units on both axes: pad x to the panel's aspect ratio.
    let aspect = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / (PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
    let f = Frame::new((-ext * aspect, ext * aspect), (-ext, ext), false, 0.0);
    let mut svg = Svg::new(1);
    if r > 0.0 {
        let (cx, cy) = (f.px(0.0), f.py(0.0));
        let rp = f.px(r) - cx;
        let _ = writeln!(svg.out, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{rp:.2}" fill="#f3e5c7" stroke="none"/>"##);
    }
    svg.axes(&f, "Spectrum", "Re", "Im");
    for &(re, _) in &mu {
        svg.polyline(&f, &[(re, -ext), (re, ext)], "#8b4513", 1.5, false);
    }
    for &(re, im) in &eig {
        let _ = writeln!(svg.out, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#2471a3"/>"##, f.px(re), f.py(im));
    }
    let mut legend = vec![("eigenvalues".to_string(), "#2471a3")];
    if !mu.is_empty() {
        legend.push(("expected outliers".to_string(), "#8b4513"));
    }
    if radius.is_some() {
        legend.push(("threshold radius".to_string(), "#f3e5c7"));
    }
    svg.legend(&f, &legend);
    Ok(svg.finish())
}

fn threshold_map(t: &Table) -> Result<String> {
    let c = t.require(PlotKind::ThresholdMap.required_columns())?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &t.rows {
        let (eta, rhs) = (num(&row[c[1]])?, num(&row[c[2]])?);
        let name = row[c[0]].clone();
        let idx = series.iter().position(|s| s.0 == name).unwrap_or_else(|| {
            series.push((name, Vec::new()));
            series.len() - 1
        });
        if rhs.is_finite() && rhs > 0.0 {
            series[idx].1.push((eta, rhs));
        }
    }
    let xr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0))).unwrap_or((0.5, 1.0));
    let yr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1))).unwrap_or((1.0, 10.0));
    let f = Frame::new(xr, yr, true, 0.0);
    let mut svg = Svg::new(1);
    svg.axes(&f, "Detection threshold", "eta", "rhs");
    let mut legend = Vec::new();
    for (i, (name, pts)) in series.iter_mut().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[i % PALETTE.len()];
        svg.polyline(&f, pts, color, 1.5, false);
        legend.push((format!("r = {name}"), color));
    }
    // Long legends would run off the panel; keep it to the first entries.
    legend.truncate(18);
    svg.legend(&f, &legend);
    Ok(svg.finish())
}

fn histogram(t: &Table) -> Result<String> {
    let c = t.require(PlotKind::Histogram.required_columns())?;
    struct Bin {
        cluster: String,
        left: f64,
        right: f64,
        density: f64,
        model: f64,
    }
    let mut panels: Vec<(String, Vec<Bin>)> = Vec::new();
    for row in &t.rows {
        let key = row[c[0]].clone();
        let bin = Bin {
            cluster: row[c[1]].clone(),
            left: num(&row[c[2]])?,
            right: num(&row[c[3]])?,
            density: num(&row[c[4]])?,
            model: num(&row[c[5]])?,
        };
        match panels.iter_mut().find(|p| p.0 == key) {
            Some(p) => p.1.push(bin),
            None => panels.push((key, vec![bin])),
        }
    }
    let mut svg = Svg::new(panels.len());
    if panels.is_empty() {
        let f = Frame::new((0.0, 1.0), (0.0, 1.0), false, 0.0);
        svg.axes(&f, "Eigenvector entries", "sqrt(n) u", "density");
        return Ok(svg.finish());
    }
    for (p, (key, bins)) in panels.iter().enumerate() {
        let mut clusters: Vec<&str> = Vec::new();
        for b in bins {
            if !clusters.contains(&b.cluster.as_str()) {
                clusters.push(&b.cluster);
            }
        }
        // Bar heights stack over clusters within a bin.
        let mut edges: Vec<(f64, f64)> = bins.iter().map(|b| (b.left, b.right)).collect();
        edges.sort_by(|a, b| a.0.total_cmp(&b.0));
        edges.dedup();
        let stacked = |e: &(f64, f64)| bins.iter().filter(|b| (b.left, b.right) == *e).map(|b| b.density).sum::<f64>();
        let mixture = |e: &(f64, f64)| bins.iter().filter(|b| (b.left, b.right) == *e).map(|b| b.model).sum::<f64>();
        let xr = range(bins.iter().flat_map(|b| [b.left, b.right])).unwrap_or((0.0, 1.0));
        let ymax = edges.iter().map(|e| stacked(e).max(mixture(e))).fold(0.0, f64::max);
        let f = Frame::new(xr, (0.0, ymax * 1.05), false, PANEL_HEIGHT * p as f64);
        svg.axes(&f, &format!("Eigenvector {key}"), "sqrt(n) u", "density");
        let mut legend = Vec::new();
        for e in &edges {
            let mut base = 0.0;
            for (ci, cl) in clusters.iter().enumerate() {
                let d: f64 = bins.iter().filter(|b| (b.left, b.right) == *e && b.cluster == *cl).map(|b| b.density).sum();
                if d > 0.0 {
                    let (x0, x1) = (f.px(e.0), f.px(e.1));
                    let (y0, y1) = (f.py(base + d), f.py(base));
                    let _ = writeln!(
                        svg.out,
                        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.6"/>"#,
                        x1 - x0,
                        y1 - y0,
                        PALETTE[ci % PALETTE.len()]
                    );
                }
                base += d;
            }
        }
        for (ci, cl) in clusters.iter().enumerate() {
            let mut pts: Vec<(f64, f64)> = bins.iter().filter(|b| b.cluster == *cl).map(|b| ((b.left + b.right) / 2.0, b.model)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            svg.polyline(&f, &pts, "#808080", 1.5, false);
            legend.push((format!("cluster {cl}"), PALETTE[ci % PALETTE.len()]));
        }
        let total: Vec<(f64, f64)> = edges.iter().map(|e| ((e.0 + e.1) / 2.0, mixture(e))).collect();
        svg.polyline(&f, &total, "#303030", 1.5, true);
        legend.push(("mixture components".to_string(), "#808080"));
        legend.push(("mixture".to_string(), "#303030"));
        svg.legend(&f, &legend);
    }
    Ok(svg.finish())
}

/// Renders a CSV as SVG. Fails with a validation error naming the missing
/// columns when the CSV does not fit the kind.
pub fn plot_csv<R: Read>(input: R, kind: PlotKind) -> Result<String> {
    let t = Table::read(input)?;
    match kind {
        PlotKind::OverlapCurves => overlap_curves(&t),
        PlotKind::SpectrumScatter => spectrum_scatter(&t),
        PlotKind::ThresholdMap => threshold_map(&t),
        PlotKind::Histogram => histogram(&t),
    }
}

pub fn plot_file(path: &Path, kind: PlotKind) -> Result<String> {
    plot_csv(std::fs::File::open(path)?, kind)
}

/// Rows `(r, eta, rhs)` of the pathwise detection condition, the input of
/// [`PlotKind::ThresholdMap`].
pub fn threshold_map_rows(rs: &[usize], etas: &[f64]) -> Vec<(usize, f64, f64)> {
    rs.iter()
        .flat_map(|&r| etas.iter().map(move |&eta| (r, eta, pathwise_detection_threshold(r, 1.0, eta).rhs)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_give_axes_only() {
        for kind in [PlotKind::OverlapCurves, PlotKind::SpectrumScatter, PlotKind::ThresholdMap, PlotKind::Histogram] {
            let header = kind.required_columns().join(",") + "\n";
            let svg = plot_csv(header.as_bytes(), kind).unwrap();
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
            assert!(!svg.contains("<polyline"));
        }
    }

    #[test]
    fn missing_columns_are_listed() {
        let err = plot_csv("eta,aov\n0.6,0.1\n".as_bytes(), PlotKind::OverlapCurves).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("method"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let csv = "kind,re,im\neigenvalue,4.0,0.0\neigenvalue,1.0,1.5\nmu,4.0,0.0\nthreshold,2.0,0.0\n";
        let a = plot_csv(csv.as_bytes(), PlotKind::SpectrumScatter).unwrap();
        let b = plot_csv(csv.as_bytes(), PlotKind::SpectrumScatter).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("#f3e5c7"));
    }

    #[test]
    fn ticks_are_round() {
        let t = ticks(0.5, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().zip([0.5, 0.6, 0.7, 0.8, 0.9, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(label(0.30000000000000004), "0.3");
    }
}
