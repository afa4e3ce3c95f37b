//! Minimal SVG line and histogram charts. Output depends only on the data,
//! so plots are as reproducible as the report they are drawn from.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Draw as a step function (ECDF style).
    pub step: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            dashed: false,
            step: false,
        }
    }
}

#[derive(Clone, Copy)]
pub enum XScale {
    Linear,
    Log2,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_scale: XScale,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        (LEFT + W - RIGHT) / 2.0,
        esc(title)
    );
}

fn axes(
    out: &mut String,
    chart: &Chart,
    x: &dyn Fn(f64) -> f64,
    y: &dyn Fn(f64) -> f64,
    xr: (f64, f64),
    yr: (f64, f64),
) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333\"/>",
        x1 - x0,
        y0 - y1
    );
    for k in 0..=4 {
        let v = yr.0 + (yr.1 - yr.0) * k as f64 / 4.0;
        let py = y(v);
        let _ = writeln!(
            out,
            "<line x1=\"{x0}\" y1=\"{py:.1}\" x2=\"{x1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>",
            x0 - 6.0,
            py + 4.0
        );
    }
    let ticks: Vec<f64> = match chart.x_scale {
        XScale::Linear => (0..=4)
            .map(|k| xr.0 + (xr.1 - xr.0) * k as f64 / 4.0)
            .collect(),
        XScale::Log2 => {
            let (a, b) = (xr.0.log2().ceil() as i32, xr.1.log2().floor() as i32);
            (a..=b).map(|e| 2f64.powi(e)).collect()
        }
    };
    for v in ticks {
        let px = x(v);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{y0}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\
             <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            y0 + 4.0,
            y0 + 18.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text transform=\"translate(16 {:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 12.0,
        esc(chart.x_label),
        (y0 + y1) / 2.0,
        esc(chart.y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn line_chart(chart: &Chart, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xr = chart.x_range.unwrap_or_else(|| bounds(all().map(|p| p.0)));
    let xr = match chart.x_scale {
        XScale::Log2 => (
            all()
                .map(|p| p.0)
                .filter(|v| *v > 0.0)
                .fold(f64::INFINITY, f64::min)
                / 1.2,
            all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) * 1.2,
        ),
        XScale::Linear => xr,
    };
    let yr = chart.y_range.unwrap_or_else(|| bounds(all().map(|p| p.1)));
    let scale = chart.x_scale;
    let x = move |v: f64| {
        let (v, a, b) = match scale {
            XScale::Linear => (v, xr.0, xr.1),
            XScale::Log2 => (v.max(1e-300).log2(), xr.0.log2(), xr.1.log2()),
        };
        LEFT + (v - a) / (b - a) * (W - RIGHT - LEFT)
    };
    let y = move |v: f64| H - BOTTOM - (v - yr.0) / (yr.1 - yr.0) * (H - BOTTOM - TOP);

    let mut out = String::new();
    header(&mut out, chart.title);
    axes(&mut out, chart, &x, &y, xr, yr);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        let mut prev: Option<(f64, f64)> = None;
        for &(px, py) in &s.points {
            let (sx, sy) = (x(px), y(py));
            match prev {
                None => {
                    let _ = write!(path, "M{sx:.2},{sy:.2}");
                }
                Some((_, last_y)) if s.step => {
                    let _ = write!(path, " L{sx:.2},{last_y:.2} L{sx:.2},{sy:.2}");
                }
                Some(_) => {
                    let _ = write!(path, " L{sx:.2},{sy:.2}");
                }
            }
            prev = Some((sx, sy));
        }
        let dash = if s.dashed {
            " stroke-dasharray=\"5 4\""
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>"
        );
        if !s.step {
            for &(px, py) in &s.points {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                    x(px),
                    y(py)
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{:.1}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            esc(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bars for `(lo, hi, count)` bins.
pub fn histogram(chart: &Chart, bins: &[(f64, f64, usize)]) -> String {
    let xr = chart
        .x_range
        .unwrap_or_else(|| bounds(bins.iter().flat_map(|b| [b.0, b.1])));
    let max = bins.iter().map(|b| b.2).max().unwrap_or(0).max(1) as f64;
    let yr = (0.0, max * 1.05);
    let x = move |v: f64| LEFT + (v - xr.0) / (xr.1 - xr.0) * (W - RIGHT - LEFT);
    let y = move |v: f64| H - BOTTOM - (v - yr.0) / (yr.1 - yr.0) * (H - BOTTOM - TOP);

    let mut out = String::new();
    header(&mut out, chart.title);
    axes(&mut out, chart, &x, &y, xr, yr);
    for &(lo, hi, count) in bins {
        if count == 0 {
            continue;
        }
        let (x0, x1) = (x(lo), x(hi));
        let top = y(count as f64);
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" stroke=\"white\"/>",
            (x1 - x0).max(0.5),
            y(0.0) - top,
            PALETTE[0]
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart<'static> {
        Chart {
            title: "t <1>",
            x_label: "x",
            y_label: "y",
            x_scale: XScale::Linear,
            x_range: None,
            y_range: None,
        }
    }

    #[test]
    fn line_chart_is_wellformed_and_stable() {
        let s = vec![Series::line("a", vec![(0.0, 0.5), (1.0, 0.7)])];
        let a = line_chart(&chart(), &s);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("t &lt;1&gt;"));
        assert_eq!(a, line_chart(&chart(), &s));
    }

    #[test]
    fn log_axis_and_flat_series() {
        let c = Chart {
            x_scale: XScale::Log2,
            ..chart()
        };
        let svg = line_chart(
            &c,
            &[Series::line(
                "flat",
                vec![(0.125, 0.6), (0.5, 0.6), (1.0, 0.6)],
            )],
        );
        assert!(!svg.contains("NaN"));
        assert!(svg.contains(">0.125<"));
    }

    #[test]
    fn histogram_skips_empty_bins() {
        let svg = histogram(&chart(), &[(0.0, 0.5, 0), (0.5, 1.0, 3)]);
        assert_eq!(svg.matches("<rect").count(), 3);
    }
}
