//! Static SVG 1.1 learning curves.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::CliError;
use crate::protocol::{MetricsLog, Split};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `train` or `val`; becomes the polyline's class.
    pub class: String,
    /// (epoch, accuracy)
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvgPlot {
    pub title: String,
    pub series: Vec<Series>,
    /// x positions of round boundaries
    pub boundaries: Vec<f64>,
}

impl SvgPlot {
    /// One train and one validation polyline per round, laid end to end along
    /// the epoch axis with a marker between consecutive rounds.
    pub fn from_log(log: &MetricsLog) -> Result<Self, CliError> {
        if log.is_empty() {
            return Err(CliError::Invalid("cannot plot an empty metrics log".into()));
        }
        let mut plot = SvgPlot { title: "accuracy by epoch".into(), ..Default::default() };
        let mut offset = 0.0;
        let rounds = log.rounds();
        for (i, &round) in rounds.iter().enumerate() {
            let name = match log.labeling(round) {
                Some(l) if rounds.len() > 1 => format!("round {round} ({l})"),
                Some(l) => l.to_string(),
                None => format!("round {round}"),
            };
            let mut last = 0usize;
            for (split, class) in [(Split::Train, "train"), (Split::Val, "val")] {
                let points: Vec<(f64, f64)> =
                    log.split_records(round, split).map(|r| (offset + r.epoch as f64, r.accuracy)).collect();
                last = last.max(log.split_records(round, split).map(|r| r.epoch).max().unwrap_or(0));
                if !points.is_empty() {
                    plot.series.push(Series { label: format!("{name} {class}"), class: class.into(), points });
                }
            }
            offset += last as f64;
            if i + 1 < rounds.len() {
                plot.boundaries.push(offset + 0.5);
            }
        }
        Ok(plot)
    }

    pub fn render(&self) -> Result<String, CliError> {
        let x_max = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .fold(f64::NAN, f64::max);
        if !x_max.is_finite() {
            return Err(CliError::Invalid("nothing to plot".into()));
        }
        let x_max = x_max.max(1.0);
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x / x_max) * pw;
        let sy = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * ph;

        let mut s = String::new();
        let w = &mut s;
        writeln!(w, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        )
        .unwrap();
        writeln!(w, "<title>{}</title>", escape(&self.title)).unwrap();
        writeln!(w, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##).unwrap();
        writeln!(w, r#"<g class="axes" stroke="black" stroke-width="1" font-family="sans-serif" font-size="11">"#).unwrap();
        writeln!(w, r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, sy(0.0), sx(x_max), sy(0.0)).unwrap();
        writeln!(w, r#"<line x1="{LEFT}" y1="{:.2}" x2="{LEFT}" y2="{:.2}"/>"#, sy(0.0), sy(1.0)).unwrap();
        for q in 0..=4 {
            let y = q as f64 / 4.0;
            writeln!(w, r#"<line x1="{:.2}" y1="{:.2}" x2="{LEFT}" y2="{:.2}"/>"#, LEFT - 4.0, sy(y), sy(y)).unwrap();
            writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{y:.2}</text>"#, LEFT - 7.0, sy(y) + 4.0)
                .unwrap();
        }
        for tick in x_ticks(x_max) {
            let x = tick as f64;
            writeln!(w, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, sx(x), sy(0.0), sx(x), sy(0.0) + 4.0).unwrap();
            writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" stroke="none">{tick}</text>"#, sx(x), sy(0.0) + 16.0)
                .unwrap();
        }
        writeln!(
            w,
            r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle" stroke="none" font-size="13">epoch</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text class="axis-label" x="16" y="{0:.2}" text-anchor="middle" stroke="none" font-size="13" transform="rotate(-90 16 {0:.2})">accuracy</text>"#,
            TOP + ph / 2.0
        )
        .unwrap();
        writeln!(w, "</g>").unwrap();
        for &b in &self.boundaries {
            writeln!(
                w,
                r##"<line class="round-boundary" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#555555" stroke-dasharray="2,3"/>"##,
                sx(b),
                sy(0.0),
                sy(1.0)
            )
            .unwrap();
        }
        let colors = series_colors(&self.series);
        for (series, color) in self.series.iter().zip(&colors) {
            let points: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let dash = if series.class == "val" { r#" stroke-dasharray="5,3""# } else { "" };
            writeln!(
                w,
                r#"<polyline class="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                escape(&series.class),
                points.join(" ")
            )
            .unwrap();
        }
        writeln!(w, r#"<g class="legend" font-family="sans-serif" font-size="11">"#).unwrap();
        for (i, (series, color)) in self.series.iter().zip(&colors).enumerate() {
            let y = TOP + 8.0 + 16.0 * i as f64;
            let x = WIDTH - RIGHT + 12.0;
            let dash = if series.class == "val" { r#" stroke-dasharray="5,3""# } else { "" };
            writeln!(w, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#, x + 18.0)
                .unwrap();
            writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 24.0, y + 4.0, escape(&series.label)).unwrap();
        }
        writeln!(w, "</g>").unwrap();
        writeln!(w, "</svg>").unwrap();
        Ok(s)
    }
}

// Train and validation curves of the same run share a color.
fn series_colors(series: &[Series]) -> Vec<&'static str> {
    let mut out = Vec::with_capacity(series.len());
    let mut run = 0usize;
    for (i, s) in series.iter().enumerate() {
        if i > 0 && !(s.class == "val" && series[i - 1].class == "train") {
            run += 1;
        }
        out.push(PALETTE[run % PALETTE.len()]);
    }
    out
}

fn x_ticks(x_max: f64) -> Vec<u64> {
    let raw = x_max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag).max(1.0) as u64;
    (0..=(x_max as u64) / step).map(|i| i * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(log: &MetricsLog) -> Result<String, CliError> {
    SvgPlot::from_log(log)?.render()
}

pub fn emit_svg(log: &MetricsLog, path: impl AsRef<Path>) -> Result<(), CliError> {
    let text = render_svg(log)?;
    fs::write(path.as_ref(), text).map_err(|e| CliError::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::EpochRecord;

    fn log(rounds: u32, epochs: usize) -> MetricsLog {
        let mut log = MetricsLog::default();
        for round in 1..=rounds {
            for epoch in 1..=epochs {
                let accuracy = epoch as f64 / epochs as f64;
                log.push(EpochRecord { round, epoch, split: Split::Train, loss: 1.0, accuracy, lr: 0.1 }).unwrap();
            }
        }
        log
    }

    fn polylines(svg: &str) -> Vec<&str> {
        svg.lines().filter(|l| l.starts_with("<polyline")).collect()
    }

    #[test]
    fn ten_epochs_give_one_train_polyline_of_ten_points() {
        let svg = render_svg(&log(1, 10)).unwrap();
        let lines = polylines(&svg);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].contains(r#"class="train""#));
        let points = lines[0].split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(points.split(' ').count(), 10);
        assert!(svg.contains(">epoch</text>") && svg.contains(">accuracy</text>"));
    }

    #[test]
    fn four_rounds_give_three_boundaries() {
        let svg = render_svg(&log(4, 5)).unwrap();
        assert_eq!(svg.matches(r#"class="round-boundary""#).count(), 3);
        assert_eq!(polylines(&svg).len(), 4);
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        assert_eq!(render_svg(&log(2, 3)).unwrap(), render_svg(&log(2, 3)).unwrap());
        assert!(render_svg(&MetricsLog::default()).is_err());
    }

    #[test]
    fn ticks_cover_the_axis() {
        assert_eq!(x_ticks(10.0), vec![0, 2, 4, 6, 8, 10]);
        assert_eq!(x_ticks(3.0), vec![0, 1, 2, 3]);
        assert_eq!(x_ticks(200.0), vec![0, 50, 100, 150, 200]);
    }
}
