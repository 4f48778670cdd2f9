//! Diagnostic figures as static SVG 1.1 documents plus numeric CSV exports.
//!
//! All documents are built deterministically: identical inputs produce
//! byte-identical output (no timestamps, fixed 800x600 canvas, fixed
//! palette, nice-number tick rule).

use thiserror::Error;

use crate::stats::{ols_fit, pearson_r, ErrorHistogram, RegressionSummary};
use crate::trainer::EpochTrace;

pub const CANVAS_WIDTH: u32 = 800;
pub const CANVAS_HEIGHT: u32 = 600;

// Palette: train=blue, validation=green, test=red, zero-error=orange.
const TRAIN_COLOR: &str = "blue";
const VAL_COLOR: &str = "green";
const TEST_COLOR: &str = "red";
const ZERO_COLOR: &str = "orange";
const POINT_COLOR: &str = "steelblue";
const BAR_COLOR: &str = "steelblue";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("cannot log-scale a nonpositive MSE ({0})")]
    NonPositiveMse(f64),
}

/// One drawing primitive, in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Comment(String),
    Line {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        stroke: String,
        dashed: bool,
    },
    Polyline {
        points: Vec<(f64, f64)>,
        stroke: String,
    },
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
        fill: String,
    },
    /// Histogram bar; `count` is carried as a `data-count` attribute so the
    /// emitted file can be re-summed by a reader.
    Bar {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        fill: String,
        count: usize,
    },
    Text {
        x: f64,
        y: f64,
        content: String,
        anchor: &'static str,
    },
}

/// An ordered list of drawing primitives on a fixed canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotDoc {
    pub width: u32,
    pub height: u32,
    pub elements: Vec<Element>,
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl PlotDoc {
    fn new() -> Self {
        Self {
            width: CANVAS_WIDTH,
            height: CANVAS_HEIGHT,
            elements: vec![Element::Comment(
                "palette: train=blue val=green test=red zero=orange points/bars=steelblue"
                    .to_string(),
            )],
        }
    }

    /// Render to an SVG 1.1 document.
    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<svg version=\"1.1\" xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
            self.width, self.height, self.width, self.height
        ));
        out.push_str("<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        for e in &self.elements {
            match e {
                Element::Comment(text) => {
                    out.push_str(&format!("<!-- {} -->\n", escape(text)));
                }
                Element::Line { x1, y1, x2, y2, stroke, dashed } => {
                    let dash = if *dashed { " stroke-dasharray=\"6 4\"" } else { "" };
                    out.push_str(&format!(
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"{}/>\n",
                        px(*x1), px(*y1), px(*x2), px(*y2), stroke, dash
                    ));
                }
                Element::Polyline { points, stroke } => {
                    let pts: Vec<String> =
                        points.iter().map(|(x, y)| format!("{},{}", px(*x), px(*y))).collect();
                    out.push_str(&format!(
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n",
                        pts.join(" "),
                        stroke
                    ));
                }
                Element::Circle { cx, cy, r, fill } => {
                    out.push_str(&format!(
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n",
                        px(*cx), px(*cy), px(*r), fill
                    ));
                }
                Element::Bar { x, y, w, h, fill, count } => {
                    out.push_str(&format!(
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"black\" data-count=\"{}\"/>\n",
                        px(*x), px(*y), px(*w), px(*h), fill, count
                    ));
                }
                Element::Text { x, y, content, anchor } => {
                    out.push_str(&format!(
                        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"{}\">{}</text>\n",
                        px(*x), px(*y), anchor, escape(content)
                    ));
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Maps data coordinates onto the canvas plot area.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

impl Frame {
    fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        // Degenerate spans get a unit pad so the affine map stays finite.
        let (x_lo, x_hi) = if x_lo < x_hi { (x_lo, x_hi) } else { (x_lo - 1.0, x_hi + 1.0) };
        let (y_lo, y_hi) = if y_lo < y_hi { (y_lo, y_hi) } else { (y_lo - 1.0, y_hi + 1.0) };
        Self { x_lo, x_hi, y_lo, y_hi }
    }

    fn px(&self, x: f64) -> f64 {
        let w = f64::from(CANVAS_WIDTH) - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = f64::from(CANVAS_HEIGHT) - MARGIN_TOP - MARGIN_BOTTOM;
        f64::from(CANVAS_HEIGHT) - MARGIN_BOTTOM - (y - self.y_lo) / (self.y_hi - self.y_lo) * h
    }
}

/// Deterministic 1-2-5 nice-number ticks aiming for 5-8 marks.
fn nice_ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 6.0;
    let mag = raw.log10().floor();
    let base = 10f64.powf(mag);
    let norm = raw / base;
    let mult = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    let step = mult * base;
    let decimals = if step >= 1.0 { 0 } else { (-mag) as usize };
    let mut ticks = Vec::new();
    let mut k = (lo / step).ceil();
    while k * step <= hi + step * 1e-9 {
        ticks.push(k * step);
        k += 1.0;
    }
    (ticks, decimals)
}

fn axes(doc: &mut PlotDoc, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    let left = MARGIN_LEFT;
    let right = f64::from(CANVAS_WIDTH) - MARGIN_RIGHT;
    let top = MARGIN_TOP;
    let bottom = f64::from(CANVAS_HEIGHT) - MARGIN_BOTTOM;
    let black = "black".to_string();
    doc.elements.push(Element::Line {
        x1: left, y1: bottom, x2: right, y2: bottom, stroke: black.clone(), dashed: false,
    });
    doc.elements.push(Element::Line {
        x1: left, y1: top, x2: left, y2: bottom, stroke: black.clone(), dashed: false,
    });

    let (x_ticks, xd) = nice_ticks(frame.x_lo, frame.x_hi);
    for t in x_ticks {
        let x = frame.px(t);
        doc.elements.push(Element::Line {
            x1: x, y1: bottom, x2: x, y2: bottom + 5.0, stroke: black.clone(), dashed: false,
        });
        doc.elements.push(Element::Text {
            x,
            y: bottom + 20.0,
            content: format!("{t:.xd$}"),
            anchor: "middle",
        });
    }
    let (y_ticks, yd) = nice_ticks(frame.y_lo, frame.y_hi);
    for t in y_ticks {
        let y = frame.py(t);
        doc.elements.push(Element::Line {
            x1: left - 5.0, y1: y, x2: left, y2: y, stroke: black.clone(), dashed: false,
        });
        doc.elements.push(Element::Text {
            x: left - 8.0,
            y: y + 4.0,
            content: format!("{t:.yd$}"),
            anchor: "end",
        });
    }

    doc.elements.push(Element::Text {
        x: (left + right) / 2.0,
        y: top - 20.0,
        content: title.to_string(),
        anchor: "middle",
    });
    doc.elements.push(Element::Text {
        x: (left + right) / 2.0,
        y: bottom + 40.0,
        content: x_label.to_string(),
        anchor: "middle",
    });
    doc.elements.push(Element::Text {
        x: left - 8.0,
        y: top - 8.0,
        content: y_label.to_string(),
        anchor: "end",
    });
}

fn min_max(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Scatter of (target, output) with the dashed identity line, the solid OLS
/// fit of outputs on targets, and an `R = ...` annotation.
pub fn regression_plot(
    targets: &[f64],
    outputs: &[f64],
    label: &str,
) -> Result<PlotDoc, ReportError> {
    if targets.len() != outputs.len() {
        return Err(ReportError::LengthMismatch(targets.len(), outputs.len()));
    }
    if targets.is_empty() {
        return Err(ReportError::Empty);
    }
    let (lo, hi) = min_max(targets.iter().chain(outputs).copied());
    let frame = Frame::new(lo, hi, lo, hi);
    let mut doc = PlotDoc::new();
    axes(
        &mut doc,
        &frame,
        &format!("Regression ({label})"),
        "Target (days)",
        "Output (days)",
    );

    doc.elements.push(Element::Line {
        x1: frame.px(frame.x_lo),
        y1: frame.py(frame.x_lo),
        x2: frame.px(frame.x_hi),
        y2: frame.py(frame.x_hi),
        stroke: "gray".to_string(),
        dashed: true,
    });
    if let Ok(fit) = ols_fit(targets, outputs) {
        doc.elements.push(Element::Line {
            x1: frame.px(frame.x_lo),
            y1: frame.py(fit.intercept + fit.slope * frame.x_lo),
            x2: frame.px(frame.x_hi),
            y2: frame.py(fit.intercept + fit.slope * frame.x_hi),
            stroke: "black".to_string(),
            dashed: false,
        });
    }
    for (&t, &o) in targets.iter().zip(outputs) {
        doc.elements.push(Element::Circle {
            cx: frame.px(t),
            cy: frame.py(o),
            r: 3.0,
            fill: POINT_COLOR.to_string(),
        });
    }
    let annotation = match pearson_r(targets, outputs) {
        Ok(r) => format!("R = {r:.2}"),
        Err(_) => "R = n/a".to_string(),
    };
    doc.elements.push(Element::Text {
        x: MARGIN_LEFT + 10.0,
        y: MARGIN_TOP + 16.0,
        content: annotation,
        anchor: "start",
    });
    Ok(doc)
}

/// Train/validation/test MSE per epoch on a log10 vertical axis, with a
/// marker at the best-validation epoch.
pub fn performance_plot(traces: &[EpochTrace], best_epoch: usize) -> Result<PlotDoc, ReportError> {
    if traces.is_empty() {
        return Err(ReportError::Empty);
    }
    for t in traces {
        for v in [t.mse_train, t.mse_val, t.mse_test] {
            if !(v > 0.0) {
                return Err(ReportError::NonPositiveMse(v));
            }
        }
    }
    let logs: Vec<[f64; 3]> = traces
        .iter()
        .map(|t| [t.mse_train.log10(), t.mse_val.log10(), t.mse_test.log10()])
        .collect();
    let (y_lo, y_hi) = min_max(logs.iter().flatten().copied());
    let last_epoch = traces.last().expect("nonempty").epoch as f64;
    let frame = Frame::new(0.0, last_epoch.max(1.0), y_lo, y_hi);

    let mut doc = PlotDoc::new();
    axes(
        &mut doc,
        &frame,
        "Training performance",
        "Epoch",
        "log10 MSE",
    );

    for (series, color, name) in [
        (0usize, TRAIN_COLOR, "train"),
        (1, VAL_COLOR, "validation"),
        (2, TEST_COLOR, "test"),
    ] {
        let points: Vec<(f64, f64)> = traces
            .iter()
            .zip(&logs)
            .map(|(t, l)| (frame.px(t.epoch as f64), frame.py(l[series])))
            .collect();
        if points.len() == 1 {
            doc.elements.push(Element::Circle {
                cx: points[0].0,
                cy: points[0].1,
                r: 3.0,
                fill: color.to_string(),
            });
        } else {
            doc.elements.push(Element::Polyline {
                points,
                stroke: color.to_string(),
            });
        }
        doc.elements.push(Element::Text {
            x: f64::from(CANVAS_WIDTH) - MARGIN_RIGHT - 10.0,
            y: MARGIN_TOP + 16.0 * (series as f64 + 1.0),
            content: name.to_string(),
            anchor: "end",
        });
    }

    let marker_x = frame.px(best_epoch as f64);
    doc.elements.push(Element::Line {
        x1: marker_x,
        y1: MARGIN_TOP,
        x2: marker_x,
        y2: f64::from(CANVAS_HEIGHT) - MARGIN_BOTTOM,
        stroke: "gray".to_string(),
        dashed: true,
    });
    doc.elements.push(Element::Text {
        x: marker_x,
        y: f64::from(CANVAS_HEIGHT) - MARGIN_BOTTOM + 40.0,
        content: format!("best validation at epoch {best_epoch}"),
        anchor: "middle",
    });
    Ok(doc)
}

/// One bar per bin plus the zero-error reference line.
pub fn histogram_plot(hist: &ErrorHistogram) -> Result<PlotDoc, ReportError> {
    if hist.counts.is_empty() {
        return Err(ReportError::Empty);
    }
    let edge_lo = hist.bin_edges[0];
    let edge_hi = *hist.bin_edges.last().expect("edges nonempty");
    let max_count = *hist.counts.iter().max().expect("counts nonempty") as f64;
    let frame = Frame::new(
        edge_lo.min(hist.zero_mark),
        edge_hi.max(hist.zero_mark),
        0.0,
        max_count.max(1.0),
    );
    let mut doc = PlotDoc::new();
    axes(&mut doc, &frame, "Error histogram", "Error (days)", "Count");

    let base_y = frame.py(0.0);
    for (i, &count) in hist.counts.iter().enumerate() {
        let mut x0 = frame.px(hist.bin_edges[i]);
        let mut x1 = frame.px(hist.bin_edges[i + 1]);
        if x1 - x0 < 2.0 {
            // Zero-width (degenerate) bin: draw a nominal sliver.
            let mid = (x0 + x1) / 2.0;
            x0 = mid - 4.0;
            x1 = mid + 4.0;
        }
        let top = frame.py(count as f64);
        doc.elements.push(Element::Bar {
            x: x0,
            y: top,
            w: x1 - x0,
            h: base_y - top,
            fill: BAR_COLOR.to_string(),
            count,
        });
    }

    let zero_x = frame.px(hist.zero_mark);
    doc.elements.push(Element::Line {
        x1: zero_x,
        y1: MARGIN_TOP,
        x2: zero_x,
        y2: f64::from(CANVAS_HEIGHT) - MARGIN_BOTTOM,
        stroke: ZERO_COLOR.to_string(),
        dashed: false,
    });
    doc.elements.push(Element::Text {
        x: zero_x,
        y: MARGIN_TOP - 8.0,
        content: "zero error".to_string(),
        anchor: "middle",
    });
    Ok(doc)
}

/// Regression summary as a two-line CSV with full round-trip precision.
pub fn export_summary(summary: &RegressionSummary) -> String {
    format!(
        "r,r2,adj_r2,se_estimate,n\n{},{},{},{},{}\n",
        summary.r, summary.r2, summary.adj_r2, summary.se_estimate, summary.n
    )
}

/// Sum the `data-count` attributes out of an emitted histogram SVG.
/// Test/verification helper for the parse-back oracle.
pub fn sum_counts_in_svg(svg: &str) -> usize {
    svg.split("data-count=\"")
        .skip(1)
        .filter_map(|rest| rest.split('"').next()?.parse::<usize>().ok())
        .sum()
}
