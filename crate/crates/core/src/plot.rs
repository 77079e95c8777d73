//! Small SVG charts for the report, calibration and backtest outputs.

use std::fmt::Write as _;

use crate::analysis::{BacktestReport, CoverageReport, PredictiveTable};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 110.0;

struct Canvas {
    body: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Canvas {
    fn new(title: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        body.push('\n');
        let _ = writeln!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let mut c = Self {
            body,
            x_range,
            y_range,
        };
        c.axes();
        c
    }

    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        HEIGHT - BOTTOM - (y - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&mut self) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            self.body,
            r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
        );
        let (a, b) = self.y_range;
        for k in 0..=4 {
            let v = a + (b - a) * k as f64 / 4.0;
            let y = self.py(v);
            let _ = writeln!(
                self.body,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                tick(v)
            );
            let _ = writeln!(
                self.body,
                r##"<line x1="{LEFT}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>"##
            );
        }
    }

    fn x_label(&mut self, x: f64, text: &str, rotate: bool) {
        let px = self.px(x);
        let y = HEIGHT - BOTTOM + 14.0;
        if rotate {
            let _ = writeln!(
                self.body,
                r#"<text x="{px}" y="{y}" text-anchor="end" transform="rotate(-60 {px} {y})">{}</text>"#,
                escape(text)
            );
        } else {
            let _ = writeln!(self.body, r#"<text x="{px}" y="{y}" text-anchor="middle">{}</text>"#, escape(text));
        }
    }

    fn axis_titles(&mut self, x: &str, y: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 8.0,
            escape(x)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            HEIGHT / 2.0,
            escape(y)
        );
    }

    fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (top, bottom) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            b - a,
            bottom - top
        );
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="{width}"/>"#,
            self.px(x0),
            self.py(y0),
            self.px(x1),
            self.py(y1)
        );
    }

    fn dot(&mut self, x: f64, y: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{fill}"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (label, colour)) in entries.iter().enumerate() {
            let x = WIDTH - RIGHT - 150.0;
            let y = TOP + 4.0 + 16.0 * k as f64;
            let _ = writeln!(self.body, r#"<rect x="{x}" y="{y}" width="10" height="10" fill="{colour}"/>"#);
            let _ = writeln!(self.body, r#"<text x="{}" y="{}">{}</text>"#, x + 14.0, y + 9.0, escape(label));
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Predictive distribution of one entity as a bar chart.
pub fn predictive_bars(table: &PredictiveTable, entity: usize) -> String {
    let h = &table.histograms[entity];
    let n = table.n.max(1) as f64;
    let top = h.iter().map(|&c| f64::from(c) / n).fold(0.0, f64::max).max(0.05);
    let title = format!("Predicted count: {}", table.entity_names[entity]);
    let mut c = Canvas::new(&title, (-0.5, h.len() as f64 - 0.5), (0.0, top));
    let step = (h.len() / 20).max(1);
    for (x, &count) in h.iter().enumerate() {
        let xf = x as f64;
        c.rect(xf - 0.4, xf + 0.4, 0.0, f64::from(count) / n, "#4c72b0");
        if x % step == 0 {
            c.x_label(xf, &x.to_string(), false);
        }
    }
    c.axis_titles("count", "posterior probability");
    c.finish()
}

/// Zero probabilities for both horizons with `band` error bars, entities
/// ordered by the next-period value.
pub fn zero_probability_chart(names: &[String], next: &[f64], following: &[f64], band: f64) -> String {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| next[b].total_cmp(&next[a]).then(a.cmp(&b)));
    let mut c = Canvas::new(
        "Probability of a zero count",
        (-0.5, names.len() as f64 - 0.5),
        (0.0, 1.0),
    );
    for (pos, &i) in order.iter().enumerate() {
        let x = pos as f64;
        for (dx, p, colour) in [(-0.15, next[i], "#c44e52"), (0.15, following[i], "#4c72b0")] {
            c.line(x + dx, (p - band).max(0.0), x + dx, (p + band).min(1.0), colour, 1.0);
            c.dot(x + dx, p, colour);
        }
        c.x_label(x, &names[i], true);
    }
    c.legend(&[("next period", "#c44e52"), ("period after", "#4c72b0")]);
    c.axis_titles("", "P(zero)");
    c.finish()
}

/// Actual against nominal coverage, with the diagonal for reference.
pub fn coverage_chart(hyper: &CoverageReport, predictive: &CoverageReport) -> String {
    let mut c = Canvas::new("Credible interval coverage", (0.4, 1.0), (0.4, 1.0));
    c.line(0.4, 0.4, 1.0, 1.0, "#888", 1.0);
    for (report, colour) in [(hyper, "#c44e52"), (predictive, "#4c72b0")] {
        for (&a, &v) in report.alphas.iter().zip(&report.coverage) {
            c.dot(a, v.max(0.4), colour);
        }
    }
    for a in &hyper.alphas {
        c.x_label(*a, &format!("{a}"), false);
    }
    c.legend(&[("hyperparameters", "#c44e52"), ("predictions", "#4c72b0")]);
    c.axis_titles("nominal coverage", "actual coverage");
    c.finish()
}

/// 50% and 80% predictive intervals per entity with the held-out value.
pub fn backtest_chart(report: &BacktestReport) -> String {
    let top = report
        .rows
        .iter()
        .map(|r| r.interval80.1.max(r.truth))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let mut c = Canvas::new(
        &format!("Backtest against {}", report.target_label),
        (-0.5, report.rows.len() as f64 - 0.5),
        (0.0, top * 1.05),
    );
    for (k, r) in report.rows.iter().enumerate() {
        let x = k as f64;
        c.rect(x - 0.12, x + 0.12, f64::from(r.interval80.0), f64::from(r.interval80.1), "#a6bddb");
        c.rect(x - 0.25, x + 0.25, f64::from(r.interval50.0), f64::from(r.interval50.1), "#3690c0");
        c.dot(x, f64::from(r.truth), if r.hit80 { "black" } else { "#c44e52" });
        c.x_label(x, &r.entity, true);
    }
    c.legend(&[("80% interval", "#a6bddb"), ("50% interval", "#3690c0"), ("held-out value", "black")]);
    c.axis_titles("", "count");
    c.finish()
}
