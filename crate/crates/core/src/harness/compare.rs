use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::netsim::Micros;

use super::metrics::{percentile, summary_csv, Summary};
use super::{run_experiment, trace_fingerprint, ExperimentConfig, MetricsReport};

pub const BOXPLOT_HEADER: &str = "label,strategy,layout,n,min_us,q1_us,median_us,q3_us,max_us";

/// Five-number summary of one experiment's pooled E2E latencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub label: String,
    pub strategy: String,
    pub layout: String,
    pub n: usize,
    pub min_us: Micros,
    pub q1_us: Micros,
    pub median_us: Micros,
    pub q3_us: Micros,
    pub max_us: Micros,
}

impl BoxStats {
    pub fn from_report(report: &MetricsReport) -> Self {
        let mut v: Vec<Micros> = report.records.iter().map(|r| r.e2e_us).collect();
        v.sort_unstable();
        BoxStats {
            label: report.config.name.clone(),
            strategy: report.config.strategy.as_str().to_string(),
            layout: report.config.layout_label(),
            n: v.len(),
            min_us: v.first().copied().unwrap_or(0),
            q1_us: percentile(&v, 25.0),
            median_us: percentile(&v, 50.0),
            q3_us: percentile(&v, 75.0),
            max_us: v.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug)]
pub struct Comparison {
    pub reports: Vec<MetricsReport>,
    pub boxes: Vec<BoxStats>,
}

impl Comparison {
    /// Pooled summary row of every experiment, in input order.
    pub fn table_csv(&self) -> String {
        let rows: Vec<Summary> = self.reports.iter().map(|r| r.pooled.clone()).collect();
        summary_csv(&rows)
    }

    pub fn boxplot_csv(&self) -> String {
        let mut out = format!("{BOXPLOT_HEADER}\n");
        for b in &self.boxes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                b.label, b.strategy, b.layout, b.n, b.min_us, b.q1_us, b.median_us, b.q3_us, b.max_us
            )
            .unwrap();
        }
        out
    }

    pub fn boxplot_svg(&self) -> String {
        render_svg(&self.boxes)
    }

    /// Writes `comparison.csv`, `boxplot.csv`, `boxplot.svg` and one
    /// subdirectory of run outputs per experiment.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("comparison.csv", self.table_csv()),
            ("boxplot.csv", self.boxplot_csv()),
            ("boxplot.svg", self.boxplot_svg()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        for r in &self.reports {
            r.write_to(&dir.join(&r.config.name))?;
        }
        Ok(())
    }
}

/// Runs every config after checking that they replay the same traces.
pub fn compare(configs: &[ExperimentConfig]) -> Result<Comparison> {
    let Some(first) = configs.first() else {
        return Err(Error::BadConfig("compare needs at least one config".into()));
    };
    let mut names: Vec<&str> = configs.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadConfig("compared configs need distinct names".into()));
    }
    let reference = trace_fingerprint(first)?;
    for c in &configs[1..] {
        let fp = trace_fingerprint(c)?;
        if fp != reference {
            return Err(Error::TraceMismatch(format!(
                "{} replays trace {fp:016x}, {} replays {reference:016x}",
                c.name, first.name
            )));
        }
    }
    let reports = configs.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    let boxes = reports.iter().map(BoxStats::from_report).collect();
    Ok(Comparison { reports, boxes })
}

/// Box-and-whisker chart, one box per experiment; whiskers span min to max.
pub fn render_svg(boxes: &[BoxStats]) -> String {
    const W_BOX: f64 = 90.0;
    const LEFT: f64 = 70.0;
    const TOP: f64 = 30.0;
    const PLOT_H: f64 = 300.0;
    let width = LEFT + W_BOX * boxes.len().max(1) as f64 + 20.0;
    let height = TOP + PLOT_H + 60.0;
    let max_ms = boxes.iter().map(|b| b.max_us).max().unwrap_or(0) as f64 / 1000.0;
    let top_ms = nice_ceiling(max_ms.max(1.0));
    let y = |us: Micros| TOP + PLOT_H * (1.0 - (us as f64 / 1000.0) / top_ms);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="16" text-anchor="middle" font-size="13">E2E latency (virtual ms)</text>"#,
        width / 2.0
    )
    .unwrap();
    for i in 0..=4 {
        let v = top_ms * i as f64 / 4.0;
        let py = TOP + PLOT_H * (1.0 - i as f64 / 4.0);
        writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.0}</text>"##,
            width - 20.0,
            LEFT - 6.0,
            py + 4.0
        )
        .unwrap();
    }
    for (i, b) in boxes.iter().enumerate() {
        let cx = LEFT + W_BOX * (i as f64 + 0.5);
        let half = W_BOX * 0.3;
        let color = if b.strategy == "AFFINITY" { "#4c78a8" } else { "#e45756" };
        writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
            y(b.max_us),
            y(b.min_us)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.6" stroke="black"/>"#,
            cx - half,
            y(b.q3_us),
            2.0 * half,
            (y(b.q1_us) - y(b.q3_us)).max(0.5)
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{:.1}" y1="{m:.1}" x2="{:.1}" y2="{m:.1}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            m = y(b.median_us)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + PLOT_H + 18.0,
            xml_escape(&b.layout),
            TOP + PLOT_H + 32.0,
            xml_escape(&b.strategy)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn nice_ceiling(v: f64) -> f64 {
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&c| c >= v)
        .unwrap_or(10.0 * mag)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
