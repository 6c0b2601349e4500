//! Plain-text result tables.

use std::fmt::Write as _;

use geochart_core::metrics::{MetricsReport, Stat};

use crate::pipeline::Comparison;

const HEADER: &str = "Method        TW      CT      KS      RD      MDE [m]          95th pct. [m]";

fn positioning(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.3} ± {:.3}", s.mean, s.std),
        None => "-".into(),
    }
}

fn row(label: &str, r: &MetricsReport) -> String {
    format!(
        "{label:<12}  {:.3}   {:.3}   {:.3}   {:.3}   {:<15}  {}",
        r.tw.mean,
        r.ct.mean,
        r.ks.mean,
        r.rd.mean,
        positioning(r.mde),
        positioning(r.e95)
    )
}

/// One row per variant, means over seeds (± population std for positioning).
pub fn comparison_table(c: &Comparison) -> String {
    let mut s = String::new();
    let seeds = c.variants.first().map_or(0, |v| v.report.per_seed.len());
    writeln!(s, "{}: {} samples, {} in the test split, {} seed(s)", c.name, c.samples, c.test_samples, seeds).unwrap();
    if let Some(v) = c.variants.first() {
        writeln!(s, "J = {}, {} bins", v.report.neighbors, v.report.bins).unwrap();
    }
    writeln!(s, "{HEADER}").unwrap();
    for v in &c.variants {
        writeln!(s, "{}", row(v.variant.name(), &v.report)).unwrap();
    }
    s
}

pub fn metrics_table(label: &str, r: &MetricsReport) -> String {
    format!("J = {}, {} bins\n{HEADER}\n{}\n", r.neighbors, r.bins, row(label, r))
}
