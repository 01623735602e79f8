//! Structured-text serialization of experiment results. All numbers are
//! printed with fixed precision so identical runs produce identical bytes.

use std::io::Write;

use crate::experiment::{NetworkReport, SweepSummary, HISTOGRAM_BINS};
use crate::pgp::{ClassOutcome, ScoreReport};

pub const REPORT_SCHEMA: &str = "schema: polychron-report-v1";
pub const SUMMARY_SCHEMA: &str = "schema: polychron-summary-v1";
pub const HISTOGRAM_SCHEMA: &str = "schema: polychron-histogram-v1";

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn write_class_line<W: Write>(w: &mut W, prefix: &str, o: &ClassOutcome) -> std::io::Result<()> {
    match o.modal_cluster {
        Some(m) => writeln!(
            w,
            "{prefix}class {}: modal={m} count={} total={}",
            o.class, o.modal_count, o.total
        ),
        None => writeln!(w, "{prefix}class {}: modal=none count=0 total={}", o.class, o.total),
    }
}

fn write_score<W: Write>(w: &mut W, phase: &str, s: &ScoreReport) -> std::io::Result<()> {
    writeln!(w, "[{phase} theta={:.2}]", s.theta)?;
    writeln!(w, "num_clusters: {}", s.num_clusters)?;
    writeln!(w, "trained_accuracy: {:.6}", s.trained_accuracy)?;
    writeln!(w, "unseen_accuracy: {:.6}", s.unseen_accuracy)?;
    writeln!(w, "trained_separable: {}", yes_no(s.trained_separable))?;
    writeln!(w, "unseen_separable: {}", yes_no(s.unseen_separable))?;
    for o in &s.trained {
        write_class_line(w, "", o)?;
    }
    for o in &s.unseen {
        write_class_line(w, "unseen ", o)?;
    }
    Ok(())
}

/// One network's report. `delays_file` names the final delay snapshot
/// written next to the report, if any.
pub fn write_network_report<W: Write>(
    mut w: W,
    report: &NetworkReport,
    delays_file: Option<&str>,
) -> std::io::Result<()> {
    writeln!(w, "# polychron network report")?;
    writeln!(w, "seed: {}", report.seed)?;
    if let Some(f) = delays_file {
        writeln!(w, "delays_file: {f}")?;
    }
    for t in &report.per_threshold {
        writeln!(w)?;
        write_score(&mut w, "baseline", &t.baseline)?;
        write_score(&mut w, "trained", &t.trained)?;
    }
    writeln!(w, "{REPORT_SCHEMA}")
}

pub fn write_sweep_summary<W: Write>(mut w: W, s: &SweepSummary) -> std::io::Result<()> {
    writeln!(w, "# polychron sweep summary")?;
    writeln!(w, "master_seed: {}", s.master_seed)?;
    writeln!(w, "networks: {}", s.n_networks)?;
    for t in &s.per_threshold {
        for (phase, p) in [("baseline", &t.baseline), ("trained", &t.trained)] {
            writeln!(w)?;
            writeln!(w, "[theta={:.2} {phase}]", t.theta)?;
            writeln!(w, "mean_trained_accuracy: {:.6}", p.mean_trained_accuracy)?;
            writeln!(w, "mean_unseen_accuracy: {:.6}", p.mean_unseen_accuracy)?;
            writeln!(w, "nonseparable_fraction: {:.6}", p.nonseparable_fraction)?;
            writeln!(
                w,
                "unseen_nonseparable_fraction: {:.6}",
                p.unseen_nonseparable_fraction
            )?;
        }
        writeln!(w)?;
        writeln!(w, "[theta={:.2} improvement]", t.theta)?;
        writeln!(w, "separable_both: {}", t.separable_both)?;
        writeln!(w, "improved_fraction: {:.6}", t.improved_fraction)?;
        writeln!(w, "mean_improvement: {:.6}", t.mean_improvement)?;
    }
    writeln!(w, "{SUMMARY_SCHEMA}")
}

/// Histogram as `bin_low bin_high count` lines.
pub fn write_histogram<W: Write>(mut w: W, title: &str, bins: &[usize]) -> std::io::Result<()> {
    writeln!(w, "# accuracy histogram: {title}")?;
    for (i, count) in bins.iter().enumerate() {
        let lo = i as f64 / HISTOGRAM_BINS as f64;
        let hi = (i + 1) as f64 / HISTOGRAM_BINS as f64;
        writeln!(w, "{lo:.6} {hi:.6} {count}")?;
    }
    writeln!(w, "{HISTOGRAM_SCHEMA}")
}
