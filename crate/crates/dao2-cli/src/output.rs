//! Table and JSON rendering for command reports.

use crate::commands::{BenchReport, DepthReport};

fn hline(widths: &[usize]) -> String {
    let mut s = String::from("+");
    for w in widths {
        s.push_str(&"-".repeat(w + 2));
        s.push('+');
    }
    s
}

fn row(cells: &[String], widths: &[usize]) -> String {
    let mut s = String::from("|");
    for (cell, w) in cells.iter().zip(widths) {
        s.push_str(&format!(" {cell:>w$} |", w = w));
    }
    s
}

/// Fixed-width table of per-`n` timings and communication totals.
pub fn bench_table(report: &BenchReport) -> String {
    let headers = [
        "n",
        "dkd ms",
        "dsag-send ms",
        "dsag-recv ms",
        "sign ms",
        "dkd B",
        "send B",
        "sig B",
        "recv B",
        "total B",
    ];
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                format!("{:.3}", r.dkd_ms),
                format!("{:.3}", r.dsag_sender_ms),
                format!("{:.3}", r.dsag_receiver_ms),
                format!("{:.3}", r.sign_ms),
                r.comm.dkd_bytes.to_string(),
                r.comm.dsag_sender_bytes.to_string(),
                r.comm.sig_bytes.to_string(),
                r.comm.dsag_receiver_bytes.to_string(),
                r.comm.total.to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (i, cell) in r.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    out.push_str(&hline(&widths));
    out.push('\n');
    out.push_str(&row(
        &headers.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        &widths,
    ));
    out.push('\n');
    out.push_str(&hline(&widths));
    out.push('\n');
    for r in &rows {
        out.push_str(&row(r, &widths));
        out.push('\n');
    }
    out.push_str(&hline(&widths));
    out.push('\n');
    out.push_str(&format!(
        "dsag linearity: sender R^2 = {:.4}, receiver R^2 = {:.4}; sign max/min = {:.2}\n",
        report.dsag_sender_r2, report.dsag_receiver_r2, report.sign_ratio
    ));
    out.push_str(&format!(
        "(t = {}, {} repetitions, medians reported, seed {})\n",
        report.t, report.repetitions, report.seed
    ));
    out
}

/// Per-depth derivation cost table.
pub fn depth_table(report: &DepthReport) -> String {
    let headers = ["depth", "per-step ms"];
    let rows: Vec<Vec<String>> = report
        .checkpoints
        .iter()
        .map(|c| vec![c.depth.to_string(), format!("{:.3}", c.per_step_ms)])
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (i, cell) in r.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    out.push_str(&hline(&widths));
    out.push('\n');
    out.push_str(&row(
        &headers.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        &widths,
    ));
    out.push('\n');
    out.push_str(&hline(&widths));
    out.push('\n');
    for r in &rows {
        out.push_str(&row(r, &widths));
        out.push('\n');
    }
    out.push_str(&hline(&widths));
    out.push('\n');
    out.push_str(&format!(
        "flatness max/min = {:.3}; states identical: {}; key moved: {} (n = {}, t = {})\n",
        report.flatness_ratio,
        report.states_identical,
        report.aggregate_key_moved,
        report.n,
        report.t
    ));
    out
}
